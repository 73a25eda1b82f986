#include <gtest/gtest.h>

#include <filesystem>
#include <unistd.h>

#include "shapecon/pipeline.hpp"
#include "shapecon/stages.hpp"

using namespace shapecon;
namespace fs = std::filesystem;

namespace {

PipelineConfig small_config() {
  PipelineConfig c;
  c.scans_per_class = 4;
  c.perplexity = 3;
  c.tsne_iterations = 100;
  c.grid_resolution = 10;
  c.sweep_cut_points = 3;
  c.sweep_min_sizes = {1, 2};
  c.repetitions = 2;
  c.epochs = 20;
  return c;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag)
      : path_(fs::temp_directory_path() / ("shapecon-" + tag + "-" + std::to_string(::getpid()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) { return read_file(p.string()); }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIo;
}

}  // namespace

TEST(Config, DefaultsAreValidAndRoundTrip) {
  const PipelineConfig c;
  EXPECT_TRUE(invalid_keys(c).empty());
  const auto back = config_from_json(to_json(c));
  EXPECT_EQ(to_json(back).dump(), to_json(c).dump());
  EXPECT_EQ(config_hash(back), config_hash(c));
  EXPECT_EQ(config_hash(c).size(), 16u);
  EXPECT_EQ(to_json(c).at("t_star"), "auto");
}

TEST(Config, ExplicitTStarAndCutRule) {
  const auto c = config_from_json(Json{{"t_star", 0.25}, {"cut_rule", "drop-earlier"}});
  ASSERT_TRUE(c.t_star.has_value());
  EXPECT_EQ(*c.t_star, 0.25);
  EXPECT_EQ(c.cut_rule, CutRule::kDropEarlier);
  EXPECT_NE(config_hash(c), config_hash(PipelineConfig{}));
}

TEST(Config, UnknownAndOutOfRangeKeysAreNamed) {
  try {
    config_from_json(Json{{"bogus", 1}, {"sigma", -1.0}, {"split_ratio", 1.5}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kValidation);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("bogus"), std::string::npos);
    EXPECT_NE(msg.find("sigma"), std::string::npos);
    EXPECT_NE(msg.find("split_ratio"), std::string::npos);
  }
  EXPECT_EQ(code_of([] { config_from_json(Json{{"depth", "four"}}); }), ErrorCode::kValidation);
  EXPECT_EQ(code_of([] { config_from_json(Json{{"segmentation", "magic"}}); }), ErrorCode::kValidation);
  EXPECT_EQ(code_of([] { config_from_json(Json{{"classes", {"box"}}}); }), ErrorCode::kValidation);
}

TEST(Synth, InterleavedIdsAndLabels) {
  const auto scans = synthesize_dataset(small_config());
  ASSERT_EQ(scans.size(), 12u);
  EXPECT_EQ(scans[0].id, "0000");
  EXPECT_EQ(scans[11].id, "0011");
  EXPECT_EQ(*scans[0].object.category_label, "box");
  EXPECT_EQ(*scans[1].object.category_label, "can");
  EXPECT_EQ(*scans[2].object.category_label, "sphere");
}

TEST(Stages, MissingUpstreamArtifactIsNamed) {
  TempDir dir("missing");
  StageContext ctx(small_config(), dir.path());
  try {
    run_stage(ctx, "concepts");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStageDependency);
    EXPECT_NE(std::string(e.what()).find("filtration.json"), std::string::npos);
  }
  EXPECT_EQ(code_of([&] { run_stage(ctx, "dict-train"); }), ErrorCode::kStageDependency);
  EXPECT_EQ(code_of([&] { run_stage(ctx, "nope"); }), ErrorCode::kValidation);
}

TEST(Stages, FileRunIsDeterministicAndMatchesMemory) {
  const auto c = small_config();
  TempDir a("det-a"), b("det-b");
  {
    StageContext ctx(c, a.path());
    run_all(ctx, true);
  }
  {
    StageContext ctx(c, b.path());
    run_all(ctx, true);
  }
  for (const char* f : {"stimuli.csv", "barcode.csv", "concepts.json", "filtration.json",
                        "dictionary.json", "responses.csv", "embedding.csv", "grid.csv",
                        "sweep_purity.csv", "manifests/concepts.json"}) {
    ASSERT_TRUE(fs::exists(a.path() / f)) << f;
    EXPECT_EQ(slurp(a.path() / f), slurp(b.path() / f)) << f;
  }

  const auto mem = run_in_memory(c);
  const auto [ids, rows] = parse_matrix_csv(slurp(a.path() / "stimuli.csv"));
  EXPECT_EQ(ids, mem.ids);
  EXPECT_EQ(rows, mem.stimuli);

  const Json manifest = parse_json(slurp(a.path() / "manifests/concepts.json"));
  const Filtration f = filtration_from_json(parse_json(slurp(a.path() / "filtration.json")));
  EXPECT_EQ(manifest.at("extras").at("t_star").get<double>(), epsilon_max(f));
  EXPECT_EQ(manifest.at("extras").at("t_star_policy"), "auto-epsilon-max");
  EXPECT_EQ(manifest.at("config_hash"), config_hash(c));
  EXPECT_EQ(manifest.at("inputs"), (Json{"filtration.json", "labels.csv", "stimuli.csv"}));
  EXPECT_EQ(manifest.at("extras").at("concepts").get<std::size_t>(), mem.concepts.concepts.size());
}

TEST(Stages, SeedChangesOutput) {
  auto c = small_config();
  TempDir a("seed-a"), b("seed-b");
  {
    StageContext ctx(c, a.path());
    run_stage(ctx, "synth");
  }
  c.seed = 43;
  {
    StageContext ctx(c, b.path());
    run_stage(ctx, "synth");
  }
  EXPECT_NE(slurp(a.path() / "clouds/0000.xyz"), slurp(b.path() / "clouds/0000.xyz"));
}
