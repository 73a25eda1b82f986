// Command-line driver for the concept-learning pipeline.
//
//   shapecon run --out out --seed 7
//   shapecon concepts --out out --t-star 0.4
//
// Errors are reported on stderr as one JSON line {"error": code, "message": ...}.

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "shapecon/stages.hpp"

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> scans_per_class;
  std::optional<double> noise_sigma;
  std::optional<std::string> segmentation;
  std::optional<int> depth;
  std::optional<double> sigma;
  std::optional<int> max_steps;
  std::optional<std::string> t_star;
  std::optional<int> min_size;
  std::optional<std::string> cut_rule;
  std::optional<double> perplexity;
  std::optional<int> tsne_iterations;
  bool svg = false;
};

shapecon::Json overlay(const Overrides& o) {
  shapecon::Json j = shapecon::Json::object();
  if (o.seed) j["seed"] = *o.seed;
  if (o.scans_per_class) j["scans_per_class"] = *o.scans_per_class;
  if (o.noise_sigma) j["noise_sigma"] = *o.noise_sigma;
  if (o.segmentation) j["segmentation"] = *o.segmentation;
  if (o.depth) j["depth"] = *o.depth;
  if (o.sigma) j["sigma"] = *o.sigma;
  if (o.max_steps) j["max_steps"] = *o.max_steps;
  if (o.t_star) {
    if (*o.t_star == "auto") j["t_star"] = "auto";
    else j["t_star"] = shapecon::parse_number(*o.t_star);
  }
  if (o.min_size) j["min_size"] = *o.min_size;
  if (o.cut_rule) j["cut_rule"] = *o.cut_rule;
  if (o.perplexity) j["perplexity"] = *o.perplexity;
  if (o.tsne_iterations) j["tsne_iterations"] = *o.tsne_iterations;
  if (o.svg) j["svg"] = true;
  return j;
}

void report(const std::string& code, const std::string& message) {
  std::cerr << shapecon::Json{{"error", code}, {"message", message}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised shape-concept learning on segmented 2.5D point clouds"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir = "out";
  bool with_sweep = false;
  Overrides o;
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Artifact directory");
  app.add_option("--seed", o.seed, "Root seed");
  app.add_option("--scans-per-class", o.scans_per_class, "Synthetic scans per class");
  app.add_option("--noise", o.noise_sigma, "Synthetic point jitter (meters)");
  app.add_option("--segmentation", o.segmentation, "region-grow | ground-truth");
  app.add_option("--depth", o.depth, "Dictionary depth");
  app.add_option("--sigma", o.sigma, "Stimulus kernel bandwidth");
  app.add_option("--max-steps", o.max_steps, "Filtration step limit");
  app.add_option("--t-star", o.t_star, "Concept cut time, or 'auto' for epsilon_max");
  app.add_option("--min-size", o.min_size, "Minimum concept size");
  app.add_option("--cut-rule", o.cut_rule, "drop-later | drop-earlier");
  app.add_option("--perplexity", o.perplexity, "t-SNE perplexity");
  app.add_option("--tsne-iterations", o.tsne_iterations, "t-SNE gradient steps");
  app.add_flag("--svg", o.svg, "Also render SVG figures during export");

  std::string selected;
  const std::map<std::string, std::string> help{
      {"synth", "Generate labeled synthetic scans"},
      {"segment", "Normals, segmentation and constellation descriptors"},
      {"dict-train", "Train the visual-word dictionary"},
      {"ensemble-train", "Train one motif hierarchy per dictionary level"},
      {"stimuli", "Stimuli vector per object"},
      {"filtrate", "Topological space and filtration"},
      {"concepts", "Cut the filtration graph into concepts"},
      {"sweep", "Purity and error over cut times and minimum sizes"},
      {"classify", "Concept responses and cross-validated classifier"},
      {"embed", "2D t-SNE embedding of the responses"},
      {"export", "Barcode, filtration graph, curve and region grid"}};
  for (const auto& name : shapecon::stage_names()) {
    app.add_subcommand(name, help.at(name))->callback([&selected, name] { selected = name; });
  }
  auto* run = app.add_subcommand("run", "All stages from synth to export");
  run->add_flag("--sweep", with_sweep, "Include the supervised sweep");
  run->callback([&selected] { selected = "run"; });
  app.add_subcommand("config", "Print the effective configuration")->callback([&selected] {
    selected = "config";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report("usage", e.what());
    return 64;
  }

  try {
    shapecon::PipelineConfig config;
    if (!config_path.empty()) {
      config = shapecon::config_from_json(shapecon::parse_json(shapecon::read_file(config_path)));
    }
    config = shapecon::config_from_json(overlay(o), config);
    if (selected == "config") {
      std::cout << shapecon::to_json(config).dump(1) << "\n";
      return 0;
    }
    shapecon::StageContext ctx(config, out_dir);
    if (selected == "run") shapecon::run_all(ctx, with_sweep);
    else shapecon::run_stage(ctx, selected);
  } catch (const shapecon::Error& e) {
    report(std::string(shapecon::to_string(e.code())), e.what());
    return 1;
  } catch (const std::exception& e) {
    report("internal", e.what());
    return 1;
  }
  return 0;
}
