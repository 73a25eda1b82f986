#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "shapecon/io.hpp"
#include "shapecon/model_io.hpp"
#include "shapecon/pipeline.hpp"
#include "shapecon/svg.hpp"

// File-based pipeline stages. Each stage reads its upstream artifacts from the
// output directory, writes its own, and records a manifest under
// manifests/<stage>.json. Outputs depend only on config and seed.

namespace shapecon {

namespace fs = std::filesystem;

inline const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> kNames{
      "synth",    "segment",  "dict-train", "ensemble-train", "stimuli", "filtrate",
      "concepts", "sweep",    "classify",   "embed",          "export"};
  return kNames;
}

class StageContext {
 public:
  StageContext(PipelineConfig config, fs::path out_dir)
      : config_(std::move(config)), out_(std::move(out_dir)) {
    validate(config_);
  }

  const PipelineConfig& config() const { return config_; }
  const fs::path& out_dir() const { return out_; }

  fs::path path(const std::string& rel) const { return out_ / rel; }

  /// Fails with a stage-dependency error naming the missing artifact.
  std::string require(const std::string& rel) {
    const fs::path p = path(rel);
    if (!fs::exists(p)) {
      fail(ErrorCode::kStageDependency, "missing upstream artifact: " + p.string());
    }
    inputs_.push_back(rel);
    return read_file(p.string());
  }

  void write(const std::string& rel, const std::string& content) {
    const fs::path p = path(rel);
    fs::create_directories(p.parent_path());
    write_file(p.string(), content);
    outputs_.push_back(rel);
  }

  void write_json(const std::string& rel, const Json& j) { write(rel, j.dump(1) + "\n"); }

  /// Clears input/output bookkeeping for a new stage.
  void begin(const std::string& stage) {
    stage_ = stage;
    inputs_.clear();
    outputs_.clear();
    extras_ = Json::object();
  }

  Json& extras() { return extras_; }

  void finish() {
    Json m;
    m["stage"] = stage_;
    m["seed"] = config_.seed;
    m["stage_seed"] = derive_seed(config_.seed, stage_);
    m["config_hash"] = config_hash(config_);
    std::vector<std::string> in = inputs_;
    std::sort(in.begin(), in.end());
    in.erase(std::unique(in.begin(), in.end()), in.end());
    m["inputs"] = in;
    m["outputs"] = outputs_;
    m["extras"] = extras_;
    const fs::path p = path("manifests/" + stage_ + ".json");
    fs::create_directories(p.parent_path());
    write_file(p.string(), m.dump(1) + "\n");
  }

 private:
  PipelineConfig config_;
  fs::path out_;
  std::string stage_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
  Json extras_ = Json::object();
};

// ---------------------------------------------------------------------------
// Shared readers

struct LabeledIds {
  std::vector<std::string> ids;
  std::vector<std::optional<std::string>> labels;
};

inline std::string labels_csv(const LabeledIds& li) {
  std::string s = "object_id,label\n";
  for (std::size_t i = 0; i < li.ids.size(); ++i) {
    s += li.ids[i] + "," + li.labels[i].value_or("") + "\n";
  }
  return s;
}

inline LabeledIds parse_labels_csv(const std::string& text) {
  LabeledIds li;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 2) fail(ErrorCode::kParse, "labels.csv: expected 2 columns");
    li.ids.push_back(cells[0]);
    li.labels.push_back(cells[1].empty() ? std::nullopt : std::optional<std::string>(cells[1]));
  }
  return li;
}

/// Rows of `id,v_0,...`; returns ids and values.
inline std::pair<std::vector<std::string>, std::vector<std::vector<double>>> parse_matrix_csv(
    const std::string& text) {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    ids.push_back(cells[0]);
    std::vector<double> row;
    for (std::size_t k = 1; k < cells.size(); ++k) row.push_back(parse_number(cells[k]));
    rows.push_back(std::move(row));
  }
  return {std::move(ids), std::move(rows)};
}

inline std::string matrix_csv(const std::string& prefix, std::size_t dim,
                              const std::vector<std::string>& ids,
                              const std::vector<std::vector<double>>& rows) {
  std::string s = "object_id";
  for (std::size_t k = 0; k < dim; ++k) s += "," + prefix + std::to_string(k);
  s += "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    s += ids[i];
    for (double v : rows[i]) s += "," + format_number(v);
    s += "\n";
  }
  return s;
}

inline std::vector<ObjectFeatures> read_features(StageContext& ctx) {
  const Json j = parse_json(ctx.require("features.json"));
  check_header(j, "feature-set");
  std::vector<ObjectFeatures> out;
  for (const auto& o : j.at("objects")) out.push_back(features_from_json(o));
  return out;
}

inline std::vector<std::string> labels_or_fail(const LabeledIds& li) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < li.ids.size(); ++i) {
    if (!li.labels[i]) fail(ErrorCode::kMissingLabel, "object " + li.ids[i] + " has no label");
    out.push_back(*li.labels[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stages

inline void stage_synth(StageContext& ctx) {
  ctx.begin("synth");
  const auto scans = synthesize_dataset(ctx.config());
  Json index = model_header("cloud-index");
  Json objects = Json::array();
  for (const auto& s : scans) {
    std::ostringstream os;
    write_ascii_cloud(os, s.object.cloud, s.object.category_label.value_or(""));
    const std::string rel = "clouds/" + s.id + ".xyz";
    ctx.write(rel, os.str());
    objects.push_back({{"id", s.id}, {"label", *s.object.category_label}, {"file", rel},
                       {"points", s.object.cloud.size()}, {"segments", s.object.segments.size()}});
  }
  index["objects"] = std::move(objects);
  ctx.write_json("clouds/index.json", index);
  ctx.extras()["objects"] = scans.size();
  ctx.finish();
}

/// Segments every cloud listed in clouds/index.json, then computes segment
/// and constellation descriptors.
inline void stage_segment(StageContext& ctx) {
  ctx.begin("segment");
  const auto& c = ctx.config();
  const Json index = parse_json(ctx.require("clouds/index.json"));
  check_header(index, "cloud-index");
  Json seg_index = model_header("segment-index");
  Json seg_objects = Json::array();
  Json feats = model_header("feature-set");
  Json feat_objects = Json::array();
  LabeledIds li;
  // Ground-truth segmentation keeps the generator's ids and needs adjacency;
  // the same distance rule as the generator is used.
  const double gt_adjacency = ScanOptions{}.adjacency_factor / std::sqrt(c.density);
  for (const auto& entry : index.at("objects")) {
    const std::string id = entry.at("id").get<std::string>();
    const std::string rel = entry.at("file").get<std::string>();
    const std::string text = ctx.require(rel);
    std::istringstream in(text);
    const AsciiCloud ac = read_ascii_cloud(in);
    SegmentedObject scan = object_from_ascii(ac, gt_adjacency);
    if (scan.segments.empty() && c.segmentation == Segmentation::kGroundTruth) {
      fail(ErrorCode::kPrecondition, "cloud " + rel + " carries no segment ids");
    }
    const SegmentedObject seg = segment_scan(scan, c);
    std::ostringstream os;
    write_ascii_cloud(os, seg.cloud, seg.category_label.value_or(""));
    const std::string out_rel = "segmented/" + id + ".xyz";
    ctx.write(out_rel, os.str());
    Json adj = Json::array();
    for (auto [a, b] : seg.adjacency) adj.push_back({a, b});
    seg_objects.push_back({{"id", id}, {"file", out_rel}, {"segments", seg.segments.size()},
                           {"adjacency", std::move(adj)}});
    feat_objects.push_back(to_json(describe_object(seg, describe_options(c), id)));
    li.ids.push_back(id);
    li.labels.push_back(seg.category_label);
  }
  seg_index["objects"] = std::move(seg_objects);
  ctx.write_json("segmented/index.json", seg_index);
  feats["objects"] = std::move(feat_objects);
  ctx.write_json("features.json", feats);
  ctx.write("labels.csv", labels_csv(li));
  ctx.extras()["segmentation"] = to_string(c.segmentation);
  ctx.finish();
}

inline void stage_dict_train(StageContext& ctx) {
  ctx.begin("dict-train");
  const auto features = read_features(ctx);
  const Dictionary dict = train_pipeline_dictionary(features, ctx.config());
  ctx.write_json("dictionary.json", to_json(dict));
  std::vector<std::size_t> words;
  for (int f = 1; f <= dict.depth(); ++f) words.push_back(dict.level_words(f).size());
  ctx.extras()["words_per_level"] = words;
  ctx.finish();
}

inline Dictionary read_dictionary(StageContext& ctx) {
  return dictionary_from_json(parse_json(ctx.require("dictionary.json")));
}

inline void stage_ensemble_train(StageContext& ctx) {
  ctx.begin("ensemble-train");
  const auto features = read_features(ctx);
  const Dictionary dict = read_dictionary(ctx);
  const auto graphs = build_graphs(features, dict);
  const Ensemble e = train_ensemble(graphs, dict);
  ctx.write_json("ensemble.json", to_json(e));
  ctx.extras()["dimension"] = e.dimension();
  ctx.finish();
}

inline void stage_stimuli(StageContext& ctx) {
  ctx.begin("stimuli");
  const auto features = read_features(ctx);
  const Dictionary dict = read_dictionary(ctx);
  const Ensemble e = ensemble_from_json(parse_json(ctx.require("ensemble.json")));
  const auto graphs = build_graphs(features, dict);
  const auto stimuli = compute_stimuli(graphs, e, ctx.config().sigma);
  std::vector<std::string> ids;
  for (const auto& f : features) ids.push_back(f.id);
  ctx.write("stimuli.csv", matrix_csv("v_", e.dimension(), ids, stimuli));
  ctx.extras()["dimension"] = e.dimension();
  ctx.finish();
}

inline std::pair<std::vector<std::string>, std::vector<std::vector<double>>> read_stimuli(
    StageContext& ctx) {
  return parse_matrix_csv(ctx.require("stimuli.csv"));
}

inline void stage_filtrate(StageContext& ctx) {
  ctx.begin("filtrate");
  const auto [ids, stimuli] = read_stimuli(ctx);
  const TopoSpace space = geodesic_heats(build_space(stimuli));
  const Filtration f = filtrate(space, ctx.config().max_steps);
  ctx.write_json("space.json", to_json(space));
  ctx.write_json("filtration.json", to_json(f));
  ctx.extras()["steps"] = f.epsilons.size();
  ctx.extras()["epsilon_max"] = epsilon_max(f);
  ctx.finish();
}

inline Filtration read_filtration(StageContext& ctx) {
  return filtration_from_json(parse_json(ctx.require("filtration.json")));
}

inline LabeledIds read_labels(StageContext& ctx) { return parse_labels_csv(ctx.require("labels.csv")); }

inline void stage_concepts(StageContext& ctx) {
  ctx.begin("concepts");
  const auto& c = ctx.config();
  const Filtration f = read_filtration(ctx);
  const auto [ids, stimuli] = read_stimuli(ctx);
  const LabeledIds li = read_labels(ctx);
  if (li.ids != ids) fail(ErrorCode::kShape, "labels.csv and stimuli.csv disagree on object ids");
  const double t_star = resolve_t_star(c, f);
  const ConceptSet cs = extract_concepts(f, t_star, static_cast<std::size_t>(c.min_size), stimuli,
                                         li.labels, c.cut_rule);
  ctx.write_json("concepts.json", to_json(cs, ids));
  ctx.extras()["t_star"] = t_star;
  ctx.extras()["t_star_policy"] = c.t_star ? "explicit" : "auto-epsilon-max";
  ctx.extras()["cut_rule"] = to_string(c.cut_rule);
  ctx.extras()["concepts"] = cs.concepts.size();
  bool all_labeled = std::all_of(li.labels.begin(), li.labels.end(), [](const auto& l) { return l.has_value(); });
  if (all_labeled) ctx.extras()["mean_purity"] = number_to_json(mean_purity(cs));
  ctx.finish();
}

inline std::string sweep_csv(const SweepResult& r, const std::vector<std::vector<double>>& m) {
  std::string s = "cut_time\\min_size";
  for (std::size_t ms : r.grid.min_sizes) s += "," + std::to_string(ms);
  s += "\n";
  for (std::size_t i = 0; i < r.grid.cut_times.size(); ++i) {
    s += format_number(r.grid.cut_times[i]);
    for (double v : m[i]) s += "," + format_number(v);
    s += "\n";
  }
  return s;
}

inline void stage_sweep(StageContext& ctx) {
  ctx.begin("sweep");
  const auto& c = ctx.config();
  const Filtration f = read_filtration(ctx);
  const auto [ids, stimuli] = read_stimuli(ctx);
  const auto labels = labels_or_fail(read_labels(ctx));
  SweepGrid grid;
  grid.cut_times = default_cut_times(f, static_cast<std::size_t>(c.sweep_cut_points));
  for (int m : c.sweep_min_sizes) grid.min_sizes.push_back(static_cast<std::size_t>(m));
  const SweepResult r = supervised_sweep(f, stimuli, labels, grid, split_protocol(c, "sweep-split"),
                                         classifier_options(c, "sweep"));
  ctx.write("sweep_purity.csv", sweep_csv(r, r.mean_purity));
  ctx.write("sweep_error.csv", sweep_csv(r, r.mean_error));
  std::vector<std::vector<double>> counts;
  for (const auto& row : r.concept_count) counts.emplace_back(row.begin(), row.end());
  ctx.write("sweep_concepts.csv", sweep_csv(r, counts));
  ctx.finish();
}

inline std::vector<std::vector<double>> compute_responses(const ConceptSet& cs,
                                                          const std::vector<std::vector<double>>& stimuli) {
  std::vector<std::vector<double>> out;
  out.reserve(stimuli.size());
  for (const auto& s : stimuli) out.push_back(responses(s, cs));
  return out;
}

inline void stage_classify(StageContext& ctx) {
  ctx.begin("classify");
  const auto& c = ctx.config();
  const ConceptSet cs = concepts_from_json(parse_json(ctx.require("concepts.json")));
  const auto [ids, stimuli] = read_stimuli(ctx);
  const auto labels = labels_or_fail(read_labels(ctx));
  if (cs.concepts.empty()) fail(ErrorCode::kModelState, "classify: no concepts to respond to");
  const auto resp = compute_responses(cs, stimuli);
  ctx.write("responses.csv", matrix_csv("c_", cs.concepts.size(), ids, resp));
  const auto cv = cross_validate(resp, labels, split_protocol(c, "classify-split"),
                                 classifier_options(c, "classify"));
  std::string s = "label,mean_error_percent\n";
  for (std::size_t i = 0; i < cv.classes.size(); ++i) {
    s += cv.classes[i] + "," + format_number(cv.mean_error_percent[i]) + "\n";
  }
  ctx.write("classification.csv", s);
  ctx.extras()["mean_error_percent"] = cv.mean();
  ctx.finish();
}

inline void stage_embed(StageContext& ctx) {
  ctx.begin("embed");
  const auto& c = ctx.config();
  const auto [ids, resp] = parse_matrix_csv(ctx.require("responses.csv"));
  const LabeledIds li = read_labels(ctx);
  TsneOptions o;
  o.perplexity = c.perplexity;
  o.iterations = c.tsne_iterations;
  o.learning_rate = c.tsne_learning_rate;
  o.seed = derive_seed(c.seed, "embed");
  const Embedding2D emb = tsne(resp, o);
  std::string s = "id,x,y,label\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    s += ids[i] + "," + format_number(emb.coords[i][0]) + "," + format_number(emb.coords[i][1]) +
         "," + li.labels.at(i).value_or("") + "\n";
  }
  ctx.write("embedding.csv", s);
  ctx.extras()["initial_kl"] = emb.initial_kl;
  ctx.extras()["final_kl"] = emb.final_kl;
  ctx.finish();
}

struct LabeledPoints {
  std::vector<std::array<double, 2>> coords;
  std::vector<std::string> labels;
};

inline LabeledPoints read_embedding(StageContext& ctx) {
  LabeledPoints lp;
  std::istringstream in(ctx.require("embedding.csv"));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 4) fail(ErrorCode::kParse, "embedding.csv: expected 4 columns");
    lp.coords.push_back({parse_number(cells[1]), parse_number(cells[2])});
    lp.labels.push_back(cells[3]);
  }
  return lp;
}

/// Barcode, filtration graph, annexation curve and (when an embedding
/// exists) the region grid, as CSV and optionally SVG.
inline void stage_export(StageContext& ctx) {
  ctx.begin("export");
  const auto& c = ctx.config();
  const Filtration f = read_filtration(ctx);
  std::string bc = "vertex_id,birth,death\n";
  for (const auto& b : f.barcode) {
    bc += std::to_string(b.vertex) + "," + format_number(b.birth) + "," + format_number(b.death) + "\n";
  }
  ctx.write("barcode.csv", bc);
  std::string fe = "u,v,time\n";
  for (const auto& e : f.graph) {
    fe += std::to_string(e.u) + "," + std::to_string(e.v) + "," + format_number(e.time) + "\n";
  }
  ctx.write("f_edges.csv", fe);
  const auto curve = annexation_curve(f);
  std::string ac = "time,count\n";
  for (const auto& p : curve) ac += format_number(p.time) + "," + std::to_string(p.count) + "\n";
  ctx.write("annexation.csv", ac);
  if (c.svg) {
    ctx.write("barcode.svg", barcode_svg(f));
    ctx.write("annexation.svg", curve_svg(curve));
  }
  if (fs::exists(ctx.path("embedding.csv"))) {
    const LabeledPoints lp = read_embedding(ctx);
    RegionGridOptions go;
    go.k_fraction = c.grid_k_fraction;
    go.resolution = c.grid_resolution;
    const auto cells = region_grid(lp.coords, lp.labels, go);
    std::string g = "cx,cy,label,weight\n";
    for (const auto& cell : cells) {
      g += format_number(cell.cx) + "," + format_number(cell.cy) + "," + cell.label + "," +
           format_number(cell.weight) + "\n";
    }
    ctx.write("grid.csv", g);
    if (c.svg) ctx.write("embedding.svg", embedding_svg(lp.coords, lp.labels, cells, go.resolution));
  }
  ctx.finish();
}

inline void run_stage(StageContext& ctx, const std::string& stage) {
  if (stage == "synth") stage_synth(ctx);
  else if (stage == "segment") stage_segment(ctx);
  else if (stage == "dict-train") stage_dict_train(ctx);
  else if (stage == "ensemble-train") stage_ensemble_train(ctx);
  else if (stage == "stimuli") stage_stimuli(ctx);
  else if (stage == "filtrate") stage_filtrate(ctx);
  else if (stage == "concepts") stage_concepts(ctx);
  else if (stage == "sweep") stage_sweep(ctx);
  else if (stage == "classify") stage_classify(ctx);
  else if (stage == "embed") stage_embed(ctx);
  else if (stage == "export") stage_export(ctx);
  else fail(ErrorCode::kValidation, "unknown stage '" + stage + "'");
}

/// synth through export. The sweep is skipped unless `with_sweep`.
inline void run_all(StageContext& ctx, bool with_sweep = false) {
  for (const auto& s : stage_names()) {
    if (s == "sweep" && !with_sweep) continue;
    run_stage(ctx, s);
  }
}

}  // namespace shapecon
