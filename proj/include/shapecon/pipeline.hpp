#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "shapecon/classifier.hpp"
#include "shapecon/concept_sweep.hpp"
#include "shapecon/concepts.hpp"
#include "shapecon/cross_validation.hpp"
#include "shapecon/dictionary.hpp"
#include "shapecon/error.hpp"
#include "shapecon/geometry.hpp"
#include "shapecon/model_io.hpp"
#include "shapecon/motif.hpp"
#include "shapecon/region_grid.hpp"
#include "shapecon/rng.hpp"
#include "shapecon/topo.hpp"
#include "shapecon/tsne.hpp"

namespace shapecon {

enum class Segmentation { kRegionGrow, kGroundTruth };

/// Every tunable of the pipeline. Loaded from JSON; unknown keys are rejected.
struct PipelineConfig {
  std::uint64_t seed = 42;

  // synth
  std::vector<std::string> classes{"box", "can", "sphere"};
  int scans_per_class = 30;
  double noise_sigma = 0.002;
  double density = 40000.0;

  // segment
  Segmentation segmentation = Segmentation::kRegionGrow;
  int normal_k = 30;
  double angle_deg = 15.0;
  double dist_thresh = 0.012;
  double curvature_max = 0.06;
  int min_segment_size = 50;
  double fpfh_radius_factor = 4.0;

  // dict-train / ensemble-train / stimuli
  int depth = 4;
  int dict_max_iter = 50;
  double sigma = kDefaultSigma;

  // filtrate / concepts
  int max_steps = kDefaultMaxSteps;
  std::optional<double> t_star;  // nullopt: cut at epsilon_max
  int min_size = 2;
  CutRule cut_rule = CutRule::kDropLater;

  // classify / sweep
  double split_ratio = 0.75;
  int repetitions = 5;
  int epochs = 200;
  double lambda = 1e-3;
  int sweep_cut_points = 12;
  std::vector<int> sweep_min_sizes{1, 2, 3, 5};

  // embed / export
  double perplexity = 10.0;
  int tsne_iterations = 1000;
  double tsne_learning_rate = 200.0;
  double grid_k_fraction = 0.05;
  int grid_resolution = 100;
  bool svg = false;
};

inline std::string to_string(Segmentation s) {
  return s == Segmentation::kGroundTruth ? "ground-truth" : "region-grow";
}

inline Json to_json(const PipelineConfig& c) {
  Json j;
  j["seed"] = c.seed;
  j["classes"] = c.classes;
  j["scans_per_class"] = c.scans_per_class;
  j["noise_sigma"] = c.noise_sigma;
  j["density"] = c.density;
  j["segmentation"] = to_string(c.segmentation);
  j["normal_k"] = c.normal_k;
  j["angle_deg"] = c.angle_deg;
  j["dist_thresh"] = c.dist_thresh;
  j["curvature_max"] = c.curvature_max;
  j["min_segment_size"] = c.min_segment_size;
  j["fpfh_radius_factor"] = c.fpfh_radius_factor;
  j["depth"] = c.depth;
  j["dict_max_iter"] = c.dict_max_iter;
  j["sigma"] = c.sigma;
  j["max_steps"] = c.max_steps;
  j["t_star"] = c.t_star ? Json(*c.t_star) : Json("auto");
  j["min_size"] = c.min_size;
  j["cut_rule"] = to_string(c.cut_rule);
  j["split_ratio"] = c.split_ratio;
  j["repetitions"] = c.repetitions;
  j["epochs"] = c.epochs;
  j["lambda"] = c.lambda;
  j["sweep_cut_points"] = c.sweep_cut_points;
  j["sweep_min_sizes"] = c.sweep_min_sizes;
  j["perplexity"] = c.perplexity;
  j["tsne_iterations"] = c.tsne_iterations;
  j["tsne_learning_rate"] = c.tsne_learning_rate;
  j["grid_k_fraction"] = c.grid_k_fraction;
  j["grid_resolution"] = c.grid_resolution;
  j["svg"] = c.svg;
  return j;
}

/// Keys whose values fall outside their documented ranges.
inline std::vector<std::string> invalid_keys(const PipelineConfig& c) {
  std::vector<std::string> bad;
  auto check = [&](bool ok, const char* key) {
    if (!ok) bad.emplace_back(key);
  };
  static const std::set<std::string> kKnownClasses{"box", "can", "sphere", "teddy"};
  bool classes_ok = c.classes.size() >= 2;
  std::set<std::string> seen;
  for (const auto& k : c.classes) classes_ok = classes_ok && kKnownClasses.count(k) && seen.insert(k).second;
  check(classes_ok, "classes");
  check(c.scans_per_class >= 2, "scans_per_class");
  check(c.noise_sigma >= 0.0 && std::isfinite(c.noise_sigma), "noise_sigma");
  check(c.density > 0.0 && std::isfinite(c.density), "density");
  check(c.normal_k >= 3, "normal_k");
  check(c.angle_deg > 0.0 && c.angle_deg < 90.0, "angle_deg");
  check(c.dist_thresh > 0.0, "dist_thresh");
  check(c.curvature_max > 0.0, "curvature_max");
  check(c.min_segment_size >= 1, "min_segment_size");
  check(c.fpfh_radius_factor > 0.0, "fpfh_radius_factor");
  check(c.depth >= 1 && c.depth <= 16, "depth");
  check(c.dict_max_iter >= 1, "dict_max_iter");
  check(c.sigma > 0.0, "sigma");
  check(c.max_steps >= 2, "max_steps");
  check(!c.t_star || (*c.t_star >= 0.0 && *c.t_star <= 1.0), "t_star");
  check(c.min_size >= 1, "min_size");
  check(c.split_ratio > 0.0 && c.split_ratio < 1.0, "split_ratio");
  check(c.repetitions >= 1, "repetitions");
  check(c.epochs >= 1, "epochs");
  check(c.lambda > 0.0, "lambda");
  check(c.sweep_cut_points >= 2, "sweep_cut_points");
  bool sizes_ok = !c.sweep_min_sizes.empty();
  for (int s : c.sweep_min_sizes) sizes_ok = sizes_ok && s >= 1;
  check(sizes_ok, "sweep_min_sizes");
  check(c.perplexity > 0.0, "perplexity");
  check(c.tsne_iterations >= 0, "tsne_iterations");
  check(c.tsne_learning_rate > 0.0, "tsne_learning_rate");
  check(c.grid_k_fraction > 0.0 && c.grid_k_fraction <= 1.0, "grid_k_fraction");
  check(c.grid_resolution >= 2, "grid_resolution");
  return bad;
}

namespace detail {

[[noreturn]] inline void fail_keys(const std::vector<std::string>& keys) {
  std::string msg = "invalid config keys:";
  for (const auto& k : keys) msg += " " + k;
  fail(ErrorCode::kValidation, msg);
}

}  // namespace detail

inline void validate(const PipelineConfig& c) {
  const auto bad = invalid_keys(c);
  if (!bad.empty()) detail::fail_keys(bad);
}

/// Overlays a JSON object onto `base`. Unknown keys and type errors are
/// collected and reported together.
inline PipelineConfig config_from_json(const Json& j, PipelineConfig base = {}) {
  if (!j.is_object()) fail(ErrorCode::kValidation, "config must be a JSON object");
  std::vector<std::string> bad;
  PipelineConfig& c = base;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "classes") c.classes = value.get<std::vector<std::string>>();
      else if (key == "scans_per_class") c.scans_per_class = value.get<int>();
      else if (key == "noise_sigma") c.noise_sigma = value.get<double>();
      else if (key == "density") c.density = value.get<double>();
      else if (key == "segmentation") {
        const auto s = value.get<std::string>();
        if (s == "region-grow") c.segmentation = Segmentation::kRegionGrow;
        else if (s == "ground-truth") c.segmentation = Segmentation::kGroundTruth;
        else bad.push_back(key);
      }
      else if (key == "normal_k") c.normal_k = value.get<int>();
      else if (key == "angle_deg") c.angle_deg = value.get<double>();
      else if (key == "dist_thresh") c.dist_thresh = value.get<double>();
      else if (key == "curvature_max") c.curvature_max = value.get<double>();
      else if (key == "min_segment_size") c.min_segment_size = value.get<int>();
      else if (key == "fpfh_radius_factor") c.fpfh_radius_factor = value.get<double>();
      else if (key == "depth") c.depth = value.get<int>();
      else if (key == "dict_max_iter") c.dict_max_iter = value.get<int>();
      else if (key == "sigma") c.sigma = value.get<double>();
      else if (key == "max_steps") c.max_steps = value.get<int>();
      else if (key == "t_star") {
        if (value.is_string() && value.get<std::string>() == "auto") c.t_star.reset();
        else c.t_star = value.get<double>();
      }
      else if (key == "min_size") c.min_size = value.get<int>();
      else if (key == "cut_rule") c.cut_rule = cut_rule_from_string(value.get<std::string>());
      else if (key == "split_ratio") c.split_ratio = value.get<double>();
      else if (key == "repetitions") c.repetitions = value.get<int>();
      else if (key == "epochs") c.epochs = value.get<int>();
      else if (key == "lambda") c.lambda = value.get<double>();
      else if (key == "sweep_cut_points") c.sweep_cut_points = value.get<int>();
      else if (key == "sweep_min_sizes") c.sweep_min_sizes = value.get<std::vector<int>>();
      else if (key == "perplexity") c.perplexity = value.get<double>();
      else if (key == "tsne_iterations") c.tsne_iterations = value.get<int>();
      else if (key == "tsne_learning_rate") c.tsne_learning_rate = value.get<double>();
      else if (key == "grid_k_fraction") c.grid_k_fraction = value.get<double>();
      else if (key == "grid_resolution") c.grid_resolution = value.get<int>();
      else if (key == "svg") c.svg = value.get<bool>();
      else bad.push_back(key);
    } catch (const Json::exception&) {
      bad.push_back(key);
    } catch (const Error&) {
      bad.push_back(key);
    }
  }
  for (const auto& k : invalid_keys(c)) {
    if (std::find(bad.begin(), bad.end(), k) == bad.end()) bad.push_back(k);
  }
  if (!bad.empty()) detail::fail_keys(bad);
  return c;
}

/// Stable 64-bit digest of the canonical (sorted-key) JSON form.
inline std::string config_hash(const PipelineConfig& c) {
  const std::uint64_t h = fnv1a64(to_json(c).dump());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// In-memory stages

struct LabeledScan {
  std::string id;
  SegmentedObject object;  // ground-truth segments, category_label set
};

inline ShapeSpec random_shape(const std::string& kind, Rng& rng) {
  if (kind == "box") {
    return ShapeSpec::box(rng.uniform(0.12, 0.30), rng.uniform(0.08, 0.22), rng.uniform(0.06, 0.20));
  }
  if (kind == "can") return ShapeSpec::cylinder(rng.uniform(0.04, 0.08), rng.uniform(0.10, 0.25));
  if (kind == "sphere") return ShapeSpec::sphere(rng.uniform(0.05, 0.12));
  if (kind == "teddy") return ShapeSpec::teddy(rng.uniform(0.06, 0.10));
  fail(ErrorCode::kInvalidShape, "unknown synthetic class '" + kind + "'");
}

inline Viewpoint random_viewpoint(Rng& rng) {
  Viewpoint v;
  v.distance = rng.uniform(0.8, 1.2);
  v.azimuth = rng.uniform(0.0, 2.0 * std::numbers::pi);
  v.elevation = rng.uniform(0.25, 0.9);
  return v;
}

/// Scans are interleaved by class (box, can, sphere, box, ...), each with its
/// own seed derived from the stage seed and scan index.
inline std::vector<LabeledScan> synthesize_dataset(const PipelineConfig& c) {
  const std::uint64_t stage_seed = derive_seed(c.seed, "synth");
  std::vector<LabeledScan> out;
  int index = 0;
  for (int s = 0; s < c.scans_per_class; ++s) {
    for (const auto& kind : c.classes) {
      const std::uint64_t scan_seed = derive_seed(stage_seed, "scan-" + std::to_string(index));
      Rng rng(scan_seed);
      const ShapeSpec shape = random_shape(kind, rng);
      const Viewpoint view = random_viewpoint(rng);
      ScanOptions opts;
      opts.density = c.density;
      opts.noise_sigma = c.noise_sigma;
      opts.seed = derive_seed(scan_seed, "points");
      char id[16];
      std::snprintf(id, sizeof id, "%04d", index);
      out.push_back({id, generate_synthetic_scan(shape, view, opts)});
      out.back().object.category_label = kind;
      ++index;
    }
  }
  return out;
}

/// Normals plus the configured segmentation; the category label is kept.
inline SegmentedObject segment_scan(const SegmentedObject& scan, const PipelineConfig& c) {
  PointCloud cloud = estimate_normals(scan.cloud, static_cast<std::size_t>(c.normal_k));
  SegmentedObject out;
  if (c.segmentation == Segmentation::kGroundTruth) {
    out = scan;
    out.cloud = std::move(cloud);
  } else {
    cloud.segment_ids.clear();
    RegionGrowOptions ro;
    ro.angle_deg = c.angle_deg;
    ro.dist = c.dist_thresh;
    ro.curvature_max = c.curvature_max;
    ro.min_segment_size = static_cast<std::size_t>(c.min_segment_size);
    out = region_grow_segment(cloud, ro);
  }
  out.category_label = scan.category_label;
  return out;
}

inline DescribeOptions describe_options(const PipelineConfig& c) {
  DescribeOptions d;
  d.radius_factor = c.fpfh_radius_factor;
  return d;
}

/// The dictionary is trained on single-segment descriptors.
inline Dictionary train_pipeline_dictionary(std::span<const ObjectFeatures> features,
                                            const PipelineConfig& c) {
  std::vector<Descriptor> corpus;
  for (const auto& f : features) {
    corpus.insert(corpus.end(), f.descriptors.at(0).begin(), f.descriptors.at(0).end());
  }
  DictionaryOptions o;
  o.depth = c.depth;
  o.seed = derive_seed(c.seed, "dict-train");
  o.max_iter = c.dict_max_iter;
  return train_dictionary(corpus, o);
}

inline std::vector<ObjectGraph> build_graphs(std::span<const ObjectFeatures> features,
                                             const Dictionary& dict) {
  std::vector<ObjectGraph> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(build_object_graph(f, dict));
  return out;
}

inline std::vector<std::vector<double>> compute_stimuli(std::span<const ObjectGraph> graphs,
                                                        const Ensemble& e, double sigma) {
  std::vector<std::vector<double>> out;
  out.reserve(graphs.size());
  for (const auto& g : graphs) out.push_back(stimuli_vector(g, e, sigma).concatenated());
  return out;
}

inline ClassifierOptions classifier_options(const PipelineConfig& c, const std::string& tag) {
  ClassifierOptions o;
  o.epochs = c.epochs;
  o.lambda = c.lambda;
  o.seed = derive_seed(c.seed, tag);
  return o;
}

inline SplitProtocol split_protocol(const PipelineConfig& c, const std::string& tag) {
  SplitProtocol p;
  p.train_ratio = c.split_ratio;
  p.repetitions = c.repetitions;
  p.seed = derive_seed(c.seed, tag);
  return p;
}

inline double resolve_t_star(const PipelineConfig& c, const Filtration& f) {
  return c.t_star ? *c.t_star : epsilon_max(f);
}

/// Everything the stages produce, computed without touching disk.
struct PipelineResult {
  std::vector<std::string> ids;
  std::vector<std::string> labels;
  std::vector<ObjectFeatures> features;
  Dictionary dictionary;
  Ensemble ensemble;
  std::vector<std::vector<double>> stimuli;
  TopoSpace space;
  Filtration filtration;
  double t_star = 0.0;
  ConceptSet concepts;
  std::vector<std::vector<double>> responses;
  CrossValidationResult classification;
};

inline PipelineResult run_in_memory(const PipelineConfig& c) {
  validate(c);
  PipelineResult r;
  const auto scans = synthesize_dataset(c);
  for (const auto& s : scans) {
    r.ids.push_back(s.id);
    r.labels.push_back(*s.object.category_label);
    r.features.push_back(describe_object(segment_scan(s.object, c), describe_options(c), s.id));
  }
  r.dictionary = train_pipeline_dictionary(r.features, c);
  const auto graphs = build_graphs(r.features, r.dictionary);
  r.ensemble = train_ensemble(graphs, r.dictionary);
  r.stimuli = compute_stimuli(graphs, r.ensemble, c.sigma);
  r.space = geodesic_heats(build_space(r.stimuli));
  r.filtration = filtrate(r.space, c.max_steps);
  r.t_star = resolve_t_star(c, r.filtration);
  std::vector<std::optional<std::string>> opt(r.labels.begin(), r.labels.end());
  r.concepts = extract_concepts(r.filtration, r.t_star, static_cast<std::size_t>(c.min_size),
                                r.stimuli, opt, c.cut_rule);
  for (const auto& s : r.stimuli) r.responses.push_back(responses(s, r.concepts));
  if (!r.concepts.concepts.empty()) {
    r.classification = cross_validate(r.responses, r.labels, split_protocol(c, "classify-split"),
                                      classifier_options(c, "classify"));
  }
  return r;
}

}  // namespace shapecon
