#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shapecon/concepts.hpp"
#include "shapecon/dictionary.hpp"
#include "shapecon/error.hpp"
#include "shapecon/motif.hpp"
#include "shapecon/topo.hpp"

// Persistence for trained models and intermediate artifacts. Every document
// carries {"format": "shapecon", "version": N, "kind": ...}; numbers are
// written in shortest round-trip form so reloading is bit-exact.

namespace shapecon {

using Json = nlohmann::json;

inline constexpr int kModelVersion = 1;

inline Json model_header(const std::string& kind) {
  return Json{{"format", "shapecon"}, {"version", kModelVersion}, {"kind", kind}};
}

inline void check_header(const Json& j, const std::string& kind) {
  if (!j.is_object() || j.value("format", "") != "shapecon") {
    fail(ErrorCode::kCorruptModel, "not a shapecon model document");
  }
  if (j.value("version", 0) != kModelVersion) {
    fail(ErrorCode::kModelState, "unsupported model version");
  }
  if (j.value("kind", "") != kind) {
    fail(ErrorCode::kModelState, "expected a '" + kind + "' document, got '" +
                                     j.value("kind", "") + "'");
  }
}

inline Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    fail(ErrorCode::kParse, std::string("json: ") + e.what());
  }
}

// Non-finite values are not representable in JSON; they travel as strings.
inline Json number_to_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline double number_from_json(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::nan("");
  }
  fail(ErrorCode::kCorruptModel, "expected a number");
}

inline Json descriptor_to_json(const Descriptor& d) { return Json(d.bins); }

inline Descriptor descriptor_from_json(const Json& j) {
  if (!j.is_array() || j.size() != kDescriptorBins) fail(ErrorCode::kCorruptModel, "descriptor needs 33 bins");
  Descriptor d;
  for (std::size_t i = 0; i < kDescriptorBins; ++i) d.bins[i] = j[i].get<double>();
  return d;
}

// ---------------------------------------------------------------------------

inline Json to_json(const Dictionary& dict) {
  if (!dict.trained()) fail(ErrorCode::kModelState, "cannot save an untrained dictionary");
  Json j = model_header("dictionary");
  j["depth"] = dict.depth();
  Json nodes = Json::array();
  for (const auto& n : dict.nodes()) {
    Json children = Json::array();
    if (!n.is_leaf()) children = {n.children[0], n.children[1]};
    nodes.push_back({{"word", n.word_id},
                     {"level", n.level},
                     {"parent", n.parent},
                     {"children", children},
                     {"members", n.support},
                     {"centroid", descriptor_to_json(n.centroid)}});
  }
  j["nodes"] = std::move(nodes);
  return j;
}

inline Dictionary dictionary_from_json(const Json& j) {
  check_header(j, "dictionary");
  try {
    std::vector<WordNode> nodes;
    for (const auto& n : j.at("nodes")) {
      WordNode w;
      w.word_id = n.at("word").get<int>();
      w.level = n.at("level").get<int>();
      w.parent = n.at("parent").get<int>();
      const auto& ch = n.at("children");
      if (ch.size() == 2) {
        w.children[0] = ch[0].get<int>();
        w.children[1] = ch[1].get<int>();
      } else if (!ch.empty()) {
        fail(ErrorCode::kCorruptModel, "word must have 0 or 2 children");
      }
      w.centroid = descriptor_from_json(n.at("centroid"));
      w.support = n.at("members").get<std::size_t>();
      nodes.push_back(std::move(w));
    }
    if (nodes.empty()) fail(ErrorCode::kCorruptModel, "dictionary has no nodes");
    return Dictionary(j.at("depth").get<int>(), std::move(nodes));
  } catch (const Json::exception& e) {
    fail(ErrorCode::kCorruptModel, std::string("dictionary: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

inline Json to_json(const ObjectFeatures& f) {
  Json levels = Json::array();
  for (std::size_t l = 0; l < f.levels.size(); ++l) {
    Json descs = Json::array();
    for (const auto& d : f.descriptors[l]) descs.push_back(descriptor_to_json(d));
    levels.push_back({{"sets", f.levels[l].sets},
                      {"adjacency", f.levels[l].adjacency},
                      {"descriptors", std::move(descs)}});
  }
  return Json{{"id", f.id},
              {"label", f.label ? Json(*f.label) : Json(nullptr)},
              {"segment_ids", f.segment_ids},
              {"edges", f.edges},
              {"levels", std::move(levels)}};
}

inline ObjectFeatures features_from_json(const Json& j) {
  try {
    ObjectFeatures f;
    f.id = j.at("id").get<std::string>();
    if (!j.at("label").is_null()) f.label = j.at("label").get<std::string>();
    f.segment_ids = j.at("segment_ids").get<std::vector<int>>();
    f.edges = j.at("edges").get<std::vector<std::pair<int, int>>>();
    for (const auto& l : j.at("levels")) {
      ConstellationLevel lvl;
      lvl.sets = l.at("sets").get<std::vector<std::vector<int>>>();
      lvl.adjacency = l.at("adjacency").get<std::vector<std::pair<std::size_t, std::size_t>>>();
      std::vector<Descriptor> descs;
      for (const auto& d : l.at("descriptors")) descs.push_back(descriptor_from_json(d));
      if (descs.size() != lvl.sets.size()) fail(ErrorCode::kCorruptModel, "descriptor count mismatch");
      f.levels.push_back(std::move(lvl));
      f.descriptors.push_back(std::move(descs));
    }
    if (f.levels.empty() || f.levels[0].sets.size() != f.segment_ids.size()) {
      fail(ErrorCode::kCorruptModel, "features: level 1 must list every segment");
    }
    return f;
  } catch (const Json::exception& e) {
    fail(ErrorCode::kCorruptModel, std::string("features: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

inline Json to_json(const Ensemble& e) {
  Json j = model_header("ensemble");
  Json hs = Json::array();
  for (const auto& h : e.hierarchies) {
    Json verts = Json::array();
    for (const auto& v : h.vertices()) {
      Json protos = Json::array();
      for (const auto& p : v.prototypes) protos.push_back(descriptor_to_json(p));
      verts.push_back({{"id", v.id}, {"level", v.level}, {"motif", v.motif}, {"prototypes", std::move(protos)}});
    }
    Json edges = Json::array();
    for (const auto& [a, b] : h.edges()) edges.push_back({a, b});
    hs.push_back({{"dictionary_level", h.dictionary_level()}, {"vertices", std::move(verts)}, {"edges", std::move(edges)}});
  }
  j["hierarchies"] = std::move(hs);
  j["dimension"] = e.dimension();
  return j;
}

inline Ensemble ensemble_from_json(const Json& j) {
  check_header(j, "ensemble");
  try {
    Ensemble e;
    for (const auto& hj : j.at("hierarchies")) {
      MotifHierarchy h(hj.at("dictionary_level").get<int>());
      for (const auto& vj : hj.at("vertices")) {
        MotifVertex v;
        v.id = vj.at("id").get<int>();
        v.level = vj.at("level").get<int>();
        v.motif = vj.at("motif").get<std::vector<int>>();
        for (const auto& p : vj.at("prototypes")) v.prototypes.push_back(descriptor_from_json(p));
        h.add_vertex(std::move(v));
      }
      for (const auto& ej : hj.at("edges")) h.add_edge(ej.at(0).get<int>(), ej.at(1).get<int>());
      e.hierarchies.push_back(std::move(h));
    }
    if (j.contains("dimension") && j.at("dimension").get<std::size_t>() != e.dimension()) {
      fail(ErrorCode::kCorruptModel, "ensemble dimension does not match its vertices");
    }
    return e;
  } catch (const Json::exception& ex) {
    fail(ErrorCode::kCorruptModel, std::string("ensemble: ") + ex.what());
  }
}

// ---------------------------------------------------------------------------

inline Json to_json(const TopoSpace& s) {
  Json edges = Json::array();
  for (const auto& e : s.edges) {
    edges.push_back({{"u", e.u}, {"v", e.v}, {"weight", e.weight}, {"distance", e.distance}});
  }
  Json j = model_header("space");
  j["vertex_count"] = s.vertex_count;
  j["edges"] = std::move(edges);
  j["raw_heats"] = s.raw_heats;
  j["heats"] = s.heats;
  return j;
}

inline Json to_json(const Filtration& f) {
  Json j = model_header("filtration");
  j["vertex_count"] = f.vertex_count;
  j["epsilons"] = f.epsilons;
  Json events = Json::array();
  for (const auto& e : f.events) {
    events.push_back({{"step", e.step}, {"survivor", e.survivor}, {"dying", e.dying}, {"edge", e.edge}});
  }
  j["events"] = std::move(events);
  Json bars = Json::array();
  for (const auto& b : f.barcode) {
    bars.push_back({{"vertex", b.vertex}, {"birth", b.birth}, {"death", number_to_json(b.death)}});
  }
  j["barcode"] = std::move(bars);
  Json graph = Json::array();
  for (const auto& e : f.graph) graph.push_back({{"u", e.u}, {"v", e.v}, {"time", e.time}});
  j["graph"] = std::move(graph);
  j["annexation_counts"] = f.annexation_counts;
  return j;
}

inline Filtration filtration_from_json(const Json& j) {
  check_header(j, "filtration");
  try {
    Filtration f;
    f.vertex_count = j.at("vertex_count").get<int>();
    f.epsilons = j.at("epsilons").get<std::vector<double>>();
    for (const auto& e : j.at("events")) {
      f.events.push_back({e.at("step").get<int>(), e.at("survivor").get<int>(),
                          e.at("dying").get<int>(), e.at("edge").get<int>()});
    }
    for (const auto& b : j.at("barcode")) {
      f.barcode.push_back({b.at("vertex").get<int>(), b.at("birth").get<double>(),
                           number_from_json(b.at("death"))});
    }
    for (const auto& e : j.at("graph")) {
      f.graph.push_back({e.at("u").get<int>(), e.at("v").get<int>(), e.at("time").get<double>()});
    }
    f.annexation_counts = j.at("annexation_counts").get<std::vector<int>>();
    if (f.epsilons.empty() || f.annexation_counts.size() != f.epsilons.size()) {
      fail(ErrorCode::kCorruptModel, "filtration: inconsistent step arrays");
    }
    return f;
  } catch (const Json::exception& e) {
    fail(ErrorCode::kCorruptModel, std::string("filtration: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

inline std::string to_string(CutRule rule) {
  return rule == CutRule::kDropLater ? "drop-later" : "drop-earlier";
}

inline CutRule cut_rule_from_string(const std::string& s) {
  if (s == "drop-later") return CutRule::kDropLater;
  if (s == "drop-earlier") return CutRule::kDropEarlier;
  fail(ErrorCode::kValidation, "unknown cut rule '" + s + "'");
}

/// Concept export: members, formation time, and (when every prototype is
/// labeled) purity and rank score. `object_ids` maps vertex ids to names.
inline Json to_json(const ConceptSet& cs, const std::vector<std::string>& object_ids) {
  Json j = model_header("concepts");
  j["cut_time"] = cs.cut_time;
  j["covariance"] = {{"variances", cs.covariance.variances}, {"shrinkage", cs.covariance.shrinkage}};
  Json arr = Json::array();
  for (const auto& c : cs.concepts) {
    Json cj{{"id", c.id}, {"formation_time", c.formation_time}, {"size", c.size()},
            {"members", c.members}};
    Json names = Json::array();
    for (int m : c.members) names.push_back(object_ids.at(static_cast<std::size_t>(m)));
    cj["member_ids"] = std::move(names);
    Json labels = Json::array();
    bool all_labeled = true;
    for (const auto& l : c.labels) {
      labels.push_back(l ? Json(*l) : Json(nullptr));
      all_labeled = all_labeled && l.has_value();
    }
    cj["labels"] = std::move(labels);
    if (all_labeled) {
      cj["purity"] = purity(c);
      cj["rank_score"] = rank_score(c);
    }
    cj["prototypes"] = c.prototypes;
    arr.push_back(std::move(cj));
  }
  j["concepts"] = std::move(arr);
  return j;
}

inline ConceptSet concepts_from_json(const Json& j) {
  check_header(j, "concepts");
  try {
    ConceptSet cs;
    cs.cut_time = j.at("cut_time").get<double>();
    cs.covariance.variances = j.at("covariance").at("variances").get<std::vector<double>>();
    cs.covariance.shrinkage = j.at("covariance").at("shrinkage").get<double>();
    for (const auto& cj : j.at("concepts")) {
      Concept c;
      c.id = cj.at("id").get<int>();
      c.formation_time = cj.at("formation_time").get<double>();
      c.members = cj.at("members").get<std::vector<int>>();
      c.prototypes = cj.at("prototypes").get<std::vector<std::vector<double>>>();
      for (const auto& l : cj.at("labels")) {
        c.labels.push_back(l.is_null() ? std::nullopt : std::optional<std::string>(l.get<std::string>()));
      }
      if (c.prototypes.size() != c.members.size() || c.labels.size() != c.members.size()) {
        fail(ErrorCode::kCorruptModel, "concept member/prototype count mismatch");
      }
      cs.concepts.push_back(std::move(c));
    }
    return cs;
  } catch (const Json::exception& e) {
    fail(ErrorCode::kCorruptModel, std::string("concepts: ") + e.what());
  }
}

}  // namespace shapecon
