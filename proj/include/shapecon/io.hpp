#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "shapecon/error.hpp"
#include "shapecon/geometry.hpp"

namespace shapecon {

/// Shortest round-trip decimal form; "inf", "-inf" and "nan" for non-finite
/// values.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_number(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::nan("");
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    fail(ErrorCode::kParse, "not a number: '" + s + "'");
  }
  return v;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  out << content;
  if (!out) fail(ErrorCode::kIo, "write failed: " + path);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

// ---------------------------------------------------------------------------
// ASCII point clouds: "x y z [segment_id] [category_label]" per line.

struct AsciiCloud {
  PointCloud cloud;  // segment_ids filled when any line has one (-1 = none)
  std::optional<std::string> label;
};

inline AsciiCloud read_ascii_cloud(std::istream& in) {
  AsciiCloud out;
  std::vector<int> ids;
  bool any_id = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok.size() < 3 || tok.size() > 5) {
      fail(ErrorCode::kParse, "line " + std::to_string(lineno) + ": expected 3 to 5 columns");
    }
    Vec3 p;
    for (int k = 0; k < 3; ++k) {
      p[k] = parse_number(tok[static_cast<std::size_t>(k)]);
      if (!std::isfinite(p[k])) fail(ErrorCode::kParse, "line " + std::to_string(lineno) + ": non-finite coordinate");
    }
    out.cloud.points.push_back(p);
    int id = -1;
    if (tok.size() >= 4) {
      const auto& s = tok[3];
      const auto res = std::from_chars(s.data(), s.data() + s.size(), id);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        fail(ErrorCode::kParse, "line " + std::to_string(lineno) + ": bad segment id");
      }
      any_id = true;
    }
    ids.push_back(id);
    if (tok.size() == 5) {
      if (out.label && *out.label != tok[4]) {
        fail(ErrorCode::kParse, "line " + std::to_string(lineno) + ": mixed category labels");
      }
      out.label = tok[4];
    }
  }
  if (any_id) out.cloud.segment_ids = std::move(ids);
  return out;
}

inline AsciiCloud read_ascii_cloud(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  return read_ascii_cloud(in);
}

inline void write_ascii_cloud(std::ostream& out, const PointCloud& cloud,
                              const std::optional<std::string>& label) {
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    out << format_number(p.x()) << ' ' << format_number(p.y()) << ' ' << format_number(p.z());
    if (cloud.has_segment_ids()) {
      out << ' ' << cloud.segment_ids[i];
      if (label) out << ' ' << *label;
    }
    out << '\n';
  }
}

/// Segmented object from per-point ids; points with id < 0 stay unassigned.
inline SegmentedObject object_from_ascii(const AsciiCloud& ac, double adjacency_dist) {
  SegmentedObject obj;
  obj.cloud = ac.cloud;
  obj.category_label = ac.label;
  if (!obj.cloud.has_segment_ids()) return obj;
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < obj.cloud.size(); ++i) {
    if (obj.cloud.segment_ids[i] >= 0) groups[obj.cloud.segment_ids[i]].push_back(i);
  }
  for (auto& [id, idx] : groups) obj.segments.push_back({id, std::move(idx), std::nullopt});
  std::set<SegmentEdge> edges;
  for (const auto& e : segment_adjacency(obj.cloud, obj.cloud.segment_ids, adjacency_dist)) {
    if (e.first >= 0 && e.second >= 0) edges.insert(e);
  }
  obj.adjacency.assign(edges.begin(), edges.end());
  return obj;
}

}  // namespace shapecon
