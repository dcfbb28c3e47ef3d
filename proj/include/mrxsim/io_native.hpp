#pragma once

// Native setup (.mrxsetup) and config (.mrxcfg) documents.
//
// Both are versioned YAML key trees. Numbers are written in shortest
// round-trip form so load(save(x)) reproduces every double exactly. Coil and
// sensor indices are 1-based in the files.
//
//   format: mrxsetup            format: mrxcfg
//   version: 1                  version: 1
//   dim: 3                      res: [10, 10, 5]
//   roi: {x: [lo, hi], ...}     active_coils: [1, 2, ...]
//   coils:                      active_sensors: [1, 2, ...]
//     - position: [x, y, z]     current_pattern:
//       normal: [nx, ny, nz]      - [1, 0, ...]
//       segments: [[x, y, z], ...]    (optional)
//   sensors:
//     - position / normal / sensor_id / channel_id / group_id

#include <mrxsim/errors.hpp>
#include <mrxsim/io_common.hpp>
#include <mrxsim/model.hpp>

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

namespace mrx::io {

inline constexpr int kNativeSchemaVersion = 1;

namespace detail {

inline std::string num(double v) { return fmt::format("{}", v); }

inline void emit_vec(YAML::Emitter& out, const Vec3& v) {
  out << YAML::Flow << YAML::BeginSeq << num(v.x()) << num(v.y()) << num(v.z()) << YAML::EndSeq;
}

// Reads fields of one YAML document and reports errors with file and line.
class NodeReader {
 public:
  NodeReader(std::string file, Diagnostics* diag) : file_(std::move(file)), diag_(diag) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& what) const {
    const auto mark = node.Mark();
    throw FormatError(file_, mark.is_null() ? 0 : static_cast<std::size_t>(mark.line) + 1, what);
  }

  YAML::Node require(const YAML::Node& map, std::string_view key, std::string_view section) const {
    const YAML::Node child = map[std::string(key)];
    if (!child) {
      throw FormatError(file_, 0, fmt::format("missing section '{}'{}", key,
                                              section.empty() ? std::string() : fmt::format(" in {}", section)));
    }
    return child;
  }

  double number(const YAML::Node& node, std::string_view field) const {
    if (!node.IsScalar()) fail(node, fmt::format("field '{}': expected a number", field));
    try {
      const double v = node.as<double>();
      if (!std::isfinite(v)) fail(node, fmt::format("field '{}': non-finite number", field));
      return v;
    } catch (const YAML::BadConversion&) {
      fail(node, fmt::format("field '{}': expected a number, got '{}'", field, node.Scalar()));
    }
  }

  long long integer(const YAML::Node& node, std::string_view field) const {
    if (!node.IsScalar()) fail(node, fmt::format("field '{}': expected an integer", field));
    try {
      return node.as<long long>();
    } catch (const YAML::BadConversion&) {
      fail(node, fmt::format("field '{}': expected an integer, got '{}'", field, node.Scalar()));
    }
  }

  Vec3 vec3(const YAML::Node& node, std::string_view field) const {
    if (!node.IsSequence() || node.size() != 3) fail(node, fmt::format("field '{}': expected [x, y, z]", field));
    return {number(node[0], field), number(node[1], field), number(node[2], field)};
  }

  Vec3 normal(const YAML::Node& node, std::string_view field) const {
    const Vec3 n = vec3(node, field);
    const double len = n.norm();
    if (!(len > 0.0)) fail(node, fmt::format("field '{}': zero normal", field));
    if (std::abs(len - 1.0) <= kUnitNormalTolerance) return n;
    warn(fmt::format("{}: field '{}' has length {}, normalized", file_, field, len));
    return n / len;
  }

  Interval interval(const YAML::Node& node, std::string_view field) const {
    if (!node.IsSequence() || node.size() != 2) fail(node, fmt::format("field '{}': expected [lo, hi]", field));
    return {number(node[0], field), number(node[1], field)};
  }

  // 1-based index list -> 0-based.
  std::vector<std::size_t> indices(const YAML::Node& node, std::string_view field) const {
    if (!node.IsSequence()) fail(node, fmt::format("field '{}': expected a list of indices", field));
    std::vector<std::size_t> out;
    for (const auto& item : node) {
      const long long v = integer(item, field);
      if (v < 1) fail(item, fmt::format("field '{}': indices are 1-based, got {}", field, v));
      out.push_back(static_cast<std::size_t>(v - 1));
    }
    return out;
  }

  void check_keys(const YAML::Node& map, std::initializer_list<std::string_view> known, std::string_view where) const {
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      bool found = false;
      for (auto k : known) found = found || key == k;
      if (!found) warn(fmt::format("{}: unknown field '{}' in {} ignored", file_, key, where));
    }
  }

  void warn(std::string msg) const { mrx::warn(diag_, std::move(msg)); }

  const std::string& file() const { return file_; }

 private:
  std::string file_;
  Diagnostics* diag_;
};

inline YAML::Node parse_document(const fs::path& path, std::string_view expected_format, const NodeReader& reader) {
  const std::string text = read_text_file(path);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw FormatError(reader.file(), static_cast<std::size_t>(e.mark.line) + 1, e.msg);
  }
  if (!root.IsMap()) throw FormatError(reader.file(), 0, "expected a key-value document");
  const auto fmt_node = reader.require(root, "format", "");
  if (!fmt_node.IsScalar() || fmt_node.Scalar() != expected_format) {
    reader.fail(fmt_node, fmt::format("expected format '{}'", expected_format));
  }
  const long long version = reader.integer(reader.require(root, "version", ""), "version");
  if (version != kNativeSchemaVersion) {
    throw FormatError(reader.file(), 0,
                      fmt::format("schema version mismatch: file has {}, reader supports {}", version,
                                  kNativeSchemaVersion));
  }
  return root;
}

}  // namespace detail

inline std::string serialize_setup(const Setup& setup) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "format" << YAML::Value << "mrxsetup";
  out << YAML::Key << "version" << YAML::Value << kNativeSchemaVersion;
  out << YAML::Key << "dim" << YAML::Value << setup.dim;
  out << YAML::Key << "roi" << YAML::Value << YAML::BeginMap;
  static constexpr const char* kAxis[] = {"x", "y", "z"};
  for (int a = 0; a < 3; ++a) {
    out << YAML::Key << kAxis[a] << YAML::Value << YAML::Flow << YAML::BeginSeq
        << detail::num(setup.roi.axis(a).lo) << detail::num(setup.roi.axis(a).hi) << YAML::EndSeq;
  }
  out << YAML::EndMap;

  out << YAML::Key << "coils" << YAML::Value << YAML::BeginSeq;
  for (const auto& c : setup.coils) {
    out << YAML::BeginMap;
    out << YAML::Key << "position" << YAML::Value;
    detail::emit_vec(out, c.position);
    out << YAML::Key << "normal" << YAML::Value;
    detail::emit_vec(out, c.normal);
    if (c.segments) {
      out << YAML::Key << "segments" << YAML::Value << YAML::BeginSeq;
      for (const auto& p : *c.segments) detail::emit_vec(out, p);
      out << YAML::EndSeq;
    }
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "sensors" << YAML::Value << YAML::BeginSeq;
  for (const auto& s : setup.sensors) {
    out << YAML::BeginMap;
    out << YAML::Key << "position" << YAML::Value;
    detail::emit_vec(out, s.position);
    out << YAML::Key << "normal" << YAML::Value;
    detail::emit_vec(out, s.normal);
    out << YAML::Key << "sensor_id" << YAML::Value << s.sensor_id;
    out << YAML::Key << "channel_id" << YAML::Value << s.channel_id;
    out << YAML::Key << "group_id" << YAML::Value << s.group_id;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

inline void save_setup(const Setup& setup, const fs::path& path) { write_file(path, serialize_setup(setup)); }

inline Setup load_setup(const fs::path& path, Diagnostics* diag = nullptr) {
  const detail::NodeReader r(path.string(), diag);
  const YAML::Node root = detail::parse_document(path, "mrxsetup", r);
  r.check_keys(root, {"format", "version", "dim", "roi", "coils", "sensors"}, "setup");

  Setup setup;
  setup.dim = static_cast<int>(r.integer(r.require(root, "dim", ""), "dim"));

  const YAML::Node roi = r.require(root, "roi", "");
  if (!roi.IsMap()) r.fail(roi, "section 'roi': expected a map with x, y, z");
  r.check_keys(roi, {"x", "y", "z"}, "roi");
  setup.roi.x = r.interval(r.require(roi, "x", "roi"), "roi.x");
  setup.roi.y = r.interval(r.require(roi, "y", "roi"), "roi.y");
  setup.roi.z = r.interval(r.require(roi, "z", "roi"), "roi.z");

  const YAML::Node coils = r.require(root, "coils", "");
  if (!coils.IsSequence()) r.fail(coils, "section 'coils': expected a list");
  for (std::size_t i = 0; i < coils.size(); ++i) {
    const YAML::Node n = coils[i];
    const std::string where = fmt::format("coils[{}]", i + 1);
    if (!n.IsMap()) r.fail(n, fmt::format("{}: expected a map", where));
    r.check_keys(n, {"position", "normal", "segments"}, where);
    Coil c;
    c.position = r.vec3(r.require(n, "position", where), where + ".position");
    c.normal = r.normal(r.require(n, "normal", where), where + ".normal");
    if (const YAML::Node seg = n["segments"]) {
      if (!seg.IsSequence()) r.fail(seg, fmt::format("{}.segments: expected a list of points", where));
      std::vector<Vec3> pts;
      for (const auto& p : seg) pts.push_back(r.vec3(p, where + ".segments"));
      c.segments = std::move(pts);
    }
    setup.coils.push_back(std::move(c));
  }

  const YAML::Node sensors = r.require(root, "sensors", "");
  if (!sensors.IsSequence()) r.fail(sensors, "section 'sensors': expected a list");
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    const YAML::Node n = sensors[i];
    const std::string where = fmt::format("sensors[{}]", i + 1);
    if (!n.IsMap()) r.fail(n, fmt::format("{}: expected a map", where));
    r.check_keys(n, {"position", "normal", "sensor_id", "channel_id", "group_id"}, where);
    Sensor s;
    s.position = r.vec3(r.require(n, "position", where), where + ".position");
    s.normal = r.normal(r.require(n, "normal", where), where + ".normal");
    s.sensor_id = static_cast<int>(r.integer(r.require(n, "sensor_id", where), where + ".sensor_id"));
    s.channel_id = static_cast<int>(r.integer(r.require(n, "channel_id", where), where + ".channel_id"));
    s.group_id = static_cast<int>(r.integer(r.require(n, "group_id", where), where + ".group_id"));
    setup.sensors.push_back(s);
  }
  return setup;
}

inline std::string serialize_config(const Config& config) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "format" << YAML::Value << "mrxcfg";
  out << YAML::Key << "version" << YAML::Value << kNativeSchemaVersion;
  out << YAML::Key << "res" << YAML::Value << YAML::Flow << YAML::BeginSeq << config.res[0] << config.res[1]
      << config.res[2] << YAML::EndSeq;
  out << YAML::Key << "active_coils" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (auto i : config.active_coils) out << i + 1;
  out << YAML::EndSeq;
  out << YAML::Key << "active_sensors" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (auto i : config.active_sensors) out << i + 1;
  out << YAML::EndSeq;
  out << YAML::Key << "current_pattern" << YAML::Value;
  if (config.current_pattern.rows() == 0) {
    out << YAML::Flow << YAML::BeginSeq << YAML::EndSeq;
  } else {
    out << YAML::BeginSeq;
    for (Eigen::Index p = 0; p < config.current_pattern.rows(); ++p) {
      out << YAML::Flow << YAML::BeginSeq;
      for (Eigen::Index c = 0; c < config.current_pattern.cols(); ++c) out << detail::num(config.current_pattern(p, c));
      out << YAML::EndSeq;
    }
    out << YAML::EndSeq;
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

inline void save_config(const Config& config, const fs::path& path) { write_file(path, serialize_config(config)); }

inline Config load_config(const fs::path& path, Diagnostics* diag = nullptr) {
  const detail::NodeReader r(path.string(), diag);
  const YAML::Node root = detail::parse_document(path, "mrxcfg", r);
  r.check_keys(root, {"format", "version", "res", "active_coils", "active_sensors", "current_pattern"}, "config");

  Config config;
  const YAML::Node res = r.require(root, "res", "");
  if (!res.IsSequence() || res.size() != 3) r.fail(res, "field 'res': expected [nx, ny, nz]");
  for (int a = 0; a < 3; ++a) config.res[a] = static_cast<int>(r.integer(res[a], "res"));

  config.active_coils = r.indices(r.require(root, "active_coils", ""), "active_coils");
  config.active_sensors = r.indices(r.require(root, "active_sensors", ""), "active_sensors");

  const YAML::Node pattern = r.require(root, "current_pattern", "");
  if (!pattern.IsSequence()) r.fail(pattern, "field 'current_pattern': expected a list of rows");
  const std::size_t rows = pattern.size();
  const std::size_t cols = rows > 0 && pattern[0].IsSequence() ? pattern[0].size() : 0;
  config.current_pattern = RowMatrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t p = 0; p < rows; ++p) {
    const YAML::Node row = pattern[p];
    if (!row.IsSequence() || row.size() != cols) {
      r.fail(row, fmt::format("current_pattern row {}: expected {} currents", p + 1, cols));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      config.current_pattern(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(c)) =
          r.number(row[c], "current_pattern");
    }
  }
  return config;
}

}  // namespace mrx::io
