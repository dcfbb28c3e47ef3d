#pragma once

// Experiment geometry (setup), simulation parameters (config), construction
// helpers for coils/sensors and the validators for both.

#include <mrxsim/errors.hpp>
#include <mrxsim/types.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

namespace mrx {

inline constexpr double kUnitNormalTolerance = 1e-9;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
  bool degenerate() const { return lo == hi; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

// Axis-aligned region of interest in meters.
struct Roi {
  Interval x;
  Interval y;
  Interval z;

  const Interval& axis(int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  Interval& axis(int i) { return i == 0 ? x : (i == 1 ? y : z); }

  friend bool operator==(const Roi&, const Roi&) = default;
};

struct Coil {
  Vec3 position = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  // Conductor polyline; consecutive points form the segments.
  std::optional<std::vector<Vec3>> segments;

  friend bool operator==(const Coil& a, const Coil& b) {
    return a.position == b.position && a.normal == b.normal && a.segments == b.segments;
  }
};

struct Sensor {
  Vec3 position = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  int sensor_id = 0;
  int channel_id = 0;
  int group_id = 0;

  friend bool operator==(const Sensor& a, const Sensor& b) {
    return a.position == b.position && a.normal == b.normal && a.sensor_id == b.sensor_id &&
           a.channel_id == b.channel_id && a.group_id == b.group_id;
  }
};

struct Setup {
  int dim = 3;
  Roi roi;
  std::vector<Coil> coils;
  std::vector<Sensor> sensors;

  friend bool operator==(const Setup&, const Setup&) = default;
};

// Active coil/sensor lists hold 0-based indices into the setup; every file
// format and report uses 1-based numbering instead.
struct Config {
  Resolution res{1, 1, 1};
  // One row per pattern, one column per active coil, amperes.
  RowMatrix current_pattern;
  std::vector<std::size_t> active_coils;
  std::vector<std::size_t> active_sensors;

  friend bool operator==(const Config& a, const Config& b) {
    return a.res == b.res && same_matrix(a.current_pattern, b.current_pattern) &&
           a.active_coils == b.active_coils && a.active_sensors == b.active_sensors;
  }
};

struct PhysicsParams {
  double theta = 1e-7;                    // Biot-Savart prefactor mu0/(4 pi), T*m/A
  double kernel_prefactor = 1.0 / 3.0;    // magnetization factor applied to the sensor kernel
};

struct EntityPlacement {
  Vec3 position;
  Vec3 normal;
};

inline Vec3 normalized_or_throw(const Vec3& v, std::string_view what) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::invalid_argument(fmt::format("{}: normal must be a nonzero finite vector", what));
  }
  return v / n;
}

// n_points equidistant placements from p_start to p_end, endpoints included.
inline std::vector<EntityPlacement> create_entity_array(const Vec3& p_start, const Vec3& p_end,
                                                        const Vec3& normal, int n_points) {
  if (n_points < 2) throw std::invalid_argument("create_entity_array: n_points must be >= 2");
  if (p_start == p_end) throw std::invalid_argument("create_entity_array: coincident endpoints");
  const Vec3 n = normalized_or_throw(normal, "create_entity_array");

  std::vector<EntityPlacement> out;
  out.reserve(static_cast<std::size_t>(n_points));
  const Vec3 delta = p_end - p_start;
  const double last = static_cast<double>(n_points - 1);
  for (int i = 0; i < n_points; ++i) {
    Vec3 p = (i == n_points - 1) ? p_end : Vec3(p_start + (static_cast<double>(i) / last) * delta);
    out.push_back({p, n});
  }
  return out;
}

// Closed regular polygon of n_segments sides in the z=0 plane, counterclockwise
// seen from +z; the first point is repeated at the end.
inline std::vector<Vec3> create_coil_loop(double radius, int n_segments) {
  if (!(radius > 0.0)) throw std::invalid_argument("create_coil_loop: radius must be positive");
  if (n_segments < 3) throw std::invalid_argument("create_coil_loop: need at least 3 segments");

  std::vector<Vec3> pts;
  pts.reserve(static_cast<std::size_t>(n_segments) + 1);
  for (int k = 0; k < n_segments; ++k) {
    const double phi = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n_segments);
    pts.emplace_back(radius * std::cos(phi), radius * std::sin(phi), 0.0);
  }
  pts.push_back(pts.front());
  return pts;
}

// Minimal rotation taking +z onto the direction of `normal`. The antiparallel
// case is fixed to a half turn about the x-axis.
inline Mat3 rotation_from_z(const Vec3& normal) {
  const Vec3 n = normalized_or_throw(normal, "rotation_from_z");
  const Vec3 k(-n.y(), n.x(), 0.0);  // z x n
  const double c = n.z();
  const double k2 = k.squaredNorm();

  if (k2 == 0.0) {
    if (c > 0.0) return Mat3::Identity();
    return Eigen::Vector3d(1.0, -1.0, -1.0).asDiagonal();
  }

  Mat3 kx;
  kx << 0.0, -k.z(), k.y(),
        k.z(), 0.0, -k.x(),
        -k.y(), k.x(), 0.0;
  // 1/(1+c); for c < 0 use |k|^2 = 1 - c^2 to avoid cancellation near -z.
  const double f = c >= 0.0 ? 1.0 / (1.0 + c) : (1.0 - c) / k2;
  return Mat3::Identity() + kx + f * (kx * kx);
}

inline std::vector<Vec3> relocate_structure(std::span<const Vec3> points, const Vec3& position,
                                            const Vec3& normal) {
  const Mat3 rot = rotation_from_z(normal);
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const auto& p : points) out.emplace_back(rot * p + position);
  return out;
}

// Attach the relocated template polyline to every coil.
inline std::vector<Coil> parse_coils(std::span<const Coil> coils, std::span<const Vec3> coil_template) {
  if (coil_template.empty()) throw std::invalid_argument("parse_coils: empty coil template");
  std::vector<Coil> out(coils.begin(), coils.end());
  for (auto& coil : out) coil.segments = relocate_structure(coil_template, coil.position, coil.normal);
  return out;
}

inline Roi get_roi(std::span<const Vec3> voxel_centers, const Vec3& voxel_size) {
  if (voxel_centers.empty()) throw std::invalid_argument("get_roi: empty voxel list");
  if ((voxel_size.array() < 0.0).any()) throw std::invalid_argument("get_roi: negative voxel size");
  Vec3 lo = voxel_centers.front();
  Vec3 hi = voxel_centers.front();
  for (const auto& c : voxel_centers) {
    lo = lo.cwiseMin(c);
    hi = hi.cwiseMax(c);
  }
  Roi roi;
  for (int a = 0; a < 3; ++a) {
    const double half = voxel_size[a] / 2.0;
    roi.axis(a) = {lo[a] - half, hi[a] + half};
  }
  return roi;
}

// Named current patterns: "sequential" (scaled identity), "uniform" (all
// coils at once) and "pairwise" (+I on coil i, -I on coil i+1).
inline RowMatrix create_current_pattern(std::string_view preset, int n_coils, double amplitude) {
  if (n_coils < 1) throw std::invalid_argument("create_current_pattern: n_coils must be >= 1");
  if (amplitude == 0.0 || !std::isfinite(amplitude)) {
    throw std::invalid_argument("create_current_pattern: amplitude must be finite and nonzero");
  }
  if (preset == "sequential") {
    RowMatrix p = RowMatrix::Zero(n_coils, n_coils);
    for (int i = 0; i < n_coils; ++i) p(i, i) = amplitude;
    return p;
  }
  if (preset == "uniform") return RowMatrix::Constant(1, n_coils, amplitude);
  if (preset == "pairwise") {
    if (n_coils < 2) throw std::invalid_argument("create_current_pattern: pairwise needs >= 2 coils");
    RowMatrix p = RowMatrix::Zero(n_coils - 1, n_coils);
    for (int i = 0; i + 1 < n_coils; ++i) {
      p(i, i) = amplitude;
      p(i, i + 1) = -amplitude;
    }
    return p;
  }
  throw std::invalid_argument(fmt::format("create_current_pattern: unknown preset '{}'", preset));
}

struct ValidationReport {
  std::vector<std::string> violations;
  std::vector<std::string> warnings;

  bool ok() const { return violations.empty(); }
  void fail(std::string msg) { violations.push_back(std::move(msg)); }
  void warn(std::string msg) { warnings.push_back(std::move(msg)); }

  void throw_if_failed() const {
    if (!ok()) throw ValidationError(violations);
  }
};

namespace detail {

inline bool unit_length(const Vec3& n) { return std::abs(n.norm() - 1.0) <= kUnitNormalTolerance; }

template <class Entity>
void check_entity(ValidationReport& report, const Entity& e, std::string_view kind, std::size_t idx) {
  if (!is_finite(e.position) || !is_finite(e.normal)) {
    report.fail(fmt::format("non-finite coordinates, {} {}", kind, idx + 1));
    return;
  }
  if (!unit_length(e.normal)) report.fail(fmt::format("non-unit normal, {} {}", kind, idx + 1));
}

template <class Indices>
bool strictly_increasing(const Indices& idx) {
  return std::adjacent_find(idx.begin(), idx.end(), [](auto a, auto b) { return a >= b; }) == idx.end();
}

}  // namespace detail

inline ValidationReport validate_setup(const Setup& setup) {
  ValidationReport report;
  if (setup.dim != 2 && setup.dim != 3) report.fail(fmt::format("invalid dimension {}", setup.dim));

  static constexpr const char* kAxis[] = {"x", "y", "z"};
  for (int a = 0; a < 3; ++a) {
    const auto& iv = setup.roi.axis(a);
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi)) {
      report.fail(fmt::format("non-finite coordinates, roi {}", kAxis[a]));
    } else if (iv.lo > iv.hi) {
      report.fail(fmt::format("roi {}: lower bound exceeds upper bound", kAxis[a]));
    }
  }

  if (setup.coils.empty()) report.fail("no coils");
  if (setup.sensors.empty()) report.fail("no sensors");

  for (std::size_t i = 0; i < setup.coils.size(); ++i) {
    const auto& coil = setup.coils[i];
    detail::check_entity(report, coil, "coil", i);
    if (!coil.segments) continue;
    const auto& seg = *coil.segments;
    if (seg.size() < 2) {
      report.fail(fmt::format("coil {}: fewer than 2 segment points", i + 1));
      continue;
    }
    if (!std::all_of(seg.begin(), seg.end(), [](const Vec3& p) { return is_finite(p); })) {
      report.fail(fmt::format("non-finite coordinates, coil {} segments", i + 1));
    } else if (std::adjacent_find(seg.begin(), seg.end()) != seg.end()) {
      report.fail(fmt::format("coil {}: repeated consecutive segment point", i + 1));
    }
  }

  std::set<int> ids;
  for (std::size_t i = 0; i < setup.sensors.size(); ++i) {
    const auto& sensor = setup.sensors[i];
    detail::check_entity(report, sensor, "sensor", i);
    if (!ids.insert(sensor.sensor_id).second) {
      report.fail(fmt::format("duplicate sensor id {}", sensor.sensor_id));
    }
  }

  if (setup.dim == 2) {
    const double z = setup.roi.z.lo;
    bool coherent = setup.roi.z.degenerate();
    for (const auto& c : setup.coils) coherent = coherent && c.position.z() == z;
    for (const auto& s : setup.sensors) coherent = coherent && s.position.z() == z;
    if (!coherent) {
      report.fail("2D z-coherence: all coils, sensors and the roi must share one z layer");
    }
  }
  return report;
}

inline ValidationReport validate_config(const Config& config) {
  ValidationReport report;
  if (std::any_of(config.res.begin(), config.res.end(), [](int n) { return n <= 0; })) {
    report.fail(fmt::format("nonpositive resolution {}", to_string(config.res)));
  }
  const auto& pattern = config.current_pattern;
  if (pattern.rows() == 0 || pattern.cols() == 0) {
    report.fail("empty pattern");
  } else if (!pattern.allFinite()) {
    report.fail("non-finite current in pattern");
  }
  if (static_cast<std::size_t>(pattern.cols()) != config.active_coils.size()) {
    report.fail(fmt::format("pattern/coil mismatch: {} pattern columns for {} active coils",
                            pattern.cols(), config.active_coils.size()));
  }
  if (config.active_coils.empty()) report.fail("no active coils");
  if (config.active_sensors.empty()) report.fail("no active sensors");
  if (!detail::strictly_increasing(config.active_coils)) {
    report.fail("active coil indices must be strictly increasing without duplicates");
  }
  if (!detail::strictly_increasing(config.active_sensors)) {
    report.fail("active sensor indices must be strictly increasing without duplicates");
  }
  return report;
}

inline ValidationReport check_compatibility(const Setup& setup, const Config& config) {
  ValidationReport report;
  for (auto idx : config.active_coils) {
    if (idx >= setup.coils.size()) {
      report.fail(fmt::format("coil index out of range: {} (setup has {} coils)", idx + 1,
                              setup.coils.size()));
    }
  }
  for (auto idx : config.active_sensors) {
    if (idx >= setup.sensors.size()) {
      report.fail(fmt::format("sensor index out of range: {} (setup has {} sensors)", idx + 1,
                              setup.sensors.size()));
    }
  }
  if (setup.dim == 2) {
    if (config.res[2] != 1) {
      report.fail(fmt::format("2D requires nz=1 (got {})", config.res[2]));
    }
    for (auto idx : config.active_coils) {
      if (idx < setup.coils.size() && setup.coils[idx].segments) {
        report.warn(fmt::format("coil {}: segments ignored in 2D setup, dipole model used", idx + 1));
      }
    }
  }
  return report;
}

// Throws ValidationError unless the setup, the config and their pairing pass.
inline void require_valid(const Setup& setup, const Config& config) {
  ValidationReport all;
  auto s = validate_setup(setup);
  auto c = validate_config(config);
  all.violations = std::move(s.violations);
  all.violations.insert(all.violations.end(), c.violations.begin(), c.violations.end());
  if (all.ok()) {
    auto compat = check_compatibility(setup, config);
    all.violations = std::move(compat.violations);
  }
  all.throw_if_failed();
}

}  // namespace mrx
