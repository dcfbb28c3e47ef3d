#pragma once

// Voxelized test phantoms. Grids are addressed in normalized coordinates
// [-1, 1] per axis, with voxel centers at (2 i + 1 - n) / n.

#include <mrxsim/types.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

namespace mrx {

struct EllipsoidSpec {
  double intensity = 1.0;
  std::array<double, 3> semi_axes{1.0, 1.0, 1.0};
  std::array<double, 3> center{0.0, 0.0, 0.0};
  double phi = 0.0;  // rotation about z, radians
};

// Values in x-fastest order, same linearization as VoxelGrid.
struct Phantom {
  std::string name;
  Resolution res{1, 1, 1};
  std::vector<double> values;

  double at(int i, int j, int k) const { return values[index(i, j, k)]; }
  double& at(int i, int j, int k) { return values[index(i, j, k)]; }

  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(res[0]) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(res[1]) * static_cast<std::size_t>(k));
  }

  double sum() const { return std::accumulate(values.begin(), values.end(), 0.0); }

  Vector as_vector() const { return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size())); }
};

// Exact for mirrored indices: u(n-1-i) == -u(i).
inline double normalized_coordinate(int i, int n) {
  return static_cast<double>(2 * i + 1 - n) / static_cast<double>(n);
}

// Center-in-ellipsoid test; points with quadratic form exactly 1 are inside.
inline bool inside_ellipsoid(const EllipsoidSpec& e, double u, double v, double w) {
  const double dx = u - e.center[0];
  const double dy = v - e.center[1];
  const double dz = w - e.center[2];
  const double c = std::cos(e.phi);
  const double s = std::sin(e.phi);
  const double xr = c * dx + s * dy;
  const double yr = -s * dx + c * dy;
  const double qx = xr / e.semi_axes[0];
  const double qy = yr / e.semi_axes[1];
  const double qz = dz / e.semi_axes[2];
  return qx * qx + qy * qy + qz * qz <= 1.0;
}

namespace detail {

inline void check_resolution(const Resolution& res, std::string_view who) {
  for (int n : res) {
    if (n < 1) throw std::invalid_argument(fmt::format("{}: nonpositive resolution {}", who, to_string(res)));
  }
}

inline Phantom empty_phantom(std::string name, const Resolution& res) {
  check_resolution(res, "phantom");
  return Phantom{std::move(name), res, std::vector<double>(voxel_count(res), 0.0)};
}

}  // namespace detail

inline Phantom ellipsoid_phantom(std::span<const EllipsoidSpec> specs, const Resolution& res) {
  Phantom ph = detail::empty_phantom("ellipsoids", res);
  for (const auto& e : specs) {
    if (!(e.semi_axes[0] > 0.0 && e.semi_axes[1] > 0.0 && e.semi_axes[2] > 0.0)) {
      throw std::invalid_argument("ellipsoid_phantom: semi-axes must be positive");
    }
  }
  for (int k = 0; k < res[2]; ++k) {
    const double w = normalized_coordinate(k, res[2]);
    for (int j = 0; j < res[1]; ++j) {
      const double v = normalized_coordinate(j, res[1]);
      for (int i = 0; i < res[0]; ++i) {
        const double u = normalized_coordinate(i, res[0]);
        double acc = 0.0;
        for (const auto& e : specs) {
          if (inside_ellipsoid(e, u, v, w)) acc += e.intensity;
        }
        ph.at(i, j, k) = acc;
      }
    }
  }
  return ph;
}

// Modified (high-contrast) 3D Shepp-Logan table. Only the in-plane angle of
// each ellipsoid is kept.
inline std::vector<EllipsoidSpec> shepp_logan_3d() {
  constexpr double deg = M_PI / 180.0;
  return {
      {1.0, {0.6900, 0.920, 0.810}, {0.00, 0.0000, 0.00}, 0.0},
      {-0.8, {0.6624, 0.874, 0.780}, {0.00, -0.0184, 0.00}, 0.0},
      {-0.2, {0.1100, 0.310, 0.220}, {0.22, 0.0000, 0.00}, -18.0 * deg},
      {-0.2, {0.1600, 0.410, 0.280}, {-0.22, 0.0000, 0.00}, 18.0 * deg},
      {0.1, {0.2100, 0.250, 0.410}, {0.00, 0.3500, -0.15}, 0.0},
      {0.1, {0.0460, 0.046, 0.050}, {0.00, 0.1000, 0.25}, 0.0},
      {0.1, {0.0460, 0.046, 0.050}, {0.00, -0.1000, 0.25}, 0.0},
      {0.1, {0.0460, 0.023, 0.050}, {-0.08, -0.6050, 0.00}, 0.0},
      {0.1, {0.0230, 0.023, 0.020}, {0.00, -0.6060, 0.00}, 0.0},
      {0.1, {0.0230, 0.046, 0.020}, {0.06, -0.6050, 0.00}, 0.0},
  };
}

inline std::vector<EllipsoidSpec> tumor_specs() {
  return {
      {0.2, {0.8, 0.8, 0.8}, {0.0, 0.0, 0.0}, 0.0},
      {1.0, {0.2, 0.2, 0.25}, {0.3, 0.25, 0.0}, 0.0},
  };
}

namespace detail {

// 5x7 block letters, top row first.
inline constexpr std::array<std::string_view, 7> kLetterF = {
    "#####", "#....", "#....", "####.", "#....", "#....", "#...."};
inline constexpr std::array<std::string_view, 7> kLetterP = {
    "####.", "#...#", "#...#", "####.", "#....", "#....", "#...."};

// The letter box covers [0.1, 0.9] of the x-y extent and the middle third of
// the z layers.
inline Phantom letter_phantom(std::string name, const std::array<std::string_view, 7>& glyph, const Resolution& res) {
  Phantom ph = empty_phantom(std::move(name), res);
  const int k_begin = res[2] / 3;
  const int k_end = std::max(k_begin + 1, (2 * res[2] + 2) / 3);
  for (int j = 0; j < res[1]; ++j) {
    const double fy = (j + 0.5) / res[1];
    const double ly = (fy - 0.1) / 0.8;
    if (ly < 0.0 || ly >= 1.0) continue;
    const int row = 6 - static_cast<int>(std::floor(ly * 7.0));
    for (int i = 0; i < res[0]; ++i) {
      const double fx = (i + 0.5) / res[0];
      const double lx = (fx - 0.1) / 0.8;
      if (lx < 0.0 || lx >= 1.0) continue;
      const int col = static_cast<int>(std::floor(lx * 5.0));
      if (glyph[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)] != '#') continue;
      for (int k = k_begin; k < k_end && k < res[2]; ++k) ph.at(i, j, k) = 1.0;
    }
  }
  return ph;
}

// Dot positions along one axis: spacing round(f*n), at least 2 on axes with
// more than one voxel, centered in the axis.
inline std::vector<int> dot_positions(double fraction, int n) {
  if (n == 1) return {0};
  const int spacing = std::max(2, static_cast<int>(std::lround(fraction * n)));
  const int count = (n - 1) / spacing + 1;
  const int start = (n - 1 - spacing * (count - 1)) / 2;
  std::vector<int> pos;
  for (int m = 0; m < count; ++m) pos.push_back(start + m * spacing);
  return pos;
}

inline Phantom fwhm_dots(std::string name, double fraction, const Resolution& res) {
  Phantom ph = empty_phantom(std::move(name), res);
  const auto xs = dot_positions(fraction, res[0]);
  const auto ys = dot_positions(fraction, res[1]);
  const auto zs = dot_positions(fraction, res[2]);
  for (int k : zs) {
    for (int j : ys) {
      for (int i : xs) ph.at(i, j, k) = 1.0;
    }
  }
  return ph;
}

}  // namespace detail

// Named presets: "shepplogan3d", "tumor", "F_2", "P_1", "fwhmdots_<f>".
inline Phantom create_phantom(std::string_view name, const Resolution& res) {
  detail::check_resolution(res, "create_phantom");
  if (name == "shepplogan3d") {
    const auto specs = shepp_logan_3d();
    Phantom ph = ellipsoid_phantom(specs, res);
    ph.name = name;
    return ph;
  }
  if (name == "tumor") {
    const auto specs = tumor_specs();
    Phantom ph = ellipsoid_phantom(specs, res);
    ph.name = name;
    return ph;
  }
  if (name == "F_2") return detail::letter_phantom(std::string(name), detail::kLetterF, res);
  if (name == "P_1") return detail::letter_phantom(std::string(name), detail::kLetterP, res);

  constexpr std::string_view kDots = "fwhmdots_";
  if (name.substr(0, kDots.size()) == kDots) {
    const std::string_view arg = name.substr(kDots.size());
    double fraction = 0.0;
    const auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), fraction);
    if (ec != std::errc{} || ptr != arg.data() + arg.size() || !(fraction > 0.0 && fraction <= 1.0)) {
      throw std::invalid_argument(fmt::format("unknown phantom '{}': dot spacing must be in (0, 1]", name));
    }
    return detail::fwhm_dots(std::string(name), fraction, res);
  }
  throw std::invalid_argument(fmt::format("unknown phantom '{}'", name));
}

}  // namespace mrx
