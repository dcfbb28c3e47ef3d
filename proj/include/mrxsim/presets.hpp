#pragma once

// Ready-made setups mirroring the three reference geometries:
//   default2D   - 9 dipole coils left of a 10 cm square, 9 sensors above it
//   default3D   - 5x5 dipole coils below and 5x5 sensors above a 10x10x5 cm box
//   realistic3D - 3x3 segmented circular coils below, 4x4 sensors above

#include <mrxsim/model.hpp>

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

namespace mrx::presets {

namespace detail {

inline std::vector<EntityPlacement> planar_grid(double lo, double hi, int n, double z, const Vec3& normal) {
  std::vector<EntityPlacement> out;
  for (const auto& row : create_entity_array({lo, lo, z}, {lo, hi, z}, normal, n)) {
    auto line = create_entity_array(row.position, {hi, row.position.y(), z}, normal, n);
    out.insert(out.end(), line.begin(), line.end());
  }
  return out;
}

inline std::vector<Sensor> sensors_from(const std::vector<EntityPlacement>& placements, int group_size) {
  std::vector<Sensor> out;
  for (std::size_t i = 0; i < placements.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    out.push_back({placements[i].position, placements[i].normal, id, id, static_cast<int>(i) / group_size + 1});
  }
  return out;
}

inline std::vector<Coil> coils_from(const std::vector<EntityPlacement>& placements) {
  std::vector<Coil> out;
  for (const auto& p : placements) out.push_back({p.position, p.normal, std::nullopt});
  return out;
}

}  // namespace detail

inline Setup default2d() {
  Setup s;
  s.dim = 2;
  s.roi = {{0.0, 0.1}, {0.0, 0.1}, {0.0, 0.0}};
  s.coils = detail::coils_from(create_entity_array({-0.02, 0.01, 0.0}, {-0.02, 0.09, 0.0}, {1.0, 0.0, 0.0}, 9));
  s.sensors = detail::sensors_from(create_entity_array({0.01, 0.12, 0.0}, {0.09, 0.12, 0.0}, {0.0, 1.0, 0.0}, 9), 9);
  return s;
}

inline Setup default3d() {
  Setup s;
  s.dim = 3;
  s.roi = {{0.0, 0.1}, {0.0, 0.1}, {0.0, 0.05}};
  s.coils = detail::coils_from(detail::planar_grid(0.01, 0.09, 5, -0.02, Vec3::UnitZ()));
  s.sensors = detail::sensors_from(detail::planar_grid(0.01, 0.09, 5, 0.08, Vec3::UnitZ()), 5);
  return s;
}

inline Setup realistic3d() {
  Setup s;
  s.dim = 3;
  s.roi = {{0.0, 0.1}, {0.0, 0.1}, {0.0, 0.05}};
  s.coils = parse_coils(detail::coils_from(detail::planar_grid(0.02, 0.08, 3, -0.025, Vec3::UnitZ())),
                        create_coil_loop(0.0125, 16));
  s.sensors = detail::sensors_from(detail::planar_grid(0.0125, 0.0875, 4, 0.075, Vec3::UnitZ()), 4);
  return s;
}

inline Resolution default_resolution(std::string_view name) {
  if (name == "default2D") return {10, 10, 1};
  if (name == "default3D") return {10, 10, 5};
  if (name == "realistic3D") return {6, 6, 3};
  throw std::invalid_argument(fmt::format("unknown preset setup '{}'", name));
}

inline Setup by_name(std::string_view name) {
  if (name == "default2D") return default2d();
  if (name == "default3D") return default3d();
  if (name == "realistic3D") return realistic3d();
  throw std::invalid_argument(fmt::format("unknown preset setup '{}' (default2D, default3D, realistic3D)", name));
}

// Every coil and sensor active, one coil per pattern at `amplitude` amperes.
inline Config single_sequential(const Setup& setup, const Resolution& res, double amplitude = 1.0) {
  Config c;
  c.res = res;
  for (std::size_t i = 0; i < setup.coils.size(); ++i) c.active_coils.push_back(i);
  for (std::size_t i = 0; i < setup.sensors.size(); ++i) c.active_sensors.push_back(i);
  c.current_pattern = create_current_pattern("sequential", static_cast<int>(setup.coils.size()), amplitude);
  return c;
}

}  // namespace mrx::presets
