#pragma once

// Excitation fields of the coils sampled on the voxel grid, at unit current.
// Segmented coils use the closed-form straight-segment Biot-Savart expression;
// coils without segments (and every coil of a 2D setup) are point dipoles.

#include <mrxsim/errors.hpp>
#include <mrxsim/kernel.hpp>
#include <mrxsim/model.hpp>
#include <mrxsim/parallel.hpp>
#include <mrxsim/types.hpp>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>

namespace mrx {

// Voxel centers of a rectilinear grid. Linear index = i + nx*(j + ny*k).
struct VoxelGrid {
  std::vector<Vec3> centers;
  Vec3 voxel_size = Vec3::Zero();  // 0 on degenerate roi axes
  Resolution res{1, 1, 1};
  Roi roi;

  std::size_t size() const { return centers.size(); }

  std::size_t linear_index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(res[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(res[1]) * static_cast<std::size_t>(k));
  }

  // Midpoint-rule weight; a degenerate axis contributes a factor of 1.
  double quadrature_weight() const {
    double w = 1.0;
    for (int a = 0; a < 3; ++a) {
      if (voxel_size[a] > 0.0) w *= voxel_size[a];
    }
    return w;
  }
};

inline VoxelGrid create_voxel_grid(const Roi& roi, const Resolution& res) {
  for (int n : res) {
    if (n < 1) throw std::invalid_argument(fmt::format("create_voxel_grid: nonpositive resolution {}", to_string(res)));
  }
  for (int a = 0; a < 3; ++a) {
    if (!(roi.axis(a).lo <= roi.axis(a).hi)) throw std::invalid_argument("create_voxel_grid: invalid roi");
  }

  VoxelGrid grid;
  grid.res = res;
  grid.roi = roi;
  for (int a = 0; a < 3; ++a) grid.voxel_size[a] = roi.axis(a).length() / res[a];

  grid.centers.reserve(voxel_count(res));
  for (int k = 0; k < res[2]; ++k) {
    for (int j = 0; j < res[1]; ++j) {
      for (int i = 0; i < res[0]; ++i) {
        const int idx[3] = {i, j, k};
        Vec3 c;
        for (int a = 0; a < 3; ++a) c[a] = roi.axis(a).lo + (idx[a] + 0.5) * grid.voxel_size[a];
        grid.centers.push_back(c);
      }
    }
  }
  return grid;
}

inline constexpr double kLineTolerance = 1e-12;

// True when w lies within kLineTolerance*|b-a| of the line through a and b.
inline bool on_segment_line(const Vec3& a, const Vec3& b, const Vec3& w) {
  const Vec3 l = b - a;
  return (w - a).cross(l).norm() < kLineTolerance * l.squaredNorm();
}

// Field at w of a straight conductor from a to b carrying unit current.
// Points on the supporting line get a zero contribution.
inline Vec3 segment_field(const Vec3& a, const Vec3& b, const Vec3& w, double theta) {
  if (a == b) throw GeometryError("segment_field: degenerate segment (a == b)");
  if (on_segment_line(a, b, w)) return Vec3::Zero();

  const Vec3 ra = a - w;
  const Vec3 rb = b - w;
  const double na = ra.norm();
  const double nb = rb.norm();
  const Vec3 cross = ra.cross(rb);
  const double dot = ra.dot(rb);
  // |ra||rb| + ra.rb cancels badly when w is close to the segment; use
  // (|ra||rb|)^2 - (ra.rb)^2 = |ra x rb|^2 there instead.
  const double denom = dot >= 0.0 ? na * nb + dot : cross.squaredNorm() / (na * nb - dot);
  const double scale = theta * (na + nb) / (na * nb) / denom;
  return scale * cross;
}

// Sum of segment contributions in polyline order.
inline Vec3 coil_field(const Coil& coil, const Vec3& w, double theta) {
  if (!coil.segments || coil.segments->size() < 2) {
    throw std::invalid_argument("coil_field: coil has no segment polyline");
  }
  const auto& pts = *coil.segments;
  Vec3 b = Vec3::Zero();
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) b += segment_field(pts[k], pts[k + 1], w, theta);
  return b;
}

// Unit-moment point dipole at the coil position, oriented along its normal.
inline Vec3 dipole_coil_field(const Coil& coil, const Vec3& w, double theta) {
  const Vec3 r = w - coil.position;
  if (r == Vec3::Zero()) {
    throw GeometryError(fmt::format("dipole coil at {} coincides with evaluation point", to_string(coil.position)));
  }
  return theta * (dipole_kernel(r) * coil.normal);
}

enum class CoilModel { Segments, Dipole };

inline CoilModel coil_model(const Setup& setup, const Coil& coil) {
  return (setup.dim == 3 && coil.segments && coil.segments->size() >= 2) ? CoilModel::Segments
                                                                          : CoilModel::Dipole;
}

struct ExcitationFieldSet {
  VoxelGrid grid;
  std::vector<std::size_t> active_coils;      // 0-based setup indices
  std::vector<CoilModel> models;              // per active coil
  std::vector<std::vector<Vec3>> fields;      // [coil][voxel], T/A
  std::vector<std::string> warnings;
};

inline ExcitationFieldSet create_excitation_fields(const Setup& setup, const Config& config,
                                                   const VoxelGrid& grid, const PhysicsParams& physics,
                                                   const ExecPolicy& exec = {}) {
  ExcitationFieldSet out;
  out.grid = grid;
  out.active_coils = config.active_coils;
  out.fields.reserve(config.active_coils.size());

  for (std::size_t idx : config.active_coils) {
    if (idx >= setup.coils.size()) {
      throw ValidationError({fmt::format("coil index out of range: {}", idx + 1)});
    }
    const Coil& coil = setup.coils[idx];
    const CoilModel model = coil_model(setup, coil);
    out.models.push_back(model);

    if (setup.dim == 2 && coil.segments) {
      out.warnings.push_back(fmt::format("coil {}: segments ignored in 2D setup, dipole model used", idx + 1));
    } else if (setup.dim == 3 && model == CoilModel::Dipole) {
      out.warnings.push_back(fmt::format("coil {}: no segments, dipole model used", idx + 1));
    }

    std::vector<Vec3> field(grid.size());
    std::vector<char> on_line(grid.size(), 0);
    parallel_for(grid.size(), exec, [&](std::size_t v) {
      const Vec3& w = grid.centers[v];
      if (model == CoilModel::Dipole) {
        if (w == coil.position) {
          throw GeometryError(fmt::format("coil {}: voxel {} center coincides with the dipole position", idx + 1, v + 1));
        }
        field[v] = dipole_coil_field(coil, w, physics.theta);
        return;
      }
      const auto& pts = *coil.segments;
      for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        if (on_segment_line(pts[k], pts[k + 1], w)) on_line[v] = 1;
      }
      field[v] = coil_field(coil, w, physics.theta);
    });

    const auto hits = std::count(on_line.begin(), on_line.end(), char{1});
    if (hits > 0) {
      out.warnings.push_back(
          fmt::format("coil {}: {} voxel center(s) on a conductor line, contribution zeroed", idx + 1, hits));
    }
    out.fields.push_back(std::move(field));
  }
  return out;
}

}  // namespace mrx
