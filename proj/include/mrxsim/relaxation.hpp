#pragma once

// Particle response seen by the sensors and assembly of the linear forward
// operator. Per-coil raw blocks are computed at unit current and combined
// with a current pattern afterwards.

#include <mrxsim/errors.hpp>
#include <mrxsim/fields.hpp>
#include <mrxsim/fingerprint.hpp>
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

// kappa * n . (K(x - w) b) for a sensor at x with normal n, particles at w
// magnetized by field b.
inline double sensor_response(const Sensor& sensor, const Vec3& w, const Vec3& b_coil, double kernel_prefactor) {
  const Vec3 r = sensor.position - w;
  if (r == Vec3::Zero()) {
    throw GeometryError(fmt::format("sensor {} lies on a voxel center {}", sensor.sensor_id, to_string(w)));
  }
  return kernel_prefactor * sensor.normal.dot(dipole_kernel(r) * b_coil);
}

// Unit-current response blocks, one (sensors x voxels) matrix per active coil.
struct SystemMatrixRaw {
  std::vector<RowMatrix> blocks;
  VoxelGrid grid;
  std::vector<std::size_t> active_coils;    // 0-based setup indices
  std::vector<std::size_t> active_sensors;  // 0-based setup indices
  Fingerprint fingerprint;
  std::vector<std::string> warnings;
};

// Stacked operator: row p*S + s is sensor s under pattern p.
struct SystemMatrix {
  RowMatrix matrix;
  std::size_t num_patterns = 0;
  VoxelGrid grid;
  std::vector<std::size_t> active_coils;
  std::vector<std::size_t> active_sensors;
  Fingerprint fingerprint;
};

// Response blocks from precomputed excitation fields.
inline SystemMatrixRaw assemble_raw(const Setup& setup, const Config& config, const ExcitationFieldSet& fields,
                                    const PhysicsParams& physics, const ExecPolicy& exec = {}) {
  const VoxelGrid& grid = fields.grid;
  const std::size_t n_coils = fields.fields.size();
  const std::size_t n_sensors = config.active_sensors.size();
  const double weight = grid.quadrature_weight();

  for (auto idx : config.active_sensors) {
    if (idx >= setup.sensors.size()) throw ValidationError({fmt::format("sensor index out of range: {}", idx + 1)});
  }

  SystemMatrixRaw raw;
  raw.grid = grid;
  raw.active_coils = fields.active_coils;
  raw.active_sensors = config.active_sensors;
  raw.fingerprint = fingerprint(setup, grid.res, physics);
  raw.warnings = fields.warnings;
  raw.blocks.assign(n_coils, RowMatrix(static_cast<Eigen::Index>(n_sensors), static_cast<Eigen::Index>(grid.size())));

  parallel_for(n_coils * n_sensors, exec, [&](std::size_t task) {
    const std::size_t c = task / n_sensors;
    const std::size_t s = task % n_sensors;
    const Sensor& sensor = setup.sensors[config.active_sensors[s]];
    const auto& field = fields.fields[c];
    RowMatrix& block = raw.blocks[c];
    for (std::size_t v = 0; v < grid.size(); ++v) {
      block(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(v)) =
          sensor_response(sensor, grid.centers[v], field[v], physics.kernel_prefactor) * weight;
    }
  });
  return raw;
}

// voxel grid -> excitation fields -> response blocks.
inline SystemMatrixRaw system_matrix_raw(const Setup& setup, const Config& config, const PhysicsParams& physics,
                                         const ExecPolicy& exec = {}) {
  require_valid(setup, config);
  const VoxelGrid grid = create_voxel_grid(setup.roi, config.res);
  const ExcitationFieldSet fields = create_excitation_fields(setup, config, grid, physics, exec);
  return assemble_raw(setup, config, fields, physics, exec);
}

inline SystemMatrix apply_current_pattern(const SystemMatrixRaw& raw, const RowMatrix& pattern) {
  const std::size_t n_coils = raw.blocks.size();
  if (static_cast<std::size_t>(pattern.cols()) != n_coils) {
    throw std::invalid_argument(fmt::format("apply_current_pattern: pattern has {} columns for {} raw blocks",
                                            pattern.cols(), n_coils));
  }
  const Eigen::Index n_sensors = static_cast<Eigen::Index>(raw.active_sensors.size());
  const Eigen::Index n_voxels = static_cast<Eigen::Index>(raw.grid.size());
  for (const auto& b : raw.blocks) {
    if (b.rows() != n_sensors || b.cols() != n_voxels) {
      throw std::invalid_argument("apply_current_pattern: raw block shape mismatch");
    }
  }

  SystemMatrix out;
  out.num_patterns = static_cast<std::size_t>(pattern.rows());
  out.grid = raw.grid;
  out.active_coils = raw.active_coils;
  out.active_sensors = raw.active_sensors;
  out.fingerprint = raw.fingerprint;
  out.matrix = RowMatrix::Zero(pattern.rows() * n_sensors, n_voxels);

  for (Eigen::Index p = 0; p < pattern.rows(); ++p) {
    auto rows = out.matrix.middleRows(p * n_sensors, n_sensors);
    for (std::size_t c = 0; c < n_coils; ++c) {
      const double current = pattern(p, static_cast<Eigen::Index>(c));
      for (Eigen::Index s = 0; s < n_sensors; ++s) {
        for (Eigen::Index v = 0; v < n_voxels; ++v) rows(s, v) += current * raw.blocks[c](s, v);
      }
    }
  }
  return out;
}

inline SystemMatrix create_system_matrix(const Setup& setup, const Config& config, const PhysicsParams& physics,
                                         const ExecPolicy& exec = {}) {
  return apply_current_pattern(system_matrix_raw(setup, config, physics, exec), config.current_pattern);
}

inline Vector forward_apply(const SystemMatrix& a, const Vector& concentration) {
  if (concentration.size() != a.matrix.cols()) {
    throw std::invalid_argument(fmt::format("forward_apply: {} concentrations for {} voxels", concentration.size(),
                                            a.matrix.cols()));
  }
  if (!concentration.allFinite()) throw std::invalid_argument("forward_apply: non-finite concentration");
  Vector y(a.matrix.rows());
  for (Eigen::Index r = 0; r < a.matrix.rows(); ++r) {
    double acc = 0.0;
    for (Eigen::Index v = 0; v < a.matrix.cols(); ++v) acc += a.matrix(r, v) * concentration[v];
    y[r] = acc;
  }
  return y;
}

}  // namespace mrx
