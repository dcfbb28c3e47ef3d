#pragma once

// Synthetic measurements: a phantom scaled to a particle amount, pushed
// through the forward operator and reported in femtotesla.

#include <mrxsim/io_dataset.hpp>
#include <mrxsim/model.hpp>
#include <mrxsim/phantom.hpp>
#include <mrxsim/relaxation.hpp>

#include <stdexcept>
#include <vector>

#include <fmt/format.h>

namespace mrx {

inline constexpr double kTeslaToFemtotesla = 1e15;
inline constexpr double kMilligramToKilogram = 1e-6;

// c_v = chi * mass * p_v / (sum(p) * V), so the total susceptibility-weighted
// mass on the grid is chi * mass independent of the resolution.
inline Vector phantom_concentration(const Phantom& phantom, double quadrature_weight, double chi, double mass_mg) {
  if (!(chi > 0.0)) throw std::invalid_argument("simulate_measurement: chi must be positive");
  if (!(mass_mg > 0.0)) throw std::invalid_argument("simulate_measurement: particle mass must be positive");
  const double total = phantom.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw std::invalid_argument("simulate_measurement: phantom has no positive total (all-zero phantom)");
  }
  const double scale = chi * (mass_mg * kMilligramToKilogram) / (total * quadrature_weight);
  return scale * phantom.as_vector();
}

inline Vector simulate_measurement(const SystemMatrix& a, const Phantom& phantom, double chi, double mass_mg) {
  if (phantom.res != a.grid.res) {
    throw std::invalid_argument(fmt::format("simulate_measurement: phantom resolution {} does not match grid {}",
                                            to_string(phantom.res), to_string(a.grid.res)));
  }
  const Vector c = phantom_concentration(phantom, a.grid.quadrature_weight(), chi, mass_mg);
  return forward_apply(a, c) * kTeslaToFemtotesla;
}

inline Vector simulate_measurement(const Setup& setup, const Config& config, const PhysicsParams& physics,
                                   const Phantom& phantom, double chi, double mass_mg, const ExecPolicy& exec = {}) {
  if (phantom.res != config.res) {
    throw std::invalid_argument(fmt::format("simulate_measurement: phantom resolution {} does not match config {}",
                                            to_string(phantom.res), to_string(config.res)));
  }
  // Validate the scalar inputs before paying for assembly.
  (void)phantom_concentration(phantom, 1.0, chi, mass_mg);
  return simulate_measurement(create_system_matrix(setup, config, physics, exec), phantom, chi, mass_mg);
}

// Currents of a sequential (diagonal, one coil per pattern) current pattern.
inline std::vector<double> sequential_currents(const RowMatrix& pattern) {
  if (pattern.rows() != pattern.cols()) {
    throw std::invalid_argument("only sequential patterns (one coil per pattern) can be stored as dataset currents");
  }
  std::vector<double> out;
  for (Eigen::Index i = 0; i < pattern.rows(); ++i) {
    for (Eigen::Index j = 0; j < pattern.cols(); ++j) {
      if (i != j && pattern(i, j) != 0.0) {
        throw std::invalid_argument("only sequential patterns (one coil per pattern) can be stored as dataset currents");
      }
    }
    out.push_back(pattern(i, i));
  }
  return out;
}

// Relax-table rows for a measurement vector ordered like the system matrix
// rows; CoilNo counts the active coils from 1.
inline std::vector<io::MeasurementRecord> measurement_records(const Setup& setup, const Config& config,
                                                              const Vector& y_ft) {
  const std::size_t n_sensors = config.active_sensors.size();
  if (static_cast<std::size_t>(y_ft.size()) != n_sensors * static_cast<std::size_t>(config.current_pattern.rows())) {
    throw std::invalid_argument("measurement_records: vector length does not match patterns x sensors");
  }
  std::vector<io::MeasurementRecord> out;
  out.reserve(static_cast<std::size_t>(y_ft.size()));
  for (Eigen::Index r = 0; r < y_ft.size(); ++r) {
    const std::size_t p = static_cast<std::size_t>(r) / n_sensors;
    const Sensor& s = setup.sensors[config.active_sensors[static_cast<std::size_t>(r) % n_sensors]];
    out.push_back({y_ft[r], s.sensor_id, s.channel_id, s.group_id, static_cast<int>(p + 1)});
  }
  return out;
}

// The setup restricted to the active coils and sensors of a config.
inline Setup active_subsetup(const Setup& setup, const Config& config) {
  Setup sub;
  sub.dim = setup.dim;
  sub.roi = setup.roi;
  for (auto i : config.active_coils) sub.coils.push_back(setup.coils.at(i));
  for (auto i : config.active_sensors) sub.sensors.push_back(setup.sensors.at(i));
  return sub;
}

}  // namespace mrx
