// Assemble the default 2D system matrix and simulate a Shepp-Logan slice.
#include <mrxsim/mrxsim.hpp>

#include <fmt/format.h>

int main() {
  const mrx::Setup setup = mrx::presets::default2d();
  const mrx::Resolution res = mrx::presets::default_resolution("default2D");
  const mrx::Config config = mrx::presets::single_sequential(setup, res);

  mrx::require_valid(setup, config);
  const mrx::SystemMatrix a = mrx::create_system_matrix(setup, config, mrx::PhysicsParams{});
  fmt::print("system matrix {}x{}, fingerprint {}\n", a.matrix.rows(), a.matrix.cols(), a.fingerprint.hex());

  const mrx::Phantom phantom = mrx::create_phantom("shepplogan3d", res);
  const mrx::Vector y = mrx::simulate_measurement(a, phantom, 1.0, 1.0);
  for (std::size_t p = 0; p < 3; ++p) {
    fmt::print("pattern {} sensor 1: {:.6g} fT\n", p + 1, y[static_cast<Eigen::Index>(p * setup.sensors.size())]);
  }
  return 0;
}
