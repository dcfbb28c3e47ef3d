// Export unit-current blocks once, then build the matrix of a smaller
// configuration from a subset of them without recomputing any field.
#include <mrxsim/mrxsim.hpp>

#include <filesystem>

#include <fmt/format.h>

int main(int argc, char** argv) {
  namespace fs = std::filesystem;
  const fs::path dir = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "mrxsim_raw_sample";
  fs::remove_all(dir);

  const mrx::Setup setup = mrx::presets::default3d();
  const mrx::Config full = mrx::presets::single_sequential(setup, {5, 5, 3});
  const mrx::PhysicsParams physics;

  const mrx::SystemMatrixRaw raw = mrx::system_matrix_raw(setup, full, physics);
  const auto manifest = mrx::io::export_raw(raw, dir);
  fmt::print("exported {} blocks to {}\n", manifest.coils.size(), dir.string());

  mrx::Config sub = full;
  sub.active_coils = {0, 6, 12, 18, 24};
  sub.active_sensors = {0, 1, 2, 3, 4};
  sub.current_pattern = mrx::create_current_pattern("pairwise", 5, 1.0);

  const auto imported = mrx::io::import_raw(dir, sub.active_coils, sub.active_sensors,
                                            mrx::fingerprint(setup, sub.res, physics));
  const mrx::SystemMatrix a = mrx::apply_current_pattern(imported, sub.current_pattern);
  const mrx::SystemMatrix direct = mrx::create_system_matrix(setup, sub, physics);
  fmt::print("recombined {}x{}, identical to direct assembly: {}\n", a.matrix.rows(), a.matrix.cols(),
             mrx::same_matrix(a.matrix, direct.matrix) ? "yes" : "no");
  return 0;
}
