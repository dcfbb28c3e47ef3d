#pragma once

// Command-line front end. `run` parses one invocation, executes it and
// returns the process exit code: 0 success, 1 domain/validation error,
// 2 I/O or environment error. stdout only carries the one-line summary of a
// successful command; warnings, reports and timings go to stderr.

#include <mrxsim/errors.hpp>
#include <mrxsim/fields.hpp>
#include <mrxsim/io_common.hpp>
#include <mrxsim/io_dataset.hpp>
#include <mrxsim/io_native.hpp>
#include <mrxsim/io_raw.hpp>
#include <mrxsim/measurement.hpp>
#include <mrxsim/model.hpp>
#include <mrxsim/phantom.hpp>
#include <mrxsim/presets.hpp>
#include <mrxsim/relaxation.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace mrx::cli {

namespace fs = std::filesystem;

inline constexpr const char* kSetupsEnv = "MRXSIM_SETUPS";

struct Options {
  std::string setup;
  std::string config;
  std::string out;
  double theta = 1e-7;
  double kappa = 1.0 / 3.0;
  unsigned threads = 0;
  bool force = false;

  // scaffold
  std::string name;
  std::string preset = "default2D";
  std::string base;
  std::string config_name = "singleSequential";
  // export-raw / import-raw
  bool active_only = false;
  std::string raw_dir;
  // phantom / measure
  std::string phantom;
  std::vector<int> res;
  double chi = 0.0;
  double mass_mg = 0.0;

  PhysicsParams physics() const { return {theta, kappa}; }
  ExecPolicy exec() const { return {threads}; }
};

namespace detail {

class Context {
 public:
  Context(const Options& opt, std::ostream& out, std::ostream& err) : opt_(opt), out_(out), err_(err) {}

  const Options& opt() const { return opt_; }
  std::ostream& out() { return out_; }
  std::ostream& err() { return err_; }

  void flush_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) fmt::print(err_, "warning: {}\n", w);
  }
  void flush_warnings() {
    flush_warnings(diag_.warnings);
    diag_.warnings.clear();
  }

  // A path as given, or <MRXSIM_SETUPS>/<name>/<name>.mrxsetup.
  fs::path setup_path() const {
    if (opt_.setup.empty()) throw std::invalid_argument("--setup is required");
    const fs::path direct(opt_.setup);
    if (fs::exists(direct)) return direct;
    if (const char* base = std::getenv(kSetupsEnv)) {
      const fs::path candidate = fs::path(base) / opt_.setup / (opt_.setup + ".mrxsetup");
      if (fs::exists(candidate)) return candidate;
    }
    throw IoError(fmt::format("setup '{}' not found", opt_.setup));
  }

  fs::path config_path() const {
    if (opt_.config.empty()) throw std::invalid_argument("--config is required");
    const fs::path direct(opt_.config);
    if (!fs::exists(direct)) throw IoError(fmt::format("config '{}' not found", opt_.config));
    return direct;
  }

  fs::path out_path() const {
    if (opt_.out.empty()) throw std::invalid_argument("--out is required");
    return fs::path(opt_.out);
  }

  Setup load_setup() {
    Setup s = io::load_setup(setup_path(), &diag_);
    flush_warnings();
    return s;
  }

  Config load_config() {
    Config c = io::load_config(config_path(), &diag_);
    flush_warnings();
    return c;
  }

  // Prints every violation and throws when the pair is not usable.
  void validate(const Setup& setup, const Config& config) {
    std::vector<std::string> violations;
    auto s = validate_setup(setup);
    auto c = validate_config(config);
    for (auto& v : s.violations) violations.push_back("setup: " + v);
    for (auto& v : c.violations) violations.push_back("config: " + v);
    if (violations.empty()) {
      auto compat = check_compatibility(setup, config);
      for (auto& v : compat.violations) violations.push_back("compatibility: " + v);
    }
    if (!violations.empty()) throw ValidationError(violations);
  }

 private:
  const Options& opt_;
  std::ostream& out_;
  std::ostream& err_;
  Diagnostics diag_;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline void print_matrix_summary(Context& ctx, std::string_view cmd, const SystemMatrix& a) {
  fmt::print(ctx.out(), "{} ok rows={} cols={} patterns={} fingerprint={} out={}\n", cmd, a.matrix.rows(),
             a.matrix.cols(), a.num_patterns, a.fingerprint.hex(), ctx.opt().out);
}

inline int cmd_validate(Context& ctx) {
  const Setup setup = ctx.load_setup();
  const auto s = validate_setup(setup);
  for (const auto& v : s.violations) fmt::print(ctx.err(), "setup: {}\n", v);
  if (ctx.opt().config.empty()) {
    if (!s.ok()) return 1;
    fmt::print(ctx.out(), "setup OK\n");
    return 0;
  }
  const Config config = ctx.load_config();
  const auto c = validate_config(config);
  for (const auto& v : c.violations) fmt::print(ctx.err(), "config: {}\n", v);
  const auto compat = check_compatibility(setup, config);
  for (const auto& v : compat.violations) fmt::print(ctx.err(), "compatibility: {}\n", v);
  ctx.flush_warnings(compat.warnings);
  if (!s.ok() || !c.ok() || !compat.ok()) return 1;
  fmt::print(ctx.out(), "setup OK, config OK, compatible\n");
  return 0;
}

inline int cmd_simulate(Context& ctx) {
  const Setup setup = ctx.load_setup();
  const Config config = ctx.load_config();
  ctx.validate(setup, config);
  const fs::path out = ctx.out_path();

  Stopwatch clock;
  const SystemMatrixRaw raw = system_matrix_raw(setup, config, ctx.opt().physics(), ctx.opt().exec());
  ctx.flush_warnings(raw.warnings);
  const SystemMatrix a = apply_current_pattern(raw, config.current_pattern);
  fmt::print(ctx.err(), "assembled {}x{} system matrix in {:.3f} s\n", a.matrix.rows(), a.matrix.cols(), clock.seconds());

  io::write_system_matrix(a, out, ctx.opt().force);
  print_matrix_summary(ctx, "simulate", a);
  return 0;
}

inline int cmd_export_raw(Context& ctx) {
  const Setup setup = ctx.load_setup();
  Config config = ctx.load_config();
  ctx.validate(setup, config);
  if (!ctx.opt().active_only) {
    // Batch export: every coil and sensor, so any subset can be imported later.
    config.active_coils.clear();
    config.active_sensors.clear();
    for (std::size_t i = 0; i < setup.coils.size(); ++i) config.active_coils.push_back(i);
    for (std::size_t i = 0; i < setup.sensors.size(); ++i) config.active_sensors.push_back(i);
    config.current_pattern = create_current_pattern("sequential", static_cast<int>(setup.coils.size()), 1.0);
  }
  const fs::path out = ctx.out_path();

  Stopwatch clock;
  const SystemMatrixRaw raw = system_matrix_raw(setup, config, ctx.opt().physics(), ctx.opt().exec());
  ctx.flush_warnings(raw.warnings);
  fmt::print(ctx.err(), "assembled {} raw blocks in {:.3f} s\n", raw.blocks.size(), clock.seconds());

  const auto man = io::export_raw(raw, out, ctx.opt().force);
  fmt::print(ctx.out(), "export-raw ok coils={} sensors={} voxels={} fingerprint={} out={}\n", man.coils.size(),
             man.sensors.size(), man.voxel_count, man.fingerprint.hex(), ctx.opt().out);
  return 0;
}

inline int cmd_import_raw(Context& ctx) {
  const Setup setup = ctx.load_setup();
  const Config config = ctx.load_config();
  ctx.validate(setup, config);
  if (ctx.opt().raw_dir.empty()) throw std::invalid_argument("--raw is required");
  const fs::path out = ctx.out_path();

  const Fingerprint expected = fingerprint(setup, config.res, ctx.opt().physics());
  const SystemMatrixRaw raw = io::import_raw(ctx.opt().raw_dir, config.active_coils, config.active_sensors, expected);
  const SystemMatrix a = apply_current_pattern(raw, config.current_pattern);
  io::write_system_matrix(a, out, ctx.opt().force);
  print_matrix_summary(ctx, "import-raw", a);
  return 0;
}

inline Resolution resolution_option(const Options& opt) {
  if (opt.res.size() != 3) throw std::invalid_argument("--res expects three integers nx ny nz");
  return {opt.res[0], opt.res[1], opt.res[2]};
}

inline void write_phantom(const Phantom& ph, const fs::path& prefix, bool overwrite) {
  fs::path txt = prefix;
  txt += ".txt";
  fs::path bin = prefix;
  bin += ".bin";
  for (const auto& p : {txt, bin}) {
    if (!overwrite && fs::exists(p)) throw IoError(fmt::format("'{}' already exists (use --force)", p.string()));
  }
  if (prefix.has_parent_path()) io::ensure_directory(prefix.parent_path());

  std::string t = fmt::format("# phantom {} res {} {} {}\n# i j k value (1-based voxel indices)\n", ph.name, ph.res[0],
                              ph.res[1], ph.res[2]);
  std::string b;
  b.reserve(ph.values.size() * 8);
  for (int k = 0; k < ph.res[2]; ++k) {
    for (int j = 0; j < ph.res[1]; ++j) {
      for (int i = 0; i < ph.res[0]; ++i) {
        t += fmt::format("{} {} {} {:.12g}\n", i + 1, j + 1, k + 1, ph.at(i, j, k));
      }
    }
  }
  for (double v : ph.values) io::put_f64(b, v);
  io::write_file(txt, t);
  io::write_file(bin, b);
}

// Flat little-endian f64 file in grid order.
inline Phantom read_phantom_binary(const fs::path& path, const Resolution& res) {
  const std::string bytes = io::read_text_file(path);
  const std::size_t n = voxel_count(res);
  if (bytes.size() != n * 8) {
    throw FormatError(path.string(), 0,
                      fmt::format("{} bytes do not hold {} voxels of resolution {}", bytes.size(), n, to_string(res)));
  }
  Phantom ph{path.stem().string(), res, std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) ph.values[i] = io::get_f64(bytes, 8 * i);
  return ph;
}

inline int cmd_phantom(Context& ctx) {
  const Resolution res = resolution_option(ctx.opt());
  const Phantom ph = create_phantom(ctx.opt().name, res);
  write_phantom(ph, ctx.out_path(), ctx.opt().force);
  const auto nonzero = std::count_if(ph.values.begin(), ph.values.end(), [](double v) { return v != 0.0; });
  fmt::print(ctx.out(), "phantom ok name={} res={} nonzero={} sum={:.12g} out={}\n", ph.name, to_string(res), nonzero,
             ph.sum(), ctx.opt().out);
  return 0;
}

inline int cmd_measure(Context& ctx) {
  const Setup setup = ctx.load_setup();
  const Config config = ctx.load_config();
  ctx.validate(setup, config);
  const fs::path out = ctx.out_path();
  const auto& opt = ctx.opt();

  if (opt.phantom.empty()) throw std::invalid_argument("--phantom is required");
  const Phantom ph = fs::is_regular_file(opt.phantom) ? read_phantom_binary(opt.phantom, config.res)
                                                      : create_phantom(opt.phantom, config.res);
  const std::vector<double> currents = sequential_currents(config.current_pattern);
  if (!(opt.chi > 0.0)) throw std::invalid_argument("--chi must be positive");
  if (!(opt.mass_mg > 0.0)) throw std::invalid_argument("--mass must be positive");

  const SystemMatrixRaw raw = system_matrix_raw(setup, config, opt.physics(), opt.exec());
  ctx.flush_warnings(raw.warnings);
  const SystemMatrix a = apply_current_pattern(raw, config.current_pattern);
  const Vector y = simulate_measurement(a, ph, opt.chi, opt.mass_mg);

  const Setup sub = active_subsetup(setup, config);
  const auto geometry_problem = io::dataset_geometry_problem(sub);
  std::vector<std::string> names = {io::currents_file("01"), io::relax_file("01")};
  if (!geometry_problem) {
    for (auto name : {io::kSensorsFile, io::kCoilGridFile, io::kCoilTemplateFile, io::kVoxelGridFile}) {
      names.emplace_back(name);
    }
  }
  for (const auto& name : names) {
    if (!opt.force && fs::exists(out / name)) {
      throw IoError(fmt::format("'{}' already exists (use --force)", (out / name).string()));
    }
  }
  const auto records = measurement_records(setup, config, y);
  if (geometry_problem) {
    ctx.flush_warnings({"geometry tables not written: " + *geometry_problem});
    io::write_measurement_tables(currents, records, out);
  } else {
    io::write_dataset_tables(sub, a.grid.centers, currents, records, out);
  }
  fmt::print(ctx.out(), "measure ok phantom={} rows={} coils={} sensors={} tables={} out={}\n", ph.name, y.size(),
             config.active_coils.size(), config.active_sensors.size(), names.size(), opt.out);
  return 0;
}

inline int cmd_export_fields(Context& ctx) {
  const Setup setup = ctx.load_setup();
  const Config config = ctx.load_config();
  ctx.validate(setup, config);
  const fs::path out = ctx.out_path();
  io::ensure_directory(out);

  const VoxelGrid grid = create_voxel_grid(setup.roi, config.res);
  const ExcitationFieldSet fields = create_excitation_fields(setup, config, grid, ctx.opt().physics(), ctx.opt().exec());
  ctx.flush_warnings(fields.warnings);
  for (std::size_t c = 0; c < fields.fields.size(); ++c) {
    const fs::path path = out / fmt::format("coil_{:04}.fields.dat", fields.active_coils[c] + 1);
    if (!ctx.opt().force && fs::exists(path)) {
      throw IoError(fmt::format("'{}' already exists (use --force)", path.string()));
    }
    std::string s = "# x[m] y[m] z[m] Bx[T/A] By[T/A] Bz[T/A]\n";
    for (std::size_t v = 0; v < grid.size(); ++v) {
      const Vec3& p = grid.centers[v];
      const Vec3& b = fields.fields[c][v];
      s += fmt::format("{:.12g} {:.12g} {:.12g} {:.12g} {:.12g} {:.12g}\n", p.x(), p.y(), p.z(), b.x(), b.y(), b.z());
    }
    io::write_file(path, s);
  }
  fmt::print(ctx.out(), "export-fields ok coils={} voxels={} out={}\n", fields.fields.size(), grid.size(),
             ctx.opt().out);
  return 0;
}

inline int cmd_scaffold(Context& ctx) {
  const auto& opt = ctx.opt();
  if (opt.name.empty()) throw std::invalid_argument("scaffold needs a setup name");
  fs::path base = opt.base;
  if (base.empty()) {
    const char* env = std::getenv(kSetupsEnv);
    base = env != nullptr ? fs::path(env) : fs::path("setups");
  }
  const Setup setup = presets::by_name(opt.preset);
  const Resolution res = presets::default_resolution(opt.preset);
  const Config config = presets::single_sequential(setup, res);

  const fs::path root = base / opt.name;
  const fs::path setup_file = root / (opt.name + ".mrxsetup");
  if (!opt.force && fs::exists(setup_file)) {
    throw IoError(fmt::format("'{}' already exists (use --force)", setup_file.string()));
  }
  const fs::path cfg_dir = root / "configs" / fmt::format("{}.{}.{}", res[0], res[1], res[2]) / opt.config_name;
  for (const auto& d : {root, cfg_dir, cfg_dir / "results", root / "raw", root / "scripts"}) io::ensure_directory(d);

  io::save_setup(setup, setup_file);
  io::save_config(config, cfg_dir / "default.mrxcfg");
  const fs::path rel_cfg = fs::path("configs") / cfg_dir.lexically_relative(root / "configs") / "default.mrxcfg";
  io::write_file(root / "README.md",
                 fmt::format("# {}\n\nSetup created from preset `{}`.\n\n"
                             "- `{}.mrxsetup`: setup geometry\n"
                             "- `configs/<nx.ny.nz>/<config>/default.mrxcfg`: configs per resolution\n"
                             "- `configs/.../results/`: results for one setup/config/resolution\n"
                             "- `raw/`: raw block exports (`mrxsim export-raw`)\n"
                             "- `scripts/`: scripts that (re)create this setup\n",
                             opt.name, opt.preset, opt.name));
  io::write_file(root / "scripts" / "simulate.sh",
                 fmt::format("#!/bin/sh\n# Simulate the default config of this setup.\n"
                             "cd \"$(dirname \"$0\")/..\"\n"
                             "mrxsim simulate --setup {}.mrxsetup --config {} --out {}/results/matrix --force\n",
                             opt.name, rel_cfg.generic_string(), rel_cfg.parent_path().generic_string()));
  fmt::print(ctx.out(), "scaffold ok setup={} config={}\n", setup_file.generic_string(),
             (cfg_dir / "default.mrxcfg").generic_string());
  return 0;
}

inline void add_common(CLI::App* sub, Options& opt, bool needs_config) {
  sub->add_option("--setup", opt.setup, "setup file (.mrxsetup) or setup name under $MRXSIM_SETUPS")->required();
  if (needs_config) sub->add_option("--config", opt.config, "config file (.mrxcfg)")->required();
  sub->add_option("--theta", opt.theta, "Biot-Savart prefactor [T m/A]")->capture_default_str();
  sub->add_option("--kappa", opt.kappa, "sensor kernel prefactor")->capture_default_str();
  sub->add_option("--threads", opt.threads, "worker threads (0 = all cores)")->capture_default_str();
  sub->add_flag("--force", opt.force, "overwrite existing outputs");
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  Options opt;
  CLI::App app{"mrxsim - magnetorelaxometry imaging forward simulation"};
  app.require_subcommand(1);

  auto* scaffold = app.add_subcommand("scaffold", "create a setup folder tree from a preset");
  scaffold->add_option("name", opt.name, "setup name")->required();
  scaffold->add_option("--preset", opt.preset, "default2D, default3D or realistic3D")->capture_default_str();
  scaffold->add_option("--base", opt.base, "setups base directory (default $MRXSIM_SETUPS or ./setups)");
  scaffold->add_option("--config-name", opt.config_name, "name of the generated config")->capture_default_str();
  scaffold->add_flag("--force", opt.force, "overwrite existing files");

  auto* validate = app.add_subcommand("validate", "check a setup and optionally a config");
  validate->add_option("--setup", opt.setup, "setup file or name")->required();
  validate->add_option("--config", opt.config, "config file");

  auto* simulate = app.add_subcommand("simulate", "assemble the system matrix");
  detail::add_common(simulate, opt, true);
  simulate->add_option("--out", opt.out, "output directory")->required();

  auto* export_raw = app.add_subcommand("export-raw", "export per-coil unit-current blocks");
  detail::add_common(export_raw, opt, true);
  export_raw->add_option("--out", opt.out, "raw export directory")->required();
  export_raw->add_flag("--active-only", opt.active_only, "export only the config's active coils and sensors");

  auto* import_raw = app.add_subcommand("import-raw", "combine exported blocks into a system matrix");
  detail::add_common(import_raw, opt, true);
  import_raw->add_option("--raw", opt.raw_dir, "raw export directory")->required();
  import_raw->add_option("--out", opt.out, "output directory")->required();

  auto* phantom = app.add_subcommand("phantom", "write a named phantom as text table and flat binary");
  phantom->add_option("name", opt.name, "shepplogan3d, tumor, F_2, P_1 or fwhmdots_<f>")->required();
  phantom->add_option("--res", opt.res, "resolution nx ny nz")->expected(3)->required();
  phantom->add_option("--out", opt.out, "output prefix (.txt and .bin are appended)")->required();
  phantom->add_flag("--force", opt.force, "overwrite existing outputs");

  auto* measure = app.add_subcommand("measure", "simulate a measurement and write dataset tables");
  detail::add_common(measure, opt, true);
  measure->add_option("--phantom", opt.phantom, "phantom name or flat binary file")->required();
  measure->add_option("--chi", opt.chi, "magnetic susceptibility")->required();
  measure->add_option("--mass", opt.mass_mg, "particle mass [mg]")->required();
  measure->add_option("--out", opt.out, "dataset directory")->required();

  auto* export_fields = app.add_subcommand("export-fields", "write excitation fields per active coil");
  detail::add_common(export_fields, opt, true);
  export_fields->add_option("--out", opt.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    fmt::print(err, "error: {}\n", e.what());
    return 1;
  }

  detail::Context ctx(opt, out, err);
  const std::vector<std::pair<CLI::App*, std::function<int(detail::Context&)>>> commands = {
      {scaffold, detail::cmd_scaffold},     {validate, detail::cmd_validate},   {simulate, detail::cmd_simulate},
      {export_raw, detail::cmd_export_raw}, {import_raw, detail::cmd_import_raw}, {phantom, detail::cmd_phantom},
      {measure, detail::cmd_measure},       {export_fields, detail::cmd_export_fields},
  };
  try {
    for (const auto& [sub, fn] : commands) {
      if (sub->parsed()) return fn(ctx);
    }
    return 1;
  } catch (const ValidationError& e) {
    for (const auto& v : e.violations()) fmt::print(err, "{}\n", v);
    return 1;
  } catch (const IoError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return 2;
  } catch (const fs::filesystem_error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return 2;
  } catch (const Error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    fmt::print(err, "error: {}\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return 2;
  }
}

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<const char*> argv;
  argv.push_back("mrxsim");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace mrx::cli
