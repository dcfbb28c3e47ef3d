#pragma once

// Text datasets: sensors.dat, coilGrid.dat, coilTemplate.dat, voxelGrid.dat,
// dataset.<k>.currents.dat and dataset.<k>.relax.dat.
//
// Whitespace-separated numbers, one row per line, lines starting with '#'
// are comments. Reals are written with 12 significant digits.

#include <mrxsim/errors.hpp>
#include <mrxsim/io_common.hpp>
#include <mrxsim/model.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

namespace mrx::io {

inline constexpr std::string_view kSensorsFile = "sensors.dat";
inline constexpr std::string_view kCoilGridFile = "coilGrid.dat";
inline constexpr std::string_view kCoilTemplateFile = "coilTemplate.dat";
inline constexpr std::string_view kVoxelGridFile = "voxelGrid.dat";

inline std::string currents_file(std::string_view tag) { return fmt::format("dataset.{}.currents.dat", tag); }
inline std::string relax_file(std::string_view tag) { return fmt::format("dataset.{}.relax.dat", tag); }

// One row of the relax table.
struct MeasurementRecord {
  double delta_b_ft = 0.0;
  int sensor_id = 0;
  int channel_id = 0;
  int group_id = 0;
  int coil_no = 0;  // 1-based

  friend bool operator==(const MeasurementRecord&, const MeasurementRecord&) = default;
};

struct Dataset {
  Setup setup;
  std::vector<Vec3> voxel_centers;
  Resolution res{1, 1, 1};
  std::vector<double> currents;  // one per coil, sequential activation
  std::vector<MeasurementRecord> measurements;
  std::vector<int> defective_sensors;

  // Diagonal pattern: row i drives coil i with currents[i].
  RowMatrix current_pattern() const {
    const auto n = static_cast<Eigen::Index>(currents.size());
    RowMatrix p = RowMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) p(i, i) = currents[static_cast<std::size_t>(i)];
    return p;
  }

  // All coils, all sensors remaining in the setup.
  Config config() const {
    Config c;
    c.res = res;
    c.current_pattern = current_pattern();
    for (std::size_t i = 0; i < setup.coils.size(); ++i) c.active_coils.push_back(i);
    for (std::size_t i = 0; i < setup.sensors.size(); ++i) c.active_sensors.push_back(i);
    return c;
  }

  // Measurements ordered pattern-major, sensors in setup order (the row
  // order of the simulated system matrix for config()).
  Vector measurement_vector() const {
    std::map<std::pair<int, int>, double> by_key;
    for (const auto& m : measurements) by_key[{m.coil_no, m.sensor_id}] = m.delta_b_ft;
    Vector y(static_cast<Eigen::Index>(setup.coils.size() * setup.sensors.size()));
    Eigen::Index r = 0;
    for (std::size_t c = 0; c < setup.coils.size(); ++c) {
      for (const auto& s : setup.sensors) {
        const auto it = by_key.find({static_cast<int>(c + 1), s.sensor_id});
        if (it == by_key.end()) {
          throw std::invalid_argument(fmt::format("no measurement for coil {} sensor {}", c + 1, s.sensor_id));
        }
        y[r++] = it->second;
      }
    }
    return y;
  }
};

namespace detail {

struct TableRow {
  std::size_t line = 0;
  std::vector<double> values;
};

inline std::vector<TableRow> parse_table(std::string_view text, std::size_t columns, const std::string& file) {
  std::vector<TableRow> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    const auto first = line.find_first_not_of(" \t\r\f\v");
    if (first == std::string_view::npos || line[first] == '#') {
      if (end == text.size()) break;
      continue;
    }
    TableRow row{line_no, {}};
    std::size_t i = first;
    while (i < line.size()) {
      const auto tok_end = std::min(line.find_first_of(" \t\r\f\v", i), line.size());
      const std::string_view tok = line.substr(i, tok_end - i);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc{} || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
        throw FormatError(file, line_no, fmt::format("invalid number '{}'", tok));
      }
      row.values.push_back(v);
      i = line.find_first_not_of(" \t\r\f\v", tok_end);
      if (i == std::string_view::npos) break;
    }
    if (row.values.size() != columns) {
      throw FormatError(file, line_no,
                        fmt::format("column-count mismatch: expected {} columns, found {}", columns, row.values.size()));
    }
    rows.push_back(std::move(row));
    if (end == text.size()) break;
  }
  return rows;
}

inline std::vector<TableRow> read_table(const fs::path& dir, std::string_view name, std::size_t columns) {
  const fs::path path = dir / name;
  return parse_table(read_text_file(path), columns, path.string());
}

inline int as_int(const TableRow& row, std::size_t col, const std::string& file, std::string_view what) {
  const double v = row.values[col];
  if (v != std::floor(v) || std::abs(v) > 2e9) {
    throw FormatError(file, row.line, fmt::format("{} must be an integer, got {}", what, v));
  }
  return static_cast<int>(v);
}

inline std::string real(double v) { return fmt::format("{:.12g}", v); }

inline void append_vec(std::string& out, const Vec3& v) {
  out += real(v.x());
  out += ' ';
  out += real(v.y());
  out += ' ';
  out += real(v.z());
}

// Per-axis spacing of a rectilinear point set and the number of distinct
// coordinates; spacing is 0 on axes with a single coordinate.
inline void infer_grid(const std::vector<Vec3>& centers, Resolution& res, Vec3& spacing) {
  for (int a = 0; a < 3; ++a) {
    std::set<double> uniq;
    for (const auto& c : centers) uniq.insert(c[a]);
    res[a] = static_cast<int>(uniq.size());
    spacing[a] = uniq.size() > 1 ? (*uniq.rbegin() - *uniq.begin()) / static_cast<double>(uniq.size() - 1) : 0.0;
  }
}

}  // namespace detail

// Reason the geometry tables cannot describe `setup`, if any: coilGrid.dat
// stores positions only (normals along +z) and all coils share one template.
inline std::optional<std::string> dataset_geometry_problem(const Setup& setup) {
  std::vector<Vec3> templ;
  const bool segmented = !setup.coils.empty() && setup.coils.front().segments.has_value();
  if (segmented) {
    const Coil& ref = setup.coils.front();
    for (const auto& p : *ref.segments) templ.emplace_back(p - ref.position);
  }
  for (std::size_t i = 0; i < setup.coils.size(); ++i) {
    const Coil& c = setup.coils[i];
    if ((c.normal - Vec3::UnitZ()).norm() > 1e-12) {
      return fmt::format("coil {} normal is not +z; coilGrid.dat cannot represent coil orientation", i + 1);
    }
    bool same = c.segments.has_value() == segmented;
    if (same && segmented) {
      same = c.segments->size() == templ.size();
      for (std::size_t k = 0; same && k < templ.size(); ++k) {
        const Vec3 d = (*c.segments)[k] - c.position - templ[k];
        same = d.norm() <= 1e-12 * (1.0 + templ[k].norm() + c.position.norm());
      }
    }
    if (!same) return fmt::format("coil {} does not share the common coil template", i + 1);
  }
  return std::nullopt;
}

// Currents and relax tables only.
inline void write_measurement_tables(const std::vector<double>& currents,
                                     const std::vector<MeasurementRecord>& measurements, const fs::path& dir,
                                     std::string_view tag = "01") {
  ensure_directory(dir);
  std::string s = "# current[A]\n";
  for (double i : currents) s += detail::real(i) + "\n";
  write_file(dir / currents_file(tag), s);

  s = "# dB[fT] SensorID ChannelID GroupID CoilNo\n";
  for (const auto& m : measurements) {
    s += fmt::format("{} {} {} {} {}\n", detail::real(m.delta_b_ft), m.sensor_id, m.channel_id, m.group_id, m.coil_no);
  }
  write_file(dir / relax_file(tag), s);
}

// Writes the six tables. All coils must share one template translated to
// their positions (normals along +z), since coilGrid.dat stores positions only.
inline void write_dataset_tables(const Setup& setup, const std::vector<Vec3>& voxel_centers,
                                 const std::vector<double>& currents, const std::vector<MeasurementRecord>& measurements,
                                 const fs::path& dir, std::string_view tag = "01") {
  if (currents.size() != setup.coils.size()) {
    throw std::invalid_argument(
        fmt::format("write_dataset_tables: {} currents for {} coils", currents.size(), setup.coils.size()));
  }
  if (auto why = dataset_geometry_problem(setup)) throw std::invalid_argument("write_dataset_tables: " + *why);

  std::vector<Vec3> templ;
  if (!setup.coils.empty() && setup.coils.front().segments) {
    const Coil& ref = setup.coils.front();
    for (const auto& p : *ref.segments) templ.emplace_back(p - ref.position);
  }

  ensure_directory(dir);
  std::string s = "# x[m] y[m] z[m] nx ny nz SensorID ChannelID GroupID\n";
  for (const auto& sen : setup.sensors) {
    detail::append_vec(s, sen.position);
    s += ' ';
    detail::append_vec(s, sen.normal);
    s += fmt::format(" {} {} {}\n", sen.sensor_id, sen.channel_id, sen.group_id);
  }
  write_file(dir / kSensorsFile, s);

  s = "# x[m] y[m] z[m]\n";
  for (const auto& c : setup.coils) {
    detail::append_vec(s, c.position);
    s += '\n';
  }
  write_file(dir / kCoilGridFile, s);

  s = "# x[m] y[m] z[m]\n";
  for (const auto& p : templ) {
    detail::append_vec(s, p);
    s += '\n';
  }
  write_file(dir / kCoilTemplateFile, s);

  s = "# x[m] y[m] z[m]\n";
  for (const auto& v : voxel_centers) {
    detail::append_vec(s, v);
    s += '\n';
  }
  write_file(dir / kVoxelGridFile, s);

  write_measurement_tables(currents, measurements, dir, tag);
}

// Rebuilds the setup (coils via the template, roi from the voxel list) and
// the measurement table. The setup is 2D when every coil, sensor and voxel
// shares one z value and no template is given.
inline Dataset read_dataset_tables(const fs::path& dir, std::string_view tag = "01", Diagnostics* diag = nullptr) {
  Dataset ds;
  const std::string sensors_path = (dir / kSensorsFile).string();

  std::set<int> ids;
  for (const auto& row : detail::read_table(dir, kSensorsFile, 9)) {
    Sensor s;
    s.position = {row.values[0], row.values[1], row.values[2]};
    Vec3 n{row.values[3], row.values[4], row.values[5]};
    const double len = n.norm();
    if (!(len > 0.0)) throw FormatError(sensors_path, row.line, "zero sensor normal");
    if (std::abs(len - 1.0) > kUnitNormalTolerance) {
      warn(diag, fmt::format("{}:{}: sensor normal of length {} normalized", sensors_path, row.line, len));
      n /= len;
    }
    s.normal = n;
    s.sensor_id = detail::as_int(row, 6, sensors_path, "SensorID");
    s.channel_id = detail::as_int(row, 7, sensors_path, "ChannelID");
    s.group_id = detail::as_int(row, 8, sensors_path, "GroupID");
    if (!ids.insert(s.sensor_id).second) {
      throw FormatError(sensors_path, row.line, fmt::format("duplicate SensorID {}", s.sensor_id));
    }
    ds.setup.sensors.push_back(s);
  }
  if (ds.setup.sensors.empty()) throw FormatError(sensors_path, 0, "no sensors");

  std::vector<Coil> coils;
  for (const auto& row : detail::read_table(dir, kCoilGridFile, 3)) {
    Coil c;
    c.position = {row.values[0], row.values[1], row.values[2]};
    c.normal = Vec3::UnitZ();
    coils.push_back(c);
  }
  if (coils.empty()) throw FormatError((dir / kCoilGridFile).string(), 0, "no coils");

  std::vector<Vec3> templ;
  for (const auto& row : detail::read_table(dir, kCoilTemplateFile, 3)) {
    templ.emplace_back(row.values[0], row.values[1], row.values[2]);
  }
  ds.setup.coils = templ.empty() ? coils : parse_coils(coils, templ);

  for (const auto& row : detail::read_table(dir, kVoxelGridFile, 3)) {
    ds.voxel_centers.emplace_back(row.values[0], row.values[1], row.values[2]);
  }
  const std::string voxel_path = (dir / kVoxelGridFile).string();
  if (ds.voxel_centers.empty()) throw FormatError(voxel_path, 0, "no voxels");
  Vec3 spacing;
  detail::infer_grid(ds.voxel_centers, ds.res, spacing);
  if (voxel_count(ds.res) != ds.voxel_centers.size()) {
    throw FormatError(voxel_path, 0,
                      fmt::format("{} voxels do not form a complete {} grid", ds.voxel_centers.size(), to_string(ds.res)));
  }
  ds.setup.roi = get_roi(ds.voxel_centers, spacing);

  const double z0 = ds.voxel_centers.front().z();
  bool flat = templ.empty() && ds.res[2] == 1;
  for (const auto& c : ds.setup.coils) flat = flat && c.position.z() == z0;
  for (const auto& s : ds.setup.sensors) flat = flat && s.position.z() == z0;
  ds.setup.dim = flat ? 2 : 3;

  const std::string cur_path = (dir / currents_file(tag)).string();
  for (const auto& row : detail::read_table(dir, currents_file(tag), 1)) ds.currents.push_back(row.values[0]);
  if (ds.currents.size() != ds.setup.coils.size()) {
    throw FormatError(cur_path, 0,
                      fmt::format("{} currents for {} coils (only sequential patterns are supported)",
                                  ds.currents.size(), ds.setup.coils.size()));
  }

  const std::string relax_path = (dir / relax_file(tag)).string();
  const auto rows = detail::read_table(dir, relax_file(tag), 5);
  std::vector<int> order;  // sensor ids of the first coil group
  std::set<int> seen;
  for (const auto& row : rows) {
    MeasurementRecord m;
    m.delta_b_ft = row.values[0];
    m.sensor_id = detail::as_int(row, 1, relax_path, "SensorID");
    m.channel_id = detail::as_int(row, 2, relax_path, "ChannelID");
    m.group_id = detail::as_int(row, 3, relax_path, "GroupID");
    m.coil_no = detail::as_int(row, 4, relax_path, "CoilNo");
    if (!ids.count(m.sensor_id)) {
      throw FormatError(relax_path, row.line, fmt::format("SensorID {} absent from {}", m.sensor_id, kSensorsFile));
    }
    if (seen.insert(m.sensor_id).second) order.push_back(m.sensor_id);
    ds.measurements.push_back(m);
  }
  if (rows.empty()) throw FormatError(relax_path, 0, "no measurements");
  if (rows.size() % order.size() != 0) {
    throw FormatError(relax_path, 0,
                      fmt::format("row count not divisible by sensor count ({} rows, {} sensors)", rows.size(), order.size()));
  }
  const std::size_t groups = rows.size() / order.size();
  if (groups != ds.setup.coils.size()) {
    throw FormatError(relax_path, 0, fmt::format("{} measurement groups for {} coils", groups, ds.setup.coils.size()));
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& m = ds.measurements[r];
    const std::size_t g = r / order.size();
    if (m.coil_no != static_cast<int>(g + 1)) {
      throw FormatError(relax_path, rows[r].line, fmt::format("expected CoilNo {}, found {}", g + 1, m.coil_no));
    }
    if (m.sensor_id != order[r % order.size()]) {
      throw FormatError(relax_path, rows[r].line, "sensor order differs between coil groups");
    }
  }
  return ds;
}

// Reads the tables and drops defective sensors plus sensors that never
// appear in the relax table, keeping the remaining order.
inline Dataset load_dataset(const fs::path& dir, const std::vector<int>& defective_sensor_ids,
                            std::string_view tag = "01", Diagnostics* diag = nullptr) {
  Dataset ds = read_dataset_tables(dir, tag, diag);
  const std::set<int> defective(defective_sensor_ids.begin(), defective_sensor_ids.end());
  std::set<int> measured;
  for (const auto& m : ds.measurements) measured.insert(m.sensor_id);

  std::set<int> known;
  for (const auto& s : ds.setup.sensors) known.insert(s.sensor_id);
  for (int id : defective) {
    if (!known.count(id)) warn(diag, fmt::format("defective sensor {} is not part of the dataset", id));
  }

  std::vector<Sensor> kept;
  for (const auto& s : ds.setup.sensors) {
    if (defective.count(s.sensor_id)) continue;
    if (!measured.count(s.sensor_id)) {
      warn(diag, fmt::format("sensor {} has no measurements, dropped", s.sensor_id));
      continue;
    }
    kept.push_back(s);
  }
  ds.setup.sensors = std::move(kept);
  std::erase_if(ds.measurements, [&](const MeasurementRecord& m) { return defective.count(m.sensor_id) > 0; });
  ds.defective_sensors = defective_sensor_ids;
  return ds;
}

}  // namespace mrx::io
