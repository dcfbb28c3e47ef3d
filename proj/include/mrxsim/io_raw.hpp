#pragma once

// Binary matrix blocks with a YAML manifest.
//
// Block file layout (all integers and reals little-endian):
//   7 bytes   magic, "MRXRAW1" for per-coil raw blocks, "MRXMAT1" for a
//             pattern-combined system matrix
//   u32       id: 1-based coil number (raw) or pattern count (matrix)
//   u64       rows
//   u64       cols
//   32 bytes  fingerprint, lowercase hex
//   f64[]     rows*cols values, row-major
//
// A raw export directory holds one block per coil (coil_NNNN.mrxraw) and
// manifest.yaml listing the exported coils and sensors, the grid and the
// fingerprint. A simulated matrix directory holds system_matrix.mrxmat and
// manifest.yaml.

#include <mrxsim/errors.hpp>
#include <mrxsim/fields.hpp>
#include <mrxsim/fingerprint.hpp>
#include <mrxsim/io_common.hpp>
#include <mrxsim/relaxation.hpp>

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

namespace mrx::io {

inline constexpr std::string_view kRawMagic = "MRXRAW1";
inline constexpr std::string_view kMatrixMagic = "MRXMAT1";
inline constexpr std::size_t kBlockHeaderSize = 7 + 4 + 8 + 8 + 32;
inline constexpr int kRawFormatVersion = 1;
inline constexpr std::string_view kManifestName = "manifest.yaml";
inline constexpr std::string_view kMatrixFileName = "system_matrix.mrxmat";

struct BlockHeader {
  std::string magic;
  std::uint32_t id = 0;
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  Fingerprint fingerprint;
};

inline std::string encode_block(std::string_view magic, std::uint32_t id, const Fingerprint& fp, const RowMatrix& m) {
  std::string out;
  out.reserve(kBlockHeaderSize + static_cast<std::size_t>(m.size()) * 8);
  out.append(magic);
  put_u32(out, id);
  put_u64(out, static_cast<std::uint64_t>(m.rows()));
  put_u64(out, static_cast<std::uint64_t>(m.cols()));
  out.append(fp.hex());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_f64(out, m(r, c));
  }
  return out;
}

inline std::pair<BlockHeader, RowMatrix> decode_block(std::string_view bytes, std::string_view expected_magic,
                                                      const std::string& file) {
  if (bytes.size() < kBlockHeaderSize) throw FormatError(file, 0, "truncated block header");
  BlockHeader h;
  h.magic = std::string(bytes.substr(0, 7));
  if (h.magic != expected_magic) {
    throw FormatError(file, 0, fmt::format("bad magic '{}', expected '{}'", h.magic, expected_magic));
  }
  h.id = static_cast<std::uint32_t>(get_uint(bytes, 7, 4));
  h.rows = get_uint(bytes, 11, 8);
  h.cols = get_uint(bytes, 19, 8);
  try {
    h.fingerprint = Fingerprint::from_hex(bytes.substr(27, 32));
  } catch (const std::invalid_argument& e) {
    throw FormatError(file, 0, e.what());
  }
  if (h.cols != 0 && h.rows > (bytes.size() - kBlockHeaderSize) / 8 / h.cols) {
    throw FormatError(file, 0, "block payload shorter than its header declares");
  }
  const std::size_t count = static_cast<std::size_t>(h.rows * h.cols);
  if (bytes.size() != kBlockHeaderSize + 8 * count) {
    throw FormatError(file, 0,
                      fmt::format("block size mismatch: {} bytes for a {}x{} block", bytes.size(), h.rows, h.cols));
  }
  RowMatrix m(static_cast<Eigen::Index>(h.rows), static_cast<Eigen::Index>(h.cols));
  std::size_t off = kBlockHeaderSize;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c, off += 8) m(r, c) = get_f64(bytes, off);
  }
  return {h, std::move(m)};
}

struct RawExportManifest {
  int format_version = kRawFormatVersion;
  Fingerprint fingerprint;
  std::vector<std::size_t> coils;    // 0-based setup indices, ascending
  std::vector<std::size_t> sensors;  // 0-based setup indices, ascending
  Resolution res{1, 1, 1};
  Roi roi;
  std::size_t voxel_count = 0;

  static std::string block_file(std::size_t coil) { return fmt::format("coil_{:04}.mrxraw", coil + 1); }
};

namespace detail {

inline void emit_grid(YAML::Emitter& out, const Resolution& res, const Roi& roi, std::size_t voxels) {
  out << YAML::Key << "res" << YAML::Value << YAML::Flow << YAML::BeginSeq << res[0] << res[1] << res[2]
      << YAML::EndSeq;
  out << YAML::Key << "roi" << YAML::Value << YAML::BeginMap;
  static constexpr const char* kAxis[] = {"x", "y", "z"};
  for (int a = 0; a < 3; ++a) {
    out << YAML::Key << kAxis[a] << YAML::Value << YAML::Flow << YAML::BeginSeq << fmt::format("{}", roi.axis(a).lo)
        << fmt::format("{}", roi.axis(a).hi) << YAML::EndSeq;
  }
  out << YAML::EndMap;
  out << YAML::Key << "voxel_count" << YAML::Value << voxels;
}

inline void emit_indices(YAML::Emitter& out, std::string_view key, const std::vector<std::size_t>& idx) {
  out << YAML::Key << std::string(key) << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (auto i : idx) out << i + 1;
  out << YAML::EndSeq;
}

struct ManifestReader {
  std::string file;
  YAML::Node root;

  static ManifestReader open(const fs::path& dir, std::string_view format) {
    const fs::path path = dir / kManifestName;
    if (!fs::exists(path)) throw IoError(fmt::format("manifest '{}' not found", path.string()));
    ManifestReader m{path.string(), {}};
    try {
      m.root = YAML::Load(read_text_file(path));
    } catch (const YAML::ParserException& e) {
      throw FormatError(m.file, static_cast<std::size_t>(e.mark.line) + 1, e.msg);
    }
    if (!m.root.IsMap() || !m.root["format"] || m.root["format"].as<std::string>() != format) {
      throw FormatError(m.file, 0, fmt::format("not a '{}' manifest", format));
    }
    if (m.get<int>("version") != kRawFormatVersion) {
      throw FormatError(m.file, 0, fmt::format("unsupported manifest version {}", m.get<int>("version")));
    }
    return m;
  }

  template <class T>
  T get(const char* key) const {
    const YAML::Node n = root[key];
    if (!n) throw FormatError(file, 0, fmt::format("missing section '{}'", key));
    try {
      return n.as<T>();
    } catch (const YAML::Exception& e) {
      throw FormatError(file, static_cast<std::size_t>(n.Mark().line) + 1, fmt::format("field '{}': {}", key, e.what()));
    }
  }

  std::vector<std::size_t> indices(const char* key) const {
    std::vector<std::size_t> out;
    for (long long v : get<std::vector<long long>>(key)) {
      if (v < 1) throw FormatError(file, 0, fmt::format("field '{}': indices are 1-based", key));
      out.push_back(static_cast<std::size_t>(v - 1));
    }
    return out;
  }

  void grid(Resolution& res, Roi& roi, std::size_t& voxels) const {
    const auto r = get<std::vector<int>>("res");
    if (r.size() != 3) throw FormatError(file, 0, "field 'res': expected 3 entries");
    res = {r[0], r[1], r[2]};
    const YAML::Node roi_node = root["roi"];
    if (!roi_node) throw FormatError(file, 0, "missing section 'roi'");
    static constexpr const char* kAxis[] = {"x", "y", "z"};
    for (int a = 0; a < 3; ++a) {
      const auto iv = roi_node[kAxis[a]].as<std::vector<double>>();
      if (iv.size() != 2) throw FormatError(file, 0, "field 'roi': expected [lo, hi] intervals");
      roi.axis(a) = {iv[0], iv[1]};
    }
    voxels = get<std::size_t>("voxel_count");
  }
};

inline void refuse_overwrite(const fs::path& path, bool overwrite) {
  if (!overwrite && fs::exists(path)) {
    throw IoError(fmt::format("'{}' already exists (pass the overwrite flag to replace it)", path.string()));
  }
}

}  // namespace detail

inline RawExportManifest read_raw_manifest(const fs::path& dir) {
  const auto m = detail::ManifestReader::open(dir, "mrxraw");
  RawExportManifest man;
  man.format_version = m.get<int>("version");
  try {
    man.fingerprint = Fingerprint::from_hex(m.get<std::string>("fingerprint"));
  } catch (const std::invalid_argument& e) {
    throw FormatError(m.file, 0, e.what());
  }
  man.coils = m.indices("coils");
  man.sensors = m.indices("sensors");
  m.grid(man.res, man.roi, man.voxel_count);
  return man;
}

// One block file per coil plus the manifest.
inline RawExportManifest export_raw(const SystemMatrixRaw& raw, const fs::path& dir, bool overwrite = false) {
  ensure_directory(dir);
  RawExportManifest man;
  man.fingerprint = raw.fingerprint;
  man.coils = raw.active_coils;
  man.sensors = raw.active_sensors;
  man.res = raw.grid.res;
  man.roi = raw.grid.roi;
  man.voxel_count = raw.grid.size();

  detail::refuse_overwrite(dir / kManifestName, overwrite);
  for (auto c : man.coils) detail::refuse_overwrite(dir / RawExportManifest::block_file(c), overwrite);

  for (std::size_t i = 0; i < raw.blocks.size(); ++i) {
    const auto coil = raw.active_coils[i];
    write_file(dir / RawExportManifest::block_file(coil),
               encode_block(kRawMagic, static_cast<std::uint32_t>(coil + 1), raw.fingerprint, raw.blocks[i]));
  }

  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "format" << YAML::Value << "mrxraw";
  out << YAML::Key << "version" << YAML::Value << kRawFormatVersion;
  out << YAML::Key << "fingerprint" << YAML::Value << man.fingerprint.hex();
  detail::emit_grid(out, man.res, man.roi, man.voxel_count);
  detail::emit_indices(out, "coils", man.coils);
  detail::emit_indices(out, "sensors", man.sensors);
  out << YAML::Key << "files" << YAML::Value << YAML::BeginSeq;
  for (auto c : man.coils) out << RawExportManifest::block_file(c);
  out << YAML::EndSeq;
  out << YAML::EndMap;
  write_file(dir / kManifestName, std::string(out.c_str()) + "\n");
  return man;
}

// Selected coil blocks restricted to the selected sensor rows, both given as
// 0-based setup indices. When `expected` is set the export must carry that
// fingerprint.
inline SystemMatrixRaw import_raw(const fs::path& dir, const std::vector<std::size_t>& active_coils,
                                  const std::vector<std::size_t>& active_sensors,
                                  const std::optional<Fingerprint>& expected = std::nullopt) {
  const RawExportManifest man = read_raw_manifest(dir);
  if (expected && *expected != man.fingerprint) {
    throw ValidationError({fmt::format("fingerprint mismatch: export {} was made for a different setup/resolution/physics "
                                       "than requested ({})",
                                       man.fingerprint.hex(), expected->hex())});
  }

  std::vector<Eigen::Index> rows;
  for (auto s : active_sensors) {
    const auto it = std::find(man.sensors.begin(), man.sensors.end(), s);
    if (it == man.sensors.end()) {
      throw ValidationError({fmt::format("sensor index out of range: sensor {} is not part of the export", s + 1)});
    }
    rows.push_back(static_cast<Eigen::Index>(it - man.sensors.begin()));
  }

  SystemMatrixRaw raw;
  raw.grid = create_voxel_grid(man.roi, man.res);
  if (raw.grid.size() != man.voxel_count) {
    throw FormatError((dir / kManifestName).string(), 0, "voxel_count does not match res");
  }
  raw.active_coils = active_coils;
  raw.active_sensors = active_sensors;
  raw.fingerprint = man.fingerprint;

  for (auto coil : active_coils) {
    if (std::find(man.coils.begin(), man.coils.end(), coil) == man.coils.end()) {
      throw ValidationError({fmt::format("missing coil: coil {} was not exported", coil + 1)});
    }
    const fs::path path = dir / RawExportManifest::block_file(coil);
    if (!fs::exists(path)) throw IoError(fmt::format("missing coil file '{}'", path.string()));
    auto [header, block] = decode_block(read_text_file(path), kRawMagic, path.string());
    if (header.fingerprint != man.fingerprint) {
      throw ValidationError({fmt::format("fingerprint mismatch in '{}'", path.string())});
    }
    if (header.id != coil + 1 || static_cast<std::size_t>(header.rows) != man.sensors.size() ||
        static_cast<std::size_t>(header.cols) != man.voxel_count) {
      throw FormatError(path.string(), 0, "block header does not match the manifest");
    }
    RowMatrix selected(static_cast<Eigen::Index>(rows.size()), block.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) selected.row(static_cast<Eigen::Index>(r)) = block.row(rows[r]);
    raw.blocks.push_back(std::move(selected));
  }
  return raw;
}

inline void write_system_matrix(const SystemMatrix& a, const fs::path& dir, bool overwrite = false) {
  ensure_directory(dir);
  detail::refuse_overwrite(dir / kMatrixFileName, overwrite);
  detail::refuse_overwrite(dir / kManifestName, overwrite);
  write_file(dir / kMatrixFileName,
             encode_block(kMatrixMagic, static_cast<std::uint32_t>(a.num_patterns), a.fingerprint, a.matrix));

  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "format" << YAML::Value << "mrxmat";
  out << YAML::Key << "version" << YAML::Value << kRawFormatVersion;
  out << YAML::Key << "fingerprint" << YAML::Value << a.fingerprint.hex();
  detail::emit_grid(out, a.grid.res, a.grid.roi, a.grid.size());
  detail::emit_indices(out, "active_coils", a.active_coils);
  detail::emit_indices(out, "active_sensors", a.active_sensors);
  out << YAML::Key << "num_patterns" << YAML::Value << a.num_patterns;
  out << YAML::Key << "rows" << YAML::Value << a.matrix.rows();
  out << YAML::Key << "cols" << YAML::Value << a.matrix.cols();
  out << YAML::Key << "row_order" << YAML::Value << "sensor-major within pattern";
  out << YAML::EndMap;
  write_file(dir / kManifestName, std::string(out.c_str()) + "\n");
}

inline SystemMatrix read_system_matrix(const fs::path& dir) {
  const auto m = detail::ManifestReader::open(dir, "mrxmat");
  SystemMatrix a;
  Resolution res{};
  Roi roi;
  std::size_t voxels = 0;
  m.grid(res, roi, voxels);
  a.grid = create_voxel_grid(roi, res);
  a.active_coils = m.indices("active_coils");
  a.active_sensors = m.indices("active_sensors");
  a.num_patterns = m.get<std::size_t>("num_patterns");
  const fs::path path = dir / kMatrixFileName;
  auto [header, matrix] = decode_block(read_text_file(path), kMatrixMagic, path.string());
  a.fingerprint = header.fingerprint;
  if (header.id != a.num_patterns || matrix.cols() != static_cast<Eigen::Index>(voxels) ||
      static_cast<std::size_t>(matrix.rows()) != a.num_patterns * a.active_sensors.size()) {
    throw FormatError(path.string(), 0, "matrix header does not match the manifest");
  }
  a.matrix = std::move(matrix);
  return a;
}

}  // namespace mrx::io
