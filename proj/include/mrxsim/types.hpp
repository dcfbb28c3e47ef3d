#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstddef>
#include <string>

#include <fmt/format.h>

namespace mrx {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Voxel counts per axis (x, y, z).
using Resolution = std::array<int, 3>;

inline bool is_finite(const Vec3& v) {
  return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

inline std::size_t voxel_count(const Resolution& res) {
  return static_cast<std::size_t>(res[0]) * static_cast<std::size_t>(res[1]) *
         static_cast<std::size_t>(res[2]);
}

inline std::string to_string(const Vec3& v) {
  return fmt::format("({}, {}, {})", v.x(), v.y(), v.z());
}

inline std::string to_string(const Resolution& res) {
  return fmt::format("[{},{},{}]", res[0], res[1], res[2]);
}

// Exact element-wise comparison; matrices of different shape compare unequal.
inline bool same_matrix(const RowMatrix& a, const RowMatrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

}  // namespace mrx
