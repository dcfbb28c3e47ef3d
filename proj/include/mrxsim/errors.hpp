#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mrx {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inconsistent or singular geometry (sensor on a voxel center, coil dipole
// inside the grid, degenerate segment, ...).
class GeometryError : public Error {
 public:
  using Error::Error;
};

// A setup/config pair that fails validation or compatibility checks.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations)
      : Error(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& items) {
    std::string out = "validation failed";
    for (const auto& v : items) {
      out += "\n  - ";
      out += v;
    }
    return out;
  }

  std::vector<std::string> violations_;
};

// Malformed file content. Carries the offending file and (1-based) line when
// known; line 0 means "whole file".
class FormatError : public Error {
 public:
  FormatError(std::string file, std::size_t line, const std::string& what)
      : Error(file + (line > 0 ? ":" + std::to_string(line) : std::string()) +
              ": " + what),
        file_(std::move(file)),
        line_(line) {}

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

// Filesystem / stream failures (missing file, unwritable directory, ...).
class IoError : public Error {
 public:
  using Error::Error;
};

// Collects non-fatal warnings emitted while loading or simulating.
struct Diagnostics {
  std::vector<std::string> warnings;

  void warn(std::string message) { warnings.push_back(std::move(message)); }
};

inline void warn(Diagnostics* diag, std::string message) {
  if (diag != nullptr) diag->warn(std::move(message));
}

}  // namespace mrx
