#pragma once

// 128-bit content hash of the inputs that determine a raw system matrix:
// setup geometry, voxel resolution and physics parameters. Active coil and
// sensor subsets and current patterns are excluded, so exports of one
// geometry can be recombined under any config sharing that geometry.

#include <mrxsim/model.hpp>

#include <sodium.h>

#include <array>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mrx {

class Fingerprint {
 public:
  static constexpr std::size_t kBytes = 16;

  Fingerprint() = default;
  explicit Fingerprint(const std::array<std::uint8_t, kBytes>& bytes) : bytes_(bytes) {}

  static Fingerprint of(std::string_view canonical) {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
    std::array<std::uint8_t, kBytes> out{};
    crypto_generichash(out.data(), out.size(), reinterpret_cast<const unsigned char*>(canonical.data()),
                       canonical.size(), nullptr, 0);
    return Fingerprint(out);
  }

  static Fingerprint from_hex(std::string_view hex) {
    if (hex.size() != 2 * kBytes) throw std::invalid_argument("fingerprint: expected 32 hex characters");
    std::array<std::uint8_t, kBytes> out{};
    for (std::size_t i = 0; i < kBytes; ++i) {
      auto nibble = [&](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw std::invalid_argument("fingerprint: invalid hex digit");
      };
      out[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) * 16 + nibble(hex[2 * i + 1]));
    }
    return Fingerprint(out);
  }

  std::string hex() const {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string s;
    s.reserve(2 * kBytes);
    for (auto b : bytes_) {
      s.push_back(kDigits[b >> 4]);
      s.push_back(kDigits[b & 0xF]);
    }
    return s;
  }

  const std::array<std::uint8_t, kBytes>& bytes() const { return bytes_; }

  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;

 private:
  std::array<std::uint8_t, kBytes> bytes_{};
};

namespace detail {

// Bit-exact textual encoding of doubles (hexfloat) for hashing.
class CanonicalWriter {
 public:
  CanonicalWriter& tag(std::string_view t) {
    out_ += t;
    out_ += ';';
    return *this;
  }
  CanonicalWriter& num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a;", v);
    out_ += buf;
    return *this;
  }
  CanonicalWriter& num(long long v) {
    out_ += std::to_string(v);
    out_ += ';';
    return *this;
  }
  CanonicalWriter& vec(const Vec3& v) { return num(v.x()).num(v.y()).num(v.z()); }

  const std::string& str() const { return out_; }

 private:
  std::string out_;
};

}  // namespace detail

inline Fingerprint fingerprint(const Setup& setup, const Resolution& res, const PhysicsParams& physics) {
  detail::CanonicalWriter w;
  w.tag("mrxsim-fingerprint-v1").num(static_cast<long long>(setup.dim));
  w.tag("roi");
  for (int a = 0; a < 3; ++a) w.num(setup.roi.axis(a).lo).num(setup.roi.axis(a).hi);
  w.tag("coils").num(static_cast<long long>(setup.coils.size()));
  for (const auto& c : setup.coils) {
    w.vec(c.position).vec(c.normal);
    if (c.segments) {
      w.tag("seg").num(static_cast<long long>(c.segments->size()));
      for (const auto& p : *c.segments) w.vec(p);
    } else {
      w.tag("noseg");
    }
  }
  w.tag("sensors").num(static_cast<long long>(setup.sensors.size()));
  for (const auto& s : setup.sensors) {
    w.vec(s.position).vec(s.normal);
    w.num(static_cast<long long>(s.sensor_id)).num(static_cast<long long>(s.channel_id)).num(static_cast<long long>(s.group_id));
  }
  w.tag("res").num(static_cast<long long>(res[0])).num(static_cast<long long>(res[1])).num(static_cast<long long>(res[2]));
  w.tag("physics").num(physics.theta).num(physics.kernel_prefactor);
  return Fingerprint::of(w.str());
}

}  // namespace mrx
