#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace handopt {

// Error hierarchy. Every failure the library reports derives from Error so
// callers (the CLI in particular) can map families of failures to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ZeroDistance : public Error { using Error::Error; };
class OutOfBoundsDesign : public Error { using Error::Error; };
class UnknownShape : public Error { using Error::Error; };
class UnknownScale : public Error { using Error::Error; };
class InvalidConfig : public Error { using Error::Error; };
class NumericalBlowup : public Error { using Error::Error; };
class SeedOutOfBounds : public Error { using Error::Error; };
class PoolTooSmall : public Error { using Error::Error; };
class EmptyPool : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class UnknownReference : public Error { using Error::Error; };

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
  friend Vec2 operator*(Vec2 v, double s) { return {s * v.x, s * v.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline Vec2 perp(Vec2 v) { return {-v.y, v.x}; }

inline constexpr double kPi = 3.14159265358979323846;
inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

inline Vec2 unit_from_deg(double deg) {
  const double r = deg2rad(deg);
  return {std::cos(r), std::sin(r)};
}

inline Vec2 rotate(Vec2 v, double deg) {
  const double r = deg2rad(deg);
  const double c = std::cos(r);
  const double s = std::sin(r);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Wraps an angle into (-period/2, period/2].
inline double wrap_angle(double deg, double period = 360.0) {
  double a = std::fmod(deg, period);
  if (a > period / 2) a -= period;
  if (a <= -period / 2) a += period;
  return a;
}

/// Planar pose: position in mm, heading in degrees.
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double phi = 0.0;

  Vec2 position() const { return {x, y}; }
  friend bool operator==(const Pose2&, const Pose2&) = default;
};

// splitmix64 finalizer, used to derive independent stream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base) { return mix64(base); }

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t part, Rest... rest) {
  return derive_seed(mix64(base ^ mix64(part + 0x632be59bd9b4e019ULL)),
                     static_cast<std::uint64_t>(rest)...);
}

/// Seeded random stream. Thin wrapper so every consumer draws through the
/// same engine type and distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) {
    if (!(hi > lo)) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  double normal() { return normal_(engine_); }

  bool coin() { return (engine_() >> 63) != 0; }

  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace handopt
