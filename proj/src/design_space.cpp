#include "handopt/design_space.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace handopt::design {

DesignVector DesignParams::to_vector() const {
  return {palm_width, palm_height, ff_pos.x,  ff_pos.y,  mf_pos.x,
          mf_pos.y,   rf_pos.x,    rf_pos.y,  ff_orient, mf_orient,
          rf_orient,  proximal_len, middle_len, distal_len};
}

DesignParams DesignParams::from_vector(const DesignVector& v) {
  DesignParams p;
  p.palm_width = v[0];
  p.palm_height = v[1];
  p.ff_pos = {v[2], v[3]};
  p.mf_pos = {v[4], v[5]};
  p.rf_pos = {v[6], v[7]};
  p.ff_orient = v[8];
  p.mf_orient = v[9];
  p.rf_orient = v[10];
  p.proximal_len = v[11];
  p.middle_len = v[12];
  p.distal_len = v[13];
  return p;
}

const std::array<std::string_view, kDesignDim>& field_names() {
  static constexpr std::array<std::string_view, kDesignDim> kNames = {
      "palm_width", "palm_height", "ff_x",         "ff_y",
      "mf_x",       "mf_y",        "rf_x",         "rf_y",
      "ff_orient",  "mf_orient",   "rf_orient",    "proximal_len",
      "middle_len", "distal_len"};
  return kNames;
}

DesignBounds DesignBounds::table_defaults(double mutation_fraction) {
  DesignBounds b;
  b.lower = {69, 69, 8, 64, -20, 64, -56, 64, 0, -35, -45, 35, 8, 25};
  b.upper = {99, 99, 48, 84, 20, 84, -16, 84, 45, 35, 0, 55, 28, 45};
  for (std::size_t i = 0; i < kDesignDim; ++i) {
    b.mutation_range[i] = mutation_fraction * (b.upper[i] - b.lower[i]);
  }
  return b;
}

void DesignBounds::validate() const {
  for (std::size_t i = 0; i < kDesignDim; ++i) {
    const auto name = std::string(field_names()[i]);
    if (!(lower[i] < upper[i])) {
      throw InvalidConfig("bounds: lower >= upper for " + name);
    }
    if (!(mutation_range[i] >= 0.0)) {
      throw InvalidConfig("bounds: negative mutation range for " + name);
    }
  }
}

bool DesignBounds::contains(const DesignParams& theta) const {
  const auto v = theta.to_vector();
  for (std::size_t i = 0; i < kDesignDim; ++i) {
    if (!(v[i] >= lower[i] && v[i] <= upper[i])) return false;
  }
  return true;
}

DesignVector DesignBounds::span() const {
  DesignVector s{};
  for (std::size_t i = 0; i < kDesignDim; ++i) s[i] = upper[i] - lower[i];
  return s;
}

DesignParams dash_v3() {
  return DesignParams::from_vector(
      {84, 84, 28, 84, 0, 84, -28, 84, 0, 0, 0, 45, 20, 35});
}

DesignParams dash_v5() {
  return DesignParams::from_vector(
      {84, 84, 28, 84, 0, 84, -28, 84, 0, 0, 0, 45, 20, 35});
}

DesignParams dash_v6() {
  return DesignParams::from_vector(
      {92, 74, 28, 84, 0, 84, -36, 84, 0, 0, 0, 45, 18, 35});
}

DesignParams dash_v7() {
  return DesignParams::from_vector(
      {92, 74, 29, 83, 0, 84, -36, 83, 2.9, 0, -2.9, 45, 18, 35});
}

DesignParams crossover(const DesignParams& a, const DesignParams& b, Rng& rng) {
  const auto va = a.to_vector();
  const auto vb = b.to_vector();
  DesignVector out{};
  for (std::size_t i = 0; i < kDesignDim; ++i) {
    out[i] = rng.coin() ? va[i] : vb[i];
  }
  return DesignParams::from_vector(out);
}

DesignParams mutate(const DesignParams& theta, const DesignBounds& bounds,
                    Rng& rng) {
  auto v = theta.to_vector();
  for (std::size_t i = 0; i < kDesignDim; ++i) {
    const double m = bounds.mutation_range[i];
    v[i] += rng.uniform(-m, m);
  }
  return DesignParams::from_vector(v);
}

DesignParams clamp(const DesignParams& theta, const DesignBounds& bounds) {
  auto v = theta.to_vector();
  for (std::size_t i = 0; i < kDesignDim; ++i) {
    v[i] = std::max(std::min(v[i], bounds.upper[i]), bounds.lower[i]);
  }
  return DesignParams::from_vector(v);
}

double normalized_distance(const DesignParams& a, const DesignParams& b,
                           const DesignBounds& bounds) {
  const auto va = a.to_vector();
  const auto vb = b.to_vector();
  double sum = 0.0;
  for (std::size_t i = 0; i < kDesignDim; ++i) {
    const double d = (va[i] - vb[i]) / (bounds.upper[i] - bounds.lower[i]);
    sum += d * d;
  }
  return std::sqrt(sum);
}

DesignParams interp_step(const DesignParams& current, const DesignParams& target,
                         double step, const DesignBounds& bounds) {
  const double remaining = normalized_distance(current, target, bounds);
  if (remaining == 0.0) {
    throw ZeroDistance("interp_step: current design equals target");
  }
  // Snap onto the target when the step covers the remaining distance, with a
  // relative slack so accumulated rounding cannot leave a sliver step behind.
  if (step >= remaining * (1.0 - 1e-12)) return target;

  const auto vc = current.to_vector();
  const auto vt = target.to_vector();
  const double frac = step / remaining;
  DesignVector out{};
  for (std::size_t i = 0; i < kDesignDim; ++i) {
    const double span = bounds.upper[i] - bounds.lower[i];
    const double uc = (vc[i] - bounds.lower[i]) / span;
    const double ut = (vt[i] - bounds.lower[i]) / span;
    const double u = uc + frac * (ut - uc);
    out[i] = std::clamp(bounds.lower[i] + u * span, bounds.lower[i],
                        bounds.upper[i]);
  }
  return DesignParams::from_vector(out);
}

}  // namespace handopt::design
