#pragma once

#include <array>
#include <cstddef>
#include <string_view>

#include "handopt/common.hpp"

namespace handopt::design {

inline constexpr std::size_t kDesignDim = 14;
using DesignVector = std::array<double, kDesignDim>;

/// The hand genome. Lengths are in mm, orientations in degrees (positive is
/// counter-clockwise, i.e. the index finger turning toward the middle finger).
/// Finger positions are (x, y) on the palm with x measured from the palm
/// centerline and y from the palm's bottom edge.
///
/// Flat vector order: palm_width, palm_height, ff_x, ff_y, mf_x, mf_y, rf_x,
/// rf_y, ff_orient, mf_orient, rf_orient, proximal_len, middle_len, distal_len.
struct DesignParams {
  double palm_width = 0.0;
  double palm_height = 0.0;
  Vec2 ff_pos;
  Vec2 mf_pos;
  Vec2 rf_pos;
  double ff_orient = 0.0;
  double mf_orient = 0.0;
  double rf_orient = 0.0;
  double proximal_len = 0.0;
  double middle_len = 0.0;
  double distal_len = 0.0;

  DesignVector to_vector() const;
  static DesignParams from_vector(const DesignVector& v);

  friend bool operator==(const DesignParams&, const DesignParams&) = default;
};

/// Field names in flat-vector order; also the JSON keys and CSV header.
const std::array<std::string_view, kDesignDim>& field_names();

struct DesignBounds {
  DesignVector lower{};
  DesignVector upper{};
  DesignVector mutation_range{};

  /// Ranges tested in simulation for the DASH hand family, with the mutation
  /// range set to `mutation_fraction` of each dimension's span.
  static DesignBounds table_defaults(double mutation_fraction = 0.05);

  /// Throws InvalidConfig unless lower < upper and mutation_range >= 0.
  void validate() const;
  bool contains(const DesignParams& theta) const;
  DesignVector span() const;
};

// Reference designs. v3 and v5 seed the search; v6 and v7 are the designs
// the original search converged to.
DesignParams dash_v3();
DesignParams dash_v5();
DesignParams dash_v6();
DesignParams dash_v7();

/// Element-wise random crossover: each component comes from `a` or `b` with
/// probability 1/2, drawn independently.
DesignParams crossover(const DesignParams& a, const DesignParams& b, Rng& rng);

/// Adds U[-m_i, m_i] noise per component. Does not clamp.
DesignParams mutate(const DesignParams& theta, const DesignBounds& bounds,
                    Rng& rng);

DesignParams clamp(const DesignParams& theta, const DesignBounds& bounds);

/// Euclidean distance after dividing each component difference by the
/// dimension's span, so millimetres and degrees are commensurable.
double normalized_distance(const DesignParams& a, const DesignParams& b,
                           const DesignBounds& bounds);

/// One interpolation step of length min(step, remaining) toward `target`,
/// measured in normalized space. A step that would reach or pass the target
/// lands on it exactly. Throws ZeroDistance if current == target.
DesignParams interp_step(const DesignParams& current, const DesignParams& target,
                         double step, const DesignBounds& bounds);

}  // namespace handopt::design
