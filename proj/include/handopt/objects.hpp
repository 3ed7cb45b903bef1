#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "handopt/common.hpp"

namespace handopt::env {

enum class Shape { Barbell, Board, Cross3d, Pen, Ring, Sphere };

inline constexpr std::array<Shape, 6> kAllShapes = {
    Shape::Barbell, Shape::Board, Shape::Cross3d,
    Shape::Pen,     Shape::Ring,  Shape::Sphere};
inline constexpr std::array<double, 3> kScales = {0.75, 1.0, 1.25};
inline constexpr int kNumInstances = 18;

std::string_view shape_name(Shape s);
Shape parse_shape(std::string_view name);  // throws UnknownShape

struct Disc {
  Vec2 center;
  double radius = 0.0;
};

/// Oriented rectangle in the object frame.
struct Rect {
  Vec2 center;
  double half_x = 0.0;
  double half_y = 0.0;
  double angle = 0.0;  // deg
};

struct Annulus {
  Vec2 center;
  double ring_radius = 0.0;  // centerline radius
  double thickness = 0.0;
};

using Primitive = std::variant<Disc, Rect, Annulus>;

/// Base (scale 1) dimensions in mm.
struct ObjectSizes {
  double sphere_radius = 25.0;
  double board_length = 80.0;
  double board_width = 50.0;
  double pen_length = 100.0;
  double pen_width = 8.0;
  double cross_bar_length = 60.0;
  double cross_bar_width = 15.0;
  double barbell_disc_radius = 15.0;
  double barbell_bar_length = 50.0;
  double barbell_bar_width = 8.0;
  double ring_radius = 30.0;
  double ring_thickness = 8.0;
};

struct ObjectSpec {
  Shape shape = Shape::Sphere;
  double scale = 1.0;
  std::vector<Primitive> primitives;
  double mass = 0.0;  // kg, informational; dynamics are damping-dominated
  int one_hot_index = 0;
  /// Order of the rotational symmetry; 0 means continuous (disc, ring).
  int symmetry_order = 1;
  /// Radius of a disc about the object origin that contains every primitive.
  double bounding_radius = 0.0;

  std::string name() const;  // e.g. "sphere@1.0"
};

int scale_index(double scale);  // throws UnknownScale
int instance_index(Shape shape, double scale);

ObjectSpec make_object(Shape shape, double scale, const ObjectSizes& sizes = {});

/// Parses "shape@scale", e.g. "board@1.25".
ObjectSpec parse_instance(std::string_view text, const ObjectSizes& sizes = {});

/// Parses "all" or a comma-separated list of instance names.
std::vector<ObjectSpec> parse_instances(std::string_view text,
                                        const ObjectSizes& sizes = {});
std::vector<ObjectSpec> all_instances(const ObjectSizes& sizes = {});

struct SurfaceQuery {
  double distance = 0.0;  // mm, negative inside
  Vec2 normal;            // outward unit normal, world frame
};

/// Signed distance from a world-frame point to the object placed at `pose`.
/// For unions the nearest primitive wins.
SurfaceQuery signed_distance(const ObjectSpec& obj, const Pose2& pose, Vec2 point);

/// Signed distance in the object's own frame, per primitive.
SurfaceQuery primitive_distance(const Primitive& prim, Vec2 local_point);

/// Signed angular error goal - current in degrees, reduced by the object's
/// rotational symmetry. Continuous symmetry yields 0.
double symmetric_angle_error(double goal_deg, double current_deg,
                             int symmetry_order);

}  // namespace handopt::env
