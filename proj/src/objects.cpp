#include "handopt/objects.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

namespace handopt::env {

namespace {

constexpr std::array<std::string_view, 3> kScaleNames = {"0.75", "1.0", "1.25"};
constexpr double kArealDensity = 2.5e-5;  // kg / mm^2

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

double primitive_area(const Primitive& p) {
  return std::visit(
      [](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Disc>) {
          return kPi * v.radius * v.radius;
        } else if constexpr (std::is_same_v<T, Rect>) {
          return 4.0 * v.half_x * v.half_y;
        } else {
          return 2.0 * kPi * v.ring_radius * v.thickness;
        }
      },
      p);
}

double primitive_extent(const Primitive& p) {
  return std::visit(
      [](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Disc>) {
          return norm(v.center) + v.radius;
        } else if constexpr (std::is_same_v<T, Rect>) {
          return norm(v.center) + std::hypot(v.half_x, v.half_y);
        } else {
          return norm(v.center) + v.ring_radius + v.thickness / 2;
        }
      },
      p);
}

Vec2 sign_axis(double v) { return {v < 0 ? -1.0 : 1.0, 0.0}; }

}  // namespace

std::string_view shape_name(Shape s) {
  switch (s) {
    case Shape::Barbell: return "barbell";
    case Shape::Board: return "board";
    case Shape::Cross3d: return "cross3d";
    case Shape::Pen: return "pen";
    case Shape::Ring: return "ring";
    case Shape::Sphere: return "sphere";
  }
  return "?";
}

Shape parse_shape(std::string_view name) {
  for (Shape s : kAllShapes) {
    if (shape_name(s) == name) return s;
  }
  throw UnknownShape("unknown shape '" + std::string(name) + "'");
}

int scale_index(double scale) {
  for (std::size_t i = 0; i < kScales.size(); ++i) {
    if (std::abs(scale - kScales[i]) < 1e-9) return static_cast<int>(i);
  }
  throw UnknownScale("unsupported scale " + std::to_string(scale) +
                     " (expected 0.75, 1.0 or 1.25)");
}

int instance_index(Shape shape, double scale) {
  return 3 * static_cast<int>(shape) + scale_index(scale);
}

std::string ObjectSpec::name() const {
  return std::string(shape_name(shape)) + "@" +
         std::string(kScaleNames[scale_index(scale)]);
}

ObjectSpec make_object(Shape shape, double scale, const ObjectSizes& sz) {
  ObjectSpec obj;
  obj.shape = shape;
  obj.one_hot_index = instance_index(shape, scale);  // validates scale
  obj.scale = kScales[scale_index(scale)];
  const double s = obj.scale;

  switch (shape) {
    case Shape::Sphere:
      obj.primitives.push_back(Disc{{0, 0}, s * sz.sphere_radius});
      obj.symmetry_order = 0;
      break;
    case Shape::Board:
      obj.primitives.push_back(
          Rect{{0, 0}, s * sz.board_length / 2, s * sz.board_width / 2, 0.0});
      obj.symmetry_order = 2;
      break;
    case Shape::Pen:
      obj.primitives.push_back(
          Rect{{0, 0}, s * sz.pen_length / 2, s * sz.pen_width / 2, 0.0});
      obj.symmetry_order = 2;
      break;
    case Shape::Cross3d:
      obj.primitives.push_back(Rect{
          {0, 0}, s * sz.cross_bar_length / 2, s * sz.cross_bar_width / 2, 0.0});
      obj.primitives.push_back(Rect{
          {0, 0}, s * sz.cross_bar_length / 2, s * sz.cross_bar_width / 2, 90.0});
      obj.symmetry_order = 4;
      break;
    case Shape::Barbell: {
      const double half_bar = s * sz.barbell_bar_length / 2;
      obj.primitives.push_back(
          Rect{{0, 0}, half_bar, s * sz.barbell_bar_width / 2, 0.0});
      obj.primitives.push_back(Disc{{-half_bar, 0}, s * sz.barbell_disc_radius});
      obj.primitives.push_back(Disc{{half_bar, 0}, s * sz.barbell_disc_radius});
      obj.symmetry_order = 2;
      break;
    }
    case Shape::Ring:
      obj.primitives.push_back(
          Annulus{{0, 0}, s * sz.ring_radius, s * sz.ring_thickness});
      obj.symmetry_order = 0;
      break;
  }

  double area = 0.0;
  for (const auto& p : obj.primitives) {
    area += primitive_area(p);
    obj.bounding_radius = std::max(obj.bounding_radius, primitive_extent(p));
  }
  obj.mass = kArealDensity * area;
  return obj;
}

ObjectSpec parse_instance(std::string_view text, const ObjectSizes& sizes) {
  text = trim(text);
  const auto at = text.find('@');
  if (at == std::string_view::npos) {
    throw UnknownShape("instance '" + std::string(text) +
                       "' must look like shape@scale");
  }
  const Shape shape = parse_shape(text.substr(0, at));
  const auto scale_text = text.substr(at + 1);
  double scale = 0.0;
  const auto [ptr, ec] =
      std::from_chars(scale_text.data(), scale_text.data() + scale_text.size(), scale);
  if (ec != std::errc() || ptr != scale_text.data() + scale_text.size()) {
    throw UnknownScale("bad scale in instance '" + std::string(text) + "'");
  }
  return make_object(shape, scale, sizes);
}

std::vector<ObjectSpec> parse_instances(std::string_view text,
                                        const ObjectSizes& sizes) {
  if (trim(text) == "all") return all_instances(sizes);
  std::vector<ObjectSpec> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(parse_instance(text.substr(0, comma), sizes));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (out.empty()) throw UnknownShape("empty instance list");
  return out;
}

std::vector<ObjectSpec> all_instances(const ObjectSizes& sizes) {
  std::vector<ObjectSpec> out;
  for (Shape s : kAllShapes) {
    for (double sc : kScales) out.push_back(make_object(s, sc, sizes));
  }
  return out;
}

SurfaceQuery primitive_distance(const Primitive& prim, Vec2 p) {
  return std::visit(
      [p](const auto& v) -> SurfaceQuery {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Disc>) {
          const Vec2 d = p - v.center;
          const double r = norm(d);
          const Vec2 n = r > 0 ? (1.0 / r) * d : Vec2{1, 0};
          return {r - v.radius, n};
        } else if constexpr (std::is_same_v<T, Rect>) {
          const Vec2 q = rotate(p - v.center, -v.angle);
          const double dx = std::abs(q.x) - v.half_x;
          const double dy = std::abs(q.y) - v.half_y;
          const double ox = std::max(dx, 0.0);
          const double oy = std::max(dy, 0.0);
          const double outside = std::hypot(ox, oy);
          Vec2 n;
          double dist;
          if (outside > 0) {
            n = {(q.x < 0 ? -ox : ox) / outside, (q.y < 0 ? -oy : oy) / outside};
            dist = outside;
          } else if (dx >= dy) {
            n = sign_axis(q.x);
            dist = dx;
          } else {
            n = {0.0, q.y < 0 ? -1.0 : 1.0};
            dist = dy;
          }
          return {dist, rotate(n, v.angle)};
        } else {
          const Vec2 d = p - v.center;
          const double r = norm(d);
          const Vec2 radial = r > 0 ? (1.0 / r) * d : Vec2{1, 0};
          const double dist = std::abs(r - v.ring_radius) - v.thickness / 2;
          return {dist, r >= v.ring_radius ? radial : -1.0 * radial};
        }
      },
      prim);
}

SurfaceQuery signed_distance(const ObjectSpec& obj, const Pose2& pose, Vec2 point) {
  const Vec2 local = rotate(point - pose.position(), -pose.phi);
  SurfaceQuery best{std::numeric_limits<double>::infinity(), {1, 0}};
  for (const auto& prim : obj.primitives) {
    const auto q = primitive_distance(prim, local);
    if (q.distance < best.distance) best = q;
  }
  best.normal = rotate(best.normal, pose.phi);
  return best;
}

double symmetric_angle_error(double goal_deg, double current_deg,
                             int symmetry_order) {
  if (symmetry_order <= 0) return 0.0;
  return wrap_angle(goal_deg - current_deg, 360.0 / symmetry_order);
}

}  // namespace handopt::env
