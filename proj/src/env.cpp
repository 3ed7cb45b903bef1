#include "handopt/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>

namespace handopt::env {

namespace {

constexpr double kGolden = 0.6180339887498949;
constexpr int kGoldenIters = 32;

struct SegmentHit {
  double t = 0.0;
  double distance = std::numeric_limits<double>::infinity();
};

double closest_param(Vec2 a, Vec2 d, Vec2 c) {
  const double dd = dot(d, d);
  if (dd <= 0.0) return 0.0;
  return std::clamp(dot(c - a, d) / dd, 0.0, 1.0);
}

// Minimum of the primitive's signed distance along the segment a + t d,
// t in [0, 1], in the object frame. Discs and annuli are solved in closed
// form; rectangles by golden-section search, which is exact up to tolerance
// because a convex shape's signed distance is convex along a line.
SegmentHit segment_min(const Primitive& prim, Vec2 a, Vec2 d) {
  return std::visit(
      [&](const auto& v) -> SegmentHit {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Disc>) {
          const double t = closest_param(a, d, v.center);
          return {t, norm(a + t * d - v.center) - v.radius};
        } else if constexpr (std::is_same_v<T, Annulus>) {
          const double R = v.ring_radius;
          const double half = v.thickness / 2;
          const double ts = closest_param(a, d, v.center);
          const double h_min = norm(a + ts * d - v.center);
          const double h0 = norm(a - v.center);
          const double h1 = norm(a + d - v.center);
          if (h_min >= R) return {ts, h_min - R - half};
          if (R >= std::max(h0, h1)) {
            const double t = h0 >= h1 ? 0.0 : 1.0;
            return {t, R - std::max(h0, h1) - half};
          }
          // The segment crosses the centerline circle: |a + t d - c| = R.
          const Vec2 w = a - v.center;
          const double qa = dot(d, d);
          const double qb = 2.0 * dot(w, d);
          const double qc = dot(w, w) - R * R;
          const double disc = std::sqrt(std::max(qb * qb - 4 * qa * qc, 0.0));
          double t = (-qb - disc) / (2 * qa);
          if (t < 0.0 || t > 1.0) t = (-qb + disc) / (2 * qa);
          return {std::clamp(t, 0.0, 1.0), -half};
        } else {
          auto f = [&](double t) {
            return primitive_distance(prim, a + t * d).distance;
          };
          double lo = 0.0;
          double hi = 1.0;
          double x1 = hi - kGolden * (hi - lo);
          double x2 = lo + kGolden * (hi - lo);
          double f1 = f(x1);
          double f2 = f(x2);
          for (int i = 0; i < kGoldenIters; ++i) {
            if (f1 <= f2) {
              hi = x2;
              x2 = x1;
              f2 = f1;
              x1 = hi - kGolden * (hi - lo);
              f1 = f(x1);
            } else {
              lo = x1;
              x1 = x2;
              f1 = f2;
              x2 = lo + kGolden * (hi - lo);
              f2 = f(x2);
            }
          }
          SegmentHit best{0.0, f(0.0)};
          for (const auto& cand : {SegmentHit{1.0, f(1.0)},
                                   SegmentHit{(lo + hi) / 2, f((lo + hi) / 2)}}) {
            if (cand.distance < best.distance) best = cand;
          }
          return best;
        }
      },
      prim);
}

// Solves a 3x3 linear system by Gaussian elimination with partial pivoting.
std::array<double, 3> solve3(std::array<std::array<double, 3>, 3> A,
                             std::array<double, 3> b) {
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    }
    std::swap(A[col], A[piv]);
    std::swap(b[col], b[piv]);
    for (int r = col + 1; r < 3; ++r) {
      const double f = A[r][col] / A[col][col];
      for (int c = col; c < 3; ++c) A[r][c] -= f * A[col][c];
      b[r] -= f * b[col];
    }
  }
  std::array<double, 3> x{};
  for (int r = 2; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < 3; ++c) s -= A[r][c] * x[c];
    x[r] = s / A[r][r];
  }
  return x;
}

struct ContactCandidate {
  int finger;
  int link;
  double t;  // along the link
  Vec2 point;
  Vec2 normal;
  double depth;
  Vec2 finger_velocity;  // mm/s of the link point
};

bool finite(double v) { return std::isfinite(v); }

}  // namespace

int SimState::fingers_in_contact() const {
  std::array<bool, kNumFingers> touching{};
  for (const auto& c : contacts()) {
    if (c.normal_force > 0.0) touching[c.finger] = true;
  }
  return static_cast<int>(std::count(touching.begin(), touching.end(), true));
}

HandModel build_hand(const design::DesignParams& theta,
                     const design::DesignBounds& bounds, double capsule_radius) {
  if (!bounds.contains(theta)) {
    throw OutOfBoundsDesign("design lies outside the design bounds");
  }
  HandModel hand;
  hand.palm_width = theta.palm_width;
  hand.palm_height = theta.palm_height;
  hand.capsule_radius = capsule_radius;
  const double half_h = theta.palm_height / 2;
  const std::array<double, 3> links = {theta.proximal_len, theta.middle_len,
                                       theta.distal_len};

  auto& thumb = hand.fingers[kThumb];
  thumb.base = {0.0, -half_h};
  thumb.rest_heading = -90.0;
  thumb.flex_sign = 1.0;

  auto place = [&](Finger f, Vec2 pos, double orient, double sign) {
    auto& finger = hand.fingers[f];
    finger.base = {pos.x, pos.y - half_h};
    finger.rest_heading = 90.0 + orient;
    finger.flex_sign = sign;
  };
  place(kIndex, theta.ff_pos, theta.ff_orient, 1.0);
  place(kMiddle, theta.mf_pos, theta.mf_orient, 1.0);
  place(kRing, theta.rf_pos, theta.rf_orient, -1.0);

  for (auto& f : hand.fingers) f.link_lengths = links;
  return hand;
}

HandModel build_hand(const design::DesignParams& theta) {
  return build_hand(theta, design::DesignBounds::table_defaults());
}

std::array<Vec2, kJointsPerFinger + 1> finger_points(
    const FingerModel& finger, std::span<const double, 3> q) {
  std::array<Vec2, kJointsPerFinger + 1> pts;
  pts[0] = finger.base;
  double heading = finger.rest_heading;
  for (int j = 0; j < kJointsPerFinger; ++j) {
    heading += finger.flex_sign * q[j];
    pts[j + 1] = pts[j] + finger.link_lengths[j] * unit_from_deg(heading);
  }
  return pts;
}

EpisodeConfig make_episode(const EnvParams& params, const ObjectSpec& object,
                           double force, std::uint64_t seed) {
  Rng rng(seed);
  EpisodeConfig cfg;
  cfg.object = object;
  cfg.seed = seed;
  cfg.horizon = params.horizon;
  cfg.dt = params.dt;
  const double r = params.goal_radius * std::sqrt(rng.uniform(0.0, 1.0));
  const Vec2 offset = r * unit_from_deg(rng.uniform(0.0, 360.0));
  cfg.goal = {offset.x, offset.y, 180.0 - rng.uniform(0.0, 360.0)};
  cfg.initial_object_pose = {0.0, 0.0, 0.0};
  cfg.disturbance.magnitude = force;
  cfg.disturbance.direction = unit_from_deg(rng.uniform(0.0, 360.0));
  return cfg;
}

PoseError pose_error(const SimState& state, const EpisodeConfig& config) {
  return {norm(config.goal.position() - state.object.position()),
          symmetric_angle_error(config.goal.phi, state.object.phi,
                                config.object.symmetry_order)};
}

bool hold_condition(const SimState& state, const EpisodeConfig& config,
                    double tol_pos, double tol_ang) {
  const auto err = pose_error(state, config);
  return err.position <= tol_pos && std::abs(err.angle) <= tol_ang &&
         state.fingers_in_contact() >= 2;
}

bool is_success(const SimState& state, const EpisodeConfig& config,
                double tol_pos, double tol_ang, int hold_steps) {
  return state.hold_counter >= hold_steps &&
         hold_condition(state, config, tol_pos, tol_ang);
}

double reward_terms(const RewardWeights& w, double pos_err, double ang_err,
                    int fingers_in_contact, bool condition) {
  const double pos = std::min(pos_err, w.max_position_error);
  return -w.position * pos / 100.0 - w.angle * std::abs(ang_err) / 180.0 +
         w.contact * (fingers_in_contact >= 2 ? 1.0 : 0.0) +
         w.success * (condition ? 1.0 : 0.0);
}

double reward(const SimState& state, const Action& /*action*/,
              const EpisodeConfig& config, const EnvParams& params) {
  const auto err = pose_error(state, config);
  const bool cond = hold_condition(state, config, params.success.tol_pos,
                                   params.success.tol_ang);
  return reward_terms(params.reward, err.position, err.angle,
                      state.fingers_in_contact(), cond);
}

Simulator::Simulator(HandModel hand, EnvParams params)
    : hand_(std::move(hand)), params_(std::move(params)) {}

SimState Simulator::reset(const EpisodeConfig& config) const {
  if (config.horizon < 1) throw InvalidConfig("episode horizon must be >= 1");
  if (!(config.dt > 0.0)) throw InvalidConfig("episode dt must be positive");
  if (config.object.primitives.empty()) {
    throw InvalidConfig("episode object has no geometry");
  }
  const auto& d = config.disturbance;
  if (!(d.magnitude >= 0.0) || !finite(d.magnitude)) {
    throw InvalidConfig("disturbance magnitude must be finite and >= 0");
  }
  if (std::abs(norm(d.direction) - 1.0) > 1e-9) {
    throw InvalidConfig("disturbance direction must be a unit vector");
  }
  const auto& p = config.initial_object_pose;
  if (!finite(p.x) || !finite(p.y) || !finite(p.phi) || !finite(config.goal.x) ||
      !finite(config.goal.y) || !finite(config.goal.phi)) {
    throw InvalidConfig("episode poses must be finite");
  }
  if (std::abs(p.x) > hand_.palm_width / 2 || std::abs(p.y) > hand_.palm_height / 2) {
    throw InvalidConfig("object does not start on the palm");
  }
  SimState s;
  s.object = p;
  return s;
}

SimState Simulator::step(const SimState& state, const Action& action,
                         const EpisodeConfig& config) const {
  const auto& ph = params_.physics;
  const double dt = config.dt;
  const double rate = ph.max_joint_rate * dt;
  const double radius = hand_.capsule_radius;

  SimState next;
  next.object = state.object;
  next.step_count = state.step_count + 1;

  // Joints: MCP and a PIP command with the DIP following the PIP.
  for (int f = 0; f < kNumFingers; ++f) {
    const auto& lim = hand_.fingers[f].limits;
    const int j = f * kJointsPerFinger;
    const double a_mcp = std::clamp(action[2 * f], -1.0, 1.0);
    const double a_pip = std::clamp(action[2 * f + 1], -1.0, 1.0);
    next.joints[j] = std::clamp(state.joints[j] + a_mcp * rate, lim[0].lo, lim[0].hi);
    const double pip =
        std::clamp(state.joints[j + 1] + a_pip * rate, lim[1].lo, lim[1].hi);
    next.joints[j + 1] = pip;
    next.joints[j + 2] = std::clamp(kDipCoupling * pip, lim[2].lo, lim[2].hi);
  }

  // Contacts against the object at its current pose.
  const Pose2 pose = state.object;
  const Vec2 center = pose.position();
  const auto& obj = config.object;
  std::array<ContactCandidate, kMaxContacts> cands;
  int n = 0;
  for (int f = 0; f < kNumFingers; ++f) {
    const auto& finger = hand_.fingers[f];
    const std::span<const double, 3> q_new(next.joints.data() + f * kJointsPerFinger, 3);
    const std::span<const double, 3> q_old(state.joints.data() + f * kJointsPerFinger, 3);
    const auto pts = finger_points(finger, q_new);
    const auto old_pts = finger_points(finger, q_old);
    for (int l = 0; l < kJointsPerFinger; ++l) {
      const Vec2 a = pts[l];
      const Vec2 seg = pts[l + 1] - pts[l];
      // Broad phase on the object's bounding disc.
      const double tc = closest_param(a, seg, center);
      if (norm(a + tc * seg - center) > obj.bounding_radius + radius) continue;

      const Vec2 a_local = rotate(a - center, -pose.phi);
      const Vec2 d_local = rotate(seg, -pose.phi);
      SegmentHit best;
      for (const auto& prim : obj.primitives) {
        const auto hit = segment_min(prim, a_local, d_local);
        if (hit.distance < best.distance) best = hit;
      }
      const double depth = radius - best.distance;
      if (!(depth > 0.0)) continue;

      const Vec2 p_world = a + best.t * seg;
      const auto surf = signed_distance(obj, pose, p_world);
      const Vec2 old_world = old_pts[l] + best.t * (old_pts[l + 1] - old_pts[l]);
      cands[n++] = {f, l, best.t, p_world - surf.distance * surf.normal,
                    surf.normal, depth, (1.0 / dt) * (p_world - old_world)};
    }
  }

  // Quasi-static balance: c_lin v = sum F, c_rot w = sum tau, with viscous
  // tangential contact forces capped by the friction cone. Units: mm, N, s.
  const double k_n = ph.contact_stiffness / 1000.0;    // N/mm
  const double c_lin = ph.linear_damping / 1000.0;     // N/(mm/s)
  const double k_t = ph.tangential_damping / 1000.0;   // N/(mm/s)
  const double c_rot = ph.angular_damping;             // N m s/rad
  const Vec2 f_dist = config.disturbance.magnitude * config.disturbance.direction;

  std::array<double, kMaxContacts> fn{};
  std::array<double, kMaxContacts> ft{};
  std::array<bool, kMaxContacts> sliding{};
  std::array<Vec2, kMaxContacts> r{};
  std::array<Vec2, kMaxContacts> tang{};
  for (int i = 0; i < n; ++i) {
    fn[i] = k_n * cands[i].depth;
    r[i] = cands[i].point - center;
    tang[i] = perp(cands[i].normal);
  }

  double vx = 0.0, vy = 0.0, w = 0.0;
  for (int iter = 0; iter <= n; ++iter) {
    std::array<std::array<double, 3>, 3> A{};
    std::array<double, 3> b{f_dist.x, f_dist.y, 0.0};
    A[0][0] = c_lin;
    A[1][1] = c_lin;
    A[2][2] = c_rot;
    for (int i = 0; i < n; ++i) {
      const Vec2 nf = -fn[i] * cands[i].normal;
      b[0] += nf.x;
      b[1] += nf.y;
      b[2] += cross(r[i], nf) / 1000.0;
      const Vec2 t = tang[i];
      const double g = cross(r[i], t);
      if (sliding[i]) {
        b[0] += ft[i] * t.x;
        b[1] += ft[i] * t.y;
        b[2] += g * ft[i] / 1000.0;
        continue;
      }
      const double tu = dot(t, cands[i].finger_velocity);
      const std::array<double, 3> row = {t.x, t.y, g};
      for (int c = 0; c < 3; ++c) {
        A[0][c] += k_t * t.x * row[c];
        A[1][c] += k_t * t.y * row[c];
        A[2][c] += k_t * g * row[c] / 1000.0;
      }
      b[0] += k_t * tu * t.x;
      b[1] += k_t * tu * t.y;
      b[2] += k_t * tu * g / 1000.0;
    }
    const auto x = solve3(A, b);
    vx = x[0];
    vy = x[1];
    w = x[2];

    bool changed = false;
    for (int i = 0; i < n; ++i) {
      if (sliding[i]) continue;
      const double slip = dot(tang[i], cands[i].finger_velocity) -
                          (tang[i].x * vx + tang[i].y * vy) -
                          w * cross(r[i], tang[i]);
      ft[i] = k_t * slip;
      const double cap = ph.friction * fn[i];
      if (std::abs(ft[i]) > cap) {
        ft[i] = std::copysign(cap, ft[i]);
        sliding[i] = true;
        changed = true;
      }
    }
    if (!changed) break;
  }

  // Integrate from the final (cone-respecting) forces.
  Vec2 force = f_dist;
  double torque = 0.0;
  for (int i = 0; i < n; ++i) {
    const double cap = ph.friction * fn[i];
    ft[i] = std::clamp(ft[i], -cap, cap);
    const Vec2 fi = -fn[i] * cands[i].normal + ft[i] * tang[i];
    force = force + fi;
    torque += cross(r[i], fi) / 1000.0;
    next.contact_buf[i] = {cands[i].finger, cands[i].link, cands[i].point,
                           cands[i].normal, fn[i], ft[i]};
  }
  next.num_contacts = n;
  const Vec2 v = (1.0 / c_lin) * force;
  const double omega = torque / c_rot;
  next.object.x += v.x * dt;
  next.object.y += v.y * dt;
  next.object.phi = wrap_angle(next.object.phi + rad2deg(omega) * dt);

  const auto& o = next.object;
  if (!finite(o.x) || !finite(o.y) || !finite(o.phi) ||
      std::abs(o.x) > ph.sanity_bound || std::abs(o.y) > ph.sanity_bound) {
    throw NumericalBlowup("object state left the sanity bound at step " +
                          std::to_string(next.step_count));
  }

  next.hold_counter =
      hold_condition(next, config, params_.success.tol_pos, params_.success.tol_ang)
          ? state.hold_counter + 1
          : 0;
  return next;
}

Observation Simulator::observe(const SimState& state,
                               const EpisodeConfig& config) const {
  Observation obs{};
  for (int j = 0; j < kNumJoints; ++j) {
    const auto& lim = kJointLimits[j % kJointsPerFinger];
    obs[j] = 2.0 * (state.joints[j] - lim.lo) / (lim.hi - lim.lo) - 1.0;
  }
  const auto& o = state.object;
  const int sym = config.object.symmetry_order;
  obs[12] = (config.goal.x - o.x) / 100.0;
  obs[13] = (config.goal.y - o.y) / 100.0;
  obs[14] = symmetric_angle_error(config.goal.phi, o.phi, sym) / 180.0;
  obs[15] = o.x / 100.0;
  obs[16] = o.y / 100.0;
  obs[17] = symmetric_angle_error(o.phi, 0.0, sym) / 180.0;
  obs[18 + config.object.one_hot_index] = 1.0;
  return obs;
}

void write_trajectory_header(std::ostream& out) {
  out << "t";
  for (int j = 0; j < kNumJoints; ++j) out << ",q" << j;
  out << ",obj_x,obj_y,obj_phi,n_contacts,reward\n";
}

void write_trajectory_row(std::ostream& out, int t, const SimState& s,
                          double reward) {
  out << t;
  for (double q : s.joints) out << fmt::format(",{}", q);
  out << fmt::format(",{},{},{},{},{}\n", s.object.x, s.object.y, s.object.phi,
                     s.num_contacts, reward);
}

}  // namespace handopt::env
