#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>

#include "handopt/common.hpp"
#include "handopt/design_space.hpp"
#include "handopt/objects.hpp"

namespace handopt::env {

// Top-view planar model of the hand. The world frame is centered on the palm
// with +y pointing from the palm's bottom edge toward the finger bases. The
// object rests on the palm plane and slides quasi-statically in it; finger
// links are capsules that flex in the plane.

enum Finger : int { kThumb = 0, kIndex = 1, kMiddle = 2, kRing = 3 };
inline constexpr int kNumFingers = 4;
inline constexpr int kJointsPerFinger = 3;
inline constexpr int kNumJoints = kNumFingers * kJointsPerFinger;
inline constexpr int kActionDim = 2 * kNumFingers;
inline constexpr double kDipCoupling = 0.7;

struct JointLimits {
  double lo = 0.0;
  double hi = 0.0;
};

inline constexpr std::array<JointLimits, kJointsPerFinger> kJointLimits = {
    JointLimits{-20.0, 90.0},  // MCP
    JointLimits{0.0, 110.0},   // PIP
    JointLimits{0.0, 90.0},    // DIP
};

struct FingerModel {
  Vec2 base;                  // world frame, mm
  double rest_heading = 0.0;  // direction of the straight finger, deg
  double flex_sign = 1.0;     // +1 flexes counter-clockwise
  std::array<double, kJointsPerFinger> link_lengths{};
  std::array<JointLimits, kJointsPerFinger> limits = kJointLimits;
};

struct HandModel {
  std::array<FingerModel, kNumFingers> fingers;
  double palm_width = 0.0;
  double palm_height = 0.0;
  double capsule_radius = 7.0;
};

/// Maps a design onto simulated kinematics. The index, middle and ring fingers
/// sit at their design positions and orientations; the thumb is fixed at the
/// bottom-edge center pointing away from the palm. All four fingers share the
/// design's link lengths. Throws OutOfBoundsDesign if `theta` is outside
/// `bounds`.
HandModel build_hand(const design::DesignParams& theta,
                     const design::DesignBounds& bounds,
                     double capsule_radius = 7.0);
HandModel build_hand(const design::DesignParams& theta);

using JointVector = std::array<double, kNumJoints>;
using Action = std::array<double, kActionDim>;

/// Base, MCP, PIP/DIP joints and fingertip of one finger.
std::array<Vec2, kJointsPerFinger + 1> finger_points(const FingerModel& finger,
                                                     std::span<const double, 3> q);

struct Contact {
  int finger = 0;
  int link = 0;
  Vec2 point;           // on the object surface
  Vec2 normal;          // object's outward normal at `point`
  double normal_force = 0.0;      // N, >= 0
  double tangential_force = 0.0;  // N, signed along perp(normal)

  friend bool operator==(const Contact&, const Contact&) = default;
};

inline constexpr int kMaxContacts = kNumFingers * kJointsPerFinger;

struct SimState {
  JointVector joints{};  // deg, finger-major: thumb, ff, mf, rf x MCP/PIP/DIP
  Pose2 object;
  int step_count = 0;
  int hold_counter = 0;
  std::array<Contact, kMaxContacts> contact_buf{};
  int num_contacts = 0;

  std::span<const Contact> contacts() const {
    return {contact_buf.data(), static_cast<std::size_t>(num_contacts)};
  }
  int fingers_in_contact() const;

  friend bool operator==(const SimState&, const SimState&) = default;
};

struct Disturbance {
  double magnitude = 0.0;  // N
  Vec2 direction{1.0, 0.0};
};

struct EpisodeConfig {
  ObjectSpec object;
  Pose2 goal;
  Pose2 initial_object_pose;
  Disturbance disturbance;
  std::uint64_t seed = 0;
  int horizon = 300;
  double dt = 0.02;  // s
};

struct PhysicsParams {
  double contact_stiffness = 200.0;  // k_n, N/m
  double friction = 0.8;             // mu
  double linear_damping = 50.0;      // c_lin, N s/m
  double angular_damping = 5.0;      // c_rot, N m s/rad
  double tangential_damping = 100.0;  // N s/m per contact, capped by mu f_n
  double max_joint_rate = 120.0;     // deg/s at |action| = 1
  double finger_radius = 7.0;        // mm
  double sanity_bound = 1e6;         // mm
};

struct SuccessCriteria {
  double tol_pos = 10.0;  // mm
  double tol_ang = 10.0;  // deg
  int hold_steps = 10;
};

struct RewardWeights {
  double position = 1.0;
  double angle = 0.5;
  double contact = 0.1;
  double success = 5.0;
  double max_position_error = 200.0;  // mm, keeps per-step reward bounded
};

struct EnvParams {
  PhysicsParams physics;
  SuccessCriteria success;
  RewardWeights reward;
  ObjectSizes sizes;
  double dt = 0.02;
  int horizon = 300;
  double goal_radius = 60.0;  // mm around the palm center
};

/// Samples one episode: goal uniform in the goal disc with heading uniform in
/// (-180, 180], disturbance direction uniform on the circle (fixed for the
/// episode), object starting at the palm center.
EpisodeConfig make_episode(const EnvParams& params, const ObjectSpec& object,
                           double force, std::uint64_t seed);

struct PoseError {
  double position = 0.0;  // mm
  double angle = 0.0;     // deg, signed, symmetry-reduced
};

PoseError pose_error(const SimState& state, const EpisodeConfig& config);

/// Per-step success condition: pose within tolerance and at least two
/// distinct fingers touching the object.
bool hold_condition(const SimState& state, const EpisodeConfig& config,
                    double tol_pos, double tol_ang);

/// True iff the hold counter reached `hold_steps` and the condition still
/// holds at `state` under the given tolerances.
bool is_success(const SimState& state, const EpisodeConfig& config,
                double tol_pos, double tol_ang, int hold_steps);

/// Shaped per-step reward from its ingredients.
double reward_terms(const RewardWeights& w, double pos_err, double ang_err,
                    int fingers_in_contact, bool condition);

/// Reward for the transition that produced `state`.
double reward(const SimState& state, const Action& action,
              const EpisodeConfig& config, const EnvParams& params);

inline constexpr int kObsDim = 36;
using Observation = std::array<double, kObsDim>;

/// Deterministic quasi-static simulator for one hand. Holds no mutable state,
/// so a single instance can serve concurrent episodes.
class Simulator {
 public:
  Simulator(HandModel hand, EnvParams params);

  const HandModel& hand() const { return hand_; }
  const EnvParams& params() const { return params_; }

  /// Throws InvalidConfig for malformed configs or an object that does not
  /// start on the palm.
  SimState reset(const EpisodeConfig& config) const;

  /// Throws NumericalBlowup when the state leaves the sanity bound.
  SimState step(const SimState& state, const Action& action,
                const EpisodeConfig& config) const;

  /// 12 normalized joints, 3 pose-error terms, 3 palm-frame pose terms,
  /// 18-way one-hot object id.
  Observation observe(const SimState& state, const EpisodeConfig& config) const;

 private:
  HandModel hand_;
  EnvParams params_;
};

/// Trajectory dump columns: t,q0..q11,obj_x,obj_y,obj_phi,n_contacts,reward.
void write_trajectory_header(std::ostream& out);
void write_trajectory_row(std::ostream& out, int t, const SimState& state,
                          double reward);

}  // namespace handopt::env
