#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include <Eigen/Core>

#include "gentle/kinematics.hpp"

namespace gentle {

/// Relative end-effector motion in the hand frame plus absolute joint targets.
struct RegraspAction {
  double dx = 0.0;    // mm
  double dy = 0.0;    // mm
  double dz = 0.0;    // mm
  double dpsi = 0.0;  // rad
  JointVector joints = JointVector::Zero();

  static constexpr int kValues = 4 + kJointCount;

  bool zero_motion() const { return dx == 0.0 && dy == 0.0 && dz == 0.0 && dpsi == 0.0; }
  std::array<double, kValues> values() const;
  static RegraspAction from_values(const std::array<double, kValues>& v);
  bool operator==(const RegraspAction& o) const { return values() == o.values(); }
};

/// Two outcome bits: stability (1 = held during lift), gentleness (1 = quiet).
struct GraspOutcome {
  std::uint8_t stability = 0;
  std::uint8_t gentleness = 0;

  /// Row/column of the 4-class tables, ordered (1,1), (1,0), (0,1), (0,0).
  int class_index() const { return (1 - stability) * 2 + (1 - gentleness); }
  static GraspOutcome from_class(int c) {
    return {static_cast<std::uint8_t>(c < 2 ? 1 : 0), static_cast<std::uint8_t>(c % 2 == 0 ? 1 : 0)};
  }
  bool operator==(const GraspOutcome&) const = default;
};

struct ObjectPose {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();  // world mm
  double yaw = 0.0;
  bool upright = true;
};

/// End-effector (pinch point) pose.
struct HandPose {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  double z = 300.0;
  double yaw = 0.0;
};

enum class Phase { before, initial_grasp, regrasp, lift, done };

const char* to_string(Phase p);

struct FingerContact {
  double force = 0.0;           // N
  double offset_mm = 0.0;       // contact point from object center, along hand y
  double penetration_mm = 0.0;
  bool touching = false;
};

struct ContactResult {
  std::array<FingerContact, 2> fingers;
  JointVector target = JointVector::Zero();
  /// Settled joints; equals `target` where nothing blocked the finger.
  JointVector observed = JointVector::Zero();
  bool collision = false;
  /// Summed absolute active-joint travel from the open pose to the target.
  double joint_travel_rad = 0.0;
  /// Wrist displacement along the hand x axis that balanced the fingers.
  double wrist_shift_mm = 0.0;

  const FingerContact& operator[](Side s) const { return fingers[index(s)]; }
  FingerContact& operator[](Side s) { return fingers[index(s)]; }
};

struct WorldState {
  ObjectPose object;
  HandPose hand;
  bool hand_present = false;
  JointVector target = JointVector::Zero();
  JointVector observed = JointVector::Zero();
  std::array<double, 2> force{0.0, 0.0};
  double sound = 0.0;
  Phase phase = Phase::before;

  /// Enforces before -> initial_grasp -> regrasp (repeatable) -> lift -> done.
  void advance(Phase next);
};

/// Object footprint test in world coordinates (disk upright, ellipse lying).
bool object_contains(const ObjectPose& object, const WorldConfig& wc, const Eigen::Vector2d& p);

double object_height(const ObjectPose& object, const WorldConfig& wc);

/// Hand-frame point to world coordinates.
inline Eigen::Vector2d hand_to_world(const HandPose& hand, const Eigen::Vector2d& p) {
  const double c = std::cos(hand.yaw), s = std::sin(hand.yaw);
  return hand.position + Eigen::Vector2d(c * p.x() - s * p.y(), s * p.x() + c * p.y());
}

inline Eigen::Vector2d world_to_hand(const HandPose& hand, const Eigen::Vector2d& p) {
  const double c = std::cos(hand.yaw), s = std::sin(hand.yaw);
  const Eigen::Vector2d d = p - hand.position;
  return {c * d.x() + s * d.y(), -s * d.x() + c * d.y()};
}

}  // namespace gentle
