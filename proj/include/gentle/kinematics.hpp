#pragma once

#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "gentle/config.hpp"

namespace gentle {

inline constexpr int kJointCount = 16;

/// Absolute hand joint angles (rad), Allegro ordering.
using JointVector = Eigen::Matrix<double, kJointCount, 1>;

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;

/// left is the middle finger, right is the thumb (hand frame, looking down).
enum class Side { left = 0, right = 1 };
inline constexpr std::array<Side, 2> kSides{Side::left, Side::right};

inline int index(Side s) { return static_cast<int>(s); }

struct JointLimits {
  double lower = -0.6;
  double upper = 1.6;
};

/// Planar serial chain driven by a subset of the hand joints.
struct FingerChain {
  std::vector<double> link_lengths;
  Eigen::Vector2d base_position = Eigen::Vector2d::Zero();
  double base_heading = 0.0;
  std::vector<int> joint_indices;
  /// Mirrored chains turn clockwise for positive joint angles.
  bool mirrored = false;

  double reach() const;
  /// Throws DomainError on non-positive links or bad joint indices.
  void validate() const;
};

/// Chain endpoint with each link rotated by the running sum of the
/// preceding joint angles. No limit checks; any scalar type.
template <typename Derived>
Vec2<typename Derived::Scalar> chain_endpoint(const FingerChain& chain,
                                              const Eigen::MatrixBase<Derived>& joints) {
  using Scalar = typename Derived::Scalar;
  const Scalar sign = chain.mirrored ? Scalar(-1) : Scalar(1);
  Vec2<Scalar> tip = chain.base_position.template cast<Scalar>();
  Scalar cumulative(0);
  for (std::size_t i = 0; i < chain.link_lengths.size(); ++i) {
    cumulative += joints(chain.joint_indices[i]);
    const Scalar angle = Scalar(chain.base_heading) + sign * cumulative;
    tip += Scalar(chain.link_lengths[i]) * Vec2<Scalar>(std::cos(angle), std::sin(angle));
  }
  return tip;
}

struct FingertipState {
  std::array<Eigen::Vector2d, 2> position;

  const Eigen::Vector2d& operator[](Side s) const { return position[index(s)]; }
  Eigen::Vector2d& operator[](Side s) { return position[index(s)]; }
};

/// Two-finger planar hand: thumb (right) and middle finger (left) facing
/// each other across the pinch point at the hand-frame origin.
class Hand {
 public:
  explicit Hand(const HandConfig& config = {});

  const FingerChain& finger(Side s) const { return fingers_[index(s)]; }
  const JointLimits& limits() const { return limits_; }
  double inactive_angle() const { return inactive_; }

  /// Sorted indices of all active joints.
  const std::vector<int>& active_joints() const { return active_; }
  bool is_active(int joint) const;

  /// Full joint vector from per-finger active values; inactive joints get
  /// their fixed default.
  JointVector compose(const ActivePose& pose) const;
  ActivePose active_pose(const JointVector& joints) const;

  /// Throws DomainError naming the first joint outside the limits.
  void check_limits(const JointVector& joints) const;

 private:
  std::array<FingerChain, 2> fingers_;
  JointLimits limits_;
  double inactive_ = 0.0;
  std::vector<int> active_;
};

/// Fingertip of one chain; validates the chain's joints against `limits`.
Eigen::Vector2d forward_kinematics(const FingerChain& chain, const JointVector& joints,
                                   const JointLimits& limits);

FingertipState forward_kinematics(const Hand& hand, const JointVector& joints);

/// Summed per-finger distance between fingertips under two target vectors.
double fingertip_displacement(const Hand& hand, const JointVector& target_pre,
                              const JointVector& target_post);

/// Summed per-finger distance between observed and target fingertips.
double fingertip_position_error(const Hand& hand, const JointVector& observed,
                                const JointVector& target);

}  // namespace gentle
