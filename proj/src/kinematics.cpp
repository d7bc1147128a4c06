#include "gentle/kinematics.hpp"

#include <algorithm>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "gentle/errors.hpp"

namespace gentle {

double FingerChain::reach() const {
  return std::accumulate(link_lengths.begin(), link_lengths.end(), 0.0);
}

void FingerChain::validate() const {
  if (link_lengths.empty()) throw DomainError("finger chain has no links");
  if (link_lengths.size() != joint_indices.size())
    throw DomainError("finger chain needs one joint per link");
  for (double l : link_lengths)
    if (!(l > 0.0)) throw DomainError("finger link lengths must be > 0");
  std::set<int> seen;
  for (int j : joint_indices) {
    if (j < 0 || j >= kJointCount) throw DomainError("joint index " + std::to_string(j) + " outside [0,16)");
    if (!seen.insert(j).second) throw DomainError("joint index " + std::to_string(j) + " repeated");
  }
}

Hand::Hand(const HandConfig& config)
    : limits_{config.joint_limits_rad.lo, config.joint_limits_rad.hi}, inactive_(config.inactive_joint_rad) {
  const double half = 0.5 * config.base_separation_mm;
  const double forward = std::numbers::pi / 2;

  FingerChain& thumb = fingers_[index(Side::right)];
  thumb.link_lengths = config.thumb_links_mm;
  thumb.joint_indices = config.thumb_joints;
  thumb.base_position = {half, -config.palm_offset_mm};
  thumb.base_heading = forward;
  thumb.mirrored = false;

  FingerChain& middle = fingers_[index(Side::left)];
  middle.link_lengths = config.middle_links_mm;
  middle.joint_indices = config.middle_joints;
  middle.base_position = {-half, -config.palm_offset_mm};
  middle.base_heading = forward;
  middle.mirrored = true;

  for (const auto& f : fingers_) {
    f.validate();
    active_.insert(active_.end(), f.joint_indices.begin(), f.joint_indices.end());
  }
  std::sort(active_.begin(), active_.end());
  if (std::adjacent_find(active_.begin(), active_.end()) != active_.end())
    throw DomainError("fingers share a joint index");
}

bool Hand::is_active(int joint) const {
  return std::binary_search(active_.begin(), active_.end(), joint);
}

JointVector Hand::compose(const ActivePose& pose) const {
  const auto& thumb = finger(Side::right).joint_indices;
  const auto& middle = finger(Side::left).joint_indices;
  if (pose.thumb.size() != thumb.size() || pose.middle.size() != middle.size())
    throw DomainError("active pose does not match the finger joint counts");
  JointVector q = JointVector::Constant(inactive_);
  for (std::size_t i = 0; i < thumb.size(); ++i) q(thumb[i]) = pose.thumb[i];
  for (std::size_t i = 0; i < middle.size(); ++i) q(middle[i]) = pose.middle[i];
  return q;
}

ActivePose Hand::active_pose(const JointVector& joints) const {
  ActivePose pose;
  for (int j : finger(Side::right).joint_indices) pose.thumb.push_back(joints(j));
  for (int j : finger(Side::left).joint_indices) pose.middle.push_back(joints(j));
  return pose;
}

void Hand::check_limits(const JointVector& joints) const {
  for (int j = 0; j < kJointCount; ++j) {
    const double q = joints(j);
    if (!std::isfinite(q) || q < limits_.lower || q > limits_.upper) {
      std::ostringstream msg;
      msg << "joint " << j << " = " << q << " rad outside [" << limits_.lower << ", " << limits_.upper << "]";
      throw DomainError(msg.str());
    }
  }
}

Eigen::Vector2d forward_kinematics(const FingerChain& chain, const JointVector& joints,
                                   const JointLimits& limits) {
  for (int j : chain.joint_indices) {
    const double q = joints(j);
    if (!std::isfinite(q) || q < limits.lower || q > limits.upper) {
      std::ostringstream msg;
      msg << "joint " << j << " = " << q << " rad outside [" << limits.lower << ", " << limits.upper << "]";
      throw DomainError(msg.str());
    }
  }
  return chain_endpoint(chain, joints);
}

FingertipState forward_kinematics(const Hand& hand, const JointVector& joints) {
  FingertipState tips;
  for (Side s : kSides) tips[s] = forward_kinematics(hand.finger(s), joints, hand.limits());
  return tips;
}

double fingertip_displacement(const Hand& hand, const JointVector& target_pre,
                              const JointVector& target_post) {
  const auto a = forward_kinematics(hand, target_pre);
  const auto b = forward_kinematics(hand, target_post);
  double sum = 0.0;
  for (Side s : kSides) sum += (b[s] - a[s]).norm();
  return sum;
}

double fingertip_position_error(const Hand& hand, const JointVector& observed,
                                const JointVector& target) {
  // Same geometry as the displacement metric; the arguments carry a
  // different meaning (same instant, observed vs commanded).
  return fingertip_displacement(hand, observed, target);
}

}  // namespace gentle
