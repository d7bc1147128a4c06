#include "gentle/world.hpp"

#include <string>

#include "gentle/errors.hpp"

namespace gentle {

std::array<double, RegraspAction::kValues> RegraspAction::values() const {
  std::array<double, kValues> v{};
  v[0] = dx;
  v[1] = dy;
  v[2] = dz;
  v[3] = dpsi;
  for (int j = 0; j < kJointCount; ++j) v[4 + j] = joints(j);
  return v;
}

RegraspAction RegraspAction::from_values(const std::array<double, kValues>& v) {
  RegraspAction a;
  a.dx = v[0];
  a.dy = v[1];
  a.dz = v[2];
  a.dpsi = v[3];
  for (int j = 0; j < kJointCount; ++j) a.joints(j) = v[4 + j];
  return a;
}

const char* to_string(Phase p) {
  switch (p) {
    case Phase::before: return "before";
    case Phase::initial_grasp: return "initial_grasp";
    case Phase::regrasp: return "regrasp";
    case Phase::lift: return "lift";
    case Phase::done: return "done";
  }
  return "?";
}

void WorldState::advance(Phase next) {
  bool ok = false;
  switch (phase) {
    case Phase::before: ok = next == Phase::initial_grasp; break;
    case Phase::initial_grasp: ok = next == Phase::regrasp || next == Phase::lift; break;
    case Phase::regrasp: ok = next == Phase::regrasp || next == Phase::lift; break;
    case Phase::lift: ok = next == Phase::done; break;
    case Phase::done: ok = false; break;
  }
  if (!ok)
    throw StateError(std::string("illegal phase transition ") + to_string(phase) + " -> " + to_string(next));
  phase = next;
}

bool object_contains(const ObjectPose& object, const WorldConfig& wc, const Eigen::Vector2d& p) {
  const Eigen::Vector2d d = p - object.position;
  if (object.upright) return d.squaredNorm() <= wc.object_radius_mm * wc.object_radius_mm;
  const double c = std::cos(object.yaw), s = std::sin(object.yaw);
  const double u = (c * d.x() + s * d.y()) / wc.lying_semi_major_mm;
  const double v = (-s * d.x() + c * d.y()) / wc.lying_semi_minor_mm;
  return u * u + v * v <= 1.0;
}

double object_height(const ObjectPose& object, const WorldConfig& wc) {
  return object.upright ? wc.upright_height_mm : wc.lying_height_mm;
}

}  // namespace gentle
