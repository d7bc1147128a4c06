#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gentle/errors.hpp"
#include "gentle/kinematics.hpp"
#include "gentle/rng.hpp"
#include "oracles.hpp"

using namespace gentle;

namespace {

JointVector random_joints(const Hand& hand, Rng& rng) {
  JointVector q = JointVector::Constant(hand.inactive_angle());
  for (int j : hand.active_joints()) q(j) = rng.uniform(hand.limits().lower, hand.limits().upper);
  return q;
}

Eigen::Vector2d rotate(const Eigen::Vector2d& v, double a) {
  return {std::cos(a) * v.x() - std::sin(a) * v.y(), std::sin(a) * v.x() + std::cos(a) * v.y()};
}

}  // namespace

TEST_CASE("straight chain points along the base heading") {
  const Hand hand;
  const JointVector zero = JointVector::Zero();
  for (Side s : kSides) {
    const FingerChain& f = hand.finger(s);
    const Eigen::Vector2d expected = f.base_position + rotate({f.reach(), 0.0}, f.base_heading);
    const Eigen::Vector2d tip = forward_kinematics(f, zero, hand.limits());
    CHECK((tip - expected).norm() < 1e-12);
  }
}

TEST_CASE("single right-angle rotation of a two-link chain") {
  FingerChain chain;
  chain.link_lengths = {50.0, 40.0};
  chain.joint_indices = {0, 1};
  JointVector q = JointVector::Zero();
  q(0) = std::numbers::pi / 2;
  const Eigen::Vector2d tip = forward_kinematics(chain, q, JointLimits{-2.0, 2.0});
  CHECK(std::abs(tip.x()) < 1e-12);
  CHECK(tip.y() == doctest::Approx(90.0).epsilon(1e-15));
}

TEST_CASE("forward kinematics matches the rotation-matrix oracle") {
  const Hand hand;
  Rng rng(11);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const JointVector q = random_joints(hand, rng);
    const FingertipState tips = forward_kinematics(hand, q);
    for (Side s : kSides) worst = std::max(worst, (tips[s] - oracle::fingertip(hand.finger(s), q)).norm());
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("out-of-limit joints are rejected with the joint index") {
  const Hand hand;
  JointVector q = JointVector::Zero();
  q(6) = 2.0;
  try {
    forward_kinematics(hand, q);
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("6") != std::string::npos);
  }
}

TEST_CASE("inactive joints hold their default value") {
  const Hand hand;
  Rng rng(3);
  const JointVector q = random_joints(hand, rng);
  const JointVector composed = hand.compose(hand.active_pose(q));
  CHECK(composed == q);
  for (int j = 0; j < kJointCount; ++j)
    if (!hand.is_active(j)) CHECK(composed(j) == hand.inactive_angle());
}

TEST_CASE("fingertip displacement") {
  const Hand hand;
  const FingerChain& thumb = hand.finger(Side::right);
  JointVector a = JointVector::Zero();
  a(thumb.joint_indices[1]) = 0.7;

  SUBCASE("identical poses give zero") { CHECK(fingertip_displacement(hand, a, a) == 0.0); }

  SUBCASE("a 3 mm chord constructed on the thumb") {
    // Rotating the first joint by theta moves the tip along a chord of
    // length 2 r sin(theta/2), with r the base-to-tip distance.
    const double l1 = thumb.link_lengths[0], l2 = thumb.link_lengths[1];
    const double r = std::sqrt(l1 * l1 + l2 * l2 + 2 * l1 * l2 * std::cos(0.7));
    const double theta = 2.0 * std::asin(1.5 / r);
    JointVector b = a;
    b(thumb.joint_indices[0]) += theta;
    CHECK(fingertip_displacement(hand, a, b) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(fingertip_position_error(hand, b, a) == doctest::Approx(3.0).epsilon(1e-12));
  }

  SUBCASE("a 5 mm chord gives a 5 mm position error") {
    const double l1 = thumb.link_lengths[0], l2 = thumb.link_lengths[1];
    const double r = std::sqrt(l1 * l1 + l2 * l2 + 2 * l1 * l2 * std::cos(0.7));
    JointVector observed = a;
    observed(thumb.joint_indices[0]) -= 2.0 * std::asin(2.5 / r);
    CHECK(fingertip_position_error(hand, observed, a) == doctest::Approx(5.0).epsilon(1e-12));
  }

  SUBCASE("random pairs match the oracle") {
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
      const JointVector p = random_joints(hand, rng), q = random_joints(hand, rng);
      CHECK(std::abs(fingertip_displacement(hand, p, q) - oracle::summed_distance(hand, p, q)) < 1e-9);
      CHECK(std::abs(fingertip_position_error(hand, p, q) - oracle::summed_distance(hand, p, q)) < 1e-9);
    }
  }
}

TEST_CASE("property: rotating the base rotates the fingertip about it") {
  const Hand hand;
  Rng rng(17);
  for (int i = 0; i < 50; ++i) {
    const JointVector q = random_joints(hand, rng);
    const double theta = rng.uniform(-3.0, 3.0);
    for (Side s : kSides) {
      FingerChain turned = hand.finger(s);
      turned.base_heading += theta;
      const Eigen::Vector2d before = forward_kinematics(hand.finger(s), q, hand.limits()) - hand.finger(s).base_position;
      const Eigen::Vector2d after = forward_kinematics(turned, q, hand.limits()) - turned.base_position;
      CHECK((rotate(before, theta) - after).norm() < 1e-9);
    }
  }
}

TEST_CASE("property: metrics are symmetric and satisfy the triangle inequality") {
  const Hand hand;
  Rng rng(23);
  for (int i = 0; i < 100; ++i) {
    const JointVector a = random_joints(hand, rng), b = random_joints(hand, rng), c = random_joints(hand, rng);
    CHECK(fingertip_displacement(hand, a, b) == doctest::Approx(fingertip_displacement(hand, b, a)).epsilon(1e-14));
    CHECK(fingertip_position_error(hand, a, b) ==
          doctest::Approx(fingertip_position_error(hand, b, a)).epsilon(1e-14));
    for (Side s : kSides) {
      const FingerChain& f = hand.finger(s);
      const auto pa = oracle::fingertip(f, a), pb = oracle::fingertip(f, b), pc = oracle::fingertip(f, c);
      CHECK((pa - pc).norm() <= (pa - pb).norm() + (pb - pc).norm() + 1e-12);
    }
    CHECK(fingertip_displacement(hand, a, c) <=
          fingertip_displacement(hand, a, b) + fingertip_displacement(hand, b, c) + 1e-9);
  }
}

TEST_CASE("property: metrics are continuous in each active joint") {
  const Hand hand;
  Rng rng(29);
  const double eps = 5e-7;
  for (int i = 0; i < 50; ++i) {
    const JointVector a = random_joints(hand, rng), b = random_joints(hand, rng);
    for (int j : hand.active_joints()) {
      JointVector ap = a;
      ap(j) += (ap(j) + eps <= hand.limits().upper) ? eps : -eps;
      const double reach = hand.finger(Side::left).reach() + hand.finger(Side::right).reach();
      CHECK(std::abs(fingertip_displacement(hand, ap, b) - fingertip_displacement(hand, a, b)) < reach * eps * 2.0);
      CHECK(std::abs(fingertip_position_error(hand, ap, b) - fingertip_position_error(hand, a, b)) < reach * eps * 2.0);
    }
  }
}
