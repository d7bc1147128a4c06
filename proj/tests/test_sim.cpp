#include <doctest.h>

#include <cmath>
#include <set>

#include "gentle/errors.hpp"
#include "gentle/labeling.hpp"
#include "gentle/sim.hpp"
#include "oracles.hpp"

using namespace gentle;

namespace {

RunConfig base_config() { return preset(Scale::desk); }

// Hand at the world origin, yaw 0, low enough to touch the object.
WorldState scene(const Eigen::Vector2d& center, bool upright = true) {
  WorldState s;
  s.hand.position = Eigen::Vector2d::Zero();
  s.hand.z = 10.0;
  s.hand_present = true;
  s.object.position = center;
  s.object.upright = upright;
  return s;
}

// Penetration of one finger by walking its path in fine steps.
double walked_penetration(const Simulator& sim, Side side, const Eigen::Vector2d& center, const JointVector& target) {
  const FingerChain& f = sim.hand().finger(side);
  const JointVector open = sim.open_pose();
  const double r = sim.world_config().object_radius_mm;
  const int steps = 200000;
  const Eigen::Vector2d end = oracle::fingertip(f, target);
  for (int k = 0; k <= steps; ++k) {
    const double t = double(k) / steps;
    const Eigen::Vector2d p = oracle::fingertip(f, open + t * (target - open));
    if ((p - center).norm() <= r) return sim.world_config().compliance * (end - p).norm();
  }
  return 0.0;
}

JointVector closure(const Simulator& sim, double s) {
  return sim.joint_box_min() + s * (sim.joint_box_max() - sim.joint_box_min());
}

}  // namespace

TEST_CASE("place_object stays in the workspace and is uniform") {
  const Simulator sim(base_config());
  Rng rng(0);
  const WorldConfig& w = sim.world_config();
  double mx = 0.0, my = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const WorldState s = sim.place_object(rng);
    REQUIRE(w.x_range_mm.contains(s.object.position.x()));
    REQUIRE(w.y_range_mm.contains(s.object.position.y()));
    mx += s.object.position.x() / n;
    my += s.object.position.y() / n;
  }
  // Uniform on [a,b] has sd (b-a)/sqrt(12); the mean of n draws has sd/sqrt(n).
  const double sx = w.x_range_mm.width() / std::sqrt(12.0 * n), sy = w.y_range_mm.width() / std::sqrt(12.0 * n);
  CHECK(std::abs(mx - w.x_range_mm.center()) < 3 * sx);
  CHECK(std::abs(my - w.y_range_mm.center()) < 3 * sy);
}

TEST_CASE("degenerate workspace range pins the coordinate") {
  RunConfig c = base_config();
  c.world.x_range_mm = {500.0, 500.0};
  const Simulator sim(c);
  Rng rng(1);
  for (int i = 0; i < 100; ++i) CHECK(sim.place_object(rng).object.position.x() == 500.0);
}

TEST_CASE("place_object honours an explicit orientation") {
  const Simulator sim(base_config());
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    CHECK(sim.place_object(rng, true).object.upright);
    CHECK_FALSE(sim.place_object(rng, false).object.upright);
  }
}

TEST_CASE("detect_object noise") {
  SUBCASE("zero noise is exact") {
    RunConfig c = base_config();
    c.world.detection_noise_mm = 0.0;
    const Simulator sim(c);
    Rng rng(3);
    const WorldState s = sim.place_object(rng, true);
    CHECK(sim.detect_object(s, rng) == s.object.position);
  }
  SUBCASE("2 mm noise has a 2 mm sample deviation") {
    const Simulator sim(base_config());
    Rng rng(4);
    WorldState s = sim.place_object(rng, true);
    s.object.position = {550.0, 0.0};
    const int n = 10000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = sim.detect_object(s, rng).x() - 550.0;
      sum += d;
      sq += d * d;
    }
    const double sd = std::sqrt((sq - sum * sum / n) / (n - 1));
    CHECK(sd >= 1.9);
    CHECK(sd <= 2.1);
  }
  SUBCASE("lying objects carry the configured bias") {
    RunConfig c = base_config();
    c.world.detection_noise_mm = 0.0;
    c.world.lying_detection_bias_x_mm = 6.0;
    c.world.lying_detection_bias_y_mm = -3.0;
    const Simulator sim(c);
    Rng rng(5);
    WorldState s = sim.place_object(rng, false);
    s.object.position = {550.0, 0.0};
    const Eigen::Vector2d d = sim.detect_object(s, rng);
    CHECK(d.x() == doctest::Approx(556.0));
    CHECK(d.y() == doctest::Approx(-3.0));
  }
}

TEST_CASE("contact with the hand far from the object") {
  const Simulator sim(base_config());
  const WorldState s = scene({500.0, 0.0});
  const ContactResult c = sim.contact(s, closure(sim, 0.5));
  for (Side side : kSides) {
    CHECK(c[side].force == 0.0);
    CHECK_FALSE(c[side].touching);
  }
  CHECK(c.observed == c.target);
  CHECK_FALSE(c.collision);
}

TEST_CASE("spring contact matches a walked fingertip path") {
  RunConfig cfg = base_config();
  cfg.world.wrist_compliance_mm = 0.0;
  const Simulator sim(cfg);
  for (double cx : {-6.0, -2.0, 0.0, 3.0, 7.0})
    for (double s : {0.0, 0.5, 1.0}) {
      const Eigen::Vector2d center(cx, 4.0);
      const JointVector target = closure(sim, s);
      const ContactResult c = sim.contact(scene(center), target);
      REQUIRE_FALSE(c.collision);
      for (Side side : kSides) {
        const double expected = walked_penetration(sim, side, center, target);
        CHECK(c[side].penetration_mm == doctest::Approx(expected).epsilon(2e-3));
        CHECK(c[side].force == doctest::Approx(cfg.world.stiffness_n_per_mm * c[side].penetration_mm));
        CHECK(c[side].touching == (c[side].force > 0.0));
      }
    }
}

TEST_CASE("a fingertip 4 mm past the surface presses with 2 N") {
  RunConfig cfg = base_config();
  cfg.world.wrist_compliance_mm = 0.0;
  cfg.world.stiffness_n_per_mm = 0.5;
  cfg.world.compliance = 1.0;
  const Simulator sim(cfg);
  const JointVector target = closure(sim, 0.5);
  // Slide the object toward the thumb until its walked penetration is 4 mm.
  double lo = -10.0, hi = 10.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (walked_penetration(sim, Side::right, {mid, 0.0}, target) < 4.0 ? lo : hi) = mid;
  }
  const ContactResult c = sim.contact(scene({hi, 0.0}), target);
  CHECK(c[Side::right].force == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("fingers closing on empty space collide") {
  const Simulator sim(base_config());
  JointVector target = sim.open_pose();
  for (int j : sim.hand().active_joints()) target(j) = sim.hand().limits().upper;
  // The fingertips pass within the clearance somewhere along the closing path.
  double closest = 1e9;
  for (int k = 0; k <= 1000; ++k) {
    const JointVector q = sim.open_pose() + (k / 1000.0) * (target - sim.open_pose());
    closest = std::min(closest, (oracle::fingertip(sim.hand().finger(Side::left), q) -
                                 oracle::fingertip(sim.hand().finger(Side::right), q)).norm());
  }
  REQUIRE(closest < sim.world_config().collision_clearance_mm);
  const ContactResult c = sim.contact(scene({500.0, 0.0}), target);
  CHECK(c.collision);
  for (Side side : kSides) CHECK(c[side].force == sim.world_config().collision_force_n);
  CHECK(sim.emit_sound(c) > 0.0);
  CHECK_FALSE(sim.lift_holds(c));
}

TEST_CASE("emit_sound") {
  const Simulator sim(base_config());
  const double thr = sim.world_config().sound_force_threshold_n;
  ContactResult c;
  SUBCASE("quiet grasp") {
    c.fingers[0].force = 0.5 * thr;
    c.fingers[1].force = 0.9 * thr;
    c.joint_travel_rad = 0.5;
    CHECK(sim.emit_sound(c) == 0.0);
  }
  SUBCASE("twice the threshold force") {
    c.fingers[1].force = 2.0 * thr;
    CHECK(sim.emit_sound(c) >= 1.0);
  }
  SUBCASE("actuator travel adds to the amplitude") {
    c.joint_travel_rad = sim.world_config().actuator_travel_threshold_rad + 0.4;
    CHECK(sim.emit_sound(c) == doctest::Approx(0.4 * sim.world_config().actuator_noise_per_rad));
  }
}

TEST_CASE("lift predicate") {
  const Simulator sim(base_config());
  const WorldConfig& w = sim.world_config();
  ContactResult c;
  CHECK_FALSE(sim.lift_holds(c));
  for (auto& f : c.fingers) {
    f.force = 2.0 * w.min_lift_force_n;
    f.touching = true;
  }
  CHECK(sim.lift_holds(c));
  c.fingers[0].offset_mm = w.max_center_offset_mm + 1.0;
  CHECK_FALSE(sim.lift_holds(c));
}

TEST_CASE("phase machine rejects out-of-order operations") {
  const Simulator sim(base_config());
  WorldState s = scene({0.0, 0.0});
  CHECK_THROWS_AS(sim.close_fingers(s, sim.initial_pose()), StateError);
  CHECK_THROWS_AS(sim.attempt_lift(ContactResult{}, s), StateError);
  CHECK_THROWS_AS(s.advance(Phase::lift), StateError);
  s.advance(Phase::initial_grasp);
  CHECK_NOTHROW(sim.close_fingers(s, sim.initial_pose()));
  s.advance(Phase::regrasp);
  s.advance(Phase::regrasp);
  s.advance(Phase::lift);
  CHECK_THROWS_AS(sim.close_fingers(s, sim.initial_pose()), StateError);
  CHECK_THROWS_AS(s.advance(Phase::regrasp), StateError);
  s.advance(Phase::done);
  CHECK_THROWS_AS(s.advance(Phase::done), StateError);
}

TEST_CASE("run_episode is deterministic") {
  const Simulator sim(base_config());
  const auto a = sim.run_episode(77, random_action_source(sim));
  const auto b = sim.run_episode(77, random_action_source(sim));
  CHECK(a == b);
  const auto c = sim.run_episode(78, random_action_source(sim));
  CHECK_FALSE(a == c);
}

TEST_CASE("extreme closures fix the labels") {
  const Simulator sim(base_config());
  RegraspAction tight, loose;
  tight.joints = sim.joint_box_max();
  loose.joints = sim.joint_box_min();
  int loud = 0, dropped = 0;
  for (int i = 0; i < 100; ++i) {
    loud += sim.run_episode(1000 + i, fixed_action_source(tight)).outcome.gentleness == 0;
    dropped += sim.run_episode(2000 + i, fixed_action_source(loose)).outcome.stability == 0;
  }
  CHECK(loud >= 95);
  CHECK(dropped >= 95);
}

TEST_CASE("episodes record three moments with the documented actions") {
  const Simulator sim(base_config());
  const EpisodeRecord r = sim.run_episode(5, random_action_source(sim));
  CHECK(r.moment(Moment::initial).action == r.action);
  CHECK(r.moment(Moment::post_release).action == r.action);
  CHECK(r.moment(Moment::during_regrasp).action.zero_motion());
  CHECK(r.moment(Moment::during_regrasp).action.joints == r.action.joints);
  CHECK(r.outcome.gentleness == gentleness_label(r.sound, sim.sound_threshold()));
  CHECK(r.outcome.stability == (r.lifted ? 1 : 0));
}

TEST_CASE("sample_random_regrasp stays in the collection box") {
  const Simulator sim(base_config());
  const WorldConfig& w = sim.world_config();
  Rng rng(9);
  double lo_psi = 1e9, hi_psi = -1e9;
  for (int i = 0; i < 10000; ++i) {
    const RegraspAction a = sim.sample_random_regrasp(rng);
    REQUIRE(std::abs(a.dx) <= w.max_translation_mm);
    REQUIRE(std::abs(a.dy) <= w.max_translation_mm);
    REQUIRE(std::abs(a.dz) <= w.max_translation_mm);
    REQUIRE(std::abs(a.dpsi) <= w.max_rotation_rad);
    for (int j = 0; j < kJointCount; ++j) {
      REQUIRE(a.joints(j) >= sim.joint_box_min()(j));
      REQUIRE(a.joints(j) <= sim.joint_box_max()(j));
    }
    lo_psi = std::min(lo_psi, a.dpsi);
    hi_psi = std::max(hi_psi, a.dpsi);
  }
  CHECK(rad_to_deg(lo_psi) == doctest::Approx(-15.0).epsilon(0.01));
  CHECK(rad_to_deg(hi_psi) == doctest::Approx(15.0).epsilon(0.01));
  for (int j : sim.hand().active_joints())
    CHECK(sim.joint_box_max()(j) - sim.joint_box_min()(j) == doctest::Approx(0.3));
  for (int j = 0; j < kJointCount; ++j)
    if (!sim.hand().is_active(j)) CHECK(sim.joint_box_max()(j) == sim.joint_box_min()(j));
}

TEST_CASE("property: deeper closure never lowers a finger's force") {
  RunConfig cfg = base_config();
  cfg.world.wrist_compliance_mm = 0.0;
  const Simulator sim(cfg);
  Rng rng(13);
  for (int i = 0; i < 40; ++i) {
    const Eigen::Vector2d center(rng.uniform(-8.0, 8.0), rng.uniform(-12.0, 12.0));
    const WorldState s = scene(center);
    std::array<double, 2> last{0.0, 0.0};
    for (int k = 0; k <= 10; ++k) {
      const ContactResult c = sim.contact(s, closure(sim, k / 10.0));
      if (c.collision) break;
      for (Side side : kSides) {
        CHECK(c[side].force >= last[index(side)] - 1e-9);
        last[index(side)] = c[side].force;
      }
    }
  }
}

TEST_CASE("property: observed joints never pass their targets") {
  const Simulator sim(base_config());
  Rng rng(21);
  for (int i = 0; i < 100; ++i) {
    const Simulator::Grasp g = sim.initial_grasp(rng);
    const ContactResult c = sim.contact(g.world, sim.sample_random_regrasp(rng).joints);
    const JointVector open = sim.open_pose();
    for (int j : sim.hand().active_joints()) {
      const double lo = std::min(open(j), c.target(j)), hi = std::max(open(j), c.target(j));
      CHECK(c.observed(j) >= lo - 1e-12);
      CHECK(c.observed(j) <= hi + 1e-12);
    }
    CHECK(sim.emit_sound(c) >= 0.0);
  }
}

TEST_CASE("all four label combinations are reachable") {
  const Simulator sim(base_config());
  std::set<int> classes;
  for (double depth = 0.0; depth <= 1.0001; depth += 0.1)
    for (double offset = -24.0; offset <= 24.0; offset += 2.0) {
      const ContactResult c = sim.contact(scene({0.0, offset}), closure(sim, depth));
      const GraspOutcome o{static_cast<std::uint8_t>(sim.lift_holds(c)),
                           gentleness_label(sim.emit_sound(c), sim.sound_threshold())};
      classes.insert(o.class_index());
    }
  CHECK(classes.size() == 4);
}
