#include "gentle/sim.hpp"

#include <algorithm>
#include <cmath>

#include "gentle/errors.hpp"
#include "gentle/labeling.hpp"

namespace gentle {

namespace {

constexpr int kPathSteps = 64;
constexpr int kBisections = 30;

JointVector lerp(const JointVector& a, const JointVector& b, double t) { return a + t * (b - a); }

bool same_contact(const ContactResult& a, const ContactResult& b) {
  for (int i = 0; i < 2; ++i) {
    const auto &x = a.fingers[i], &y = b.fingers[i];
    if (x.force != y.force || x.offset_mm != y.offset_mm || x.penetration_mm != y.penetration_mm ||
        x.touching != y.touching)
      return false;
  }
  return a.target == b.target && a.observed == b.observed && a.collision == b.collision &&
         a.joint_travel_rad == b.joint_travel_rad && a.wrist_shift_mm == b.wrist_shift_mm;
}

// Smallest t in [lo, hi] with pred(t) true, given pred(lo) false and pred(hi) true.
template <typename Pred>
double bisect(double lo, double hi, Pred pred) {
  for (int i = 0; i < kBisections; ++i) {
    const double mid = 0.5 * (lo + hi);
    (pred(mid) ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace

const char* to_string(Moment m) {
  switch (m) {
    case Moment::initial: return "initial";
    case Moment::post_release: return "post_release";
    case Moment::during_regrasp: return "during_regrasp";
  }
  return "?";
}

bool EpisodeRecord::operator==(const EpisodeRecord& o) const {
  return episode_id == o.episode_id && seed == o.seed && moments == o.moments && action == o.action &&
         outcome == o.outcome && metrics == o.metrics && sound == o.sound && upright == o.upright &&
         lifted == o.lifted && same_contact(regrasp_contact, o.regrasp_contact);
}

Simulator::Simulator(const WorldConfig& world, const HandConfig& hand, const SensingConfig& sensing,
                     double sound_threshold)
    : world_(world), sensing_(sensing), hand_(hand), sound_threshold_(sound_threshold) {
  open_ = hand_.compose(world_.open_pose);
  initial_ = hand_.compose(world_.initial_pose);
  box_min_ = hand_.compose(world_.joint_min_pose);
  box_max_ = box_min_;
  for (int j : hand_.active_joints()) box_max_(j) += world_.joint_span_rad;
  hand_.check_limits(open_);
  hand_.check_limits(initial_);
  hand_.check_limits(box_min_);
  hand_.check_limits(box_max_);
}

Simulator::Simulator(const RunConfig& config)
    : Simulator(config.world, config.hand, config.sensing, config.labeling.sound_threshold) {}

WorldState Simulator::place_object(Rng& rng, std::optional<bool> upright) const {
  WorldState s;
  s.object.position = {rng.uniform(world_.x_range_mm.lo, world_.x_range_mm.hi),
                       rng.uniform(world_.y_range_mm.lo, world_.y_range_mm.hi)};
  s.object.yaw = rng.uniform(0.0, std::numbers::pi);
  const bool lying = rng.bernoulli(world_.lying_probability);
  s.object.upright = upright.value_or(!lying);
  s.observed = open_;
  s.target = open_;
  return s;
}

Eigen::Vector2d Simulator::detect_object(const WorldState& state, Rng& rng) const {
  Eigen::Vector2d d = state.object.position;
  if (!state.object.upright) d += Eigen::Vector2d(world_.lying_detection_bias_x_mm, world_.lying_detection_bias_y_mm);
  const double nx = rng.normal(), ny = rng.normal();
  d += world_.detection_noise_mm * Eigen::Vector2d(nx, ny);
  d.x() = std::clamp(d.x(), world_.x_range_mm.lo, world_.x_range_mm.hi);
  d.y() = std::clamp(d.y(), world_.y_range_mm.lo, world_.y_range_mm.hi);
  return d;
}

ContactResult Simulator::contact(const WorldState& state, const JointVector& target) const {
  hand_.check_limits(target);
  ContactResult r;
  r.target = target;
  r.observed = target;
  for (int j : hand_.active_joints()) r.joint_travel_rad += std::abs(target(j) - open_(j));

  const bool in_plane = state.hand.z <= object_height(state.object, world_) - world_.height_clearance_mm;
  auto tip = [&](Side s, double t) { return chain_endpoint(hand_.finger(s), lerp(open_, target, t)); };

  // Fingertip path samples in the hand frame.
  std::array<std::array<Eigen::Vector2d, kPathSteps + 1>, 2> path;
  for (Side s : kSides)
    for (int k = 0; k <= kPathSteps; ++k) path[index(s)][k] = tip(s, double(k) / kPathSteps);

  // Object footprint in the hand frame, optionally shifted along hand x.
  const Eigen::Vector2d center = world_to_hand(state.hand, state.object.position);
  const double rel = state.object.yaw - state.hand.yaw;
  const double rc = std::cos(rel), rs = std::sin(rel);
  auto inside = [&](const Eigen::Vector2d& p, double shift) {
    const double dx = p.x() - center.x() - shift, dy = p.y() - center.y();
    if (state.object.upright) return dx * dx + dy * dy <= world_.object_radius_mm * world_.object_radius_mm;
    const double u = (rc * dx + rs * dy) / world_.lying_semi_major_mm;
    const double v = (-rs * dx + rc * dy) / world_.lying_semi_minor_mm;
    return u * u + v * v <= 1.0;
  };

  // First entry of a fingertip into the object. Coarse mode interpolates
  // between path samples; exact mode re-evaluates the kinematics.
  auto first_entry = [&](Side s, double shift, bool exact) {
    const auto& pts = path[index(s)];
    if (!in_plane) return 2.0;
    if (inside(pts[0], shift)) return 0.0;
    for (int k = 1; k <= kPathSteps; ++k) {
      if (!inside(pts[k], shift)) continue;
      const double lo = double(k - 1) / kPathSteps, hi = double(k) / kPathSteps;
      if (exact) return bisect(lo, hi, [&](double u) { return inside(tip(s, u), shift); });
      return bisect(lo, hi, [&](double u) {
        const double w = (u - lo) * kPathSteps;
        return inside((1.0 - w) * pts[k - 1] + w * pts[k], shift);
      });
    }
    return 2.0;
  };
  auto coarse_depth = [&](Side s, double shift) {
    const double t = first_entry(s, shift, false);
    if (t > 1.0) return 0.0;
    const auto& pts = path[index(s)];
    const int k = std::min(kPathSteps - 1, static_cast<int>(t * kPathSteps));
    const double w = t * kPathSteps - k;
    return (pts[kPathSteps] - ((1.0 - w) * pts[k] + w * pts[k + 1])).norm();
  };
  auto imbalance = [&](double shift) { return coarse_depth(Side::right, shift) - coarse_depth(Side::left, shift); };

  // The wrist complies along the hand x axis, within its range, until both
  // fingers press equally.
  double shift = 0.0;
  const double f0 = imbalance(0.0);
  if (world_.wrist_compliance_mm > 0.0 && f0 != 0.0) {
    const double dir = f0 > 0.0 ? -1.0 : 1.0;
    if (dir * imbalance(dir * world_.wrist_compliance_mm) < 0.0) {
      shift = dir * world_.wrist_compliance_mm;
    } else {
      double lo = 0.0, hi = world_.wrist_compliance_mm;
      for (int i = 0; i < kBisections; ++i) {
        const double mid = 0.5 * (lo + hi);
        (dir * imbalance(dir * mid) < 0.0 ? lo : hi) = mid;
      }
      shift = dir * hi;
    }
  }
  r.wrist_shift_mm = shift;
  const std::array<double, 2> stop{first_entry(Side::left, shift, true), first_entry(Side::right, shift, true)};

  // Fingertips meeting before either is stopped by the object.
  std::array<Eigen::Vector2d, 2> rest;
  for (Side s : kSides) rest[index(s)] = stop[index(s)] <= 1.0 ? tip(s, stop[index(s)]) : path[index(s)][kPathSteps];
  auto at = [&](Side s, double t) { return t >= stop[index(s)] ? rest[index(s)] : tip(s, t); };
  auto closed_in = [&](double t) { return (at(Side::left, t) - at(Side::right, t)).norm() < world_.collision_clearance_mm; };
  std::optional<double> hit;
  for (int k = 0; k <= kPathSteps && !hit; ++k) {
    const double t = double(k) / kPathSteps;
    auto sample = [&](Side s) { return t >= stop[index(s)] ? rest[index(s)] : path[index(s)][k]; };
    if ((sample(Side::left) - sample(Side::right)).norm() < world_.collision_clearance_mm)
      hit = k == 0 ? 0.0 : bisect(double(k - 1) / kPathSteps, t, closed_in);
  }

  if (hit) {
    r.collision = true;
    for (Side s : kSides) {
      const double t = std::min(*hit, stop[index(s)]);
      const JointVector q = lerp(open_, target, t);
      for (int j : hand_.finger(s).joint_indices) r.observed(j) = q(j);
      r[s].force = world_.collision_force_n;
    }
    return r;
  }

  for (Side s : kSides) {
    const double t = stop[index(s)];
    if (t > 1.0) continue;
    const JointVector q = lerp(open_, target, t);
    for (int j : hand_.finger(s).joint_indices) r.observed(j) = q(j);
    FingerContact& f = r[s];
    f.penetration_mm = world_.compliance * (path[index(s)][kPathSteps] - rest[index(s)]).norm();
    f.force = world_.stiffness_n_per_mm * f.penetration_mm;
    f.touching = f.force > 0.0;
    f.offset_mm = rest[index(s)].y() - center.y();
  }
  return r;
}

ContactResult Simulator::close_fingers(WorldState& state, const JointVector& target) const {
  if (state.phase != Phase::initial_grasp && state.phase != Phase::regrasp)
    throw StateError(std::string("close_fingers in phase ") + to_string(state.phase));
  ContactResult r = contact(state, target);
  state.target = r.target;
  state.observed = r.observed;
  state.force = {r.fingers[0].force, r.fingers[1].force};
  state.sound = emit_sound(r);
  return r;
}

double Simulator::emit_sound(const ContactResult& contact) const {
  double amplitude = 0.0;
  const double threshold = world_.sound_force_threshold_n;
  for (const auto& f : contact.fingers) amplitude = std::max(amplitude, (f.force - threshold) / threshold);
  amplitude += world_.actuator_noise_per_rad *
               std::max(0.0, contact.joint_travel_rad - world_.actuator_travel_threshold_rad);
  return amplitude;
}

bool Simulator::attempt_lift(const ContactResult& contact, const WorldState& state) const {
  if (state.phase != Phase::lift) throw StateError(std::string("attempt_lift in phase ") + to_string(state.phase));
  return lift_holds(contact);
}

bool Simulator::lift_holds(const ContactResult& contact) const {
  if (contact.collision) return false;
  for (const auto& f : contact.fingers) {
    if (!f.touching || f.force < world_.min_lift_force_n) return false;
    if (std::abs(f.offset_mm) > world_.max_center_offset_mm) return false;
  }
  return true;
}

RegraspAction Simulator::sample_random_regrasp(Rng& rng) const {
  RegraspAction a;
  a.dx = rng.uniform(-world_.max_translation_mm, world_.max_translation_mm);
  a.dy = rng.uniform(-world_.max_translation_mm, world_.max_translation_mm);
  a.dz = rng.uniform(-world_.max_translation_mm, world_.max_translation_mm);
  a.dpsi = rng.uniform(-world_.max_rotation_rad, world_.max_rotation_rad);
  a.joints = box_min_;
  for (int j : hand_.active_joints()) a.joints(j) = rng.uniform(box_min_(j), box_max_(j));
  return a;
}

void Simulator::release(WorldState& state) const {
  state.target = open_;
  state.observed = open_;
  state.force = {0.0, 0.0};
  state.sound = 0.0;
}

void Simulator::apply_motion(WorldState& state, const RegraspAction& action) const {
  state.hand.position = hand_to_world(state.hand, Eigen::Vector2d(action.dx, action.dy));
  state.hand.z = std::max(world_.min_hand_z_mm, state.hand.z + action.dz);
  state.hand.yaw += action.dpsi;
}

SensoryState Simulator::observe(const WorldState& state, const ContactResult& contact, const Image& ref_left,
                                const Image& ref_right, Rng& rng) const {
  SensoryState s;
  s.visual = render_visual(state, hand_, world_, sensing_, rng);
  s.tactile_left = render_tactile(contact, Side::left, sensing_, rng);
  s.tactile_right = render_tactile(contact, Side::right, sensing_, rng);
  s.tactile_left_ref = ref_left;
  s.tactile_right_ref = ref_right;
  return s;
}

Simulator::Grasp Simulator::initial_grasp(Rng& rng, std::optional<bool> upright) const {
  Grasp g;
  g.world = place_object(rng, upright);
  const Eigen::Vector2d detected = detect_object(g.world, rng);
  const double px = rng.normal(), py = rng.normal();
  g.world.hand.position = detected + world_.initial_perturbation_mm * Eigen::Vector2d(px, py);
  g.world.hand.yaw = rng.uniform(world_.initial_yaw_rad.lo, world_.initial_yaw_rad.hi);
  g.world.hand.z = rng.uniform(world_.initial_z_mm.lo, world_.initial_z_mm.hi);
  g.world.hand_present = true;
  g.world.advance(Phase::initial_grasp);
  g.ref_left = render_tactile_reference(sensing_, rng);
  g.ref_right = render_tactile_reference(sensing_, rng);
  g.contact = close_fingers(g.world, initial_);
  g.observation = observe(g.world, g.contact, g.ref_left, g.ref_right, rng);
  return g;
}

Simulator::Grasp Simulator::regrasp(const Grasp& from, const RegraspAction& action, Rng& rng) const {
  Grasp g;
  g.world = from.world;
  g.world.advance(Phase::regrasp);
  release(g.world);
  apply_motion(g.world, action);
  g.ref_left = render_tactile_reference(sensing_, rng);
  g.ref_right = render_tactile_reference(sensing_, rng);
  g.contact = close_fingers(g.world, action.joints);
  g.observation = observe(g.world, g.contact, g.ref_left, g.ref_right, rng);
  return g;
}

EpisodeRecord Simulator::run_episode(std::uint64_t seed, const ActionSource& source,
                                     std::optional<bool> upright) const {
  const Rng root(seed);
  Rng world_rng = root.fork(1);
  Rng action_rng = root.fork(2);

  EpisodeRecord rec;
  rec.seed = seed;

  const Grasp first = initial_grasp(world_rng, upright);
  rec.upright = first.world.object.upright;
  const RegraspAction a1 = source(first.world, first.observation, action_rng);
  hand_.check_limits(a1.joints);
  rec.action = a1;
  rec.moments[0] = {first.observation, a1};

  WorldState released = first.world;
  release(released);
  rec.moments[1] = {observe(released, ContactResult{}, first.ref_left, first.ref_right, world_rng), a1};

  Grasp second = regrasp(first, a1, world_rng);
  RegraspAction hold;
  hold.joints = a1.joints;
  rec.moments[2] = {second.observation, hold};
  rec.regrasp_contact = second.contact;
  rec.sound = emit_sound(second.contact);

  second.world.advance(Phase::lift);
  rec.lifted = attempt_lift(second.contact, second.world);
  second.world.advance(Phase::done);

  rec.outcome.stability = rec.lifted ? 1 : 0;
  rec.outcome.gentleness = gentleness_label(rec.sound, sound_threshold_);

  rec.metrics.displacement = fingertip_displacement(hand_, open_, a1.joints);
  rec.metrics.position_error = fingertip_position_error(hand_, second.contact.observed, a1.joints);
  for (Side s : kSides)
    rec.metrics.tactile_differential +=
        tactile_differential(second.observation.tactile(s), second.observation.reference(s));
  return rec;
}

ActionSource random_action_source(const Simulator& sim) {
  return [sim = &sim](const WorldState&, const SensoryState&, Rng& rng) { return sim->sample_random_regrasp(rng); };
}

ActionSource fixed_action_source(const RegraspAction& action) {
  return [action](const WorldState&, const SensoryState&, Rng&) { return action; };
}

}  // namespace gentle
