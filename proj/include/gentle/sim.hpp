#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>

#include "gentle/config.hpp"
#include "gentle/kinematics.hpp"
#include "gentle/rng.hpp"
#include "gentle/sensing.hpp"
#include "gentle/world.hpp"

namespace gentle {

/// Observation moments recorded per episode.
enum class Moment : std::uint8_t { initial = 0, post_release = 1, during_regrasp = 2 };

const char* to_string(Moment m);

struct Observation {
  SensoryState state;
  RegraspAction action;
  bool operator==(const Observation&) const = default;
};

/// The three grasping-force proxies, each summed over both fingers.
struct ForceMetrics {
  double displacement = 0.0;
  double position_error = 0.0;
  double tactile_differential = 0.0;
  bool operator==(const ForceMetrics&) const = default;
};

struct EpisodeRecord {
  std::uint32_t episode_id = 0;
  std::uint64_t seed = 0;
  std::array<Observation, 3> moments;
  /// The regrasp action a_1 that was executed.
  RegraspAction action;
  GraspOutcome outcome;
  ForceMetrics metrics;
  double sound = 0.0;
  bool upright = true;
  /// Ground-truth lift result; `outcome.stability` may come from a label model instead.
  bool lifted = false;
  ContactResult regrasp_contact;

  const Observation& moment(Moment m) const { return moments[static_cast<int>(m)]; }
  bool operator==(const EpisodeRecord& o) const;
};

/// Chooses the regrasp action from the initial-grasp world and observation.
using ActionSource = std::function<RegraspAction(const WorldState&, const SensoryState&, Rng&)>;

class Simulator {
 public:
  Simulator(const WorldConfig& world, const HandConfig& hand, const SensingConfig& sensing,
            double sound_threshold);
  explicit Simulator(const RunConfig& config);

  const Hand& hand() const { return hand_; }
  const WorldConfig& world_config() const { return world_; }
  const SensingConfig& sensing_config() const { return sensing_; }
  double sound_threshold() const { return sound_threshold_; }

  JointVector open_pose() const { return open_; }
  JointVector initial_pose() const { return initial_; }
  JointVector joint_box_min() const { return box_min_; }
  JointVector joint_box_max() const { return box_max_; }

  /// Uniform position in the workspace. With no explicit orientation the
  /// object lies down with the configured probability.
  WorldState place_object(Rng& rng, std::optional<bool> upright = std::nullopt) const;

  /// True position plus Gaussian noise (and the lying bias), clamped to the workspace.
  Eigen::Vector2d detect_object(const WorldState& state, Rng& rng) const;

  /// Contact of a closing motion from the open pose to `target` at the
  /// current hand pose. Pure; does not check the phase.
  ContactResult contact(const WorldState& state, const JointVector& target) const;

  /// Phase-checked closing; stores target, observed joints and forces in `state`.
  ContactResult close_fingers(WorldState& state, const JointVector& target) const;

  double emit_sound(const ContactResult& contact) const;
  bool attempt_lift(const ContactResult& contact, const WorldState& state) const;
  /// The lift predicate without the phase check.
  bool lift_holds(const ContactResult& contact) const;

  RegraspAction sample_random_regrasp(Rng& rng) const;

  /// Opens the fingers and clears contact forces.
  void release(WorldState& state) const;

  /// Applies the relative motion in the hand frame; z is clamped at the floor.
  void apply_motion(WorldState& state, const RegraspAction& action) const;

  /// Renders the visual and both tactile images; references are passed through.
  SensoryState observe(const WorldState& state, const ContactResult& contact, const Image& ref_left,
                       const Image& ref_right, Rng& rng) const;

  /// Initial grasp: hand placed at the perturbed detection with random yaw
  /// and height, fingers closed to the initial pose.
  struct Grasp {
    WorldState world;
    ContactResult contact;
    Image ref_left;
    Image ref_right;
    SensoryState observation;
  };
  Grasp initial_grasp(Rng& rng, std::optional<bool> upright = std::nullopt) const;

  /// Releases, moves by the action and closes to its joints. Phase must be
  /// initial_grasp or regrasp.
  Grasp regrasp(const Grasp& from, const RegraspAction& action, Rng& rng) const;

  /// All four phases for one episode.
  EpisodeRecord run_episode(std::uint64_t seed, const ActionSource& source,
                            std::optional<bool> upright = std::nullopt) const;

 private:
  WorldConfig world_;
  SensingConfig sensing_;
  Hand hand_;
  double sound_threshold_;
  JointVector open_;
  JointVector initial_;
  JointVector box_min_;
  JointVector box_max_;
};

/// Uniform sampler over the collection box.
ActionSource random_action_source(const Simulator& sim);

/// Always returns `action`.
ActionSource fixed_action_source(const RegraspAction& action);

}  // namespace gentle
