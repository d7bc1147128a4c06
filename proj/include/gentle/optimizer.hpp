#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gentle/config.hpp"
#include "gentle/model.hpp"
#include "gentle/sim.hpp"

namespace gentle {

/// General candidates first, then the zero-motion ones.
struct CandidateSet {
  std::vector<RegraspAction> actions;
  int general = 0;
  int zero_motion = 0;

  std::size_t size() const { return actions.size(); }
};

/// General candidates are uniform over the collection box; zero-motion
/// candidates keep the joint draw and zero the end-effector motion.
CandidateSet sample_candidates(const Simulator& sim, Rng& rng, int n_general, int n_zero_motion);
/// Splits `config.candidates` by `zero_motion_fraction` (rounded).
CandidateSet sample_candidates(const Simulator& sim, Rng& rng, const OptimizerConfig& config);

/// Scores candidate actions in the current world. Learned predictors ignore
/// the world; the oracle reads it. `rng` serves stochastic policies.
using Predictor = std::function<std::vector<PredictedOutcome>(const WorldState&, const SensoryState&,
                                                              const std::vector<RegraspAction>&, Rng&)>;

Predictor model_predictor(const Model& model);
/// Ground truth as 0/1 probabilities from the simulator's contact, sound and lift models.
Predictor oracle_predictor(const Simulator& sim);
/// Independent uniform probabilities; picks a uniformly random feasible candidate.
Predictor random_predictor();

inline constexpr std::size_t kNoCandidate = std::numeric_limits<std::size_t>::max();

/// Ordering used by every argmax: higher f_s, then higher f_g, then lower index.
inline bool better_candidate(const PredictedOutcome& a, std::size_t ia, const PredictedOutcome& b, std::size_t ib) {
  if (a.stability != b.stability) return a.stability > b.stability;
  if (a.gentleness != b.gentleness) return a.gentleness > b.gentleness;
  return ia < ib;
}

/// argmax f_s over {f_g > t_gentle}; kNoCandidate when that set is empty.
std::size_t constrained_argmax(const std::vector<PredictedOutcome>& predictions, double t_gentle);
std::size_t unconstrained_argmax(const std::vector<PredictedOutcome>& predictions);

enum class DecisionMode { lift, regrasp_again };
const char* to_string(DecisionMode m);

struct Decision {
  RegraspAction action;
  PredictedOutcome predicted;
  DecisionMode mode = DecisionMode::regrasp_again;
  /// Index into the candidate set (the fallback reuses the candidate's motion).
  std::size_t index = kNoCandidate;
  /// Whether the constrained problem had a feasible candidate.
  bool feasible = false;
  bool fallback = false;
};

/// Constrained selection. If the feasible winner also clears t_success the
/// decision is to lift; otherwise the winner is replaced by the f_s-argmax
/// over the candidates' motions paired with `hold_joints`.
Decision select_action(const std::vector<PredictedOutcome>& predictions, const CandidateSet& candidates,
                       double t_gentle, double t_success,
                       const std::function<std::vector<PredictedOutcome>(const std::vector<RegraspAction>&)>& fallback_scores,
                       const JointVector& hold_joints);

Decision select_action(const Predictor& predictor, const WorldState& world, const SensoryState& state,
                       const CandidateSet& candidates, const JointVector& hold_joints, double t_gentle,
                       double t_success, Rng& rng);

struct TrialResult {
  bool upright = true;
  bool success = false;
  bool gentle = false;
  int regrasps = 0;
  /// True when the loop stopped on a lift decision rather than the regrasp cap.
  bool decided_lift = false;
  double max_sound = 0.0;
};

/// One closed-loop trial: initial grasp, then select/execute until a lift
/// decision or `max_regrasps` executions, then lift. Gentle iff no executed
/// regrasp exceeded the sound threshold.
TrialResult closed_loop_trial(const Simulator& sim, const Predictor& predictor, const OptimizerConfig& config,
                              std::uint64_t seed, std::optional<bool> upright = std::nullopt);

}  // namespace gentle
