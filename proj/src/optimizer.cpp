#include "gentle/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "gentle/errors.hpp"
#include "gentle/labeling.hpp"

namespace gentle {

CandidateSet sample_candidates(const Simulator& sim, Rng& rng, int n_general, int n_zero_motion) {
  if (n_general < 0 || n_zero_motion < 0) throw DomainError("sample_candidates: negative candidate count");
  CandidateSet set;
  set.general = n_general;
  set.zero_motion = n_zero_motion;
  set.actions.reserve(std::size_t(n_general) + n_zero_motion);
  for (int i = 0; i < n_general; ++i) set.actions.push_back(sim.sample_random_regrasp(rng));
  for (int i = 0; i < n_zero_motion; ++i) {
    RegraspAction a = sim.sample_random_regrasp(rng);
    a.dx = a.dy = a.dz = a.dpsi = 0.0;
    set.actions.push_back(a);
  }
  return set;
}

CandidateSet sample_candidates(const Simulator& sim, Rng& rng, const OptimizerConfig& config) {
  const int zero = static_cast<int>(std::lround(config.candidates * config.zero_motion_fraction));
  return sample_candidates(sim, rng, config.candidates - zero, zero);
}

Predictor model_predictor(const Model& model) {
  return [&model](const WorldState&, const SensoryState& state, const std::vector<RegraspAction>& actions, Rng&) {
    return model.predict_actions(model.encode(state), actions);
  };
}

Predictor oracle_predictor(const Simulator& sim) {
  return [&sim](const WorldState& world, const SensoryState&, const std::vector<RegraspAction>& actions, Rng&) {
    std::vector<PredictedOutcome> out;
    out.reserve(actions.size());
    for (const auto& a : actions) {
      WorldState w = world;
      sim.release(w);
      sim.apply_motion(w, a);
      const ContactResult c = sim.contact(w, a.joints);
      out.push_back({sim.lift_holds(c) ? 1.0 : 0.0, double(gentleness_label(sim.emit_sound(c), sim.sound_threshold()))});
    }
    return out;
  };
}

Predictor random_predictor() {
  return [](const WorldState&, const SensoryState&, const std::vector<RegraspAction>& actions, Rng& rng) {
    std::vector<PredictedOutcome> out(actions.size());
    for (auto& p : out) {
      p.stability = rng.uniform();
      p.gentleness = rng.uniform();
    }
    return out;
  };
}

std::size_t constrained_argmax(const std::vector<PredictedOutcome>& predictions, double t_gentle) {
  std::size_t best = kNoCandidate;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (!(predictions[i].gentleness > t_gentle)) continue;
    if (best == kNoCandidate || better_candidate(predictions[i], i, predictions[best], best)) best = i;
  }
  return best;
}

std::size_t unconstrained_argmax(const std::vector<PredictedOutcome>& predictions) {
  return constrained_argmax(predictions, -std::numeric_limits<double>::infinity());
}

const char* to_string(DecisionMode m) { return m == DecisionMode::lift ? "lift" : "regrasp_again"; }

Decision select_action(const std::vector<PredictedOutcome>& predictions, const CandidateSet& candidates,
                       double t_gentle, double t_success,
                       const std::function<std::vector<PredictedOutcome>(const std::vector<RegraspAction>&)>& fallback_scores,
                       const JointVector& hold_joints) {
  if (candidates.actions.empty()) throw DomainError("select_action: empty candidate set");
  if (predictions.size() != candidates.size()) throw DomainError("select_action: one prediction per candidate required");

  Decision d;
  const std::size_t best = constrained_argmax(predictions, t_gentle);
  d.feasible = best != kNoCandidate;
  if (d.feasible && predictions[best].stability > t_success) {
    d.action = candidates.actions[best];
    d.predicted = predictions[best];
    d.mode = DecisionMode::lift;
    d.index = best;
    return d;
  }

  // Stability-only fallback over motions with the hand pose held.
  std::vector<RegraspAction> held = candidates.actions;
  for (auto& a : held) a.joints = hold_joints;
  const std::vector<PredictedOutcome> scores = fallback_scores(held);
  if (scores.size() != held.size()) throw DomainError("select_action: fallback scores do not match candidates");
  const std::size_t pick = unconstrained_argmax(scores);
  d.action = held[pick];
  d.predicted = scores[pick];
  d.mode = DecisionMode::regrasp_again;
  d.index = pick;
  d.fallback = true;
  return d;
}

Decision select_action(const Predictor& predictor, const WorldState& world, const SensoryState& state,
                       const CandidateSet& candidates, const JointVector& hold_joints, double t_gentle,
                       double t_success, Rng& rng) {
  if (candidates.actions.empty()) throw DomainError("select_action: empty candidate set");
  const auto predictions = predictor(world, state, candidates.actions, rng);
  return select_action(
      predictions, candidates, t_gentle, t_success,
      [&](const std::vector<RegraspAction>& held) { return predictor(world, state, held, rng); }, hold_joints);
}

TrialResult closed_loop_trial(const Simulator& sim, const Predictor& predictor, const OptimizerConfig& config,
                              std::uint64_t seed, std::optional<bool> upright) {
  if (config.max_regrasps < 1) throw ConfigError("optimizer.max_regrasps", "must be >= 1");
  const Rng root(seed);
  Rng world_rng = root.fork(1);
  Rng candidate_rng = root.fork(2);
  Rng policy_rng = root.fork(3);

  TrialResult result;
  Simulator::Grasp grasp = sim.initial_grasp(world_rng, upright);
  result.upright = grasp.world.object.upright;
  const JointVector hold = sim.initial_pose();
  while (true) {
    const CandidateSet candidates = sample_candidates(sim, candidate_rng, config);
    const Decision d = select_action(predictor, grasp.world, grasp.observation, candidates, hold, config.t_gentle,
                                     config.t_success, policy_rng);
    grasp = sim.regrasp(grasp, d.action, world_rng);
    ++result.regrasps;
    result.max_sound = std::max(result.max_sound, sim.emit_sound(grasp.contact));
    if (d.mode == DecisionMode::lift) {
      result.decided_lift = true;
      break;
    }
    if (result.regrasps >= config.max_regrasps) break;
  }
  grasp.world.advance(Phase::lift);
  result.success = sim.attempt_lift(grasp.contact, grasp.world);
  grasp.world.advance(Phase::done);
  result.gentle = gentleness_label(result.max_sound, sim.sound_threshold()) == 1;
  return result;
}

}  // namespace gentle
