#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "gentle/config.hpp"
#include "gentle/sim.hpp"

namespace gentle {

/// 1 (gentle) iff the amplitude does not exceed the threshold.
inline std::uint8_t gentleness_label(double amplitude, double threshold) {
  return amplitude <= threshold ? 1 : 0;
}

/// The simulator's lift predicate.
inline std::uint8_t true_lift_label(const EpisodeRecord& episode) { return episode.lifted ? 1 : 0; }

/// Stability features of an episode: (position error, displacement).
Eigen::Vector2d stability_features(const EpisodeRecord& episode);

/// Logistic regression on standardized features.
struct LogisticStabilityModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  /// Zero weights over `dims` raw features with an identity scaler.
  static LogisticStabilityModel zeros(int dims);

  double predict(const Eigen::VectorXd& features) const;
  std::uint8_t label(const Eigen::VectorXd& features) const { return predict(features) > 0.5 ? 1 : 0; }
  /// Mean log-likelihood of the labels.
  double log_likelihood(const Eigen::MatrixXd& X, const std::vector<std::uint8_t>& y) const;
};

nlohmann::json to_json(const LogisticStabilityModel& m);
LogisticStabilityModel logistic_from_json(const nlohmann::json& j);

struct LogisticFitOptions {
  double l2 = 1e-3;
  int max_iterations = 10000;
  double gradient_tolerance = 1e-6;
};

/// Rows of X are examples. Full-batch gradient descent on the mean logistic
/// loss plus 0.5*l2*|w|^2 (bias unpenalized). Throws DomainError when only
/// one class is present; callers then keep ground-truth labels.
LogisticStabilityModel fit_logistic(const Eigen::MatrixXd& X, const std::vector<std::uint8_t>& y,
                                    const LogisticFitOptions& options = {});

struct CollectionReport {
  int episodes = 0;
  int supervised = 0;
  int model_labeled = 0;
  int agreements = 0;
  int refits = 0;

  double agreement() const { return model_labeled ? double(agreements) / model_labeled : 1.0; }
};

struct Collection {
  std::vector<EpisodeRecord> episodes;
  LogisticStabilityModel label_model;
  CollectionReport report;
};

/// Simulates `episodes` random-regrasp episodes (seed per episode derived
/// from `seed`) and labels them. The first `supervised_episodes` keep ground
/// truth; the label model is then fit and refit every `refit_every`
/// episodes on all earlier episodes. Each later episode is labeled by the
/// model current at its turn, and its stability label is replaced by that
/// prediction when `stability_source` is "logistic".
Collection collect(const Simulator& sim, const LabelConfig& labels, int episodes, std::uint64_t seed,
                   int workers = 1);

/// Fraction of episodes whose model label equals the lift predicate.
double label_agreement(const LogisticStabilityModel& model, const std::vector<EpisodeRecord>& episodes);

}  // namespace gentle
