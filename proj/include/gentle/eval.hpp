#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gentle/config.hpp"
#include "gentle/dataset.hpp"
#include "gentle/model.hpp"
#include "gentle/optimizer.hpp"
#include "gentle/train.hpp"

namespace gentle {

/// Fixed 9-significant-digit decimal used by every CSV export.
std::string format_g9(double v);

/// Rows are true classes, columns predicted, both in class_index order.
struct ConfusionMatrix4 {
  std::array<std::array<std::size_t, 4>, 4> counts{};

  void add(const GraspOutcome& truth, const GraspOutcome& predicted) {
    ++counts[truth.class_index()][predicted.class_index()];
  }
  std::size_t total() const;
  std::size_t trace() const;
  std::size_t row_total(int r) const;
  std::size_t column_total(int c) const;
  double accuracy() const;
  /// Diagonal over row total; 0 for an empty row.
  double class_accuracy(int r) const;
};

ConfusionMatrix4 confusion_matrix(const std::vector<GraspOutcome>& predictions, const std::vector<GraspOutcome>& labels);
nlohmann::json to_json(const ConfusionMatrix4& m);

struct HeadAccuracy {
  double stability = 0.0;
  double gentleness = 0.0;
  /// Both bits correct; equals the 4-class accuracy.
  double both = 0.0;
};

HeadAccuracy head_accuracy(const std::vector<PredictedOutcome>& predictions, const std::vector<GraspOutcome>& labels,
                           double threshold = 0.5);
double four_class_accuracy(const std::vector<PredictedOutcome>& predictions, const std::vector<GraspOutcome>& labels,
                           double threshold = 0.5);

/// Frequency of the most common class.
double majority_baseline(const std::vector<GraspOutcome>& labels);

struct MeanSE {
  double mean = 0.0;
  /// Sample standard deviation over sqrt(count); 0 for fewer than two values.
  double se = 0.0;
};
MeanSE mean_se(const std::vector<double>& values);

struct FoldResult {
  int fold = 0;
  std::size_t train_size = 0;
  std::size_t validation_size = 0;
  HeadAccuracy accuracy;
  double majority = 0.0;
  double validation_loss = 0.0;
  ConfusionMatrix4 confusion;
};

struct AblationEntry {
  std::string name;
  ModelConfig model;
  std::vector<FoldResult> folds;
  MeanSE stability, gentleness, both, majority;
};

/// Called after each fold with the trained model and its validation indices.
using FoldCallback = std::function<void(int fold, const Model& model, const std::vector<std::size_t>& validation,
                                        const Evaluation& evaluation)>;

/// Trains one model per episode-disjoint fold. Fold f trains with seed
/// derive_seed(train.seed, f); the split uses `split_seed`.
AblationEntry cross_validate(const PreparedSet& data, const std::string& name, const ModelConfig& model,
                             const TrainConfig& train, int k, std::uint64_t split_seed,
                             const FoldCallback& on_fold = {}, const EpochCallback& on_epoch = {});

nlohmann::json to_json(const AblationEntry& e);

struct SpearmanResult {
  double rho = 0.0;
  /// A constant input leaves the coefficient undefined; rho is then 0.
  bool degenerate = false;
};

/// Average ranks (1-based), ties sharing the mean rank.
std::vector<double> average_ranks(const std::vector<double>& v);
SpearmanResult spearman(const std::vector<double>& x, const std::vector<double>& y);

/// displacement,position_error,tactile_differential,stability,gentleness; one row per episode.
std::string export_force_scatter(const std::vector<EpisodeRecord>& episodes);
/// One row per episode of the dataset (its first sample).
std::string export_force_scatter(const Dataset& dataset);

struct TrendReport {
  std::string csv;  // position_error,f_s,f_g,stability,gentleness
  SpearmanResult success;
  SpearmanResult gentle;
};

TrendReport export_prediction_trend(const std::vector<double>& position_error,
                                    const std::vector<PredictedOutcome>& predictions,
                                    const std::vector<GraspOutcome>& labels);
nlohmann::json to_json(const TrendReport& t);

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};
/// Wilson score interval for k successes in n trials.
Interval wilson_interval(std::size_t k, std::size_t n, double z = 1.959963984540054);

struct PolicyRates {
  std::string name;
  std::size_t trials = 0;
  std::size_t success = 0;
  std::size_t gentle = 0;
  std::size_t both = 0;
  double mean_regrasps = 0.0;
  std::vector<TrialResult> results;

  double rate(std::size_t k) const { return trials ? double(k) / double(trials) : 0.0; }
};

struct NamedPolicy {
  std::string name;
  Predictor predictor;
};

/// Runs every policy on the same trial seeds. The first half of the trials
/// place the object upright and the rest lying down.
std::vector<PolicyRates> closed_loop_compare(const Simulator& sim, const std::vector<NamedPolicy>& policies,
                                             const OptimizerConfig& config, int trials, std::uint64_t seed,
                                             int workers = 1);
nlohmann::json to_json(const std::vector<PolicyRates>& rates, bool with_trials = false);

}  // namespace gentle
