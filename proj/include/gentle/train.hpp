#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gentle/config.hpp"
#include "gentle/model.hpp"

namespace gentle {

struct EpochMetrics {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  /// Exact match of both bits.
  double train_acc = 0.0;
  double val_acc = 0.0;
};

struct TrainResult {
  std::vector<EpochMetrics> epochs;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// lr0 * decay^epoch.
double learning_rate_at(const TrainConfig& config, int epoch);

/// Mini-batch SGD with momentum on the summed two-head BCE. Action
/// normalization is fitted on the training indices first. Train metrics are
/// running values over the epoch (dropout on); validation runs in eval mode.
/// A non-finite loss raises TrainingError.
TrainResult train(Model& model, const PreparedSet& data, const std::vector<std::size_t>& train_indices,
                  const std::vector<std::size_t>& val_indices, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

struct Evaluation {
  double loss = 0.0;
  std::vector<PredictedOutcome> predictions;
  std::vector<GraspOutcome> labels;
};

/// Eval-mode predictions and mean loss over `indices`.
Evaluation evaluate(const Model& model, const PreparedSet& data, const std::vector<std::size_t>& indices,
                    int batch_size = 256);

/// One row per epoch: epoch,lr,train_loss,val_loss,train_acc,val_acc.
std::string metrics_csv(const TrainResult& result);

}  // namespace gentle
