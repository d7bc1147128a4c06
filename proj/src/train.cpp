#include "gentle/train.hpp"

#include <cmath>
#include <numeric>

#include "gentle/errors.hpp"
#include "gentle/eval.hpp"

namespace gentle {

namespace {

Tensor targets_of(const PreparedSet& data, const std::vector<std::size_t>& indices) {
  const int N = static_cast<int>(indices.size());
  Tensor t({2, N});
  for (int n = 0; n < N; ++n) {
    const GraspOutcome& o = data.outcomes[indices[n]];
    t.data(n) = float(o.stability);
    t.data(N + n) = float(o.gentleness);
  }
  return t;
}

double bce_sum(const PredictedOutcome& p, const GraspOutcome& y) {
  auto term = [](double prob, int label) {
    const double q = std::clamp(prob, nn::kProbabilityFloor, 1.0 - nn::kProbabilityFloor);
    return label ? -std::log(q) : -std::log(1.0 - q);
  };
  return term(p.stability, y.stability) + term(p.gentleness, y.gentleness);
}

}  // namespace

double learning_rate_at(const TrainConfig& config, int epoch) {
  return config.learning_rate * std::pow(config.decay, epoch);
}

TrainResult train(Model& model, const PreparedSet& data, const std::vector<std::size_t>& train_indices,
                  const std::vector<std::size_t>& val_indices, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  if (config.batch_size < 1) throw ConfigError("train.batch_size", "must be >= 1");
  if (!(config.learning_rate > 0.0)) throw ConfigError("train.learning_rate", "must be > 0");
  if (!(config.decay > 0.0 && config.decay <= 1.0)) throw ConfigError("train.decay", "must be in (0,1]");

  std::vector<RegraspAction> actions;
  actions.reserve(train_indices.size());
  for (std::size_t i : train_indices) {
    std::array<double, RegraspAction::kValues> v;
    for (int d = 0; d < kActionInputs; ++d) v[d] = data.actions(d, Eigen::Index(i));
    actions.push_back(RegraspAction::from_values(v));
  }
  model.normalization = ActionNormalization::fit(actions);

  auto& params = model.parameters();
  std::vector<nn::Buffer<float>> velocity;
  for (const auto& p : params) velocity.push_back(nn::Buffer<float>::Zero(p.value.value().size()));

  Rng order_rng(derive_seed(config.seed, 1));
  Rng dropout_rng(derive_seed(config.seed, 2));
  std::vector<std::size_t> order = train_indices;
  const float momentum = static_cast<float>(config.momentum);
  const float decay = static_cast<float>(config.weight_decay);

  TrainResult result;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = learning_rate_at(config, epoch);
    const float step = static_cast<float>(lr);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[order_rng.index(i)]);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    int batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += std::size_t(config.batch_size), ++batch_index) {
      const std::vector<std::size_t> batch(order.begin() + std::ptrdiff_t(start),
                                           order.begin() + std::ptrdiff_t(std::min(order.size(), start + config.batch_size)));
      const ModelInput input = data.gather(batch);
      const Var probs = model.forward(input, true, &dropout_rng);
      const Var loss = nn::bce(probs, targets_of(data, batch));
      const double value = loss.data()(0);
      if (!std::isfinite(value)) throw TrainingError(epoch, batch_index, lr, "non-finite training loss");
      loss_sum += value * double(batch.size());
      const int N = static_cast<int>(batch.size());
      for (int n = 0; n < N; ++n) {
        const PredictedOutcome p{probs.data()(n), probs.data()(N + n)};
        correct += classify(p, model.config().threshold) == data.outcomes[batch[n]] ? 1 : 0;
      }

      nn::backward(loss);
      for (std::size_t k = 0; k < params.size(); ++k) {
        auto& g = params[k].value.grad();
        if (decay > 0.0f) g += decay * params[k].value.value().data;
        velocity[k] = momentum * velocity[k] + g;
        params[k].value.value().data -= step * velocity[k];
        g.setZero();
      }
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.lr = lr;
    m.train_loss = order.empty() ? 0.0 : loss_sum / double(order.size());
    m.train_acc = order.empty() ? 0.0 : double(correct) / double(order.size());
    if (!val_indices.empty()) {
      const Evaluation ev = evaluate(model, data, val_indices);
      m.val_loss = ev.loss;
      m.val_acc = four_class_accuracy(ev.predictions, ev.labels, model.config().threshold);
    }
    result.epochs.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  return result;
}

Evaluation evaluate(const Model& model, const PreparedSet& data, const std::vector<std::size_t>& indices,
                    int batch_size) {
  Evaluation ev;
  ev.predictions.reserve(indices.size());
  double loss = 0.0;
  for (std::size_t start = 0; start < indices.size(); start += std::size_t(batch_size)) {
    const std::vector<std::size_t> batch(indices.begin() + std::ptrdiff_t(start),
                                         indices.begin() + std::ptrdiff_t(std::min(indices.size(), start + batch_size)));
    for (const auto& p : model.predict(data.gather(batch))) ev.predictions.push_back(p);
  }
  for (std::size_t k = 0; k < indices.size(); ++k) {
    ev.labels.push_back(data.outcomes[indices[k]]);
    loss += bce_sum(ev.predictions[k], ev.labels.back());
  }
  ev.loss = indices.empty() ? 0.0 : loss / double(indices.size());
  return ev;
}

std::string metrics_csv(const TrainResult& result) {
  std::string out = "epoch,lr,train_loss,val_loss,train_acc,val_acc\n";
  for (const auto& m : result.epochs)
    out += std::to_string(m.epoch) + "," + format_g9(m.lr) + "," + format_g9(m.train_loss) + "," +
           format_g9(m.val_loss) + "," + format_g9(m.train_acc) + "," + format_g9(m.val_acc) + "\n";
  return out;
}

}  // namespace gentle
