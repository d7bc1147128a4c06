#include "gentle/labeling.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "gentle/errors.hpp"
#include "gentle/parallel.hpp"

namespace gentle {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

Eigen::Vector2d stability_features(const EpisodeRecord& episode) {
  return {episode.metrics.position_error, episode.metrics.displacement};
}

LogisticStabilityModel LogisticStabilityModel::zeros(int dims) {
  LogisticStabilityModel m;
  m.weights = Eigen::VectorXd::Zero(dims);
  m.mean = Eigen::VectorXd::Zero(dims);
  m.scale = Eigen::VectorXd::Ones(dims);
  return m;
}

double LogisticStabilityModel::predict(const Eigen::VectorXd& features) const {
  if (features.size() != weights.size()) throw DomainError("logistic model: feature count mismatch");
  const Eigen::VectorXd z = (features - mean).cwiseQuotient(scale);
  return sigmoid(weights.dot(z) + bias);
}

double LogisticStabilityModel::log_likelihood(const Eigen::MatrixXd& X, const std::vector<std::uint8_t>& y) const {
  double total = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const Eigen::VectorXd z = (X.row(i).transpose() - mean).cwiseQuotient(scale);
    const double s = weights.dot(z) + bias;
    total += y[i] ? -softplus(-s) : -softplus(s);
  }
  return X.rows() ? total / X.rows() : 0.0;
}

nlohmann::json to_json(const LogisticStabilityModel& m) {
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return {{"features", {"position_error", "displacement"}},
          {"weights", vec(m.weights)},
          {"bias", m.bias},
          {"mean", vec(m.mean)},
          {"scale", vec(m.scale)}};
}

LogisticStabilityModel logistic_from_json(const nlohmann::json& j) {
  auto vec = [](const nlohmann::json& a) {
    const auto v = a.get<std::vector<double>>();
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  LogisticStabilityModel m;
  m.weights = vec(j.at("weights"));
  m.bias = j.at("bias").get<double>();
  m.mean = vec(j.at("mean"));
  m.scale = vec(j.at("scale"));
  if (m.mean.size() != m.weights.size() || m.scale.size() != m.weights.size())
    throw DomainError("logistic model: inconsistent parameter sizes");
  return m;
}

LogisticStabilityModel fit_logistic(const Eigen::MatrixXd& X, const std::vector<std::uint8_t>& y,
                                    const LogisticFitOptions& options) {
  const Eigen::Index n = X.rows(), d = X.cols();
  if (static_cast<std::size_t>(n) != y.size()) throw DomainError("fit_logistic: feature and label counts differ");
  Eigen::Index positives = 0;
  for (auto v : y) positives += v ? 1 : 0;
  if (positives == 0 || positives == n)
    throw DomainError("fit_logistic: labels contain a single class; fall back to ground-truth labels");

  LogisticStabilityModel m = LogisticStabilityModel::zeros(static_cast<int>(d));
  m.mean = X.colwise().mean().transpose();
  for (Eigen::Index c = 0; c < d; ++c) {
    const double var = (X.col(c).array() - m.mean(c)).square().sum() / n;
    m.scale(c) = var > 0.0 ? std::sqrt(var) : 1.0;
  }

  // Standardized design with a trailing bias column.
  Eigen::MatrixXd Z(n, d + 1);
  for (Eigen::Index c = 0; c < d; ++c) Z.col(c) = (X.col(c).array() - m.mean(c)) / m.scale(c);
  Z.col(d).setOnes();
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) target(i) = y[i] ? 1.0 : 0.0;

  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(d + 1, options.l2);
  penalty(d) = 0.0;
  const Eigen::MatrixXd gram = Z.transpose() * Z / double(n);
  const double lipschitz =
      0.25 * Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff() +
      options.l2;
  const double step = 1.0 / lipschitz;

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
  for (int it = 0; it < options.max_iterations; ++it) {
    const Eigen::VectorXd s = Z * theta;
    const Eigen::VectorXd p = s.unaryExpr([](double v) { return sigmoid(v); });
    const Eigen::VectorXd grad = Z.transpose() * (p - target) / double(n) + penalty.cwiseProduct(theta);
    if (grad.norm() < options.gradient_tolerance) break;
    theta -= step * grad;
  }
  m.weights = theta.head(d);
  m.bias = theta(d);
  return m;
}

Collection collect(const Simulator& sim, const LabelConfig& labels, int episodes, std::uint64_t seed,
                   int workers) {
  if (episodes < 0) throw DomainError("collect: negative episode count");
  Collection out;
  out.episodes.resize(static_cast<std::size_t>(episodes));
  const ActionSource source = random_action_source(sim);
  parallel_for(out.episodes.size(), workers, [&](std::size_t i) {
    out.episodes[i] = sim.run_episode(derive_seed(seed, i), source);
    out.episodes[i].episode_id = static_cast<std::uint32_t>(i);
  });

  const bool use_model = labels.stability_source == "logistic";
  out.label_model = LogisticStabilityModel::zeros(2);
  bool fitted = false;
  int since_fit = 0;
  auto refit = [&](std::size_t upto) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(upto), 2);
    std::vector<std::uint8_t> y(upto);
    for (std::size_t k = 0; k < upto; ++k) {
      X.row(static_cast<Eigen::Index>(k)) = stability_features(out.episodes[k]).transpose();
      y[k] = true_lift_label(out.episodes[k]);
    }
    try {
      out.label_model = fit_logistic(X, y, {.l2 = labels.logistic_l2});
      fitted = true;
      ++out.report.refits;
      since_fit = 0;
    } catch (const DomainError&) {
      // Single class so far; stay on ground truth.
    }
  };

  out.report.episodes = episodes;
  for (std::size_t i = 0; i < out.episodes.size(); ++i) {
    EpisodeRecord& e = out.episodes[i];
    const bool supervised = static_cast<int>(i) < labels.supervised_episodes;
    if (!supervised && (!fitted || since_fit >= labels.refit_every)) refit(i);
    if (supervised || !fitted) {
      ++out.report.supervised;
      continue;
    }
    const std::uint8_t predicted = out.label_model.label(stability_features(e));
    ++out.report.model_labeled;
    if (predicted == true_lift_label(e)) ++out.report.agreements;
    if (use_model) e.outcome.stability = predicted;
    ++since_fit;
  }
  if (!out.episodes.empty()) refit(out.episodes.size());
  return out;
}

double label_agreement(const LogisticStabilityModel& model, const std::vector<EpisodeRecord>& episodes) {
  if (episodes.empty()) return 1.0;
  std::size_t agree = 0;
  for (const auto& e : episodes) agree += model.label(stability_features(e)) == true_lift_label(e) ? 1 : 0;
  return double(agree) / double(episodes.size());
}

}  // namespace gentle
