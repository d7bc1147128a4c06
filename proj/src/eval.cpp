#include "gentle/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "gentle/errors.hpp"
#include "gentle/labeling.hpp"
#include "gentle/parallel.hpp"

namespace gentle {

std::string format_g9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::size_t ConfusionMatrix4::total() const {
  std::size_t n = 0;
  for (const auto& row : counts) n += std::accumulate(row.begin(), row.end(), std::size_t{0});
  return n;
}

std::size_t ConfusionMatrix4::trace() const { return counts[0][0] + counts[1][1] + counts[2][2] + counts[3][3]; }

std::size_t ConfusionMatrix4::row_total(int r) const {
  return std::accumulate(counts[r].begin(), counts[r].end(), std::size_t{0});
}

std::size_t ConfusionMatrix4::column_total(int c) const {
  std::size_t n = 0;
  for (const auto& row : counts) n += row[c];
  return n;
}

double ConfusionMatrix4::accuracy() const {
  const std::size_t n = total();
  return n ? double(trace()) / double(n) : 0.0;
}

double ConfusionMatrix4::class_accuracy(int r) const {
  const std::size_t n = row_total(r);
  return n ? double(counts[r][r]) / double(n) : 0.0;
}

ConfusionMatrix4 confusion_matrix(const std::vector<GraspOutcome>& predictions, const std::vector<GraspOutcome>& labels) {
  if (predictions.size() != labels.size()) throw DomainError("confusion_matrix: prediction and label counts differ");
  ConfusionMatrix4 m;
  for (std::size_t i = 0; i < labels.size(); ++i) m.add(labels[i], predictions[i]);
  return m;
}

nlohmann::json to_json(const ConfusionMatrix4& m) {
  static const char* names[4] = {"(1,1)", "(1,0)", "(0,1)", "(0,0)"};
  nlohmann::json j;
  j["classes"] = names;
  j["counts"] = m.counts;
  for (int r = 0; r < 4; ++r) {
    j["row_totals"].push_back(m.row_total(r));
    j["column_totals"].push_back(m.column_total(r));
    j["class_accuracy"].push_back(m.class_accuracy(r));
  }
  j["total"] = m.total();
  j["accuracy"] = m.accuracy();
  return j;
}

HeadAccuracy head_accuracy(const std::vector<PredictedOutcome>& predictions, const std::vector<GraspOutcome>& labels,
                           double threshold) {
  if (predictions.size() != labels.size()) throw DomainError("head_accuracy: prediction and label counts differ");
  HeadAccuracy a;
  if (labels.empty()) return a;
  std::size_t s = 0, g = 0, both = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const GraspOutcome p = classify(predictions[i], threshold);
    s += p.stability == labels[i].stability;
    g += p.gentleness == labels[i].gentleness;
    both += p == labels[i];
  }
  const double n = double(labels.size());
  return {double(s) / n, double(g) / n, double(both) / n};
}

double four_class_accuracy(const std::vector<PredictedOutcome>& predictions, const std::vector<GraspOutcome>& labels,
                           double threshold) {
  return head_accuracy(predictions, labels, threshold).both;
}

double majority_baseline(const std::vector<GraspOutcome>& labels) {
  if (labels.empty()) return 0.0;
  const ClassCounts c = class_distribution(labels);
  return double(*std::max_element(c.counts.begin(), c.counts.end())) / double(labels.size());
}

MeanSE mean_se(const std::vector<double>& values) {
  MeanSE r;
  if (values.empty()) return r;
  const double n = double(values.size());
  r.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) return r;
  double ss = 0.0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  r.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return r;
}

AblationEntry cross_validate(const PreparedSet& data, const std::string& name, const ModelConfig& model,
                             const TrainConfig& train_config, int k, std::uint64_t split_seed,
                             const FoldCallback& on_fold, const EpochCallback& on_epoch) {
  AblationEntry entry;
  entry.name = name;
  entry.model = model;
  const std::vector<Fold> folds = split_kfold(data.episodes, k, split_seed);
  std::vector<double> s, g, both, majority;
  for (int f = 0; f < k; ++f) {
    TrainConfig tc = train_config;
    tc.seed = derive_seed(train_config.seed, std::uint64_t(f));
    Model m(model, derive_seed(tc.seed, 0x30de1));
    train(m, data, folds[f].train, folds[f].validation, tc, on_epoch);
    const Evaluation ev = evaluate(m, data, folds[f].validation);

    FoldResult r;
    r.fold = f;
    r.train_size = folds[f].train.size();
    r.validation_size = folds[f].validation.size();
    r.accuracy = head_accuracy(ev.predictions, ev.labels, model.threshold);
    r.majority = majority_baseline(ev.labels);
    r.validation_loss = ev.loss;
    std::vector<GraspOutcome> predicted;
    for (const auto& p : ev.predictions) predicted.push_back(classify(p, model.threshold));
    r.confusion = confusion_matrix(predicted, ev.labels);
    entry.folds.push_back(r);
    s.push_back(r.accuracy.stability);
    g.push_back(r.accuracy.gentleness);
    both.push_back(r.accuracy.both);
    majority.push_back(r.majority);
    if (on_fold) on_fold(f, m, folds[f].validation, ev);
  }
  entry.stability = mean_se(s);
  entry.gentleness = mean_se(g);
  entry.both = mean_se(both);
  entry.majority = mean_se(majority);
  return entry;
}

nlohmann::json to_json(const AblationEntry& e) {
  auto ms = [](const MeanSE& m) { return nlohmann::json{{"mean", m.mean}, {"se", m.se}}; };
  nlohmann::json j = {{"name", e.name},
                      {"modalities", to_string(e.model.modalities)},
                      {"backbone", to_string(e.model.backbone)},
                      {"stability_accuracy", ms(e.stability)},
                      {"gentleness_accuracy", ms(e.gentleness)},
                      {"both_correct_accuracy", ms(e.both)},
                      {"majority_baseline", ms(e.majority)},
                      {"folds", nlohmann::json::array()}};
  for (const auto& f : e.folds)
    j["folds"].push_back({{"fold", f.fold},
                          {"train_size", f.train_size},
                          {"validation_size", f.validation_size},
                          {"stability_accuracy", f.accuracy.stability},
                          {"gentleness_accuracy", f.accuracy.gentleness},
                          {"both_correct_accuracy", f.accuracy.both},
                          {"majority_baseline", f.majority},
                          {"validation_loss", f.validation_loss},
                          {"confusion_matrix", to_json(f.confusion)}});
  return j;
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * double(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

SpearmanResult spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DomainError("spearman: inputs differ in length");
  SpearmanResult r;
  if (x.size() < 2) {
    r.degenerate = true;
    return r;
  }
  const auto rx = average_ranks(x), ry = average_ranks(y);
  const double n = double(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) {
    r.degenerate = true;
    return r;
  }
  r.rho = sxy / std::sqrt(sxx * syy);
  return r;
}

namespace {

std::string scatter_row(const ForceMetrics& m, const GraspOutcome& o) {
  return format_g9(m.displacement) + "," + format_g9(m.position_error) + "," + format_g9(m.tactile_differential) +
         "," + std::to_string(o.stability) + "," + std::to_string(o.gentleness) + "\n";
}

constexpr const char* kScatterHeader = "displacement,position_error,tactile_differential,stability,gentleness\n";

}  // namespace

std::string export_force_scatter(const std::vector<EpisodeRecord>& episodes) {
  std::string out = kScatterHeader;
  for (const auto& e : episodes) out += scatter_row(e.metrics, e.outcome);
  return out;
}

std::string export_force_scatter(const Dataset& dataset) {
  std::string out = kScatterHeader;
  for (const auto& s : dataset.samples)
    if (s.provenance.moment == Moment::initial && s.provenance.crop_index == 0) out += scatter_row(s.metrics, s.outcome);
  return out;
}

TrendReport export_prediction_trend(const std::vector<double>& position_error,
                                    const std::vector<PredictedOutcome>& predictions,
                                    const std::vector<GraspOutcome>& labels) {
  if (position_error.size() != predictions.size() || labels.size() != predictions.size())
    throw DomainError("export_prediction_trend: input lengths differ");
  TrendReport t;
  t.csv = "position_error,f_s,f_g,stability,gentleness\n";
  std::vector<double> fs, fg;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    fs.push_back(predictions[i].stability);
    fg.push_back(predictions[i].gentleness);
    t.csv += format_g9(position_error[i]) + "," + format_g9(fs.back()) + "," + format_g9(fg.back()) + "," +
             std::to_string(labels[i].stability) + "," + std::to_string(labels[i].gentleness) + "\n";
  }
  t.success = spearman(position_error, fs);
  t.gentle = spearman(position_error, fg);
  return t;
}

nlohmann::json to_json(const TrendReport& t) {
  return {{"rho_success", t.success.rho},
          {"rho_success_degenerate", t.success.degenerate},
          {"rho_gentle", t.gentle.rho},
          {"rho_gentle_degenerate", t.gentle.degenerate}};
}

Interval wilson_interval(std::size_t k, std::size_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double p = double(k) / double(n), nn = double(n), z2 = z * z;
  const double center = (p + z2 / (2 * nn)) / (1 + z2 / nn);
  const double half = z * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn)) / (1 + z2 / nn);
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

std::vector<PolicyRates> closed_loop_compare(const Simulator& sim, const std::vector<NamedPolicy>& policies,
                                             const OptimizerConfig& config, int trials, std::uint64_t seed,
                                             int workers) {
  if (trials < 0) throw DomainError("closed_loop_compare: negative trial count");
  std::vector<PolicyRates> out;
  for (const auto& policy : policies) {
    PolicyRates r;
    r.name = policy.name;
    r.trials = std::size_t(trials);
    r.results.resize(std::size_t(trials));
    parallel_for(r.results.size(), workers, [&](std::size_t t) {
      const bool upright = t < std::size_t(trials) / 2;
      r.results[t] = closed_loop_trial(sim, policy.predictor, config, derive_seed(seed, t), upright);
    });
    double regrasps = 0.0;
    for (const auto& t : r.results) {
      r.success += t.success;
      r.gentle += t.gentle;
      r.both += t.success && t.gentle;
      regrasps += t.regrasps;
    }
    r.mean_regrasps = trials ? regrasps / trials : 0.0;
    out.push_back(std::move(r));
  }
  return out;
}

nlohmann::json to_json(const std::vector<PolicyRates>& rates, bool with_trials) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rates) {
    auto entry = [&](std::size_t k) {
      const Interval ci = wilson_interval(k, r.trials);
      return nlohmann::json{{"count", k}, {"rate", r.rate(k)}, {"ci95", {ci.lo, ci.hi}}};
    };
    nlohmann::json p = {{"policy", r.name},
                        {"trials", r.trials},
                        {"success", entry(r.success)},
                        {"gentle", entry(r.gentle)},
                        {"success_and_gentle", entry(r.both)},
                        {"mean_regrasps", r.mean_regrasps}};
    std::size_t upright = 0;
    for (const auto& t : r.results) upright += t.upright;
    p["upright_trials"] = upright;
    p["lying_trials"] = r.trials - upright;
    if (with_trials) {
      p["per_trial"] = nlohmann::json::array();
      for (const auto& t : r.results)
        p["per_trial"].push_back({{"upright", t.upright},
                                  {"success", t.success},
                                  {"gentle", t.gentle},
                                  {"regrasps", t.regrasps},
                                  {"decided_lift", t.decided_lift},
                                  {"max_sound", t.max_sound}});
    }
    j.push_back(std::move(p));
  }
  return j;
}

}  // namespace gentle
