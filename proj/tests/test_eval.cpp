#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gentle/errors.hpp"
#include "gentle/eval.hpp"
#include "gentle/labeling.hpp"
#include "oracles.hpp"

using namespace gentle;

namespace {

GraspOutcome random_outcome(Rng& rng) { return GraspOutcome::from_class(int(rng.index(4))); }

std::vector<std::string> lines(const std::string& csv) {
  std::vector<std::string> out;
  std::istringstream in(csv);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

ModelConfig tiny_model() {
  ModelConfig c;
  c.conv_channels = {4, 4, 4};
  c.image_feature_size = 8;
  c.action_hidden = 8;
  c.fusion_hidden = 8;
  c.input_size = 16;
  return c;
}

}  // namespace

TEST_CASE("fixed-precision formatting") {
  CHECK(format_g9(1.0 / 3.0) == "0.333333333");
  CHECK(format_g9(0.0) == "0");
  CHECK(format_g9(123456789012.0) == "1.23456789e+11");
  CHECK(format_g9(-2.5) == "-2.5");
}

TEST_CASE("confusion matrix") {
  Rng rng(1);
  std::vector<GraspOutcome> labels;
  for (int i = 0; i < 40; ++i) labels.push_back(random_outcome(rng));
  const ConfusionMatrix4 perfect = confusion_matrix(labels, labels);
  CHECK(perfect.accuracy() == 1.0);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      if (r != c) CHECK(perfect.counts[r][c] == 0);

  ConfusionMatrix4 table;
  table.counts[3] = {5, 10, 26, 131};
  CHECK(table.class_accuracy(3) == doctest::Approx(0.7616).epsilon(1e-4));
  CHECK(table.row_total(3) == 172);
  CHECK(table.class_accuracy(0) == 0.0);

  std::vector<GraspOutcome> truth, predicted;
  for (int i = 0; i < 200; ++i) {
    truth.push_back(random_outcome(rng));
    predicted.push_back(rng.bernoulli(0.6) ? truth.back() : random_outcome(rng));
  }
  const ConfusionMatrix4 m = confusion_matrix(predicted, truth);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      std::size_t n = 0;
      for (int i = 0; i < 200; ++i)
        n += truth[i].stability == (r < 2) && truth[i].gentleness == (r % 2 == 0) && predicted[i].stability == (c < 2) &&
             predicted[i].gentleness == (c % 2 == 0);
      CHECK(m.counts[r][c] == n);
    }
  std::size_t rows = 0, cols = 0;
  for (int k = 0; k < 4; ++k) rows += m.row_total(k), cols += m.column_total(k);
  CHECK(rows == 200);
  CHECK(cols == 200);

  const auto j = to_json(m);
  CHECK(j["total"] == 200);
  CHECK(j["counts"][1][2] == m.counts[1][2]);
  CHECK(j["classes"][0] == "(1,1)");
  CHECK_THROWS_AS(confusion_matrix({}, truth), DomainError);
}

TEST_CASE("property: confusion trace matches both-correct accuracy") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<PredictedOutcome> p;
    std::vector<GraspOutcome> labels, classes;
    for (int i = 0; i < 100; ++i) {
      p.push_back({rng.uniform(), rng.uniform()});
      labels.push_back(random_outcome(rng));
      classes.push_back(classify(p.back()));
    }
    const HeadAccuracy a = head_accuracy(p, labels);
    CHECK(confusion_matrix(classes, labels).accuracy() == doctest::Approx(a.both).epsilon(1e-15));
    CHECK(four_class_accuracy(p, labels) == a.both);
    CHECK(a.both <= std::min(a.stability, a.gentleness));
  }
}

TEST_CASE("majority baseline and standard error") {
  std::vector<GraspOutcome> labels(7, {1, 1});
  labels.insert(labels.end(), 3, GraspOutcome{0, 1});
  labels.insert(labels.end(), 10, GraspOutcome{1, 0});
  labels.push_back({0, 0});
  CHECK(majority_baseline(labels) == doctest::Approx(10.0 / 21.0));
  CHECK(majority_baseline({}) == 0.0);

  const MeanSE m = mean_se({1, 2, 3, 4, 5});
  CHECK(m.mean == 3.0);
  CHECK(m.se == doctest::Approx(std::sqrt(2.5) / std::sqrt(5.0)));
  CHECK(mean_se({4.0}).se == 0.0);
}

TEST_CASE("spearman correlation") {
  CHECK(average_ranks({10, 20, 20, 30}) == std::vector<double>{1, 2.5, 2.5, 4});
  const SpearmanResult flat = spearman({1, 2, 3}, {0.4, 0.4, 0.4});
  CHECK(flat.degenerate);
  CHECK(flat.rho == 0.0);
  CHECK(spearman({1, 2, 3, 4}, {1, 8, 27, 64}).rho == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}).rho == doctest::Approx(-1.0));

  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> x, y;
    for (int i = 0; i < 150; ++i) {
      x.push_back(std::round(rng.uniform() * 20));  // ties on purpose
      y.push_back(x.back() * 0.3 + rng.normal());
    }
    const SpearmanResult r = spearman(x, y);
    CHECK_FALSE(r.degenerate);
    CHECK(std::abs(r.rho - oracle::spearman_by_counting(x, y)) < 1e-12);
  }
}

TEST_CASE("Wilson interval") {
  const Interval i = wilson_interval(5, 10);
  CHECK(i.lo == doctest::Approx(0.2366).epsilon(1e-3));
  CHECK(i.hi == doctest::Approx(0.7634).epsilon(1e-3));
  const Interval none = wilson_interval(0, 0);
  CHECK(none.lo == 0.0);
  CHECK(none.hi == 1.0);
  CHECK(wilson_interval(0, 50).lo == doctest::Approx(0.0));
  CHECK(wilson_interval(50, 50).hi == doctest::Approx(1.0));
}

TEST_CASE("force exports") {
  const RunConfig cfg = preset(Scale::desk);
  const Simulator sim(cfg);
  const Collection c = collect(sim, cfg.labeling, 200, 4, 1);

  const std::string csv = export_force_scatter(c.episodes);
  const auto rows = lines(csv);
  REQUIRE(rows.size() == 201);
  CHECK(rows[0] == "displacement,position_error,tactile_differential,stability,gentleness");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::istringstream row(rows[i]);
    for (std::string field; std::getline(row, field, ',');) CHECK(std::stod(field) >= 0.0);
  }

  const Dataset d = build_dataset(c.episodes, cfg.sensing.crop_size, config_hash(cfg), 1);
  CHECK(export_force_scatter(d) == csv);

  // Small position errors mostly come from failed grasps.
  std::vector<const EpisodeRecord*> sorted;
  for (const auto& e : c.episodes) sorted.push_back(&e);
  std::sort(sorted.begin(), sorted.end(),
            [](auto* a, auto* b) { return a->metrics.position_error < b->metrics.position_error; });
  double low = 0.0, all = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    all += sorted[i]->outcome.stability;
    if (i < sorted.size() / 4) low += sorted[i]->outcome.stability;
  }
  CHECK(low / (sorted.size() / 4) < all / sorted.size());

  // The simulator's own outcomes, used as predictions, show the trade-off.
  std::vector<double> pe;
  std::vector<PredictedOutcome> truth;
  std::vector<GraspOutcome> labels;
  for (const auto& e : c.episodes) {
    pe.push_back(e.metrics.position_error);
    e.lifted ? truth.push_back({1.0, double(e.outcome.gentleness)}) : truth.push_back({0.0, double(e.outcome.gentleness)});
    labels.push_back(e.outcome);
  }
  const TrendReport t = export_prediction_trend(pe, truth, labels);
  CHECK(t.success.rho > 0.0);
  CHECK(t.gentle.rho < 0.0);
  CHECK(lines(t.csv).size() == 201);
  CHECK(to_json(t)["rho_gentle"] == t.gentle.rho);

  const TrendReport flat = export_prediction_trend(pe, std::vector<PredictedOutcome>(pe.size(), {0.5, 0.5}), labels);
  CHECK(flat.success.degenerate);
  CHECK(flat.gentle.rho == 0.0);
  CHECK_THROWS_AS(export_prediction_trend({1.0}, {}, {}), DomainError);
}

TEST_CASE("cross-validation structure") {
  RunConfig cfg = preset(Scale::desk);
  const Simulator sim(cfg);
  const Collection c = collect(sim, cfg.labeling, 30, 5, 1);
  const PreparedSet data = prepare(build_dataset(c.episodes, cfg.sensing.crop_size, config_hash(cfg), 1), 16);
  ModelConfig mc = tiny_model();
  TrainConfig tc = cfg.train;
  tc.epochs = 2;

  int callbacks = 0;
  const AblationEntry e = cross_validate(data, "full", mc, tc, 5, 9, [&](int fold, const Model&, const auto& validation,
                                                                      const Evaluation& ev) {
    CHECK(fold == callbacks++);
    CHECK(ev.labels.size() == validation.size());
  });
  CHECK(callbacks == 5);
  REQUIRE(e.folds.size() == 5);
  const auto folds = split_kfold(data.episodes, 5, 9);
  std::vector<double> both;
  for (int f = 0; f < 5; ++f) {
    const FoldResult& r = e.folds[f];
    CHECK(r.validation_size == folds[f].validation.size());
    CHECK(r.train_size + r.validation_size == std::size_t(data.size));
    std::vector<GraspOutcome> labels;
    for (std::size_t i : folds[f].validation) labels.push_back(data.outcomes[i]);
    const ClassCounts counts = class_distribution(labels);
    CHECK(r.majority == double(*std::max_element(counts.counts.begin(), counts.counts.end())) / labels.size());
    CHECK(r.accuracy.both <= std::min(r.accuracy.stability, r.accuracy.gentleness));
    CHECK(r.confusion.total() == r.validation_size);
    CHECK(r.confusion.accuracy() == doctest::Approx(r.accuracy.both));
    both.push_back(r.accuracy.both);
  }
  CHECK(e.both.mean == doctest::Approx(mean_se(both).mean));
  CHECK(e.both.se == doctest::Approx(mean_se(both).se));

  const auto j = to_json(e);
  CHECK(j["folds"].size() == 5);
  CHECK(j["name"] == "full");
  CHECK(to_json(cross_validate(data, "full", mc, tc, 5, 9)).dump() == j.dump());
}

TEST_CASE("closed-loop comparison") {
  const RunConfig cfg = preset(Scale::desk);
  const Simulator sim(cfg);
  const std::vector<NamedPolicy> policies{{"random", random_predictor()}, {"oracle", oracle_predictor(sim)}};
  OptimizerConfig oc = cfg.optimizer;
  oc.candidates = 200;
  const auto a = closed_loop_compare(sim, policies, oc, 100, 21, 1);
  const auto b = closed_loop_compare(sim, policies, oc, 100, 21, 3);
  CHECK(to_json(a, true) == to_json(b, true));
  for (const auto& r : a) {
    CHECK(r.trials == 100);
    std::size_t upright = 0;
    for (std::size_t t = 0; t < r.results.size(); ++t) {
      CHECK(r.results[t].upright == (t < 50));
      upright += r.results[t].upright;
    }
    CHECK(upright == 50);
    CHECK(r.both <= std::min(r.success, r.gentle));
    for (std::size_t k : {r.success, r.gentle, r.both}) {
      CHECK(r.rate(k) >= 0.0);
      CHECK(r.rate(k) <= 1.0);
    }
  }
  const auto j = to_json(a);
  CHECK(j[0]["upright_trials"] == 50);
  CHECK(j[0]["lying_trials"] == 50);
  CHECK(j[1]["success_and_gentle"]["ci95"].size() == 2);
  CHECK_FALSE(j[0].contains("per_trial"));
}

TEST_CASE("random policy gentleness matches the collection label frequency") {
  const RunConfig cfg = preset(Scale::desk);
  const Simulator sim(cfg);
  const Collection c = collect(sim, cfg.labeling, 400, 22, 1);
  double gentle = 0.0;
  for (const auto& e : c.episodes) gentle += e.outcome.gentleness;
  gentle /= double(c.episodes.size());

  const auto rates = closed_loop_compare(sim, {{"random", random_predictor()}}, cfg.optimizer, 200, 23, 1);
  const Interval ci = wilson_interval(rates[0].gentle, rates[0].trials);
  const Interval collected = wilson_interval(std::size_t(std::lround(gentle * 400)), 400);
  // Overlapping 95% intervals.
  CHECK(ci.lo <= collected.hi);
  CHECK(collected.lo <= ci.hi);
}
