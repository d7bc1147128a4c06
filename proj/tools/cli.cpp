#include "cli.hpp"

#include <CLI11.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gentle/config.hpp"
#include "gentle/dataset.hpp"
#include "gentle/errors.hpp"
#include "gentle/eval.hpp"
#include "gentle/labeling.hpp"
#include "gentle/model.hpp"
#include "gentle/optimizer.hpp"
#include "gentle/png.hpp"
#include "gentle/sim.hpp"
#include "gentle/train.hpp"

namespace gentle::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Log {
 public:
  Log(std::ostream& os, bool quiet) : os_(os), quiet_(quiet) {}
  void event(const std::string& name, json fields = json::object()) const {
    if (quiet_) return;
    json line = {{"event", name}};
    line.update(fields);
    os_ << line.dump() << '\n';
    os_.flush();
  }
  void error(const std::string& kind, const std::string& message, json extra = json::object()) const {
    json line = {{"event", "error"}, {"kind", kind}, {"message", message}};
    line.update(extra);
    os_ << line.dump() << '\n';
  }

 private:
  std::ostream& os_;
  bool quiet_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatErrc::io, "cannot write " + path.string());
  out << text;
  if (!out) throw FormatError(FormatErrc::io, "write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open configuration file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path, std::string("invalid JSON: ") + e.what());
  }
}

// Flags shared by every subcommand.
struct Common {
  std::string config_path;
  std::string scale;
  std::uint64_t seed = 0;
  std::string out;
  int workers = 1;
  bool quiet = false;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* workers_opt = nullptr;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON run configuration overlaid on the scale preset")
        ->check(CLI::ExistingFile);
    app->add_option("--scale", scale, "Preset magnitudes (default: desk, or the config's scale)")
        ->check(CLI::IsMember({"desk", "paper"}));
    seed_opt = app->add_option("--seed", seed, "Run seed; every random stream derives from it");
    out_opt = app->add_option("--out", out, "Output directory");
    workers_opt = app->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
    app->add_flag("--quiet", quiet, "Suppress log events");
  }

  RunConfig resolve() const {
    json overlay = json::object();
    if (!config_path.empty()) overlay = read_json_file(config_path);
    std::string scale_name = scale;
    if (scale_name.empty() && overlay.is_object() && overlay.contains("scale") && overlay["scale"].is_string())
      scale_name = overlay["scale"].get<std::string>();
    const Scale s = scale_name == "paper" ? Scale::paper : Scale::desk;
    if (overlay.is_object() && !scale.empty()) overlay.erase("scale");
    RunConfig c = config_from_json(overlay, preset(s));
    c.scale = s;
    if (*seed_opt) c.seed = seed;
    if (*out_opt) c.out_dir = out;
    if (*workers_opt) c.workers = workers;
    return c;
  }
};

fs::path prepare_out(const RunConfig& c) {
  const fs::path dir(c.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("out_dir", "cannot create '" + c.out_dir + "'");
  return dir;
}

fs::path or_default(const std::string& given, const fs::path& dir, const char* name) {
  return given.empty() ? dir / name : fs::path(given);
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

json epoch_json(const EpochMetrics& e) {
  return {{"epoch", e.epoch}, {"lr", e.lr},          {"train_loss", e.train_loss},
          {"val_loss", e.val_loss}, {"train_acc", e.train_acc}, {"val_acc", e.val_acc}};
}

json head_json(const HeadAccuracy& a) {
  return {{"stability", a.stability}, {"gentleness", a.gentleness}, {"both_correct", a.both}};
}

std::vector<double> position_errors(const PreparedSet& data, const std::vector<std::size_t>& indices) {
  std::vector<double> pe;
  pe.reserve(indices.size());
  for (std::size_t i : indices) pe.push_back(data.metrics[i].position_error);
  return pe;
}

std::vector<GraspOutcome> classes(const std::vector<PredictedOutcome>& p, double threshold) {
  std::vector<GraspOutcome> out;
  out.reserve(p.size());
  for (const auto& x : p) out.push_back(classify(x, threshold));
  return out;
}

PreparedSet load_prepared(const fs::path& path, const RunConfig& c, const Log& log) {
  const Dataset ds = read_dataset(path);
  if (ds.config_hash != config_hash(c))
    log.event("config_hash_mismatch", {{"dataset", to_hex(ds.config_hash)}, {"run", to_hex(config_hash(c))}});
  log.event("dataset_loaded", {{"path", path.string()}, {"samples", ds.size()}});
  return prepare(ds, c.model.input_size);
}

// ---- collect ----

struct CollectArgs {
  int episodes = 0;
  std::string stability_source;
  CLI::Option* episodes_opt = nullptr;
  CLI::Option* source_opt = nullptr;
};

int do_collect(const RunConfig& base, const CollectArgs& a, const Log& log) {
  RunConfig c = base;
  if (*a.episodes_opt) c.episodes = a.episodes;
  if (*a.source_opt) c.labeling.stability_source = a.stability_source;
  validate(c);
  const fs::path dir = prepare_out(c);
  const Simulator sim(c);
  log.event("collect_start", {{"episodes", c.episodes}, {"seed", c.seed}});
  const Collection col = collect(sim, c.labeling, c.episodes, derive_seed(c.seed, kCollectStream), c.workers);
  const fs::path data = dir / "dataset.ggl";
  const std::uint32_t n = write_augmented(col.episodes, c.sensing.crop_size, config_hash(c), data);

  std::vector<GraspOutcome> outcomes;
  for (const auto& e : col.episodes) outcomes.push_back(e.outcome);
  json report = {{"episodes", c.episodes},
                 {"samples", n},
                 {"config_hash", to_hex(config_hash(c))},
                 {"stability_source", c.labeling.stability_source},
                 {"class_distribution_episodes", to_json(class_distribution(outcomes))},
                 {"labeling",
                  {{"supervised", col.report.supervised},
                   {"model_labeled", col.report.model_labeled},
                   {"agreements", col.report.agreements},
                   {"agreement", col.report.agreement()},
                   {"refits", col.report.refits}}}};
  if (col.report.refits > 0) report["label_model"] = to_json(col.label_model);
  write_json(dir / "collection_report.json", report);
  write_text(dir / "force_scatter.csv", export_force_scatter(col.episodes));
  write_json(dir / "config.json", to_json(c));
  log.event("collect_done", {{"path", data.string()}, {"samples", n}});
  return kOk;
}

// ---- model flags shared by train and crossval ----

struct ModelArgs {
  std::string modalities;
  std::string backbone;
  int epochs = 0;
  double lr = 0.0;
  int batch_size = 0;
  CLI::Option* modalities_opt = nullptr;
  CLI::Option* backbone_opt = nullptr;
  CLI::Option* epochs_opt = nullptr;
  CLI::Option* lr_opt = nullptr;
  CLI::Option* batch_opt = nullptr;

  void attach(CLI::App* app) {
    modalities_opt = app->add_option("--modalities", modalities,
                                     "full, no_action, vision_action, vision_touch, action, vision or a list");
    backbone_opt = app->add_option("--backbone", backbone, "Image backbone")
                       ->check(CLI::IsMember({"dense", "residual", "plain"}));
    epochs_opt = app->add_option("--epochs", epochs, "Training epochs")->check(CLI::NonNegativeNumber);
    lr_opt = app->add_option("--lr", lr, "Initial learning rate")->check(CLI::PositiveNumber);
    batch_opt = app->add_option("--batch-size", batch_size, "Mini-batch size")->check(CLI::PositiveNumber);
  }

  void apply(RunConfig& c) const {
    if (*modalities_opt) c.model.modalities = modalities_from_string(modalities);
    if (*backbone_opt) c.model.backbone = backbone_from_string(backbone);
    if (*epochs_opt) c.train.epochs = epochs;
    if (*lr_opt) c.train.learning_rate = lr;
    if (*batch_opt) c.train.batch_size = batch_size;
  }
};

TrainConfig stage_train_config(const RunConfig& c) {
  TrainConfig t = c.train;
  t.seed = derive_seed(derive_seed(c.seed, kTrainStream), c.train.seed);
  return t;
}

// ---- train ----

struct TrainArgs {
  ModelArgs model;
  std::string data;
  int holdout_fold = -1;
  int k = 5;
};

int do_train(const RunConfig& base, const TrainArgs& a, const Log& log) {
  RunConfig c = base;
  a.model.apply(c);
  validate(c);
  const fs::path dir = prepare_out(c);
  const PreparedSet data = load_prepared(or_default(a.data, dir, "dataset.ggl"), c, log);

  std::vector<std::size_t> train_idx = all_indices(std::size_t(data.size)), val_idx;
  if (a.holdout_fold >= 0) {
    if (a.holdout_fold >= a.k) throw ConfigError("holdout_fold", "must be < k");
    const auto folds = split_kfold(data.episodes, a.k, derive_seed(c.seed, kSplitStream));
    train_idx = folds[std::size_t(a.holdout_fold)].train;
    val_idx = folds[std::size_t(a.holdout_fold)].validation;
  }
  Model model(c.model, derive_seed(c.seed, kInitStream));
  log.event("train_start", {{"parameters", model.parameter_count()},
                            {"train_samples", train_idx.size()},
                            {"validation_samples", val_idx.size()}});
  const TrainResult r = train(model, data, train_idx, val_idx, stage_train_config(c),
                              [&](const EpochMetrics& e) { log.event("epoch", epoch_json(e)); });
  save_model(model, dir / "model.ggm");
  write_text(dir / "metrics.csv", metrics_csv(r));
  json report = {{"parameters", model.parameter_count()},
                 {"model", to_json(c.model)},
                 {"train", to_json(c.train)},
                 {"train_samples", train_idx.size()},
                 {"validation_samples", val_idx.size()},
                 {"holdout_fold", a.holdout_fold}};
  if (!r.epochs.empty()) report["final_epoch"] = epoch_json(r.epochs.back());
  write_json(dir / "train_report.json", report);
  write_json(dir / "config.json", to_json(c));
  log.event("train_done", {{"path", (dir / "model.ggm").string()}});
  return kOk;
}

// ---- crossval ----

struct CrossvalArgs {
  ModelArgs model;
  std::string data;
  int k = 5;
  std::vector<std::string> ablations{"full", "no_action", "vision_action"};
};

int do_crossval(const RunConfig& base, const CrossvalArgs& a, const Log& log) {
  RunConfig c = base;
  a.model.apply(c);
  validate(c);
  if (a.k < 2) throw ConfigError("k", "must be >= 2");
  const fs::path dir = prepare_out(c);
  const PreparedSet data = load_prepared(or_default(a.data, dir, "dataset.ggl"), c, log);
  const TrainConfig tc = stage_train_config(c);
  const std::uint64_t split = derive_seed(c.seed, kSplitStream);

  json entries = json::array();
  ConfusionMatrix4 pooled;
  std::vector<double> pe;
  std::vector<PredictedOutcome> predictions;
  std::vector<GraspOutcome> labels;
  for (std::size_t i = 0; i < a.ablations.size(); ++i) {
    ModelConfig mc = c.model;
    mc.modalities = modalities_from_string(a.ablations[i]);
    log.event("ablation_start", {{"name", a.ablations[i]}, {"modalities", to_string(mc.modalities)}});
    const AblationEntry e = cross_validate(
        data, a.ablations[i], mc, tc, a.k, split,
        [&](int fold, const Model&, const std::vector<std::size_t>& validation, const Evaluation& ev) {
          const HeadAccuracy h = head_accuracy(ev.predictions, ev.labels, mc.threshold);
          log.event("fold_done", {{"name", a.ablations[i]}, {"fold", fold}, {"accuracy", head_json(h)}});
          if (i != 0) return;
          const auto p = position_errors(data, validation);
          pe.insert(pe.end(), p.begin(), p.end());
          predictions.insert(predictions.end(), ev.predictions.begin(), ev.predictions.end());
          labels.insert(labels.end(), ev.labels.begin(), ev.labels.end());
        },
        [&](const EpochMetrics& m) { log.event("epoch", epoch_json(m)); });
    if (i == 0)
      for (const auto& f : e.folds)
        for (int r = 0; r < 4; ++r)
          for (int col = 0; col < 4; ++col) pooled.counts[r][col] += f.confusion.counts[r][col];
    entries.push_back(to_json(e));
  }

  json report = {{"k", a.k}, {"samples", data.size}, {"split_seed", split}, {"entries", entries}};
  if (!a.ablations.empty()) {
    const TrendReport trend = export_prediction_trend(pe, predictions, labels);
    report["trend"] = to_json(trend);
    write_text(dir / "prediction_trend.csv", trend.csv);
    json cm = to_json(pooled);
    cm["model"] = a.ablations.front();
    write_json(dir / "confusion_matrix.json", cm);
  }
  write_json(dir / "ablation_report.json", report);
  write_json(dir / "config.json", to_json(c));
  log.event("crossval_done", {{"entries", a.ablations.size()}});
  return kOk;
}

// ---- evaluate ----

struct EvaluateArgs {
  std::string model;
  std::string data;
  int holdout_fold = -1;
  int k = 5;
};

int do_evaluate(const RunConfig& base, const EvaluateArgs& a, const Log& log) {
  RunConfig c = base;
  const fs::path dir = prepare_out(c);
  const Model model = load_model(or_default(a.model, dir, "model.ggm"));
  c.model = model.config();
  validate(c);
  const PreparedSet data = load_prepared(or_default(a.data, dir, "dataset.ggl"), c, log);
  std::vector<std::size_t> idx = all_indices(std::size_t(data.size));
  if (a.holdout_fold >= 0) {
    if (a.holdout_fold >= a.k) throw ConfigError("holdout_fold", "must be < k");
    idx = split_kfold(data.episodes, a.k, derive_seed(c.seed, kSplitStream))[std::size_t(a.holdout_fold)].validation;
  }
  const Evaluation ev = evaluate(model, data, idx);
  const double thr = model.config().threshold;
  const ConfusionMatrix4 cm = confusion_matrix(classes(ev.predictions, thr), ev.labels);
  const TrendReport trend = export_prediction_trend(position_errors(data, idx), ev.predictions, ev.labels);
  write_json(dir / "confusion_matrix.json", to_json(cm));
  write_text(dir / "prediction_trend.csv", trend.csv);
  const json report = {{"samples", idx.size()},
                       {"holdout_fold", a.holdout_fold},
                       {"loss", ev.loss},
                       {"accuracy", head_json(head_accuracy(ev.predictions, ev.labels, thr))},
                       {"majority_baseline", majority_baseline(ev.labels)},
                       {"trend", to_json(trend)}};
  write_json(dir / "evaluation.json", report);
  log.event("evaluate_done", report);
  return kOk;
}

// ---- grasp-test ----

struct GraspArgs {
  std::vector<std::string> policies{"model"};
  std::string model;
  int trials = 100;
  double t_gentle = 0.0, t_success = 0.0, zero_motion_fraction = 0.0;
  int candidates = 0, max_regrasps = 0;
  CLI::Option *t_gentle_opt = nullptr, *t_success_opt = nullptr, *zero_opt = nullptr, *candidates_opt = nullptr,
              *regrasps_opt = nullptr;
};

int do_grasp_test(const RunConfig& base, const GraspArgs& a, const Log& log) {
  RunConfig c = base;
  if (*a.t_gentle_opt) c.optimizer.t_gentle = a.t_gentle;
  if (*a.t_success_opt) c.optimizer.t_success = a.t_success;
  if (*a.zero_opt) c.optimizer.zero_motion_fraction = a.zero_motion_fraction;
  if (*a.candidates_opt) c.optimizer.candidates = a.candidates;
  if (*a.regrasps_opt) c.optimizer.max_regrasps = a.max_regrasps;
  validate(c);
  const fs::path dir = prepare_out(c);
  const Simulator sim(c);

  std::optional<Model> model;
  std::vector<NamedPolicy> policies;
  for (const auto& name : a.policies) {
    if (name == "model") {
      if (!model) model.emplace(load_model(or_default(a.model, dir, "model.ggm")));
      policies.push_back({name, model_predictor(*model)});
    } else if (name == "random") {
      policies.push_back({name, random_predictor()});
    } else {
      policies.push_back({name, oracle_predictor(sim)});
    }
  }
  const std::uint64_t seed = derive_seed(c.seed, kGraspStream);
  log.event("grasp_test_start", {{"trials", a.trials}, {"policies", a.policies}});
  const auto rates = closed_loop_compare(sim, policies, c.optimizer, a.trials, seed, c.workers);
  const json report = {{"trials", a.trials},
                       {"seed", seed},
                       {"optimizer",
                        {{"t_gentle", c.optimizer.t_gentle},
                         {"t_success", c.optimizer.t_success},
                         {"candidates", c.optimizer.candidates},
                         {"zero_motion_fraction", c.optimizer.zero_motion_fraction},
                         {"max_regrasps", c.optimizer.max_regrasps}}},
                       {"policies", to_json(rates, true)}};
  write_json(dir / "closed_loop.json", report);
  for (const auto& r : rates)
    log.event("policy_done", {{"policy", r.name},
                              {"success", r.rate(r.success)},
                              {"gentle", r.rate(r.gentle)},
                              {"success_and_gentle", r.rate(r.both)}});
  return kOk;
}

// ---- inspect ----

struct InspectArgs {
  std::string path;
  std::string png_dir;
  std::uint32_t sample = 0;
  bool offsets = false;
};

int do_inspect(const InspectArgs& a, std::ostream& out) {
  char magic[4] = {};
  {
    std::ifstream in(a.path, std::ios::binary);
    if (!in) throw FormatError(FormatErrc::io, "cannot open " + a.path);
    in.read(magic, 4);
  }
  json report;
  if (std::memcmp(magic, "GGM1", 4) == 0) {
    const Model m = load_model(a.path);
    report = {{"kind", "model"},
              {"parameters", m.parameter_count()},
              {"branches", m.branch_count()},
              {"seed", m.seed()},
              {"model", to_json(m.config())}};
  } else {
    const DatasetManifest manifest = inspect_dataset(a.path);
    DatasetReader reader(a.path);
    std::vector<GraspOutcome> outcomes;
    std::optional<Sample> picked;
    while (!reader.done()) {
      const std::uint32_t i = reader.next_index();
      Sample s = reader.next();
      outcomes.push_back(s.outcome);
      if (i == a.sample) picked = std::move(s);
    }
    report = {{"kind", "dataset"},
              {"manifest", to_json(manifest, a.offsets)},
              {"class_distribution", to_json(class_distribution(outcomes))}};
    if (!a.png_dir.empty()) {
      if (!picked) throw DomainError("inspect: sample index out of range");
      fs::create_directories(a.png_dir);
      const std::string stem = "sample" + std::to_string(a.sample) + "_";
      const fs::path d(a.png_dir);
      write_png(picked->state.visual, d / (stem + "visual.png"));
      write_png(picked->state.tactile_left, d / (stem + "tactile_left.png"));
      write_png(picked->state.tactile_right, d / (stem + "tactile_right.png"));
      write_png(picked->state.tactile_left_ref, d / (stem + "tactile_left_ref.png"));
      write_png(picked->state.tactile_right_ref, d / (stem + "tactile_right_ref.png"));
      report["png"] = {{"sample", a.sample}, {"directory", a.png_dir}};
    }
  }
  out << report.dump(2) << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& log_stream) {
  CLI::App app{"Simulated gentle-grasping pipeline: data collection, training, evaluation and closed-loop tests"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  std::map<const CLI::App*, Common> common;
  CollectArgs collect_args;
  TrainArgs train_args;
  CrossvalArgs crossval_args;
  EvaluateArgs evaluate_args;
  GraspArgs grasp_args;
  InspectArgs inspect_args;

  auto* collect_cmd = app.add_subcommand("collect", "Simulate episodes and write an augmented dataset");
  common[collect_cmd].attach(collect_cmd);
  collect_args.episodes_opt =
      collect_cmd->add_option("--episodes", collect_args.episodes, "Episodes to simulate")->check(CLI::NonNegativeNumber);
  collect_args.source_opt = collect_cmd->add_option("--stability-source", collect_args.stability_source,
                                                    "Stability labels from the lift predicate or the logistic model")
                                ->check(CLI::IsMember({"ground_truth", "logistic"}));

  auto* train_cmd = app.add_subcommand("train", "Train one predictor");
  common[train_cmd].attach(train_cmd);
  train_args.model.attach(train_cmd);
  train_cmd->add_option("--data", train_args.data, "Dataset file (default OUT/dataset.ggl)");
  train_cmd->add_option("--holdout-fold", train_args.holdout_fold, "Hold out this fold for validation (-1: none)");
  train_cmd->add_option("--k", train_args.k, "Folds for --holdout-fold")->check(CLI::Range(2, 1000));

  auto* crossval_cmd = app.add_subcommand("crossval", "k-fold cross-validation over modality ablations");
  common[crossval_cmd].attach(crossval_cmd);
  crossval_args.model.attach(crossval_cmd);
  crossval_cmd->add_option("--data", crossval_args.data, "Dataset file (default OUT/dataset.ggl)");
  crossval_cmd->add_option("--k", crossval_args.k, "Number of folds")->check(CLI::Range(2, 1000));
  crossval_cmd->add_option("--ablations", crossval_args.ablations, "Modality presets to compare; the first is reported in detail")
      ->delimiter(',');

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Evaluate a trained model on a dataset");
  common[evaluate_cmd].attach(evaluate_cmd);
  evaluate_cmd->add_option("--model", evaluate_args.model, "Model file (default OUT/model.ggm)");
  evaluate_cmd->add_option("--data", evaluate_args.data, "Dataset file (default OUT/dataset.ggl)");
  evaluate_cmd->add_option("--holdout-fold", evaluate_args.holdout_fold, "Evaluate only this fold (-1: all samples)");
  evaluate_cmd->add_option("--k", evaluate_args.k, "Folds for --holdout-fold")->check(CLI::Range(2, 1000));

  auto* grasp_cmd = app.add_subcommand("grasp-test", "Closed-loop grasping trials");
  common[grasp_cmd].attach(grasp_cmd);
  grasp_cmd->add_option("--policy", grasp_args.policies, "Policies: model, random, oracle")
      ->delimiter(',')
      ->check(CLI::IsMember({"model", "random", "oracle"}));
  grasp_cmd->add_option("--model", grasp_args.model, "Model file for the model policy (default OUT/model.ggm)");
  grasp_cmd->add_option("--trials", grasp_args.trials, "Trials per policy; the first half upright")
      ->check(CLI::NonNegativeNumber);
  grasp_args.t_gentle_opt = grasp_cmd->add_option("--t-gentle", grasp_args.t_gentle, "Gentleness threshold");
  grasp_args.t_success_opt = grasp_cmd->add_option("--t-success", grasp_args.t_success, "Success threshold for lifting");
  grasp_args.candidates_opt =
      grasp_cmd->add_option("--candidates", grasp_args.candidates, "Candidate actions per decision");
  grasp_args.zero_opt = grasp_cmd->add_option("--zero-motion-fraction", grasp_args.zero_motion_fraction,
                                              "Share of candidates with zero end-effector motion");
  grasp_args.regrasps_opt = grasp_cmd->add_option("--max-regrasps", grasp_args.max_regrasps, "Regrasp cap per trial");

  auto* inspect_cmd = app.add_subcommand("inspect", "Describe a dataset or model file");
  inspect_cmd->add_option("path", inspect_args.path, "Dataset or model file")->required();
  inspect_cmd->add_option("--png", inspect_args.png_dir, "Write the images of one sample as PNG into this directory");
  inspect_cmd->add_option("--sample", inspect_args.sample, "Sample index for --png");
  inspect_cmd->add_flag("--offsets", inspect_args.offsets, "Include every sample's byte offset");

  std::vector<const char*> argv{"gentle"};
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    Log(log_stream, false).error("usage", std::string(e.what()) + " (see --help)");
    return kUsageError;
  }

  const CLI::App* active = app.get_subcommands().front();
  const bool quiet = common.count(active) ? common.at(active).quiet : false;
  const Log log(log_stream, quiet);
  try {
    if (*inspect_cmd) return do_inspect(inspect_args, out);
    const RunConfig config = common.at(active).resolve();
    if (*collect_cmd) return do_collect(config, collect_args, log);
    if (*train_cmd) return do_train(config, train_args, log);
    if (*crossval_cmd) return do_crossval(config, crossval_args, log);
    if (*evaluate_cmd) return do_evaluate(config, evaluate_args, log);
    if (*grasp_cmd) return do_grasp_test(config, grasp_args, log);
  } catch (const ConfigError& e) {
    log.error("config", e.what(), {{"field", e.field()}});
    return kConfigError;
  } catch (const TrainingError& e) {
    log.error("training", e.what(), {{"epoch", e.epoch()}, {"batch", e.batch()}, {"lr", e.lr()}});
    return kRuntimeError;
  } catch (const FormatError& e) {
    log.error("format", e.what());
    return kRuntimeError;
  } catch (const std::exception& e) {
    log.error("runtime", e.what());
    return kRuntimeError;
  }
  return kUsageError;
}

}  // namespace gentle::cli
