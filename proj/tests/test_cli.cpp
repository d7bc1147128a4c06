#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "gentle/dataset.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string log;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, log;
  const int code = gentle::cli::run(args, out, log);
  return {code, out.str(), log.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "gentle_cli_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string bytes_of(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

json json_of(const fs::path& p) { return json::parse(bytes_of(p)); }

std::vector<json> log_lines(const std::string& log) {
  std::vector<json> out;
  std::istringstream in(log);
  for (std::string line; std::getline(in, line);) out.push_back(json::parse(line));
  return out;
}

}  // namespace

TEST_CASE("help documents every subcommand and flag") {
  const Result top = run({"--help"});
  CHECK(top.code == 0);
  for (const char* sub : {"collect", "train", "crossval", "evaluate", "grasp-test", "inspect"})
    CHECK(top.out.find(sub) != std::string::npos);

  const Result grasp = run({"grasp-test", "--help"});
  CHECK(grasp.code == 0);
  for (const char* flag : {"--t-gentle", "--t-success", "--candidates", "--zero-motion-fraction", "--max-regrasps",
                           "--trials", "--seed", "--policy", "--workers", "--out", "--config", "--scale"})
    CHECK(grasp.out.find(flag) != std::string::npos);
  CHECK(run({"crossval", "--help"}).out.find("--k") != std::string::npos);
}

TEST_CASE("exit codes") {
  const fs::path dir = scratch("codes");
  CHECK(run({}).code == gentle::cli::kUsageError);
  CHECK(run({"collect", "--no-such-flag"}).code == gentle::cli::kUsageError);
  CHECK(run({"grasp-test", "--policy", "psychic"}).code == gentle::cli::kUsageError);
  CHECK(run({"teleport"}).code == gentle::cli::kUsageError);

  const fs::path bad = dir / "bad.json";
  std::ofstream(bad) << R"({"optimizer": {"max_regrasps": 0}})";
  const Result r = run({"collect", "--config", bad.string(), "--out", (dir / "o").string()});
  CHECK(r.code == gentle::cli::kConfigError);
  const auto lines = log_lines(r.log);
  REQUIRE(!lines.empty());
  CHECK(lines.back()["field"] == "optimizer.max_regrasps");

  std::ofstream(bad) << "{ not json";
  CHECK(run({"collect", "--config", bad.string()}).code == gentle::cli::kConfigError);
  CHECK(run({"train", "--modalities", "smell", "--out", (dir / "o").string()}).code == gentle::cli::kConfigError);

  const Result missing = run({"train", "--data", (dir / "absent.ggl").string(), "--out", (dir / "o").string()});
  CHECK(missing.code == gentle::cli::kRuntimeError);
  CHECK(log_lines(missing.log).back()["kind"] == "format");
}

TEST_CASE("collect writes deterministic datasets") {
  const fs::path a = scratch("collect_a"), b = scratch("collect_b"), c = scratch("collect_c");
  const Result ra = run({"collect", "--episodes", "6", "--seed", "4", "--out", a.string()});
  REQUIRE(ra.code == 0);
  for (const json& line : log_lines(ra.log)) CHECK(line.contains("event"));
  REQUIRE(run({"collect", "--episodes", "6", "--seed", "4", "--out", b.string(), "--quiet"}).code == 0);
  REQUIRE(run({"collect", "--episodes", "6", "--seed", "5", "--out", c.string(), "--quiet"}).code == 0);
  CHECK(bytes_of(a / "dataset.ggl") == bytes_of(b / "dataset.ggl"));
  CHECK(bytes_of(a / "dataset.ggl") != bytes_of(c / "dataset.ggl"));
  CHECK(gentle::inspect_dataset(a / "dataset.ggl").count == 36);
  CHECK(json_of(a / "collection_report.json")["samples"] == 36);

  const fs::path empty = scratch("collect_empty");
  REQUIRE(run({"collect", "--episodes", "0", "--out", empty.string(), "--quiet"}).code == 0);
  CHECK(gentle::read_dataset(empty / "dataset.ggl").size() == 0);

  const Result inspected = run({"inspect", (a / "dataset.ggl").string(), "--png", (a / "png").string(), "--sample", "3"});
  REQUIRE(inspected.code == 0);
  const json j = json::parse(inspected.out);
  CHECK(j["kind"] == "dataset");
  CHECK(j["class_distribution"]["total"] == 36);
  CHECK(fs::exists(a / "png" / "sample3_visual.png"));
  CHECK(run({"inspect", (a / "dataset.ggl").string(), "--png", (a / "png").string(), "--sample", "99"}).code == 1);
}

TEST_CASE("chained pipeline is reproducible") {
  auto pipeline = [](const fs::path& dir) {
    const std::string out = dir.string();
    REQUIRE(run({"collect", "--episodes", "12", "--seed", "9", "--out", out, "--quiet"}).code == 0);
    REQUIRE(run({"train", "--epochs", "2", "--seed", "9", "--out", out, "--holdout-fold", "0", "--quiet"}).code == 0);
    REQUIRE(run({"evaluate", "--seed", "9", "--out", out, "--holdout-fold", "0", "--quiet"}).code == 0);
    REQUIRE(run({"grasp-test", "--policy", "model,random", "--trials", "4", "--candidates", "50", "--seed", "9", "--out",
                 out, "--quiet"})
                .code == 0);
  };
  const fs::path a = scratch("chain_a"), b = scratch("chain_b");
  pipeline(a);
  pipeline(b);
  for (const char* f : {"dataset.ggl", "model.ggm", "metrics.csv", "closed_loop.json", "evaluation.json",
                        "confusion_matrix.json", "prediction_trend.csv"})
    CHECK_MESSAGE(bytes_of(a / f) == bytes_of(b / f), f);

  const json loop = json_of(a / "closed_loop.json");
  REQUIRE(loop["policies"].size() == 2);
  CHECK(loop["policies"][0]["policy"] == "model");
  CHECK(loop["policies"][0]["trials"] == 4);
  CHECK(loop["policies"][0]["upright_trials"] == 2);
  CHECK(loop["optimizer"]["candidates"] == 50);

  const Result model = run({"inspect", (a / "model.ggm").string()});
  REQUIRE(model.code == 0);
  CHECK(json::parse(model.out)["branches"] == 5);
}

TEST_CASE("crossval reports every fold") {
  const fs::path dir = scratch("crossval");
  const std::string out = dir.string();
  REQUIRE(run({"collect", "--episodes", "15", "--seed", "2", "--out", out, "--quiet"}).code == 0);
  REQUIRE(run({"crossval", "--k", "5", "--epochs", "1", "--ablations", "full,no_action", "--out", out, "--quiet"}).code == 0);
  const json report = json_of(dir / "ablation_report.json");
  REQUIRE(report["entries"].size() == 2);
  CHECK(report["entries"][0]["folds"].size() == 5);
  CHECK(report["entries"][1]["modalities"] == "vision,touch");
  CHECK(report["trend"].contains("rho_success"));
  CHECK(json_of(dir / "confusion_matrix.json")["total"] == 90);
  CHECK(fs::exists(dir / "prediction_trend.csv"));
}
