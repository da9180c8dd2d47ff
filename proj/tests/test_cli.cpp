// Copyright 2026 The GRNGC Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "doctest.h"
#include "grngc/cli.hpp"
#include "json.hpp"

using namespace grngc;
using namespace grngc::cli;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  static int counter = 0;
  const fs::path dir = fs::temp_directory_path() /
                       ("grngc_cli_" + std::to_string(::getpid()) + "_" + tag + "_" +
                        std::to_string(counter++));
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct Invocation {
  int status = 0;
  std::string out;
  std::string err;
};

Invocation invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "grngc");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Invocation r;
  r.status = run_main(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

// Small enough to train in well under a second.
std::vector<std::string> tiny_var(const fs::path& out) {
  return {"--out", out.string(),
          "--set", "data.source=var",
          "--set", "data.var.length=200",
          "--set", "train.epochs=5",
          "--set", "train.hidden=[8]"};
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("config defaults, file and overrides layer in order") {
  const RunConfig defaults = resolve_config("", {});
  CHECK(config_to_json(defaults) == config_to_json(RunConfig{}));
  CHECK(defaults.train.lambda == 1e-3);
  CHECK(defaults.lambda_values() == std::vector<double>{1e-3});

  const RunConfig layered = resolve_config(R"({"train": {"lambda": 0.5, "epochs": 7}, "seeds": [4, 5]})",
                                           {"train.lambda=1e-2", "data.source=var", "out=somewhere"});
  CHECK(layered.train.lambda == 1e-2);
  CHECK(layered.train.epochs == 7);
  CHECK(layered.seeds == std::vector<std::uint64_t>{4, 5});
  CHECK(layered.source == DataSource::kVar);
  CHECK(layered.out == fs::path("somewhere"));
  CHECK(layered.train.lag == RunConfig{}.train.lag);

  // The echo round-trips.
  const RunConfig again = resolve_config(config_to_json(layered), {});
  CHECK(config_to_json(again) == config_to_json(layered));

  CHECK_THROWS_WITH_AS(resolve_config("", {"train.lamda=1"}), "unknown key 'train.lamda'", ValueError);
  CHECK_THROWS_WITH_AS(resolve_config(R"({"train": {"momentum": 1}})", {}), "unknown key 'train.momentum'",
                       ValueError);
  CHECK_THROWS_AS(resolve_config("", {"train=1"}), ValueError);
  CHECK_THROWS_AS(resolve_config("", {"train.epochs=many"}), ValueError);
  CHECK_THROWS_AS(resolve_config("", {"train.epochs=-3"}), ValueError);
  CHECK_THROWS_AS(resolve_config("", {"noequals"}), ValueError);
  CHECK_THROWS_AS(resolve_config("[1, 2]", {}), ValueError);
  CHECK_THROWS_AS(resolve_config("", {"seeds=[]"}), ValueError);
  CHECK_THROWS_AS(resolve_config("", {"data.source=csv"}), ValueError);
  CHECK_THROWS_AS(resolve_config("", {"eval.mode=diagonal"}), ValueError);
}

TEST_CASE("simulate writes the requested dimensions reproducibly") {
  const fs::path a = fresh_dir("sim");
  const fs::path b = fresh_dir("sim");
  REQUIRE(invoke({"simulate", "--out", a.string()}).status == 0);
  REQUIRE(invoke({"simulate", "--out", b.string()}).status == 0);

  const TimeSeries s = load_csv(a / "series.csv", false);
  CHECK(s.length() == 1000);
  CHECK(s.dim() == 10);
  CHECK(slurp(a / "series.csv") == slurp(b / "series.csv"));
  CHECK(slurp(a / "truth.csv") == slurp(b / "truth.csv"));

  const fs::path v = fresh_dir("sim");
  REQUIRE(invoke({"simulate", "--out", v.string(), "--set", "data.source=var"}).status == 0);
  const Eigen::MatrixXd truth = load_matrix_csv(v / "truth.csv");
  CHECK(truth.rows() == 5);
  CHECK(truth.cols() == 5);
  CHECK((truth.array() * (truth.array() - 1.0)).cwiseAbs().maxCoeff() == 0.0);

  const Invocation csv = invoke({"simulate", "--out", v.string(), "--set", "data.source=csv",
                                 "--set", "data.csv.series=x.csv"});
  CHECK(csv.status != 0);
  CHECK(csv.err.find("simulate") != std::string::npos);

  for (const fs::path& d : {a, b, v}) fs::remove_all(d);
}

TEST_CASE("infer writes a non-negative p x p matrix and a report") {
  const fs::path data = fresh_dir("infer");
  REQUIRE(invoke({"simulate", "--out", data.string(), "--set", "data.source=var",
                  "--set", "data.var.length=200"}).status == 0);
  const fs::path out = fresh_dir("infer");
  const Invocation r = invoke(concat({"infer", "--series", (data / "series.csv").string()}, tiny_var(out)));
  REQUIRE(r.status == 0);
  const GcMatrix gc = load_gc_csv(out / "gc_matrix.csv");
  CHECK(gc.dim() == 5);
  CHECK((gc.scores.array() >= 0).all());

  const auto report = nlohmann::json::parse(slurp(out / "train_report.json"));
  CHECK(report["epochs_run"] == 5);
  CHECK(report["run_config"]["data"]["source"] == "csv");
  CHECK(report["config"]["lambda"] == 1e-3);

  const Invocation missing = invoke({"infer", "--series", (data / "absent.csv").string()});
  CHECK(missing.status != 0);
  CHECK(missing.err.find("absent.csv") != std::string::npos);

  const Invocation bad_config = invoke({"infer", "--config", (data / "none.json").string()});
  CHECK(bad_config.status != 0);
  CHECK(bad_config.err.find("none.json") != std::string::npos);

  fs::remove_all(data);
  fs::remove_all(out);
}

TEST_CASE("eval examples") {
  const fs::path dir = fresh_dir("eval");
  fs::create_directories(dir);
  Eigen::MatrixXd t(3, 3);
  t << 1, 1, 0, 0, 1, 0, 1, 0, 1;
  save_matrix_csv(t, dir / "truth.csv");
  save_matrix_csv(t, dir / "perfect.csv");
  save_matrix_csv(Eigen::MatrixXd::Zero(3, 3), dir / "zero.csv");
  save_matrix_csv(Eigen::MatrixXd::Zero(4, 4), dir / "big.csv");

  const Invocation perfect = invoke({"eval", "--gc", (dir / "perfect.csv").string(), "--truth",
                                     (dir / "truth.csv").string(), "--out", dir.string()});
  REQUIRE(perfect.status == 0);
  CHECK(perfect.out.find("auroc 1.000") != std::string::npos);
  const auto metrics = nlohmann::json::parse(slurp(dir / "metrics.json"));
  CHECK(metrics["auroc"] == 1.0);
  CHECK(metrics["mode"] == "full");

  const Invocation zero = invoke({"eval", "--gc", (dir / "zero.csv").string(), "--truth",
                                  (dir / "truth.csv").string(), "--mode", "off_diagonal", "--out",
                                  dir.string()});
  REQUIRE(zero.status == 0);
  CHECK(nlohmann::json::parse(slurp(dir / "metrics.json"))["auroc"] == 0.5);

  const Invocation mismatch = invoke({"eval", "--gc", (dir / "big.csv").string(), "--truth",
                                      (dir / "truth.csv").string(), "--out", dir.string()});
  CHECK(mismatch.status != 0);
  CHECK(mismatch.err.find("eval") != std::string::npos);

  CHECK(invoke({"eval", "--gc", (dir / "zero.csv").string()}).status != 0);
  fs::remove_all(dir);
}

TEST_CASE("run aggregates seeds and a lambda sweep") {
  const fs::path out = fresh_dir("run");
  const Invocation r = invoke(concat({"run", "--set", "seeds=[0,1,2]", "--set", "lambdas=[1e-4,1e-3,1e-2]"},
                                     tiny_var(out)));
  REQUIRE(r.status == 0);
  const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
  REQUIRE(summary["runs"].size() == 9);
  REQUIRE(summary["summary"].size() == 3);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    int rows = 0;
    for (const auto& run : summary["runs"]) rows += run["seed"] == seed;
    CHECK(rows == 3);
  }
  // Aggregates recomputed from the per-run entries.
  for (const auto& row : summary["summary"]) {
    std::vector<double> v;
    for (const auto& run : summary["runs"]) {
      if (run["lambda"] == row["lambda"]) v.push_back(run["auroc"].get<double>());
    }
    REQUIRE(v.size() == 3);
    const double mean = (v[0] + v[1] + v[2]) / 3.0;
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    CHECK(std::abs(row["auroc_mean"].get<double>() - mean) < 1e-12);
    CHECK(std::abs(row["auroc_std"].get<double>() - std::sqrt(ss / 2.0)) < 1e-12);
  }
  CHECK(fs::exists(out / "seed_1" / "lambda_0.01" / "gc_matrix.csv"));
  CHECK(fs::exists(out / "seed_1" / "lambda_0.01" / "metrics.json"));
  CHECK(r.out.find("+-") != std::string::npos);
  fs::remove_all(out);
}

TEST_CASE("run is byte-identical across invocations and thread counts") {
  const fs::path a = fresh_dir("det");
  const fs::path b = fresh_dir("det");
  const auto args = [](const fs::path& out) {
    return concat({"run", "--set", "seeds=[3,4]"}, tiny_var(out));
  };
  REQUIRE(invoke(args(a)).status == 0);
  RunConfig config = resolve_config("", {"seeds=[3,4]", "data.source=var", "data.var.length=200",
                                         "train.epochs=5", "train.hidden=[8]", "out=" + b.string()});
  std::ostringstream log;
  cmd_run(config, log, 2);
  for (const char* seed : {"seed_3", "seed_4"}) {
    const std::string first = slurp(a / seed / "gc_matrix.csv");
    CHECK(!first.empty());
    CHECK(first == slurp(b / seed / "gc_matrix.csv"));
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("unwritable output and stage names") {
  const Invocation r = invoke(concat({"simulate"}, {"--out", "/proc/grngc_cannot_write"}));
  CHECK(r.status != 0);
  CHECK(r.err.find("write") != std::string::npos);

  const Invocation diverge = invoke(concat({"run", "--set", "train.learning_rate=1e300",
                                            "--set", "train.backbone=mlp"},
                                           tiny_var(fresh_dir("div"))));
  CHECK(diverge.status != 0);
  CHECK(diverge.err.find("train") != std::string::npos);

  CHECK(invoke({}).status != 0);
  CHECK(invoke({"bogus"}).status != 0);
}

TEST_CASE("thread count from the environment") {
  ::unsetenv("GRNGC_THREADS");
  CHECK(threads_from_env() == 1);
  ::setenv("GRNGC_THREADS", "3", 1);
  CHECK(threads_from_env() == 3);
  ::setenv("GRNGC_THREADS", "0", 1);
  CHECK(threads_from_env() == 1);
  ::setenv("GRNGC_THREADS", "two", 1);
  CHECK(threads_from_env() == 1);
  ::unsetenv("GRNGC_THREADS");
}
