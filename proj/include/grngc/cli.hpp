// Copyright 2026 The GRNGC Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line surface: simulate, infer, eval and run. Every command reads a
// RunConfig assembled from built-in defaults, an optional JSON file and
// dotted `--set key=value` overrides, in that order.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "grngc/core.hpp"
#include "grngc/metrics.hpp"

namespace grngc::cli {

enum class DataSource { kLorenz96, kVar, kCsv };

std::string to_string(DataSource source);
DataSource parse_data_source(const std::string& name);

// VAR(1) benchmark drawn with random_sparse_var_matrix.
struct VarSource {
  std::size_t p = 5;
  double density = 0.3;
  std::size_t length = 2000;
  double noise_sigma = 1.0;
  std::size_t burn_in = 100;
};

struct CsvSource {
  std::filesystem::path series;
  std::filesystem::path truth;  // empty: no evaluation
  bool has_header = false;
};

struct RunConfig {
  DataSource source = DataSource::kLorenz96;
  Lorenz96Config lorenz96;
  VarSource var;
  CsvSource csv;
  TrainConfig train;
  EdgeMode mode = EdgeMode::kFull;
  std::filesystem::path out = "grngc_out";
  // Each seed drives both the simulator and the weight initialization.
  std::vector<std::uint64_t> seeds = {0};
  // Sweep values; empty means the single train.lambda.
  std::vector<double> lambdas;

  void validate() const;
  std::vector<double> lambda_values() const;
};

std::string config_to_json(const RunConfig& config);

// Defaults, then `file_text` (a JSON object, may be empty), then each
// "dotted.key=value" override. Values parse as JSON when they can and as
// plain strings otherwise. Keys absent from the defaults are rejected.
RunConfig resolve_config(const std::string& file_text, const std::vector<std::string>& overrides);

// Failure of one pipeline stage ("simulate", "load", "train", "eval",
// "write"). The message is prefixed with the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message);
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct Dataset {
  TimeSeries series;
  std::optional<AdjacencyTruth> truth;
};

// Simulated with `seed` or loaded from CSV.
Dataset load_dataset(const RunConfig& config, std::uint64_t seed);

// Writes series.csv and truth.csv for seeds[0] into config.out.
void cmd_simulate(const RunConfig& config, std::ostream& log);

// Trains on seeds[0] and writes gc_matrix.csv and train_report.json.
TrainReport cmd_infer(const RunConfig& config, std::ostream& log);

// Scores a saved matrix against a truth file; writes metrics.json into `out`.
Metrics cmd_eval(const std::filesystem::path& gc_path, const std::filesystem::path& truth_path,
                 EdgeMode mode, const std::filesystem::path& out, std::ostream& log);

struct RunResult {
  std::uint64_t seed = 0;
  double lambda = 0;
  std::filesystem::path dir;
  std::optional<Metrics> metrics;
  std::size_t epochs_run = 0;
  double seconds = 0;
};

struct SweepRow {
  double lambda = 0;
  std::size_t runs = 0;
  double auroc_mean = 0;
  double auroc_std = 0;
  double auprc_mean = 0;
  double auprc_std = 0;
};

struct RunSummary {
  std::vector<RunResult> runs;  // seed-major, then lambda
  std::vector<SweepRow> rows;   // one per lambda, empty without truth
};

std::string summary_to_json(const RunSummary& summary, const RunConfig& config);

// Every seed x lambda pair in its own subdirectory of config.out, then
// summary.json. Pairs run on up to `threads` threads.
RunSummary cmd_run(const RunConfig& config, std::ostream& log, std::size_t threads = 1);

// GRNGC_THREADS, clamped to at least 1; 1 when unset or malformed.
std::size_t threads_from_env();

// Full command line; returns the process exit status.
int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace grngc::cli
