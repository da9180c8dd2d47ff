// Copyright 2026 The GRNGC Authors
// SPDX-License-Identifier: Apache-2.0

#include "grngc/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

namespace grngc::cli {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(DataSource source) {
  switch (source) {
    case DataSource::kLorenz96: return "lorenz96";
    case DataSource::kVar: return "var";
    case DataSource::kCsv: return "csv";
  }
  return "?";
}

DataSource parse_data_source(const std::string& name) {
  if (name == "lorenz96") return DataSource::kLorenz96;
  if (name == "var") return DataSource::kVar;
  if (name == "csv") return DataSource::kCsv;
  throw ValueError("unknown data source '" + name + "' (expected lorenz96, var or csv)");
}

StageError::StageError(std::string stage, const std::string& message)
    : Error("stage", stage + ": " + message), stage_(std::move(stage)) {}

void RunConfig::validate() const {
  if (seeds.empty()) throw ValueError("seeds must list at least one seed");
  for (double l : lambdas) {
    if (!(l >= 0)) throw ValueError("lambdas must be >= 0");
  }
  if (source == DataSource::kCsv && csv.series.empty()) {
    throw ValueError("data.csv.series is required when data.source is csv");
  }
  if (source == DataSource::kLorenz96) lorenz96.validate();
  if (source == DataSource::kVar && (var.p == 0 || var.length < 2)) {
    throw ValueError("data.var needs p >= 1 and length >= 2");
  }
  train.validate();
}

std::vector<double> RunConfig::lambda_values() const {
  return lambdas.empty() ? std::vector<double>{train.lambda} : lambdas;
}

// ---------------------------------------------------------------------------
// Config <-> JSON
// ---------------------------------------------------------------------------

namespace {

json to_json_doc(const RunConfig& c) {
  const TrainConfig& t = c.train;
  return {
      {"data",
       {{"source", to_string(c.source)},
        {"lorenz96",
         {{"p", c.lorenz96.p},
          {"forcing", c.lorenz96.forcing},
          {"length", c.lorenz96.length},
          {"dt", c.lorenz96.dt},
          {"substeps", c.lorenz96.substeps},
          {"burn_in", c.lorenz96.burn_in},
          {"obs_noise_sigma", c.lorenz96.obs_noise_sigma}}},
        {"var",
         {{"p", c.var.p},
          {"density", c.var.density},
          {"length", c.var.length},
          {"noise_sigma", c.var.noise_sigma},
          {"burn_in", c.var.burn_in}}},
        {"csv",
         {{"series", c.csv.series.string()},
          {"truth", c.csv.truth.string()},
          {"has_header", c.csv.has_header}}}}},
      {"train",
       {{"lag", t.lag},
        {"lambda", t.lambda},
        {"learning_rate", t.learning_rate},
        {"epochs", t.epochs},
        {"batch_size", t.batch_size},
        {"backbone", to_string(t.backbone)},
        {"hidden", t.hidden},
        {"spline",
         {{"degree", t.spline.degree},
          {"grid_size", t.spline.grid_size},
          {"lo", t.spline.lo},
          {"hi", t.spline.hi}}},
        {"hidden_activation", to_string(t.hidden_activation)},
        {"patience", t.patience},
        {"validation_fraction", t.validation_fraction}}},
      {"eval", {{"mode", to_string(c.mode)}}},
      {"seeds", c.seeds},
      {"lambdas", c.lambdas},
      {"out", c.out.string()},
  };
}

// Rejects keys of `doc` that `reference` lacks, recursing through objects.
void check_known(const json& doc, const json& reference, const std::string& prefix) {
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!reference.contains(it.key())) throw ValueError("unknown key '" + key + "'");
    const json& ref = reference.at(it.key());
    if (ref.is_object()) {
      if (!it->is_object()) throw ValueError("'" + key + "' must be an object");
      check_known(*it, ref, key);
    }
  }
}

template <typename T>
T read(const json& doc, const std::string& dotted) {
  const json* node = &doc;
  std::stringstream ss(dotted);
  for (std::string part; std::getline(ss, part, '.');) node = &node->at(part);
  if constexpr (std::is_unsigned_v<T>) {
    if (node->is_number_integer() && node->get<long long>() < 0) {
      throw ValueError("'" + dotted + "' must be non-negative");
    }
  }
  try {
    return node->get<T>();
  } catch (const json::exception&) {
    throw ValueError("'" + dotted + "' has the wrong type (got " +
                     std::string(node->type_name()) + ")");
  }
}

RunConfig from_json_doc(const json& d) {
  RunConfig c;
  c.source = parse_data_source(read<std::string>(d, "data.source"));
  c.lorenz96.p = read<std::size_t>(d, "data.lorenz96.p");
  c.lorenz96.forcing = read<double>(d, "data.lorenz96.forcing");
  c.lorenz96.length = read<std::size_t>(d, "data.lorenz96.length");
  c.lorenz96.dt = read<double>(d, "data.lorenz96.dt");
  c.lorenz96.substeps = read<std::size_t>(d, "data.lorenz96.substeps");
  c.lorenz96.burn_in = read<std::size_t>(d, "data.lorenz96.burn_in");
  c.lorenz96.obs_noise_sigma = read<double>(d, "data.lorenz96.obs_noise_sigma");
  c.var.p = read<std::size_t>(d, "data.var.p");
  c.var.density = read<double>(d, "data.var.density");
  c.var.length = read<std::size_t>(d, "data.var.length");
  c.var.noise_sigma = read<double>(d, "data.var.noise_sigma");
  c.var.burn_in = read<std::size_t>(d, "data.var.burn_in");
  c.csv.series = read<std::string>(d, "data.csv.series");
  c.csv.truth = read<std::string>(d, "data.csv.truth");
  c.csv.has_header = read<bool>(d, "data.csv.has_header");

  TrainConfig& t = c.train;
  t.lag = read<std::size_t>(d, "train.lag");
  t.lambda = read<double>(d, "train.lambda");
  t.learning_rate = read<double>(d, "train.learning_rate");
  t.epochs = read<std::size_t>(d, "train.epochs");
  t.batch_size = read<std::size_t>(d, "train.batch_size");
  t.backbone = parse_backbone_kind(read<std::string>(d, "train.backbone"));
  t.hidden = read<std::vector<std::size_t>>(d, "train.hidden");
  t.spline.degree = read<int>(d, "train.spline.degree");
  t.spline.grid_size = read<int>(d, "train.spline.grid_size");
  t.spline.lo = read<double>(d, "train.spline.lo");
  t.spline.hi = read<double>(d, "train.spline.hi");
  t.hidden_activation = parse_activation(read<std::string>(d, "train.hidden_activation"));
  t.patience = read<std::size_t>(d, "train.patience");
  t.validation_fraction = read<double>(d, "train.validation_fraction");

  c.mode = parse_edge_mode(read<std::string>(d, "eval.mode"));
  c.seeds = read<std::vector<std::uint64_t>>(d, "seeds");
  c.lambdas = read<std::vector<double>>(d, "lambdas");
  c.out = read<std::string>(d, "out");
  return c;
}

void apply_override(json& doc, const json& reference, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ValueError("--set expects key=value, got '" + assignment + "'");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json* node = &doc;
  const json* ref = &reference;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (!ref->is_object() || !ref->contains(parts[i])) {
      throw ValueError("unknown key '" + key + "'");
    }
    ref = &ref->at(parts[i]);
    node = &(*node)[parts[i]];
  }
  if (ref->is_object()) throw ValueError("'" + key + "' is a section, not a value");
  json value = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = text;
  *node = std::move(value);
}

}  // namespace

std::string config_to_json(const RunConfig& config) { return to_json_doc(config).dump(2); }

RunConfig resolve_config(const std::string& file_text, const std::vector<std::string>& overrides) {
  const json defaults = to_json_doc(RunConfig{});
  json doc = defaults;
  if (!file_text.empty()) {
    json file = json::parse(file_text, nullptr, /*allow_exceptions=*/false);
    if (file.is_discarded() || !file.is_object()) {
      throw ValueError("file is not a JSON object");
    }
    check_known(file, defaults, "");
    doc.merge_patch(file);
  }
  for (const std::string& o : overrides) apply_override(doc, defaults, o);
  RunConfig config = from_json_doc(doc);
  config.validate();
  return config;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace {

template <typename F>
auto in_stage(const std::string& name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError(dir.string(), "cannot create directory (" + ec.message() + ")");
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  os << text << '\n';
  if (!os) throw IoError(path.string(), "cannot write file");
}

std::string format_lambda(double lambda) {
  std::ostringstream os;
  os << lambda;
  return os.str();
}

std::string fixed3(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << v;
  return os.str();
}

TrainConfig train_config_for(const RunConfig& config, std::uint64_t seed, double lambda) {
  TrainConfig t = config.train;
  t.seed = seed;
  t.lambda = lambda;
  return t;
}

std::string report_json(const TrainReport& report, const RunConfig& config) {
  json doc = json::parse(train_report_to_json(report));
  doc["run_config"] = to_json_doc(config);
  return doc.dump(2);
}

}  // namespace

Dataset load_dataset(const RunConfig& config, std::uint64_t seed) {
  Dataset d;
  switch (config.source) {
    case DataSource::kLorenz96: {
      Lorenz96Config lc = config.lorenz96;
      lc.seed = seed;
      auto [series, truth] = in_stage("simulate", [&] { return simulate_lorenz96(lc); });
      d.series = std::move(series);
      d.truth = std::move(truth);
      break;
    }
    case DataSource::kVar: {
      auto [series, truth] = in_stage("simulate", [&] {
        VarConfig vc;
        vc.coefficients = {random_sparse_var_matrix(config.var.p, config.var.density, seed)};
        vc.length = config.var.length;
        vc.noise_sigma = config.var.noise_sigma;
        vc.burn_in = config.var.burn_in;
        vc.seed = seed;
        return simulate_var(vc);
      });
      d.series = std::move(series);
      d.truth = std::move(truth);
      break;
    }
    case DataSource::kCsv:
      in_stage("load", [&] {
        d.series = load_csv(config.csv.series, config.csv.has_header);
        if (!config.csv.truth.empty()) d.truth = load_truth_csv(config.csv.truth);
      });
      if (d.truth && d.truth->dim() != d.series.dim()) {
        throw StageError("load", "truth is " + std::to_string(d.truth->dim()) + "x" +
                                     std::to_string(d.truth->dim()) + " but the series has " +
                                     std::to_string(d.series.dim()) + " columns");
      }
      break;
  }
  return d;
}

void cmd_simulate(const RunConfig& config, std::ostream& log) {
  if (config.source == DataSource::kCsv) {
    throw StageError("simulate", "data.source is csv; choose lorenz96 or var");
  }
  const Dataset d = load_dataset(config, config.seeds.front());
  in_stage("write", [&] {
    ensure_dir(config.out);
    save_csv(d.series, config.out / "series.csv");
    save_truth_csv(*d.truth, config.out / "truth.csv");
  });
  log << "wrote " << (config.out / "series.csv").string() << " (" << d.series.length() << " x "
      << d.series.dim() << ") and " << (config.out / "truth.csv").string() << '\n';
}

TrainReport cmd_infer(const RunConfig& config, std::ostream& log) {
  const std::uint64_t seed = config.seeds.front();
  const Dataset d = load_dataset(config, seed);
  const TrainReport report =
      in_stage("train", [&] { return train(d.series, train_config_for(config, seed, config.train.lambda)); });
  in_stage("write", [&] {
    ensure_dir(config.out);
    save_gc_csv(report.gc, config.out / "gc_matrix.csv");
    write_text(config.out / "train_report.json", report_json(report, config));
  });
  log << "trained " << report.history.size() << " epochs (best " << report.best_epoch << ") in "
      << fixed3(report.seconds) << " s; wrote " << (config.out / "gc_matrix.csv").string() << '\n';
  return report;
}

Metrics cmd_eval(const fs::path& gc_path, const fs::path& truth_path, EdgeMode mode,
                 const fs::path& out, std::ostream& log) {
  const auto [gc, truth] = in_stage("load", [&] {
    return std::make_pair(load_gc_csv(gc_path), load_truth_csv(truth_path));
  });
  const Metrics m = in_stage("eval", [&] { return evaluate(gc, truth, mode); });
  in_stage("write", [&] {
    ensure_dir(out);
    write_text(out / "metrics.json", metrics_to_json(m));
  });
  log << "auroc " << fixed3(m.auroc) << "  auprc " << fixed3(m.auprc) << "  (" << to_string(mode)
      << ", " << m.n_edges << " edges)\n";
  return m;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

namespace {

struct Stats {
  double mean = 0;
  double std = 0;  // sample standard deviation, 0 for a single value
};

Stats stats(const std::vector<double>& v) {
  Stats s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

json optional_number(double v, bool present) { return present ? json(v) : json(nullptr); }

}  // namespace

std::string summary_to_json(const RunSummary& summary, const RunConfig& config) {
  json runs = json::array();
  for (const RunResult& r : summary.runs) {
    runs.push_back({{"seed", r.seed},
                    {"lambda", r.lambda},
                    {"dir", r.dir.string()},
                    {"epochs_run", r.epochs_run},
                    {"seconds", r.seconds},
                    {"auroc", optional_number(r.metrics ? r.metrics->auroc : 0, r.metrics.has_value())},
                    {"auprc", optional_number(r.metrics ? r.metrics->auprc : 0, r.metrics.has_value())}});
  }
  json rows = json::array();
  for (const SweepRow& s : summary.rows) {
    rows.push_back({{"lambda", s.lambda},
                    {"runs", s.runs},
                    {"auroc_mean", s.auroc_mean},
                    {"auroc_std", s.auroc_std},
                    {"auprc_mean", s.auprc_mean},
                    {"auprc_std", s.auprc_std}});
  }
  return json{{"runs", runs}, {"summary", rows}, {"mode", to_string(config.mode)},
              {"run_config", to_json_doc(config)}}
      .dump(2);
}

RunSummary cmd_run(const RunConfig& config, std::ostream& log, std::size_t threads) {
  const std::vector<double> lambdas = config.lambda_values();
  RunSummary summary;
  for (std::uint64_t seed : config.seeds) {
    for (double lambda : lambdas) {
      RunResult r;
      r.seed = seed;
      r.lambda = lambda;
      r.dir = config.out / ("seed_" + std::to_string(seed));
      if (!config.lambdas.empty()) r.dir /= "lambda_" + format_lambda(lambda);
      summary.runs.push_back(r);
    }
  }

  std::mutex log_mutex;
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> failures(summary.runs.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < summary.runs.size(); i = next++) {
      RunResult& r = summary.runs[i];
      try {
        const Dataset d = load_dataset(config, r.seed);
        const TrainReport report =
            in_stage("train", [&] { return train(d.series, train_config_for(config, r.seed, r.lambda)); });
        if (d.truth) r.metrics = in_stage("eval", [&] { return evaluate(report.gc, *d.truth, config.mode); });
        in_stage("write", [&] {
          ensure_dir(r.dir);
          save_csv(d.series, r.dir / "series.csv");
          if (d.truth) save_truth_csv(*d.truth, r.dir / "truth.csv");
          save_gc_csv(report.gc, r.dir / "gc_matrix.csv");
          write_text(r.dir / "train_report.json", report_json(report, config));
          if (r.metrics) write_text(r.dir / "metrics.json", metrics_to_json(*r.metrics));
        });
        r.epochs_run = report.history.size();
        r.seconds = report.seconds;
        const std::lock_guard<std::mutex> lock(log_mutex);
        log << "seed " << r.seed << "  lambda " << format_lambda(r.lambda) << "  epochs "
            << r.epochs_run << "  " << fixed3(r.seconds) << " s";
        if (r.metrics) log << "  auroc " << fixed3(r.metrics->auroc) << "  auprc " << fixed3(r.metrics->auprc);
        log << '\n';
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(threads, 1, summary.runs.size());
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (const std::exception_ptr& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  const bool scored = std::all_of(summary.runs.begin(), summary.runs.end(),
                                  [](const RunResult& r) { return r.metrics.has_value(); });
  if (scored) {
    for (double lambda : lambdas) {
      std::vector<double> roc, pr;
      for (const RunResult& r : summary.runs) {
        if (r.lambda != lambda) continue;
        roc.push_back(r.metrics->auroc);
        pr.push_back(r.metrics->auprc);
      }
      const Stats a = stats(roc);
      const Stats b = stats(pr);
      summary.rows.push_back({lambda, roc.size(), a.mean, a.std, b.mean, b.std});
    }
  }
  in_stage("write", [&] {
    ensure_dir(config.out);
    write_text(config.out / "summary.json", summary_to_json(summary, config));
  });

  if (scored) {
    log << '\n' << std::left << std::setw(10) << "lambda" << std::setw(6) << "runs"
        << std::setw(18) << "AUROC" << "AUPRC\n";
    for (const SweepRow& s : summary.rows) {
      log << std::left << std::setw(10) << format_lambda(s.lambda) << std::setw(6) << s.runs
          << std::setw(18) << (fixed3(s.auroc_mean) + " +- " + fixed3(s.auroc_std))
          << fixed3(s.auprc_mean) << " +- " << fixed3(s.auprc_std) << '\n';
    }
  }
  log << "wrote " << (config.out / "summary.json").string() << '\n';
  return summary;
}

std::size_t threads_from_env() {
  const char* v = std::getenv("GRNGC_THREADS");
  if (v == nullptr) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (end == v || *end != '\0' || n < 1) return 1;
  return static_cast<std::size_t>(n);
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(path.string(), "cannot open config file");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Granger causality from input-gradient sparsity of one forecaster", "grngc"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "JSON config file (partial; unset keys keep defaults)");
  app.add_option("--out", out_dir, "output directory (overrides 'out')");
  app.add_option("--seed", seed, "single seed (overrides 'seeds')");
  app.add_option("--set", sets, "dotted override, e.g. train.lambda=1e-2 (repeatable)")
      ->allow_extra_args(false);

  CLI::App* simulate = app.add_subcommand("simulate", "write series.csv and truth.csv");
  CLI::App* infer = app.add_subcommand("infer", "train and write gc_matrix.csv, train_report.json");
  std::string series_path;
  infer->add_option("--series", series_path, "series CSV (switches the data source to csv)");
  CLI::App* eval = app.add_subcommand("eval", "score gc_matrix.csv against truth.csv");
  std::string gc_path, truth_path, mode_name;
  eval->add_option("--gc", gc_path, "score matrix CSV")->required();
  eval->add_option("--truth", truth_path, "truth CSV")->required();
  eval->add_option("--mode", mode_name, "full or off_diagonal (default: eval.mode)");
  CLI::App* run = app.add_subcommand("run", "simulate or load, train, evaluate per seed and lambda");
  CLI::App* show = app.add_subcommand("config", "print the resolved config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    std::vector<std::string> overrides = sets;
    if (!out_dir.empty()) overrides.push_back("out=" + json(out_dir).dump());
    if (seed) overrides.push_back("seeds=[" + std::to_string(*seed) + "]");
    if (!series_path.empty()) {
      overrides.push_back("data.source=csv");
      overrides.push_back("data.csv.series=" + json(series_path).dump());
    }
    const RunConfig config = in_stage("config", [&] {
      return resolve_config(config_path.empty() ? std::string() : read_file(config_path), overrides);
    });

    if (*simulate) {
      cmd_simulate(config, out);
    } else if (*infer) {
      cmd_infer(config, out);
    } else if (*eval) {
      const EdgeMode mode =
          mode_name.empty() ? config.mode : in_stage("config", [&] { return parse_edge_mode(mode_name); });
      cmd_eval(gc_path, truth_path, mode, config.out, out);
    } else if (*run) {
      cmd_run(config, out, threads_from_env());
    } else if (*show) {
      out << config_to_json(config) << '\n';
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace grngc::cli
