// Copyright 2026 The GRNGC Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "grngc/core.hpp"
#include "json.hpp"

namespace grngc {

using diff::Var;

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

Adam::Adam(std::vector<Var> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  for (const Var& p : params_) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

void Adam::step(const std::vector<std::vector<double>>& grads) {
  if (grads.size() != params_.size()) {
    throw ValueError("Adam::step: expected " + std::to_string(params_.size()) +
                     " gradients, got " + std::to_string(grads.size()));
  }
  ++t_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto w = params_[k].mutable_values();
    const auto& g = grads[k];
    if (g.size() != w.size()) throw ValueError("Adam::step: gradient size mismatch");
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      w[i] -= config_.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon);
    }
  }
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
  if (lag < 1) throw ValueError("train: lag must be >= 1");
  if (!(lambda >= 0)) throw ValueError("train: lambda must be >= 0");
  if (!(learning_rate > 0)) throw ValueError("train: learning_rate must be positive");
  if (epochs < 1) throw ValueError("train: epochs must be >= 1");
  if (!(validation_fraction >= 0 && validation_fraction < 0.5)) {
    throw ValueError("train: validation_fraction must be in [0, 0.5)");
  }
  for (std::size_t h : hidden) {
    if (h == 0) throw ValueError("train: hidden sizes must be positive");
  }
  spline.validate();
}

namespace {

using Grads = std::vector<std::vector<double>>;

// Training allocates and frees multi-megabyte tensors many times per epoch.
// glibc serves those with mmap by default and hands them back to the kernel
// on free, so each one page-faults afresh; keep them on the heap instead.
void keep_large_allocations_on_heap() {
#if defined(__GLIBC__)
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
  });
#endif
}

WindowedDataset take_rows(const WindowedDataset& data, const std::vector<std::size_t>& rows) {
  WindowedDataset out;
  out.lag = data.lag;
  out.dim = data.dim;
  out.inputs.resize(static_cast<Eigen::Index>(rows.size()), data.inputs.cols());
  out.targets.resize(static_cast<Eigen::Index>(rows.size()), data.targets.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.inputs.row(static_cast<Eigen::Index>(r)) =
        data.inputs.row(static_cast<Eigen::Index>(rows[r]));
    out.targets.row(static_cast<Eigen::Index>(r)) =
        data.targets.row(static_cast<Eigen::Index>(rows[r]));
  }
  return out;
}

WindowedDataset take_range(const WindowedDataset& data, std::size_t begin, std::size_t count) {
  std::vector<std::size_t> rows(count);
  std::iota(rows.begin(), rows.end(), begin);
  return take_rows(data, rows);
}

void accumulate(Grads& total, const std::vector<Var>& grads, double weight) {
  for (std::size_t k = 0; k < grads.size(); ++k) {
    const auto g = grads[k].values();
    for (std::size_t i = 0; i < g.size(); ++i) total[k][i] += weight * g[i];
  }
}

struct BatchLosses {
  double prediction = 0;
  double sparsity = 0;
};

// Adds weight * d(total_loss)/d(params) into `grads`. The penalty is
// differentiated one target at a time so only one gradient graph is alive.
BatchLosses accumulate_gradients(const Backbone& backbone, const std::vector<Var>& params,
                                 const WindowedDataset& batch, double lambda, double weight,
                                 Grads& grads) {
  const ForwardPass pass = run_forward(backbone, batch, lambda > 0);
  const Var lp = prediction_loss(pass, batch);
  BatchLosses losses;
  losses.prediction = lp.item();
  if (lambda > 0) {
    for (std::size_t j = 0; j < pass.dim; ++j) {
      const Var g = input_gradient_matrix(summed_output(pass, j), pass, true, true);
      const Var term = sparsity_loss({gc_average(g)}, lambda);
      losses.sparsity += term.item();
      diff::BackwardOptions keep;
      keep.retain_graph = true;
      accumulate(grads, diff::backward(term, params, keep), weight);
    }
  }
  accumulate(grads, diff::backward(lp, params), weight);
  return losses;
}

double validation_loss(const Backbone& backbone, const WindowedDataset& val) {
  diff::NoGradGuard no_grad;
  return prediction_loss(backbone, val).item();
}

std::vector<std::vector<double>> snapshot(const std::vector<Var>& params) {
  std::vector<std::vector<double>> out;
  for (const Var& p : params) out.emplace_back(p.values().begin(), p.values().end());
  return out;
}

void restore(std::vector<Var>& params, const std::vector<std::vector<double>>& values) {
  for (std::size_t k = 0; k < params.size(); ++k) {
    std::copy(values[k].begin(), values[k].end(), params[k].mutable_values().begin());
  }
}

}  // namespace

TrainReport train(const TimeSeries& series, const TrainConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();
  keep_large_allocations_on_heap();
  series.validate();
  if (series.length() <= config.lag + 10) {
    throw ValueError("train: series length " + std::to_string(series.length()) +
                     " must exceed lag + 10 = " + std::to_string(config.lag + 10));
  }

  const WindowedDataset all = make_windows(standardize(series).first, config.lag);
  const std::size_t n_val = static_cast<std::size_t>(
      std::floor(config.validation_fraction * static_cast<double>(all.size())));
  const std::size_t n_train = all.size() - n_val;
  const WindowedDataset train_set = take_range(all, 0, n_train);
  const WindowedDataset val_set = take_range(all, n_train, n_val);

  std::vector<std::size_t> sizes = {config.lag * all.dim};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(all.dim);
  InitOptions init;
  init.spline = config.spline;
  init.hidden_activation = config.hidden_activation;

  TrainReport report;
  report.config = config;
  report.backbone = init_params(config.backbone, sizes, init, config.seed);
  report.parameter_count = count_parameters(report.backbone);

  std::vector<Var> params = report.backbone.parameters();
  Adam adam(params, AdamConfig{config.learning_rate});
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  const std::size_t batch_size =
      config.batch_size == 0 ? n_train : std::min(config.batch_size, n_train);
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), 0);

  double best_val = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> best_params;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    if (batch_size < n_train) std::shuffle(order.begin(), order.end(), rng);
    EpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t begin = 0; begin < n_train; begin += batch_size) {
      const std::size_t count = std::min(batch_size, n_train - begin);
      const WindowedDataset batch =
          batch_size == n_train
              ? train_set
              : take_rows(train_set, {order.begin() + static_cast<std::ptrdiff_t>(begin),
                                      order.begin() + static_cast<std::ptrdiff_t>(begin + count)});
      Grads grads;
      for (const Var& p : params) grads.emplace_back(p.size(), 0.0);
      const BatchLosses losses =
          accumulate_gradients(report.backbone, params, batch, config.lambda, 1.0, grads);
      if (!std::isfinite(losses.prediction) || !std::isfinite(losses.sparsity)) {
        throw DivergenceError("train", epoch);
      }
      const double share = static_cast<double>(count) / static_cast<double>(n_train);
      rec.prediction_loss += share * losses.prediction;
      rec.sparsity_loss += share * losses.sparsity;
      adam.step(grads);
    }
    rec.total_loss = rec.prediction_loss + rec.sparsity_loss;

    if (n_val > 0) {
      rec.validation_loss = validation_loss(report.backbone, val_set);
      if (!std::isfinite(rec.validation_loss)) throw DivergenceError("train", epoch);
      if (rec.validation_loss < best_val) {
        best_val = rec.validation_loss;
        report.best_epoch = epoch;
        best_params = snapshot(params);
      }
    } else {
      rec.validation_loss = std::numeric_limits<double>::quiet_NaN();
      report.best_epoch = epoch;
    }
    report.history.push_back(rec);

    if (n_val > 0 && config.patience > 0 && epoch - report.best_epoch >= config.patience) {
      report.stopped_early = epoch < config.epochs;
      break;
    }
  }

  if (!best_params.empty()) restore(params, best_params);
  report.gc = infer_gc_matrix(report.backbone, all);
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string train_report_to_json(const TrainReport& report) {
  using nlohmann::json;
  const TrainConfig& c = report.config;
  json config = {
      {"lag", c.lag},
      {"lambda", c.lambda},
      {"learning_rate", c.learning_rate},
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"seed", c.seed},
      {"backbone", to_string(c.backbone)},
      {"hidden", c.hidden},
      {"spline", {{"degree", c.spline.degree}, {"grid_size", c.spline.grid_size},
                  {"lo", c.spline.lo}, {"hi", c.spline.hi}}},
      {"hidden_activation", to_string(c.hidden_activation)},
      {"patience", c.patience},
      {"validation_fraction", c.validation_fraction},
  };
  json lp = json::array(), ls = json::array(), total = json::array(), val = json::array();
  for (const EpochRecord& r : report.history) {
    lp.push_back(r.prediction_loss);
    ls.push_back(r.sparsity_loss);
    total.push_back(r.total_loss);
    if (std::isfinite(r.validation_loss)) {
      val.push_back(r.validation_loss);
    } else {
      val.push_back(nullptr);
    }
  }
  json doc = {
      {"config", config},
      {"epochs_run", report.history.size()},
      {"best_epoch", report.best_epoch},
      {"stopped_early", report.stopped_early},
      {"parameter_count", report.parameter_count},
      {"seconds", report.seconds},
      {"losses", {{"prediction", lp}, {"sparsity", ls}, {"total", total}, {"validation", val}}},
      {"gc_matrix", json::parse(gc_to_json(report.gc))["scores"]},
  };
  return doc.dump(2);
}

}  // namespace grngc
