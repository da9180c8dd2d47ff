// Copyright 2026 The GRNGC Authors
// SPDX-License-Identifier: Apache-2.0
//
// Granger causality from a single joint forecaster. The forecaster is fit on
// a prediction loss plus an L1 penalty on its averaged input gradients; the
// same averaged gradients, read off after training, are the causal scores.
//
// Orientation: GcMatrix entry (j, i) scores the edge i -> j (row = target).

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "grngc/datagen.hpp"
#include "grngc/diffengine.hpp"
#include "grngc/forecasters.hpp"

namespace grngc {

struct GcMatrix {
  Eigen::MatrixXd scores;  // p x p, non-negative

  std::size_t dim() const { return static_cast<std::size_t>(scores.rows()); }
  // Square, finite, non-negative.
  void validate() const;
};

std::string gc_to_json(const GcMatrix& gc);
void save_gc_csv(const GcMatrix& gc, const std::filesystem::path& path);
GcMatrix load_gc_csv(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Loss terms
// ---------------------------------------------------------------------------

// A forward pass whose input window is a differentiable leaf.
struct ForwardPass {
  diff::Var inputs;       // [N, k * p]
  diff::Var predictions;  // [N, p]
  std::size_t lag = 0;
  std::size_t dim = 0;
};

diff::Var to_var(const Eigen::MatrixXd& m, bool requires_grad);

// `input_grad` makes the window a gradient target (needed for the penalty).
ForwardPass run_forward(const Backbone& backbone, const WindowedDataset& data,
                        bool input_grad = true);

// Mean over samples and outputs of the squared error against the targets.
diff::Var prediction_loss(const ForwardPass& pass, const WindowedDataset& data);
diff::Var prediction_loss(const Backbone& backbone, const WindowedDataset& data);

// s_j = sum over samples of prediction column j, one scalar per j.
std::vector<diff::Var> summed_outputs(const ForwardPass& pass);
diff::Var summed_output(const ForwardPass& pass, std::size_t j);

// d s_j / d inputs as an [N, k, p] tensor (sample, lag, variable).
// `retain_graph` keeps the forward graph alive for further targets.
diff::Var input_gradient_matrix(const diff::Var& s_j, const ForwardPass& pass,
                                bool create_graph, bool retain_graph = true);

// Mean over samples and lags of |g|: one row of the GC matrix, shape [p].
diff::Var gc_average(const diff::Var& gradients);

// lambda * sum_j || row_j ||_1.
diff::Var sparsity_loss(const std::vector<diff::Var>& gc_rows, double lambda);

struct LossTerms {
  diff::Var prediction;
  diff::Var sparsity;
  diff::Var total;
};

// Builds the whole objective as one differentiable scalar. Memory grows with
// p; train() instead accumulates the penalty gradient one target at a time.
LossTerms total_loss(const Backbone& backbone, const WindowedDataset& data, double lambda);

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(std::vector<diff::Var> params, AdamConfig config);

  // One update; grads[i] has the size of params[i].
  void step(const std::vector<std::vector<double>>& grads);
  std::size_t steps() const { return t_; }

 private:
  std::vector<diff::Var> params_;
  AdamConfig config_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::size_t t_ = 0;
};

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainConfig {
  std::size_t lag = 5;
  double lambda = 1e-3;
  double learning_rate = 1e-3;
  std::size_t epochs = 500;
  std::size_t batch_size = 0;  // 0 = full batch
  std::uint64_t seed = 0;
  BackboneKind backbone = BackboneKind::kKan;
  std::vector<std::size_t> hidden = {128};
  SplineSpec spline;
  Activation hidden_activation = Activation::kSilu;
  std::size_t patience = 30;  // 0 disables early stopping
  double validation_fraction = 0.1;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double prediction_loss = 0;
  double sparsity_loss = 0;
  double total_loss = 0;
  double validation_loss = 0;  // NaN without a validation split
};

struct TrainReport {
  TrainConfig config;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
  GcMatrix gc;
  double seconds = 0;
  std::size_t parameter_count = 0;
  Backbone backbone;  // parameters restored to the best validation epoch
};

std::string train_report_to_json(const TrainReport& report);

// Standardizes, windows, splits chronologically, and fits with Adam. Throws
// DivergenceError (step = epoch) on a non-finite loss.
TrainReport train(const TimeSeries& series, const TrainConfig& config);

// GC matrix of a fitted backbone over all windows of `data`.
GcMatrix infer_gc_matrix(const Backbone& backbone, const WindowedDataset& data);

}  // namespace grngc
