// Copyright 2026 The GRNGC Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "grngc/core.hpp"
#include "json.hpp"

namespace grngc {

using diff::Var;

void GcMatrix::validate() const {
  if (scores.rows() != scores.cols()) {
    throw ShapeError("GcMatrix", {static_cast<std::size_t>(scores.rows()),
                                  static_cast<std::size_t>(scores.cols())});
  }
  if (!scores.allFinite()) throw ValueError("GcMatrix: non-finite score");
  if ((scores.array() < 0).any()) throw ValueError("GcMatrix: negative score");
}

std::string gc_to_json(const GcMatrix& gc) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < gc.scores.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < gc.scores.cols(); ++c) row.push_back(gc.scores(r, c));
    rows.push_back(std::move(row));
  }
  return nlohmann::json{{"orientation", "row=target,col=source"}, {"scores", rows}}.dump(2);
}

void save_gc_csv(const GcMatrix& gc, const std::filesystem::path& path) {
  save_matrix_csv(gc.scores, path);
}

GcMatrix load_gc_csv(const std::filesystem::path& path) {
  GcMatrix gc{load_matrix_csv(path)};
  gc.validate();
  return gc;
}

Var to_var(const Eigen::MatrixXd& m, bool requires_grad) {
  const auto rows = static_cast<std::size_t>(m.rows());
  const auto cols = static_cast<std::size_t>(m.cols());
  std::vector<double> values(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      values[r * cols + c] = m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
  }
  return requires_grad ? Var::parameter({rows, cols}, std::move(values))
                       : Var::constant({rows, cols}, std::move(values));
}

ForwardPass run_forward(const Backbone& backbone, const WindowedDataset& data,
                        bool input_grad) {
  if (data.size() == 0) throw ValueError("run_forward: empty dataset");
  ForwardPass pass;
  pass.lag = data.lag;
  pass.dim = data.dim;
  pass.inputs = to_var(data.inputs, input_grad);
  pass.predictions = forward(backbone, pass.inputs);
  if (pass.predictions.dim(1) != data.dim) {
    throw ShapeError("run_forward", pass.predictions.shape(),
                     {data.size(), data.dim});
  }
  return pass;
}

Var prediction_loss(const ForwardPass& pass, const WindowedDataset& data) {
  return diff::mean_all(diff::square(pass.predictions - to_var(data.targets, false)));
}

Var prediction_loss(const Backbone& backbone, const WindowedDataset& data) {
  return prediction_loss(run_forward(backbone, data, false), data);
}

Var summed_output(const ForwardPass& pass, std::size_t j) {
  const Var column = diff::slice(pass.predictions, 1, j, j + 1);
  return diff::sum_all(column);
}

std::vector<Var> summed_outputs(const ForwardPass& pass) {
  std::vector<Var> out;
  out.reserve(pass.dim);
  for (std::size_t j = 0; j < pass.dim; ++j) out.push_back(summed_output(pass, j));
  return out;
}

Var input_gradient_matrix(const Var& s_j, const ForwardPass& pass, bool create_graph,
                          bool retain_graph) {
  diff::BackwardOptions options;
  options.create_graph = create_graph;
  options.retain_graph = retain_graph;
  const Var g = diff::backward(s_j, std::span<const Var>(&pass.inputs, 1), options).front();
  return diff::reshape(g, {pass.inputs.dim(0), pass.lag, pass.dim});
}

Var gc_average(const Var& gradients) {
  if (gradients.rank() != 3) throw ShapeError("gc_average", gradients.shape());
  const std::size_t rows = gradients.dim(0) * gradients.dim(1);
  return diff::mean(diff::abs(diff::reshape(gradients, {rows, gradients.dim(2)})), 0);
}

Var sparsity_loss(const std::vector<Var>& gc_rows, double lambda) {
  if (lambda < 0) throw ValueError("sparsity_loss: lambda must be >= 0");
  Var acc = Var::scalar(0.0);
  for (const Var& row : gc_rows) acc = acc + diff::sum_all(diff::abs(row));
  return diff::scale(acc, lambda);
}

LossTerms total_loss(const Backbone& backbone, const WindowedDataset& data, double lambda) {
  const ForwardPass pass = run_forward(backbone, data, true);
  LossTerms terms;
  terms.prediction = prediction_loss(pass, data);
  std::vector<Var> rows;
  if (lambda > 0) {
    for (const Var& s : summed_outputs(pass)) {
      rows.push_back(gc_average(input_gradient_matrix(s, pass, true, true)));
    }
  }
  terms.sparsity = sparsity_loss(rows, lambda);
  terms.total = terms.prediction + terms.sparsity;
  return terms;
}

GcMatrix infer_gc_matrix(const Backbone& backbone, const WindowedDataset& data) {
  const ForwardPass pass = run_forward(backbone, data, true);
  GcMatrix gc;
  gc.scores = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(data.dim),
                                    static_cast<Eigen::Index>(data.dim));
  for (std::size_t j = 0; j < data.dim; ++j) {
    const bool last = j + 1 == data.dim;
    const Var row = gc_average(input_gradient_matrix(summed_output(pass, j), pass, false, !last));
    for (std::size_t i = 0; i < data.dim; ++i) {
      gc.scores(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = row.at(i);
    }
  }
  return gc;
}

}  // namespace grngc
