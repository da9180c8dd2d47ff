// Copyright 2026 The GRNGC Authors
// SPDX-License-Identifier: Apache-2.0
//
// Forecasting backbones mapping a flattened lag window (k * p values per
// sample) to a p-vector prediction. Two kinds share one interface:
//
//   KAN  every edge carries  w_b * silu(x) + w_s * sum_i c_i B_i(x)
//   MLP  dense layers with a SiLU hidden activation and a linear output
//
// Both are assembled from diffengine primitives, so input gradients and
// gradients of input gradients come for free.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "grngc/diffengine.hpp"

namespace grngc {

struct SplineSpec {
  int degree = 3;
  int grid_size = 5;
  double lo = -2.0;
  double hi = 2.0;

  // Throws ValueError unless degree >= 1, grid_size >= 2 and lo < hi.
  void validate() const;
  // grid_size + 2 * degree + 1 uniform knots; [lo, hi] spans the middle
  // grid_size intervals.
  std::vector<double> knots() const;
  std::size_t basis_count() const {
    return static_cast<std::size_t>(grid_size + degree);
  }

  bool operator==(const SplineSpec&) const = default;
};

// The grid_size + degree basis values at x, after clamping x into [lo, hi].
std::vector<double> bspline_basis(double x, const SplineSpec& spec);

// Batched, differentiable form: clamps then expands, appending one axis of
// length basis_count().
diff::Var bspline_basis(const diff::Var& x, const SplineSpec& spec);

enum class BackboneKind { kKan, kMlp };

std::string to_string(BackboneKind kind);
BackboneKind parse_backbone_kind(const std::string& name);

struct KanLayer {
  std::size_t n_in = 0;
  std::size_t n_out = 0;
  diff::Var base_weight;    // [n_out, n_in]
  diff::Var spline_weight;  // [n_out, n_in]
  diff::Var coefficients;   // [n_out, n_in, grid_size + degree]
};

struct KanParams {
  SplineSpec spline;
  std::vector<KanLayer> layers;
};

enum class Activation { kSilu, kSigmoid };

std::string to_string(Activation activation);
Activation parse_activation(const std::string& name);

struct MlpLayer {
  std::size_t n_in = 0;
  std::size_t n_out = 0;
  diff::Var weight;  // [n_out, n_in]
  diff::Var bias;    // [n_out]
};

struct MlpParams {
  Activation hidden_activation = Activation::kSilu;
  std::vector<MlpLayer> layers;
};

struct Backbone {
  BackboneKind kind = BackboneKind::kKan;
  // Layer widths, input first: {k * p, hidden..., p}.
  std::vector<std::size_t> sizes;
  std::uint64_t seed = 0;
  std::variant<KanParams, MlpParams> params;

  std::size_t input_dim() const { return sizes.front(); }
  std::size_t output_dim() const { return sizes.back(); }

  // Trainable tensors in declaration order: per layer (base_weight,
  // spline_weight, coefficients) for KAN, (weight, bias) for MLP.
  std::vector<diff::Var> parameters() const;

  // Deep copy with fresh parameter leaves.
  Backbone clone() const;
};

diff::Var kan_layer_forward(const diff::Var& input, const KanLayer& layer,
                            const SplineSpec& spline);

diff::Var mlp_layer_forward(const diff::Var& input, const MlpLayer& layer);

// [batch, k * p] -> [batch, p]
diff::Var forward(const Backbone& backbone, const diff::Var& window);

struct InitOptions {
  SplineSpec spline;
  Activation hidden_activation = Activation::kSilu;
};

Backbone init_params(BackboneKind kind, std::vector<std::size_t> sizes,
                     const InitOptions& options, std::uint64_t seed);

std::size_t count_parameters(const Backbone& backbone);

// JSON document: header (kind, sizes, spline, activation, seed) followed by
// the flat parameter arrays in declaration order.
std::string backbone_to_json(const Backbone& backbone);
Backbone backbone_from_json(const std::string& text);
void save_backbone(const Backbone& backbone, const std::filesystem::path& path);
Backbone load_backbone(const std::filesystem::path& path);

}  // namespace grngc
