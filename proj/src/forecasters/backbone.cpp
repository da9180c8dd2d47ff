// Copyright 2026 The GRNGC Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include "grngc/forecasters.hpp"

namespace grngc {

using diff::Var;

std::string to_string(BackboneKind kind) {
  return kind == BackboneKind::kKan ? "kan" : "mlp";
}

BackboneKind parse_backbone_kind(const std::string& name) {
  if (name == "kan" || name == "KAN") return BackboneKind::kKan;
  if (name == "mlp" || name == "MLP") return BackboneKind::kMlp;
  throw ValueError("unknown backbone kind '" + name + "' (expected kan or mlp)");
}

std::string to_string(Activation activation) {
  return activation == Activation::kSilu ? "silu" : "sigmoid";
}

Activation parse_activation(const std::string& name) {
  if (name == "silu") return Activation::kSilu;
  if (name == "sigmoid") return Activation::kSigmoid;
  throw ValueError("unknown activation '" + name + "' (expected silu or sigmoid)");
}

std::vector<Var> Backbone::parameters() const {
  std::vector<Var> out;
  if (const auto* kan = std::get_if<KanParams>(&params)) {
    for (const KanLayer& l : kan->layers) {
      out.push_back(l.base_weight);
      out.push_back(l.spline_weight);
      out.push_back(l.coefficients);
    }
  } else {
    for (const MlpLayer& l : std::get<MlpParams>(params).layers) {
      out.push_back(l.weight);
      out.push_back(l.bias);
    }
  }
  return out;
}

namespace {

Var copy_leaf(const Var& v) {
  return Var::parameter(v.shape(), {v.values().begin(), v.values().end()});
}

void check_sizes(const std::vector<std::size_t>& sizes) {
  if (sizes.size() < 2) throw ValueError("backbone needs at least input and output sizes");
  for (std::size_t s : sizes) {
    if (s == 0) throw ValueError("backbone layer sizes must be positive");
  }
}

}  // namespace

Backbone Backbone::clone() const {
  Backbone copy = *this;
  if (auto* kan = std::get_if<KanParams>(&copy.params)) {
    for (KanLayer& l : kan->layers) {
      l.base_weight = copy_leaf(l.base_weight);
      l.spline_weight = copy_leaf(l.spline_weight);
      l.coefficients = copy_leaf(l.coefficients);
    }
  } else {
    for (MlpLayer& l : std::get<MlpParams>(copy.params).layers) {
      l.weight = copy_leaf(l.weight);
      l.bias = copy_leaf(l.bias);
    }
  }
  return copy;
}

Var kan_layer_forward(const Var& input, const KanLayer& layer,
                      const SplineSpec& spline) {
  if (input.rank() != 2 || input.dim(1) != layer.n_in) {
    throw ShapeError("kan_layer_forward", input.shape(), {layer.n_in});
  }
  const std::size_t batch = input.dim(0);
  const std::size_t nb = spline.basis_count();

  const Var base = diff::matmul(diff::silu(input), layer.base_weight, false, true);

  // Fold spline_weight into the coefficients, then contract the basis
  // expansion of every input against them in one product.
  const Var basis = diff::reshape(bspline_basis(input, spline), {batch, layer.n_in * nb});
  const Var scaled = diff::mul(
      diff::reshape(layer.coefficients, {layer.n_out, layer.n_in * nb}),
      diff::reshape(diff::expand(layer.spline_weight, 2, nb), {layer.n_out, layer.n_in * nb}));
  const Var spline_part = diff::matmul(basis, scaled, false, true);
  return diff::add(base, spline_part);
}

Var mlp_layer_forward(const Var& input, const MlpLayer& layer) {
  if (input.rank() != 2 || input.dim(1) != layer.n_in) {
    throw ShapeError("mlp_layer_forward", input.shape(), {layer.n_in});
  }
  const Var linear = diff::matmul(input, layer.weight, false, true);
  return diff::add(linear, diff::expand(layer.bias, 0, input.dim(0)));
}

Var forward(const Backbone& backbone, const Var& window) {
  if (window.rank() != 2 || window.dim(1) != backbone.input_dim()) {
    throw ShapeError("forward", window.shape(), {backbone.input_dim()});
  }
  Var h = window;
  if (const auto* kan = std::get_if<KanParams>(&backbone.params)) {
    for (const KanLayer& layer : kan->layers) h = kan_layer_forward(h, layer, kan->spline);
    return h;
  }
  const auto& mlp = std::get<MlpParams>(backbone.params);
  for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
    h = mlp_layer_forward(h, mlp.layers[i]);
    if (i + 1 < mlp.layers.size()) {
      h = mlp.hidden_activation == Activation::kSilu ? diff::silu(h) : diff::sigmoid(h);
    }
  }
  return h;
}

Backbone init_params(BackboneKind kind, std::vector<std::size_t> sizes,
                     const InitOptions& options, std::uint64_t seed) {
  check_sizes(sizes);
  std::mt19937_64 rng(seed);
  auto uniform = [&rng](std::size_t n, double bound) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> v(n);
    for (double& x : v) x = dist(rng);
    return v;
  };

  Backbone bb;
  bb.kind = kind;
  bb.sizes = sizes;
  bb.seed = seed;
  if (kind == BackboneKind::kKan) {
    options.spline.validate();
    KanParams kan;
    kan.spline = options.spline;
    const std::size_t nb = options.spline.basis_count();
    std::normal_distribution<double> noise(0.0, 0.1 / static_cast<double>(nb));
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      KanLayer layer;
      layer.n_in = sizes[l];
      layer.n_out = sizes[l + 1];
      const std::size_t edges = layer.n_in * layer.n_out;
      layer.base_weight = Var::parameter(
          {layer.n_out, layer.n_in}, uniform(edges, 1.0 / std::sqrt(double(layer.n_in))));
      layer.spline_weight =
          Var::parameter({layer.n_out, layer.n_in}, std::vector<double>(edges, 1.0));
      std::vector<double> coef(edges * nb);
      for (double& c : coef) c = noise(rng);
      layer.coefficients = Var::parameter({layer.n_out, layer.n_in, nb}, std::move(coef));
      kan.layers.push_back(std::move(layer));
    }
    bb.params = std::move(kan);
  } else {
    MlpParams mlp;
    mlp.hidden_activation = options.hidden_activation;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      MlpLayer layer;
      layer.n_in = sizes[l];
      layer.n_out = sizes[l + 1];
      layer.weight = Var::parameter(
          {layer.n_out, layer.n_in},
          uniform(layer.n_in * layer.n_out, 1.0 / std::sqrt(double(layer.n_in))));
      layer.bias = Var::parameter({layer.n_out}, std::vector<double>(layer.n_out, 0.0));
      mlp.layers.push_back(std::move(layer));
    }
    bb.params = std::move(mlp);
  }
  return bb;
}

std::size_t count_parameters(const Backbone& backbone) {
  std::size_t total = 0;
  for (const Var& p : backbone.parameters()) total += p.size();
  return total;
}

}  // namespace grngc
