// Copyright 2026 The GRNGC Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "grngc/forecasters.hpp"
#include "test_util.hpp"

using namespace grngc;
using diff::Var;
using grngc::testing::relative_error;
using grngc::testing::uniform_vector;

namespace {

// Textbook recursive Cox-de Boor definition with half-open degree-0 support.
double cox_de_boor(const std::vector<double>& t, std::size_t m, int r, double x) {
  if (r == 0) return (t[m] <= x && x < t[m + 1]) ? 1.0 : 0.0;
  double v = 0.0;
  const double dl = t[m + r] - t[m];
  const double dr = t[m + r + 1] - t[m + 1];
  if (dl > 0) v += (x - t[m]) / dl * cox_de_boor(t, m, r - 1, x);
  if (dr > 0) v += (t[m + r + 1] - x) / dr * cox_de_boor(t, m + 1, r - 1, x);
  return v;
}

double naive_silu(double x) { return x / (1.0 + std::exp(-x)); }

// Per-edge scalar loop over one KAN layer.
std::vector<double> naive_kan_layer(const std::vector<double>& x, std::size_t batch,
                                    const KanLayer& layer, const SplineSpec& spec) {
  const auto t = spec.knots();
  const std::size_t nb = spec.basis_count();
  std::vector<double> out(batch * layer.n_out, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < layer.n_out; ++o) {
      double acc = 0.0;
      for (std::size_t i = 0; i < layer.n_in; ++i) {
        const double xi = x[b * layer.n_in + i];
        const double xc = std::min(std::max(xi, spec.lo), spec.hi);
        double spline = 0.0;
        for (std::size_t k = 0; k < nb; ++k) {
          spline += layer.coefficients.at((o * layer.n_in + i) * nb + k) *
                    cox_de_boor(t, k, spec.degree, xc);
        }
        acc += layer.base_weight.at(o * layer.n_in + i) * naive_silu(xi) +
               layer.spline_weight.at(o * layer.n_in + i) * spline;
      }
      out[b * layer.n_out + o] = acc;
    }
  }
  return out;
}

SplineSpec random_spec(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> degree(1, 5);
  std::uniform_int_distribution<int> grid(2, 12);
  std::uniform_real_distribution<double> lo(-5.0, 1.0);
  std::uniform_real_distribution<double> width(0.5, 6.0);
  SplineSpec s;
  s.degree = degree(rng);
  s.grid_size = grid(rng);
  s.lo = lo(rng);
  s.hi = s.lo + width(rng);
  return s;
}

void fill(Var v, double value) {
  for (double& x : v.mutable_values()) x = value;
}

}  // namespace

TEST_CASE("spline knots") {
  SplineSpec s;
  const auto t = s.knots();
  CHECK(t.size() == 5u + 2 * 3 + 1);
  CHECK(t[3] == -2.0);
  CHECK(t[8] == 2.0);
  CHECK(t.front() == doctest::Approx(-2.0 - 3 * 0.8));
  CHECK(s.basis_count() == 8u);

  SplineSpec bad = s;
  bad.degree = 0;
  CHECK_THROWS_AS(bad.validate(), ValueError);
  bad = s;
  bad.grid_size = 1;
  CHECK_THROWS_AS(bad.knots(), ValueError);
  bad = s;
  bad.hi = bad.lo;
  CHECK_THROWS_AS(bspline_basis(0.0, bad), ValueError);
}

TEST_CASE("bspline basis: partition of unity and range") {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    const SplineSpec s = random_spec(rng);
    std::uniform_real_distribution<double> x(s.lo, s.hi);
    for (int i = 0; i < 200; ++i) {
      const auto b = bspline_basis(x(rng), s);
      CHECK(b.size() == s.basis_count());
      CHECK(std::accumulate(b.begin(), b.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
      for (double v : b) CHECK((v >= 0.0 && v <= 1.0));
    }
    const auto at_hi = bspline_basis(s.hi, s);
    CHECK(std::accumulate(at_hi.begin(), at_hi.end(), 0.0) == doctest::Approx(1.0));
  }
}

TEST_CASE("bspline basis matches the recursive definition") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 5; ++rep) {
    const SplineSpec s = random_spec(rng);
    const auto t = s.knots();
    std::uniform_real_distribution<double> x(s.lo, s.hi);
    for (int i = 0; i < 50; ++i) {
      const double xi = x(rng);
      const auto b = bspline_basis(xi, s);
      for (std::size_t m = 0; m < b.size(); ++m) {
        CHECK(b[m] == doctest::Approx(cox_de_boor(t, m, s.degree, xi)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("cubic basis at an interior knot") {
  SplineSpec s;  // degree 3, G = 5 on [-2, 2]
  const auto t = s.knots();
  const double knot = t[5];
  const auto b = bspline_basis(knot, s);
  // B_{m,3} is centred on knot t[m + 2]; its peak value is 2/3.
  CHECK(std::fabs(b[3] - 2.0 / 3.0) < 1e-12);
  CHECK(std::fabs(b[2] - 1.0 / 6.0) < 1e-12);
  CHECK(std::fabs(b[4] - 1.0 / 6.0) < 1e-12);
  CHECK(std::fabs(cox_de_boor(t, 3, 3, knot) - 2.0 / 3.0) < 1e-12);
}

TEST_CASE("bspline basis clamps out-of-range inputs") {
  SplineSpec s;
  CHECK(bspline_basis(-7.5, s) == bspline_basis(s.lo, s));
  CHECK(bspline_basis(9.0, s) == bspline_basis(s.hi, s));
}

TEST_CASE("init_params shapes and determinism") {
  InitOptions opts;
  const Backbone a = init_params(BackboneKind::kKan, {4, 8, 2}, opts, 42);
  const auto& kan = std::get<KanParams>(a.params);
  REQUIRE(kan.layers.size() == 2u);
  CHECK(kan.layers[0].coefficients.shape() == diff::Shape{8, 4, 8});
  CHECK(kan.layers[1].coefficients.shape() == diff::Shape{2, 8, 8});
  CHECK(kan.layers[0].base_weight.shape() == diff::Shape{8, 4});
  for (double w : kan.layers[0].spline_weight.values()) CHECK(w == 1.0);
  for (double w : kan.layers[0].base_weight.values()) CHECK(std::fabs(w) <= 0.5);

  const Backbone b = init_params(BackboneKind::kKan, {4, 8, 2}, opts, 42);
  const Backbone c = init_params(BackboneKind::kKan, {4, 8, 2}, opts, 43);
  const auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
  bool differs = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(std::equal(pa[i].values().begin(), pa[i].values().end(), pb[i].values().begin()));
    differs = differs ||
              !std::equal(pa[i].values().begin(), pa[i].values().end(), pc[i].values().begin());
  }
  CHECK(differs);

  const Backbone m = init_params(BackboneKind::kMlp, {4, 8, 2}, opts, 1);
  for (const auto& l : std::get<MlpParams>(m.params).layers) {
    for (double v : l.bias.values()) CHECK(v == 0.0);
  }
  CHECK_THROWS_AS(init_params(BackboneKind::kMlp, {4}, opts, 1), ValueError);
}

TEST_CASE("count_parameters") {
  InitOptions opts;
  CHECK(count_parameters(init_params(BackboneKind::kMlp, {4, 8, 2}, opts, 0)) == 58u);
  CHECK(count_parameters(init_params(BackboneKind::kKan, {4, 2}, opts, 0)) == 80u);
  for (const auto& sizes : std::vector<std::vector<std::size_t>>{{4, 8, 2}, {50, 128, 10}, {3, 1}}) {
    CHECK(count_parameters(init_params(BackboneKind::kKan, sizes, opts, 0)) >
          count_parameters(init_params(BackboneKind::kMlp, sizes, opts, 0)));
  }
}

TEST_CASE("kan_layer_forward special cases") {
  InitOptions opts;
  Backbone bb = init_params(BackboneKind::kKan, {3, 3}, opts, 9);
  KanLayer& layer = std::get<KanParams>(bb.params).layers[0];

  SUBCASE("zero input through silu path") {
    fill(layer.spline_weight, 0.0);
    auto bw = layer.base_weight.mutable_values();
    std::fill(bw.begin(), bw.end(), 0.0);
    for (std::size_t i = 0; i < 3; ++i) bw[i * 3 + i] = 1.0;
    const Var out = kan_layer_forward(Var::zeros({2, 3}), layer, opts.spline);
    for (double v : out.values()) CHECK(v == 0.0);
  }
  SUBCASE("constant coefficients collapse the spline sum") {
    const double kappa = 0.75;
    fill(layer.base_weight, 0.0);
    fill(layer.coefficients, kappa);
    std::mt19937_64 rng(2);
    const auto ws = uniform_vector(rng, 9, -1, 1);
    std::copy(ws.begin(), ws.end(), layer.spline_weight.mutable_values().begin());
    const Var x = Var::constant({4, 3}, uniform_vector(rng, 12, -3, 3));
    const Var out = kan_layer_forward(x, layer, opts.spline);
    for (std::size_t b = 0; b < 4; ++b) {
      for (std::size_t o = 0; o < 3; ++o) {
        const double expected = kappa * (ws[o * 3] + ws[o * 3 + 1] + ws[o * 3 + 2]);
        CHECK(out.at(b * 3 + o) == doctest::Approx(expected).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("kan_layer_forward equals the per-edge loop") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 5; ++rep) {
    InitOptions opts;
    opts.spline = random_spec(rng);
    std::uniform_int_distribution<std::size_t> dim(1, 6);
    const std::size_t n_in = dim(rng), n_out = dim(rng), batch = dim(rng);
    Backbone bb = init_params(BackboneKind::kKan, {n_in, n_out}, opts, rep);
    KanLayer& layer = std::get<KanParams>(bb.params).layers[0];
    for (Var p : bb.parameters()) {
      const auto v = uniform_vector(rng, p.size(), -1, 1);
      std::copy(v.begin(), v.end(), p.mutable_values().begin());
    }
    const auto x = uniform_vector(rng, batch * n_in, opts.spline.lo - 1, opts.spline.hi + 1);
    const Var out = kan_layer_forward(Var::constant({batch, n_in}, x), layer, opts.spline);
    const auto ref = naive_kan_layer(x, batch, layer, opts.spline);
    CHECK(grngc::testing::max_abs_diff(out.values(), ref) < 1e-12);
  }
}

TEST_CASE("forward basics") {
  InitOptions opts;
  Backbone bb = init_params(BackboneKind::kKan, {6, 4, 3}, opts, 5);
  SUBCASE("zero weights give zero output") {
    for (const auto& l : std::get<KanParams>(bb.params).layers) {
      fill(l.base_weight, 0.0);
      fill(l.spline_weight, 0.0);
    }
    const Var y = forward(bb, Var::zeros({1, 6}));
    CHECK(y.shape() == diff::Shape{1, 3});
    for (double v : y.values()) CHECK(v == 0.0);
  }
  SUBCASE("single layer reduces to kan_layer_forward") {
    const Backbone one = init_params(BackboneKind::kKan, {6, 3}, opts, 5);
    std::mt19937_64 rng(1);
    const Var x = Var::constant({2, 6}, uniform_vector(rng, 12, -2, 2));
    const Var a = forward(one, x);
    const Var b = kan_layer_forward(x, std::get<KanParams>(one.params).layers[0], opts.spline);
    CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  }
  SUBCASE("deterministic and batch preserving") {
    std::mt19937_64 rng(1);
    const Var x = Var::constant({7, 6}, uniform_vector(rng, 42, -2, 2));
    const Var a = forward(init_params(BackboneKind::kKan, {6, 4, 3}, opts, 8), x);
    const Var b = forward(init_params(BackboneKind::kKan, {6, 4, 3}, opts, 8), x);
    CHECK(a.shape() == diff::Shape{7, 3});
    CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(forward(bb, Var::zeros({2, 5})), ShapeError);
  }
}

TEST_CASE("input gradients match finite differences") {
  std::mt19937_64 rng(23);
  for (BackboneKind kind : {BackboneKind::kKan, BackboneKind::kMlp}) {
    for (int rep = 0; rep < 4; ++rep) {
      InitOptions opts;
      Backbone bb = init_params(kind, {6, 5, 2}, opts, 100 + rep);
      for (Var p : bb.parameters()) {
        const auto v = uniform_vector(rng, p.size(), -1, 1);
        std::copy(v.begin(), v.end(), p.mutable_values().begin());
      }
      const auto x0 = uniform_vector(rng, 3 * 6, -1.9, 1.9);
      const Var w = Var::constant({3, 2}, uniform_vector(rng, 6, 0.5, 1.5));
      const Var x = Var::parameter({3, 6}, x0);
      const Var g = diff::backward(diff::sum_all(diff::mul(forward(bb, x), w)), std::vector{x})[0];
      auto f = [&](std::span<const double> v) {
        return diff::sum_all(diff::mul(forward(bb, Var::constant({3, 6}, {v.begin(), v.end()})), w))
            .item();
      };
      CHECK(relative_error(g.values(), diff::finite_difference(f, x0, 1e-5)) < 1e-5);
    }
  }
}

TEST_CASE("backbone JSON round trip") {
  InitOptions opts;
  opts.spline.grid_size = 7;
  for (BackboneKind kind : {BackboneKind::kKan, BackboneKind::kMlp}) {
    const Backbone a = init_params(kind, {5, 3, 2}, opts, 77);
    const Backbone b = backbone_from_json(backbone_to_json(a));
    CHECK(b.kind == a.kind);
    CHECK(b.sizes == a.sizes);
    const auto pa = a.parameters(), pb = b.parameters();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
      CHECK(pa[i].shape() == pb[i].shape());
      CHECK(std::equal(pa[i].values().begin(), pa[i].values().end(), pb[i].values().begin()));
    }
  }
  CHECK_THROWS_AS(backbone_from_json("{\"kind\": \"lstm\"}"), ValueError);
  CHECK_THROWS_AS(backbone_from_json("not json"), ValueError);
}
