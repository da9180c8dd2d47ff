// Copyright 2026 The GRNGC Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "grngc/datagen.hpp"

namespace grngc {

void TimeSeries::validate() const {
  if (data.rows() < 2) throw ValueError("time series needs at least 2 rows");
  if (data.cols() < 1) throw ValueError("time series needs at least 1 column");
  if (!data.allFinite()) throw ValueError("time series contains non-finite values");
  if (!names.empty() && names.size() != dim()) {
    throw ValueError("time series has " + std::to_string(names.size()) + " names for " +
                     std::to_string(dim()) + " columns");
  }
}

// ---------------------------------------------------------------------------
// Lorenz-96
// ---------------------------------------------------------------------------

void Lorenz96Config::validate() const {
  if (p < 4) throw ValueError("lorenz96: p must be >= 4");
  if (!(dt > 0)) throw ValueError("lorenz96: dt must be positive");
  if (!(forcing > 0)) throw ValueError("lorenz96: forcing must be positive");
  if (length < 2) throw ValueError("lorenz96: length must be >= 2");
  if (substeps < 1) throw ValueError("lorenz96: substeps must be >= 1");
  if (obs_noise_sigma < 0) throw ValueError("lorenz96: obs_noise_sigma must be >= 0");
}

Eigen::VectorXd lorenz96_derivative(const Eigen::VectorXd& x, double forcing) {
  const Eigen::Index p = x.size();
  Eigen::VectorXd dx(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const double xm2 = x((i + p - 2) % p);
    const double xm1 = x((i + p - 1) % p);
    const double xp1 = x((i + 1) % p);
    dx(i) = -xm1 * (xm2 - xp1) - x(i) + forcing;
  }
  return dx;
}

Eigen::VectorXd lorenz96_rk4_step(const Eigen::VectorXd& x, double forcing, double dt) {
  const Eigen::VectorXd k1 = lorenz96_derivative(x, forcing);
  const Eigen::VectorXd k2 = lorenz96_derivative(x + 0.5 * dt * k1, forcing);
  const Eigen::VectorXd k3 = lorenz96_derivative(x + 0.5 * dt * k2, forcing);
  const Eigen::VectorXd k4 = lorenz96_derivative(x + dt * k3, forcing);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

AdjacencyTruth lorenz96_truth(std::size_t p) {
  AdjacencyTruth truth;
  truth.include_self = true;
  truth.matrix = BoolMatrix::Constant(static_cast<Eigen::Index>(p),
                                      static_cast<Eigen::Index>(p), false);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t offset : {p - 2, p - 1, std::size_t{0}, std::size_t{1}}) {
      truth.matrix(static_cast<Eigen::Index>(i),
                   static_cast<Eigen::Index>((i + offset) % p)) = true;
    }
  }
  return truth;
}

std::pair<TimeSeries, AdjacencyTruth> simulate_lorenz96(const Lorenz96Config& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> perturb(0.0, 0.01);
  Eigen::VectorXd x(static_cast<Eigen::Index>(cfg.p));
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = cfg.forcing + perturb(rng);

  const double h = cfg.dt / static_cast<double>(cfg.substeps);
  const auto advance = [&] {
    for (std::size_t s = 0; s < cfg.substeps; ++s) x = lorenz96_rk4_step(x, cfg.forcing, h);
  };

  for (std::size_t step = 0; step < cfg.burn_in; ++step) {
    advance();
    if (!x.allFinite()) throw DivergenceError("lorenz96 burn-in (increase substeps)", step + 1);
  }

  TimeSeries series;
  series.data.resize(static_cast<Eigen::Index>(cfg.length), x.size());
  for (std::size_t t = 0; t < cfg.length; ++t) {
    if (t > 0) {
      advance();
      if (!x.allFinite()) throw DivergenceError("lorenz96 (increase substeps)", cfg.burn_in + t);
    }
    series.data.row(static_cast<Eigen::Index>(t)) = x.transpose();
  }
  if (cfg.obs_noise_sigma > 0) {
    std::normal_distribution<double> noise(0.0, cfg.obs_noise_sigma);
    for (Eigen::Index t = 0; t < series.data.rows(); ++t) {
      for (Eigen::Index i = 0; i < series.data.cols(); ++i) series.data(t, i) += noise(rng);
    }
  }
  return {std::move(series), lorenz96_truth(cfg.p)};
}

// ---------------------------------------------------------------------------
// VAR
// ---------------------------------------------------------------------------

namespace {

std::string describe_radius(double radius) {
  std::ostringstream os;
  os.precision(6);
  os << "VAR coefficients are not stable: companion spectral radius " << radius
     << " >= 1";
  return os.str();
}

}  // namespace

UnstableSystemError::UnstableSystemError(double radius)
    : ValueError(describe_radius(radius)), radius_(radius) {}

double companion_spectral_radius(const std::vector<Eigen::MatrixXd>& coefficients) {
  if (coefficients.empty()) return 0.0;
  const Eigen::Index p = coefficients.front().rows();
  const auto lags = static_cast<Eigen::Index>(coefficients.size());
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p * lags, p * lags);
  for (Eigen::Index l = 0; l < lags; ++l) {
    companion.block(0, l * p, p, p) = coefficients[static_cast<std::size_t>(l)];
  }
  if (lags > 1) {
    companion.block(p, 0, p * (lags - 1), p * (lags - 1)).setIdentity();
  }
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, /*computeEigenvectors=*/false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

std::pair<TimeSeries, AdjacencyTruth> simulate_var(const VarConfig& cfg) {
  if (cfg.coefficients.empty()) throw ValueError("simulate_var: no coefficient matrices");
  const Eigen::Index p = cfg.coefficients.front().rows();
  for (const auto& a : cfg.coefficients) {
    if (a.rows() != p || a.cols() != p) {
      throw ValueError("simulate_var: coefficient matrices must all be p x p");
    }
  }
  if (cfg.length < 2) throw ValueError("simulate_var: length must be >= 2");
  if (cfg.noise_sigma < 0) throw ValueError("simulate_var: noise_sigma must be >= 0");
  if (cfg.initial && cfg.initial->size() != p) {
    throw ValueError("simulate_var: initial state has wrong dimension");
  }
  const double radius = companion_spectral_radius(cfg.coefficients);
  if (!(radius < 1.0)) throw UnstableSystemError(radius);

  const std::size_t lags = cfg.coefficients.size();
  const std::size_t total = cfg.burn_in + cfg.length;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, cfg.noise_sigma > 0 ? cfg.noise_sigma : 1.0);

  Eigen::MatrixXd all = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(total), p);
  if (cfg.initial) all.row(0) = cfg.initial->transpose();
  for (std::size_t t = 1; t < total; ++t) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(p);
    for (std::size_t l = 0; l < lags && l < t; ++l) {
      x += cfg.coefficients[l] * all.row(static_cast<Eigen::Index>(t - 1 - l)).transpose();
    }
    if (cfg.noise_sigma > 0) {
      for (Eigen::Index i = 0; i < p; ++i) x(i) += noise(rng);
    }
    all.row(static_cast<Eigen::Index>(t)) = x.transpose();
  }

  TimeSeries series;
  series.data = all.bottomRows(static_cast<Eigen::Index>(cfg.length));
  AdjacencyTruth truth;
  truth.include_self = true;
  truth.matrix = BoolMatrix::Constant(p, p, false);
  for (const auto& a : cfg.coefficients) {
    truth.matrix = truth.matrix.array() || (a.array() != 0.0);
  }
  return {std::move(series), std::move(truth)};
}

Eigen::MatrixXd random_sparse_var_matrix(std::size_t p, double density, std::uint64_t seed) {
  if (p < 1) throw ValueError("random_sparse_var_matrix: p must be >= 1");
  if (density < 0 || density > 1) {
    throw ValueError("random_sparse_var_matrix: density must be in [0, 1]");
  }
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution present(density);
  std::bernoulli_distribution negative(0.5);
  std::uniform_real_distribution<double> magnitude(0.3, 0.5);
  const auto n = static_cast<Eigen::Index>(p);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i != j && !present(rng)) continue;
      const double v = magnitude(rng);
      a(j, i) = negative(rng) ? -v : v;
    }
  }
  const double radius = companion_spectral_radius({a});
  if (radius > 0.9) a *= 0.9 / radius;
  return a;
}

}  // namespace grngc
