// Copyright 2026 The GRNGC Authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic benchmarks with known causal structure, CSV ingestion, and the
// preprocessing that turns a series into supervised lag windows.
//
// Adjacency convention everywhere: entry (j, i) is true iff series i drives
// series j (row = target, column = source).

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "grngc/error.hpp"

namespace grngc {

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct TimeSeries {
  Eigen::MatrixXd data;  // T x p, row = time
  std::vector<std::string> names;

  std::size_t length() const { return static_cast<std::size_t>(data.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(data.cols()); }
  // T >= 2, values finite, names empty or one per column.
  void validate() const;
};

struct AdjacencyTruth {
  BoolMatrix matrix;  // p x p, (target, source)
  bool include_self = true;

  std::size_t dim() const { return static_cast<std::size_t>(matrix.rows()); }
};

struct WindowedDataset {
  // inputs row n = series rows n .. n+k-1 flattened lag-major: column
  // l * p + i holds variable i at lag position l (l = 0 is the oldest).
  Eigen::MatrixXd inputs;   // N x (k * p)
  Eigen::MatrixXd targets;  // N x p, series row n + k
  std::size_t lag = 0;
  std::size_t dim = 0;

  std::size_t size() const { return static_cast<std::size_t>(inputs.rows()); }
};

// ---------------------------------------------------------------------------
// Lorenz-96
// ---------------------------------------------------------------------------

struct Lorenz96Config {
  std::size_t p = 10;
  double forcing = 10.0;
  std::size_t length = 1000;
  double dt = 0.05;  // sampling interval
  // RK4 steps of size dt / substeps taken per sample. Strong forcing needs
  // more than one: F = 40 is unstable at a single step of 0.05.
  std::size_t substeps = 1;
  std::size_t burn_in = 1000;
  std::uint64_t seed = 0;
  double obs_noise_sigma = 0.0;

  void validate() const;
};

// dx_i/dt = -x_{i-1} (x_{i-2} - x_{i+1}) - x_i + F, indices cyclic.
Eigen::VectorXd lorenz96_derivative(const Eigen::VectorXd& x, double forcing);
Eigen::VectorXd lorenz96_rk4_step(const Eigen::VectorXd& x, double forcing, double dt);
AdjacencyTruth lorenz96_truth(std::size_t p);

std::pair<TimeSeries, AdjacencyTruth> simulate_lorenz96(const Lorenz96Config& cfg);

// ---------------------------------------------------------------------------
// Linear VAR
// ---------------------------------------------------------------------------

class UnstableSystemError : public ValueError {
 public:
  explicit UnstableSystemError(double radius);
  double spectral_radius() const noexcept { return radius_; }

 private:
  double radius_;
};

struct VarConfig {
  // coefficients[l] multiplies x_{t-1-l}.
  std::vector<Eigen::MatrixXd> coefficients;
  std::size_t length = 1000;
  double noise_sigma = 1.0;
  std::uint64_t seed = 0;
  // Steps simulated and discarded before the first returned row.
  std::size_t burn_in = 100;
  // Value of the first simulated row; zeros when absent. Earlier history is
  // zero.
  std::optional<Eigen::VectorXd> initial;
};

double companion_spectral_radius(const std::vector<Eigen::MatrixXd>& coefficients);

// Throws UnstableSystemError when the companion spectral radius is >= 1.
std::pair<TimeSeries, AdjacencyTruth> simulate_var(const VarConfig& cfg);

// Stable random VAR(1) matrix: a full diagonal plus each off-diagonal entry
// present with probability `density`; magnitudes uniform in [0.3, 0.5] with
// random signs, rescaled if needed so the spectral radius is at most 0.9.
Eigen::MatrixXd random_sparse_var_matrix(std::size_t p, double density, std::uint64_t seed);

// ---------------------------------------------------------------------------
// CSV and preprocessing
// ---------------------------------------------------------------------------

TimeSeries load_csv(const std::filesystem::path& path, bool has_header,
                    char delimiter = ',');
// Writes a header row when the series carries names. Values use 17
// significant digits so reloading reproduces them exactly.
void save_csv(const TimeSeries& series, const std::filesystem::path& path,
              char delimiter = ',');

// Headerless numeric matrix files (truth and score matrices).
Eigen::MatrixXd load_matrix_csv(const std::filesystem::path& path, char delimiter = ',');
void save_matrix_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path,
                     char delimiter = ',');

// p x p file of 0/1 entries, row = target, column = source.
AdjacencyTruth load_truth_csv(const std::filesystem::path& path, char delimiter = ',');
void save_truth_csv(const AdjacencyTruth& truth, const std::filesystem::path& path,
                    char delimiter = ',');

struct Standardization {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;  // population convention (divide by T)
};

std::pair<TimeSeries, Standardization> standardize(const TimeSeries& series);

WindowedDataset make_windows(const TimeSeries& series, std::size_t lag);

}  // namespace grngc
