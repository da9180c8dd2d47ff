// Copyright 2026 The GRNGC Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>

#include "grngc/metrics.hpp"
#include "json.hpp"

namespace grngc {

std::string to_string(EdgeMode mode) {
  return mode == EdgeMode::kFull ? "full" : "off_diagonal";
}

EdgeMode parse_edge_mode(const std::string& name) {
  if (name == "full") return EdgeMode::kFull;
  if (name == "off_diagonal" || name == "off-diagonal") return EdgeMode::kOffDiagonal;
  throw ValueError("unknown edge mode '" + name + "' (expected full or off_diagonal)");
}

EdgeScorePairs flatten(const GcMatrix& gc, const AdjacencyTruth& truth, EdgeMode mode) {
  const auto rows = static_cast<std::size_t>(gc.scores.rows());
  const auto cols = static_cast<std::size_t>(gc.scores.cols());
  const auto trows = static_cast<std::size_t>(truth.matrix.rows());
  const auto tcols = static_cast<std::size_t>(truth.matrix.cols());
  if (rows != cols || trows != tcols || rows != trows) {
    throw ShapeError("flatten", {rows, cols}, {trows, tcols});
  }
  EdgeScorePairs pairs;
  pairs.mode = mode;
  for (std::size_t j = 0; j < rows; ++j) {
    for (std::size_t i = 0; i < cols; ++i) {
      if (mode == EdgeMode::kOffDiagonal && i == j) continue;
      const auto r = static_cast<Eigen::Index>(j);
      const auto c = static_cast<Eigen::Index>(i);
      pairs.scores.push_back(gc.scores(r, c));
      pairs.labels.push_back(truth.matrix(r, c));
    }
  }
  return pairs;
}

namespace {

struct Group {
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

// Tie groups in descending score order.
std::vector<Group> descending_groups(const EdgeScorePairs& pairs) {
  if (pairs.scores.size() != pairs.labels.size()) {
    throw ValueError("edge scores and labels differ in length");
  }
  if (pairs.scores.empty()) throw ValueError("no edges to score");
  for (double s : pairs.scores) {
    if (!std::isfinite(s)) throw ValueError("edge scores must be finite");
  }
  std::vector<std::size_t> order(pairs.scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return pairs.scores[a] > pairs.scores[b]; });
  std::vector<Group> groups;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k == 0 || pairs.scores[order[k]] != pairs.scores[order[k - 1]]) groups.emplace_back();
    if (pairs.labels[order[k]]) {
      ++groups.back().positives;
    } else {
      ++groups.back().negatives;
    }
  }
  return groups;
}

}  // namespace

double auroc(const EdgeScorePairs& pairs) {
  const std::vector<Group> groups = descending_groups(pairs);
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  for (const Group& g : groups) {
    n_pos += g.positives;
    n_neg += g.negatives;
  }
  if (n_pos == 0 || n_neg == 0) {
    throw ValueError("auroc needs both positive and negative labels (got " +
                     std::to_string(n_pos) + " positive, " + std::to_string(n_neg) +
                     " negative)");
  }
  // Ascending ranks 1..n; a tie group spanning ranks [lo, hi] gets (lo + hi) / 2.
  double rank_sum = 0.0;
  std::size_t above = 0;
  const std::size_t n = n_pos + n_neg;
  for (const Group& g : groups) {
    const std::size_t size = g.positives + g.negatives;
    const double hi = static_cast<double>(n - above);
    const double lo = hi - static_cast<double>(size) + 1.0;
    rank_sum += static_cast<double>(g.positives) * 0.5 * (lo + hi);
    above += size;
  }
  const double np = static_cast<double>(n_pos);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

double auprc(const EdgeScorePairs& pairs) {
  const std::vector<Group> groups = descending_groups(pairs);
  std::size_t n_pos = 0;
  for (const Group& g : groups) n_pos += g.positives;
  if (n_pos == 0) throw ValueError("auprc needs at least one positive label");
  double ap = 0.0;
  std::size_t tp = 0;
  std::size_t seen = 0;
  for (const Group& g : groups) {
    tp += g.positives;
    seen += g.positives + g.negatives;
    if (g.positives == 0) continue;
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    ap += precision * static_cast<double>(g.positives) / static_cast<double>(n_pos);
  }
  return ap;
}

Metrics evaluate(const GcMatrix& gc, const AdjacencyTruth& truth, EdgeMode mode) {
  const EdgeScorePairs pairs = flatten(gc, truth, mode);
  Metrics m;
  m.auroc = auroc(pairs);
  m.auprc = auprc(pairs);
  m.n_edges = pairs.size();
  m.mode = mode;
  return m;
}

std::string metrics_to_json(const Metrics& m) {
  return nlohmann::json{{"auroc", m.auroc},
                        {"auprc", m.auprc},
                        {"n_edges", m.n_edges},
                        {"mode", to_string(m.mode)}}
      .dump(2);
}

}  // namespace grngc
