// Copyright 2026 The GRNGC Authors
// SPDX-License-Identifier: Apache-2.0
//
// Threshold-free scoring of a GC matrix against a known adjacency.
//
// Ties: AUROC uses midranks; AUPRC treats equal scores as one threshold step.

#pragma once

#include <string>
#include <vector>

#include "grngc/core.hpp"
#include "grngc/datagen.hpp"

namespace grngc {

enum class EdgeMode {
  kFull,         // all p*p cells, self-loops included
  kOffDiagonal,  // cells with target != source
};

std::string to_string(EdgeMode mode);
// Accepts "full" and "off_diagonal".
EdgeMode parse_edge_mode(const std::string& name);

struct EdgeScorePairs {
  std::vector<double> scores;
  std::vector<bool> labels;
  EdgeMode mode = EdgeMode::kFull;

  std::size_t size() const { return scores.size(); }
};

// Row-major over (target, source). Both matrices must be p x p.
EdgeScorePairs flatten(const GcMatrix& gc, const AdjacencyTruth& truth, EdgeMode mode);

// Mann-Whitney AUROC. Throws ValueError unless both classes are present.
double auroc(const EdgeScorePairs& pairs);

// Average precision. Throws ValueError when no label is positive.
double auprc(const EdgeScorePairs& pairs);

struct Metrics {
  double auroc = 0;
  double auprc = 0;
  std::size_t n_edges = 0;
  EdgeMode mode = EdgeMode::kFull;
};

Metrics evaluate(const GcMatrix& gc, const AdjacencyTruth& truth, EdgeMode mode);

// {"auroc": .., "auprc": .., "n_edges": .., "mode": ..}
std::string metrics_to_json(const Metrics& m);

}  // namespace grngc
