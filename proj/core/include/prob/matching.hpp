#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "prob/geometry.hpp"
#include "prob/matrix.hpp"

namespace prob {

/// Rows are prediction slots, columns are ground-truth targets.
using CostMatrix = Matrix;

struct MatchResult {
  /// (prediction index, target index), sorted by target index.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  /// Matched prediction indices, ascending.
  std::vector<std::size_t> matched_predictions() const;
  /// Prediction slot matched to each target (-1 if none).
  std::vector<long> prediction_for_target(std::size_t num_targets) const;
};

double assignment_cost(const CostMatrix& cost, const MatchResult& match);

/// Minimum-cost assignment of min(rows, cols) pairs. Among equal-cost optima
/// the pair list that is lexicographically smallest (target order, then
/// lowest prediction index) is returned. Throws DomainError on non-finite
/// entries.
MatchResult hungarian(const CostMatrix& cost);

struct MatchWeights {
  double cls = 2.0;
  double l1 = 5.0;
  double giou = 2.0;
  friend bool operator==(const MatchWeights&, const MatchWeights&) = default;
};

struct Target {
  int label = 0;
  Box box;
};

/// Per-target DETR cost: w_cls(1 - p[label]) + w_l1 |box_i - box_j|_1 + w_giou(1 - giou).
CostMatrix detr_cost(const Matrix& class_probs, std::span<const Box> pred_boxes,
                     std::span<const Target> targets, const MatchWeights& weights);

/// Throws ConfigError when there are more targets than prediction slots.
MatchResult detr_match(const Matrix& class_probs, std::span<const Box> pred_boxes,
                       std::span<const Target> targets, const MatchWeights& weights = {});

}  // namespace prob
