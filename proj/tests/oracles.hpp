// Independent reference implementations used by the unit and acceptance
// tests. Deliberately naive: brute force, pixel counting, threshold
// enumeration. None of them share code with the library under test.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "prob/geometry.hpp"
#include "prob/matrix.hpp"
#include "prob/metrics.hpp"
#include "prob/rng.hpp"

namespace oracle {

struct IntBox {
  int x1, y1, x2, y2;
};

/// IoU of integer-corner boxes by counting unit cells.
inline double pixel_iou(const IntBox& a, const IntBox& b) {
  const int lo_x = std::min(a.x1, b.x1), hi_x = std::max(a.x2, b.x2);
  const int lo_y = std::min(a.y1, b.y1), hi_y = std::max(a.y2, b.y2);
  long inter = 0, uni = 0;
  for (int x = lo_x; x < hi_x; ++x) {
    for (int y = lo_y; y < hi_y; ++y) {
      const bool in_a = x >= a.x1 && x < a.x2 && y >= a.y1 && y < a.y2;
      const bool in_b = x >= b.x1 && x < b.x2 && y >= b.y1 && y < b.y2;
      inter += (in_a && in_b) ? 1 : 0;
      uni += (in_a || in_b) ? 1 : 0;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline prob::Box to_box(const IntBox& b) {
  return {(b.x1 + b.x2) / 2.0, (b.y1 + b.y2) / 2.0, static_cast<double>(b.x2 - b.x1),
          static_cast<double>(b.y2 - b.y1)};
}

/// Minimum total cost over every injection of the smaller side into the
/// larger one.
inline double brute_force_assignment(const prob::Matrix& c) {
  const std::size_t r = c.rows(), k = c.cols();
  if (r == 0 || k == 0) return 0.0;
  const bool transpose = k > r;
  const std::size_t big = transpose ? k : r, small = transpose ? r : k;
  std::vector<std::size_t> perm(big);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t j = 0; j < small; ++j) total += transpose ? c(j, perm[j]) : c(perm[j], j);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// AP by enumerating every distinct score threshold: at each threshold, the
/// detections at or above it are matched greedily (highest score first, best
/// unmatched IoU) and one (recall, precision) point is recorded. The area is
/// taken under the upper envelope of those points. Assumes distinct scores.
inline double ap_by_thresholds(const std::vector<prob::Detection>& dets, const std::vector<prob::GroundTruth>& gts,
                               double iou_thresh = 0.5) {
  std::vector<double> thresholds;
  for (const auto& d : dets) thresholds.push_back(d.score);
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  std::vector<std::pair<double, double>> points;  // (recall, precision)
  for (double thr : thresholds) {
    std::vector<prob::Detection> kept;
    for (const auto& d : dets) {
      if (d.score >= thr) kept.push_back(d);
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
    std::vector<bool> used(gts.size(), false);
    long tp = 0;
    for (const auto& d : kept) {
      long best = -1;
      double best_iou = iou_thresh;
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (used[g] || gts[g].scene_id != d.scene_id) continue;
        const double iou = prob::box_iou(d.box, gts[g].box);
        if (iou >= best_iou && (best < 0 || iou > best_iou)) {
          best = static_cast<long>(g);
          best_iou = iou;
        }
      }
      if (best >= 0) {
        used[static_cast<std::size_t>(best)] = true;
        ++tp;
      }
    }
    points.emplace_back(static_cast<double>(tp) / static_cast<double>(gts.size()),
                        static_cast<double>(tp) / static_cast<double>(kept.size()));
  }
  // Area under max-precision-at-recall->=r, integrated over recall steps.
  std::vector<double> recalls;
  for (const auto& p : points) recalls.push_back(p.first);
  recalls.push_back(0.0);
  std::sort(recalls.begin(), recalls.end());
  recalls.erase(std::unique(recalls.begin(), recalls.end()), recalls.end());
  double area = 0.0;
  for (std::size_t i = 1; i < recalls.size(); ++i) {
    double env = 0.0;
    for (const auto& p : points) {
      if (p.first >= recalls[i]) env = std::max(env, p.second);
    }
    area += (recalls[i] - recalls[i - 1]) * env;
  }
  return area;
}

/// EMA of a constant statistic after k steps: target + (start - target)(1-m)^k.
inline double ema_closed_form(double start, double target, double m, int k) {
  return target + (start - target) * std::pow(1.0 - m, k);
}

inline prob::Box random_box(prob::Rng& rng) {
  const double w = prob::uniform(rng, 0.05, 0.5), h = prob::uniform(rng, 0.05, 0.5);
  return {prob::uniform(rng, w / 2, 1 - w / 2), prob::uniform(rng, h / 2, 1 - h / 2), w, h};
}

}  // namespace oracle
