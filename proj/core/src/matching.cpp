#include "prob/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "prob/error.hpp"

namespace prob {

std::vector<std::size_t> MatchResult::matched_predictions() const {
  std::vector<std::size_t> out;
  out.reserve(pairs.size());
  for (const auto& [pred, tgt] : pairs) out.push_back(pred);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<long> MatchResult::prediction_for_target(std::size_t num_targets) const {
  std::vector<long> out(num_targets, -1);
  for (const auto& [pred, tgt] : pairs) {
    if (tgt < num_targets) out[tgt] = static_cast<long>(pred);
  }
  return out;
}

double assignment_cost(const CostMatrix& cost, const MatchResult& match) {
  double total = 0.0;
  for (const auto& [pred, tgt] : match.pairs) total += cost(pred, tgt);
  return total;
}

namespace {

// Shortest-augmenting-path Hungarian method on an n x m view (n <= m) with
// dual potentials. `at(i, j)` returns the cost between small-side index i
// and large-side index j (both local to the view).
struct Solution {
  std::vector<std::size_t> assign;  // small index -> large index
  std::vector<double> u, v;         // duals, 0-based
  double total = 0.0;
};

template <typename CostFn>
Solution solve(std::size_t n, std::size_t m, CostFn at) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Solution sol;
  sol.assign.assign(n, 0);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] != 0) sol.assign[p[j] - 1] = j - 1;
  }
  sol.u.assign(u.begin() + 1, u.end());
  sol.v.assign(v.begin() + 1, v.end());
  for (std::size_t i = 0; i < n; ++i) sol.total += at(i, sol.assign[i]);
  return sol;
}

}  // namespace

MatchResult hungarian(const CostMatrix& cost) {
  MatchResult result;
  const std::size_t rows = cost.rows(), cols = cost.cols();
  if (rows == 0 || cols == 0) return result;

  double scale = 1.0;
  for (double c : cost.data()) {
    if (!std::isfinite(c)) throw DomainError("cost matrix has non-finite entries");
    scale = std::max(scale, std::abs(c));
  }

  // The smaller side drives the assignment; every small-side index is matched.
  const bool targets_small = cols <= rows;
  const std::size_t n = targets_small ? cols : rows;
  const std::size_t m = targets_small ? rows : cols;
  auto entry = [&](std::size_t s, std::size_t l) {
    return targets_small ? cost(l, s) : cost(s, l);
  };
  const double tol = 1e-12 * scale * static_cast<double>(n + 1);

  std::vector<std::size_t> small_left(n), large_left(m);
  for (std::size_t i = 0; i < n; ++i) small_left[i] = i;
  for (std::size_t j = 0; j < m; ++j) large_left[j] = j;

  auto solve_view = [&](const std::vector<std::size_t>& s_ids, const std::vector<std::size_t>& l_ids) {
    return solve(s_ids.size(), l_ids.size(),
                 [&](std::size_t i, std::size_t j) { return entry(s_ids[i], l_ids[j]); });
  };

  // Fix one small-side index at a time, preferring the lowest large-side
  // index that still admits an optimal completion.
  std::vector<std::pair<std::size_t, std::size_t>> fixed;
  while (!small_left.empty()) {
    const Solution sol = solve_view(small_left, large_left);
    const std::size_t s = small_left.front();
    std::size_t chosen_pos = sol.assign[0];
    for (std::size_t lp = 0; lp < chosen_pos; ++lp) {
      const std::size_t l = large_left[lp];
      if (entry(s, l) - sol.u[0] - sol.v[lp] > tol) continue;
      std::vector<std::size_t> s_rest(small_left.begin() + 1, small_left.end());
      std::vector<std::size_t> l_rest = large_left;
      l_rest.erase(l_rest.begin() + static_cast<long>(lp));
      const double forced = entry(s, l) + solve_view(s_rest, l_rest).total;
      if (forced <= sol.total + tol) {
        chosen_pos = lp;
        break;
      }
    }
    fixed.emplace_back(s, large_left[chosen_pos]);
    small_left.erase(small_left.begin());
    large_left.erase(large_left.begin() + static_cast<long>(chosen_pos));
  }

  for (const auto& [s, l] : fixed) {
    if (targets_small) {
      result.pairs.emplace_back(l, s);
    } else {
      result.pairs.emplace_back(s, l);
    }
  }
  std::sort(result.pairs.begin(), result.pairs.end(),
            [](const auto& a, const auto& b) { return a.second != b.second ? a.second < b.second : a.first < b.first; });
  return result;
}

CostMatrix detr_cost(const Matrix& class_probs, std::span<const Box> pred_boxes,
                     std::span<const Target> targets, const MatchWeights& weights) {
  if (class_probs.rows() != pred_boxes.size()) {
    throw DomainError("class probabilities and boxes disagree on the number of slots");
  }
  CostMatrix cost(pred_boxes.size(), targets.size());
  for (std::size_t i = 0; i < pred_boxes.size(); ++i) {
    const Box& pb = pred_boxes[i];
    for (std::size_t j = 0; j < targets.size(); ++j) {
      const Target& t = targets[j];
      if (t.label < 0 || static_cast<std::size_t>(t.label) >= class_probs.cols()) {
        throw DomainError("target label " + std::to_string(t.label) + " is not a known class");
      }
      const double l1 = std::abs(pb.cx - t.box.cx) + std::abs(pb.cy - t.box.cy) +
                        std::abs(pb.w - t.box.w) + std::abs(pb.h - t.box.h);
      cost(i, j) = weights.cls * (1.0 - class_probs(i, static_cast<std::size_t>(t.label))) +
                   weights.l1 * l1 + weights.giou * (1.0 - box_giou(pb, t.box));
    }
  }
  return cost;
}

MatchResult detr_match(const Matrix& class_probs, std::span<const Box> pred_boxes,
                       std::span<const Target> targets, const MatchWeights& weights) {
  if (targets.size() > pred_boxes.size()) {
    throw ConfigError("more targets (" + std::to_string(targets.size()) + ") than prediction slots (" +
                      std::to_string(pred_boxes.size()) + ")");
  }
  if (targets.empty()) return {};
  return hungarian(detr_cost(class_probs, pred_boxes, targets, weights));
}

}  // namespace prob
