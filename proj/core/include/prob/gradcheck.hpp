#pragma once

#include <cstdint>
#include <vector>

#include "prob/model.hpp"

namespace prob {

/// A small randomized detector, gaussian, and two-scene batch for gradient
/// verification (F, H, D <= 8; at most 6 slots).
struct GradCheckProblem {
  DetectorParams params;
  GaussianState gaussian;
  std::vector<std::vector<Candidate>> scenes;
  std::vector<TrainExample> batch;  // points into `scenes`
  LossWeights weights;

  GradCheckProblem() = default;
  GradCheckProblem(const GradCheckProblem&) = delete;
  GradCheckProblem& operator=(const GradCheckProblem&) = delete;
  GradCheckProblem(GradCheckProblem&&) = default;
  GradCheckProblem& operator=(GradCheckProblem&&) = default;
};

GradCheckProblem make_gradcheck_problem(std::uint64_t seed);

}  // namespace prob
