#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "prob/matrix.hpp"

namespace prob {

/// Class-agnostic Gaussian over query embeddings with diagonal covariance.
/// `sigma` holds per-dimension variances.
struct GaussianState {
  Vec mu;
  Vec sigma;
  double momentum = 0.1;
  double eps = 1e-6;

  /// mu = 0, sigma = 1.
  static GaussianState initial(std::size_t dim, double momentum = 0.1, double eps = 1e-6);

  std::size_t dim() const { return mu.size(); }
  /// Throws DomainError when the invariants do not hold.
  void validate() const;

  friend bool operator==(const GaussianState&, const GaussianState&) = default;
};

struct ObjectnessConfig {
  double tau = 1.3;
  double alpha = 0.1;
};

/// Exponential moving average of the batch mean and biased batch variance:
///   mu'    = (1 - m) mu    + m mean(Q)
///   sigma' = max(eps, (1 - m) sigma + m var(Q))
/// `queries` holds one embedding per row. Throws DomainError on an empty batch
/// or width mismatch.
GaussianState ema_update(const GaussianState& state, const Matrix& queries);

/// sum_d (q_d - mu_d)^2 / sigma_d.
double mahalanobis_sq(const GaussianState& state, std::span<const double> q);

/// exp(-tau * mahalanobis_sq). Throws ConfigError for tau <= 0.
double objectness_prob(const GaussianState& state, std::span<const double> q, double tau);
double objectness_from_distance(double mahalanobis_sq, double tau);

struct ObjectnessLoss {
  double loss = 0.0;
  Matrix grad;  // same shape as the queries; zero rows outside the matched set
};

/// Sum of squared Mahalanobis distances over `matched` rows of `queries`
/// against a frozen state. The state receives no gradient.
ObjectnessLoss objectness_loss_and_grad(const GaussianState& state, const Matrix& queries,
                                        std::span<const std::size_t> matched);

}  // namespace prob
