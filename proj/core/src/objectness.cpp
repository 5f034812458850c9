#include "prob/objectness.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "prob/error.hpp"

namespace prob {

GaussianState GaussianState::initial(std::size_t dim, double momentum, double eps) {
  GaussianState s;
  s.mu.assign(dim, 0.0);
  s.sigma.assign(dim, 1.0);
  s.momentum = momentum;
  s.eps = eps;
  return s;
}

void GaussianState::validate() const {
  if (mu.size() != sigma.size()) throw DomainError("gaussian mean and variance widths differ");
  if (!(momentum > 0.0 && momentum <= 1.0)) throw DomainError("gaussian momentum must lie in (0, 1]");
  if (!(eps > 0.0)) throw DomainError("gaussian variance floor must be positive");
  for (std::size_t d = 0; d < mu.size(); ++d) {
    if (!std::isfinite(mu[d]) || !std::isfinite(sigma[d])) throw DomainError("gaussian has non-finite entries");
    if (sigma[d] < eps) throw DomainError("gaussian variance below floor");
  }
}

GaussianState ema_update(const GaussianState& state, const Matrix& queries) {
  if (queries.rows() == 0) throw DomainError("ema_update needs a non-empty batch");
  const std::size_t dim = state.dim();
  if (queries.cols() != dim) throw DomainError("embedding width does not match the gaussian");

  const double n = static_cast<double>(queries.rows());
  Vec mean(dim, 0.0), var(dim, 0.0);
  for (std::size_t r = 0; r < queries.rows(); ++r) {
    for (std::size_t d = 0; d < dim; ++d) mean[d] += queries(r, d);
  }
  for (double& v : mean) v /= n;
  for (std::size_t r = 0; r < queries.rows(); ++r) {
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = queries(r, d) - mean[d];
      var[d] += diff * diff;
    }
  }
  for (double& v : var) v /= n;

  GaussianState next = state;
  const double m = state.momentum;
  for (std::size_t d = 0; d < dim; ++d) {
    next.mu[d] = (1.0 - m) * state.mu[d] + m * mean[d];
    next.sigma[d] = std::max(state.eps, (1.0 - m) * state.sigma[d] + m * var[d]);
  }
  return next;
}

double mahalanobis_sq(const GaussianState& state, std::span<const double> q) {
  if (q.size() != state.dim()) {
    throw DomainError("embedding width " + std::to_string(q.size()) + " does not match gaussian width " +
                      std::to_string(state.dim()));
  }
  double total = 0.0;
  for (std::size_t d = 0; d < q.size(); ++d) {
    const double diff = q[d] - state.mu[d];
    total += diff * diff / state.sigma[d];
  }
  return total;
}

double objectness_from_distance(double mahalanobis_sq, double tau) {
  if (!(tau > 0.0)) throw ConfigError("objectness temperature must be positive");
  return std::exp(-tau * mahalanobis_sq);
}

double objectness_prob(const GaussianState& state, std::span<const double> q, double tau) {
  return objectness_from_distance(mahalanobis_sq(state, q), tau);
}

ObjectnessLoss objectness_loss_and_grad(const GaussianState& state, const Matrix& queries,
                                        std::span<const std::size_t> matched) {
  if (queries.cols() != state.dim()) throw DomainError("embedding width does not match the gaussian");
  ObjectnessLoss out;
  out.grad = Matrix(queries.rows(), queries.cols());
  for (std::size_t i : matched) {
    if (i >= queries.rows()) {
      throw DomainError("matched index " + std::to_string(i) + " out of range");
    }
    const auto q = queries.row(i);
    out.loss += mahalanobis_sq(state, q);
    auto g = out.grad.row(i);
    for (std::size_t d = 0; d < q.size(); ++d) g[d] += 2.0 * (q[d] - state.mu[d]) / state.sigma[d];
  }
  return out;
}

}  // namespace prob
