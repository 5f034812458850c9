#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "prob/data.hpp"
#include "prob/geometry.hpp"
#include "prob/matching.hpp"
#include "prob/matrix.hpp"
#include "prob/objectness.hpp"

namespace prob {

struct DetectorConfig {
  int feature_dim = 12;
  int hidden_dim = 16;
  int embed_dim = 16;
  int num_queries = 16;

  void validate() const;
  friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

/// Per-candidate encoder (F -> H tanh -> D) followed by a sigmoid
/// classification head (D -> K) and a box head (D -> 4) that refines the
/// candidate's proposal box in logit space.
struct DetectorParams {
  Matrix w1;  // H x F
  Vec b1;
  Matrix w2;  // D x H
  Vec b2;
  Matrix wc;  // K x D
  Vec bc;
  Matrix wb;  // 4 x D
  Vec bb;

  /// Glorot-uniform weights, zero biases except the focal prior on bc.
  static DetectorParams init(const DetectorConfig& cfg, int num_classes, std::uint64_t seed);
  /// Same shapes, every entry zero.
  static DetectorParams zeros_like(const DetectorParams& other);

  std::size_t feature_dim() const { return w1.cols(); }
  std::size_t hidden_dim() const { return w1.rows(); }
  std::size_t embed_dim() const { return w2.rows(); }
  std::size_t num_classes() const { return wc.rows(); }
  std::size_t num_parameters() const;

  /// Appends `count` freshly initialized classification rows.
  void add_classes(int count, std::uint64_t seed);

  /// Calls f(span<double>) for every tensor in a fixed order.
  template <typename F>
  void visit(F&& f) {
    f(std::span<double>(w1.data()));
    f(std::span<double>(b1));
    f(std::span<double>(w2.data()));
    f(std::span<double>(b2));
    f(std::span<double>(wc.data()));
    f(std::span<double>(bc));
    f(std::span<double>(wb.data()));
    f(std::span<double>(bb));
  }
  template <typename F>
  void visit(F&& f) const {
    f(std::span<const double>(w1.data()));
    f(std::span<const double>(b1));
    f(std::span<const double>(w2.data()));
    f(std::span<const double>(b2));
    f(std::span<const double>(wc.data()));
    f(std::span<const double>(bc));
    f(std::span<const double>(wb.data()));
    f(std::span<const double>(bb));
  }

  friend bool operator==(const DetectorParams&, const DetectorParams&) = default;
};

void to_json(nlohmann::json& j, const DetectorParams& p);
void from_json(const nlohmann::json& j, DetectorParams& p);

struct ForwardPass {
  Matrix features;     // N x F (copied inputs)
  Matrix hidden;       // N x H, tanh activations
  Matrix queries;      // N x D
  Matrix class_probs;  // N x K
  std::vector<Box> proposals;
  std::vector<Box> boxes;
};

/// Throws DomainError on a feature-width mismatch.
ForwardPass forward(const DetectorParams& params, std::span<const Candidate> candidates);

struct FocalParams {
  double alpha = 0.25;
  double gamma = 2.0;
  friend bool operator==(const FocalParams&, const FocalParams&) = default;
};

inline constexpr double kProbClamp = 1e-8;

/// Sigmoid focal loss of one probability against a binary target. Throws
/// DomainError for p outside [0, 1].
double sigmoid_focal_loss(double p, int y, const FocalParams& fp = {});
/// d loss / d logit for p = sigmoid(logit); zero where p is clamped.
double sigmoid_focal_grad_logit(double p, int y, const FocalParams& fp = {});

/// w_l1 |pred - target|_1 + w_giou (1 - giou).
double box_regression_loss(const Box& pred, const Box& target, double w_l1, double w_giou);

/// Lc + Lb + alpha Lo.
double joint_loss(double lc, double lb, double lo, double alpha);

struct LossWeights {
  MatchWeights match;  // matching cost weights
  double l1 = 5.0;
  double giou = 2.0;
  FocalParams focal;
  double alpha = 0.005;  // objectness weight
};

struct LossBreakdown {
  double cls = 0.0;
  double box = 0.0;
  double obj = 0.0;
  double total = 0.0;
};

/// Supervision for one scene. Labels are classification-head indices.
/// Ignored targets take part in matching but their slot contributes no loss.
struct SceneTargets {
  std::vector<Target> targets;
  std::vector<char> ignore;  // empty or one flag per target
};

struct TrainExample {
  const std::vector<Candidate>* candidates = nullptr;
  SceneTargets targets;
};

/// Joint loss of one scene for a fixed match and frozen gaussian; adds
/// `scale` times its gradient into `grad` when non-null.
LossBreakdown scene_loss(const DetectorParams& params, const GaussianState& gaussian, const ForwardPass& fp,
                         const SceneTargets& targets, const MatchResult& match, const LossWeights& w,
                         DetectorParams* grad, double scale);

struct TrainConfig {
  double lr = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 1e-4;
  int batch_size = 5;
  double momentum = 0.1;
  double tau = 1.3;
  double alpha = 0.005;
  int epochs = 40;
  int lr_drop_epoch = 30;
  double lr_drop_factor = 0.1;
  int finetune_epochs = 200;
  double finetune_lr_factor = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void to_json(nlohmann::json& j, const DetectorConfig& c);
void from_json(const nlohmann::json& j, DetectorConfig& c);

/// Adam with decoupled weight decay.
class AdamW {
 public:
  AdamW() = default;
  explicit AdamW(const DetectorParams& like);
  void step(DetectorParams& params, const DetectorParams& grad, double lr, const TrainConfig& cfg);
  std::int64_t steps() const { return t_; }

 private:
  DetectorParams m_, v_;
  std::int64_t t_ = 0;
};

/// Owns the detector, the objectness gaussian, and the optimizer state for a
/// single-writer training loop.
class Trainer {
 public:
  Trainer(DetectorParams params, GaussianState gaussian, TrainConfig cfg, LossWeights weights);

  /// One alternating step: forward every scene, EMA-update the gaussian on all
  /// query embeddings, match, evaluate the losses against the updated
  /// gaussian, backpropagate (the gaussian receives no gradient), AdamW
  /// update. Returns batch-mean losses. Throws DomainError on an empty batch.
  LossBreakdown step(std::span<const TrainExample> batch, double lr);

  const DetectorParams& params() const { return params_; }
  DetectorParams& params() { return params_; }
  const GaussianState& gaussian() const { return gaussian_; }
  const TrainConfig& config() const { return cfg_; }
  const LossWeights& weights() const { return weights_; }
  std::int64_t steps() const { return steps_; }
  /// Drops optimizer moments (used when the classification head grows).
  void reset_optimizer();

 private:
  DetectorParams params_;
  GaussianState gaussian_;
  TrainConfig cfg_;
  LossWeights weights_;
  AdamW adam_;
  std::int64_t steps_ = 0;
};

struct TrainStepResult {
  DetectorParams params;
  GaussianState gaussian;
  LossBreakdown losses;
};

/// Functional form of Trainer::step with a fresh optimizer.
TrainStepResult train_step(const DetectorParams& params, const GaussianState& gaussian,
                           std::span<const TrainExample> batch, const TrainConfig& cfg,
                           const LossWeights& weights);

struct GradCheckOptions {
  double step = 1e-6;
  /// Test hook applied to the analytic gradient before comparison.
  std::function<void(DetectorParams&)> corrupt;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_analytic = 0.0;
  std::size_t checked = 0;
};

/// Compares the analytic gradient of the batch-mean joint loss against central
/// finite differences for every parameter. Matches and the gaussian are held
/// fixed at their values for the unperturbed parameters.
GradCheckResult gradient_check(const DetectorParams& params, const GaussianState& gaussian,
                               std::span<const TrainExample> batch, const LossWeights& weights,
                               const GradCheckOptions& opts = {});

struct ScoringOptions {
  double tau = 1.3;
  bool use_objectness = true;  // false scores every slot with f_obj = 1
};

struct Prediction {
  std::size_t slot = 0;
  Vec class_scores;  // f_cls * f_obj per known head index
  double unknown_score = 0.0;
  double objectness = 0.0;
  Box box;
  int label = kUnknownLabel;  // best head index, or kUnknownLabel
  double score = 0.0;
};

/// Scores every slot: known k -> f_cls,k * f_obj; unknown -> f_obj * (1 - max_k f_cls,k).
/// Each slot keeps its best label (known wins ties). Sorted by score
/// descending, then slot. Throws ConfigError for tau <= 0.
std::vector<Prediction> score_slots(const DetectorParams& params, const GaussianState& gaussian,
                                    std::span<const Candidate> candidates, const ScoringOptions& opts);

/// score_slots filtered by score >= conf_threshold and truncated to top_k.
std::vector<Prediction> predict(const DetectorParams& params, const GaussianState& gaussian,
                                std::span<const Candidate> candidates, const ScoringOptions& opts,
                                double conf_threshold, std::size_t top_k);

}  // namespace prob
