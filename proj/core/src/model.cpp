#include "prob/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "prob/error.hpp"
#include "prob/json_util.hpp"
#include "prob/rng.hpp"

namespace prob {

using nlohmann::json;

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double logit_clamped(double x) {
  const double c = std::clamp(x, 1e-4, 1.0 - 1e-4);
  return std::log(c / (1.0 - c));
}

// Focal prior: every class starts at probability 0.01.
const double kClassBiasPrior = -std::log((1.0 - 0.01) / 0.01);

void glorot(Matrix& m, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  for (double& x : m.data()) x = uniform(rng, -limit, limit);
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(Vec(row.begin(), row.end()));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, const char* name) {
  const auto rows = j.get<std::vector<Vec>>();
  Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) throw LoadError(std::string("ragged matrix '") + name + "'");
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

}  // namespace

void DetectorConfig::validate() const {
  if (feature_dim < 1 || hidden_dim < 1 || embed_dim < 1 || num_queries < 1) {
    throw ConfigError("model: all dimensions must be positive");
  }
}

void to_json(json& j, const DetectorConfig& c) {
  j = json{{"feature_dim", c.feature_dim},
           {"hidden_dim", c.hidden_dim},
           {"embed_dim", c.embed_dim},
           {"num_queries", c.num_queries}};
}

void from_json(const json& j, DetectorConfig& c) {
  using namespace json_util;
  constexpr std::string_view where = "model";
  require_keys_subset(j, {"feature_dim", "hidden_dim", "embed_dim", "num_queries"}, where);
  read_optional(j, "feature_dim", c.feature_dim, where);
  read_optional(j, "hidden_dim", c.hidden_dim, where);
  read_optional(j, "embed_dim", c.embed_dim, where);
  read_optional(j, "num_queries", c.num_queries, where);
}

DetectorParams DetectorParams::init(const DetectorConfig& cfg, int num_classes, std::uint64_t seed) {
  cfg.validate();
  if (num_classes < 0) throw ConfigError("model: negative class count");
  const auto F = static_cast<std::size_t>(cfg.feature_dim);
  const auto H = static_cast<std::size_t>(cfg.hidden_dim);
  const auto D = static_cast<std::size_t>(cfg.embed_dim);
  const auto K = static_cast<std::size_t>(num_classes);
  Rng rng(mix_seed(seed, 0xD37EC7));
  DetectorParams p;
  p.w1 = Matrix(H, F);
  p.b1.assign(H, 0.0);
  p.w2 = Matrix(D, H);
  p.b2.assign(D, 0.0);
  p.wc = Matrix(K, D);
  p.bc.assign(K, kClassBiasPrior);
  p.wb = Matrix(4, D);
  p.bb.assign(4, 0.0);
  glorot(p.w1, rng);
  glorot(p.w2, rng);
  glorot(p.wc, rng);
  // Box head starts near zero so initial boxes equal the proposals.
  for (double& x : p.wb.data()) x = uniform(rng, -1e-3, 1e-3);
  return p;
}

DetectorParams DetectorParams::zeros_like(const DetectorParams& other) {
  DetectorParams z = other;
  z.visit([](std::span<double> t) { std::fill(t.begin(), t.end(), 0.0); });
  return z;
}

std::size_t DetectorParams::num_parameters() const {
  std::size_t n = 0;
  visit([&](std::span<const double> t) { n += t.size(); });
  return n;
}

void DetectorParams::add_classes(int count, std::uint64_t seed) {
  if (count <= 0) return;
  const std::size_t K = wc.rows(), D = wc.cols();
  Matrix grown(K + static_cast<std::size_t>(count), D);
  std::copy(wc.data().begin(), wc.data().end(), grown.data().begin());
  Rng rng(mix_seed(seed, 0xC1A55 + K));
  const double limit = std::sqrt(6.0 / static_cast<double>(grown.rows() + D));
  for (std::size_t r = K; r < grown.rows(); ++r) {
    for (double& x : grown.row(r)) x = uniform(rng, -limit, limit);
  }
  wc = std::move(grown);
  bc.resize(wc.rows(), kClassBiasPrior);
}

void to_json(json& j, const DetectorParams& p) {
  j = json{{"w1", matrix_to_json(p.w1)}, {"b1", p.b1}, {"w2", matrix_to_json(p.w2)}, {"b2", p.b2},
           {"wc", matrix_to_json(p.wc)}, {"bc", p.bc}, {"wb", matrix_to_json(p.wb)}, {"bb", p.bb}};
}

void from_json(const json& j, DetectorParams& p) {
  p.w1 = matrix_from_json(j.at("w1"), "w1");
  p.b1 = j.at("b1").get<Vec>();
  p.w2 = matrix_from_json(j.at("w2"), "w2");
  p.b2 = j.at("b2").get<Vec>();
  p.wc = matrix_from_json(j.at("wc"), "wc");
  p.bc = j.at("bc").get<Vec>();
  p.wb = matrix_from_json(j.at("wb"), "wb");
  p.bb = j.at("bb").get<Vec>();
  const bool ok = p.b1.size() == p.w1.rows() && p.w2.cols() == p.w1.rows() && p.b2.size() == p.w2.rows() &&
                  (p.wc.rows() == 0 || p.wc.cols() == p.w2.rows()) && p.bc.size() == p.wc.rows() &&
                  p.wb.rows() == 4 && p.wb.cols() == p.w2.rows() && p.bb.size() == 4;
  if (!ok) throw LoadError("detector parameters have inconsistent shapes");
}

ForwardPass forward(const DetectorParams& params, std::span<const Candidate> candidates) {
  const std::size_t N = candidates.size();
  const std::size_t F = params.feature_dim(), H = params.hidden_dim(), D = params.embed_dim(),
                    K = params.num_classes();
  ForwardPass fp;
  fp.features = Matrix(N, F);
  fp.hidden = Matrix(N, H);
  fp.queries = Matrix(N, D);
  fp.class_probs = Matrix(N, K);
  fp.proposals.reserve(N);
  fp.boxes.reserve(N);

  for (std::size_t i = 0; i < N; ++i) {
    const Candidate& c = candidates[i];
    if (c.feature.size() != F) {
      throw DomainError("candidate feature width " + std::to_string(c.feature.size()) + " != model width " +
                        std::to_string(F));
    }
    std::copy(c.feature.begin(), c.feature.end(), fp.features.row(i).begin());
    auto h = fp.hidden.row(i);
    for (std::size_t r = 0; r < H; ++r) {
      double a = params.b1[r];
      for (std::size_t k = 0; k < F; ++k) a += params.w1(r, k) * c.feature[k];
      h[r] = std::tanh(a);
    }
    auto q = fp.queries.row(i);
    for (std::size_t r = 0; r < D; ++r) {
      double a = params.b2[r];
      for (std::size_t k = 0; k < H; ++k) a += params.w2(r, k) * h[k];
      q[r] = a;
    }
    auto p = fp.class_probs.row(i);
    for (std::size_t r = 0; r < K; ++r) {
      double z = params.bc[r];
      for (std::size_t k = 0; k < D; ++k) z += params.wc(r, k) * q[k];
      p[r] = sigmoid(z);
    }
    const auto prop = c.box.as_array();
    std::array<double, 4> out{};
    for (std::size_t r = 0; r < 4; ++r) {
      double z = params.bb[r] + logit_clamped(prop[r]);
      for (std::size_t k = 0; k < D; ++k) z += params.wb(r, k) * q[k];
      out[r] = sigmoid(z);
    }
    fp.proposals.push_back(c.box);
    fp.boxes.push_back(Box::from_array(out));
  }
  return fp;
}

double sigmoid_focal_loss(double p, int y, const FocalParams& fp) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("focal loss probability outside [0, 1]");
  const double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  if (y == 1) return -fp.alpha * std::pow(1.0 - pc, fp.gamma) * std::log(pc);
  return -(1.0 - fp.alpha) * std::pow(pc, fp.gamma) * std::log(1.0 - pc);
}

double sigmoid_focal_grad_logit(double p, int y, const FocalParams& fp) {
  if (p < kProbClamp || p > 1.0 - kProbClamp) return 0.0;
  const double g = fp.gamma;
  double dldp;
  if (y == 1) {
    dldp = -fp.alpha * (-g * std::pow(1.0 - p, g - 1.0) * std::log(p) + std::pow(1.0 - p, g) / p);
  } else {
    dldp = -(1.0 - fp.alpha) * (g * std::pow(p, g - 1.0) * std::log(1.0 - p) - std::pow(p, g) / (1.0 - p));
  }
  return dldp * p * (1.0 - p);
}

double box_regression_loss(const Box& pred, const Box& target, double w_l1, double w_giou) {
  const double l1 = std::abs(pred.cx - target.cx) + std::abs(pred.cy - target.cy) + std::abs(pred.w - target.w) +
                    std::abs(pred.h - target.h);
  return w_l1 * l1 + w_giou * (1.0 - box_giou(pred, target));
}

double joint_loss(double lc, double lb, double lo, double alpha) { return lc + lb + alpha * lo; }

LossBreakdown scene_loss(const DetectorParams& params, const GaussianState& gaussian, const ForwardPass& fp,
                         const SceneTargets& targets, const MatchResult& match, const LossWeights& w,
                         DetectorParams* grad, double scale) {
  const std::size_t N = fp.queries.rows(), F = params.feature_dim(), H = params.hidden_dim(),
                    D = params.embed_dim(), K = params.num_classes();
  std::vector<long> target_of_slot(N, -1);
  for (const auto& [slot, tgt] : match.pairs) target_of_slot[slot] = static_cast<long>(tgt);
  auto ignored = [&](long tgt) {
    return tgt >= 0 && !targets.ignore.empty() && targets.ignore[static_cast<std::size_t>(tgt)] != 0;
  };

  LossBreakdown out;
  Vec dz(K), dr(4), dq(D), dh(H);
  for (std::size_t i = 0; i < N; ++i) {
    const long tgt = target_of_slot[i];
    if (ignored(tgt)) continue;
    const bool matched = tgt >= 0;
    const Target* t = matched ? &targets.targets[static_cast<std::size_t>(tgt)] : nullptr;
    const auto p = fp.class_probs.row(i);
    const auto q = fp.queries.row(i);

    for (std::size_t k = 0; k < K; ++k) {
      const int y = (t != nullptr && static_cast<std::size_t>(t->label) == k) ? 1 : 0;
      out.cls += sigmoid_focal_loss(p[k], y, w.focal);
      dz[k] = sigmoid_focal_grad_logit(p[k], y, w.focal);
    }
    std::fill(dr.begin(), dr.end(), 0.0);
    std::fill(dq.begin(), dq.end(), 0.0);
    if (matched) {
      const Box& b = fp.boxes[i];
      out.box += box_regression_loss(b, t->box, w.l1, w.giou);
      const auto pred = b.as_array();
      const auto gt = t->box.as_array();
      const auto dg = box_giou_grad(b, t->box);
      for (std::size_t c = 0; c < 4; ++c) {
        const double dbox = w.l1 * sign(pred[c] - gt[c]) - w.giou * dg[c];
        dr[c] = dbox * pred[c] * (1.0 - pred[c]);
      }
      const double dist = mahalanobis_sq(gaussian, q);
      out.obj += dist;
      if (w.alpha != 0.0) {
        for (std::size_t d = 0; d < D; ++d) dq[d] = w.alpha * 2.0 * (q[d] - gaussian.mu[d]) / gaussian.sigma[d];
      }
    }
    if (grad == nullptr) continue;

    for (std::size_t k = 0; k < K; ++k) {
      const double g = scale * dz[k];
      grad->bc[k] += g;
      for (std::size_t d = 0; d < D; ++d) {
        grad->wc(k, d) += g * q[d];
        dq[d] += dz[k] * params.wc(k, d);
      }
    }
    if (matched) {
      for (std::size_t c = 0; c < 4; ++c) {
        const double g = scale * dr[c];
        grad->bb[c] += g;
        for (std::size_t d = 0; d < D; ++d) {
          grad->wb(c, d) += g * q[d];
          dq[d] += dr[c] * params.wb(c, d);
        }
      }
    }
    const auto h = fp.hidden.row(i);
    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t d = 0; d < D; ++d) {
      const double g = scale * dq[d];
      grad->b2[d] += g;
      for (std::size_t k = 0; k < H; ++k) {
        grad->w2(d, k) += g * h[k];
        dh[k] += dq[d] * params.w2(d, k);
      }
    }
    const auto x = fp.features.row(i);
    for (std::size_t k = 0; k < H; ++k) {
      const double g = scale * dh[k] * (1.0 - h[k] * h[k]);
      grad->b1[k] += g;
      for (std::size_t f = 0; f < F; ++f) grad->w1(k, f) += g * x[f];
    }
  }
  out.total = joint_loss(out.cls, out.box, out.obj, w.alpha);
  return out;
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("train.lr must be positive");
  if (batch_size < 1) throw ConfigError("train.batch_size must be at least 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("train: Adam betas must lie in [0, 1)");
  }
  if (!(momentum > 0.0 && momentum <= 1.0)) throw ConfigError("train.momentum must lie in (0, 1]");
  if (!(tau > 0.0)) throw ConfigError("train.tau must be positive");
  if (!(alpha >= 0.0)) throw ConfigError("train.alpha must be non-negative");
  if (epochs < 0 || finetune_epochs < 0) throw ConfigError("train: epoch counts must be non-negative");
  if (!(weight_decay >= 0.0)) throw ConfigError("train.weight_decay must be non-negative");
  if (!(lr_drop_factor > 0.0) || !(finetune_lr_factor > 0.0)) throw ConfigError("train: lr factors must be positive");
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"lr", c.lr},
           {"beta1", c.beta1},
           {"beta2", c.beta2},
           {"adam_eps", c.adam_eps},
           {"weight_decay", c.weight_decay},
           {"batch_size", c.batch_size},
           {"momentum", c.momentum},
           {"tau", c.tau},
           {"alpha", c.alpha},
           {"epochs", c.epochs},
           {"lr_drop_epoch", c.lr_drop_epoch},
           {"lr_drop_factor", c.lr_drop_factor},
           {"finetune_epochs", c.finetune_epochs},
           {"finetune_lr_factor", c.finetune_lr_factor},
           {"seed", c.seed}};
}

void from_json(const json& j, TrainConfig& c) {
  using namespace json_util;
  constexpr std::string_view where = "train";
  require_keys_subset(j,
                      {"lr", "beta1", "beta2", "adam_eps", "weight_decay", "batch_size", "momentum", "tau", "alpha",
                       "epochs", "lr_drop_epoch", "lr_drop_factor", "finetune_epochs", "finetune_lr_factor", "seed"},
                      where);
  read_optional(j, "lr", c.lr, where);
  read_optional(j, "beta1", c.beta1, where);
  read_optional(j, "beta2", c.beta2, where);
  read_optional(j, "adam_eps", c.adam_eps, where);
  read_optional(j, "weight_decay", c.weight_decay, where);
  read_optional(j, "batch_size", c.batch_size, where);
  read_optional(j, "momentum", c.momentum, where);
  read_optional(j, "tau", c.tau, where);
  read_optional(j, "alpha", c.alpha, where);
  read_optional(j, "epochs", c.epochs, where);
  read_optional(j, "lr_drop_epoch", c.lr_drop_epoch, where);
  read_optional(j, "lr_drop_factor", c.lr_drop_factor, where);
  read_optional(j, "finetune_epochs", c.finetune_epochs, where);
  read_optional(j, "finetune_lr_factor", c.finetune_lr_factor, where);
  read_optional(j, "seed", c.seed, where);
}

AdamW::AdamW(const DetectorParams& like)
    : m_(DetectorParams::zeros_like(like)), v_(DetectorParams::zeros_like(like)) {}

void AdamW::step(DetectorParams& params, const DetectorParams& grad, double lr, const TrainConfig& cfg) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t_));
  std::vector<std::span<double>> ps, ms, vs;
  std::vector<std::span<const double>> gs;
  params.visit([&](std::span<double> t) { ps.push_back(t); });
  m_.visit([&](std::span<double> t) { ms.push_back(t); });
  v_.visit([&](std::span<double> t) { vs.push_back(t); });
  grad.visit([&](std::span<const double> t) { gs.push_back(t); });
  for (std::size_t k = 0; k < ps.size(); ++k) {
    if (ps[k].size() != gs[k].size() || ms[k].size() != gs[k].size()) {
      throw DomainError("optimizer state does not match parameter shapes");
    }
    for (std::size_t i = 0; i < ps[k].size(); ++i) {
      const double g = gs[k][i];
      ms[k][i] = cfg.beta1 * ms[k][i] + (1.0 - cfg.beta1) * g;
      vs[k][i] = cfg.beta2 * vs[k][i] + (1.0 - cfg.beta2) * g * g;
      const double mhat = ms[k][i] / bc1;
      const double vhat = vs[k][i] / bc2;
      ps[k][i] *= 1.0 - lr * cfg.weight_decay;
      ps[k][i] -= lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
  }
}

Trainer::Trainer(DetectorParams params, GaussianState gaussian, TrainConfig cfg, LossWeights weights)
    : params_(std::move(params)), gaussian_(std::move(gaussian)), cfg_(cfg), weights_(weights), adam_(params_) {
  cfg_.validate();
  gaussian_.validate();
  if (gaussian_.dim() != params_.embed_dim()) throw DomainError("gaussian width does not match the embedding width");
}

void Trainer::reset_optimizer() { adam_ = AdamW(params_); }

LossBreakdown Trainer::step(std::span<const TrainExample> batch, double lr) {
  if (batch.empty()) throw DomainError("train step needs a non-empty batch");

  std::vector<ForwardPass> passes;
  passes.reserve(batch.size());
  std::size_t total_slots = 0;
  for (const TrainExample& ex : batch) {
    passes.push_back(forward(params_, *ex.candidates));
    total_slots += passes.back().queries.rows();
  }

  // (i) estimate the density from every query embedding in the batch.
  Matrix all_queries(total_slots, params_.embed_dim());
  std::size_t row = 0;
  for (const ForwardPass& fp : passes) {
    std::copy(fp.queries.data().begin(), fp.queries.data().end(),
              all_queries.data().begin() + static_cast<long>(row * all_queries.cols()));
    row += fp.queries.rows();
  }
  gaussian_ = ema_update(gaussian_, all_queries);

  // (ii) maximize the likelihood of matched embeddings under the frozen estimate.
  DetectorParams grad = DetectorParams::zeros_like(params_);
  const double scale = 1.0 / static_cast<double>(batch.size());
  LossBreakdown mean;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const ForwardPass& fp = passes[s];
    const MatchResult match = detr_match(fp.class_probs, fp.boxes, batch[s].targets.targets, weights_.match);
    const LossBreakdown l = scene_loss(params_, gaussian_, fp, batch[s].targets, match, weights_, &grad, scale);
    mean.cls += l.cls * scale;
    mean.box += l.box * scale;
    mean.obj += l.obj * scale;
  }
  mean.total = joint_loss(mean.cls, mean.box, mean.obj, weights_.alpha);

  adam_.step(params_, grad, lr, cfg_);
  ++steps_;
  return mean;
}

TrainStepResult train_step(const DetectorParams& params, const GaussianState& gaussian,
                           std::span<const TrainExample> batch, const TrainConfig& cfg, const LossWeights& weights) {
  Trainer trainer(params, gaussian, cfg, weights);
  const LossBreakdown losses = trainer.step(batch, cfg.lr);
  return {trainer.params(), trainer.gaussian(), losses};
}

GradCheckResult gradient_check(const DetectorParams& params, const GaussianState& gaussian,
                               std::span<const TrainExample> batch, const LossWeights& weights,
                               const GradCheckOptions& opts) {
  if (batch.empty()) return {};
  const double scale = 1.0 / static_cast<double>(batch.size());
  std::vector<MatchResult> matches;
  DetectorParams analytic = DetectorParams::zeros_like(params);
  for (const TrainExample& ex : batch) {
    const ForwardPass fp = forward(params, *ex.candidates);
    matches.push_back(detr_match(fp.class_probs, fp.boxes, ex.targets.targets, weights.match));
    scene_loss(params, gaussian, fp, ex.targets, matches.back(), weights, &analytic, scale);
  }
  if (opts.corrupt) opts.corrupt(analytic);

  auto loss_at = [&](const DetectorParams& p) {
    double total = 0.0;
    for (std::size_t s = 0; s < batch.size(); ++s) {
      const ForwardPass fp = forward(p, *batch[s].candidates);
      total += scale * scene_loss(p, gaussian, fp, batch[s].targets, matches[s], weights, nullptr, 0.0).total;
    }
    return total;
  };

  DetectorParams probe = params;
  std::vector<std::span<double>> probe_tensors;
  std::vector<std::span<const double>> analytic_tensors;
  probe.visit([&](std::span<double> t) { probe_tensors.push_back(t); });
  std::as_const(analytic).visit([&](std::span<const double> t) { analytic_tensors.push_back(t); });

  GradCheckResult result;
  for (std::size_t k = 0; k < probe_tensors.size(); ++k) {
    for (std::size_t i = 0; i < probe_tensors[k].size(); ++i) {
      const double original = probe_tensors[k][i];
      probe_tensors[k][i] = original + opts.step;
      const double up = loss_at(probe);
      probe_tensors[k][i] = original - opts.step;
      const double down = loss_at(probe);
      probe_tensors[k][i] = original;
      const double numeric = (up - down) / (2.0 * opts.step);
      const double a = analytic_tensors[k][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      result.max_rel_error = std::max(result.max_rel_error, std::abs(a - numeric) / denom);
      result.max_abs_analytic = std::max(result.max_abs_analytic, std::abs(a));
      ++result.checked;
    }
  }
  return result;
}

std::vector<Prediction> score_slots(const DetectorParams& params, const GaussianState& gaussian,
                                    std::span<const Candidate> candidates, const ScoringOptions& opts) {
  if (!(opts.tau > 0.0)) throw ConfigError("objectness temperature must be positive");
  const ForwardPass fp = forward(params, candidates);
  const std::size_t K = params.num_classes();
  std::vector<Prediction> out;
  out.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    Prediction pr;
    pr.slot = i;
    pr.box = fp.boxes[i];
    pr.objectness = opts.use_objectness ? objectness_prob(gaussian, fp.queries.row(i), opts.tau) : 1.0;
    const auto p = fp.class_probs.row(i);
    pr.class_scores.resize(K);
    double max_cls = 0.0;
    std::size_t best = 0;
    for (std::size_t k = 0; k < K; ++k) {
      pr.class_scores[k] = p[k] * pr.objectness;
      if (p[k] > max_cls) {
        max_cls = p[k];
        best = k;
      }
    }
    pr.unknown_score = pr.objectness * (1.0 - max_cls);
    if (K > 0 && pr.class_scores[best] >= pr.unknown_score) {
      pr.label = static_cast<int>(best);
      pr.score = pr.class_scores[best];
    } else {
      pr.label = kUnknownLabel;
      pr.score = pr.unknown_score;
    }
    out.push_back(std::move(pr));
  }
  std::stable_sort(out.begin(), out.end(), [](const Prediction& a, const Prediction& b) { return a.score > b.score; });
  return out;
}

std::vector<Prediction> predict(const DetectorParams& params, const GaussianState& gaussian,
                                std::span<const Candidate> candidates, const ScoringOptions& opts,
                                double conf_threshold, std::size_t top_k) {
  std::vector<Prediction> all = score_slots(params, gaussian, candidates, opts);
  std::vector<Prediction> out;
  for (Prediction& p : all) {
    if (out.size() >= top_k) break;
    if (p.score >= conf_threshold) out.push_back(std::move(p));
  }
  return out;
}

}  // namespace prob
