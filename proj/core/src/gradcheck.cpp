#include "prob/gradcheck.hpp"

#include <algorithm>

#include "prob/rng.hpp"

namespace prob {

namespace {

Box random_box(Rng& rng) {
  const double w = uniform(rng, 0.1, 0.4), h = uniform(rng, 0.1, 0.4);
  return {uniform(rng, 0.1 + w / 2, 0.9 - w / 2), uniform(rng, 0.1 + h / 2, 0.9 - h / 2), w, h};
}

}  // namespace

GradCheckProblem make_gradcheck_problem(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x6AD));
  DetectorConfig cfg;
  cfg.feature_dim = uniform_int(rng, 3, 8);
  cfg.hidden_dim = uniform_int(rng, 3, 8);
  cfg.embed_dim = uniform_int(rng, 2, 8);
  cfg.num_queries = uniform_int(rng, 3, 6);
  const int classes = uniform_int(rng, 1, 4);

  GradCheckProblem prob;
  prob.params = DetectorParams::init(cfg, classes, seed);
  // Non-trivial box head and class biases so every term has curvature.
  for (double& x : prob.params.wb.data()) x = uniform(rng, -0.5, 0.5);
  for (double& x : prob.params.bc) x = uniform(rng, -1.0, 1.0);
  for (double& x : prob.params.b1) x = uniform(rng, -0.2, 0.2);

  prob.gaussian = GaussianState::initial(static_cast<std::size_t>(cfg.embed_dim));
  for (double& m : prob.gaussian.mu) m = uniform(rng, -0.5, 0.5);
  for (double& s : prob.gaussian.sigma) s = uniform(rng, 0.5, 2.0);
  prob.weights.alpha = 0.1;

  for (int s = 0; s < 2; ++s) {
    std::vector<Candidate> cands;
    for (int i = 0; i < cfg.num_queries; ++i) {
      Candidate c;
      c.feature.resize(static_cast<std::size_t>(cfg.feature_dim));
      for (double& x : c.feature) x = gaussian(rng);
      c.box = random_box(rng);
      cands.push_back(std::move(c));
    }
    prob.scenes.push_back(std::move(cands));
  }
  for (std::size_t s = 0; s < prob.scenes.size(); ++s) {
    TrainExample ex;
    ex.candidates = &prob.scenes[s];
    const int n_targets = uniform_int(rng, 1, std::min(3, cfg.num_queries));
    for (int k = 0; k < n_targets; ++k) {
      // Near a proposal so the matched box terms are in their smooth regime.
      const Box& p = prob.scenes[s][static_cast<std::size_t>(k)].box;
      const Box t{p.cx + uniform(rng, -0.02, 0.02), p.cy + uniform(rng, -0.02, 0.02),
                  p.w + uniform(rng, -0.02, 0.02), p.h + uniform(rng, -0.02, 0.02)};
      ex.targets.targets.push_back({uniform_int(rng, 0, classes - 1), t});
    }
    prob.batch.push_back(std::move(ex));
  }
  return prob;
}

}  // namespace prob
