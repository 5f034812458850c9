#include <benchmark/benchmark.h>

#include "prob/data.hpp"
#include "prob/matching.hpp"
#include "prob/metrics.hpp"
#include "prob/model.hpp"
#include "prob/protocol.hpp"
#include "prob/rng.hpp"

using namespace prob;

namespace {

void BM_Hungarian(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  Matrix cost(n, n);
  for (double& v : cost.data()) v = uniform(rng, 0, 10);
  for (auto _ : state) benchmark::DoNotOptimize(hungarian(cost));
}
BENCHMARK(BM_Hungarian)->Arg(6)->Arg(16)->Arg(64);

struct Fixture {
  BenchmarkConfig cfg;
  Dataset data;
  DetectorParams params;
  GaussianState gaussian;
  std::vector<TrainExample> batch;

  Fixture() {
    cfg.dataset.train_scenes = 20;
    cfg.dataset.test_scenes = 20;
    data = generate_dataset(cfg.dataset);
    params = DetectorParams::init(cfg.model, 4, 0);
    gaussian = GaussianState::initial(static_cast<std::size_t>(cfg.model.embed_dim));
    const auto& scenes = data.split(0, Split::kTrain);
    for (int i = 0; i < cfg.train.batch_size; ++i) {
      batch.push_back({&scenes[static_cast<std::size_t>(i)].candidates, make_train_targets(scenes[i], data.spec, 0)});
    }
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_Forward(benchmark::State& state) {
  const Fixture& f = fixture();
  const auto& cands = f.data.split(0, Split::kTrain).front().candidates;
  for (auto _ : state) benchmark::DoNotOptimize(forward(f.params, cands));
}
BENCHMARK(BM_Forward);

void BM_TrainStep(benchmark::State& state) {
  const Fixture& f = fixture();
  Trainer trainer(f.params, f.gaussian, f.cfg.train, f.cfg.loss_weights());
  for (auto _ : state) benchmark::DoNotOptimize(trainer.step(f.batch, f.cfg.train.lr));
}
BENCHMARK(BM_TrainStep);

void BM_Evaluate(benchmark::State& state) {
  const Fixture& f = fixture();
  const ModelState ms{f.params, f.gaussian, 0, 0};
  const auto& test = f.data.split(0, Split::kTest);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_model(ms, test, f.data.spec, 0, f.cfg.eval));
}
BENCHMARK(BM_Evaluate);

void BM_AveragePrecision(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  std::vector<GroundTruth> gts;
  std::vector<Detection> dets;
  for (std::size_t i = 0; i < n; ++i) {
    const Box b{uniform(rng, 0.3, 0.7), uniform(rng, 0.3, 0.7), uniform(rng, 0.1, 0.3), uniform(rng, 0.1, 0.3)};
    gts.push_back({i / 4, 0, b});
    dets.push_back({i / 4, 0, uniform(rng, 0, 1), Box{b.cx + uniform(rng, -0.05, 0.05), b.cy, b.w, b.h}});
    dets.push_back({i / 4, 0, uniform(rng, 0, 1), Box{uniform(rng, 0.3, 0.7), b.cy, b.w, b.h}});
  }
  for (auto _ : state) benchmark::DoNotOptimize(average_precision(dets, gts));
}
BENCHMARK(BM_AveragePrecision)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
