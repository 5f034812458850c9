#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "prob/error.hpp"
#include "prob/protocol.hpp"

using namespace prob;

namespace {

BenchmarkConfig tiny_config(std::uint64_t seed = 0) {
  BenchmarkConfig c;
  c.dataset.train_scenes = 24;
  c.dataset.test_scenes = 12;
  c.train.epochs = 3;
  c.train.lr_drop_epoch = 2;
  c.train.finetune_epochs = 2;
  c.exemplars_per_class = 2;
  c.exemplar_budget = 10;
  return c.with_seed(seed);
}

struct TinyRun {
  BenchmarkConfig cfg = tiny_config();
  Dataset dataset = generate_dataset(cfg.dataset);
  TaskResult first = run_task(nullptr, nullptr, dataset, 0, cfg);
};

const TinyRun& shared_run() {
  static const TinyRun run;
  return run;
}

}  // namespace

TEST(SelectTopBottom, KeepsExtremes) {
  const std::vector<double> score{0.9, 0.1, 0.7, 0.3, 0.8, 0.2};
  const std::vector<std::uint64_t> ids{0, 1, 2, 3, 4, 5};
  const auto picked = select_top_bottom(score, ids, 2);
  std::vector<double> values;
  for (std::size_t i : picked) values.push_back(score[i]);
  EXPECT_EQ(values, (std::vector<double>{0.9, 0.8, 0.2, 0.1}));
}

TEST(SelectTopBottom, SmallClassKeepsEverything) {
  const std::vector<double> score{0.5, 0.4, 0.6};
  const std::vector<std::uint64_t> ids{7, 8, 9};
  EXPECT_EQ(select_top_bottom(score, ids, 2).size(), 3u);
}

TEST(SelectTopBottom, TiesBrokenBySceneId) {
  const std::vector<double> score{0.5, 0.5, 0.5, 0.5, 0.5};
  const std::vector<std::uint64_t> ids{9, 3, 7, 1, 5};
  EXPECT_EQ(select_top_bottom(score, ids, 1), (std::vector<std::size_t>{3, 0}));
}

TEST(Exemplars, DeterministicAndFromCurrentTask) {
  const TinyRun& run = shared_run();
  const auto& scenes = run.dataset.split(0, Split::kTrain);
  const auto again = select_exemplars(run.first.state, scenes, run.dataset.spec, 0, 2, 10, false, 0, 1.3);
  EXPECT_EQ(again, select_exemplars(run.first.state, scenes, run.dataset.spec, 0, 2, 10, false, 0, 1.3));
  ASSERT_FALSE(again.entries.empty());
  const auto current = run.dataset.spec.current_classes(0);
  const std::set<int> allowed(current.begin(), current.end());
  for (const ExemplarEntry& e : again.entries) EXPECT_TRUE(allowed.count(e.cls)) << e.cls;
  for (const auto& [cls, n] : again.per_class_counts()) EXPECT_LE(n, 4);
  EXPECT_LE(again.scene_ids().size(), 10u);

  const auto random = select_exemplars(run.first.state, scenes, run.dataset.spec, 0, 2, 10, true, 0, 1.3);
  EXPECT_EQ(random, select_exemplars(run.first.state, scenes, run.dataset.spec, 0, 2, 10, true, 0, 1.3));
  for (const ExemplarEntry& e : random.entries) EXPECT_TRUE(allowed.count(e.cls));
}

TEST(Exemplars, MergeSkipsDuplicates) {
  ExemplarSet a, b;
  a.entries = {{1, 0, 0.5, 0}, {2, 1, 0.4, 1}};
  b.entries = {{2, 1, 0.4, 1}, {3, 0, 0.2, 4}};
  a.merge(b);
  EXPECT_EQ(a.entries.size(), 3u);
  EXPECT_EQ(a.scene_ids(), (std::vector<std::uint64_t>{1, 2, 3}));
  const nlohmann::json j = a;
  EXPECT_EQ(j.get<ExemplarSet>(), a);
}

TEST(RunTask, FirstTaskHasNoPreviousPartition) {
  const TinyRun& run = shared_run();
  EXPECT_EQ(run.first.report.task, 0);
  EXPECT_FALSE(run.first.report.map_prev.has_value());
  EXPECT_TRUE(run.first.report.map_current.has_value());
  EXPECT_EQ(run.first.state.task, 0);
  EXPECT_FALSE(run.first.finetuned);
  EXPECT_EQ(run.first.state.params.num_classes(), 4u);
}

TEST(RunTask, SecondTaskGrowsHeadAndFinetunes) {
  const TinyRun& run = shared_run();
  const TaskResult second = run_task(&run.first.state, &run.first.exemplars, run.dataset, 1, run.cfg);
  EXPECT_EQ(second.state.params.num_classes(), 6u);
  EXPECT_TRUE(second.finetuned);
  EXPECT_TRUE(second.report.map_prev.has_value());
  EXPECT_GT(second.state.steps, run.first.state.steps);
  // Memory keeps the first task's exemplars.
  for (const ExemplarEntry& e : run.first.exemplars.entries) {
    EXPECT_NE(std::find(second.exemplars.entries.begin(), second.exemplars.entries.end(), e),
              second.exemplars.entries.end());
  }
}

TEST(RunTask, ProtocolViolations) {
  const TinyRun& run = shared_run();
  EXPECT_THROW(run_task(nullptr, nullptr, run.dataset, 1, run.cfg), ProtocolError);
  ModelState stale = run.first.state;
  stale.task = 5;
  EXPECT_THROW(run_task(&stale, nullptr, run.dataset, 1, run.cfg), ProtocolError);
  EXPECT_THROW(run_task(nullptr, nullptr, run.dataset, 2, run.cfg), DomainError);
}

TEST(RunTask, ReportEchoesAblationFlags) {
  BenchmarkConfig cfg = shared_run().cfg;
  cfg.ablation.disable_objectness_scoring = true;
  cfg.ablation.random_exemplars = true;
  const TaskResult r = run_task(nullptr, nullptr, shared_run().dataset, 0, cfg);
  EXPECT_EQ(r.report.ablation, cfg.ablation);
  EXPECT_FALSE(r.report.settings.use_objectness);
}

TEST(RunTask, Deterministic) {
  const TinyRun& run = shared_run();
  const TaskResult again = run_task(nullptr, nullptr, run.dataset, 0, run.cfg);
  EXPECT_EQ(again.state, run.first.state);
  EXPECT_EQ(again.report, run.first.report);
  EXPECT_EQ(again.exemplars, run.first.exemplars);
}

TEST(Summary, MeanAndSampleStd) {
  std::vector<SeedRun> runs(2);
  for (int s = 0; s < 2; ++s) {
    runs[s].seed = static_cast<std::uint64_t>(s + 10);
    EvalReport r;
    r.task = 0;
    r.map_current = 0.2 + 0.2 * s;
    r.map_both = r.map_current;
    r.u_recall = s == 0 ? std::optional<double>{0.5} : std::nullopt;
    runs[s].reports.push_back(r);
  }
  const auto rows = summarize(runs);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].seed, "10");
  EXPECT_EQ(rows[2].seed, "mean");
  EXPECT_EQ(rows[3].seed, "std");
  EXPECT_NEAR(*rows[2].map_current, 0.3, 1e-12);
  EXPECT_NEAR(*rows[3].map_current, std::sqrt(0.02), 1e-12);
  EXPECT_FALSE(rows[2].map_prev.has_value());
  const std::string csv = summary_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "task,map_prev,map_current,map_both,u_recall,a_ose,wi,tau,seed");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

TEST(Sweep, StandardTauMatchesPlainEvaluation) {
  const TinyRun& run = shared_run();
  const auto& test = run.dataset.split(0, Split::kTest);
  const EvalSettings base = run.cfg.effective_eval();
  const std::vector<double> taus{1.3};
  const auto sweep = temperature_sweep(run.first.state, test, run.dataset.spec, 0, base, taus);
  ASSERT_EQ(sweep.size(), 1u);
  EXPECT_EQ(sweep[0], evaluate_model(run.first.state, test, run.dataset.spec, 0, base));
  const std::vector<double> bad{1.0, 0.0};
  EXPECT_THROW(temperature_sweep(run.first.state, test, run.dataset.spec, 0, base, bad), ConfigError);
}

TEST(Sweep, DetectionCountNonIncreasingInTau) {
  const TinyRun& run = shared_run();
  EvalSettings base = run.cfg.effective_eval();
  base.det_threshold = 1e-3;
  base.top_k = 16;
  const std::vector<double> taus{0.1, 0.3, 0.5, 0.8, 1.3, 2.0, 4.0, 8.0};
  const auto sweep =
      temperature_sweep(run.first.state, run.dataset.split(0, Split::kTest), run.dataset.spec, 0, base, taus);
  for (std::size_t i = 1; i < sweep.size(); ++i) EXPECT_LE(sweep[i].num_detections, sweep[i - 1].num_detections);
  const std::string csv = sweep_csv(sweep);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), static_cast<long>(taus.size()) + 1);
}

TEST(BenchmarkConfig, StrictJson) {
  const BenchmarkConfig c = tiny_config(3);
  const nlohmann::json j = c;
  EXPECT_EQ(j.get<BenchmarkConfig>(), c);
  nlohmann::json wrong = j;
  wrong["config_version"] = 2;
  EXPECT_THROW(wrong.get<BenchmarkConfig>(), ConfigError);
  nlohmann::json extra = j;
  extra["train"]["learning_rate"] = 1;
  EXPECT_THROW(extra.get<BenchmarkConfig>(), ConfigError);
  BenchmarkConfig bad = c;
  bad.tau_list = {1.0, -1.0};
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(BenchmarkConfig, AblationControlsLossWeightAndScoring) {
  BenchmarkConfig c;
  EXPECT_DOUBLE_EQ(c.loss_weights().alpha, c.train.alpha);
  c.ablation.disable_objectness_loss = true;
  EXPECT_EQ(c.loss_weights().alpha, 0.0);
  EXPECT_TRUE(c.effective_eval().use_objectness);
  c.ablation.disable_objectness_scoring = true;
  EXPECT_FALSE(c.effective_eval().use_objectness);
}
