#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prob/data.hpp"
#include "prob/metrics.hpp"
#include "prob/model.hpp"
#include "prob/objectness.hpp"

namespace prob {

struct ExemplarEntry {
  std::uint64_t scene_id = 0;
  std::size_t annotation_index = 0;  // index into the scene's full annotation list
  double objectness = 0.0;           // score at selection time
  int cls = 0;
  friend bool operator==(const ExemplarEntry&, const ExemplarEntry&) = default;
};

struct ExemplarSet {
  std::vector<ExemplarEntry> entries;
  int budget = 0;
  std::vector<std::string> warnings;

  std::vector<std::uint64_t> scene_ids() const;  // unique, ascending
  std::map<int, int> per_class_counts() const;
  /// Concatenates entries of `other` that are not already present.
  void merge(const ExemplarSet& other);

  friend bool operator==(const ExemplarSet&, const ExemplarSet&) = default;
};

void to_json(nlohmann::json& j, const ExemplarSet& s);
void from_json(const nlohmann::json& j, ExemplarSet& s);

/// Detector weights plus the objectness density; everything inference needs.
struct ModelState {
  DetectorParams params;
  GaussianState gaussian;
  int task = -1;           // last task trained
  std::int64_t steps = 0;  // optimizer steps taken so far
  friend bool operator==(const ModelState&, const ModelState&) = default;
};

struct LossConfig {
  MatchWeights match;
  double l1 = 5.0;
  double giou = 2.0;
  FocalParams focal;
  friend bool operator==(const LossConfig&, const LossConfig&) = default;
};

struct BenchmarkConfig {
  DatasetSpec dataset;
  DetectorConfig model;
  TrainConfig train;
  LossConfig loss;
  EvalSettings eval;
  AblationFlags ablation;
  int exemplars_per_class = 5;  // E: top-E and bottom-E per class
  int exemplar_budget = 40;     // scenes per selection
  std::vector<double> tau_list = {0.5, 0.8, 1.0, 1.3, 1.6, 2.0};
  std::vector<std::uint64_t> seeds = {0};

  /// Throws ConfigError.
  void validate() const;
  /// Copy with the dataset and training seeds set to `seed`.
  BenchmarkConfig with_seed(std::uint64_t seed) const;
  LossWeights loss_weights() const;
  EvalSettings effective_eval() const;

  friend bool operator==(const BenchmarkConfig&, const BenchmarkConfig&) = default;
};

inline constexpr int kConfigVersion = 1;

void to_json(nlohmann::json& j, const BenchmarkConfig& c);
/// Strict parse of a run configuration: requires a matching config_version
/// when present and rejects unknown keys. Missing sections keep defaults.
void from_json(const nlohmann::json& j, BenchmarkConfig& c);
BenchmarkConfig load_config(const std::string& path);

/// Per-scene training targets for task t's train view; labels become
/// classification-head indices.
SceneTargets make_train_targets(const Scene& scene, const DatasetSpec& spec, int t);

/// Indices of the `per_class` highest and `per_class` lowest scores (ties by
/// scene id, then position), best first. Everything when there are at most
/// 2 * per_class items.
std::vector<std::size_t> select_top_bottom(std::span<const double> score, std::span<const std::uint64_t> scene_ids,
                                           int per_class);

/// Scores each labeled instance of task t's classes by the objectness of its
/// matched query; keeps the E best and E worst per class (ties by scene id),
/// or 2E uniformly random ones when `random`. Scenes beyond `budget` are
/// sub-sampled uniformly with `seed`.
ExemplarSet select_exemplars(const ModelState& state, std::span<const Scene> train_scenes, const DatasetSpec& spec,
                             int t, int per_class, int budget, bool random, std::uint64_t seed, double tau,
                             const MatchWeights& match = {});

/// Builds detections and ground truths for task t's test view.
EvalInputs collect_eval_inputs(const ModelState& state, std::span<const Scene> test_scenes, const DatasetSpec& spec,
                               int t, const EvalSettings& settings);

EvalReport evaluate_model(const ModelState& state, std::span<const Scene> test_scenes, const DatasetSpec& spec, int t,
                          const EvalSettings& settings);

struct TaskResult {
  ModelState state;
  ExemplarSet exemplars;
  EvalReport report;
  std::vector<LossBreakdown> epoch_losses;  // mean per epoch, training then finetuning
  bool finetuned = false;
};

/// Trains on task t, finetunes on exemplars for t > 0, evaluates, and
/// returns the updated exemplar memory. Throws ProtocolError when t > 0 and
/// no predecessor state is given.
TaskResult run_task(const ModelState* previous, const ExemplarSet* previous_exemplars, const Dataset& dataset, int t,
                    const BenchmarkConfig& cfg);

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<EvalReport> reports;
  ModelState final_state;
};

struct SummaryRow {
  int task = 0;
  std::string seed;  // seed value, "mean" or "std"
  std::optional<double> map_prev, map_current, map_both, u_recall, a_ose, wi;
  double tau = 0.0;
};

struct BenchmarkResult {
  std::vector<SeedRun> runs;
  std::vector<SummaryRow> summary;
};

/// Full schedule for one seed. Errors propagate with the task index attached.
SeedRun run_seed(const BenchmarkConfig& cfg, std::uint64_t seed);
/// Every configured seed; with more than one seed the summary also carries
/// mean and sample-standard-deviation rows per task.
BenchmarkResult run_benchmark(const BenchmarkConfig& cfg);

std::vector<SummaryRow> summarize(std::span<const SeedRun> runs);
/// Columns: task,map_prev,map_current,map_both,u_recall,a_ose,wi,tau,seed.
std::string summary_csv(std::span<const SummaryRow> rows);

/// Re-scores a trained model at every tau (no retraining). Throws ConfigError
/// on non-positive entries.
std::vector<EvalReport> temperature_sweep(const ModelState& state, std::span<const Scene> test_scenes,
                                          const DatasetSpec& spec, int t, const EvalSettings& base,
                                          std::span<const double> tau_list);

/// One row per tau: tau,map_prev,map_current,map_both,u_recall,a_ose,wi,num_detections.
std::string sweep_csv(std::span<const EvalReport> reports);

}  // namespace prob
