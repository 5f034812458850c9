#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prob/geometry.hpp"
#include "prob/matrix.hpp"

namespace prob {

/// Label carried by annotations of classes that are not known at the viewed task.
inline constexpr int kUnknownLabel = -1;

enum class Split { kTrain, kTest };

const char* to_string(Split s);
Split split_from_string(const std::string& s);

struct Candidate {
  Vec feature;
  Box box;  // proposal box
  friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct Annotation {
  int label = 0;  // class index, or kUnknownLabel inside a task view
  Box box;
  friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct Scene {
  std::uint64_t scene_id = 0;
  int task = 0;
  Split split = Split::kTrain;
  std::vector<Candidate> candidates;
  std::vector<Annotation> annotations;
  friend bool operator==(const Scene&, const Scene&) = default;
};

struct DatasetSpec {
  int num_classes = 8;
  std::vector<std::vector<int>> task_schedule = {{0, 1, 2, 3}, {4, 5}};
  std::vector<int> forever_unknown = {6, 7};
  int train_scenes = 500;  // per task
  int test_scenes = 200;   // per task
  int feature_dim = 12;
  int num_queries = 16;
  int min_objects = 1;
  int max_objects = 6;
  double noise_sigma = 0.1;
  double background_radius = 2.0;
  double min_prototype_angle_deg = 60.0;
  std::uint64_t seed = 0;

  /// Throws ConfigError on schedule/class inconsistencies.
  void validate() const;
  int num_tasks() const { return static_cast<int>(task_schedule.size()); }
  /// Task index at which `cls` is introduced, or -1 when never introduced.
  int task_of_class(int cls) const;
  /// Classes known after task t, in introduction order. Position in this list
  /// is the class's classification-head index.
  std::vector<int> known_classes(int t) const;
  /// Classes introduced strictly before task t.
  std::vector<int> previous_classes(int t) const;
  const std::vector<int>& current_classes(int t) const;

  friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;
};

void to_json(nlohmann::json& j, const DatasetSpec& s);
/// Strict: unknown keys raise ConfigError; missing keys keep their defaults.
void from_json(const nlohmann::json& j, DatasetSpec& s);

struct Dataset {
  DatasetSpec spec;
  Matrix prototypes;  // num_classes x feature_dim, unit rows
  std::vector<std::vector<Scene>> train;  // [task][scene]
  std::vector<std::vector<Scene>> test;

  const std::vector<Scene>& split(int t, Split s) const;
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Deterministic synthetic open-world dataset. Every scene is generated from
/// its own stream seeded by mix_seed(spec.seed, scene_id).
Dataset generate_dataset(const DatasetSpec& spec);

/// Relabels scenes for task t. Train: keep only classes introduced at t.
/// Test: keep classes known at t, relabel every other annotation as
/// kUnknownLabel. Idempotent. Throws DomainError for an invalid task index.
std::vector<Scene> task_view(std::span<const Scene> scenes, const DatasetSpec& spec, int t, Split split);
std::vector<Scene> task_view(const Dataset& dataset, int t, Split split);

/// True when an annotation of class `cls` carries its label at task t.
bool is_visible_at_task(const DatasetSpec& spec, int cls, int t, Split split);

inline constexpr int kDatasetSchemaVersion = 1;

/// One JSON record per line: a header line (spec + prototypes), then one line
/// per scene.
void write_dataset(std::ostream& out, const Dataset& dataset);
/// Throws LoadError naming the offending line number.
Dataset read_dataset(std::istream& in);

void save_dataset(const std::string& path, const Dataset& dataset);
Dataset load_dataset(const std::string& path);

nlohmann::json scene_to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::json& j);

}  // namespace prob
