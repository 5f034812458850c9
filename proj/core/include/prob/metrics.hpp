#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "prob/data.hpp"
#include "prob/geometry.hpp"

namespace prob {

struct Detection {
  std::uint64_t scene_id = 0;
  int label = kUnknownLabel;  // class index or kUnknownLabel
  double score = 0.0;
  Box box;
};

struct GroundTruth {
  std::uint64_t scene_id = 0;
  int label = kUnknownLabel;
  Box box;
};

/// Stable order used by every metric: score descending, then scene_id, then
/// input position.
std::vector<std::size_t> ranking_order(std::span<const Detection> dets);

/// Greedy matching in ranking order: each detection takes the highest-IoU
/// still-unmatched ground truth of its own scene with IoU >= iou_thresh.
/// Returns, per detection (input order), the matched ground-truth index or -1.
std::vector<long> greedy_match(std::span<const Detection> dets, std::span<const GroundTruth> gts, double iou_thresh);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
  friend bool operator==(const PrPoint&, const PrPoint&) = default;
};

/// Raw precision/recall after each ranked detection of a single class.
std::vector<PrPoint> precision_recall(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                                      double iou_thresh = 0.5);

/// All-point interpolated AP of a single class; nullopt without ground truth.
std::optional<double> average_precision(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                                        double iou_thresh = 0.5);

struct PartitionedMap {
  std::optional<double> prev;
  std::optional<double> current;
  std::optional<double> both;
};

/// Unweighted means of per-class APs inside each partition. Classes whose AP
/// is null are skipped; an empty partition gives null.
PartitionedMap owod_map(const std::map<int, std::optional<double>>& per_class_ap, std::span<const int> prev_classes,
                        std::span<const int> current_classes);

/// Fraction of unknown ground truths covered by unknown-labeled detections.
std::optional<double> u_recall(std::span<const Detection> dets, std::span<const GroundTruth> unknown_gts,
                               double iou_thresh = 0.5);

/// Known-labeled detections scoring at least conf_threshold that greedily
/// match an unknown ground truth (each ground truth counted once).
long a_ose(std::span<const Detection> dets, std::span<const GroundTruth> unknown_gts, double conf_threshold,
           double iou_thresh = 0.5);

struct WildernessCounts {
  long tp = 0;
  long fp_pure = 0;
  long fp_unknown = 0;
};

/// FP_unk / (TP + FP_pure); nullopt when the denominator is zero.
std::optional<double> wilderness_impact_from_counts(const WildernessCounts& c);

/// Walks known-labeled detections in ranking order and stops at the first
/// cutoff where known recall reaches `recall_level`. Null when that recall is
/// never reached or there are no known ground truths.
std::optional<double> wilderness_impact(std::span<const Detection> dets, std::span<const GroundTruth> known_gts,
                                        std::span<const GroundTruth> unknown_gts, double recall_level = 0.8,
                                        double iou_thresh = 0.5);

struct EvalSettings {
  double tau = 1.3;
  double det_threshold = 0.0;    // minimum score for a slot to become a detection
  int top_k = 10;                // detections kept per scene
  double aose_threshold = 0.5;    // known-labeled confidence counted by A-OSE
  double wi_recall_level = 0.8;
  double iou_thresh = 0.5;
  bool use_objectness = true;

  void validate() const;
  friend bool operator==(const EvalSettings&, const EvalSettings&) = default;
};

void to_json(nlohmann::json& j, const EvalSettings& s);
void from_json(const nlohmann::json& j, EvalSettings& s);

struct AblationFlags {
  bool disable_objectness_loss = false;     // alpha = 0 during training
  bool random_exemplars = false;            // exemplars drawn uniformly
  bool disable_objectness_scoring = false;  // f_obj = 1 at inference
  bool disable_replay = false;              // no exemplar finetuning
  friend bool operator==(const AblationFlags&, const AblationFlags&) = default;
};

void to_json(nlohmann::json& j, const AblationFlags& f);
void from_json(const nlohmann::json& j, AblationFlags& f);

struct EvalReport {
  int task = 0;
  std::uint64_t seed = 0;
  std::optional<double> map_prev;
  std::optional<double> map_current;
  std::optional<double> map_both;
  std::optional<double> u_recall;
  long a_ose = 0;
  std::optional<double> wi;
  std::map<int, std::optional<double>> per_class_ap;
  std::map<int, std::vector<PrPoint>> pr_curves;  // recall-increasing points
  long num_known_gts = 0;
  long num_unknown_gts = 0;
  long num_detections = 0;
  EvalSettings settings;
  AblationFlags ablation;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

inline constexpr int kReportSchemaVersion = 1;

void to_json(nlohmann::json& j, const EvalReport& r);
void from_json(const nlohmann::json& j, EvalReport& r);

/// Everything the evaluator needs from one task's test view.
struct EvalInputs {
  std::vector<Detection> detections;       // ranked, thresholded, top-k per scene
  std::vector<Detection> aose_candidates;  // every slot's best label, untruncated
  std::vector<GroundTruth> gts;            // known labels and kUnknownLabel
};

/// Full OWOD report for task t over the given detections.
EvalReport evaluate(const EvalInputs& inputs, const DatasetSpec& spec, int t, const EvalSettings& settings);

}  // namespace prob
