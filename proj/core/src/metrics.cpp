#include "prob/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <unordered_map>

#include "prob/error.hpp"
#include "prob/json_util.hpp"

namespace prob {

using nlohmann::json;

std::vector<std::size_t> ranking_order(std::span<const Detection> dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
    return dets[a].scene_id < dets[b].scene_id;
  });
  return order;
}

namespace {

using SceneIndex = std::unordered_map<std::uint64_t, std::vector<std::size_t>>;

SceneIndex index_by_scene(std::span<const GroundTruth> gts) {
  SceneIndex idx;
  for (std::size_t g = 0; g < gts.size(); ++g) idx[gts[g].scene_id].push_back(g);
  return idx;
}

// Highest-IoU unmatched ground truth of the detection's scene, or -1.
long best_unmatched(const Detection& d, std::span<const GroundTruth> gts, const SceneIndex& idx,
                    const std::vector<char>& taken, double iou_thresh) {
  auto it = idx.find(d.scene_id);
  if (it == idx.end()) return -1;
  long best = -1;
  double best_iou = -1.0;
  for (std::size_t g : it->second) {
    if (taken[g]) continue;
    const double iou = box_iou(d.box, gts[g].box);
    if (iou >= iou_thresh && iou > best_iou) {
      best_iou = iou;
      best = static_cast<long>(g);
    }
  }
  return best;
}

}  // namespace

std::vector<long> greedy_match(std::span<const Detection> dets, std::span<const GroundTruth> gts, double iou_thresh) {
  const SceneIndex idx = index_by_scene(gts);
  std::vector<char> taken(gts.size(), 0);
  std::vector<long> out(dets.size(), -1);
  for (std::size_t d : ranking_order(dets)) {
    const long g = best_unmatched(dets[d], gts, idx, taken, iou_thresh);
    if (g >= 0) {
      taken[static_cast<std::size_t>(g)] = 1;
      out[d] = g;
    }
  }
  return out;
}

std::vector<PrPoint> precision_recall(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                                      double iou_thresh) {
  std::vector<PrPoint> curve;
  if (gts.empty()) return curve;
  const std::vector<long> match = greedy_match(dets, gts, iou_thresh);
  long tp = 0, seen = 0;
  for (std::size_t d : ranking_order(dets)) {
    ++seen;
    if (match[d] >= 0) ++tp;
    curve.push_back({static_cast<double>(tp) / static_cast<double>(gts.size()),
                     static_cast<double>(tp) / static_cast<double>(seen)});
  }
  return curve;
}

std::optional<double> average_precision(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                                        double iou_thresh) {
  if (gts.empty()) return std::nullopt;
  const std::vector<PrPoint> curve = precision_recall(dets, gts, iou_thresh);
  // Precision envelope from the right, then sum rectangle areas at recall steps.
  std::vector<double> envelope(curve.size());
  double running = 0.0;
  for (std::size_t i = curve.size(); i-- > 0;) {
    running = std::max(running, curve[i].precision);
    envelope[i] = running;
  }
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (curve[i].recall > prev_recall) {
      ap += (curve[i].recall - prev_recall) * envelope[i];
      prev_recall = curve[i].recall;
    }
  }
  return ap;
}

PartitionedMap owod_map(const std::map<int, std::optional<double>>& per_class_ap, std::span<const int> prev_classes,
                        std::span<const int> current_classes) {
  auto mean_of = [&](std::span<const int> a, std::span<const int> b) -> std::optional<double> {
    double sum = 0.0;
    int n = 0;
    for (auto group : {a, b}) {
      for (int c : group) {
        auto it = per_class_ap.find(c);
        if (it != per_class_ap.end() && it->second) {
          sum += *it->second;
          ++n;
        }
      }
    }
    if (n == 0) return std::nullopt;
    return sum / n;
  };
  PartitionedMap out;
  out.prev = mean_of(prev_classes, {});
  out.current = mean_of(current_classes, {});
  out.both = mean_of(prev_classes, current_classes);
  return out;
}

std::optional<double> u_recall(std::span<const Detection> dets, std::span<const GroundTruth> unknown_gts,
                               double iou_thresh) {
  if (unknown_gts.empty()) return std::nullopt;
  std::vector<Detection> unknown;
  for (const Detection& d : dets) {
    if (d.label == kUnknownLabel) unknown.push_back(d);
  }
  const std::vector<long> match = greedy_match(unknown, unknown_gts, iou_thresh);
  const auto hits = std::count_if(match.begin(), match.end(), [](long g) { return g >= 0; });
  return static_cast<double>(hits) / static_cast<double>(unknown_gts.size());
}

long a_ose(std::span<const Detection> dets, std::span<const GroundTruth> unknown_gts, double conf_threshold,
           double iou_thresh) {
  std::vector<Detection> known;
  for (const Detection& d : dets) {
    if (d.label != kUnknownLabel && d.score >= conf_threshold) known.push_back(d);
  }
  const std::vector<long> match = greedy_match(known, unknown_gts, iou_thresh);
  return static_cast<long>(std::count_if(match.begin(), match.end(), [](long g) { return g >= 0; }));
}

std::optional<double> wilderness_impact_from_counts(const WildernessCounts& c) {
  const long denom = c.tp + c.fp_pure;
  if (denom == 0) return std::nullopt;
  return static_cast<double>(c.fp_unknown) / static_cast<double>(denom);
}

std::optional<double> wilderness_impact(std::span<const Detection> dets, std::span<const GroundTruth> known_gts,
                                        std::span<const GroundTruth> unknown_gts, double recall_level,
                                        double iou_thresh) {
  if (known_gts.empty()) return std::nullopt;
  std::vector<Detection> known;
  for (const Detection& d : dets) {
    if (d.label != kUnknownLabel) known.push_back(d);
  }
  const SceneIndex known_idx = index_by_scene(known_gts);
  const SceneIndex unknown_idx = index_by_scene(unknown_gts);
  std::vector<char> known_taken(known_gts.size(), 0), unknown_taken(unknown_gts.size(), 0);
  WildernessCounts counts;
  const double total = static_cast<double>(known_gts.size());
  for (std::size_t di : ranking_order(known)) {
    const Detection& d = known[di];
    // Same-class ground truths only.
    long best = -1;
    double best_iou = -1.0;
    if (auto it = known_idx.find(d.scene_id); it != known_idx.end()) {
      for (std::size_t g : it->second) {
        if (known_taken[g] || known_gts[g].label != d.label) continue;
        const double iou = box_iou(d.box, known_gts[g].box);
        if (iou >= iou_thresh && iou > best_iou) {
          best_iou = iou;
          best = static_cast<long>(g);
        }
      }
    }
    if (best >= 0) {
      known_taken[static_cast<std::size_t>(best)] = 1;
      ++counts.tp;
    } else {
      const long u = best_unmatched(d, unknown_gts, unknown_idx, unknown_taken, iou_thresh);
      if (u >= 0) {
        unknown_taken[static_cast<std::size_t>(u)] = 1;
        ++counts.fp_unknown;
      } else {
        ++counts.fp_pure;
      }
    }
    if (static_cast<double>(counts.tp) / total >= recall_level) return wilderness_impact_from_counts(counts);
  }
  return std::nullopt;
}

void EvalSettings::validate() const {
  if (!(tau > 0.0)) throw ConfigError("eval.tau must be positive");
  if (top_k < 1) throw ConfigError("eval.top_k must be at least 1");
  if (!(det_threshold >= 0.0 && det_threshold <= 1.0)) throw ConfigError("eval.det_threshold must lie in [0, 1]");
  if (!(aose_threshold >= 0.0 && aose_threshold <= 1.0)) throw ConfigError("eval.aose_threshold must lie in [0, 1]");
  if (!(wi_recall_level > 0.0 && wi_recall_level <= 1.0)) throw ConfigError("eval.wi_recall_level must lie in (0, 1]");
  if (!(iou_thresh > 0.0 && iou_thresh <= 1.0)) throw ConfigError("eval.iou_thresh must lie in (0, 1]");
}

void to_json(json& j, const EvalSettings& s) {
  j = json{{"tau", s.tau},
           {"det_threshold", s.det_threshold},
           {"top_k", s.top_k},
           {"aose_threshold", s.aose_threshold},
           {"wi_recall_level", s.wi_recall_level},
           {"iou_thresh", s.iou_thresh},
           {"use_objectness", s.use_objectness}};
}

void from_json(const json& j, EvalSettings& s) {
  using namespace json_util;
  constexpr std::string_view where = "eval";
  require_keys_subset(j, {"tau", "det_threshold", "top_k", "aose_threshold", "wi_recall_level", "iou_thresh",
                          "use_objectness"},
                      where);
  read_optional(j, "tau", s.tau, where);
  read_optional(j, "det_threshold", s.det_threshold, where);
  read_optional(j, "top_k", s.top_k, where);
  read_optional(j, "aose_threshold", s.aose_threshold, where);
  read_optional(j, "wi_recall_level", s.wi_recall_level, where);
  read_optional(j, "iou_thresh", s.iou_thresh, where);
  read_optional(j, "use_objectness", s.use_objectness, where);
}

void to_json(json& j, const AblationFlags& f) {
  j = json{{"disable_objectness_loss", f.disable_objectness_loss},
           {"random_exemplars", f.random_exemplars},
           {"disable_objectness_scoring", f.disable_objectness_scoring},
           {"disable_replay", f.disable_replay}};
}

void from_json(const json& j, AblationFlags& f) {
  using namespace json_util;
  constexpr std::string_view where = "ablation";
  require_keys_subset(j, {"disable_objectness_loss", "random_exemplars", "disable_objectness_scoring", "disable_replay"},
                      where);
  read_optional(j, "disable_objectness_loss", f.disable_objectness_loss, where);
  read_optional(j, "random_exemplars", f.random_exemplars, where);
  read_optional(j, "disable_objectness_scoring", f.disable_objectness_scoring, where);
  read_optional(j, "disable_replay", f.disable_replay, where);
}

namespace {

json optional_to_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

void to_json(json& j, const EvalReport& r) {
  json per_class = json::object();
  for (const auto& [cls, ap] : r.per_class_ap) per_class[std::to_string(cls)] = optional_to_json(ap);
  json curves = json::object();
  for (const auto& [cls, pts] : r.pr_curves) {
    json arr = json::array();
    for (const PrPoint& p : pts) arr.push_back(json::array({p.recall, p.precision}));
    curves[std::to_string(cls)] = std::move(arr);
  }
  j = json{{"schema_version", kReportSchemaVersion},
           {"task", r.task},
           {"seed", r.seed},
           {"map_prev", optional_to_json(r.map_prev)},
           {"map_current", optional_to_json(r.map_current)},
           {"map_both", optional_to_json(r.map_both)},
           {"u_recall", optional_to_json(r.u_recall)},
           {"a_ose", r.a_ose},
           {"wi", optional_to_json(r.wi)},
           {"per_class_ap", std::move(per_class)},
           {"pr_curves", std::move(curves)},
           {"num_known_gts", r.num_known_gts},
           {"num_unknown_gts", r.num_unknown_gts},
           {"num_detections", r.num_detections},
           {"settings", r.settings},
           {"ablation", r.ablation}};
}

void from_json(const json& j, EvalReport& r) {
  const int version = j.at("schema_version").get<int>();
  if (version != kReportSchemaVersion) {
    throw LoadError("unsupported report schema_version " + std::to_string(version));
  }
  r.task = j.at("task").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.map_prev = optional_from_json(j.at("map_prev"));
  r.map_current = optional_from_json(j.at("map_current"));
  r.map_both = optional_from_json(j.at("map_both"));
  r.u_recall = optional_from_json(j.at("u_recall"));
  r.a_ose = j.at("a_ose").get<long>();
  r.wi = optional_from_json(j.at("wi"));
  r.per_class_ap.clear();
  for (const auto& [key, value] : j.at("per_class_ap").items()) r.per_class_ap[std::stoi(key)] = optional_from_json(value);
  r.pr_curves.clear();
  for (const auto& [key, value] : j.at("pr_curves").items()) {
    auto& pts = r.pr_curves[std::stoi(key)];
    for (const json& p : value) pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  }
  r.num_known_gts = j.at("num_known_gts").get<long>();
  r.num_unknown_gts = j.at("num_unknown_gts").get<long>();
  r.num_detections = j.at("num_detections").get<long>();
  r.settings = j.at("settings").get<EvalSettings>();
  r.ablation = j.at("ablation").get<AblationFlags>();
}

EvalReport evaluate(const EvalInputs& inputs, const DatasetSpec& spec, int t, const EvalSettings& settings) {
  EvalReport report;
  report.task = t;
  report.settings = settings;
  report.num_detections = static_cast<long>(inputs.detections.size());

  std::vector<GroundTruth> known_gts, unknown_gts;
  for (const GroundTruth& g : inputs.gts) (g.label == kUnknownLabel ? unknown_gts : known_gts).push_back(g);
  report.num_known_gts = static_cast<long>(known_gts.size());
  report.num_unknown_gts = static_cast<long>(unknown_gts.size());

  for (int cls : spec.known_classes(t)) {
    std::vector<Detection> dets;
    std::vector<GroundTruth> gts;
    for (const Detection& d : inputs.detections) {
      if (d.label == cls) dets.push_back(d);
    }
    for (const GroundTruth& g : known_gts) {
      if (g.label == cls) gts.push_back(g);
    }
    report.per_class_ap[cls] = average_precision(dets, gts, settings.iou_thresh);
    std::vector<PrPoint> curve = precision_recall(dets, gts, settings.iou_thresh);
    // Keep only the points where recall increases.
    std::vector<PrPoint> steps;
    double last = 0.0;
    for (const PrPoint& p : curve) {
      if (p.recall > last) {
        steps.push_back(p);
        last = p.recall;
      }
    }
    report.pr_curves[cls] = std::move(steps);
  }

  const std::vector<int> prev = spec.previous_classes(t);
  const PartitionedMap maps = owod_map(report.per_class_ap, prev, spec.current_classes(t));
  report.map_prev = maps.prev;
  report.map_current = maps.current;
  report.map_both = maps.both;
  report.u_recall = u_recall(inputs.detections, unknown_gts, settings.iou_thresh);
  report.a_ose = a_ose(inputs.aose_candidates, unknown_gts, settings.aose_threshold, settings.iou_thresh);
  report.wi = wilderness_impact(inputs.detections, known_gts, unknown_gts, settings.wi_recall_level, settings.iou_thresh);
  return report;
}

}  // namespace prob
