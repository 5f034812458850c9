#include "prob/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "prob/error.hpp"
#include "prob/io.hpp"
#include "prob/json_util.hpp"
#include "prob/rng.hpp"

namespace prob {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Exemplar memory

std::vector<std::uint64_t> ExemplarSet::scene_ids() const {
  std::set<std::uint64_t> ids;
  for (const ExemplarEntry& e : entries) ids.insert(e.scene_id);
  return {ids.begin(), ids.end()};
}

std::map<int, int> ExemplarSet::per_class_counts() const {
  std::map<int, int> counts;
  for (const ExemplarEntry& e : entries) ++counts[e.cls];
  return counts;
}

void ExemplarSet::merge(const ExemplarSet& other) {
  for (const ExemplarEntry& e : other.entries) {
    const bool present = std::any_of(entries.begin(), entries.end(), [&](const ExemplarEntry& x) {
      return x.scene_id == e.scene_id && x.annotation_index == e.annotation_index;
    });
    if (!present) entries.push_back(e);
  }
  budget += other.budget;
  warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
}

void to_json(json& j, const ExemplarSet& s) {
  json entries = json::array();
  for (const ExemplarEntry& e : s.entries) {
    entries.push_back({{"scene_id", e.scene_id},
                       {"annotation_index", e.annotation_index},
                       {"objectness", e.objectness},
                       {"class", e.cls}});
  }
  j = json{{"entries", std::move(entries)}, {"budget", s.budget}, {"warnings", s.warnings}};
}

void from_json(const json& j, ExemplarSet& s) {
  s.entries.clear();
  for (const json& e : j.at("entries")) {
    s.entries.push_back({e.at("scene_id").get<std::uint64_t>(), e.at("annotation_index").get<std::size_t>(),
                         e.at("objectness").get<double>(), e.at("class").get<int>()});
  }
  s.budget = j.at("budget").get<int>();
  s.warnings = j.at("warnings").get<std::vector<std::string>>();
}

// ---------------------------------------------------------------------------
// Configuration

void BenchmarkConfig::validate() const {
  dataset.validate();
  model.validate();
  train.validate();
  eval.validate();
  if (model.feature_dim != dataset.feature_dim) throw ConfigError("model.feature_dim must equal dataset.feature_dim");
  if (model.num_queries != dataset.num_queries) throw ConfigError("model.num_queries must equal dataset.num_queries");
  if (exemplars_per_class < 1) throw ConfigError("protocol.exemplars_per_class must be at least 1");
  if (exemplar_budget < 1) throw ConfigError("protocol.exemplar_budget must be at least 1");
  if (seeds.empty()) throw ConfigError("protocol.seeds must not be empty");
  for (double tau : tau_list) {
    if (!(tau > 0.0)) throw ConfigError("protocol.tau_list entries must be positive");
  }
}

BenchmarkConfig BenchmarkConfig::with_seed(std::uint64_t seed) const {
  BenchmarkConfig c = *this;
  c.dataset.seed = seed;
  c.train.seed = seed;
  return c;
}

LossWeights BenchmarkConfig::loss_weights() const {
  LossWeights w;
  w.match = loss.match;
  w.l1 = loss.l1;
  w.giou = loss.giou;
  w.focal = loss.focal;
  w.alpha = ablation.disable_objectness_loss ? 0.0 : train.alpha;
  return w;
}

EvalSettings BenchmarkConfig::effective_eval() const {
  EvalSettings s = eval;
  s.use_objectness = eval.use_objectness && !ablation.disable_objectness_scoring;
  return s;
}

namespace {

void to_json(json& j, const LossConfig& l) {
  j = json{{"match_cls", l.match.cls}, {"match_l1", l.match.l1}, {"match_giou", l.match.giou},
           {"l1", l.l1},               {"giou", l.giou},         {"focal_alpha", l.focal.alpha},
           {"focal_gamma", l.focal.gamma}};
}

void loss_from_json(const json& j, LossConfig& l) {
  using namespace json_util;
  constexpr std::string_view where = "loss";
  require_keys_subset(j, {"match_cls", "match_l1", "match_giou", "l1", "giou", "focal_alpha", "focal_gamma"}, where);
  read_optional(j, "match_cls", l.match.cls, where);
  read_optional(j, "match_l1", l.match.l1, where);
  read_optional(j, "match_giou", l.match.giou, where);
  read_optional(j, "l1", l.l1, where);
  read_optional(j, "giou", l.giou, where);
  read_optional(j, "focal_alpha", l.focal.alpha, where);
  read_optional(j, "focal_gamma", l.focal.gamma, where);
}

}  // namespace

void to_json(json& j, const BenchmarkConfig& c) {
  json loss;
  to_json(loss, c.loss);
  j = json{{"config_version", kConfigVersion},
           {"dataset", c.dataset},
           {"model", c.model},
           {"train", c.train},
           {"loss", std::move(loss)},
           {"eval", c.eval},
           {"ablation", c.ablation},
           {"protocol",
            {{"exemplars_per_class", c.exemplars_per_class},
             {"exemplar_budget", c.exemplar_budget},
             {"tau_list", c.tau_list},
             {"seeds", c.seeds}}}};
}

void from_json(const json& j, BenchmarkConfig& c) {
  using namespace json_util;
  require_keys_subset(j, {"config_version", "dataset", "model", "train", "loss", "eval", "ablation", "protocol"},
                      "config");
  if (auto it = j.find("config_version"); it != j.end()) {
    if (!it->is_number_integer() || it->get<int>() != kConfigVersion) {
      throw ConfigError("unsupported config_version " + it->dump() + " (expected " + std::to_string(kConfigVersion) +
                        ")");
    }
  }
  c = BenchmarkConfig{};
  if (j.contains("dataset")) from_json(j.at("dataset"), c.dataset);
  c.model.feature_dim = c.dataset.feature_dim;
  c.model.num_queries = c.dataset.num_queries;
  if (j.contains("model")) from_json(j.at("model"), c.model);
  if (j.contains("train")) from_json(j.at("train"), c.train);
  if (j.contains("loss")) loss_from_json(j.at("loss"), c.loss);
  if (j.contains("eval")) from_json(j.at("eval"), c.eval);
  if (j.contains("ablation")) from_json(j.at("ablation"), c.ablation);
  if (j.contains("protocol")) {
    const json& p = j.at("protocol");
    constexpr std::string_view where = "protocol";
    require_keys_subset(p, {"exemplars_per_class", "exemplar_budget", "tau_list", "seeds"}, where);
    read_optional(p, "exemplars_per_class", c.exemplars_per_class, where);
    read_optional(p, "exemplar_budget", c.exemplar_budget, where);
    read_optional(p, "tau_list", c.tau_list, where);
    read_optional(p, "seeds", c.seeds, where);
  }
  c.validate();
}

BenchmarkConfig load_config(const std::string& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return j.get<BenchmarkConfig>();
}

// ---------------------------------------------------------------------------
// Training helpers

namespace {

int head_index(const std::vector<int>& known, int cls) {
  const auto it = std::find(known.begin(), known.end(), cls);
  if (it == known.end()) throw DomainError("class " + std::to_string(cls) + " is not known");
  return static_cast<int>(it - known.begin());
}

LossBreakdown run_epochs(Trainer& trainer, std::span<const TrainExample> examples, int epochs, double base_lr,
                         int drop_epoch, double drop_factor, std::uint64_t stream,
                         std::vector<LossBreakdown>* history) {
  LossBreakdown last;
  if (examples.empty()) return last;
  const std::size_t bs = static_cast<std::size_t>(trainer.config().batch_size);
  std::vector<std::size_t> order(examples.size());
  std::vector<TrainExample> batch;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(stream, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = epoch >= drop_epoch ? base_lr * drop_factor : base_lr;
    LossBreakdown sum;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      batch.clear();
      for (std::size_t k = start; k < std::min(order.size(), start + bs); ++k) batch.push_back(examples[order[k]]);
      const LossBreakdown l = trainer.step(batch, lr);
      sum.cls += l.cls;
      sum.box += l.box;
      sum.obj += l.obj;
      sum.total += l.total;
      ++steps;
    }
    const double n = static_cast<double>(steps);
    last = {sum.cls / n, sum.box / n, sum.obj / n, sum.total / n};
    if (history != nullptr) history->push_back(last);
  }
  return last;
}

template <typename Fn>
auto with_task_context(int t, Fn&& fn) -> decltype(fn()) {
  const std::string prefix = "task " + std::to_string(t) + ": ";
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const DomainError& e) {
    throw DomainError(prefix + e.what());
  } catch (const LoadError& e) {
    throw LoadError(prefix + e.what());
  } catch (const ProtocolError& e) {
    throw ProtocolError(prefix + e.what());
  }
}

}  // namespace

SceneTargets make_train_targets(const Scene& scene, const DatasetSpec& spec, int t) {
  const std::vector<int> known = spec.known_classes(t);
  SceneTargets out;
  for (const Annotation& a : scene.annotations) {
    if (is_visible_at_task(spec, a.label, t, Split::kTrain)) out.targets.push_back({head_index(known, a.label), a.box});
  }
  return out;
}

std::vector<std::size_t> select_top_bottom(std::span<const double> score, std::span<const std::uint64_t> scene_ids,
                                           int per_class) {
  if (score.size() != scene_ids.size()) throw DomainError("score and scene id lists differ in length");
  std::vector<std::size_t> order(score.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return scene_ids[a] < scene_ids[b];
  });
  const std::size_t e = static_cast<std::size_t>(std::max(per_class, 0));
  if (order.size() <= 2 * e) return order;
  std::vector<std::size_t> out(order.begin(), order.begin() + static_cast<long>(e));
  out.insert(out.end(), order.end() - static_cast<long>(e), order.end());
  return out;
}

ExemplarSet select_exemplars(const ModelState& state, std::span<const Scene> train_scenes, const DatasetSpec& spec,
                             int t, int per_class, int budget, bool random, std::uint64_t seed, double tau,
                             const MatchWeights& match) {
  if (per_class < 1) throw ConfigError("exemplars per class must be at least 1");
  const std::vector<int> known = spec.known_classes(t);

  struct Scored {
    ExemplarEntry entry;
    double distance;
  };
  std::map<int, std::vector<Scored>> by_class;
  for (int cls : spec.current_classes(t)) by_class[cls];

  for (const Scene& scene : train_scenes) {
    std::vector<std::size_t> original;
    std::vector<Target> targets;
    for (std::size_t a = 0; a < scene.annotations.size(); ++a) {
      const Annotation& ann = scene.annotations[a];
      if (!is_visible_at_task(spec, ann.label, t, Split::kTrain)) continue;
      original.push_back(a);
      targets.push_back({head_index(known, ann.label), ann.box});
    }
    if (targets.empty()) continue;
    const ForwardPass fp = forward(state.params, scene.candidates);
    const MatchResult m = detr_match(fp.class_probs, fp.boxes, targets, match);
    for (const auto& [slot, tgt] : m.pairs) {
      const double dist = mahalanobis_sq(state.gaussian, fp.queries.row(slot));
      const int cls = scene.annotations[original[tgt]].label;
      by_class[cls].push_back(
          {{scene.scene_id, original[tgt], objectness_from_distance(dist, tau), cls}, dist});
    }
  }

  ExemplarSet out;
  out.budget = budget;
  Rng rng(mix_seed(seed, 0xE8E3'0000ULL + static_cast<std::uint64_t>(t)));
  const std::size_t keep = 2 * static_cast<std::size_t>(per_class);
  for (auto& [cls, items] : by_class) {
    if (items.empty()) {
      out.warnings.push_back("class " + std::to_string(cls) + " has no labeled instances at task " +
                             std::to_string(t));
      continue;
    }
    std::vector<Scored> chosen;
    if (random) {
      std::vector<std::size_t> idx(items.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(std::min(keep, idx.size()));
      std::sort(idx.begin(), idx.end());
      for (std::size_t i : idx) chosen.push_back(items[i]);
    } else {
      // Ranking by raw distance equals ranking by objectness for any tau.
      std::vector<double> score;
      std::vector<std::uint64_t> ids;
      for (const Scored& s : items) {
        score.push_back(-s.distance);
        ids.push_back(s.entry.scene_id);
      }
      for (std::size_t i : select_top_bottom(score, ids, per_class)) chosen.push_back(items[i]);
    }
    for (const Scored& s : chosen) out.entries.push_back(s.entry);
  }

  std::vector<std::uint64_t> scenes = out.scene_ids();
  if (budget > 0 && scenes.size() > static_cast<std::size_t>(budget)) {
    std::shuffle(scenes.begin(), scenes.end(), rng);
    scenes.resize(static_cast<std::size_t>(budget));
    const std::set<std::uint64_t> kept(scenes.begin(), scenes.end());
    std::erase_if(out.entries, [&](const ExemplarEntry& e) { return kept.count(e.scene_id) == 0; });
  }
  return out;
}

EvalInputs collect_eval_inputs(const ModelState& state, std::span<const Scene> test_scenes, const DatasetSpec& spec,
                               int t, const EvalSettings& settings) {
  settings.validate();
  const std::vector<int> known = spec.known_classes(t);
  if (state.params.num_classes() != known.size()) {
    throw DomainError("model has " + std::to_string(state.params.num_classes()) + " class outputs but task " +
                      std::to_string(t) + " knows " + std::to_string(known.size()) + " classes");
  }
  const std::vector<Scene> view = task_view(test_scenes, spec, t, Split::kTest);
  const ScoringOptions opts{settings.tau, settings.use_objectness};

  EvalInputs in;
  for (const Scene& scene : view) {
    for (const Annotation& a : scene.annotations) in.gts.push_back({scene.scene_id, a.label, a.box});
    const std::vector<Prediction> slots = score_slots(state.params, state.gaussian, scene.candidates, opts);
    std::size_t kept = 0;
    for (const Prediction& p : slots) {
      const int label = p.label == kUnknownLabel ? kUnknownLabel : known[static_cast<std::size_t>(p.label)];
      const Detection d{scene.scene_id, label, p.score, p.box};
      in.aose_candidates.push_back(d);
      if (kept < static_cast<std::size_t>(settings.top_k) && p.score >= settings.det_threshold) {
        in.detections.push_back(d);
        ++kept;
      }
    }
  }
  return in;
}

EvalReport evaluate_model(const ModelState& state, std::span<const Scene> test_scenes, const DatasetSpec& spec, int t,
                          const EvalSettings& settings) {
  return evaluate(collect_eval_inputs(state, test_scenes, spec, t, settings), spec, t, settings);
}

TaskResult run_task(const ModelState* previous, const ExemplarSet* previous_exemplars, const Dataset& dataset, int t,
                    const BenchmarkConfig& cfg) {
  const DatasetSpec& spec = dataset.spec;
  if (t < 0 || t >= spec.num_tasks()) throw DomainError("task index " + std::to_string(t) + " out of range");
  if (t > 0 && previous == nullptr) {
    throw ProtocolError("task " + std::to_string(t) + " needs the model state of task " + std::to_string(t - 1));
  }
  if (t > 0 && previous->task != t - 1) {
    throw ProtocolError("predecessor state was trained on task " + std::to_string(previous->task) + ", expected " +
                        std::to_string(t - 1));
  }

  const LossWeights weights = cfg.loss_weights();
  const std::uint64_t seed = cfg.train.seed;
  const int new_classes = static_cast<int>(spec.current_classes(t).size());

  ModelState init;
  if (t == 0) {
    init.params = DetectorParams::init(cfg.model, new_classes, seed);
    init.gaussian = GaussianState::initial(static_cast<std::size_t>(cfg.model.embed_dim), cfg.train.momentum);
  } else {
    init = *previous;
    init.params.add_classes(new_classes, mix_seed(seed, static_cast<std::uint64_t>(t)));
  }

  TaskResult result;
  Trainer trainer(init.params, init.gaussian, cfg.train, weights);

  const std::vector<Scene>& train_scenes = dataset.split(t, Split::kTrain);
  std::vector<TrainExample> examples;
  examples.reserve(train_scenes.size());
  for (const Scene& s : train_scenes) examples.push_back({&s.candidates, make_train_targets(s, spec, t)});
  run_epochs(trainer, examples, cfg.train.epochs, cfg.train.lr, cfg.train.lr_drop_epoch, cfg.train.lr_drop_factor,
             mix_seed(seed, 0x7A5C'0000ULL + static_cast<std::uint64_t>(t)), &result.epoch_losses);

  ModelState trained{trainer.params(), trainer.gaussian(), t, init.steps + trainer.steps()};
  ExemplarSet fresh = select_exemplars(trained, train_scenes, spec, t, cfg.exemplars_per_class, cfg.exemplar_budget,
                                       cfg.ablation.random_exemplars, seed, cfg.train.tau, weights.match);
  ExemplarSet memory = previous_exemplars != nullptr ? *previous_exemplars : ExemplarSet{};
  memory.merge(fresh);

  if (t > 0 && !cfg.ablation.disable_replay && cfg.train.finetune_epochs > 0 && !memory.entries.empty()) {
    std::unordered_map<std::uint64_t, const Scene*> by_id;
    for (int task = 0; task <= t; ++task) {
      for (const Scene& s : dataset.split(task, Split::kTrain)) by_id[s.scene_id] = &s;
    }
    const std::vector<int> known = spec.known_classes(t);
    std::vector<TrainExample> finetune;
    for (std::uint64_t id : memory.scene_ids()) {
      const auto it = by_id.find(id);
      if (it == by_id.end()) throw ProtocolError("exemplar scene " + std::to_string(id) + " is not in the dataset");
      const Scene& scene = *it->second;
      TrainExample ex{&scene.candidates, {}};
      for (std::size_t a = 0; a < scene.annotations.size(); ++a) {
        const Annotation& ann = scene.annotations[a];
        const int intro = spec.task_of_class(ann.label);
        if (intro < 0 || intro > t) continue;
        const bool selected = std::any_of(memory.entries.begin(), memory.entries.end(), [&](const ExemplarEntry& e) {
          return e.scene_id == id && e.annotation_index == a;
        });
        ex.targets.targets.push_back({head_index(known, ann.label), ann.box});
        // Known objects that are not exemplars claim a slot but carry no loss.
        ex.targets.ignore.push_back(selected ? 0 : 1);
      }
      finetune.push_back(std::move(ex));
    }
    trainer.reset_optimizer();
    const double ft_lr = cfg.train.lr * cfg.train.finetune_lr_factor;
    run_epochs(trainer, finetune, cfg.train.finetune_epochs, ft_lr, cfg.train.finetune_epochs, 1.0,
               mix_seed(seed, 0xF1E7'0000ULL + static_cast<std::uint64_t>(t)), &result.epoch_losses);
    result.finetuned = true;
  }

  result.state = {trainer.params(), trainer.gaussian(), t, init.steps + trainer.steps()};
  result.exemplars = std::move(memory);
  result.report = evaluate_model(result.state, dataset.split(t, Split::kTest), spec, t, cfg.effective_eval());
  result.report.seed = seed;
  result.report.ablation = cfg.ablation;
  return result;
}

SeedRun run_seed(const BenchmarkConfig& base, std::uint64_t seed) {
  const BenchmarkConfig cfg = base.with_seed(seed);
  cfg.validate();
  const Dataset dataset = generate_dataset(cfg.dataset);
  SeedRun run;
  run.seed = seed;
  std::optional<TaskResult> last;
  for (int t = 0; t < cfg.dataset.num_tasks(); ++t) {
    TaskResult r = with_task_context(t, [&] {
      return run_task(last ? &last->state : nullptr, last ? &last->exemplars : nullptr, dataset, t, cfg);
    });
    run.reports.push_back(r.report);
    last = std::move(r);
  }
  if (last) run.final_state = last->state;
  return run;
}

BenchmarkResult run_benchmark(const BenchmarkConfig& cfg) {
  cfg.validate();
  BenchmarkResult result;
  for (std::uint64_t seed : cfg.seeds) result.runs.push_back(run_seed(cfg, seed));
  result.summary = summarize(result.runs);
  return result;
}

std::vector<SummaryRow> summarize(std::span<const SeedRun> runs) {
  std::vector<SummaryRow> rows;
  for (const SeedRun& run : runs) {
    for (const EvalReport& r : run.reports) {
      SummaryRow row;
      row.task = r.task;
      row.seed = std::to_string(run.seed);
      row.map_prev = r.map_prev;
      row.map_current = r.map_current;
      row.map_both = r.map_both;
      row.u_recall = r.u_recall;
      row.a_ose = static_cast<double>(r.a_ose);
      row.wi = r.wi;
      row.tau = r.settings.tau;
      rows.push_back(std::move(row));
    }
  }
  if (runs.size() < 2) return rows;

  const std::size_t tasks = runs.front().reports.size();
  for (std::size_t t = 0; t < tasks; ++t) {
    using Field = std::optional<double> SummaryRow::*;
    const Field fields[] = {&SummaryRow::map_prev, &SummaryRow::map_current, &SummaryRow::map_both,
                            &SummaryRow::u_recall, &SummaryRow::a_ose,       &SummaryRow::wi};
    SummaryRow mean_row, std_row;
    mean_row.task = std_row.task = static_cast<int>(t);
    mean_row.seed = "mean";
    std_row.seed = "std";
    mean_row.tau = std_row.tau = runs.front().reports[t].settings.tau;
    for (Field f : fields) {
      std::vector<double> values;
      for (std::size_t r = 0; r < runs.size(); ++r) {
        const auto& v = rows[r * tasks + t].*f;
        if (v) values.push_back(*v);
      }
      if (values.empty()) continue;
      const double n = static_cast<double>(values.size());
      const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
      mean_row.*f = mean;
      if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        std_row.*f = std::sqrt(ss / (n - 1.0));
      }
    }
    rows.push_back(std::move(mean_row));
    rows.push_back(std::move(std_row));
  }
  return rows;
}

namespace {

std::string cell(const std::optional<double>& v) { return v ? format_number(*v, 10) : std::string(); }

}  // namespace

std::string summary_csv(std::span<const SummaryRow> rows) {
  std::ostringstream out;
  out << "task,map_prev,map_current,map_both,u_recall,a_ose,wi,tau,seed\n";
  for (const SummaryRow& r : rows) {
    out << r.task << ',' << cell(r.map_prev) << ',' << cell(r.map_current) << ',' << cell(r.map_both) << ','
        << cell(r.u_recall) << ',' << cell(r.a_ose) << ',' << cell(r.wi) << ',' << format_number(r.tau, 10) << ','
        << r.seed << '\n';
  }
  return out.str();
}

std::vector<EvalReport> temperature_sweep(const ModelState& state, std::span<const Scene> test_scenes,
                                          const DatasetSpec& spec, int t, const EvalSettings& base,
                                          std::span<const double> tau_list) {
  for (double tau : tau_list) {
    if (!(tau > 0.0)) throw ConfigError("temperature sweep entries must be positive, got " + format_number(tau));
  }
  std::vector<EvalReport> reports;
  for (double tau : tau_list) {
    EvalSettings s = base;
    s.tau = tau;
    reports.push_back(evaluate_model(state, test_scenes, spec, t, s));
  }
  return reports;
}

std::string sweep_csv(std::span<const EvalReport> reports) {
  std::ostringstream out;
  out << "tau,map_prev,map_current,map_both,u_recall,a_ose,wi,num_detections\n";
  for (const EvalReport& r : reports) {
    out << format_number(r.settings.tau, 10) << ',' << cell(r.map_prev) << ',' << cell(r.map_current) << ','
        << cell(r.map_both) << ',' << cell(r.u_recall) << ',' << r.a_ose << ',' << cell(r.wi) << ','
        << r.num_detections << '\n';
  }
  return out.str();
}

}  // namespace prob
