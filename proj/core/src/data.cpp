#include "prob/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "prob/error.hpp"
#include "prob/io.hpp"
#include "prob/json_util.hpp"
#include "prob/rng.hpp"

namespace prob {

using nlohmann::json;

const char* to_string(Split s) { return s == Split::kTrain ? "train" : "test"; }

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "test") return Split::kTest;
  throw DomainError("unknown split '" + s + "'");
}

void DatasetSpec::validate() const {
  if (num_classes < 1) throw ConfigError("dataset.num_classes must be positive");
  if (task_schedule.empty()) throw ConfigError("dataset.task_schedule must have at least one task");
  std::vector<int> seen(static_cast<std::size_t>(num_classes), 0);
  auto mark = [&](int c, const char* where) {
    if (c < 0 || c >= num_classes) {
      throw ConfigError(std::string("dataset.") + where + ": class " + std::to_string(c) + " out of range");
    }
    if (seen[static_cast<std::size_t>(c)]++ != 0) {
      throw ConfigError(std::string("dataset.") + where + ": class " + std::to_string(c) + " listed twice");
    }
  };
  for (const auto& group : task_schedule) {
    if (group.empty()) throw ConfigError("dataset.task_schedule: empty task group");
    for (int c : group) mark(c, "task_schedule");
  }
  for (int c : forever_unknown) mark(c, "forever_unknown");
  for (int c = 0; c < num_classes; ++c) {
    if (seen[static_cast<std::size_t>(c)] == 0) {
      throw ConfigError("dataset: class " + std::to_string(c) + " is neither scheduled nor forever unknown");
    }
  }
  if (train_scenes < 0 || test_scenes < 0) throw ConfigError("dataset: scene counts must be non-negative");
  if (feature_dim < 1) throw ConfigError("dataset.feature_dim must be positive");
  if (min_objects < 0 || max_objects < min_objects) throw ConfigError("dataset: invalid object count range");
  if (max_objects > num_queries) throw ConfigError("dataset.max_objects exceeds num_queries");
  if (!(noise_sigma >= 0.0)) throw ConfigError("dataset.noise_sigma must be non-negative");
  if (!(background_radius > 1.0 + 3.0 * noise_sigma)) {
    throw ConfigError("dataset.background_radius must exceed 1 + 3 * noise_sigma");
  }
  if (!(min_prototype_angle_deg >= 0.0 && min_prototype_angle_deg < 90.0)) {
    throw ConfigError("dataset.min_prototype_angle_deg must lie in [0, 90)");
  }
}

int DatasetSpec::task_of_class(int cls) const {
  for (std::size_t t = 0; t < task_schedule.size(); ++t) {
    if (std::find(task_schedule[t].begin(), task_schedule[t].end(), cls) != task_schedule[t].end()) {
      return static_cast<int>(t);
    }
  }
  return -1;
}

std::vector<int> DatasetSpec::known_classes(int t) const {
  std::vector<int> out;
  for (int i = 0; i <= t && i < num_tasks(); ++i) {
    out.insert(out.end(), task_schedule[static_cast<std::size_t>(i)].begin(),
               task_schedule[static_cast<std::size_t>(i)].end());
  }
  return out;
}

std::vector<int> DatasetSpec::previous_classes(int t) const { return known_classes(t - 1); }

const std::vector<int>& DatasetSpec::current_classes(int t) const {
  if (t < 0 || t >= num_tasks()) throw DomainError("task index " + std::to_string(t) + " out of range");
  return task_schedule[static_cast<std::size_t>(t)];
}

void to_json(json& j, const DatasetSpec& s) {
  j = json{{"num_classes", s.num_classes},
           {"task_schedule", s.task_schedule},
           {"forever_unknown", s.forever_unknown},
           {"train_scenes", s.train_scenes},
           {"test_scenes", s.test_scenes},
           {"feature_dim", s.feature_dim},
           {"num_queries", s.num_queries},
           {"min_objects", s.min_objects},
           {"max_objects", s.max_objects},
           {"noise_sigma", s.noise_sigma},
           {"background_radius", s.background_radius},
           {"min_prototype_angle_deg", s.min_prototype_angle_deg},
           {"seed", s.seed}};
}

void from_json(const json& j, DatasetSpec& s) {
  using namespace json_util;
  constexpr std::string_view where = "dataset";
  require_keys_subset(j,
                      {"num_classes", "task_schedule", "forever_unknown", "train_scenes", "test_scenes",
                       "feature_dim", "num_queries", "min_objects", "max_objects", "noise_sigma",
                       "background_radius", "min_prototype_angle_deg", "seed"},
                      where);
  read_optional(j, "num_classes", s.num_classes, where);
  read_optional(j, "task_schedule", s.task_schedule, where);
  read_optional(j, "forever_unknown", s.forever_unknown, where);
  read_optional(j, "train_scenes", s.train_scenes, where);
  read_optional(j, "test_scenes", s.test_scenes, where);
  read_optional(j, "feature_dim", s.feature_dim, where);
  read_optional(j, "num_queries", s.num_queries, where);
  read_optional(j, "min_objects", s.min_objects, where);
  read_optional(j, "max_objects", s.max_objects, where);
  read_optional(j, "noise_sigma", s.noise_sigma, where);
  read_optional(j, "background_radius", s.background_radius, where);
  read_optional(j, "min_prototype_angle_deg", s.min_prototype_angle_deg, where);
  read_optional(j, "seed", s.seed, where);
}

const std::vector<Scene>& Dataset::split(int t, Split s) const {
  const auto& all = s == Split::kTrain ? train : test;
  if (t < 0 || static_cast<std::size_t>(t) >= all.size()) {
    throw DomainError("task index " + std::to_string(t) + " out of range");
  }
  return all[static_cast<std::size_t>(t)];
}

namespace {

constexpr std::uint64_t kPrototypeStream = 0xFFFF'FFFF'FFFF'0001ULL;
constexpr int kMaxTries = 1000;

Vec random_unit(Rng& rng, int dim) {
  Vec v(static_cast<std::size_t>(dim));
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& x : v) {
      x = gaussian(rng);
      norm += x * x;
    }
  } while (norm < 1e-24);
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

Matrix draw_prototypes(const DatasetSpec& spec) {
  Rng rng(mix_seed(spec.seed, kPrototypeStream));
  const double max_cos = std::cos(spec.min_prototype_angle_deg * std::numbers::pi / 180.0);
  Matrix protos(static_cast<std::size_t>(spec.num_classes), static_cast<std::size_t>(spec.feature_dim));
  for (std::size_t c = 0; c < protos.rows(); ++c) {
    for (int attempt = 0;; ++attempt) {
      if (attempt == 100000) throw ConfigError("dataset: cannot place prototypes at the requested angle");
      Vec v = random_unit(rng, spec.feature_dim);
      bool ok = true;
      for (std::size_t o = 0; o < c && ok; ++o) {
        double dot = 0.0;
        for (std::size_t d = 0; d < v.size(); ++d) dot += v[d] * protos(o, d);
        ok = dot <= max_cos;
      }
      if (ok) {
        std::copy(v.begin(), v.end(), protos.row(c).begin());
        break;
      }
    }
  }
  return protos;
}

Box random_box_inside(Rng& rng, double lo, double hi, double wmin, double wmax) {
  Box b;
  b.w = uniform(rng, wmin, wmax);
  b.h = uniform(rng, wmin, wmax);
  b.cx = uniform(rng, lo + 0.5 * b.w, hi - 0.5 * b.w);
  b.cy = uniform(rng, lo + 0.5 * b.h, hi - 0.5 * b.h);
  return b;
}

double max_iou(const Box& b, const std::vector<Annotation>& objects, std::size_t skip = SIZE_MAX) {
  double best = 0.0;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (i != skip) best = std::max(best, box_iou(b, objects[i].box));
  }
  return best;
}

Scene generate_scene(const DatasetSpec& spec, const Matrix& protos, std::uint64_t scene_id, int task,
                     Split split) {
  Rng rng(mix_seed(spec.seed, scene_id));
  Scene scene;
  scene.scene_id = scene_id;
  scene.task = task;
  scene.split = split;

  const int n_objects = uniform_int(rng, spec.min_objects, spec.max_objects);
  for (int k = 0; k < n_objects; ++k) {
    const int cls = uniform_int(rng, 0, spec.num_classes - 1);
    for (int attempt = 0; attempt < kMaxTries; ++attempt) {
      const Box b = random_box_inside(rng, 0.1, 0.9, 0.1, 0.4);
      if (max_iou(b, scene.annotations) < 0.2) {
        scene.annotations.push_back({cls, b});
        break;
      }
    }
  }

  for (std::size_t i = 0; i < scene.annotations.size(); ++i) {
    const Annotation& obj = scene.annotations[i];
    Candidate cand;
    cand.feature.resize(static_cast<std::size_t>(spec.feature_dim));
    const auto proto = protos.row(static_cast<std::size_t>(obj.label));
    for (std::size_t d = 0; d < cand.feature.size(); ++d) {
      cand.feature[d] = proto[d] + gaussian(rng, spec.noise_sigma);
    }
    for (int attempt = 0;; ++attempt) {
      if (attempt == kMaxTries) {
        cand.box = obj.box;
        break;
      }
      Box p{obj.box.cx + uniform(rng, -0.03, 0.03), obj.box.cy + uniform(rng, -0.03, 0.03),
            obj.box.w + uniform(rng, -0.03, 0.03), obj.box.h + uniform(rng, -0.03, 0.03)};
      if (box_iou(p, obj.box) >= 0.5 && max_iou(p, scene.annotations, i) < 0.5) {
        cand.box = p;
        break;
      }
    }
    scene.candidates.push_back(std::move(cand));
  }

  while (scene.candidates.size() < static_cast<std::size_t>(spec.num_queries)) {
    Candidate cand;
    cand.feature = random_unit(rng, spec.feature_dim);
    const double radius = uniform(rng, spec.background_radius, 1.5 * spec.background_radius);
    for (double& x : cand.feature) x *= radius;
    for (int attempt = 0; attempt < kMaxTries; ++attempt) {
      cand.box = random_box_inside(rng, 0.0, 1.0, 0.05, 0.5);
      if (max_iou(cand.box, scene.annotations) < 0.5) break;
    }
    scene.candidates.push_back(std::move(cand));
  }

  std::shuffle(scene.candidates.begin(), scene.candidates.end(), rng);
  return scene;
}

}  // namespace

Dataset generate_dataset(const DatasetSpec& spec) {
  spec.validate();
  Dataset ds;
  ds.spec = spec;
  ds.prototypes = draw_prototypes(spec);
  std::uint64_t next_id = 0;
  for (int t = 0; t < spec.num_tasks(); ++t) {
    std::vector<Scene> train, test;
    for (int i = 0; i < spec.train_scenes; ++i) {
      train.push_back(generate_scene(spec, ds.prototypes, next_id++, t, Split::kTrain));
    }
    for (int i = 0; i < spec.test_scenes; ++i) {
      test.push_back(generate_scene(spec, ds.prototypes, next_id++, t, Split::kTest));
    }
    ds.train.push_back(std::move(train));
    ds.test.push_back(std::move(test));
  }
  return ds;
}

bool is_visible_at_task(const DatasetSpec& spec, int cls, int t, Split split) {
  if (cls == kUnknownLabel) return false;
  const int intro = spec.task_of_class(cls);
  if (intro < 0) return false;
  return split == Split::kTrain ? intro == t : intro <= t;
}

std::vector<Scene> task_view(std::span<const Scene> scenes, const DatasetSpec& spec, int t, Split split) {
  if (t < 0 || t >= spec.num_tasks()) throw DomainError("task index " + std::to_string(t) + " out of range");
  std::vector<Scene> out(scenes.begin(), scenes.end());
  for (Scene& s : out) {
    std::vector<Annotation> kept;
    for (const Annotation& a : s.annotations) {
      if (is_visible_at_task(spec, a.label, t, split)) {
        kept.push_back(a);
      } else if (split == Split::kTest) {
        kept.push_back({kUnknownLabel, a.box});
      }
    }
    s.annotations = std::move(kept);
  }
  return out;
}

std::vector<Scene> task_view(const Dataset& dataset, int t, Split split) {
  if (t < 0 || t >= dataset.spec.num_tasks()) {
    throw DomainError("task index " + std::to_string(t) + " out of range");
  }
  return task_view(dataset.split(t, split), dataset.spec, t, split);
}

json scene_to_json(const Scene& scene) {
  json cands = json::array();
  for (const Candidate& c : scene.candidates) {
    cands.push_back({{"feature", c.feature}, {"box", c.box.as_array()}});
  }
  json anns = json::array();
  for (const Annotation& a : scene.annotations) anns.push_back({{"class", a.label}, {"box", a.box.as_array()}});
  return json{{"schema_version", kDatasetSchemaVersion},
              {"kind", "scene"},
              {"scene_id", scene.scene_id},
              {"task", scene.task},
              {"split", to_string(scene.split)},
              {"candidates", std::move(cands)},
              {"annotations", std::move(anns)}};
}

Scene scene_from_json(const json& j) {
  Scene s;
  s.scene_id = j.at("scene_id").get<std::uint64_t>();
  s.task = j.at("task").get<int>();
  s.split = split_from_string(j.at("split").get<std::string>());
  for (const json& c : j.at("candidates")) {
    s.candidates.push_back({c.at("feature").get<Vec>(), Box::from_array(c.at("box").get<std::array<double, 4>>())});
  }
  for (const json& a : j.at("annotations")) {
    s.annotations.push_back({a.at("class").get<int>(), Box::from_array(a.at("box").get<std::array<double, 4>>())});
  }
  return s;
}

void write_dataset(std::ostream& out, const Dataset& dataset) {
  json protos = json::array();
  for (std::size_t r = 0; r < dataset.prototypes.rows(); ++r) {
    const auto row = dataset.prototypes.row(r);
    protos.push_back(Vec(row.begin(), row.end()));
  }
  json header{{"schema_version", kDatasetSchemaVersion},
              {"kind", "header"},
              {"spec", dataset.spec},
              {"prototypes", std::move(protos)}};
  out << header.dump() << '\n';
  for (std::size_t t = 0; t < dataset.train.size(); ++t) {
    for (const Scene& s : dataset.train[t]) out << scene_to_json(s).dump() << '\n';
    for (const Scene& s : dataset.test[t]) out << scene_to_json(s).dump() << '\n';
  }
}

Dataset read_dataset(std::istream& in) {
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = "dataset line " + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw LoadError(where + ": malformed record (" + e.what() + ")");
    }
    try {
      const int version = j.at("schema_version").get<int>();
      if (version != kDatasetSchemaVersion) {
        throw LoadError(where + ": unsupported schema_version " + std::to_string(version) + " (expected " +
                        std::to_string(kDatasetSchemaVersion) + ")");
      }
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "header") {
        if (have_header) throw LoadError(where + ": duplicate header");
        ds.spec = j.at("spec").get<DatasetSpec>();
        const auto rows = j.at("prototypes").get<std::vector<Vec>>();
        ds.prototypes = Matrix(rows.size(), rows.empty() ? 0 : rows.front().size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
          if (rows[r].size() != ds.prototypes.cols()) throw LoadError(where + ": ragged prototype matrix");
          std::copy(rows[r].begin(), rows[r].end(), ds.prototypes.row(r).begin());
        }
        ds.train.assign(static_cast<std::size_t>(ds.spec.num_tasks()), {});
        ds.test.assign(static_cast<std::size_t>(ds.spec.num_tasks()), {});
        have_header = true;
      } else if (kind == "scene") {
        if (!have_header) throw LoadError(where + ": scene record before header");
        Scene s = scene_from_json(j);
        if (s.task < 0 || s.task >= ds.spec.num_tasks()) throw LoadError(where + ": task index out of range");
        auto& bucket = s.split == Split::kTrain ? ds.train : ds.test;
        bucket[static_cast<std::size_t>(s.task)].push_back(std::move(s));
      } else {
        throw LoadError(where + ": unknown record kind '" + kind + "'");
      }
    } catch (const json::exception& e) {
      throw LoadError(where + ": " + e.what());
    } catch (const ConfigError& e) {
      throw LoadError(where + ": " + e.what());
    } catch (const DomainError& e) {
      throw LoadError(where + ": " + e.what());
    }
  }
  if (!have_header) throw LoadError("dataset: missing header record");
  return ds;
}

void save_dataset(const std::string& path, const Dataset& dataset) {
  std::ostringstream out;
  write_dataset(out, dataset);
  write_file_atomic(path, out.str());
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open dataset file '" + path + "'");
  return read_dataset(in);
}

}  // namespace prob
