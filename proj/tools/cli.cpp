#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "prob/checkpoint.hpp"
#include "prob/data.hpp"
#include "prob/error.hpp"
#include "prob/gradcheck.hpp"
#include "prob/io.hpp"
#include "prob/plot.hpp"
#include "prob/protocol.hpp"

namespace prob::cli {

namespace {

using nlohmann::json;

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "prob_out";
  bool quiet = false;
};

class Context {
 public:
  Context(const GlobalOptions& g, std::ostream& out) : g_(g), out_(out) {}

  BenchmarkConfig config() const {
    BenchmarkConfig cfg;
    if (!g_.config_path.empty()) cfg = load_config(g_.config_path);
    if (g_.seed) cfg.seeds = {*g_.seed};
    cfg.validate();
    return cfg;
  }

  std::string path(const std::string& name) const { return (std::filesystem::path(g_.out_dir) / name).string(); }

  void write(const std::string& name, const std::string& contents) const {
    write_file_atomic(path(name), contents);
    log("wrote " + path(name));
  }

  void log(const std::string& msg) const {
    if (!g_.quiet) out_ << msg << '\n';
  }

 private:
  const GlobalOptions& g_;
  std::ostream& out_;
};

std::string report_json(const EvalReport& r) { return json(r).dump(2) + "\n"; }

std::string describe(const EvalReport& r) {
  auto f = [](const std::optional<double>& v) { return v ? format_number(*v, 4) : std::string("-"); };
  std::ostringstream s;
  s << "task " << r.task << ": mAP prev " << f(r.map_prev) << " current " << f(r.map_current) << " both "
    << f(r.map_both) << " | U-Recall " << f(r.u_recall) << " | A-OSE " << r.a_ose << " | WI " << f(r.wi);
  return s.str();
}

Dataset dataset_for(const BenchmarkConfig& cfg, std::uint64_t seed, const std::string& dataset_path) {
  if (!dataset_path.empty()) return load_dataset(dataset_path);
  return generate_dataset(cfg.with_seed(seed).dataset);
}

int cmd_generate(const Context& ctx) {
  const BenchmarkConfig cfg = ctx.config();
  const Dataset ds = generate_dataset(cfg.with_seed(cfg.seeds.front()).dataset);
  std::ostringstream buf;
  write_dataset(buf, ds);
  ctx.write("dataset.jsonl", buf.str());
  return 0;
}

int cmd_train(const Context& ctx, int task, const std::string& dataset_path, const std::string& checkpoint_path,
              const std::string& exemplars_path) {
  BenchmarkConfig cfg = ctx.config();
  std::uint64_t seed = cfg.seeds.front();
  std::optional<Checkpoint> prev;
  if (!checkpoint_path.empty()) {
    prev = load_checkpoint(checkpoint_path);
    seed = prev->seed;
  }
  if (task > 0 && !prev) throw ProtocolError("train --task " + std::to_string(task) + " needs --checkpoint of task " +
                                             std::to_string(task - 1));
  std::optional<ExemplarSet> prev_ex;
  if (!exemplars_path.empty()) prev_ex = json::parse(read_file(exemplars_path)).get<ExemplarSet>();

  const BenchmarkConfig seeded = cfg.with_seed(seed);
  const Dataset ds = dataset_for(cfg, seed, dataset_path);
  TaskResult r = run_task(prev ? &prev->state : nullptr, prev_ex ? &*prev_ex : nullptr, ds, task, seeded);
  ctx.log(describe(r.report));
  const std::string t = std::to_string(task);
  ctx.write("checkpoint_task" + t + ".json", serialize_checkpoint({r.state, cfg, seed}));
  ctx.write("exemplars_task" + t + ".json", json(r.exemplars).dump(2) + "\n");
  ctx.write("report_task" + t + ".json", report_json(r.report));
  return 0;
}

int cmd_eval(const Context& ctx, const std::string& checkpoint_path, std::optional<int> task,
             const std::string& dataset_path, std::optional<double> tau) {
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  const int t = task.value_or(ck.state.task);
  const Dataset ds = dataset_for(ck.config, ck.seed, dataset_path);
  EvalSettings settings = ck.config.effective_eval();
  if (tau) settings.tau = *tau;
  EvalReport report = evaluate_model(ck.state, ds.split(t, Split::kTest), ds.spec, t, settings);
  report.seed = ck.seed;
  report.ablation = ck.config.ablation;
  ctx.log(describe(report));
  ctx.write("report_task" + std::to_string(t) + ".json", report_json(report));
  return 0;
}

int cmd_benchmark(const Context& ctx, const std::vector<std::uint64_t>& seeds) {
  BenchmarkConfig cfg = ctx.config();
  if (!seeds.empty()) cfg.seeds = seeds;
  const bool multi = cfg.seeds.size() > 1;
  std::vector<SeedRun> runs;
  for (std::uint64_t seed : cfg.seeds) {
    SeedRun run = run_seed(cfg, seed);
    const std::string prefix = multi ? "seed" + std::to_string(seed) + "_" : "";
    for (const EvalReport& r : run.reports) {
      ctx.log((multi ? "seed " + std::to_string(seed) + " " : "") + describe(r));
      ctx.write("report_" + prefix + "task" + std::to_string(r.task) + ".json", report_json(r));
    }
    ctx.write("checkpoint_" + prefix + "task" + std::to_string(run.final_state.task) + ".json",
              serialize_checkpoint({run.final_state, cfg, seed}));
    if (!multi) ctx.write("tasks.svg", tasks_svg(run.reports));
    runs.push_back(std::move(run));
  }
  ctx.write("summary.csv", summary_csv(summarize(runs)));
  return 0;
}

int cmd_sweep(const Context& ctx, const std::string& checkpoint_path, std::optional<int> task,
              const std::string& dataset_path, const std::vector<double>& taus) {
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  const int t = task.value_or(ck.state.task);
  const Dataset ds = dataset_for(ck.config, ck.seed, dataset_path);
  const std::vector<double> tau_list = taus.empty() ? ck.config.tau_list : taus;
  std::vector<EvalReport> reports =
      temperature_sweep(ck.state, ds.split(t, Split::kTest), ds.spec, t, ck.config.effective_eval(), tau_list);
  json arr = json::array();
  for (EvalReport& r : reports) {
    r.seed = ck.seed;
    r.ablation = ck.config.ablation;
    ctx.log("tau " + format_number(r.settings.tau) + ": " + describe(r));
    arr.push_back(r);
  }
  ctx.write("sweep.json", arr.dump(2) + "\n");
  ctx.write("sweep.csv", sweep_csv(reports));
  ctx.write("sweep.svg", sweep_svg(reports));
  return 0;
}

int cmd_gradcheck(const Context& ctx, int configs, double tolerance) {
  const BenchmarkConfig cfg = ctx.config();
  double worst = 0.0;
  for (int i = 0; i < configs; ++i) {
    const GradCheckProblem p = make_gradcheck_problem(cfg.seeds.front() + static_cast<std::uint64_t>(i));
    const GradCheckResult r = gradient_check(p.params, p.gaussian, p.batch, p.weights);
    ctx.log("config " + std::to_string(i) + ": " + std::to_string(r.checked) + " parameters, max rel error " +
            format_number(r.max_rel_error, 3));
    worst = std::max(worst, r.max_rel_error);
  }
  ctx.log("worst max rel error " + format_number(worst, 3) + " (tolerance " + format_number(tolerance, 3) + ")");
  return worst < tolerance ? 0 : 1;
}

int cmd_report(const Context& ctx, const std::vector<std::string>& inputs) {
  std::vector<EvalReport> reports;
  std::vector<EvalReport> sweep;
  for (const std::string& path : inputs) {
    json j;
    try {
      j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
      throw LoadError("'" + path + "' is not valid JSON: " + e.what());
    }
    try {
      if (j.is_array()) {
        for (const json& r : j) sweep.push_back(r.get<EvalReport>());
      } else {
        reports.push_back(j.get<EvalReport>());
      }
    } catch (const json::exception& e) {
      throw LoadError("'" + path + "' is not a report: " + e.what());
    }
  }
  if (!reports.empty()) {
    std::vector<SummaryRow> rows;
    for (const EvalReport& r : reports) {
      rows.push_back({r.task, std::to_string(r.seed), r.map_prev, r.map_current, r.map_both, r.u_recall,
                      static_cast<double>(r.a_ose), r.wi, r.settings.tau});
      ctx.write("pr_task" + std::to_string(r.task) + ".svg", pr_svg(r));
    }
    ctx.write("report_summary.csv", summary_csv(rows));
    ctx.write("tasks.svg", tasks_svg(reports));
  }
  if (!sweep.empty()) {
    ctx.write("sweep.csv", sweep_csv(sweep));
    ctx.write("sweep.svg", sweep_svg(sweep));
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Probabilistic objectness for open-world detection on synthetic scenes", "prob"};
  app.require_subcommand(1);
  GlobalOptions g;
  std::uint64_t seed_value = 0;
  app.add_option("--config", g.config_path, "Run configuration (JSON)")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed_value, "Seed overriding the configured seeds");
  app.add_option("--out", g.out_dir, "Output directory")->capture_default_str();
  app.add_flag("--quiet", g.quiet, "Suppress progress output");

  auto* generate = app.add_subcommand("generate", "Write the synthetic dataset");

  int train_task = 0;
  std::string dataset_path, checkpoint_path, exemplars_path;
  auto* train = app.add_subcommand("train", "Train one task (with exemplar finetuning for task > 0)");
  train->add_option("--task", train_task, "Task index")->capture_default_str();
  train->add_option("--dataset", dataset_path, "Dataset file; regenerated from the config when absent");
  train->add_option("--checkpoint", checkpoint_path, "Checkpoint of the previous task");
  train->add_option("--exemplars", exemplars_path, "Exemplar memory of the previous task");

  std::optional<int> task_opt;
  std::optional<double> tau_opt;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a task's test view");
  eval->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  eval->add_option("--task", task_opt, "Task index (default: the checkpoint's task)");
  eval->add_option("--dataset", dataset_path, "Dataset file");
  eval->add_option("--tau", tau_opt, "Objectness temperature override");

  std::vector<std::uint64_t> seeds;
  auto* benchmark = app.add_subcommand("benchmark", "Run the full task schedule");
  benchmark->add_option("--seeds", seeds, "Seeds to run (mean/std rows when more than one)")->delimiter(',');

  std::vector<double> taus;
  auto* sweep = app.add_subcommand("sweep", "Re-score a checkpoint over objectness temperatures");
  sweep->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  sweep->add_option("--task", task_opt, "Task index (default: the checkpoint's task)");
  sweep->add_option("--dataset", dataset_path, "Dataset file");
  sweep->add_option("--taus", taus, "Temperatures (default: the configured list)")->delimiter(',');

  int configs = 20;
  double tolerance = 1e-4;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every analytic gradient");
  gradcheck->add_option("--configs", configs, "Number of random configurations")->capture_default_str();
  gradcheck->add_option("--tolerance", tolerance, "Maximum relative error")->capture_default_str();

  std::vector<std::string> inputs;
  auto* report = app.add_subcommand("report", "Convert report JSON files to CSV and SVG");
  report->add_option("--input", inputs, "Report or sweep JSON files")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return 0;
    if (e.get_exit_code() != static_cast<int>(CLI::ExitCodes::Success)) err << app.help();
    return 2;
  }
  if (seed_opt->count() > 0) g.seed = seed_value;

  const Context ctx(g, out);
  try {
    if (*generate) return cmd_generate(ctx);
    if (*train) return cmd_train(ctx, train_task, dataset_path, checkpoint_path, exemplars_path);
    if (*eval) return cmd_eval(ctx, checkpoint_path, task_opt, dataset_path, tau_opt);
    if (*benchmark) return cmd_benchmark(ctx, seeds);
    if (*sweep) return cmd_sweep(ctx, checkpoint_path, task_opt, dataset_path, taus);
    if (*gradcheck) return cmd_gradcheck(ctx, configs, tolerance);
    if (*report) return cmd_report(ctx, inputs);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  err << app.help();
  return 2;
}

}  // namespace prob::cli
