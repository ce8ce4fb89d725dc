#include "veriflow/cli.h"

#include "veriflow/coordinator.h"
#include "veriflow/error.h"
#include "veriflow/http_backend.h"
#include "veriflow/metrics.h"
#include "veriflow/trace_store.h"

#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <unistd.h>

namespace veriflow::cli {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot read " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

nlohmann::json read_json_file(const fs::path &path) {
  const auto text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error &e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string word;
  while (in >> word) {
    out.push_back(word);
  }
  return out;
}

} // namespace

RunConfig RunConfig::from_json(const nlohmann::json &j) {
  if (!j.is_object()) {
    throw std::invalid_argument("config must be a JSON object");
  }
  RunConfig c;
  for (const auto &[key, value] : j.items()) {
    try {
      if (key == "planner_model") {
        c.planner_model = value.get<std::string>();
      } else if (key == "executor_model") {
        c.executor_model = value.get<std::string>();
      } else if (key == "verifier_model") {
        c.verifier_model = value.get<std::string>();
      } else if (key == "backend") {
        c.backend = value.get<std::string>();
      } else if (key == "script") {
        c.script = value.get<std::string>();
      } else if (key == "max_retries") {
        c.max_retries = value.get<int>();
      } else if (key == "max_iterations") {
        c.max_iterations = value.get<int>();
      } else if (key == "executor_round_cap") {
        c.executor_round_cap = value.get<int>();
      } else if (key == "judge_round_cap") {
        c.judge_round_cap = value.get<int>();
      } else if (key == "max_parse_retries") {
        c.max_parse_retries = value.get<int>();
      } else if (key == "vf_timeout_s") {
        c.vf_timeout_s = value.get<int>();
      } else if (key == "temperature") {
        c.temperature = value.get<double>();
      } else if (key == "top_p") {
        c.top_p = value.get<double>();
      } else if (key == "prices") {
        c.prices = value.get<std::string>();
      } else if (key == "corpus") {
        c.corpus = value.get<std::string>();
      } else if (key == "trace_out") {
        c.trace_out = value.get<std::string>();
      } else if (key == "harness_cmd") {
        c.harness_cmd = value.is_string() ? split_words(value.get<std::string>())
                                          : value.get<std::vector<std::string>>();
      } else if (key == "base_url") {
        c.base_url = value.get<std::string>();
      } else if (key == "api_key") {
        c.api_key = value.get<std::string>();
      } else if (key == "request_timeout_s") {
        c.request_timeout_s = value.get<int>();
      } else if (key == "demo_example") {
        c.demo_example = value.get<std::string>();
      } else {
        throw std::invalid_argument("unknown config key \"" + key + "\"");
      }
    } catch (const nlohmann::json::type_error &e) {
      throw std::invalid_argument("config key \"" + key + "\": " + e.what());
    }
  }
  return c;
}

void RunConfig::validate() const {
  if (backend != "http" && backend != "scripted") {
    throw std::invalid_argument("backend must be \"http\" or \"scripted\"");
  }
  if (backend == "scripted" && !script) {
    throw std::invalid_argument("the scripted backend needs a script file");
  }
  if (max_retries < 1 || max_iterations < 1 || executor_round_cap < 1 ||
      judge_round_cap < 1) {
    throw std::invalid_argument("retry, iteration and round limits must be >= 1");
  }
  if (max_parse_retries < 0) {
    throw std::invalid_argument("max_parse_retries must be >= 0");
  }
  if (vf_timeout_s < 1 || request_timeout_s < 1) {
    throw std::invalid_argument("timeouts must be >= 1 second");
  }
}

TaskSpec load_task_file(const fs::path &path) {
  const auto text = read_file(path);
  TaskSpec spec;
  spec.task_id = path.stem().string();
  nlohmann::json j;
  bool is_json = false;
  try {
    j = nlohmann::json::parse(text);
    is_json = j.is_object();
  } catch (const nlohmann::json::parse_error &) {
  }
  if (!is_json) {
    spec.task = text;
    while (!spec.task.empty() &&
           (spec.task.back() == '\n' || spec.task.back() == '\r')) {
      spec.task.pop_back();
    }
  } else {
    if (!j.contains("task") || !j["task"].is_string()) {
      throw std::runtime_error(path.string() + ": JSON task file needs a \"task\" string");
    }
    spec.task = j["task"].get<std::string>();
    if (auto id = j.find("task_id"); id != j.end() && id->is_string()) {
      spec.task_id = id->get<std::string>();
    }
    if (auto label = j.find("label"); label != j.end() && label->is_boolean()) {
      spec.label = label->get<bool>();
    }
  }
  if (spec.task.empty()) {
    throw std::runtime_error(path.string() + ": task is empty");
  }
  return spec;
}

std::vector<std::string> load_script_file(const fs::path &path) {
  auto j = read_json_file(path);
  if (j.is_object() && j.contains("responses")) {
    j = j["responses"];
  }
  if (!j.is_array()) {
    throw std::runtime_error(path.string() +
                             ": script must be an array of strings or {\"responses\": [...]}");
  }
  std::vector<std::string> out;
  for (const auto &r : j) {
    if (!r.is_string()) {
      throw std::runtime_error(path.string() + ": script entries must be strings");
    }
    out.push_back(r.get<std::string>());
  }
  return out;
}

namespace {

struct RunResult {
  int exit = exit_code::kEngineError;
  std::string summary;
  std::unique_ptr<EventRecorder> events;
};

std::string random_run_id() {
  std::random_device rd;
  std::ostringstream s;
  s << std::hex << std::setfill('0') << std::setw(8) << rd() << std::setw(8) << rd();
  return s.str();
}

struct SharedRunState {
  const RunConfig &cfg;
  std::shared_ptr<Backend> backend;
  const ToolRegistry &registry;
  const PriceTable &prices;
  TraceStore *store;
  bool deterministic;
};

RunResult run_one(const SharedRunState &shared, const TaskSpec &task, std::size_t index) {
  RunResult result;
  const auto run_id =
      shared.deterministic ? "run-" + std::to_string(index + 1) : random_run_id();
  result.events = std::make_unique<EventRecorder>(
      run_id, shared.deterministic, shared.deterministic ? nullptr : shared.store);

  const auto scratch = fs::temp_directory_path() /
                       ("veriflow-" + std::to_string(::getpid()) + "-" +
                        std::to_string(index) + "-" + random_run_id());
  std::error_code ec;
  fs::create_directories(scratch, ec);

  std::unique_ptr<SubprocessHarness> harness;
  if (!shared.cfg.harness_cmd.empty()) {
    harness = std::make_unique<SubprocessHarness>(shared.cfg.harness_cmd);
  }

  PlannerConfig planner;
  planner.model_id = shared.cfg.planner_model;
  planner.tool_descriptions = shared.registry.render_descriptions();
  planner.demo_example = shared.cfg.demo_example;
  planner.max_parse_retries = shared.cfg.max_parse_retries;
  planner.temperature = shared.cfg.temperature;
  planner.top_p = shared.cfg.top_p;

  CoordinatorConfig coord;
  coord.max_retries = shared.cfg.max_retries;
  coord.max_iterations = shared.cfg.max_iterations;
  coord.executor_round_cap = shared.cfg.executor_round_cap;
  coord.executor_model = shared.cfg.executor_model;
  coord.temperature = shared.cfg.temperature;
  coord.top_p = shared.cfg.top_p;
  coord.verifier.model_id = shared.cfg.verifier_model;
  coord.verifier.judge_round_cap = shared.cfg.judge_round_cap;
  coord.verifier.vf_timeout_s = shared.cfg.vf_timeout_s;
  coord.verifier.temperature = shared.cfg.temperature;
  coord.verifier.top_p = shared.cfg.top_p;

  RunEnvironment env;
  env.tool_ctx.scratch_dir = scratch;
  env.tool_ctx.harness = harness.get();
  env.tool_ctx.code_timeout_s = shared.cfg.vf_timeout_s;
  env.harness = harness.get();
  env.prices = &shared.prices;
  env.events = result.events.get();
  env.task_id = task.task_id;

  Gateway gateway(shared.backend);
  ordered_json summary;
  summary["task_id"] = task.task_id;
  summary["run_id"] = run_id;
  try {
    const auto outcome =
        run_task(task.task, planner, coord, gateway, shared.registry, env);
    summary["status"] = std::string(to_string(outcome.status));
    summary["iterations"] = outcome.iterations_used;
    summary["cost_usd"] = outcome.total_cost_usd;
    summary["final_output"] =
        outcome.final_output ? outcome.final_output->json() : ordered_json();
    if (outcome.error) {
      summary["error"] = *outcome.error;
    }
    result.exit = outcome.status == TaskStatus::success ? exit_code::kSuccess
                                                        : exit_code::kTaskFailure;
  } catch (const std::exception &e) {
    const std::string message = e.what();
    result.events->emit(0, std::nullopt, EventKind::outcome,
                        {{"task_id", task.task_id},
                         {"status", "error"},
                         {"final_output", nullptr},
                         {"error", message},
                         {"usage", usage_payload(gateway.calls())}});
    summary["status"] = "error";
    summary["error"] = message;
    result.exit = exit_code::kEngineError;
  }
  fs::remove_all(scratch, ec);
  result.summary = summary.dump();
  return result;
}

int cmd_run(const RunConfig &cfg, const std::vector<std::string> &task_files,
            bool deterministic, int parallel, std::ostream &out, std::ostream &err) {
  cfg.validate();
  if (task_files.empty()) {
    throw std::invalid_argument("run needs at least one --task-file");
  }
  std::vector<TaskSpec> tasks;
  for (const auto &f : task_files) {
    tasks.push_back(load_task_file(f));
  }

  std::shared_ptr<Backend> backend;
  if (cfg.backend == "scripted") {
    backend = std::make_shared<ScriptedBackend>(load_script_file(*cfg.script));
  } else {
    auto http = HttpBackendConfig::from_env();
    if (cfg.base_url) {
      http.base_url = *cfg.base_url;
    }
    if (cfg.api_key) {
      http.api_key = *cfg.api_key;
    }
    http.timeout = std::chrono::seconds(cfg.request_timeout_s);
    backend = std::make_shared<HttpBackend>(std::move(http));
  }

  const auto prices =
      cfg.prices ? PriceTable::from_json(read_json_file(*cfg.prices)) : PriceTable::defaults();

  ToolRegistry registry;
  BuiltinToolOptions tool_options;
  if (cfg.corpus) {
    tool_options.corpus = std::make_shared<const Corpus>(Corpus::load_jsonl(*cfg.corpus));
  }
  register_builtin_tools(registry, tool_options);

  std::unique_ptr<TraceStore> store;
  if (cfg.trace_out) {
    store = std::make_unique<TraceStore>(*cfg.trace_out);
  }

  const SharedRunState shared{cfg, backend, registry, prices, store.get(), deterministic};
  std::vector<RunResult> results(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (auto i = next++; i < tasks.size(); i = next++) {
      results[i] = run_one(shared, tasks[i], i);
    }
  };
  const auto threads =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(1, parallel)), tasks.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back(worker);
    }
    for (auto &t : pool) {
      t.join();
    }
  }

  int code = exit_code::kSuccess;
  for (const auto &r : results) {
    if (store && deterministic) {
      r.events->flush_to(*store);
    }
    out << r.summary << "\n";
    if (r.exit == exit_code::kEngineError) {
      code = exit_code::kEngineError;
    } else if (r.exit == exit_code::kTaskFailure && code == exit_code::kSuccess) {
      code = exit_code::kTaskFailure;
    }
  }
  (void)err;
  return code;
}

int cmd_validate(const fs::path &plan_file, std::ostream &out, std::ostream &err) {
  std::string text;
  try {
    text = read_file(plan_file);
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kEngineError;
  }
  Plan plan;
  try {
    plan = parse_plan(text);
  } catch (const ParseError &e) {
    out << "INVALID\nParseError: " << e.what() << "\n";
    return exit_code::kValidationFailure;
  }
  const auto report = validate_plan(plan);
  out << format_report(report);
  return report.ok ? exit_code::kSuccess : exit_code::kValidationFailure;
}

int cmd_report(const std::vector<std::string> &trace_files,
               const std::optional<std::string> &prices_file,
               const std::optional<std::string> &labels_file, const std::string &format,
               std::ostream &out, std::ostream &err) {
  if (trace_files.empty()) {
    err << "error: report needs at least one --traces file\n";
    return exit_code::kEngineError;
  }
  std::vector<TraceEvent> events;
  for (const auto &f : trace_files) {
    auto read = read_trace_file(f);
    for (const auto &w : read.warnings) {
      err << "warning: " << f << ": " << w << "\n";
    }
    events.insert(events.end(), std::make_move_iterator(read.events.begin()),
                  std::make_move_iterator(read.events.end()));
  }
  const auto runs = replay_runs(events);
  if (runs.empty()) {
    err << "error: no trace events found\n";
    return exit_code::kEngineError;
  }
  const auto prices =
      prices_file ? PriceTable::from_json(read_json_file(*prices_file)) : PriceTable::defaults();
  std::optional<std::vector<GroundTruthLabel>> labels;
  if (labels_file) {
    labels = parse_labels(read_json_file(*labels_file));
  }
  const auto report = build_report(runs, prices, labels);
  if (format == "json") {
    out << report_to_json(report).dump(2) << "\n";
  } else {
    out << report_to_text(report);
  }
  return exit_code::kSuccess;
}

} // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Plan, execute and verify tasks with tool-using model agents.", "veriflow"};
  app.require_subcommand(1);

  auto *run = app.add_subcommand("run", "Run one or more tasks");
  std::vector<std::string> task_files;
  std::string config_file, backend, script, trace_out, harness_cmd;
  int max_retries = 0, max_iterations = 0, parallel = 1;
  bool deterministic = false;
  run->add_option("--task-file", task_files, "Task file (text or JSON); repeatable")
      ->required();
  run->add_option("--config", config_file, "JSON run configuration");
  run->add_option("--backend", backend, "http or scripted");
  run->add_option("--script", script, "Scripted completions (JSON)");
  run->add_option("--max-retries", max_retries, "Attempts per node per plan");
  run->add_option("--max-iterations", max_iterations, "Plans per task");
  run->add_option("--trace-out", trace_out, "Append trace events (JSONL) here");
  run->add_flag("--deterministic", deterministic,
                "Sequence timestamps and fixed run ids for reproducible traces");
  run->add_option("--parallel", parallel, "Concurrent runs")->check(CLI::PositiveNumber);
  run->add_option("--harness-cmd", harness_cmd, "Command line of the VF sandbox process");

  auto *validate = app.add_subcommand("validate", "Check a plan file");
  std::string plan_file;
  validate->add_option("plan", plan_file, "Plan JSON")->required();

  auto *report = app.add_subcommand("report", "Summarize trace files");
  std::vector<std::string> trace_files;
  std::optional<std::string> prices_file, labels_file;
  std::string format = "text";
  report->add_option("--traces", trace_files, "Trace files")->expected(1, -1);
  report->add_option("--prices", prices_file, "Price table JSON");
  report->add_option("--labels", labels_file, "Ground-truth labels JSON");
  report->add_option("--format", format, "text or json")
      ->check(CLI::IsMember({"text", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_code::kSuccess : exit_code::kEngineError;
  }

  try {
    if (*run) {
      RunConfig cfg;
      if (!config_file.empty()) {
        cfg = RunConfig::from_json(read_json_file(config_file));
      }
      if (!backend.empty()) {
        cfg.backend = backend;
      }
      if (!script.empty()) {
        cfg.script = script;
      }
      if (run->count("--max-retries") > 0) {
        cfg.max_retries = max_retries;
      }
      if (run->count("--max-iterations") > 0) {
        cfg.max_iterations = max_iterations;
      }
      if (!trace_out.empty()) {
        cfg.trace_out = trace_out;
      }
      if (!harness_cmd.empty()) {
        cfg.harness_cmd = split_words(harness_cmd);
      }
      return cmd_run(cfg, task_files, deterministic, parallel, out, err);
    }
    if (*validate) {
      return cmd_validate(plan_file, out, err);
    }
    return cmd_report(trace_files, prices_file, labels_file, format, out, err);
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kEngineError;
  }
}

} // namespace veriflow::cli
