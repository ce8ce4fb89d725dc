#include <doctest.h>

#include "scenario.h"
#include "veriflow/cli.h"
#include "veriflow/trace_store.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace veriflow;
using namespace veriflow::testing;
namespace fs = std::filesystem;

namespace {

struct Workdir {
  fs::path dir;
  Workdir() {
    std::random_device rd;
    dir = fs::temp_directory_path() / ("veriflow-cli-" + std::to_string(rd()));
    fs::create_directories(dir);
  }
  ~Workdir() { fs::remove_all(dir); }

  fs::path write(const std::string &name, const std::string &text) const {
    const auto p = dir / name;
    std::ofstream(p, std::ios::binary) << text;
    return p;
  }
  fs::path script(const std::string &name, const std::vector<std::string> &responses) const {
    return write(name, nlohmann::json(responses).dump());
  }
};

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cmd(std::vector<std::string> args) {
  args.insert(args.begin(), "veriflow");
  std::vector<const char *> argv;
  for (const auto &a : args) {
    argv.push_back(a.c_str());
  }
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

const std::string kHarness = std::string("python3 ") + VERIFLOW_FIXTURE_DIR + "/fake_harness.py";

std::string one_node_plan(const std::string &vf_code) {
  return plan_text({{"n", {"USER_TASK"}, {"ans"}, {vf_code}, {}, true}}, {});
}

std::string read_all(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

} // namespace

TEST_CASE("run exits 0 on success and prints a summary line") {
  Workdir w;
  const auto task = w.write("add.txt", "What is 2+2?\n");
  const auto script = w.script("s.json", {one_node_plan("pass"), answer({{"ans", 4}})});
  const auto trace = w.dir / "trace.jsonl";
  const auto r = run_cmd({"run", "--task-file", task.string(), "--backend", "scripted", "--script",
                      script.string(), "--harness-cmd", kHarness, "--trace-out", trace.string(),
                      "--deterministic"});
  CHECK(r.code == 0);
  const auto summary = nlohmann::json::parse(r.out);
  CHECK(summary["task_id"] == "add");
  CHECK(summary["run_id"] == "run-1");
  CHECK(summary["status"] == "success");
  CHECK(summary["final_output"]["ans"] == 4);
  const auto events = read_trace_file(trace).events;
  REQUIRE(!events.empty());
  CHECK(events.front().kind == EventKind::plan_generated);
  CHECK(events.back().kind == EventKind::outcome);
  CHECK(events.back().payload["task_id"] == "add");
}

TEST_CASE("run exits 2 when the task fails") {
  Workdir w;
  const auto task = w.write("t.json", R"({"task": "What is 2+2?", "task_id": "q1"})");
  const auto script = w.script("s.json", {one_node_plan("fail"), answer({{"ans", 5}})});
  const auto r = run_cmd({"run", "--task-file", task.string(), "--backend", "scripted", "--script",
                      script.string(), "--harness-cmd", kHarness, "--max-retries", "1",
                      "--max-iterations", "1"});
  CHECK(r.code == 2);
  const auto summary = nlohmann::json::parse(r.out);
  CHECK(summary["task_id"] == "q1");
  CHECK(summary["status"] == "failure");
}

TEST_CASE("run exits 1 on engine errors") {
  Workdir w;
  const auto task = w.write("t.txt", "task");

  SUBCASE("script runs dry") {
    const auto script = w.script("s.json", {one_node_plan("pass")});
    const auto trace = w.dir / "trace.jsonl";
    const auto r = run_cmd({"run", "--task-file", task.string(), "--backend", "scripted", "--script",
                        script.string(), "--harness-cmd", kHarness, "--trace-out",
                        trace.string(), "--deterministic"});
    CHECK(r.code == 1);
    CHECK(nlohmann::json::parse(r.out)["status"] == "error");
    const auto events = read_trace_file(trace).events;
    REQUIRE(!events.empty());
    CHECK(events.back().payload["status"] == "error");
  }
  SUBCASE("executable VFs without a harness") {
    const auto script = w.script("s.json", {one_node_plan("pass"), answer({{"ans", 4}})});
    const auto r = run_cmd({"run", "--task-file", task.string(), "--backend", "scripted", "--script",
                        script.string()});
    CHECK(r.code == 1);
  }
  SUBCASE("missing task file") {
    const auto r = run_cmd({"run", "--task-file", (w.dir / "nope.txt").string(), "--backend",
                        "scripted", "--script", (w.dir / "s.json").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("error:") != std::string::npos);
  }
  SUBCASE("scripted backend without a script") {
    const auto r = run_cmd({"run", "--task-file", task.string(), "--backend", "scripted"});
    CHECK(r.code == 1);
  }
  SUBCASE("bad config key") {
    const auto cfg = w.write("c.json", R"({"max_retires": 3})");
    const auto r = run_cmd({"run", "--task-file", task.string(), "--config", cfg.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("max_retires") != std::string::npos);
  }
  SUBCASE("unknown subcommand") {
    CHECK(run_cmd({"frobnicate"}).code == 1);
  }
}

TEST_CASE("a failure and an engine error together exit 1") {
  Workdir w;
  const auto a = w.write("a.txt", "task a");
  const auto b = w.write("b.txt", "task b");
  // Task a fails after one attempt; task b then finds the script empty.
  const auto script = w.script("s.json", {one_node_plan("fail"), answer({{"ans", 5}})});
  const auto r = run_cmd({"run", "--task-file", a.string(), "--task-file", b.string(), "--backend",
                      "scripted", "--script", script.string(), "--harness-cmd", kHarness,
                      "--max-retries", "1", "--max-iterations", "1"});
  CHECK(r.code == 1);
  std::istringstream lines(r.out);
  std::string first;
  std::string second;
  std::getline(lines, first);
  std::getline(lines, second);
  CHECK(nlohmann::json::parse(first)["status"] == "failure");
  CHECK(nlohmann::json::parse(second)["status"] == "error");
}

TEST_CASE("validate") {
  Workdir w;
  const auto good = w.write("good.json", one_node_plan("pass"));
  auto r = run_cmd({"validate", good.string()});
  CHECK(r.code == 0);

  const auto cyclic = w.write(
      "cyclic.json",
      plan_text({{"a", {"<b.x>"}, {"x"}, {}, {}, false}, {"b", {"<a.x>"}, {"x"}, {}, {}, true}},
                {{"a", "b"}, {"b", "a"}}));
  r = run_cmd({"validate", cyclic.string()});
  CHECK(r.code == 3);
  CHECK(r.out.find("CYCLE") != std::string::npos);

  const auto junk = w.write("junk.json", "{not json");
  r = run_cmd({"validate", junk.string()});
  CHECK(r.code == 3);
  CHECK(r.out.find("ParseError") != std::string::npos);

  CHECK(run_cmd({"validate", (w.dir / "missing.json").string()}).code == 1);
}

TEST_CASE("report with and without labels") {
  Workdir w;
  const auto trace = w.dir / "trace.jsonl";
  const auto t1 = w.write("t1.txt", "task one");
  const auto t2 = w.write("t2.txt", "task two");
  const auto script = w.script("s.json", {one_node_plan("pass"), answer({{"ans", 4}}),
                                          one_node_plan("fail"), answer({{"ans", 5}})});
  const auto run = run_cmd({"run", "--task-file", t1.string(), "--task-file", t2.string(),
                        "--backend", "scripted", "--script", script.string(), "--harness-cmd",
                        kHarness, "--trace-out", trace.string(), "--deterministic",
                        "--max-retries", "1", "--max-iterations", "1"});
  REQUIRE(run.code == 2);

  auto r = run_cmd({"report", "--traces", trace.string(), "--format", "json"});
  CHECK(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["runs"] == 2);
  CHECK(j["fp_fn"].is_null());
  CHECK(j["cost_usd"]["total"]["total"].get<double>() > 0);
  CHECK(j["vf_profile"]["executions"]["executable"]["avg_count_per_task"] == 1.0);

  // t1 passed but was wrong, t2 failed and was wrong.
  const auto labels = w.write("labels.json", R"({"t1": false, "t2": false})");
  r = run_cmd({"report", "--traces", trace.string(), "--labels", labels.string(), "--format",
           "json"});
  CHECK(r.code == 0);
  j = nlohmann::json::parse(r.out);
  CHECK(j["fp_fn"]["labeled_runs"] == 2);
  CHECK(j["fp_fn"]["fp_rate"] == 0.5);
  CHECK(j["fp_fn"]["fn_rate"] == 0.0);

  r = run_cmd({"report", "--traces", trace.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("runs") != std::string::npos);

  const auto empty = w.write("empty.jsonl", "");
  r = run_cmd({"report", "--traces", empty.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("no trace events") != std::string::npos);
  CHECK(run_cmd({"report", "--traces", trace.string(), "--format", "xml"}).code == 1);
}

TEST_CASE("deterministic runs of the binary write byte-identical traces") {
  Workdir w;
  const auto t1 = w.write("t1.txt", "What is 2+2?");
  const auto t2 = w.write("t2.txt", "What is 3+3?");
  const auto plan = plan_text({{"a", {"USER_TASK"}, {"x"}, {"pass"}, {}, false},
                               {"b", {"<a.x>"}, {"ans"}, {"pass"}, {}, true}},
                              {{"a", "b"}});
  const auto script =
      w.script("s.json", {plan, action("calculator", {{"input", "2+2"}}), answer({{"x", 4}}),
                          answer({{"ans", 4}}), plan, answer({{"x", 6}}), answer({{"ans", 6}})});
  auto run = [&](const fs::path &trace) {
    const std::string cmd = std::string("\"") + VERIFLOW_CLI_PATH + "\" run --task-file " +
                            t1.string() + " --task-file " + t2.string() +
                            " --backend scripted --script " + script.string() +
                            " --harness-cmd '" + kHarness + "' --deterministic --trace-out " +
                            trace.string() + " > /dev/null";
    return std::system(cmd.c_str());
  };
  REQUIRE(run(w.dir / "one.jsonl") == 0);
  REQUIRE(run(w.dir / "two.jsonl") == 0);
  const auto one = read_all(w.dir / "one.jsonl");
  CHECK(!one.empty());
  CHECK(one == read_all(w.dir / "two.jsonl"));
  CHECK(one.find("\"run_id\":\"run-2\"") != std::string::npos);
}
