// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Runs entirely on scripted backends and in-process
// harness doubles, plus two invocations of the CLI binary.

#include "alg1_scenarios.h"
#include "plan_oracle.h"
#include "scenario.h"

#include "veriflow/metrics.h"
#include "veriflow/prompts.h"
#include "veriflow/executor.h"
#include "veriflow/verifier.h"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

using namespace veriflow;
using namespace veriflow::testing;
namespace fs = std::filesystem;

namespace {

constexpr double kScenarioBudgetS = 10.0;
constexpr double kOracleBudgetS = 30.0;
constexpr double kCostToleranceUsd = 1e-9;
constexpr int kOracleGraphs = 1000;
constexpr int kAndVectors = 10000;
constexpr int kFpFnVectors = 1000;

struct Verdict {
  bool pass = true;
  std::string detail;

  void fail(const std::string &why) {
    if (pass) {
      detail = why;
    }
    pass = false;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 6) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

std::string read_all(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict algorithm_conformance() {
  Verdict v;
  const auto t0 = Clock::now();
  const auto scenarios = algorithm1_scenarios();
  if (scenarios.size() != 12) {
    v.fail("expected 12 scenarios, found " + std::to_string(scenarios.size()));
  }
  for (const auto &s : scenarios) {
    const auto errors = s.run();
    if (!errors.empty()) {
      v.fail(s.name + ": " + errors.front());
    }
  }
  const double elapsed = seconds_since(t0);
  if (elapsed >= kScenarioBudgetS) {
    v.fail("took " + fmt(elapsed, 2) + " s");
  }
  if (v.pass) {
    v.detail = std::to_string(scenarios.size()) + " scenarios in " + fmt(elapsed, 2) + " s";
  }
  return v;
}

Verdict default_limits() {
  Verdict v;
  const CoordinatorConfig cfg;
  if (cfg.max_retries != 3) v.fail("R_max " + std::to_string(cfg.max_retries));
  if (cfg.max_iterations != 5) v.fail("I_max " + std::to_string(cfg.max_iterations));
  if (cfg.executor_round_cap != 20) v.fail("executor cap " + std::to_string(cfg.executor_round_cap));
  if (v.pass) v.detail = "R_max=3 I_max=5 executor_rounds=20";
  return v;
}

Verdict plan_validation_oracle() {
  Verdict v;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240611);
  int accepted = 0;
  for (int i = 0; i < kOracleGraphs; ++i) {
    const auto raw = random_raw_plan(rng, 12);
    const bool expected = oracle_accepts(raw);
    bool got = false;
    try {
      got = validate_plan(parse_plan(to_plan_json(raw).dump())).ok;
    } catch (const std::exception &e) {
      v.fail("graph " + std::to_string(i) + " threw " + e.what());
      continue;
    }
    if (got != expected) {
      v.fail("graph " + std::to_string(i) + " disagrees: " + to_plan_json(raw).dump());
    }
    accepted += got ? 1 : 0;
  }
  const double elapsed = seconds_since(t0);
  if (elapsed >= kOracleBudgetS) v.fail("took " + fmt(elapsed, 2) + " s");
  if (accepted == 0 || accepted == kOracleGraphs) v.fail("generator produced one outcome only");
  if (v.pass) {
    v.detail = std::to_string(kOracleGraphs) + " graphs, " + std::to_string(accepted) +
               " accepted, " + fmt(elapsed, 2) + " s";
  }
  return v;
}

Verdict and_aggregation() {
  Verdict v;
  // Each VF's code names its own result; the double just reads it back.
  CallbackHarness harness([](const HarnessRequest &r) {
    HarnessResponse out;
    out.passed = r.code == "pass";
    if (!out.passed) {
      out.traceback = "AssertionError";
      out.error_type = "AssertionError";
    }
    return out;
  });
  VerifierDeps deps;
  deps.harness = &harness;
  std::mt19937 rng(10000);
  for (int trial = 0; trial < kAndVectors; ++trial) {
    PlanNode node;
    node.id = "n";
    const int n = std::uniform_int_distribution<int>(0, 10)(rng);
    bool all = true;
    for (int i = 0; i < n; ++i) {
      const bool ok = rng() % 2 == 0;
      all = all && ok;
      node.verification.push_back(
          {"vf_" + std::to_string(i), VfKind::executable, ok ? "pass" : "fail"});
    }
    const auto report = verify_node(node, {}, {}, deps);
    if (report.passed != all) {
      v.fail("vector " + std::to_string(trial) + ": passed != AND");
    }
    for (const auto &spec : node.verification) {
      const std::string header = "VF " + spec.name + " failed:\n";
      std::size_t hits = 0;
      for (auto p = report.feedback_bundle.find(header); p != std::string::npos;
           p = report.feedback_bundle.find(header, p + 1)) {
        ++hits;
      }
      const std::size_t want = spec.payload == "fail" ? 1 : 0;
      if (hits != want) {
        v.fail("vector " + std::to_string(trial) + ": " + spec.name + " appears " +
               std::to_string(hits) + " times");
      }
    }
  }
  if (v.pass) v.detail = std::to_string(kAndVectors) + " vectors";
  return v;
}

Verdict cost_arithmetic() {
  Verdict v;
  // Hand arithmetic: mini is 10k * $0.15/M + 2k * $0.60/M, 4.1 is
  // 10k * $2.00/M + 2k * $8.00/M.
  const double want_mini = 0.0015 + 0.0012;
  const double want_41 = 0.02 + 0.016;
  const TokenUsage usage{10000, 0, 2000};
  const auto prices = PriceTable::defaults();
  const double mini = cost_of(usage, "gpt-4o-mini", prices);
  const double big = cost_of(usage, "gpt-4.1", prices);
  if (std::abs(mini - want_mini) > kCostToleranceUsd) v.fail("gpt-4o-mini $" + fmt(mini, 9));
  if (std::abs(big - want_41) > kCostToleranceUsd) v.fail("gpt-4.1 $" + fmt(big, 9));
  if (v.pass) v.detail = "gpt-4o-mini $" + fmt(mini) + ", gpt-4.1 $" + fmt(big);
  return v;
}

Verdict fp_fn() {
  Verdict v;
  auto lo = [](bool pass, bool right) { return LabeledOutcome{pass, {"t", right}}; };
  const auto sanity =
      fp_fn_rates({lo(true, false), lo(true, true), lo(false, true), lo(false, false)});
  if (sanity.fp_rate != 0.25 || sanity.fn_rate != 0.25) {
    v.fail("sanity case gave (" + fmt(sanity.fp_rate) + ", " + fmt(sanity.fn_rate) + ")");
  }
  std::mt19937 rng(1000);
  for (int trial = 0; trial < kFpFnVectors; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 200);
    std::vector<LabeledOutcome> outcomes;
    int fp = 0;
    int fn = 0;
    for (int i = 0; i < n; ++i) {
      const bool pass = rng() % 2;
      const bool right = rng() % 2;
      outcomes.push_back(lo(pass, right));
      fp += pass && !right;
      fn += !pass && right;
    }
    const auto r = fp_fn_rates(outcomes);
    if (r.fp_rate != static_cast<double>(fp) / n || r.fn_rate != static_cast<double>(fn) / n) {
      v.fail("vector " + std::to_string(trial) + " disagrees");
    }
  }
  if (v.pass) v.detail = std::to_string(kFpFnVectors) + " vectors, sanity (0.25, 0.25)";
  return v;
}

Verdict react_corpus() {
  Verdict v;
  std::ifstream in(std::string(VERIFLOW_FIXTURE_DIR) + "/react_corpus.json");
  if (!in) {
    v.fail("fixture missing");
    return v;
  }
  const auto corpus = nlohmann::json::parse(in);
  if (corpus.size() != 30) v.fail("expected 30 transcripts, found " + std::to_string(corpus.size()));
  std::map<std::string, int> kinds;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto &c = corpus[i];
    const auto step = parse_react_step(c["text"].get<std::string>());
    const std::string kind(to_string(step.kind));
    ++kinds[kind];
    if (kind != c["kind"].get<std::string>()) {
      v.fail("transcript " + std::to_string(i) + " parsed as " + kind);
    }
    if (c.contains("action") && step.action_name != c["action"].get<std::string>()) {
      v.fail("transcript " + std::to_string(i) + " action name");
    }
    if (c.contains("input") && step.action_input_json != c["input"].get<std::string>()) {
      v.fail("transcript " + std::to_string(i) + " action input");
    }
    if (c.contains("answer") && step.answer != c["answer"].get<std::string>()) {
      v.fail("transcript " + std::to_string(i) + " answer");
    }
  }
  if (v.pass) {
    v.detail = std::to_string(kinds["action"]) + " action, " +
               std::to_string(kinds["final_answer"]) + " answer, " +
               std::to_string(kinds["malformed"]) + " malformed";
  }
  return v;
}

Verdict prompt_pinning() {
  Verdict v;
  namespace pr = veriflow::prompts;
  const std::map<pr::Template, std::string> pinned = {
      {pr::Template::planner, "e1be6f62b6ca420e30c1ca2e99738b05a5d0e778f6ebeee954f7419400bb7220"},
      {pr::Template::replanner, "f38b849522251bc33e57ec6ccae533e7e2811a25c3c9401fa852b4c5fe99370a"},
      {pr::Template::executor_system,
       "9541768aea41ddfb1bff1e01d50afacd7a3d06d8d91b602ed63b069cec3881df"},
      {pr::Template::executor_task,
       "21ca755157db0adae9861e07d9b355637670ea1e7d9b7d9442950dc8f3eee1fd"},
      {pr::Template::verifier, "d85248262b63f2a2a21b88bf735e8519a67633de5dbb488df4625077205a8fe5"},
  };
  for (const auto &[t, digest] : pinned) {
    if (pr::checksum(t) != digest) v.fail(std::string(pr::name(t)) + " checksum changed");
  }

  // Scripted replan: the only node fails R_max times, then a second plan passes.
  const auto plan1 = plan_text({{"solve", {"USER_TASK"}, {"ans"}, {"fail"}, {}, true}}, {});
  const auto plan2 = plan_text({{"again", {"USER_TASK"}, {"ans"}, {}, {}, true}}, {});
  const auto r = run_scenario("What is 2+2?", {plan1, answer({{"ans", 5}}), answer({{"ans", 5}}),
                                               answer({{"ans", 5}}), plan2, answer({{"ans", 4}})});
  const auto previous = serialize_plan(parse_plan(plan1));
  int planner_calls = 0;
  bool embedded = false;
  for (std::size_t i = 0; i < r.calls.size(); ++i) {
    if (r.calls[i].component != Component::planner) continue;
    if (++planner_calls == 2) {
      embedded = r.requests[i].messages.front().content.find(previous) != std::string::npos;
    }
  }
  if (r.outcome.status != TaskStatus::success) v.fail("replan run did not succeed");
  if (planner_calls != 2) v.fail("expected 2 planner calls, saw " + std::to_string(planner_calls));
  if (!embedded) v.fail("replanning prompt lacks the previous plan JSON");
  if (v.pass) v.detail = "5 templates pinned, previous plan embedded on replan";
  return v;
}

Verdict cli_determinism() {
  Verdict v;
  std::random_device rd;
  const auto dir = fs::temp_directory_path() / ("veriflow-acceptance-" + std::to_string(rd()));
  fs::create_directories(dir);
  const auto write = [&](const std::string &name, const std::string &text) {
    std::ofstream(dir / name, std::ios::binary) << text;
    return (dir / name).string();
  };
  const auto plan = plan_text({{"a", {"USER_TASK"}, {"x"}, {}, {"x is a number"}, false},
                               {"b", {"<a.x>"}, {"ans"}, {}, {"ans doubles x"}, true}},
                              {{"a", "b"}});
  const std::vector<std::string> responses = {
      plan,
      action("calculator", {{"input", "2+2"}}),
      answer({{"x", 4}}),
      judge_verdict(true, "numeric"),
      answer({{"ans", 7}}),
      judge_verdict(false, "7 is not 8"),
      answer({{"ans", 8}}),
      judge_verdict(true, "ok"),
  };
  const auto script = write("script.json", nlohmann::json(responses).dump());
  const auto task = write("task.txt", "Double 2+2.");
  const auto run = [&](const std::string &trace) {
    const std::string cmd = std::string("\"") + VERIFLOW_CLI_PATH + "\" run --task-file \"" +
                            task + "\" --backend scripted --script \"" + script +
                            "\" --deterministic --trace-out \"" + trace + "\" > /dev/null";
    return std::system(cmd.c_str());
  };
  const auto one = (dir / "one.jsonl").string();
  const auto two = (dir / "two.jsonl").string();
  const int c1 = run(one);
  const int c2 = run(two);
  const auto a = read_all(one);
  const auto b = read_all(two);
  fs::remove_all(dir);
  if (c1 != 0 || c2 != 0) v.fail("CLI exit codes " + std::to_string(c1) + ", " + std::to_string(c2));
  if (a.empty()) v.fail("empty trace");
  if (a != b) v.fail("traces differ");
  if (v.pass) v.detail = std::to_string(a.size()) + " bytes identical";
  return v;
}

} // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"algorithm conformance scenarios", algorithm_conformance},
      {"default limits", default_limits},
      {"plan validation matches brute-force oracle", plan_validation_oracle},
      {"verifier AND aggregation", and_aggregation},
      {"cost arithmetic", cost_arithmetic},
      {"FP/FN rates match brute-force counter", fp_fn},
      {"ReAct parser corpus", react_corpus},
      {"prompt pinning and replan embedding", prompt_pinning},
      {"deterministic CLI traces", cli_determinism},
  };
  int failed = 0;
  for (const auto &[name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception &e) {
      v.fail(std::string("threw: ") + e.what());
    }
    failed += v.pass ? 0 : 1;
    std::cout << (v.pass ? "PASS " : "FAIL ") << name << " (" << v.detail << ")\n";
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
