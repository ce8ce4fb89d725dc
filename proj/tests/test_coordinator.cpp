#include <doctest.h>

#include "alg1_scenarios.h"
#include "scenario.h"
#include "veriflow/error.h"

#include <random>

using namespace veriflow;
using namespace veriflow::testing;

TEST_CASE("algorithm conformance scenarios") {
  const auto scenarios = algorithm1_scenarios();
  REQUIRE(scenarios.size() == 12);
  for (const auto &s : scenarios) {
    SUBCASE(s.name.c_str()) {
      const auto errors = s.run();
      for (const auto &e : errors) {
        INFO(s.name, ": ", e);
        CHECK(false);
      }
      CHECK(errors.empty());
    }
  }
}

TEST_CASE("default limits") {
  CoordinatorConfig cfg;
  CHECK(cfg.max_retries == 3);
  CHECK(cfg.max_iterations == 5);
  CHECK(cfg.executor_round_cap == 20);
  CHECK(cfg.verifier.judge_round_cap == 10);
  CHECK_NOTHROW(cfg.validate());
  cfg.max_retries = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.max_iterations = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.executor_round_cap = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("compile_context") {
  const auto plan = parse_plan(plan_text({{"a", {"USER_TASK"}, {"x"}, {}, {}, false},
                                          {"b", {"<a.x>"}, {"y"}, {}, {}, true}},
                                         {{"a", "b"}}));
  Blackboard bb;
  auto ctx = compile_context(plan, "a", bb, "the task", std::nullopt);
  CHECK(ctx.names() == std::vector<std::string>{"USER_TASK"});
  CHECK(ctx.at("USER_TASK") == "the task");

  CHECK_THROWS_AS(compile_context(plan, "b", bb, "t", std::nullopt), MissingUpstreamValue);
  bb["a"].set("x", 1);
  StructuredRecord prev_out;
  prev_out.set("y", 9);
  ctx = compile_context(plan, "b", bb, "t", PriorAttempt{prev_out, "VF b_py0 failed:\nmissing unit"});
  CHECK(ctx.at("x") == 1);
  REQUIRE(ctx.contains(std::string(kPreviousAttemptKey)));
  CHECK(ctx.at("PREVIOUS_ATTEMPT")["outputs"]["y"] == 9);
  CHECK(ctx.at("PREVIOUS_ATTEMPT")["feedback"].get<std::string>().find("missing unit") !=
        std::string::npos);

  ctx = compile_context(plan, "b", bb, "t", PriorAttempt{std::nullopt, "no output"});
  CHECK(ctx.at("PREVIOUS_ATTEMPT")["outputs"].is_null());
}

TEST_CASE("planner failure becomes a failure outcome") {
  const auto r = run_scenario("t", {"junk", "junk", "junk"});
  CHECK(r.outcome.status == TaskStatus::failure);
  CHECK(r.outcome.iterations_used == 1);
  REQUIRE(r.outcome.error);
  CHECK(r.outcome.error->rfind("PlanGenerationFailed", 0) == 0);
  CHECK(r.outcome.trace.plans_generated() == 0);
  REQUIRE(!r.events.empty());
  CHECK(r.events.back().kind == EventKind::outcome);
  CHECK(r.events.back().payload["status"] == "failure");
}

TEST_CASE("planner failure on a replan keeps earlier iterations") {
  CoordinatorConfig cfg;
  cfg.max_retries = 1;
  const auto plan = plan_text({{"n", {"USER_TASK"}, {"ans"}, {"assert outputs[\"ans\"] == 4"}, {}, true}}, {});
  const auto r = run_scenario("t", {plan, answer({{"ans", 5}}), "junk", "junk", "junk"}, cfg);
  CHECK(r.outcome.status == TaskStatus::failure);
  CHECK(r.outcome.iterations_used == 2);
  CHECK(r.outcome.trace.plans_generated() == 1);
  CHECK(r.unused_script == 0);
}

TEST_CASE("gateway errors propagate out of run_task") {
  const auto plan = plan_text({{"n", {"USER_TASK"}, {"ans"}, {}, {}, true}}, {});
  CHECK_THROWS_AS(run_scenario("t", {plan}), ScriptExhausted);
}

TEST_CASE("event stream shape") {
  const auto plan = plan_text({{"n", {"USER_TASK"}, {"ans"}, {"assert outputs[\"ans\"] == 4"}, {}, true}}, {});
  const auto r = run_scenario("t", {plan, action("calculator", {{"input", "2+2"}}),
                                    answer({{"ans", 5}}), answer({{"ans", 4}})});
  std::vector<std::string> kinds;
  for (const auto &e : r.events) {
    kinds.emplace_back(to_string(e.kind));
  }
  CHECK(kinds == std::vector<std::string>{"plan_generated", "attempt_started", "tool_call",
                                          "vf_result", "verdict", "attempt_started",
                                          "vf_result", "verdict", "outcome"});
  for (std::size_t i = 1; i < r.events.size(); ++i) {
    CHECK(r.events[i].ts > r.events[i - 1].ts);
    CHECK(r.events[i].run_id == "scenario");
  }
  const auto &tool = r.events[2].payload;
  CHECK(tool["tool"] == "calculator");
  CHECK(tool["observation"] == "4");
  const auto &vf = r.events[3].payload;
  CHECK(vf["vf"] == "n_py0");
  CHECK(vf["passed"] == false);
  CHECK(vf["payload_chars"] == std::string("assert outputs[\"ans\"] == 4").size());
  CHECK(vf["synthetic"] == false);
  CHECK(r.events[5].payload["context_keys"] ==
        nlohmann::ordered_json::array({"USER_TASK", "PREVIOUS_ATTEMPT"}));
  const auto &out = r.events.back().payload;
  CHECK(out["status"] == "success");
  CHECK(out["final_output"]["ans"] == 4);
  CHECK(out["plans_generated"] == 1);
  CHECK(out["usage"].size() == r.calls.size());
  CHECK(out["cost_usd"].get<double>() == doctest::Approx(r.outcome.total_cost_usd));
}

TEST_CASE("cost is the sum of this run's priced calls") {
  const auto plan = plan_text({{"n", {"USER_TASK"}, {"ans"}, {}, {}, true}}, {});
  const auto r = run_scenario("t", {plan, answer({{"ans", 4}})});
  const auto prices = PriceTable::defaults();
  double expected = 0;
  REQUIRE(r.calls.size() == 2);
  for (const auto &c : r.calls) {
    expected += cost_of(c.usage, c.model_id, prices);
  }
  CHECK(r.outcome.total_cost_usd == doctest::Approx(expected).epsilon(1e-12));
  CHECK(r.calls[0].model_id == "gpt-4.1");
  CHECK(r.calls[1].model_id == "gpt-4o-mini");
}

TEST_CASE("random scripted runs respect the attempt and plan bounds") {
  // Each node answers right or wrong at random; scripts are long enough for
  // the worst case and leftover responses are fine.
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    CoordinatorConfig cfg;
    cfg.max_retries = 1 + static_cast<int>(rng() % 3);
    cfg.max_iterations = 1 + static_cast<int>(rng() % 3);
    const int n = 1 + static_cast<int>(rng() % 4);
    std::vector<NodeSpec> nodes;
    std::vector<std::pair<std::string, std::string>> edges;
    for (int i = 0; i < n; ++i) {
      NodeSpec s{"n" + std::to_string(i), {}, {"ans"}, {"assert outputs[\"ans\"] == 4"}, {}, i == n - 1};
      if (i == 0) {
        s.inputs = {"USER_TASK"};
      } else {
        s.inputs = {"<n" + std::to_string(i - 1) + ".ans>"};
        edges.emplace_back("n" + std::to_string(i - 1), s.id);
      }
      nodes.push_back(s);
    }
    const auto plan = plan_text(nodes, edges);
    std::vector<std::string> script;
    int budget = 0;
    for (int it = 0; it < cfg.max_iterations; ++it) {
      script.push_back(plan);
      for (int k = 0; k < n * cfg.max_retries; ++k) {
        script.push_back(rng() % 3 == 0 ? answer({{"ans", 5}}) : answer({{"ans", 4}}));
        ++budget;
      }
    }
    const auto r = run_scenario("t", script, cfg);
    int total = 0;
    for (const auto &it : r.outcome.trace.iterations) {
      total += static_cast<int>(it.attempts.size());
      for (const auto &node : nodes) {
        CHECK(r.outcome.trace.attempts_for(it.iteration, node.id) <= cfg.max_retries);
      }
      // Topological: attempts of node i+1 start only after node i passed.
      bool prev_passed = true;
      std::string prev_id;
      for (const auto &a : it.attempts) {
        if (a.node_id != prev_id) {
          CHECK(prev_passed);
          prev_id = a.node_id;
        }
        prev_passed = a.verdict.passed;
      }
    }
    CHECK(r.outcome.trace.plans_generated() <= cfg.max_iterations);
    CHECK(total <= cfg.max_iterations * n * cfg.max_retries);
    CHECK(total <= budget);
    if (r.outcome.status == TaskStatus::success) {
      CHECK(r.outcome.final_output->at("ans") == 4);
    }
  }
}
