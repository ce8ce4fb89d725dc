#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace veriflow::testing {

// Plan description independent of the engine's types, so the oracle below
// shares no code with the validator it checks.
struct RawVf {
  std::string name;
  std::string type; // "python" | "llm"
  std::string body;
};

struct RawRef {
  bool user_task = false;
  std::string node;
  std::string var;
};

struct RawNode {
  std::string id;
  std::vector<RawRef> inputs;
  std::vector<std::string> outputs;
  std::vector<RawVf> vfs;
  bool final = false;
};

struct RawPlan {
  std::vector<RawNode> nodes;
  std::vector<std::pair<std::string, std::string>> edges;
};

// Mostly well-formed DAGs of 1..max_nodes nodes, with random defects
// (cycles, dangling edges, bad references, duplicates, collisions) mixed in.
RawPlan random_raw_plan(std::mt19937_64 &rng, int max_nodes = 12);

nlohmann::json to_plan_json(const RawPlan &plan);

// Brute-force acceptance decision: explicit DFS cycle search, Floyd-Warshall
// reachability for references, and direct checks of every other rule.
bool oracle_accepts(const RawPlan &plan);

} // namespace veriflow::testing
