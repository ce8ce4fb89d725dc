#include "veriflow/plan.h"

#include "veriflow/error.h"
#include "veriflow/text.h"

#include <algorithm>
#include <deque>
#include <functional>
#include <queue>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace veriflow {

namespace {

const ordered_json &require(const ordered_json &obj, const char *key,
                            const std::string &path) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(std::string("missing required field \"") + key + "\"",
                     path.empty() ? key : path + "." + key);
  }
  return *it;
}

std::string require_string(const ordered_json &obj, const char *key,
                           const std::string &path) {
  const auto &v = require(obj, key, path);
  if (!v.is_string()) {
    throw ParseError(std::string("field \"") + key + "\" must be a string",
                     path + "." + key);
  }
  return v.get<std::string>();
}

const ordered_json &require_array(const ordered_json &obj, const char *key,
                                  const std::string &path) {
  const auto &v = require(obj, key, path);
  if (!v.is_array()) {
    throw ParseError(std::string("field \"") + key + "\" must be an array",
                     path.empty() ? key : path + "." + key);
  }
  return v;
}

InputRef parse_input_ref(std::string_view raw, const std::string &path) {
  std::string_view s = trim(raw);
  if (s.size() >= 2 && s.front() == '<' && s.back() == '>') {
    s = trim(s.substr(1, s.size() - 2));
  }
  if (s == kUserTaskRef) {
    return InputRef::user_task();
  }
  const auto dot = s.rfind('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 == s.size()) {
    throw ParseError("input reference \"" + std::string(raw) +
                         "\" is neither USER_TASK nor <node.var>",
                     path);
  }
  return InputRef::from(std::string(s.substr(0, dot)),
                        std::string(s.substr(dot + 1)));
}

VerificationSpec parse_vf(const ordered_json &j, const std::string &path) {
  if (!j.is_object()) {
    throw ParseError("verification entry must be an object", path);
  }
  VerificationSpec vf;
  vf.name = require_string(j, "name", path);
  const std::string type = require_string(j, "type", path);
  if (type == "python") {
    vf.kind = VfKind::executable;
    vf.payload = require_string(j, "code", path);
  } else if (type == "llm") {
    vf.kind = VfKind::judge;
    vf.payload = require_string(j, "content", path);
  } else {
    throw ParseError("verification type must be \"python\" or \"llm\", got \"" +
                         type + "\"",
                     path + ".type");
  }
  return vf;
}

PlanNode parse_node(const ordered_json &j, const std::string &path) {
  if (!j.is_object()) {
    throw ParseError("node must be an object", path);
  }
  PlanNode node;
  node.id = require_string(j, "id", path);
  node.name = require_string(j, "name", path);
  node.instruction = require_string(j, "instruction", path);

  const auto &inputs = require_array(j, "input", path);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto item_path = path + ".input[" + std::to_string(i) + "]";
    if (!inputs[i].is_string()) {
      throw ParseError("input entries must be strings", item_path);
    }
    node.inputs.push_back(
        parse_input_ref(inputs[i].get<std::string>(), item_path));
  }

  const auto &outputs = require_array(j, "output", path);
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (!outputs[i].is_string()) {
      throw ParseError("output entries must be strings",
                       path + ".output[" + std::to_string(i) + "]");
    }
    node.outputs.push_back(outputs[i].get<std::string>());
  }

  if (auto it = j.find("verification"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) {
      throw ParseError("field \"verification\" must be an array",
                       path + ".verification");
    }
    for (std::size_t i = 0; i < it->size(); ++i) {
      node.verification.push_back(parse_vf(
          (*it)[i], path + ".verification[" + std::to_string(i) + "]"));
    }
  }

  if (auto it = j.find("final"); it != j.end()) {
    if (!it->is_boolean()) {
      throw ParseError("field \"final\" must be a boolean", path + ".final");
    }
    node.marked_final = it->get<bool>();
  }
  return node;
}

// Explicit marker wins; otherwise the unique sink. Empty if ambiguous.
std::string resolve_final_node(const Plan &plan) {
  std::vector<std::string> marked;
  for (const auto &n : plan.nodes) {
    if (n.marked_final) {
      marked.push_back(n.id);
    }
  }
  if (marked.size() == 1) {
    return marked.front();
  }
  if (marked.size() > 1) {
    return {};
  }
  std::unordered_set<std::string> has_outgoing;
  for (const auto &e : plan.edges) {
    has_outgoing.insert(e.from);
  }
  std::vector<std::string> sinks;
  for (const auto &n : plan.nodes) {
    if (!has_outgoing.contains(n.id)) {
      sinks.push_back(n.id);
    }
  }
  return sinks.size() == 1 ? sinks.front() : std::string{};
}

// Index of the first node declaring each id.
std::unordered_map<std::string, std::size_t> index_nodes(const Plan &plan) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < plan.nodes.size(); ++i) {
    index.emplace(plan.nodes[i].id, i);
  }
  return index;
}

} // namespace

std::string InputRef::to_string() const {
  if (is_user_task()) {
    return std::string(kUserTaskRef);
  }
  return "<" + *node_id + "." + variable + ">";
}

std::string_view to_string(VfKind kind) {
  return kind == VfKind::executable ? "executable" : "judge";
}

const PlanNode *Plan::find(std::string_view id) const {
  for (const auto &n : nodes) {
    if (n.id == id) {
      return &n;
    }
  }
  return nullptr;
}

const PlanNode &Plan::node(std::string_view id) const {
  if (const auto *n = find(id)) {
    return *n;
  }
  throw UnknownNode("unknown node \"" + std::string(id) + "\"");
}

std::string strip_code_fence(std::string_view text) {
  std::string_view s = trim(text);
  if (s.starts_with("```")) {
    const auto eol = s.find('\n');
    s = eol == std::string_view::npos ? std::string_view{} : s.substr(eol + 1);
    s = trim(s);
    if (s.ends_with("```")) {
      s = trim(s.substr(0, s.size() - 3));
    }
  }
  return std::string(s);
}

Plan parse_plan(std::string_view json_text) {
  const std::string body = strip_code_fence(json_text);
  ordered_json root;
  try {
    root = ordered_json::parse(body);
  } catch (const nlohmann::json::parse_error &e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(),
                     "byte " + std::to_string(e.byte));
  }
  if (!root.is_object()) {
    throw ParseError("plan must be a JSON object", "$");
  }

  Plan plan;
  const auto &nodes = require_array(root, "nodes", "");
  const auto &edges = require_array(root, "edges", "");
  if (nodes.empty()) {
    throw ParseError("plan has no nodes", "nodes");
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    plan.nodes.push_back(parse_node(nodes[i], "nodes[" + std::to_string(i) + "]"));
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto path = "edges[" + std::to_string(i) + "]";
    const auto &e = edges[i];
    if (!e.is_array() || e.size() != 2 || !e[0].is_string() ||
        !e[1].is_string()) {
      throw ParseError("edge must be a pair of node id strings", path);
    }
    plan.edges.push_back({e[0].get<std::string>(), e[1].get<std::string>()});
  }
  plan.final_node_id = resolve_final_node(plan);
  return plan;
}

ordered_json plan_to_json(const Plan &plan) {
  ordered_json nodes = ordered_json::array();
  for (const auto &n : plan.nodes) {
    ordered_json j;
    j["id"] = n.id;
    j["name"] = n.name;
    j["instruction"] = n.instruction;
    j["input"] = ordered_json::array();
    for (const auto &ref : n.inputs) {
      j["input"].push_back(ref.to_string());
    }
    j["output"] = n.outputs;
    j["verification"] = ordered_json::array();
    for (const auto &vf : n.verification) {
      ordered_json v;
      v["name"] = vf.name;
      if (vf.kind == VfKind::executable) {
        v["type"] = "python";
        v["code"] = vf.payload;
      } else {
        v["type"] = "llm";
        v["content"] = vf.payload;
      }
      j["verification"].push_back(std::move(v));
    }
    if (n.marked_final) {
      j["final"] = true;
    }
    nodes.push_back(std::move(j));
  }
  ordered_json edges = ordered_json::array();
  for (const auto &e : plan.edges) {
    edges.push_back(ordered_json::array({e.from, e.to}));
  }
  ordered_json root;
  root["nodes"] = std::move(nodes);
  root["edges"] = std::move(edges);
  return root;
}

std::string serialize_plan(const Plan &plan, int indent) {
  return plan_to_json(plan).dump(indent);
}

std::vector<std::string> ancestors(const Plan &plan, std::string_view node_id) {
  std::unordered_map<std::string, std::vector<std::string>> parents;
  for (const auto &e : plan.edges) {
    parents[e.to].push_back(e.from);
  }
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  std::deque<std::string> queue{std::string(node_id)};
  while (!queue.empty()) {
    const auto cur = queue.front();
    queue.pop_front();
    for (const auto &p : parents[cur]) {
      if (seen.insert(p).second) {
        out.push_back(p);
        queue.push_back(p);
      }
    }
  }
  return out;
}

ValidationReport validate_plan(const Plan &plan) {
  ValidationReport report;
  auto add = [&report](const char *code, std::optional<std::string> node,
                       std::string message) {
    report.violations.push_back({code, std::move(node), std::move(message)});
  };

  std::unordered_set<std::string> ids;
  for (const auto &n : plan.nodes) {
    if (n.id.empty()) {
      add(violation::kEmptyId, std::nullopt, "node with empty id");
    } else if (!ids.insert(n.id).second) {
      add(violation::kDuplicateId, n.id, "duplicate node id \"" + n.id + "\"");
    }
  }

  std::vector<PlanEdge> valid_edges;
  for (const auto &e : plan.edges) {
    if (!ids.contains(e.from) || !ids.contains(e.to)) {
      add(violation::kDanglingEdge, std::nullopt,
          "edge " + e.from + " -> " + e.to + " references an unknown node");
    } else {
      valid_edges.push_back(e);
    }
  }

  // Cycle detection over the well-formed edges.
  {
    const auto index = index_nodes(plan);
    std::vector<int> indegree(plan.nodes.size(), 0);
    std::vector<std::vector<std::size_t>> children(plan.nodes.size());
    for (const auto &e : valid_edges) {
      const auto from = index.at(e.from);
      const auto to = index.at(e.to);
      children[from].push_back(to);
      ++indegree[to];
    }
    std::deque<std::size_t> ready;
    for (std::size_t i = 0; i < plan.nodes.size(); ++i) {
      if (indegree[i] == 0 && index.at(plan.nodes[i].id) == i) {
        ready.push_back(i);
      }
    }
    std::size_t visited = 0;
    while (!ready.empty()) {
      const auto i = ready.front();
      ready.pop_front();
      ++visited;
      for (const auto c : children[i]) {
        if (--indegree[c] == 0) {
          ready.push_back(c);
        }
      }
    }
    if (visited < index.size()) {
      std::string members;
      for (std::size_t i = 0; i < plan.nodes.size(); ++i) {
        if (indegree[i] > 0) {
          members += (members.empty() ? "" : ", ") + plan.nodes[i].id;
        }
      }
      add(violation::kCycle, std::nullopt,
          "edges contain a cycle through: " + members);
    }
  }

  Plan well_formed{plan.nodes, valid_edges, plan.final_node_id};
  for (const auto &n : plan.nodes) {
    std::unordered_set<std::string> outs;
    for (const auto &o : n.outputs) {
      if (!outs.insert(o).second) {
        add(violation::kDuplicateOutput, n.id,
            "output \"" + o + "\" declared twice");
      }
    }

    std::unordered_set<std::string> vf_names;
    for (const auto &vf : n.verification) {
      if (!vf_names.insert(vf.name).second) {
        add(violation::kDuplicateVfName, n.id,
            "verification name \"" + vf.name + "\" used twice");
      }
      if (trim(vf.payload).empty()) {
        add(violation::kEmptyVfPayload, n.id,
            "verification \"" + vf.name + "\" has an empty payload");
      }
    }
    if (n.verification.empty()) {
      report.warnings.push_back(
          {violation::kNoVerification, n.id, "node has no verification"});
    }

    const auto anc = ancestors(well_formed, n.id);
    const std::unordered_set<std::string> anc_set(anc.begin(), anc.end());
    std::map<std::string, InputRef> by_var;
    for (const auto &ref : n.inputs) {
      if (auto [it, inserted] = by_var.emplace(ref.variable, ref);
          !inserted && !(it->second == ref)) {
        add(violation::kNameCollision, n.id,
            "inputs " + it->second.to_string() + " and " + ref.to_string() +
                " share variable name \"" + ref.variable + "\"");
      }
      if (ref.is_user_task()) {
        continue;
      }
      const auto *src = plan.find(*ref.node_id);
      const bool declared =
          src != nullptr && std::find(src->outputs.begin(), src->outputs.end(),
                                      ref.variable) != src->outputs.end();
      if (!anc_set.contains(*ref.node_id) || !declared) {
        add(violation::kUnresolvedInput, n.id,
            "input " + ref.to_string() +
                (src == nullptr        ? " names an unknown node"
                 : !declared           ? " names a variable the node does not output"
                                       : " comes from a node that is not an ancestor"));
      }
    }
  }

  if (plan.final_node_id.empty()) {
    add(violation::kNoFinalNode, std::nullopt,
        "no unique final node (mark one node with \"final\": true)");
  } else if (plan.find(plan.final_node_id) == nullptr) {
    add(violation::kNoFinalNode, std::nullopt,
        "final node \"" + plan.final_node_id + "\" is not in the plan");
  }

  report.ok = report.violations.empty();
  return report;
}

std::string format_report(const ValidationReport &report) {
  std::ostringstream out;
  out << (report.ok ? "OK" : "INVALID") << "\n";
  auto line = [&out](const char *tag, const Violation &v) {
    out << tag << " " << v.code;
    if (v.node_id) {
      out << "(" << *v.node_id << ")";
    }
    out << ": " << v.message << "\n";
  };
  for (const auto &v : report.violations) {
    line("violation", v);
  }
  for (const auto &w : report.warnings) {
    line("warning", w);
  }
  return out.str();
}

std::vector<std::string> topological_order(const Plan &plan) {
  const auto index = index_nodes(plan);
  std::vector<int> indegree(plan.nodes.size(), 0);
  std::vector<std::vector<std::size_t>> children(plan.nodes.size());
  for (const auto &e : plan.edges) {
    auto from = index.find(e.from);
    auto to = index.find(e.to);
    if (from == index.end() || to == index.end()) {
      throw UnknownNode("edge " + e.from + " -> " + e.to +
                        " references an unknown node");
    }
    children[from->second].push_back(to->second);
    ++indegree[to->second];
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>>
      ready;
  for (std::size_t i = 0; i < plan.nodes.size(); ++i) {
    if (indegree[i] == 0) {
      ready.push(i);
    }
  }
  std::vector<std::string> order;
  while (!ready.empty()) {
    const auto i = ready.top();
    ready.pop();
    order.push_back(plan.nodes[i].id);
    for (const auto c : children[i]) {
      if (--indegree[c] == 0) {
        ready.push(c);
      }
    }
  }
  if (order.size() != plan.nodes.size()) {
    throw CycleError("plan edges contain a cycle");
  }
  return order;
}

StructuredRecord resolve_input_refs(const Plan &plan, std::string_view node_id,
                                    const Blackboard &blackboard,
                                    std::string_view user_task) {
  const auto &node = plan.node(node_id);
  StructuredRecord out;
  std::map<std::string, InputRef> bound;
  for (const auto &ref : node.inputs) {
    if (auto it = bound.find(ref.variable); it != bound.end()) {
      if (it->second == ref) {
        continue;
      }
      throw NameCollision("node " + node.id + ": inputs " +
                          it->second.to_string() + " and " + ref.to_string() +
                          " both bind \"" + ref.variable + "\"");
    }
    bound.emplace(ref.variable, ref);
    if (ref.is_user_task()) {
      out.set(kUserTaskRef, std::string(user_task));
      continue;
    }
    auto src = blackboard.find(*ref.node_id);
    if (src == blackboard.end() || !src->second.contains(ref.variable)) {
      throw MissingUpstreamValue(*ref.node_id, ref.variable);
    }
    out.set(ref.variable, src->second.at(ref.variable));
  }
  return out;
}

} // namespace veriflow
