#include "veriflow/trace.h"
#include "veriflow/trace_store.h"

#include "veriflow/error.h"

#include <chrono>
#include <sstream>

namespace veriflow {

int TaskTrace::plans_generated() const {
  int n = 0;
  for (const auto &it : iterations) {
    n += it.plan.has_value() ? 1 : 0;
  }
  return n;
}

const NodeAttempt *TaskTrace::last_attempt(int iteration,
                                           std::string_view node_id) const {
  const NodeAttempt *found = nullptr;
  for (const auto &it : iterations) {
    if (it.iteration != iteration) {
      continue;
    }
    for (const auto &a : it.attempts) {
      if (a.node_id == node_id) {
        found = &a;
      }
    }
  }
  return found;
}

int TaskTrace::attempts_for(int iteration, std::string_view node_id) const {
  int n = 0;
  for (const auto &it : iterations) {
    if (it.iteration != iteration) {
      continue;
    }
    for (const auto &a : it.attempts) {
      n += a.node_id == node_id ? 1 : 0;
    }
  }
  return n;
}

namespace {

constexpr std::pair<EventKind, std::string_view> kKindNames[] = {
    {EventKind::plan_generated, "plan_generated"},
    {EventKind::attempt_started, "attempt_started"},
    {EventKind::tool_call, "tool_call"},
    {EventKind::vf_result, "vf_result"},
    {EventKind::verdict, "verdict"},
    {EventKind::replanned, "replanned"},
    {EventKind::outcome, "outcome"},
};

} // namespace

std::string_view to_string(EventKind kind) {
  for (const auto &[k, name] : kKindNames) {
    if (k == kind) {
      return name;
    }
  }
  return "outcome";
}

EventKind event_kind_from_string(std::string_view name) {
  for (const auto &[k, n] : kKindNames) {
    if (n == name) {
      return k;
    }
  }
  throw SchemaMismatch("unknown event kind \"" + std::string(name) + "\"");
}

ordered_json TraceEvent::to_json() const {
  ordered_json j;
  j["v"] = kTraceSchemaVersion;
  j["ts"] = ts;
  j["run_id"] = run_id;
  j["iteration"] = iteration;
  if (node_id) {
    j["node_id"] = *node_id;
  }
  j["kind"] = std::string(to_string(kind));
  j["payload"] = payload;
  return j;
}

TraceEvent TraceEvent::from_json(const ordered_json &j) {
  if (!j.is_object()) {
    throw SchemaMismatch("trace event is not an object");
  }
  auto v = j.find("v");
  if (v == j.end() || !v->is_number_integer() || v->get<int>() != kTraceSchemaVersion) {
    throw SchemaMismatch("trace schema version " + (v == j.end() ? "missing" : v->dump()) +
                         ", expected " + std::to_string(kTraceSchemaVersion));
  }
  try {
    TraceEvent e;
    e.ts = j.at("ts").get<std::int64_t>();
    e.run_id = j.at("run_id").get<std::string>();
    e.iteration = j.at("iteration").get<int>();
    if (auto n = j.find("node_id"); n != j.end() && !n->is_null()) {
      e.node_id = n->get<std::string>();
    }
    e.kind = event_kind_from_string(j.at("kind").get<std::string>());
    // ordered_json keeps the payload's key order across a round trip.
    e.payload = j.at("payload");
    return e;
  } catch (const nlohmann::json::exception &ex) {
    throw SchemaMismatch(std::string("malformed trace event: ") + ex.what());
  }
}

TraceStore::TraceStore(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path_.parent_path(), ec);
  }
  out_.open(path_, std::ios::out | std::ios::app | std::ios::binary);
  if (!out_) {
    throw StoreIoError("cannot open trace file " + path_.string());
  }
}

void TraceStore::write_locked(const TraceEvent &event) {
  out_ << event.to_json().dump() << '\n';
  out_.flush();
  if (!out_) {
    throw StoreIoError("write to trace file " + path_.string() + " failed");
  }
}

void TraceStore::append(const TraceEvent &event) {
  std::lock_guard lock(mu_);
  write_locked(event);
}

void TraceStore::append_all(const std::vector<TraceEvent> &events) {
  std::lock_guard lock(mu_);
  for (const auto &e : events) {
    write_locked(e);
  }
}

void append_event(TraceStore &store, const TraceEvent &event) { store.append(event); }

TraceReadResult parse_trace_lines(std::string_view text) {
  TraceReadResult result;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      nl = text.size();
    }
    const auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      continue;
    }
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error &e) {
      result.warnings.push_back("line " + std::to_string(line_no) +
                                ": skipped unparseable event (" + e.what() + ")");
      continue;
    }
    result.events.push_back(TraceEvent::from_json(j));
  }
  return result;
}

TraceReadResult read_trace_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw StoreIoError("cannot read trace file " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_trace_lines(buf.str());
}

std::vector<TraceEvent> events_for_run(const std::vector<TraceEvent> &events,
                                       std::string_view run_id) {
  std::vector<TraceEvent> out;
  for (const auto &e : events) {
    if (e.run_id == run_id) {
      out.push_back(e);
    }
  }
  return out;
}

EventRecorder::EventRecorder(std::string run_id, bool deterministic, TraceStore *live)
    : run_id_(std::move(run_id)), deterministic_(deterministic), live_(live) {}

void EventRecorder::emit(int iteration, std::optional<std::string> node_id,
                         EventKind kind, ordered_json payload) {
  std::int64_t ts = last_ts_ + 1;
  if (!deterministic_) {
    const auto now = std::chrono::duration_cast<std::chrono::microseconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
    ts = std::max<std::int64_t>(ts, now);
  }
  last_ts_ = ts;
  TraceEvent e{ts, run_id_, iteration, std::move(node_id), kind, std::move(payload)};
  if (live_ != nullptr) {
    live_->append(e);
  }
  events_.push_back(std::move(e));
}

} // namespace veriflow
