#pragma once

#include "veriflow/trace.h"

#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

namespace veriflow {

// Append-only JSON-lines file shared by concurrent runs. Each event is
// written as one line and flushed before append returns.
class TraceStore {
public:
  // Creates the file if needed and appends to it. Throws StoreIoError.
  explicit TraceStore(std::filesystem::path path);

  void append(const TraceEvent &event);
  void append_all(const std::vector<TraceEvent> &events);

  const std::filesystem::path &path() const { return path_; }

private:
  void write_locked(const TraceEvent &event);

  std::filesystem::path path_;
  std::mutex mu_;
  std::ofstream out_;
};

void append_event(TraceStore &store, const TraceEvent &event);

struct TraceReadResult {
  std::vector<TraceEvent> events;
  // One message per skipped line ("line 7: ...").
  std::vector<std::string> warnings;
};

// Unparseable lines are skipped with a warning; a well-formed event with
// the wrong schema version throws SchemaMismatch. Throws StoreIoError if
// the file cannot be read.
TraceReadResult read_trace_file(const std::filesystem::path &path);
TraceReadResult parse_trace_lines(std::string_view text);

// Events of one run, in file order.
std::vector<TraceEvent> events_for_run(const std::vector<TraceEvent> &events,
                                       std::string_view run_id);

// Stamps events for one run. Timestamps are strictly increasing: wall-clock
// microseconds normally, a 0,1,2,... sequence in deterministic mode.
// Events go straight to the store when `live` is set, otherwise they are
// kept until flush_to().
class EventRecorder {
public:
  EventRecorder(std::string run_id, bool deterministic, TraceStore *live = nullptr);

  void emit(int iteration, std::optional<std::string> node_id, EventKind kind,
            ordered_json payload);

  const std::vector<TraceEvent> &events() const { return events_; }
  const std::string &run_id() const { return run_id_; }
  bool deterministic() const { return deterministic_; }
  void flush_to(TraceStore &store) const { store.append_all(events_); }

private:
  std::string run_id_;
  bool deterministic_;
  TraceStore *live_;
  std::int64_t last_ts_ = -1;
  std::vector<TraceEvent> events_;
};

} // namespace veriflow
