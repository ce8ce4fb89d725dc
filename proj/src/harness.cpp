#include "veriflow/harness.h"

#include "veriflow/error.h"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <mutex>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace veriflow {

nlohmann::ordered_json HarnessRequest::to_json() const {
  nlohmann::ordered_json j;
  j["mode"] = mode == HarnessMode::vf ? "vf" : "exec";
  j["code"] = code;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  if (stdin_text) {
    j["stdin"] = *stdin_text;
  }
  j["timeout_s"] = timeout_s;
  return j;
}

HarnessResponse HarnessResponse::from_json(const nlohmann::json &j) {
  if (!j.is_object() || !j.contains("passed") || !j["passed"].is_boolean()) {
    throw std::invalid_argument("harness response lacks boolean \"passed\"");
  }
  HarnessResponse r;
  r.passed = j["passed"].get<bool>();
  if (auto it = j.find("stdout"); it != j.end() && it->is_string()) {
    r.stdout_text = it->get<std::string>();
  }
  if (auto it = j.find("traceback"); it != j.end() && it->is_string()) {
    r.traceback = it->get<std::string>();
  }
  if (auto it = j.find("error_type"); it != j.end() && it->is_string()) {
    r.error_type = it->get<std::string>();
  }
  if (auto it = j.find("duration_ms"); it != j.end() && it->is_number()) {
    r.duration_ms = it->get<std::int64_t>();
  }
  if (!r.passed && !r.traceback && !r.error_type) {
    r.error_type = "unknown";
  }
  return r;
}

SubprocessHarness::SubprocessHarness(std::vector<std::string> argv,
                                     std::chrono::milliseconds grace)
    : argv_(std::move(argv)), grace_(grace) {
  if (argv_.empty()) {
    throw std::invalid_argument("harness command is empty");
  }
}

SubprocessHarness::~SubprocessHarness() { stop(); }

void SubprocessHarness::start() {
  // A dead child must surface as EPIPE, not kill the engine.
  static std::once_flag ignore_sigpipe;
  std::call_once(ignore_sigpipe, [] { std::signal(SIGPIPE, SIG_IGN); });
  int in_pipe[2];
  int out_pipe[2];
  if (pipe(in_pipe) != 0) {
    throw HarnessUnavailable(std::string("pipe: ") + std::strerror(errno));
  }
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw HarnessUnavailable(std::string("pipe: ") + std::strerror(errno));
  }
  const pid_t pid = fork();
  if (pid < 0) {
    throw HarnessUnavailable(std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    std::vector<char *> args;
    for (auto &a : argv_) {
      args.push_back(a.data());
    }
    args.push_back(nullptr);
    execvp(args[0], args.data());
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  buffer_.clear();
  fcntl(to_child_, F_SETFD, FD_CLOEXEC);
  fcntl(from_child_, F_SETFD, FD_CLOEXEC);

  const auto hello = read_line(std::chrono::steady_clock::now() + grace_ +
                               std::chrono::seconds(8));
  bool ok = false;
  if (hello) {
    try {
      const auto j = nlohmann::json::parse(*hello);
      ok = j.value("hello", "") == "vf-harness" && j.value("v", 0) == 1;
    } catch (const nlohmann::json::exception &) {
    }
  }
  if (!ok) {
    stop();
    throw HarnessUnavailable("harness did not send the expected handshake" +
                             (hello ? ": " + *hello : std::string{}));
  }
}

void SubprocessHarness::stop() {
  if (to_child_ >= 0) {
    close(to_child_);
    to_child_ = -1;
  }
  if (from_child_ >= 0) {
    close(from_child_);
    from_child_ = -1;
  }
  if (pid_ > 0) {
    kill(pid_, SIGKILL);
    waitpid(pid_, nullptr, 0);
    pid_ = -1;
  }
  buffer_.clear();
}

std::optional<std::string>
SubprocessHarness::read_line(std::chrono::steady_clock::time_point deadline) {
  for (;;) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      return std::nullopt;
    }
    pollfd pfd{from_child_, POLLIN, 0};
    const int rc = poll(&pfd, 1, static_cast<int>(left.count()));
    if (rc < 0 && errno == EINTR) {
      continue;
    }
    if (rc <= 0) {
      return std::nullopt;
    }
    char chunk[4096];
    const ssize_t n = read(from_child_, chunk, sizeof chunk);
    if (n <= 0) {
      return std::nullopt;
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

HarnessResponse SubprocessHarness::evaluate(const HarnessRequest &request) {
  std::lock_guard lock(mu_);
  if (pid_ < 0) {
    start();
  }
  const std::string line = request.to_json().dump() + "\n";
  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n =
        write(to_child_, line.data() + written, line.size() - written);
    if (n < 0 && errno == EINTR) {
      continue;
    }
    if (n <= 0) {
      stop();
      throw HarnessUnavailable("harness process closed its input");
    }
    written += static_cast<std::size_t>(n);
  }

  const auto started = std::chrono::steady_clock::now();
  const auto deadline =
      started + std::chrono::seconds(std::max(1, request.timeout_s)) + grace_;
  auto reply = read_line(deadline);
  if (!reply) {
    const bool expired = std::chrono::steady_clock::now() >= deadline;
    stop();
    if (!expired) {
      throw HarnessUnavailable("harness process exited mid-request");
    }
    HarnessResponse r;
    r.error_type = "timeout";
    r.traceback = "timeout";
    r.duration_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - started)
                        .count();
    return r;
  }
  try {
    return HarnessResponse::from_json(nlohmann::json::parse(*reply));
  } catch (const std::exception &e) {
    HarnessResponse r;
    r.error_type = "protocol";
    r.traceback = std::string("unreadable harness response: ") + e.what();
    return r;
  }
}

} // namespace veriflow
