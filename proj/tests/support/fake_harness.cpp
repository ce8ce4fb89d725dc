#include "fake_harness.h"

#include <regex>
#include <sstream>

namespace veriflow::testing {

namespace {

std::string pythonish_to_json(std::string s) {
  for (const auto &[from, to] : {std::pair<std::string, std::string>{"True", "true"},
                                 {"False", "false"},
                                 {"None", "null"}}) {
    for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos)) {
      s.replace(pos, from.size(), to);
      pos += to.size();
    }
  }
  return s;
}

HarnessResponse failure(std::size_t line_no, const std::string &line,
                        const std::string &error_type, const std::string &detail) {
  HarnessResponse r;
  r.passed = false;
  r.error_type = error_type;
  std::ostringstream tb;
  tb << "Traceback (most recent call last):\n  File \"<vf>\", line " << line_no
     << ", in <module>\n    " << line << "\n"
     << error_type << (detail.empty() ? "" : ": " + detail);
  r.traceback = tb.str();
  return r;
}

} // namespace

HarnessResponse evaluate_assertions(const HarnessRequest &request) {
  static const std::regex compare(
      R"re(^assert\s+(inputs|outputs)\[\s*"([^"]*)"\s*\]\s*(==|!=)\s*(.+)$)re");
  static const std::regex membership(R"re(^assert\s+"([^"]*)"\s+in\s+(inputs|outputs)$)re");
  static const std::regex print_call(R"re(^print\((.*)\)$)re");

  HarnessResponse ok;
  ok.passed = true;
  std::istringstream in(request.code);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto first = raw.find_first_not_of(" \t");
    if (first == std::string::npos || raw[first] == '#') {
      continue;
    }
    std::string line = raw.substr(first);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\r')) {
      line.pop_back();
    }
    std::smatch m;
    if (line.rfind("time.sleep(", 0) == 0) {
      HarnessResponse r;
      r.error_type = "timeout";
      r.duration_ms = request.timeout_s * 1000;
      return r;
    }
    if (std::regex_match(line, m, print_call)) {
      try {
        const auto v = nlohmann::json::parse(pythonish_to_json(m[1].str()));
        ok.stdout_text += (v.is_string() ? v.get<std::string>() : v.dump()) + "\n";
      } catch (const nlohmann::json::parse_error &) {
        return failure(line_no, line, "SyntaxError", "invalid syntax");
      }
      continue;
    }
    if (std::regex_match(line, m, membership)) {
      const auto &record = m[2] == "inputs" ? request.inputs : request.outputs;
      if (!record.contains(m[1].str())) {
        return failure(line_no, line, "AssertionError", "");
      }
      continue;
    }
    if (std::regex_match(line, m, compare)) {
      const auto &record = m[1] == "inputs" ? request.inputs : request.outputs;
      const auto key = m[2].str();
      if (!record.contains(key)) {
        return failure(line_no, line, "KeyError", "'" + key + "'");
      }
      nlohmann::ordered_json expected;
      try {
        expected = nlohmann::ordered_json::parse(pythonish_to_json(m[4].str()));
      } catch (const nlohmann::json::parse_error &) {
        return failure(line_no, line, "SyntaxError", "invalid syntax");
      }
      const bool equal = record.at(key) == expected;
      if (equal != (m[3] == "==")) {
        return failure(line_no, line, "AssertionError", "");
      }
      continue;
    }
    return failure(line_no, line, "SyntaxError", "invalid syntax");
  }
  return ok;
}

} // namespace veriflow::testing
