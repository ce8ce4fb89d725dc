#pragma once

#include "veriflow/harness.h"

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace veriflow {

struct ToolDescriptor {
  std::string name;
  std::string description;
  // Argument name -> human description, e.g. {"input": "expression"}.
  nlohmann::ordered_json args_schema = nlohmann::ordered_json::object();
};

struct ToolResult {
  std::string observation;
  bool is_error = false;
};

// Per-run state a tool may touch. Handlers must not keep references to it.
struct ToolContext {
  std::filesystem::path scratch_dir;
  Harness *harness = nullptr;
  int code_timeout_s = 10;
};

using ToolHandler =
    std::function<ToolResult(const nlohmann::json &args, ToolContext &ctx)>;

class ToolRegistry {
public:
  // Throws DuplicateTool.
  void register_tool(ToolDescriptor descriptor, ToolHandler handler);

  // Never throws: unknown tools, bad JSON and handler exceptions all come
  // back as error observations.
  ToolResult invoke(std::string_view name, std::string_view args_json,
                    ToolContext &ctx) const;

  bool contains(std::string_view name) const;
  std::vector<ToolDescriptor> descriptors() const;

  // Text substituted for the tool placeholders in prompts:
  //   > Tool Name: <name>
  //   Tool Description: <description>
  //   Tool Args: <args_schema JSON>
  // with a blank line between tools; empty registry renders "".
  std::string render_descriptions() const;

private:
  struct Entry {
    ToolDescriptor descriptor;
    ToolHandler handler;
  };
  std::vector<Entry> entries_;
};

inline void register_tool(ToolRegistry &registry, ToolDescriptor descriptor,
                          ToolHandler handler) {
  registry.register_tool(std::move(descriptor), std::move(handler));
}

inline ToolResult invoke_tool(const ToolRegistry &registry, std::string_view name,
                              std::string_view args_json, ToolContext &ctx) {
  return registry.invoke(name, args_json, ctx);
}

// Exact rational evaluation of + - * / (also − × ÷), parentheses, unary
// signs and decimal literals. Terminating results print exactly; others are
// rounded half-even to 20 fractional digits. Throws EvalError.
std::string calculator_eval(std::string_view expr);

// Runs code through the sandbox in exec mode. Throws HarnessUnavailable
// when `harness` is null or cannot be started.
ToolResult run_code(Harness *harness, std::string_view code,
                    std::string_view stdin_text, int timeout_s);

struct Article {
  std::size_t doc_id = 0; // position in the corpus file
  std::string title;
  std::string author;
  std::string category;
  std::string date; // ISO-8601
  std::string source;
  std::string content;
};

class Corpus {
public:
  Corpus() = default;
  explicit Corpus(std::vector<Article> articles);

  // JSON lines with title, author, category, date, source, content.
  static Corpus load_jsonl(const std::filesystem::path &path);
  static Corpus parse_jsonl(std::string_view text);

  const std::vector<Article> &articles() const { return articles_; }

private:
  std::vector<Article> articles_;
};

struct FieldFilter {
  enum class Op { equals, contains, on_or_after, on_or_before };
  std::string field; // title | author | category | date | source
  Op op = Op::equals;
  std::string value;
};

// {"category": "sports", "author": {"contains": "lee"},
//  "date": {"from": "2023-01-01", "to": "2023-06-30"}}
// Throws BadFilterField for unknown fields or operators.
std::vector<FieldFilter> parse_filters(const nlohmann::json &j);

struct SearchHit {
  std::size_t doc_id = 0;
  std::size_t score = 0;
  std::string snippet;
};

struct SearchPage {
  std::vector<SearchHit> hits;
  std::size_t total_matches = 0;
  std::size_t page = 1;
  std::size_t page_size = 5;
};

// Filters, then ranks by case-insensitive query-term occurrences in title
// and content (score desc, doc_id asc). An empty query keeps every filtered
// article with score 0. Pages are 1-based.
SearchPage search_corpus(const Corpus &corpus,
                         const std::vector<FieldFilter> &filters,
                         std::string_view query, std::size_t page,
                         std::size_t page_size);

ToolResult corpus_search(const Corpus &corpus,
                         const std::vector<FieldFilter> &filters,
                         std::string_view query, std::size_t page,
                         std::size_t page_size);

struct BuiltinToolOptions {
  std::shared_ptr<const Corpus> corpus; // corpus_search only when set
  bool file_tools = true;
};

// calculator, run_code, optional corpus_search, and scratch-dir file tools.
void register_builtin_tools(ToolRegistry &registry,
                            const BuiltinToolOptions &options = {});

// Resolves `relative` inside `scratch_dir`; throws std::invalid_argument on
// absolute paths or escapes.
std::filesystem::path scratch_path(const std::filesystem::path &scratch_dir,
                                   std::string_view relative);

} // namespace veriflow
