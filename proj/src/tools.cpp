#include "veriflow/tools.h"

#include "veriflow/error.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace veriflow {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string> query_terms(std::string_view query) {
  std::vector<std::string> terms;
  std::string cur;
  for (const char c : query) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      terms.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) {
    terms.push_back(std::move(cur));
  }
  return terms;
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

const std::string &field_of(const Article &a, std::string_view field) {
  if (field == "title") {
    return a.title;
  }
  if (field == "author") {
    return a.author;
  }
  if (field == "category") {
    return a.category;
  }
  if (field == "date") {
    return a.date;
  }
  if (field == "source") {
    return a.source;
  }
  throw BadFilterField("cannot filter on field \"" + std::string(field) + "\"");
}

bool matches(const Article &a, const FieldFilter &f) {
  const auto &value = field_of(a, f.field);
  switch (f.op) {
  case FieldFilter::Op::equals:
    return lower(value) == lower(f.value);
  case FieldFilter::Op::contains:
    return lower(value).find(lower(f.value)) != std::string::npos;
  // ISO-8601 dates order lexicographically; compare on the filter's length
  // so "2023-05" bounds whole months.
  case FieldFilter::Op::on_or_after:
    return value.substr(0, f.value.size()) >= f.value;
  case FieldFilter::Op::on_or_before:
    return value.substr(0, f.value.size()) <= f.value;
  }
  return false;
}

std::string make_snippet(const Article &a, const std::vector<std::string> &terms) {
  constexpr std::size_t kWidth = 240;
  const auto content_lc = lower(a.content);
  std::size_t at = 0;
  for (const auto &t : terms) {
    if (auto p = content_lc.find(t); p != std::string::npos) {
      at = p;
      break;
    }
  }
  const std::size_t start = at > kWidth / 3 ? at - kWidth / 3 : 0;
  std::string body = a.content.substr(start, kWidth);
  if (start > 0) {
    body.insert(0, "...");
  }
  if (start + kWidth < a.content.size()) {
    body += "...";
  }
  std::ostringstream out;
  out << "[doc " << a.doc_id << "] " << a.title << " | " << a.author << " | "
      << a.category << " | " << a.date << " | " << a.source << "\n"
      << body;
  return out.str();
}

std::string string_arg(const nlohmann::json &args, const char *key) {
  auto it = args.find(key);
  if (it == args.end() || !it->is_string()) {
    throw std::invalid_argument(std::string("missing string argument \"") + key +
                                "\"");
  }
  return it->get<std::string>();
}

} // namespace

void ToolRegistry::register_tool(ToolDescriptor descriptor, ToolHandler handler) {
  if (descriptor.name.empty()) {
    throw std::invalid_argument("tool name must be nonempty");
  }
  if (contains(descriptor.name)) {
    throw DuplicateTool("tool \"" + descriptor.name + "\" is already registered");
  }
  entries_.push_back({std::move(descriptor), std::move(handler)});
}

bool ToolRegistry::contains(std::string_view name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const Entry &e) { return e.descriptor.name == name; });
}

std::vector<ToolDescriptor> ToolRegistry::descriptors() const {
  std::vector<ToolDescriptor> out;
  for (const auto &e : entries_) {
    out.push_back(e.descriptor);
  }
  return out;
}

std::string ToolRegistry::render_descriptions() const {
  std::string out;
  for (const auto &e : entries_) {
    if (!out.empty()) {
      out += "\n\n";
    }
    out += "> Tool Name: " + e.descriptor.name + "\n";
    out += "Tool Description: " + e.descriptor.description + "\n";
    const auto &args = e.descriptor.args_schema;
    out += "Tool Args: " + (args.is_null() ? std::string("{}") : args.dump());
  }
  return out;
}

ToolResult ToolRegistry::invoke(std::string_view name, std::string_view args_json,
                                ToolContext &ctx) const {
  const auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry &e) {
    return e.descriptor.name == name;
  });
  if (it == entries_.end()) {
    return {"Error: unknown tool \"" + std::string(name) + "\"", true};
  }
  nlohmann::json args;
  try {
    args = args_json.empty() ? nlohmann::json::object()
                             : nlohmann::json::parse(args_json);
  } catch (const nlohmann::json::parse_error &e) {
    return {std::string("Error: could not parse Action Input as JSON: ") + e.what(),
            true};
  }
  if (!args.is_object()) {
    return {"Error: Action Input must be a JSON object", true};
  }
  ToolResult result;
  try {
    result = it->handler(args, ctx);
  } catch (const std::exception &e) {
    return {std::string("Error: ") + e.what(), true};
  } catch (...) {
    return {"Error: tool failed with an unknown exception", true};
  }
  if (result.observation.empty()) {
    result.observation = "(no output)";
  }
  return result;
}

ToolResult run_code(Harness *harness, std::string_view code,
                    std::string_view stdin_text, int timeout_s) {
  if (harness == nullptr) {
    throw HarnessUnavailable("no code sandbox is configured");
  }
  HarnessRequest req;
  req.mode = HarnessMode::exec;
  req.code = std::string(code);
  if (!stdin_text.empty()) {
    req.stdin_text = std::string(stdin_text);
  }
  req.timeout_s = std::max(1, timeout_s);
  const auto resp = harness->evaluate(req);
  if (resp.timed_out()) {
    return {"timeout", true};
  }
  std::string obs = resp.stdout_text;
  if (resp.traceback) {
    if (!obs.empty() && obs.back() != '\n') {
      obs += "\n";
    }
    obs += *resp.traceback;
  } else if (!resp.passed && resp.error_type) {
    obs += (obs.empty() ? "" : "\n") + *resp.error_type;
  }
  if (obs.empty()) {
    obs = "(no output)";
  }
  return {obs, !resp.passed};
}

Corpus::Corpus(std::vector<Article> articles) : articles_(std::move(articles)) {
  for (std::size_t i = 0; i < articles_.size(); ++i) {
    articles_[i].doc_id = i;
  }
}

Corpus Corpus::parse_jsonl(std::string_view text) {
  std::vector<Article> articles;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error &e) {
      throw ParseError(std::string("corpus line is not JSON: ") + e.what(),
                       "line " + std::to_string(line_no));
    }
    Article a;
    a.title = j.value("title", "");
    a.author = j.value("author", "");
    a.category = j.value("category", "");
    a.date = j.value("date", "");
    a.source = j.value("source", "");
    a.content = j.value("content", "");
    articles.push_back(std::move(a));
  }
  return Corpus(std::move(articles));
}

Corpus Corpus::load_jsonl(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open corpus file " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_jsonl(ss.str());
}

std::vector<FieldFilter> parse_filters(const nlohmann::json &j) {
  std::vector<FieldFilter> out;
  if (j.is_null()) {
    return out;
  }
  if (!j.is_object()) {
    throw BadFilterField("filters must be a JSON object");
  }
  static const std::vector<std::string> kFields = {"title", "author", "category",
                                                   "date", "source"};
  for (const auto &[field, spec] : j.items()) {
    if (std::find(kFields.begin(), kFields.end(), field) == kFields.end()) {
      throw BadFilterField("cannot filter on field \"" + field + "\"");
    }
    if (spec.is_string()) {
      out.push_back({field, FieldFilter::Op::equals, spec.get<std::string>()});
      continue;
    }
    if (!spec.is_object()) {
      throw BadFilterField("filter for \"" + field +
                           "\" must be a string or an object");
    }
    for (const auto &[op, value] : spec.items()) {
      if (!value.is_string()) {
        throw BadFilterField("filter value for \"" + field + "." + op +
                             "\" must be a string");
      }
      FieldFilter f{field, FieldFilter::Op::equals, value.get<std::string>()};
      if (op == "equals") {
        f.op = FieldFilter::Op::equals;
      } else if (op == "contains") {
        f.op = FieldFilter::Op::contains;
      } else if (op == "from" && field == "date") {
        f.op = FieldFilter::Op::on_or_after;
      } else if (op == "to" && field == "date") {
        f.op = FieldFilter::Op::on_or_before;
      } else {
        throw BadFilterField("unsupported filter operator \"" + op +
                             "\" on field \"" + field + "\"");
      }
      out.push_back(std::move(f));
    }
  }
  return out;
}

SearchPage search_corpus(const Corpus &corpus,
                         const std::vector<FieldFilter> &filters,
                         std::string_view query, std::size_t page,
                         std::size_t page_size) {
  if (page < 1 || page_size < 1) {
    throw std::invalid_argument("page and page_size must be at least 1");
  }
  for (const auto &f : filters) {
    field_of(Article{}, f.field); // rejects unknown fields up front
  }
  const auto terms = query_terms(query);

  std::vector<SearchHit> all;
  for (const auto &a : corpus.articles()) {
    if (!std::all_of(filters.begin(), filters.end(),
                     [&](const FieldFilter &f) { return matches(a, f); })) {
      continue;
    }
    std::size_t score = 0;
    if (!terms.empty()) {
      const auto title_lc = lower(a.title);
      const auto content_lc = lower(a.content);
      for (const auto &t : terms) {
        score += count_occurrences(title_lc, t) + count_occurrences(content_lc, t);
      }
      if (score == 0) {
        continue;
      }
    }
    all.push_back({a.doc_id, score, {}});
  }
  std::stable_sort(all.begin(), all.end(), [](const SearchHit &x, const SearchHit &y) {
    return x.score != y.score ? x.score > y.score : x.doc_id < y.doc_id;
  });

  SearchPage result;
  result.total_matches = all.size();
  result.page = page;
  result.page_size = page_size;
  const std::size_t begin = (page - 1) * page_size;
  for (std::size_t i = begin; i < all.size() && i < begin + page_size; ++i) {
    auto hit = all[i];
    hit.snippet = make_snippet(corpus.articles()[hit.doc_id], terms);
    result.hits.push_back(std::move(hit));
  }
  return result;
}

ToolResult corpus_search(const Corpus &corpus,
                         const std::vector<FieldFilter> &filters,
                         std::string_view query, std::size_t page,
                         std::size_t page_size) {
  const auto result = search_corpus(corpus, filters, query, page, page_size);
  const std::size_t pages =
      (result.total_matches + page_size - 1) / page_size;
  std::ostringstream out;
  if (result.hits.empty()) {
    out << "No results on page " << page << " (" << result.total_matches
        << " matching articles).";
    return {out.str(), false};
  }
  out << "Found " << result.total_matches << " matching articles (page " << page
      << " of " << pages << "):";
  for (const auto &h : result.hits) {
    out << "\n\n" << h.snippet;
  }
  return {out.str(), false};
}

std::filesystem::path scratch_path(const std::filesystem::path &scratch_dir,
                                   std::string_view relative) {
  namespace fs = std::filesystem;
  if (scratch_dir.empty()) {
    throw std::invalid_argument("no scratch directory is configured for this run");
  }
  const fs::path rel(relative);
  if (relative.empty() || rel.is_absolute()) {
    throw std::invalid_argument("path must be relative to the scratch directory");
  }
  const auto root = fs::weakly_canonical(scratch_dir);
  const auto full = fs::weakly_canonical(root / rel);
  const auto [r, f] = std::mismatch(root.begin(), root.end(), full.begin(), full.end());
  if (r != root.end()) {
    throw std::invalid_argument("path escapes the scratch directory: " +
                                std::string(relative));
  }
  return full;
}

void register_builtin_tools(ToolRegistry &registry,
                            const BuiltinToolOptions &options) {
  registry.register_tool(
      {"calculator",
       "Evaluates an arithmetic expression with +, -, *, /, parentheses and "
       "decimal numbers using exact arithmetic.",
       {{"input", "arithmetic expression, e.g. \"(1/4)*8\""}}},
      [](const nlohmann::json &args, ToolContext &) -> ToolResult {
        const auto expr = args.contains("input") ? string_arg(args, "input")
                                                 : string_arg(args, "expression");
        return {calculator_eval(expr), false};
      });

  registry.register_tool(
      {"run_code",
       "Runs a Python program in a sandbox and returns its stdout and stderr.",
       {{"code", "Python source to execute"},
        {"stdin", "optional text passed on standard input"}}},
      [](const nlohmann::json &args, ToolContext &ctx) -> ToolResult {
        const auto code = string_arg(args, "code");
        const auto in = args.value("stdin", std::string{});
        return run_code(ctx.harness, code, in, ctx.code_timeout_s);
      });

  if (options.corpus) {
    auto corpus = options.corpus;
    registry.register_tool(
        {"corpus_search",
         "Searches the article corpus. Filters narrow by title, author, "
         "category, source (exact string, or {\"contains\": ...}) and date "
         "({\"from\": ISO date, \"to\": ISO date}); results are paginated.",
         {{"query", "keywords matched against title and content"},
          {"filters", "object of field filters"},
          {"page", "1-based page number (default 1)"},
          {"page_size", "results per page (default 5)"}}},
        [corpus](const nlohmann::json &args, ToolContext &) -> ToolResult {
          const auto filters =
              parse_filters(args.contains("filters") ? args["filters"] : nlohmann::json());
          return corpus_search(*corpus, filters, args.value("query", std::string{}),
                               args.value("page", std::size_t{1}),
                               args.value("page_size", std::size_t{5}));
        });
  }

  if (!options.file_tools) {
    return;
  }
  registry.register_tool(
      {"write_file", "Creates or overwrites a file in the working directory.",
       {{"path", "relative file path"}, {"content", "file content"}}},
      [](const nlohmann::json &args, ToolContext &ctx) -> ToolResult {
        const auto path = scratch_path(ctx.scratch_dir, string_arg(args, "path"));
        std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        const auto content = string_arg(args, "content");
        out << content;
        if (!out) {
          return {"could not write " + path.filename().string(), true};
        }
        return {"wrote " + std::to_string(content.size()) + " bytes to " +
                    string_arg(args, "path"),
                false};
      });
  registry.register_tool(
      {"read_file", "Reads a file from the working directory.",
       {{"path", "relative file path"}}},
      [](const nlohmann::json &args, ToolContext &ctx) -> ToolResult {
        const auto path = scratch_path(ctx.scratch_dir, string_arg(args, "path"));
        std::ifstream in(path, std::ios::binary);
        if (!in) {
          return {"no such file: " + string_arg(args, "path"), true};
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        return {ss.str(), false};
      });
  registry.register_tool(
      {"delete_file", "Deletes a file from the working directory.",
       {{"path", "relative file path"}}},
      [](const nlohmann::json &args, ToolContext &ctx) -> ToolResult {
        const auto path = scratch_path(ctx.scratch_dir, string_arg(args, "path"));
        if (!std::filesystem::remove(path)) {
          return {"no such file: " + string_arg(args, "path"), true};
        }
        return {"deleted " + string_arg(args, "path"), false};
      });
}

} // namespace veriflow
