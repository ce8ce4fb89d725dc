#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace veriflow::prompts {

enum class Template {
  planner,
  replanner,
  executor_system,
  executor_task,
  executor_output_guide,
  verifier,
  planner_reask,
  executor_reformat,
  judge_reask,
};

inline constexpr Template kAllTemplates[] = {
    Template::planner,           Template::replanner,
    Template::executor_system,   Template::executor_task,
    Template::executor_output_guide, Template::verifier,
    Template::planner_reask,     Template::executor_reformat,
    Template::judge_reask,
};

// Raw template text, as shipped in assets/prompts/<name>.txt.
std::string_view text(Template t);
// Asset file stem, e.g. "executor_system".
std::string_view name(Template t);

using Substitutions = std::vector<std::pair<std::string_view, std::string_view>>;

// Replaces each "{key}" with its value in one left-to-right pass, so text
// inserted by a substitution is never rescanned. Braces that do not form a
// known placeholder are copied through.
std::string render(std::string_view tmpl, const Substitutions &values);

inline std::string render(Template t, const Substitutions &values) {
  return render(text(t), values);
}

// Lowercase hex SHA-256 of the template text.
std::string checksum(Template t);
std::string sha256_hex(std::string_view data);

} // namespace veriflow::prompts
