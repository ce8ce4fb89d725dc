#pragma once

#include <optional>
#include <string_view>

namespace veriflow {

std::string_view trim(std::string_view s);

// First balanced {...} in `text`, honoring JSON string escapes.
std::optional<std::string_view> find_json_object(std::string_view text);

} // namespace veriflow
