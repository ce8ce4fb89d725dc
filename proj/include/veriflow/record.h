#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace veriflow {

using ordered_json = nlohmann::ordered_json;

// Named-variable record: an insertion-ordered map from variable name to a
// JSON value. Every node input and output travels as one of these.
class StructuredRecord {
public:
  StructuredRecord() : values_(ordered_json::object()) {}

  // Throws std::invalid_argument if `object` is not a JSON object.
  static StructuredRecord from_json(const ordered_json &object);

  void set(std::string_view name, ordered_json value);
  bool contains(std::string_view name) const;
  const ordered_json &at(std::string_view name) const;

  std::vector<std::string> names() const;
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  const ordered_json &json() const { return values_; }
  std::string dump(int indent = -1) const { return values_.dump(indent); }

  friend bool operator==(const StructuredRecord &a, const StructuredRecord &b) {
    return a.values_ == b.values_;
  }

private:
  ordered_json values_;
};

} // namespace veriflow
