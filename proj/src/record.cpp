#include "veriflow/record.h"

#include <stdexcept>

namespace veriflow {

StructuredRecord StructuredRecord::from_json(const ordered_json &object) {
  if (!object.is_object()) {
    throw std::invalid_argument("structured record must be a JSON object");
  }
  StructuredRecord rec;
  rec.values_ = object;
  return rec;
}

void StructuredRecord::set(std::string_view name, ordered_json value) {
  values_[std::string(name)] = std::move(value);
}

bool StructuredRecord::contains(std::string_view name) const {
  return values_.contains(std::string(name));
}

const ordered_json &StructuredRecord::at(std::string_view name) const {
  return values_.at(std::string(name));
}

std::vector<std::string> StructuredRecord::names() const {
  std::vector<std::string> out;
  out.reserve(values_.size());
  for (const auto &item : values_.items()) {
    out.push_back(item.key());
  }
  return out;
}

} // namespace veriflow
