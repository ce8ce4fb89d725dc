#include "veriflow/prompts.h"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <stdexcept>

namespace veriflow::prompts {

namespace assets {
extern const std::string_view planner;
extern const std::string_view replanner;
extern const std::string_view executor_system;
extern const std::string_view executor_task;
extern const std::string_view executor_output_guide;
extern const std::string_view verifier;
extern const std::string_view planner_reask;
extern const std::string_view executor_reformat;
extern const std::string_view judge_reask;
} // namespace assets

std::string_view text(Template t) {
  switch (t) {
  case Template::planner:
    return assets::planner;
  case Template::replanner:
    return assets::replanner;
  case Template::executor_system:
    return assets::executor_system;
  case Template::executor_task:
    return assets::executor_task;
  case Template::executor_output_guide:
    return assets::executor_output_guide;
  case Template::verifier:
    return assets::verifier;
  case Template::planner_reask:
    return assets::planner_reask;
  case Template::executor_reformat:
    return assets::executor_reformat;
  case Template::judge_reask:
    return assets::judge_reask;
  }
  throw std::invalid_argument("unknown prompt template");
}

std::string_view name(Template t) {
  switch (t) {
  case Template::planner:
    return "planner";
  case Template::replanner:
    return "replanner";
  case Template::executor_system:
    return "executor_system";
  case Template::executor_task:
    return "executor_task";
  case Template::executor_output_guide:
    return "executor_output_guide";
  case Template::verifier:
    return "verifier";
  case Template::planner_reask:
    return "planner_reask";
  case Template::executor_reformat:
    return "executor_reformat";
  case Template::judge_reask:
    return "judge_reask";
  }
  throw std::invalid_argument("unknown prompt template");
}

std::string render(std::string_view tmpl, const Substitutions &values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        const auto key = tmpl.substr(i + 1, close - i - 1);
        bool replaced = false;
        for (const auto &[k, v] : values) {
          if (k == key) {
            out.append(v);
            replaced = true;
            break;
          }
        }
        if (replaced) {
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i]);
    ++i;
  }
  return out;
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(),
                 nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  std::string hex;
  hex.reserve(len * 2);
  char buf[3];
  for (unsigned int k = 0; k < len; ++k) {
    std::snprintf(buf, sizeof buf, "%02x", digest[k]);
    hex += buf;
  }
  return hex;
}

std::string checksum(Template t) { return sha256_hex(text(t)); }

} // namespace veriflow::prompts
