#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

namespace mdpconc {

inline constexpr const char* kVersion = "mdpconc 0.1.0";

/// FNV-1a 64-bit over the canonical (sorted-key, shortest-float) JSON dump.
/// Embedded in reports so a run can be traced back to its exact model.
inline std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  static const char* digits = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = digits[h & 0xf];
    h >>= 4;
  }
  buf[16] = '\0';
  return std::string(buf);
}

inline std::string model_hash(const nlohmann::json& model_json) {
  return "fnv1a64:" + fnv1a_hex(model_json.dump());
}

}  // namespace mdpconc
