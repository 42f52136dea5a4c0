#pragma once

#include <charconv>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lagan::detail {

struct ParsedSpec {
  std::string family;
  std::optional<double> parameter;
};

/// Splits "name" or "name:number".
inline ParsedSpec parse_spec(std::string_view spec) {
  ParsedSpec out;
  const auto colon = spec.find(':');
  out.family = std::string(spec.substr(0, colon));
  if (colon == std::string_view::npos) return out;
  const std::string number(spec.substr(colon + 1));
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(number, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (number.empty() || used != number.size()) {
    throw std::invalid_argument("malformed parameter in '" + std::string(spec) + "'");
  }
  out.parameter = value;
  return out;
}

inline double require_parameter(const ParsedSpec& s, std::string_view spec) {
  if (!s.parameter) {
    throw std::invalid_argument("'" + std::string(spec) + "' needs a parameter (family:value)");
  }
  return *s.parameter;
}

}  // namespace lagan::detail
