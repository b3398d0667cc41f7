#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace mpa {

/// Locale-free shortest-safe rendering with 17 significant digits.
inline std::string format_g17(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

}  // namespace mpa
