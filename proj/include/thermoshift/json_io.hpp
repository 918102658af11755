#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include <json.hpp>

namespace thermoshift {

using ordered_json = nlohmann::ordered_json;

namespace detail {

inline void append_double(std::string& out, double v, int digits) {
  if (!std::isfinite(v)) {
    out += "null";
    return;
  }
  char buf[64];
  std::to_chars_result r =
      digits > 0 ? std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, digits)
                 : std::to_chars(buf, buf + sizeof(buf), v);
  std::string_view sv(buf, static_cast<std::size_t>(r.ptr - buf));
  out.append(sv);
  // Keep the value re-parsable as a floating-point number.
  if (sv.find('.') == std::string_view::npos && sv.find('e') == std::string_view::npos &&
      sv.find("null") == std::string_view::npos && sv.find("inf") == std::string_view::npos)
    out += ".0";
}

inline void append_escaped(std::string& out, const std::string& s) {
  out += '"';
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
}

inline void dump_value(std::string& out, const ordered_json& j, int digits, int indent,
                       int level) {
  const std::string pad(static_cast<std::size_t>(indent * (level + 1)), ' ');
  const std::string pad_close(static_cast<std::size_t>(indent * level), ' ');
  switch (j.type()) {
    case ordered_json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        if (indent > 0) {
          out += '\n';
          out += pad;
        }
        append_escaped(out, it.key());
        out += indent > 0 ? ": " : ":";
        dump_value(out, it.value(), digits, indent, level + 1);
      }
      if (indent > 0) {
        out += '\n';
        out += pad_close;
      }
      out += '}';
      return;
    }
    case ordered_json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += ',';
        first = false;
        if (indent > 0) {
          out += '\n';
          out += pad;
        }
        dump_value(out, v, digits, indent, level + 1);
      }
      if (indent > 0) {
        out += '\n';
        out += pad_close;
      }
      out += ']';
      return;
    }
    case ordered_json::value_t::string:
      append_escaped(out, j.get_ref<const std::string&>());
      return;
    case ordered_json::value_t::boolean:
      out += j.get<bool>() ? "true" : "false";
      return;
    case ordered_json::value_t::number_integer:
      out += std::to_string(j.get<std::int64_t>());
      return;
    case ordered_json::value_t::number_unsigned:
      out += std::to_string(j.get<std::uint64_t>());
      return;
    case ordered_json::value_t::number_float:
      append_double(out, j.get<double>(), digits);
      return;
    default:
      out += "null";
      return;
  }
}

}  // namespace detail

// Deterministic serializer: insertion-ordered keys, locale-free number
// formatting. digits = 17 for full-precision reports, 0 for shortest
// round-trip (table streams).
inline std::string dump_deterministic(const ordered_json& j, int digits = 17, int indent = 2) {
  std::string out;
  detail::dump_value(out, j, digits, indent, 0);
  if (indent > 0) out += '\n';
  return out;
}

}  // namespace thermoshift
