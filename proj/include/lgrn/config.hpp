#pragma once

// Flat key/value configuration. Files look like
//
//   # comment
//   image_size = 512
//   learning_rate = 0.001
//
// Each config struct publishes a field table; the table drives file parsing,
// manifest writing and command-line option registration, so the keys and
// defaults live in exactly one place.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "lgrn/error.hpp"

namespace lgrn {

using KeyValues = std::map<std::string, std::string>;

/// Parse "key = value" lines. Blank lines and '#' comments are skipped.
/// Throws ParseError with the line number on malformed lines or duplicate keys.
KeyValues parse_key_values(const std::string& text, const std::string& source);
KeyValues read_key_values(const std::filesystem::path& path);
std::string format_key_values(const std::vector<std::pair<std::string, std::string>>& entries);

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

template <typename Cfg>
struct ConfigField {
  std::string key;
  std::string help;
  std::variant<int Cfg::*, double Cfg::*, std::uint64_t Cfg::*, bool Cfg::*, std::string Cfg::*> member;
};

template <typename Cfg>
std::string field_value(const Cfg& cfg, const ConfigField<Cfg>& field) {
  return std::visit(
      [&](auto ptr) -> std::string {
        using V = std::remove_cvref_t<decltype(cfg.*ptr)>;
        if constexpr (std::is_same_v<V, double>) return format_double(cfg.*ptr);
        else if constexpr (std::is_same_v<V, bool>) return (cfg.*ptr) ? "true" : "false";
        else if constexpr (std::is_same_v<V, std::string>) return cfg.*ptr;
        else return std::to_string(cfg.*ptr);
      },
      field.member);
}

template <typename Cfg>
void set_field(Cfg& cfg, const ConfigField<Cfg>& field, const std::string& text) {
  auto bad = [&] { return UsageError("invalid value '" + text + "' for key '" + field.key + "'"); };
  std::visit(
      [&](auto ptr) {
        using V = std::remove_cvref_t<decltype(cfg.*ptr)>;
        if constexpr (std::is_same_v<V, std::string>) {
          cfg.*ptr = text;
        } else if constexpr (std::is_same_v<V, bool>) {
          if (text == "true" || text == "1") cfg.*ptr = true;
          else if (text == "false" || text == "0") cfg.*ptr = false;
          else throw bad();
        } else {
          V v{};
          const char* end = text.data() + text.size();
          auto [p, ec] = std::from_chars(text.data(), end, v);
          if (ec != std::errc{} || p != end) throw bad();
          cfg.*ptr = v;
        }
      },
      field.member);
}

/// Apply every entry of kv whose key is one of fields; other keys are ignored.
template <typename Cfg>
void apply_key_values(Cfg& cfg, const std::vector<ConfigField<Cfg>>& fields, const KeyValues& kv) {
  for (const auto& f : fields) {
    auto it = kv.find(f.key);
    if (it != kv.end()) set_field(cfg, f, it->second);
  }
}

template <typename Cfg>
std::vector<std::pair<std::string, std::string>> to_entries(const Cfg& cfg,
                                                            const std::vector<ConfigField<Cfg>>& fields) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields) out.emplace_back(f.key, field_value(cfg, f));
  return out;
}

}  // namespace lgrn
