// Ground values: strings, unbounded integers, booleans and minted entities.

#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "gpe/error.hpp"

namespace gpe {

using TypeName = std::string;

inline constexpr std::string_view kStringType = "string";
inline constexpr std::string_view kIntType = "int";
inline constexpr std::string_view kBoolType = "bool";
// Wildcard type carried by opaque operations; compatible with every value.
inline constexpr std::string_view kAnyType = "any";

inline bool is_builtin_type(std::string_view name) {
  return name == kStringType || name == kIntType || name == kBoolType || name == kAnyType;
}

inline bool types_compatible(std::string_view declared, std::string_view actual) {
  return declared == kAnyType || actual == kAnyType || declared == actual;
}

// Signed integer of arbitrary width stored as canonical decimal text.
class Integer {
 public:
  Integer() : digits_("0") {}
  explicit Integer(long long v) : digits_(std::to_string(v)) {}

  static std::optional<Integer> parse(std::string_view text) {
    if (text.empty()) return std::nullopt;
    bool negative = false;
    std::size_t i = 0;
    if (text[0] == '-') {
      negative = true;
      i = 1;
    }
    if (i == text.size()) return std::nullopt;
    for (std::size_t j = i; j < text.size(); ++j)
      if (text[j] < '0' || text[j] > '9') return std::nullopt;
    while (i + 1 < text.size() && text[i] == '0') ++i;
    std::string body(text.substr(i));
    Integer out;
    out.digits_ = (negative && body != "0") ? "-" + body : body;
    return out;
  }

  const std::string& str() const { return digits_; }
  bool negative() const { return digits_[0] == '-'; }

  friend bool operator==(const Integer&, const Integer&) = default;
  friend std::strong_ordering operator<=>(const Integer& a, const Integer& b) {
    if (a.negative() != b.negative()) return a.negative() ? std::strong_ordering::less : std::strong_ordering::greater;
    auto mag = [](const Integer& x) { return std::string_view(x.digits_).substr(x.negative() ? 1 : 0); };
    auto ma = mag(a), mb = mag(b);
    std::strong_ordering cmp = ma.size() != mb.size() ? ma.size() <=> mb.size() : ma.compare(mb) <=> 0;
    if (a.negative()) return 0 <=> cmp;
    return cmp;
  }

 private:
  std::string digits_;
};

struct EntityId {
  TypeName type;
  std::uint64_t serial = 0;

  friend auto operator<=>(const EntityId&, const EntityId&) = default;
};

using Value = std::variant<std::string, Integer, bool, EntityId>;

inline TypeName type_of(const Value& v) {
  switch (v.index()) {
    case 0: return TypeName(kStringType);
    case 1: return TypeName(kIntType);
    case 2: return TypeName(kBoolType);
    default: return std::get<EntityId>(v).type;
  }
}

inline std::string quote_string(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

inline std::string format_entity(const EntityId& e) { return e.type + "#" + std::to_string(e.serial); }

inline std::string format_value(const Value& v) {
  switch (v.index()) {
    case 0: return quote_string(std::get<std::string>(v));
    case 1: return std::get<Integer>(v).str();
    case 2: return std::get<bool>(v) ? "true" : "false";
    default: return format_entity(std::get<EntityId>(v));
  }
}

inline bool is_type_name(std::string_view s) {
  if (s.empty() || s[0] < 'a' || s[0] > 'z') return false;
  for (char c : s)
    if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_')) return false;
  return true;
}

// `type#serial`
inline std::optional<EntityId> parse_entity(std::string_view text) {
  auto hash = text.find('#');
  if (hash == std::string_view::npos) return std::nullopt;
  auto type = text.substr(0, hash);
  auto digits = text.substr(hash + 1);
  if (!is_type_name(type) || digits.empty() || digits.size() > 18) return std::nullopt;
  std::uint64_t serial = 0;
  for (char c : digits) {
    if (c < '0' || c > '9') return std::nullopt;
    serial = serial * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return EntityId{TypeName(type), serial};
}

// Interprets a bare (unquoted) token as a value: integer, boolean or entity.
inline std::optional<Value> parse_bare_value(std::string_view token) {
  if (token == "true") return Value(true);
  if (token == "false") return Value(false);
  if (auto i = Integer::parse(token)) return Value(*i);
  if (auto e = parse_entity(token)) return Value(*e);
  return std::nullopt;
}

}  // namespace gpe
