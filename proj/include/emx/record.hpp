#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "emx/error.hpp"

namespace emx {

/// Shortest decimal text that parses back to exactly `v`.
inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Parses the whole of `s` as a finite decimal number.
inline std::optional<double> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  // from_chars rejects a leading '+', accept it like strtod would.
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

/// A cell value: text, number or null. Null and the empty string are distinct.
class AttributeValue {
 public:
  AttributeValue() = default;

  static AttributeValue null() { return AttributeValue(); }
  static AttributeValue text(std::string s) { return AttributeValue(Storage(std::move(s))); }
  static AttributeValue number(double d) { return AttributeValue(Storage(d)); }

  bool is_null() const noexcept { return std::holds_alternative<std::monostate>(v_); }
  bool is_text() const noexcept { return std::holds_alternative<std::string>(v_); }
  bool is_number() const noexcept { return std::holds_alternative<double>(v_); }

  const std::string& as_text() const { return std::get<std::string>(v_); }
  double as_number() const { return std::get<double>(v_); }

  /// Display form; null renders as the empty string.
  std::string to_string() const {
    if (is_text()) return as_text();
    if (is_number()) return format_number(as_number());
    return {};
  }

  bool operator==(const AttributeValue&) const = default;

 private:
  using Storage = std::variant<std::monostate, std::string, double>;
  explicit AttributeValue(Storage v) : v_(std::move(v)) {}
  Storage v_;
};

struct Attribute {
  std::string name;
  AttributeValue value;
  bool operator==(const Attribute&) const = default;
};

/// Ordered attribute name/value pairs with unique names.
class Record {
 public:
  Record() = default;

  explicit Record(std::vector<Attribute> attributes) : attrs_(std::move(attributes)) {
    std::unordered_set<std::string_view> seen;
    for (const auto& a : attrs_) {
      if (!seen.insert(a.name).second) {
        throw ValidationError("duplicate attribute name '" + a.name + "'");
      }
    }
  }

  /// Builds a record without the uniqueness check. Used for perturbed copies
  /// whose attribute names may have been edited.
  static Record unchecked(std::vector<Attribute> attributes) {
    Record r;
    r.attrs_ = std::move(attributes);
    return r;
  }

  const std::vector<Attribute>& attributes() const noexcept { return attrs_; }
  std::vector<Attribute>& mutable_attributes() noexcept { return attrs_; }
  std::size_t size() const noexcept { return attrs_.size(); }
  bool empty() const noexcept { return attrs_.empty(); }
  const Attribute& operator[](std::size_t i) const { return attrs_[i]; }

  std::optional<std::size_t> find(std::string_view name) const {
    for (std::size_t i = 0; i < attrs_.size(); ++i) {
      if (attrs_[i].name == name) return i;
    }
    return std::nullopt;
  }

  bool operator==(const Record&) const = default;

 private:
  std::vector<Attribute> attrs_;
};

enum class Side { kA, kB, kJoint };

inline Side other_side(Side s) { return s == Side::kA ? Side::kB : Side::kA; }

inline std::string_view side_name(Side s) {
  switch (s) {
    case Side::kA: return "a";
    case Side::kB: return "b";
    case Side::kJoint: return "joint";
  }
  return "?";
}

struct RecordPair {
  Record a;
  Record b;
  std::string pair_id;

  const Record& side(Side s) const { return s == Side::kB ? b : a; }
  Record& side(Side s) { return s == Side::kB ? b : a; }

  void validate() const {
    if (a.empty() || b.empty()) {
      throw ValidationError("record pair '" + pair_id + "' has an empty record");
    }
  }

  bool operator==(const RecordPair&) const = default;
};

}  // namespace emx
