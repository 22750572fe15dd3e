#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "emx/record.hpp"

namespace emx {

enum class TokenLocation { kValue, kName };

struct Token {
  std::string text;
  std::size_t attribute_index = 0;
  std::size_t position = 0;
  TokenLocation location = TokenLocation::kValue;
};

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

/// Splits on runs of whitespace; punctuation stays attached to its word.
inline std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_space(s[j])) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

/// Text splits on whitespace, a number is one token, null is none.
inline std::vector<std::string> tokenize(const AttributeValue& v) {
  if (v.is_text()) return split_whitespace(v.as_text());
  if (v.is_number()) return {format_number(v.as_number())};
  return {};
}

inline std::vector<Token> tokenize_record(const Record& r, bool include_names = false) {
  std::vector<Token> out;
  for (std::size_t ai = 0; ai < r.size(); ++ai) {
    if (include_names) {
      auto names = split_whitespace(r[ai].name);
      for (std::size_t p = 0; p < names.size(); ++p) {
        out.push_back({std::move(names[p]), ai, p, TokenLocation::kName});
      }
    }
    auto toks = tokenize(r[ai].value);
    for (std::size_t p = 0; p < toks.size(); ++p) {
      out.push_back({std::move(toks[p]), ai, p, TokenLocation::kValue});
    }
  }
  return out;
}

inline std::string join_tokens(const std::vector<std::string>& toks) {
  std::string s;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) s.push_back(' ');
    s += toks[i];
  }
  return s;
}

/// Keeps at most `max_words` whitespace-separated words across the text
/// attributes, counted in attribute order. Attributes that fit are left
/// byte-identical; a cut attribute keeps its original spacing up to the last
/// retained word.
inline Record truncate_record(const Record& r, std::size_t max_words) {
  if (max_words < 1) throw ConfigError("truncate_record: max_words must be >= 1");
  std::vector<Attribute> attrs = r.attributes();
  std::size_t budget = max_words;
  for (auto& a : attrs) {
    if (!a.value.is_text()) continue;
    const std::string& s = a.value.as_text();
    std::size_t words = 0;
    std::size_t i = 0;
    std::size_t cut = std::string::npos;
    while (i < s.size()) {
      while (i < s.size() && is_space(s[i])) ++i;
      if (i >= s.size()) break;
      std::size_t j = i;
      while (j < s.size() && !is_space(s[j])) ++j;
      if (words == budget) {
        cut = i;
        break;
      }
      ++words;
      i = j;
    }
    if (cut != std::string::npos) {
      std::string kept = s.substr(0, cut);
      while (!kept.empty() && is_space(kept.back())) kept.pop_back();
      a.value = AttributeValue::text(std::move(kept));
    }
    budget -= std::min(budget, words);
  }
  return Record::unchecked(std::move(attrs));
}

}  // namespace emx
