#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "emx/record.hpp"
#include "emx/tokenize.hpp"

namespace emx {

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

/// Token-set Jaccard; 0 when both sets are empty.
inline double jaccard(const std::vector<std::string>& x, const std::vector<std::string>& y) {
  std::unordered_set<std::string_view> sx(x.begin(), x.end());
  std::unordered_set<std::string_view> sy(y.begin(), y.end());
  if (sx.empty() && sy.empty()) return 0.0;
  std::size_t inter = 0;
  for (auto t : sx) inter += sy.count(t);
  return static_cast<double>(inter) / static_cast<double>(sx.size() + sy.size() - inter);
}

inline std::size_t levenshtein(std::string_view s, std::string_view t) {
  if (s.size() < t.size()) std::swap(s, t);
  std::vector<std::size_t> row(t.size() + 1);
  for (std::size_t j = 0; j <= t.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= s.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= t.size(); ++j) {
      std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (s[i - 1] != t[j - 1] ? 1 : 0)});
      diag = up;
    }
  }
  return row[t.size()];
}

/// 1 - edit distance / longer length; 0 when both strings are empty.
inline double levenshtein_similarity(std::string_view s, std::string_view t) {
  std::size_t longer = std::max(s.size(), t.size());
  if (longer == 0) return 0.0;
  return 1.0 - static_cast<double>(levenshtein(s, t)) / static_cast<double>(longer);
}

/// Slots per compared attribute.
inline constexpr std::size_t kFeaturesPerAttribute = 4;

/// Similarity of one attribute pair: {jaccard, levenshtein, numeric diff, missing}.
inline void attribute_similarity(const AttributeValue* x, const AttributeValue* y, std::vector<double>& out) {
  std::vector<std::string> tx, ty;
  if (x) tx = tokenize(*x);
  if (y) ty = tokenize(*y);
  if (tx.empty() || ty.empty()) {
    out.insert(out.end(), {0.0, 0.0, 0.0, 1.0});
    return;
  }
  for (auto& t : tx) t = ascii_lower(t);
  for (auto& t : ty) t = ascii_lower(t);
  double num = 0.0;
  if (x->is_number() && y->is_number()) {
    double a = x->as_number(), b = y->as_number();
    double scale = std::max(std::fabs(a), std::fabs(b));
    num = scale > 0.0 ? std::fabs(a - b) / scale : 0.0;
  }
  out.push_back(jaccard(tx, ty));
  out.push_back(levenshtein_similarity(join_tokens(tx), join_tokens(ty)));
  out.push_back(num);
  out.push_back(0.0);
}

inline std::vector<std::string> record_tokens_lower(const Record& r) {
  std::vector<std::string> out;
  for (const auto& a : r.attributes()) {
    for (auto& t : tokenize(a.value)) out.push_back(ascii_lower(t));
  }
  return out;
}

/// Features over the named attributes (looked up by name in each record; an
/// absent name counts as missing) followed by whole-record token Jaccard.
inline std::vector<double> similarity_features(const RecordPair& p, const std::vector<std::string>& names) {
  std::vector<double> f;
  f.reserve(names.size() * kFeaturesPerAttribute + 1);
  for (const auto& n : names) {
    auto ia = p.a.find(n);
    auto ib = p.b.find(n);
    attribute_similarity(ia ? &p.a[*ia].value : nullptr, ib ? &p.b[*ib].value : nullptr, f);
  }
  f.push_back(jaccard(record_tokens_lower(p.a), record_tokens_lower(p.b)));
  return f;
}

/// Attribute names of `a` that also occur in `b`, in `a`'s order.
inline std::vector<std::string> shared_attribute_names(const Record& a, const Record& b) {
  std::vector<std::string> out;
  for (const auto& attr : a.attributes()) {
    if (b.find(attr.name)) out.push_back(attr.name);
  }
  return out;
}

inline std::vector<double> similarity_features(const RecordPair& p) {
  return similarity_features(p, shared_attribute_names(p.a, p.b));
}

inline std::vector<std::string> similarity_feature_names(const std::vector<std::string>& names) {
  std::vector<std::string> out;
  for (const auto& n : names) {
    for (const char* k : {"jaccard", "levenshtein", "numeric_diff", "missing"}) {
      out.push_back(n + ":" + k);
    }
  }
  out.push_back("record:jaccard");
  return out;
}

}  // namespace emx
