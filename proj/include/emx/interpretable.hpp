#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "emx/error.hpp"
#include "emx/record.hpp"
#include "emx/tokenize.hpp"

namespace emx {

/// Per-feature perturbation state.
enum class FeatureState : std::uint8_t { kPresent, kAbsent, kMatched };

using PerturbationVector = std::vector<FeatureState>;

inline char state_char(FeatureState s) {
  switch (s) {
    case FeatureState::kPresent: return 'P';
    case FeatureState::kAbsent: return 'A';
    case FeatureState::kMatched: return 'M';
  }
  return '?';
}

/// A run of up to `granularity` consecutive tokens of one attribute value (or
/// name) on one side of the pair.
struct InterpretableFeature {
  Side side = Side::kA;
  TokenLocation location = TokenLocation::kValue;
  std::size_t attribute_index = 0;
  std::size_t start = 0;
  std::size_t length = 0;
  std::size_t granularity = 1;
  /// Placeholder feature for a side without any tokens.
  bool whole_record = false;

  bool operator==(const InterpretableFeature&) const = default;
};

/// Tokens of one record, split by attribute, computed once per space.
struct RecordTokens {
  std::vector<std::vector<std::string>> values;
  std::vector<std::vector<std::string>> names;

  static RecordTokens of(const Record& r) {
    RecordTokens t;
    for (const auto& a : r.attributes()) {
      t.values.push_back(tokenize(a.value));
      t.names.push_back(split_whitespace(a.name));
    }
    return t;
  }

  const std::vector<std::string>& at(TokenLocation loc, std::size_t attr) const {
    return loc == TokenLocation::kName ? names[attr] : values[attr];
  }
};

/// Interpretable representation of one side of a pair (or of both sides, for
/// a joint explanation) at a fixed granularity.
struct InterpretableSpace {
  RecordPair pair;
  Side explained_side = Side::kA;
  std::size_t granularity = 1;
  bool include_names = false;
  std::vector<InterpretableFeature> features;
  std::array<RecordTokens, 2> tokens;

  std::size_t dimension() const { return features.size(); }

  const RecordTokens& tokens_of(Side s) const { return tokens[s == Side::kB ? 1 : 0]; }

  std::vector<std::string> feature_tokens(std::size_t i) const {
    const auto& f = features.at(i);
    if (f.whole_record) return {};
    const auto& all = tokens_of(f.side).at(f.location, f.attribute_index);
    return {all.begin() + static_cast<std::ptrdiff_t>(f.start),
            all.begin() + static_cast<std::ptrdiff_t>(f.start + f.length)};
  }

  std::string feature_text(std::size_t i) const { return join_tokens(feature_tokens(i)); }

  PerturbationVector all_present() const { return PerturbationVector(dimension(), FeatureState::kPresent); }
};

/// Largest token count over non-empty text values; 1 when there are none.
inline std::size_t max_tokens_N(const Record& r) {
  std::size_t n = 0;
  for (const auto& a : r.attributes()) {
    if (a.value.is_text()) n = std::max(n, split_whitespace(a.value.as_text()).size());
  }
  return std::max<std::size_t>(n, 1);
}

namespace detail {

inline void add_runs(std::vector<InterpretableFeature>& out, Side side, TokenLocation loc, std::size_t attr,
                     std::size_t count, std::size_t n) {
  for (std::size_t start = 0; start < count; start += n) {
    out.push_back({side, loc, attr, start, std::min(n, count - start), n, false});
  }
}

inline void add_side(std::vector<InterpretableFeature>& out, const RecordTokens& t, Side side, std::size_t n,
                     bool include_names) {
  for (std::size_t ai = 0; ai < t.values.size(); ++ai) {
    if (include_names) add_runs(out, side, TokenLocation::kName, ai, t.names[ai].size(), n);
    add_runs(out, side, TokenLocation::kValue, ai, t.values[ai].size(), n);
  }
}

}  // namespace detail

/// Groups each attribute's tokens into consecutive runs of `n`; the last run
/// of an attribute may be shorter. `side` may be kJoint to featurize both
/// records. A side with no tokens at all yields one whole-record feature.
inline InterpretableSpace build_space(const RecordPair& pair, Side side, std::size_t n, bool include_names = false) {
  if (n < 1) throw ConfigError("granularity must be >= 1");
  InterpretableSpace s;
  s.pair = pair;
  s.explained_side = side;
  s.granularity = n;
  s.include_names = include_names;
  s.tokens[0] = RecordTokens::of(pair.a);
  s.tokens[1] = RecordTokens::of(pair.b);
  if (side == Side::kJoint) {
    detail::add_side(s.features, s.tokens[0], Side::kA, n, include_names);
    detail::add_side(s.features, s.tokens[1], Side::kB, n, include_names);
  } else {
    detail::add_side(s.features, s.tokens_of(side), side, n, include_names);
  }
  if (s.features.empty()) {
    InterpretableFeature f;
    f.side = side == Side::kJoint ? Side::kA : side;
    f.granularity = n;
    f.whole_record = true;
    s.features.push_back(f);
  }
  return s;
}

}  // namespace emx
