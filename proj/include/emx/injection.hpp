#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emx/interpretable.hpp"
#include "emx/matcher.hpp"
#include "emx/rng.hpp"

namespace emx {

// Translation of perturbation vectors back into record pairs. Absent features
// are deleted from their record. Matched features stay where they are and a
// copy of their tokens is injected into the other record, at the target (out
// of L sampled candidates) that maximizes the matcher score.

inline constexpr std::size_t kMaxTargetsPerAttribute = 3;
inline constexpr std::size_t kMaxTargetsTotal = 10;

enum class TargetKind { kInsert, kOverwrite, kNameAppend };

struct InjectionTarget {
  TargetKind kind = TargetKind::kInsert;
  std::size_t attribute_index = 0;
  /// Token gap for kInsert (0 = before the first token).
  std::size_t gap = 0;
  bool operator==(const InjectionTarget&) const = default;
};

/// What kind of token a feature carries; decides where it may be injected.
enum class FeatureKind { kText, kNumber, kName, kNone };

inline FeatureKind feature_kind(const InterpretableSpace& space, std::size_t i) {
  const auto& f = space.features.at(i);
  if (f.whole_record) return FeatureKind::kNone;
  if (f.location == TokenLocation::kName) return FeatureKind::kName;
  const auto& v = space.pair.side(f.side)[f.attribute_index].value;
  return v.is_number() ? FeatureKind::kNumber : FeatureKind::kText;
}

struct AttributeTargets {
  std::size_t attribute_index = 0;
  TargetKind kind = TargetKind::kInsert;
  std::size_t count = 0;
};

/// Legal injection targets in `other`, grouped by attribute. Text tokens go
/// into any gap of a string attribute (null counts as an empty string); a
/// number may also overwrite a number attribute; name tokens are appended to
/// attribute names only.
inline std::vector<AttributeTargets> legal_targets(FeatureKind kind, const Record& other) {
  std::vector<AttributeTargets> out;
  if (kind == FeatureKind::kNone) return out;
  for (std::size_t ai = 0; ai < other.size(); ++ai) {
    const auto& v = other[ai].value;
    if (kind == FeatureKind::kName) {
      out.push_back({ai, TargetKind::kNameAppend, 1});
    } else if (v.is_number()) {
      if (kind == FeatureKind::kNumber) out.push_back({ai, TargetKind::kOverwrite, 1});
    } else {
      out.push_back({ai, TargetKind::kInsert, tokenize(v).size() + 1});
    }
  }
  return out;
}

/// Target count capped at three per attribute and ten in total.
inline std::size_t count_injection_targets(const std::vector<AttributeTargets>& targets) {
  std::size_t n = 0;
  for (const auto& t : targets) n += std::min(t.count, kMaxTargetsPerAttribute);
  return std::min(n, kMaxTargetsTotal);
}

inline std::size_t count_injection_targets(FeatureKind kind, const Record& other) {
  return count_injection_targets(legal_targets(kind, other));
}

/// Picks an attribute uniformly among those with legal targets, except that a
/// same-named attribute gets probability 0.5 when schemas are matched; then a
/// uniform position within it. nullopt when there is no legal target.
inline std::optional<InjectionTarget> sample_injection_target(const std::vector<AttributeTargets>& targets,
                                                              const std::string& source_attribute,
                                                              const Record& other, bool schema_matched,
                                                              Rng& rng) {
  if (targets.empty()) return std::nullopt;
  std::size_t pick = targets.size();
  if (schema_matched && targets.size() > 1) {
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (other[targets[i].attribute_index].name == source_attribute) pick = i;
    }
    if (pick != targets.size()) {
      if (!rng.coin(0.5)) {
        std::size_t r = rng.index(targets.size() - 1);
        pick = r >= pick ? r + 1 : r;
      }
    }
  }
  if (pick == targets.size()) pick = rng.index(targets.size());
  const auto& t = targets[pick];
  return InjectionTarget{t.kind, t.attribute_index, t.count > 1 ? rng.index(t.count) : 0};
}

enum class SchemaMatching { kAuto, kOn, kOff };

inline bool schemas_matched(const RecordPair& p, SchemaMatching mode) {
  if (mode == SchemaMatching::kOn) return true;
  if (mode == SchemaMatching::kOff) return false;
  for (const auto& a : p.a.attributes()) {
    if (p.b.find(a.name)) return true;
  }
  return false;
}

struct TranslateOptions {
  SchemaMatching schema = SchemaMatching::kAuto;
  std::size_t batch_size = 64;
};

struct InjectionChoice {
  std::size_t feature = 0;
  /// nullopt: no legal target, the feature behaved as Present.
  std::optional<InjectionTarget> target;
  bool operator==(const InjectionChoice&) const = default;
};

struct InjectionPlan {
  /// L: number of candidate combinations scored (0 without injections).
  std::size_t sample_count = 0;
  /// All combinations were enumerated instead of sampled.
  bool exhaustive = false;
  std::vector<InjectionChoice> choices;
  /// Matcher score of the chosen combination, when the matcher was consulted.
  std::optional<double> score;
};

struct Translation {
  RecordPair pair;
  InjectionPlan plan;
};

/// Candidates awaiting scores; see propose_translation / resolve_translation.
struct TranslationProposal {
  std::vector<std::vector<InjectionChoice>> combinations;
  std::vector<RecordPair> candidates;
  std::size_t sample_count = 0;
  bool exhaustive = false;

  bool needs_scores() const { return sample_count > 0; }
};

/// Deletes every Absent feature's tokens. Untouched attributes are copied
/// verbatim; a number whose token is removed becomes null.
inline RecordPair apply_removals(const InterpretableSpace& space, const PerturbationVector& z) {
  if (z.size() != space.dimension()) throw ConfigError("perturbation vector length differs from d_x");
  RecordPair out = space.pair;
  for (Side side : {Side::kA, Side::kB}) {
    const auto& toks = space.tokens_of(side);
    const std::size_t na = toks.values.size();
    std::vector<std::vector<bool>> drop_value(na), drop_name(na);
    bool any = false;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const auto& f = space.features[i];
      if (z[i] != FeatureState::kAbsent || f.whole_record || f.side != side) continue;
      auto& mask = f.location == TokenLocation::kName ? drop_name[f.attribute_index] : drop_value[f.attribute_index];
      mask.resize(toks.at(f.location, f.attribute_index).size(), false);
      for (std::size_t t = f.start; t < f.start + f.length; ++t) mask[t] = true;
      any = true;
    }
    if (!any) continue;
    auto& attrs = out.side(side).mutable_attributes();
    for (std::size_t ai = 0; ai < na; ++ai) {
      if (!drop_value[ai].empty()) {
        auto& v = attrs[ai].value;
        if (v.is_number()) {
          v = AttributeValue::null();
        } else {
          std::vector<std::string> kept;
          for (std::size_t t = 0; t < toks.values[ai].size(); ++t) {
            if (!drop_value[ai][t]) kept.push_back(toks.values[ai][t]);
          }
          v = AttributeValue::text(join_tokens(kept));
        }
      }
      if (!drop_name[ai].empty()) {
        std::vector<std::string> kept;
        for (std::size_t t = 0; t < toks.names[ai].size(); ++t) {
          if (!drop_name[ai][t]) kept.push_back(toks.names[ai][t]);
        }
        attrs[ai].name = join_tokens(kept);
      }
    }
  }
  return out;
}

/// Applies one combination of injection targets to `base`.
inline RecordPair apply_injections(const InterpretableSpace& space, const RecordPair& base,
                                   const std::vector<InjectionChoice>& combo) {
  RecordPair out = base;
  for (Side target_side : {Side::kA, Side::kB}) {
    auto& attrs = out.side(target_side).mutable_attributes();
    struct Insert {
      std::size_t gap;
      std::size_t order;
      std::vector<std::string> tokens;
    };
    std::vector<std::vector<Insert>> inserts(attrs.size());
    bool touched = false;
    for (std::size_t c = 0; c < combo.size(); ++c) {
      const auto& choice = combo[c];
      if (!choice.target) continue;
      const auto& f = space.features[choice.feature];
      if (other_side(f.side) != target_side) continue;
      const auto& t = *choice.target;
      touched = true;
      switch (t.kind) {
        case TargetKind::kInsert:
          inserts[t.attribute_index].push_back({t.gap, c, space.feature_tokens(choice.feature)});
          break;
        case TargetKind::kOverwrite:
          attrs[t.attribute_index].value = space.pair.side(f.side)[f.attribute_index].value;
          break;
        case TargetKind::kNameAppend: {
          auto name_toks = split_whitespace(attrs[t.attribute_index].name);
          for (auto& tok : space.feature_tokens(choice.feature)) name_toks.push_back(std::move(tok));
          attrs[t.attribute_index].name = join_tokens(name_toks);
          break;
        }
      }
    }
    if (!touched) continue;
    for (std::size_t ai = 0; ai < attrs.size(); ++ai) {
      if (inserts[ai].empty()) continue;
      auto& ins = inserts[ai];
      std::stable_sort(ins.begin(), ins.end(), [](const Insert& x, const Insert& y) {
        return x.gap != y.gap ? x.gap < y.gap : x.order < y.order;
      });
      auto existing = tokenize(attrs[ai].value);
      std::vector<std::string> merged;
      std::size_t k = 0;
      for (std::size_t g = 0; g <= existing.size(); ++g) {
        while (k < ins.size() && ins[k].gap <= g) {
          merged.insert(merged.end(), ins[k].tokens.begin(), ins[k].tokens.end());
          ++k;
        }
        if (g < existing.size()) merged.push_back(existing[g]);
      }
      attrs[ai].value = AttributeValue::text(join_tokens(merged));
    }
  }
  return out;
}

/// Expands all target combinations for the given per-feature target lists,
/// in lexicographic order.
inline std::vector<std::vector<InjectionChoice>> enumerate_combinations(
    const std::vector<std::size_t>& features, const std::vector<std::vector<InjectionTarget>>& options) {
  std::vector<std::vector<InjectionChoice>> out;
  std::vector<std::size_t> idx(features.size(), 0);
  for (;;) {
    std::vector<InjectionChoice> combo;
    for (std::size_t f = 0; f < features.size(); ++f) combo.push_back({features[f], options[f][idx[f]]});
    out.push_back(std::move(combo));
    std::size_t f = features.size();
    while (f > 0) {
      --f;
      if (++idx[f] < options[f].size()) break;
      idx[f] = 0;
      if (f == 0) return out;
    }
    if (features.empty()) return out;
  }
}

inline std::vector<InjectionTarget> expand_targets(const std::vector<AttributeTargets>& targets) {
  std::vector<InjectionTarget> out;
  for (const auto& t : targets) {
    for (std::size_t g = 0; g < t.count; ++g) out.push_back({t.kind, t.attribute_index, g});
  }
  return out;
}

/// Draws the candidate pairs for `z`. With no injectable Matched feature there
/// is a single exact candidate. Otherwise L is the largest capped target count
/// among the Matched features; when every combination fits within L they are
/// all enumerated, else L combinations are sampled.
inline TranslationProposal propose_translation(const InterpretableSpace& space, const PerturbationVector& z,
                                               const TranslateOptions& opts, Rng& rng) {
  TranslationProposal prop;
  RecordPair base = apply_removals(space, z);
  const bool matched_schema = schemas_matched(space.pair, opts.schema);

  std::vector<std::size_t> injectable;
  std::vector<std::vector<AttributeTargets>> targets;
  std::vector<InjectionChoice> untargetable;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] != FeatureState::kMatched) continue;
    const auto& f = space.features[i];
    auto t = legal_targets(feature_kind(space, i), base.side(other_side(f.side)));
    if (t.empty()) {
      untargetable.push_back({i, std::nullopt});
    } else {
      injectable.push_back(i);
      targets.push_back(std::move(t));
    }
  }
  if (injectable.empty()) {
    prop.combinations.push_back(std::move(untargetable));
    prop.candidates.push_back(std::move(base));
    return prop;
  }

  std::size_t L = 0;
  std::size_t total = 1;
  for (const auto& t : targets) {
    L = std::max(L, count_injection_targets(t));
    std::size_t raw = 0;
    for (const auto& a : t) raw += a.count;
    total = total > std::numeric_limits<std::size_t>::max() / raw ? std::numeric_limits<std::size_t>::max()
                                                                  : total * raw;
  }

  if (total <= L) {
    std::vector<std::vector<InjectionTarget>> options;
    for (const auto& t : targets) options.push_back(expand_targets(t));
    prop.combinations = enumerate_combinations(injectable, options);
    prop.exhaustive = true;
  } else {
    for (std::size_t l = 0; l < L; ++l) {
      std::vector<InjectionChoice> combo;
      for (std::size_t k = 0; k < injectable.size(); ++k) {
        const auto& f = space.features[injectable[k]];
        const Record& other = base.side(other_side(f.side));
        const std::string& source_name = space.pair.side(f.side)[f.attribute_index].name;
        const bool boost = matched_schema && f.location == TokenLocation::kValue;
        combo.push_back({injectable[k], sample_injection_target(targets[k], source_name, other, boost, rng)});
      }
      prop.combinations.push_back(std::move(combo));
    }
  }
  for (auto& combo : prop.combinations) {
    prop.candidates.push_back(apply_injections(space, base, combo));
    combo.insert(combo.end(), untargetable.begin(), untargetable.end());
    std::sort(combo.begin(), combo.end(),
              [](const InjectionChoice& x, const InjectionChoice& y) { return x.feature < y.feature; });
  }
  prop.sample_count = prop.candidates.size();
  return prop;
}

/// Keeps the best-scoring candidate (first on ties).
inline Translation resolve_translation(TranslationProposal&& prop, std::span<const double> scores) {
  Translation t;
  t.plan.sample_count = prop.sample_count;
  t.plan.exhaustive = prop.exhaustive;
  std::size_t best = 0;
  if (prop.needs_scores()) {
    for (std::size_t i = 1; i < scores.size(); ++i) {
      if (scores[i] > scores[best]) best = i;
    }
    t.plan.score = scores[best];
  }
  t.plan.choices = std::move(prop.combinations[best]);
  t.pair = std::move(prop.candidates[best]);
  return t;
}

/// t_x: maps a perturbation vector to a record pair, consulting the matcher
/// only when there is something to inject.
inline Translation translate(const InterpretableSpace& space, const PerturbationVector& z, const Matcher& matcher,
                             const TranslateOptions& opts, Rng& rng) {
  auto prop = propose_translation(space, z, opts, rng);
  std::vector<double> scores;
  if (prop.needs_scores()) scores = predict_chunked(matcher, prop.candidates, opts.batch_size);
  return resolve_translation(std::move(prop), scores);
}

}  // namespace emx
