#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "emx/error.hpp"
#include "emx/injection.hpp"
#include "emx/interpretable.hpp"
#include "emx/matcher.hpp"
#include "emx/rng.hpp"
#include "emx/surrogate.hpp"

namespace emx {

struct ExplainerConfig {
  std::size_t K = 5;
  double epsilon = 0.1;
  std::size_t s_min = 500;
  std::size_t s_max = 3000;
  /// Fixed |Z_x| for every granularity (sample-size sweeps).
  std::optional<std::size_t> sample_size;
  Mode mode = Mode::kLemon;
  /// Ablation: one joint explanation over both records with K doubled.
  bool disable_dual = false;
  /// Ablation: sample {P, A} only, no attribution potential.
  bool disable_potential = false;
  /// Ablation: skip the granularity search and use this granularity.
  std::optional<std::size_t> fixed_granularity;
  bool include_name_features = false;
  SchemaMatching schema = SchemaMatching::kAuto;
  /// Regress y - f(x). false = plain no-intercept regression on y.
  bool anchored_intercept = true;
  /// Evaluate the actual counterfactual strength with the literal
  /// f(x) -/+ f(t_x(x'_g)) algebra instead of the threshold-crossing form.
  bool literal_cfs = false;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;

  Mode effective_mode() const { return disable_potential ? Mode::kLime : mode; }
  std::size_t effective_k() const { return disable_dual ? 2 * K : K; }

  void validate() const {
    if (K < 1) throw ConfigError("K must be >= 1");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
    if (s_min < 1 || s_max < s_min) throw ConfigError("need 1 <= S_min <= S_max");
    if (sample_size && *sample_size < 1) throw ConfigError("sample size must be >= 1");
    if (fixed_granularity && *fixed_granularity < 1) throw ConfigError("granularity must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  }

  SamplingOptions sampling() const {
    SamplingOptions o;
    o.s_min = s_min;
    o.s_max = s_max;
    o.fixed_size = sample_size;
    o.translate = translate();
    return o;
  }

  TranslateOptions translate() const { return {schema, batch_size}; }

  FitOptions fit() const {
    FitOptions f;
    f.anchored = anchored_intercept;
    return f;
  }
};

struct ExplanationEntry {
  std::size_t feature = 0;
  InterpretableFeature spec;
  /// Name of the attribute holding the feature; empty for a whole record.
  std::string attribute;
  std::string text;
  double w = 0.0;
  double p = 0.0;
};

/// The greedy counterfactual strategy an explanation implies.
struct CounterfactualReport {
  /// True when f(x) > p: the strategy removes DEC features to go down.
  bool match_side = true;
  /// DEC (match side) or INC (non-match side): entry indices, descending.
  std::vector<std::size_t> order;
  std::vector<double> magnitudes;
  /// Predicted strength after k steps, k = 0..|order|.
  std::vector<double> cfs_by_k;
  std::size_t k_g = 0;
  PerturbationVector greedy;
  double realized_score = 0.0;
  InjectionPlan plan;
};

struct GranularityTrial {
  std::size_t granularity = 1;
  double cfs_hat = 0.0;
  double cfs_actual = 0.0;
};

struct Explanation {
  std::string pair_id;
  Side side = Side::kA;
  Mode mode = Mode::kLemon;
  std::size_t granularity = 1;
  bool include_names = false;
  std::vector<ExplanationEntry> entries;
  double score = 0.0;
  double threshold = 0.5;
  double cfs_hat = 0.0;
  double cfs_actual = 0.0;
  std::size_t k_g = 0;
  std::uint64_t seed = 0;
  std::size_t d_x = 0;
  std::size_t sample_size = 0;
  std::size_t d_max = 0;
  bool degenerate = false;
  CounterfactualReport counterfactual;
  std::vector<GranularityTrial> trials;
};

/// Either two one-sided explanations {a, b} or a single joint one.
struct DualExplanation {
  std::string pair_id;
  std::vector<Explanation> parts;

  bool joint() const { return parts.size() == 1; }
  const Explanation& for_a() const { return parts.at(0); }
  const Explanation& for_b() const { return parts.at(1); }
};

// ---------------------------------------------------------------------------
// Counterfactual strength

/// DEC: entries with positive w, by w descending.
inline std::vector<std::size_t> dec_order(const std::vector<ExplanationEntry>& e) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (e[i].w > 0.0) idx.push_back(i);
  }
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return e[x].w > e[y].w; });
  return idx;
}

inline double inc_magnitude(const ExplanationEntry& e) { return std::max(-e.w, e.p); }

/// INC: entries with positive max(-w, p), descending.
inline std::vector<std::size_t> inc_order(const std::vector<ExplanationEntry>& e) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (inc_magnitude(e[i]) > 0.0) idx.push_back(i);
  }
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t x, std::size_t y) { return inc_magnitude(e[x]) > inc_magnitude(e[y]); });
  return idx;
}

/// Predicted strength after k greedy steps: p - [f(x) - sum DEC_1..k] when
/// f(x) > p, else [f(x) + sum INC_1..k] - p. `magnitudes` is DEC or INC.
inline double predicted_cfs(double f_x, double threshold, const std::vector<double>& magnitudes, std::size_t k) {
  if (k > magnitudes.size()) throw ConfigError("predicted_cfs: k exceeds the greedy list");
  double sum = 0.0;
  for (std::size_t s = 0; s < k; ++s) sum += magnitudes[s];
  if (f_x > threshold) return threshold - (f_x - sum);
  return (f_x + sum) - threshold;
}

/// Smallest k with predicted_cfs >= epsilon, else the full list length.
inline std::size_t greedy_k(double f_x, double threshold, const std::vector<double>& magnitudes, double epsilon) {
  for (std::size_t k = 0; k <= magnitudes.size(); ++k) {
    if (predicted_cfs(f_x, threshold, magnitudes, k) >= epsilon) return k;
  }
  return magnitudes.size();
}

/// First k_g features of the greedy list set to A (removal) or, on the
/// non-match side when injection is predicted to gain more, M.
inline PerturbationVector greedy_vector(std::size_t d_x, const std::vector<ExplanationEntry>& entries,
                                        const CounterfactualReport& r) {
  PerturbationVector z(d_x, FeatureState::kPresent);
  for (std::size_t s = 0; s < r.k_g; ++s) {
    const auto& e = entries[r.order[s]];
    if (r.match_side || -e.w > e.p) {
      z[e.feature] = FeatureState::kAbsent;
    } else {
      z[e.feature] = FeatureState::kMatched;
    }
  }
  return z;
}

/// Actual strength from the realized score of the greedy perturbation.
/// Threshold-crossing form: p - f(z) on the match side, f(z) - p otherwise;
/// positive iff the prediction flipped. `literal` selects
/// p - [f(x) - f(z)] and [f(x) + f(z)] - p.
inline double actual_cfs(double f_x, double threshold, double realized, bool literal = false) {
  const bool match_side = f_x > threshold;
  if (literal) return match_side ? threshold - (f_x - realized) : (f_x + realized) - threshold;
  return match_side ? threshold - realized : realized - threshold;
}

/// Fills INC/DEC, k_g and the per-k predictions of `e`, and the greedy vector.
inline CounterfactualReport plan_counterfactual(const Explanation& e, double epsilon) {
  CounterfactualReport r;
  r.match_side = e.score > e.threshold;
  r.order = r.match_side ? dec_order(e.entries) : inc_order(e.entries);
  for (std::size_t i : r.order) r.magnitudes.push_back(r.match_side ? e.entries[i].w : inc_magnitude(e.entries[i]));
  for (std::size_t k = 0; k <= r.magnitudes.size(); ++k) {
    r.cfs_by_k.push_back(predicted_cfs(e.score, e.threshold, r.magnitudes, k));
  }
  r.k_g = greedy_k(e.score, e.threshold, r.magnitudes, epsilon);
  r.greedy = greedy_vector(e.d_x, e.entries, r);
  return r;
}

inline double predicted_cfs(const Explanation& e, std::size_t k) {
  return predicted_cfs(e.score, e.threshold, e.counterfactual.magnitudes, k);
}

/// Re-executes the greedy strategy of `e` on `pair` with a fresh injection
/// draw and returns the realized score and translation.
inline Translation execute_greedy(const Explanation& e, const RecordPair& pair, const Matcher& matcher,
                                  const TranslateOptions& opts, Rng& rng, double* realized) {
  auto space = build_space(pair, e.side, e.granularity, e.include_names);
  auto t = translate(space, e.counterfactual.greedy, matcher, opts, rng);
  *realized = t.plan.score ? *t.plan.score : score_one(matcher, t.pair);
  return t;
}

// ---------------------------------------------------------------------------
// Explaining

inline std::uint64_t granularity_seed(std::uint64_t seed, const std::string& pair_id, Side side, std::size_t n) {
  return derive_seed(seed, pair_id, side_name(side), n);
}

/// One surrogate fit at granularity n, with its counterfactual evaluation.
inline Explanation explain_at_granularity(const Matcher& matcher, const RecordPair& pair, Side side, std::size_t n,
                                          double f_x, const ExplainerConfig& cfg) {
  const Mode mode = cfg.effective_mode();
  const std::uint64_t stream = granularity_seed(cfg.seed, pair.pair_id, side, n);
  Rng sample_rng(derive_seed(stream, "neighborhood"));
  Rng greedy_rng(derive_seed(stream, "greedy"));

  auto space = build_space(pair, side, n, cfg.include_name_features);
  auto sample = sample_neighborhood(space, mode, matcher, cfg.sampling(), sample_rng);
  auto fit = fit_surrogate(sample, cfg.effective_k(), f_x, cfg.fit());

  Explanation e;
  e.pair_id = pair.pair_id;
  e.side = side;
  e.mode = mode;
  e.granularity = n;
  e.include_names = cfg.include_name_features;
  e.score = f_x;
  e.threshold = matcher.threshold();
  e.seed = cfg.seed;
  e.d_x = space.dimension();
  e.sample_size = sample.entries.size();
  e.d_max = sample.d_max;
  e.degenerate = fit.degenerate;
  for (const auto& a : attributions(fit)) {
    const auto& f = space.features[a.feature];
    std::string attr = f.whole_record ? std::string() : pair.side(f.side)[f.attribute_index].name;
    e.entries.push_back({a.feature, f, std::move(attr), space.feature_text(a.feature), a.w, a.p});
  }
  e.counterfactual = plan_counterfactual(e, cfg.epsilon);
  e.k_g = e.counterfactual.k_g;
  e.cfs_hat = e.counterfactual.cfs_by_k[e.k_g];

  auto t = translate(space, e.counterfactual.greedy, matcher, cfg.translate(), greedy_rng);
  e.counterfactual.realized_score = t.plan.score ? *t.plan.score : score_one(matcher, t.pair);
  e.counterfactual.plan = std::move(t.plan);
  e.cfs_actual = actual_cfs(f_x, e.threshold, e.counterfactual.realized_score, cfg.literal_cfs);
  return e;
}

/// Ranking value for the fallback choice: cfs_hat * cfs / (cfs_hat + cfs)
/// when both are positive, -inf otherwise.
inline double cfs_harmonic(double cfs_hat, double cfs) {
  if (!(cfs_hat > 0.0 && cfs > 0.0)) return -std::numeric_limits<double>::infinity();
  return cfs_hat * cfs / (cfs_hat + cfs);
}

/// Granularities tried for a record with N tokens: 1, 2, 4, ... while n < 2N.
inline std::vector<std::size_t> granularity_schedule(std::size_t N) {
  std::vector<std::size_t> out;
  for (std::size_t n = 1; n < 2 * N; n *= 2) out.push_back(n);
  return out;
}

/// Explains `side` of the pair (kJoint for both at once). Doubles the
/// granularity until both predicted and actual strength reach epsilon;
/// otherwise returns the trial with the best harmonic value, smallest n on
/// ties.
inline Explanation explain_side(const Matcher& matcher, const RecordPair& pair, Side side, double f_x,
                                const ExplainerConfig& cfg) {
  std::vector<std::size_t> schedule;
  if (cfg.fixed_granularity) {
    schedule = {*cfg.fixed_granularity};
  } else {
    std::size_t N = side == Side::kJoint ? std::max(max_tokens_N(pair.a), max_tokens_N(pair.b))
                                         : max_tokens_N(pair.side(side));
    schedule = granularity_schedule(N);
  }
  std::optional<Explanation> best;
  double best_h = -std::numeric_limits<double>::infinity();
  std::vector<GranularityTrial> trials;
  for (std::size_t n : schedule) {
    Explanation e;
    try {
      e = explain_at_granularity(matcher, pair, side, n, f_x, cfg);
    } catch (const MatcherError& err) {
      throw err.at_stage("side " + std::string(side_name(side)) + ", granularity " + std::to_string(n));
    }
    trials.push_back({n, e.cfs_hat, e.cfs_actual});
    if (e.cfs_hat >= cfg.epsilon && e.cfs_actual >= cfg.epsilon) {
      e.trials = std::move(trials);
      return e;
    }
    const double h = cfs_harmonic(e.cfs_hat, e.cfs_actual);
    if (!best || h > best_h) {
      best_h = h;
      best = std::move(e);
    }
  }
  best->trials = std::move(trials);
  return std::move(*best);
}

/// Dual explanations (a against b, b against a), or one joint explanation
/// when dual explanations are disabled.
inline DualExplanation explain(const Matcher& matcher, const RecordPair& pair, const ExplainerConfig& cfg) {
  cfg.validate();
  pair.validate();
  const double f_x = score_one(matcher, pair);
  DualExplanation d;
  d.pair_id = pair.pair_id;
  if (cfg.disable_dual) {
    d.parts.push_back(explain_side(matcher, pair, Side::kJoint, f_x, cfg));
  } else {
    d.parts.push_back(explain_side(matcher, pair, Side::kA, f_x, cfg));
    d.parts.push_back(explain_side(matcher, pair, Side::kB, f_x, cfg));
  }
  return d;
}

// ---------------------------------------------------------------------------
// LIME baseline: token-level {P, A} representation, one sparse surrogate.

struct LimeConfig {
  std::size_t K = 5;
  double epsilon = 0.1;
  std::size_t s_min = 500;
  std::size_t s_max = 3000;
  std::optional<std::size_t> sample_size;
  /// One explanation per record (as in the comparisons) instead of one over
  /// both records.
  bool dual = true;
  bool include_name_features = false;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;

  /// The equivalent explainer configuration, K taken as-is for each side.
  ExplainerConfig as_explainer_config() const {
    ExplainerConfig c;
    c.K = K;
    c.epsilon = epsilon;
    c.s_min = s_min;
    c.s_max = s_max;
    c.sample_size = sample_size;
    c.mode = Mode::kLime;
    c.disable_potential = true;
    c.fixed_granularity = 1;
    c.include_name_features = include_name_features;
    c.batch_size = batch_size;
    c.seed = seed;
    return c;
  }
};

inline DualExplanation explain_lime(const Matcher& matcher, const RecordPair& pair, const LimeConfig& lime) {
  pair.validate();
  ExplainerConfig cfg = lime.as_explainer_config();
  cfg.validate();
  const double f_x = score_one(matcher, pair);
  DualExplanation d;
  d.pair_id = pair.pair_id;
  const std::vector<Side> sides = lime.dual ? std::vector<Side>{Side::kA, Side::kB} : std::vector<Side>{Side::kJoint};
  for (Side s : sides) {
    Explanation e = explain_at_granularity(matcher, pair, s, 1, f_x, cfg);
    e.trials = {{1, e.cfs_hat, e.cfs_actual}};
    d.parts.push_back(std::move(e));
  }
  return d;
}

}  // namespace emx
