#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "emx/dataset.hpp"
#include "emx/error.hpp"
#include "emx/explainer.hpp"
#include "emx/matcher.hpp"
#include "emx/parallel.hpp"
#include "emx/rng.hpp"

namespace emx {

/// Produces a dual explanation of a pair under a global seed.
using Explainer = std::function<DualExplanation(const Matcher&, const RecordPair&, std::uint64_t seed)>;

/// LEMON (with whatever ablations `cfg` selects) or the LIME baseline.
struct ExplainerSpec {
  bool lime = false;
  ExplainerConfig config;

  std::string name() const {
    if (lime) return "lime";
    if (config.disable_dual) return "lemon-no-dual";
    if (config.disable_potential) return "lemon-no-potential";
    if (config.fixed_granularity) return "lemon-granularity-" + std::to_string(*config.fixed_granularity);
    return "lemon";
  }

  LimeConfig lime_config() const {
    LimeConfig l;
    l.K = config.K;
    l.epsilon = config.epsilon;
    l.s_min = config.s_min;
    l.s_max = config.s_max;
    l.sample_size = config.sample_size;
    l.include_name_features = config.include_name_features;
    l.batch_size = config.batch_size;
    l.seed = config.seed;
    return l;
  }

  Explainer explainer() const {
    return [spec = *this](const Matcher& m, const RecordPair& p, std::uint64_t seed) {
      ExplainerSpec s = spec;
      s.config.seed = seed;
      return s.lime ? explain_lime(m, p, s.lime_config()) : explain(m, p, s.config);
    };
  }
};

struct EvalOptions {
  std::uint64_t seed = 0;
  double epsilon = 0.1;
  std::size_t workers = 1;
  TranslateOptions translate;
};

// ---------------------------------------------------------------------------
// Pair selection

/// Pairs of `split` whose predicted label is `predicted`, at most `n` of
/// them drawn uniformly with `seed` (all of them when fewer exist), in split
/// order.
inline std::vector<RecordPair> select_pairs(const Dataset& ds, const std::string& split, const Matcher& matcher,
                                            Label predicted, std::size_t n, std::uint64_t seed,
                                            std::size_t batch_size = 64) {
  const auto& rows = ds.split(split);
  std::vector<RecordPair> all;
  all.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) all.push_back(ds.pair(split, i));
  auto scores = predict_chunked(matcher, all, batch_size);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < all.size(); ++i) {
    bool match = predicts_match(scores[i], matcher.threshold());
    if (match == (predicted == Label::kMatch)) keep.push_back(i);
  }
  if (keep.size() > n) {
    Rng rng(derive_seed(seed, "select", split, static_cast<int>(predicted)));
    keep = rng.choose(std::move(keep), n);
    std::sort(keep.begin(), keep.end());
  }
  std::vector<RecordPair> out;
  for (std::size_t i : keep) out.push_back(std::move(all[i]));
  return out;
}

// ---------------------------------------------------------------------------
// Counterfactual recall / precision / F1

/// The explanation a simulated user follows: among parts with cfs_hat >= eps
/// the lowest k_g (ties: higher cfs_hat, then side a); if none qualifies,
/// the highest cfs_hat.
inline const Explanation& greedy_pick(const DualExplanation& dual, double epsilon = 0.1) {
  if (dual.parts.empty()) throw ConfigError("greedy_pick: empty dual explanation");
  const Explanation* best = nullptr;
  for (const auto& e : dual.parts) {
    if (e.cfs_hat < epsilon) continue;
    if (!best || e.k_g < best->k_g || (e.k_g == best->k_g && e.cfs_hat > best->cfs_hat)) best = &e;
  }
  if (best) return *best;
  best = &dual.parts.front();
  for (const auto& e : dual.parts) {
    if (e.cfs_hat > best->cfs_hat) best = &e;
  }
  return *best;
}

inline double max_cfs_hat(const DualExplanation& dual) {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& e : dual.parts) m = std::max(m, e.cfs_hat);
  return m;
}

struct CounterfactualOutcome {
  std::string pair_id;
  bool recalled = false;
  std::optional<Side> picked;
  /// Score after re-running the picked greedy strategy (recalled pairs only).
  std::optional<double> realized;
  bool successful = false;
};

struct CounterfactualMetrics {
  std::size_t pairs = 0;
  std::size_t recalled = 0;
  std::size_t successful = 0;
  /// Undefined when there are no pairs (CR) or no recalled pairs (CP).
  std::optional<double> CR;
  std::optional<double> CP;
  std::optional<double> CF1;
  std::vector<CounterfactualOutcome> outcomes;
};

inline double harmonic_f1(double r, double p) { return r + p > 0.0 ? 2.0 * r * p / (r + p) : 0.0; }

inline CounterfactualMetrics summarize(std::vector<CounterfactualOutcome> outcomes) {
  CounterfactualMetrics m;
  m.pairs = outcomes.size();
  for (const auto& o : outcomes) {
    m.recalled += o.recalled ? 1 : 0;
    m.successful += o.successful ? 1 : 0;
  }
  if (m.pairs > 0) {
    m.CR = static_cast<double>(m.recalled) / static_cast<double>(m.pairs);
    if (m.recalled > 0) m.CP = static_cast<double>(m.successful) / static_cast<double>(m.recalled);
    m.CF1 = m.CP ? harmonic_f1(*m.CR, *m.CP) : 0.0;
  }
  m.outcomes = std::move(outcomes);
  return m;
}

/// Checks one explained pair: recalled if some side predicts a flip, and
/// successful if re-running the picked greedy strategy (fresh injection
/// draw) actually crosses the threshold.
inline CounterfactualOutcome counterfactual_outcome(const DualExplanation& dual, const RecordPair& pair,
                                                    const Matcher& matcher, const EvalOptions& opts) {
  CounterfactualOutcome o;
  o.pair_id = pair.pair_id;
  o.recalled = max_cfs_hat(dual) >= opts.epsilon;
  if (!o.recalled) return o;
  const Explanation& g = greedy_pick(dual, opts.epsilon);
  o.picked = g.side;
  Rng rng(derive_seed(opts.seed, pair.pair_id, side_name(g.side), "precision"));
  double realized = 0.0;
  execute_greedy(g, pair, matcher, opts.translate, rng, &realized);
  o.realized = realized;
  o.successful = actual_cfs(g.score, g.threshold, realized) > 0.0;
  return o;
}

inline CounterfactualMetrics counterfactual_metrics(const std::vector<DualExplanation>& duals,
                                                    const std::vector<RecordPair>& pairs, const Matcher& matcher,
                                                    const EvalOptions& opts) {
  if (duals.size() != pairs.size()) throw ConfigError("counterfactual_metrics: explanation/pair count mismatch");
  return summarize(parallel_map(pairs.size(), opts.workers, [&](std::size_t i) {
    return counterfactual_outcome(duals[i], pairs[i], matcher, opts);
  }));
}

/// Explains every pair in parallel (per-pair seeds are derived inside).
inline std::vector<DualExplanation> explain_all(const Explainer& explainer, const Matcher& matcher,
                                                const std::vector<RecordPair>& pairs, std::uint64_t seed,
                                                std::size_t workers) {
  return parallel_map(pairs.size(), workers, [&](std::size_t i) { return explainer(matcher, pairs[i], seed); });
}

inline CounterfactualMetrics counterfactual_metrics(const Explainer& explainer, const Matcher& matcher,
                                                    const std::vector<RecordPair>& pairs, const EvalOptions& opts) {
  auto duals = explain_all(explainer, matcher, pairs, opts.seed, opts.workers);
  return counterfactual_metrics(duals, pairs, matcher, opts);
}

// ---------------------------------------------------------------------------
// Perturbation error

struct PerturbationExperiment {
  std::string pair_id;
  Side side = Side::kA;
  /// Perturbed interpretable features and their states.
  std::vector<std::size_t> features;
  std::vector<FeatureState> states;
  /// Expected score changes: -w for removal, +p for injection.
  std::vector<double> deltas;
  double predicted = 0.0;
  double realized = 0.0;
};

struct PerturbationErrorReport {
  std::size_t experiments = 0;
  /// Explanations without any selected feature.
  std::size_t skipped = 0;
  std::optional<double> MAE;
  std::optional<double> PE;
  std::vector<PerturbationExperiment> records;
};

/// MAE = mean |realized - predicted|; PE = MAE / mean sum |delta|.
inline PerturbationErrorReport summarize(std::vector<PerturbationExperiment> records, std::size_t skipped) {
  PerturbationErrorReport r;
  r.experiments = records.size();
  r.skipped = skipped;
  if (!records.empty()) {
    double err = 0.0, mag = 0.0;
    for (const auto& x : records) {
      err += std::abs(x.realized - x.predicted);
      for (double d : x.deltas) mag += std::abs(d);
    }
    const double L = static_cast<double>(records.size());
    r.MAE = err / L;
    if (mag > 0.0) r.PE = (err / L) / (mag / L);
  }
  r.records = std::move(records);
  return r;
}

/// For c = 1, 2, 3 picks c distinct selected features of one explanation,
/// removes each (LEMON: or injects it, by a fair coin) and compares the
/// realized score with f(x) + sum of expected changes.
inline std::vector<PerturbationExperiment> perturbation_experiments(const Explanation& e, const RecordPair& pair,
                                                                    const Matcher& matcher, const EvalOptions& opts) {
  std::vector<PerturbationExperiment> out;
  if (e.entries.empty()) return out;
  auto space = build_space(pair, e.side, e.granularity, e.include_names);
  Rng rng(derive_seed(opts.seed, pair.pair_id, side_name(e.side), "perturbation"));
  for (std::size_t c = 1; c <= 3 && c <= e.entries.size(); ++c) {
    std::vector<std::size_t> pool(e.entries.size());
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    auto chosen = rng.choose(std::move(pool), c);
    PerturbationExperiment x;
    x.pair_id = pair.pair_id;
    x.side = e.side;
    PerturbationVector z = space.all_present();
    double sum = 0.0;
    for (std::size_t k : chosen) {
      const auto& entry = e.entries[k];
      bool inject = e.mode == Mode::kLemon && rng.coin(0.5);
      FeatureState s = inject ? FeatureState::kMatched : FeatureState::kAbsent;
      double d = inject ? entry.p : -entry.w;
      z[entry.feature] = s;
      x.features.push_back(entry.feature);
      x.states.push_back(s);
      x.deltas.push_back(d);
      sum += d;
    }
    x.predicted = e.score + sum;
    auto t = translate(space, z, matcher, opts.translate, rng);
    x.realized = t.plan.score ? *t.plan.score : score_one(matcher, t.pair);
    out.push_back(std::move(x));
  }
  return out;
}

inline PerturbationErrorReport perturbation_error(const std::vector<DualExplanation>& duals,
                                                  const std::vector<RecordPair>& pairs, const Matcher& matcher,
                                                  const EvalOptions& opts) {
  if (duals.size() != pairs.size()) throw ConfigError("perturbation_error: explanation/pair count mismatch");
  struct PerPair {
    std::vector<PerturbationExperiment> records;
    std::size_t skipped = 0;
  };
  auto per = parallel_map(pairs.size(), opts.workers, [&](std::size_t i) {
    PerPair r;
    for (const auto& e : duals[i].parts) {
      if (e.entries.empty()) {
        ++r.skipped;
        continue;
      }
      auto xs = perturbation_experiments(e, pairs[i], matcher, opts);
      r.records.insert(r.records.end(), std::make_move_iterator(xs.begin()), std::make_move_iterator(xs.end()));
    }
    return r;
  });
  std::vector<PerturbationExperiment> all;
  std::size_t skipped = 0;
  for (auto& p : per) {
    skipped += p.skipped;
    all.insert(all.end(), std::make_move_iterator(p.records.begin()), std::make_move_iterator(p.records.end()));
  }
  return summarize(std::move(all), skipped);
}

inline PerturbationErrorReport perturbation_error(const Explainer& explainer, const Matcher& matcher,
                                                  const std::vector<RecordPair>& pairs, const EvalOptions& opts) {
  auto duals = explain_all(explainer, matcher, pairs, opts.seed, opts.workers);
  return perturbation_error(duals, pairs, matcher, opts);
}

// ---------------------------------------------------------------------------
// Stability

/// r ∩ q = H(rq) min(|r|, |q|).
inline double signed_overlap(double r, double q) { return r * q > 0.0 ? std::min(std::abs(r), std::abs(q)) : 0.0; }

/// Single-token key: side, location, attribute, token position.
using TokenKey = std::tuple<int, int, std::size_t, std::size_t>;

/// Spreads each entry's (w, p) evenly over the tokens it covers.
inline std::map<TokenKey, std::pair<double, double>> token_attributions(const Explanation& e) {
  std::map<TokenKey, std::pair<double, double>> out;
  for (const auto& entry : e.entries) {
    const auto& f = entry.spec;
    const std::size_t len = std::max<std::size_t>(f.length, 1);
    const double n = static_cast<double>(len);
    for (std::size_t t = 0; t < len; ++t) {
      TokenKey k{static_cast<int>(f.side), f.whole_record ? -1 : static_cast<int>(f.location), f.attribute_index,
                 f.start + t};
      auto& v = out[k];
      v.first += entry.w / n;
      v.second += entry.p / n;
    }
  }
  return out;
}

/// Weighted Jaccard similarity of two explanations of the same pair. Shared
/// features contribute overlap / max magnitudes; features of only one
/// explanation add |w| + |p| to the union. Two empty explanations are
/// identical (1).
inline double explanation_similarity(const Explanation& e1, const Explanation& e2, bool normalize = true) {
  std::map<TokenKey, std::pair<double, double>> m1, m2;
  if (normalize) {
    m1 = token_attributions(e1);
    m2 = token_attributions(e2);
  } else {
    for (const auto* src : {&e1, &e2}) {
      auto& m = src == &e1 ? m1 : m2;
      for (const auto& entry : src->entries) {
        m[{static_cast<int>(entry.spec.side), static_cast<int>(entry.spec.location), entry.spec.attribute_index,
           entry.spec.start}] = {entry.w, entry.p};
      }
    }
  }
  double inter = 0.0, uni = 0.0;
  for (const auto& [k, a] : m1) {
    auto it = m2.find(k);
    if (it == m2.end()) {
      uni += std::abs(a.first) + std::abs(a.second);
      continue;
    }
    const auto& b = it->second;
    inter += signed_overlap(a.first, b.first) + signed_overlap(a.second, b.second);
    uni += std::max(std::abs(a.first), std::abs(b.first)) + std::max(std::abs(a.second), std::abs(b.second));
  }
  for (const auto& [k, b] : m2) {
    if (!m1.count(k)) uni += std::abs(b.first) + std::abs(b.second);
  }
  if (uni == 0.0) return 1.0;
  return inter / uni;
}

/// Same-side similarities averaged over the parts of two dual explanations.
inline double dual_similarity(const DualExplanation& d1, const DualExplanation& d2) {
  if (d1.parts.size() != d2.parts.size()) throw ConfigError("dual_similarity: explanations have different shapes");
  double s = 0.0;
  for (std::size_t i = 0; i < d1.parts.size(); ++i) s += explanation_similarity(d1.parts[i], d2.parts[i]);
  return s / static_cast<double>(d1.parts.size());
}

struct StabilityReport {
  std::optional<double> mean;
  std::vector<std::string> pair_ids;
  std::vector<double> similarities;
};

/// Mean over pairs of the similarity between explanations made under
/// different seeds, averaged over all seed pairs.
inline StabilityReport stability(const Explainer& explainer, const Matcher& matcher,
                                 const std::vector<RecordPair>& pairs, const std::vector<std::uint64_t>& seeds,
                                 std::size_t workers = 1) {
  if (seeds.size() < 2) throw ConfigError("stability needs at least two seeds");
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    for (std::size_t j = i + 1; j < seeds.size(); ++j) {
      if (seeds[i] == seeds[j]) throw ConfigError("stability needs distinct seeds");
    }
  }
  StabilityReport r;
  r.similarities = parallel_map(pairs.size(), workers, [&](std::size_t p) {
    std::vector<DualExplanation> d;
    for (auto s : seeds) d.push_back(explainer(matcher, pairs[p], s));
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      for (std::size_t j = i + 1; j < d.size(); ++j, ++count) sum += dual_similarity(d[i], d[j]);
    }
    return sum / static_cast<double>(count);
  });
  for (const auto& p : pairs) r.pair_ids.push_back(p.pair_id);
  if (!r.similarities.empty()) {
    double s = 0.0;
    for (double v : r.similarities) s += v;
    r.mean = s / static_cast<double>(r.similarities.size());
  }
  return r;
}

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepAxis { kSampleSize, kK, kRuntime };

inline const char* axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::kSampleSize: return "sample_size";
    case SweepAxis::kK: return "K";
    case SweepAxis::kRuntime: return "runtime";
  }
  return "?";
}

struct SweepOptions {
  SweepAxis axis = SweepAxis::kSampleSize;
  std::vector<std::size_t> values;
  /// Stability needs two or more; CF1 and PE use the first.
  std::vector<std::uint64_t> seeds{1, 2};
  bool cf1 = true;
  bool pe = true;
  bool stability = true;
  EvalOptions eval;
};

struct SweepRow {
  std::size_t value = 0;
  std::optional<double> cf1;
  std::optional<double> pe;
  std::optional<double> stability;
  /// Median wall-clock seconds per explanation (runtime axis only).
  std::optional<double> median_seconds;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// Evaluates `base` at each axis value: sample_size fixes |Z_x|, K sets the
/// number of features, runtime fixes |Z_x| and only times explanations on a
/// single thread.
inline std::vector<SweepRow> sweep(const ExplainerSpec& base, const Matcher& matcher,
                                   const std::vector<RecordPair>& pairs, const SweepOptions& opts) {
  if (opts.values.empty()) throw ConfigError("sweep needs at least one axis value");
  if (opts.seeds.empty()) throw ConfigError("sweep needs a seed");
  std::vector<SweepRow> rows;
  for (std::size_t v : opts.values) {
    ExplainerSpec spec = base;
    if (opts.axis == SweepAxis::kK) {
      spec.config.K = v;
    } else {
      spec.config.sample_size = v;
    }
    Explainer ex = spec.explainer();
    SweepRow row;
    row.value = v;
    EvalOptions eval = opts.eval;
    eval.seed = opts.seeds.front();
    if (opts.axis == SweepAxis::kRuntime) {
      std::vector<double> seconds;
      for (const auto& p : pairs) {
        auto t0 = std::chrono::steady_clock::now();
        ex(matcher, p, eval.seed);
        seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      }
      row.median_seconds = median(std::move(seconds));
      rows.push_back(row);
      continue;
    }
    if (opts.cf1 || opts.pe) {
      auto duals = explain_all(ex, matcher, pairs, eval.seed, eval.workers);
      if (opts.cf1) row.cf1 = counterfactual_metrics(duals, pairs, matcher, eval).CF1;
      if (opts.pe) row.pe = perturbation_error(duals, pairs, matcher, eval).PE;
    }
    if (opts.stability && opts.seeds.size() >= 2) row.stability = stability(ex, matcher, pairs, opts.seeds, eval.workers).mean;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace emx
