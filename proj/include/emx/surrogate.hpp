#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "emx/error.hpp"
#include "emx/injection.hpp"
#include "emx/interpretable.hpp"
#include "emx/matcher.hpp"
#include "emx/rng.hpp"

namespace emx {

/// kLemon samples {P, A, M}; kLime samples {P, A} only.
enum class Mode { kLemon, kLime };

inline const char* mode_name(Mode m) { return m == Mode::kLemon ? "lemon" : "lime"; }

// ---------------------------------------------------------------------------
// Neighborhood

/// Neighborhood radius: max(5, floor(d_x / 5)).
inline std::size_t d_max_for(std::size_t d_x) { return std::max<std::size_t>(5, d_x / 5); }

/// Upper bound of the Matched-subset size: max(3, floor(d_x / 3)).
inline std::size_t max_matched_subset(std::size_t d_x) { return std::max<std::size_t>(3, d_x / 3); }

/// |Z_x| = max(S_min, min(30 d_x, S_max)).
inline std::size_t sample_size(std::size_t d_x, std::size_t s_min = 500, std::size_t s_max = 3000) {
  if (d_x < 1) throw ConfigError("sample_size: d_x must be >= 1");
  return std::max(s_min, std::min(30 * d_x, s_max));
}

/// Number of features not in state P.
inline std::size_t hamming_distance(const PerturbationVector& z) {
  return static_cast<std::size_t>(
      std::count_if(z.begin(), z.end(), [](FeatureState s) { return s != FeatureState::kPresent; }));
}

/// exp(-2 D / D_max).
inline double kernel_weight(std::size_t distance, std::size_t d_max) {
  return std::exp(-2.0 * static_cast<double>(distance) / static_cast<double>(d_max));
}

inline double kernel_weight(const PerturbationVector& z, std::size_t d_max) {
  return kernel_weight(hamming_distance(z), d_max);
}

/// One neighbor: an Absent subset of size uniform in [0, D_max] (capped at
/// d_x); in lemon mode also a Matched subset among the rest, of size 0 with
/// probability 0.5 and otherwise uniform in [0, max(3, d_x/3)].
inline PerturbationVector draw_perturbation(std::size_t d_x, Mode mode, std::size_t d_max, Rng& rng) {
  PerturbationVector z(d_x, FeatureState::kPresent);
  std::vector<std::size_t> all(d_x);
  for (std::size_t i = 0; i < d_x; ++i) all[i] = i;
  const std::size_t n_absent = rng.between(0, std::min(d_max, d_x));
  for (std::size_t i : rng.choose(all, n_absent)) z[i] = FeatureState::kAbsent;
  if (mode == Mode::kLemon) {
    std::size_t n_matched = 0;
    if (rng.coin(0.5)) n_matched = rng.between(0, max_matched_subset(d_x));
    if (n_matched > 0) {
      std::vector<std::size_t> rest;
      for (std::size_t i = 0; i < d_x; ++i) {
        if (z[i] == FeatureState::kPresent) rest.push_back(i);
      }
      for (std::size_t i : rng.choose(std::move(rest), n_matched)) z[i] = FeatureState::kMatched;
    }
  }
  return z;
}

struct NeighborhoodEntry {
  PerturbationVector z;
  double y = 0.0;
  double weight = 1.0;
};

struct NeighborhoodSample {
  Mode mode = Mode::kLemon;
  std::size_t d_max = 5;
  std::vector<NeighborhoodEntry> entries;
};

struct SamplingOptions {
  std::size_t s_min = 500;
  std::size_t s_max = 3000;
  /// Fixed |Z_x|, overriding the d_x rule.
  std::optional<std::size_t> fixed_size;
  TranslateOptions translate;
  /// Vectors whose candidates are pooled into one scoring pass.
  std::size_t block = 128;
};

/// Draws |Z_x| perturbations, translates each one (injection candidates
/// included) and scores everything through predict_batch in fixed-size
/// batches. y of a vector is the score of its chosen translation.
inline NeighborhoodSample sample_neighborhood(const InterpretableSpace& space, Mode mode, const Matcher& matcher,
                                              const SamplingOptions& opts, Rng& rng) {
  const std::size_t d_x = space.dimension();
  NeighborhoodSample sample;
  sample.mode = mode;
  sample.d_max = d_max_for(d_x);
  const std::size_t S = opts.fixed_size ? *opts.fixed_size : sample_size(d_x, opts.s_min, opts.s_max);
  sample.entries.reserve(S);

  for (std::size_t begin = 0; begin < S; begin += opts.block) {
    const std::size_t end = std::min(S, begin + opts.block);
    std::vector<PerturbationVector> zs;
    std::vector<std::size_t> offsets;
    std::vector<RecordPair> candidates;
    for (std::size_t i = begin; i < end; ++i) {
      auto z = draw_perturbation(d_x, mode, sample.d_max, rng);
      auto prop = propose_translation(space, z, opts.translate, rng);
      offsets.push_back(candidates.size());
      for (auto& c : prop.candidates) candidates.push_back(std::move(c));
      zs.push_back(std::move(z));
    }
    offsets.push_back(candidates.size());
    auto scores = predict_chunked(matcher, candidates, opts.translate.batch_size);
    for (std::size_t k = 0; k < zs.size(); ++k) {
      double y = scores[offsets[k]];
      for (std::size_t c = offsets[k] + 1; c < offsets[k + 1]; ++c) y = std::max(y, scores[c]);
      const double w = kernel_weight(zs[k], sample.d_max);
      sample.entries.push_back({std::move(zs[k]), y, w});
    }
  }
  return sample;
}

// ---------------------------------------------------------------------------
// Sparse weighted linear surrogate

struct FitOptions {
  double ridge = 1e-6;
  /// Regress y - f(x) (intercept pinned at f(x)). When false, regress y with
  /// no intercept at all.
  bool anchored = true;
  double min_improvement = 1e-12;
};

struct SurrogateFit {
  Mode mode = Mode::kLemon;
  /// Selected feature indices, in selection order.
  std::vector<std::size_t> selected;
  std::vector<double> beta_absent;
  std::vector<double> beta_matched;
  /// Weighted SSE after each selection step; sse_path[0] is the empty model.
  std::vector<double> sse_path;
  bool degenerate = false;

  double sse() const { return sse_path.empty() ? 0.0 : sse_path.back(); }
};

namespace detail {

/// Solves (G + ridge I) x = b for symmetric positive definite G by Cholesky.
inline std::vector<double> solve_spd(std::vector<double> g, std::vector<double> b, std::size_t n, double ridge) {
  for (std::size_t i = 0; i < n; ++i) g[i * n + i] += ridge;
  for (std::size_t j = 0; j < n; ++j) {
    double d = g[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= g[j * n + k] * g[j * n + k];
    if (d <= 0.0) d = std::numeric_limits<double>::min();
    const double ljj = std::sqrt(d);
    g[j * n + j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = g[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= g[i * n + k] * g[j * n + k];
      g[i * n + j] = s / ljj;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= g[i * n + k] * b[k];
    b[i] = s / g[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= g[k * n + i] * b[k];
    b[i] = s / g[i * n + i];
  }
  return b;
}

/// Weighted normal-equation statistics of the dummy-coded design.
struct GramSystem {
  std::size_t cols = 0;
  std::vector<double> gram;  // cols x cols, X^T W X
  std::vector<double> xtwy;  // X^T W t
  double ytwy = 0.0;         // t^T W t

  double at(std::size_t i, std::size_t j) const { return gram[i * cols + j]; }
};

inline GramSystem build_gram(const NeighborhoodSample& sample, std::size_t d_x, double offset) {
  const std::size_t per = sample.mode == Mode::kLemon ? 2 : 1;
  GramSystem g;
  g.cols = d_x * per;
  g.gram.assign(g.cols * g.cols, 0.0);
  g.xtwy.assign(g.cols, 0.0);
  std::vector<std::size_t> active;
  for (const auto& e : sample.entries) {
    const double t = e.y - offset;
    g.ytwy += e.weight * t * t;
    active.clear();
    for (std::size_t i = 0; i < e.z.size(); ++i) {
      if (e.z[i] == FeatureState::kAbsent) active.push_back(i * per);
      if (e.z[i] == FeatureState::kMatched && per == 2) active.push_back(i * per + 1);
    }
    for (std::size_t a : active) {
      g.xtwy[a] += e.weight * t;
      for (std::size_t b : active) g.gram[a * g.cols + b] += e.weight;
    }
  }
  return g;
}

struct SubsetSolution {
  std::vector<double> beta;
  double sse = 0.0;
};

inline SubsetSolution solve_subset(const GramSystem& g, const std::vector<std::size_t>& cols, double ridge) {
  const std::size_t n = cols.size();
  std::vector<double> sub(n * n), rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    rhs[i] = g.xtwy[cols[i]];
    for (std::size_t j = 0; j < n; ++j) sub[i * n + j] = g.at(cols[i], cols[j]);
  }
  SubsetSolution s;
  s.beta = solve_spd(sub, rhs, n, ridge);
  double sse = g.ytwy;
  for (std::size_t i = 0; i < n; ++i) {
    sse -= 2.0 * s.beta[i] * rhs[i];
    for (std::size_t j = 0; j < n; ++j) sse += s.beta[i] * sub[i * n + j] * s.beta[j];
  }
  s.sse = std::max(sse, 0.0);
  return s;
}

}  // namespace detail

/// Weighted least squares on P-referenced dummies (one Absent dummy per
/// feature, plus a Matched dummy in lemon mode) with forward selection of
/// whole features: each step adds the feature that lowers the weighted SSE
/// most, until K features are chosen or no feature improves it by more than
/// `min_improvement`. Ties go to the lowest feature index.
inline SurrogateFit fit_surrogate(const NeighborhoodSample& sample, std::size_t K, double f_x,
                                  const FitOptions& opts = {}) {
  if (sample.entries.empty()) throw ConfigError("fit_surrogate: empty neighborhood");
  if (K < 1) throw ConfigError("fit_surrogate: K must be >= 1");
  const std::size_t d_x = sample.entries.front().z.size();
  const std::size_t per = sample.mode == Mode::kLemon ? 2 : 1;

  SurrogateFit fit;
  fit.mode = sample.mode;
  const double y0 = sample.entries.front().y;
  fit.degenerate = std::all_of(sample.entries.begin(), sample.entries.end(),
                               [y0](const NeighborhoodEntry& e) { return e.y == y0; });

  const auto g = detail::build_gram(sample, d_x, opts.anchored ? f_x : 0.0);
  fit.sse_path.push_back(g.ytwy);
  if (fit.degenerate) return fit;

  std::vector<bool> taken(d_x, false);
  std::vector<std::size_t> cols;
  detail::SubsetSolution current;
  current.sse = g.ytwy;
  while (fit.selected.size() < std::min(K, d_x)) {
    std::optional<std::size_t> best;
    detail::SubsetSolution best_sol;
    for (std::size_t i = 0; i < d_x; ++i) {
      if (taken[i]) continue;
      auto trial = cols;
      for (std::size_t c = 0; c < per; ++c) trial.push_back(i * per + c);
      auto sol = detail::solve_subset(g, trial, opts.ridge);
      if (!best || sol.sse < best_sol.sse) {
        best = i;
        best_sol = std::move(sol);
      }
    }
    if (!best || current.sse - best_sol.sse <= opts.min_improvement) break;
    taken[*best] = true;
    for (std::size_t c = 0; c < per; ++c) cols.push_back(*best * per + c);
    fit.selected.push_back(*best);
    current = std::move(best_sol);
    fit.sse_path.push_back(current.sse);
  }
  for (std::size_t k = 0; k < fit.selected.size(); ++k) {
    fit.beta_absent.push_back(current.beta[k * per]);
    fit.beta_matched.push_back(per == 2 ? current.beta[k * per + 1] : 0.0);
  }
  return fit;
}

struct Attribution {
  std::size_t feature = 0;
  /// Expected score drop when the feature is removed.
  double w = 0.0;
  /// Expected extra score when the feature is injected into the other record.
  double p = 0.0;
};

/// w = -beta_A, p = beta_M.
inline std::vector<Attribution> attributions(const SurrogateFit& fit) {
  std::vector<Attribution> out;
  for (std::size_t k = 0; k < fit.selected.size(); ++k) {
    out.push_back({fit.selected[k], -fit.beta_absent[k], fit.mode == Mode::kLemon ? fit.beta_matched[k] : 0.0});
  }
  return out;
}

}  // namespace emx
