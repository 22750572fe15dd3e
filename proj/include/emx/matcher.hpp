#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "emx/error.hpp"
#include "emx/record.hpp"

namespace emx {

/// Black-box scoring contract. Implementations map each pair to a score in
/// [0, 1]; a pair is a predicted match iff its score exceeds threshold().
class Matcher {
 public:
  virtual ~Matcher() = default;

  /// One score per pair, in order.
  virtual std::vector<double> predict_batch(std::span<const RecordPair> pairs) const = 0;

  virtual double threshold() const { return 0.5; }

  /// True when the matcher did not announce a threshold and 0.5 was assumed.
  virtual bool threshold_defaulted() const { return false; }
};

struct MatcherConfig {
  double threshold = 0.5;
  std::size_t batch_size = 64;

  void validate() const {
    if (!(threshold > 0.0 && threshold < 1.0)) {
      throw ConfigError("matcher threshold must lie in (0, 1)");
    }
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
  }
};

inline void check_scores(const std::vector<double>& scores, std::size_t expected) {
  if (scores.size() != expected) {
    throw MatcherError("matcher returned " + std::to_string(scores.size()) + " scores for " +
                           std::to_string(expected) + " pairs",
                       "", false);
  }
  for (double s : scores) {
    if (!std::isfinite(s) || s < 0.0 || s > 1.0) {
      throw MatcherError("matcher returned a score outside [0, 1]", "", false);
    }
  }
}

/// Scores `pairs` in consecutive batches of at most `batch_size`.
inline std::vector<double> predict_chunked(const Matcher& m, std::span<const RecordPair> pairs,
                                           std::size_t batch_size) {
  std::vector<double> out;
  out.reserve(pairs.size());
  if (batch_size == 0) batch_size = 64;
  for (std::size_t i = 0; i < pairs.size(); i += batch_size) {
    auto chunk = pairs.subspan(i, std::min(batch_size, pairs.size() - i));
    auto s = m.predict_batch(chunk);
    check_scores(s, chunk.size());
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

inline double score_one(const Matcher& m, const RecordPair& p) {
  return predict_chunked(m, std::span<const RecordPair>(&p, 1), 1).front();
}

inline bool predicts_match(double score, double threshold) { return score > threshold; }

/// Adapts a per-pair function. The function must be safe to call concurrently.
class FunctionMatcher final : public Matcher {
 public:
  using ScoreFn = std::function<double(const RecordPair&)>;

  explicit FunctionMatcher(ScoreFn fn, double threshold = 0.5)
      : fn_(std::move(fn)), threshold_(threshold) {}

  std::vector<double> predict_batch(std::span<const RecordPair> pairs) const override {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(fn_(p));
    return out;
  }

  double threshold() const override { return threshold_; }

 private:
  ScoreFn fn_;
  double threshold_;
};

}  // namespace emx
