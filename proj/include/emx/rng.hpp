#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <type_traits>
#include <string_view>
#include <utility>
#include <vector>

namespace emx {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Derives an independent stream seed from a base seed and labels.
template <typename... Parts>
std::uint64_t derive_seed(std::uint64_t base, const Parts&... parts) {
  std::uint64_t h = splitmix64(base);
  auto mix = [&h](std::uint64_t v) { h = splitmix64(h ^ v); };
  auto mix_part = [&](const auto& p) {
    using T = std::decay_t<decltype(p)>;
    if constexpr (std::is_convertible_v<T, std::string_view>) {
      mix(hash_string(std::string_view(p)));
    } else {
      mix(static_cast<std::uint64_t>(p));
    }
  };
  (mix_part(parts), ...);
  return h;
}

/// mt19937_64 with distribution helpers implemented here, so streams are
/// identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n) {
    const std::uint64_t bound = n;
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return static_cast<std::size_t>(x % bound);
  }

  /// Uniform integer in [lo, hi].
  std::size_t between(std::size_t lo, std::size_t hi) { return lo + index(hi - lo + 1); }

  bool coin(double p_true = 0.5) { return uniform01() < p_true; }

  /// `k` distinct indices from [0, n), chosen uniformly (partial Fisher-Yates
  /// over `pool`). Returned in draw order.
  std::vector<std::size_t> choose(std::vector<std::size_t> pool, std::size_t k) {
    if (k > pool.size()) k = pool.size();
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t j = i + index(pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace emx
