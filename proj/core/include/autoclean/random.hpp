#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace autoclean {

/// Well-known stream identifiers so independent consumers of one master seed
/// never share random numbers.
enum class Stream : std::uint32_t {
  folds = 1,
  optimizer = 2,
  simulate = 3,
  ransac = 4,
  test = 99,
};

/// Deterministic random stream addressed by (seed, key...). Two streams with
/// the same address produce the same sequence regardless of what other
/// streams were consumed before, which keeps parallel and serial runs equal.
///
/// Conversions to uniform/normal variates are done by hand rather than with
/// <random> distributions, whose output is implementation-defined.
class KeyedRng {
 public:
  KeyedRng(std::uint64_t seed, std::initializer_list<std::uint64_t> key)
      : engine_(make_engine(seed, std::span<const std::uint64_t>(key.begin(), key.size()))) {}
  KeyedRng(std::uint64_t seed, std::span<const std::uint64_t> key) : engine_(make_engine(seed, key)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    // Lemire-style rejection keeps the draw unbiased.
    const std::uint64_t bound = n;
    const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % bound);
    std::uint64_t r = engine_();
    while (r >= limit) r = engine_();
    return static_cast<std::size_t>(r % bound);
  }

  /// Standard normal via Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  bool bernoulli(double p) { return uniform() < p; }

  template <class T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[index(i)]);
    }
  }

  template <class T>
  void shuffle(std::vector<T>& values) {
    shuffle(std::span<T>(values));
  }

 private:
  static std::mt19937_64 make_engine(std::uint64_t seed, std::span<const std::uint64_t> key) {
    std::vector<std::uint32_t> words;
    words.reserve(2 + 2 * key.size());
    const auto push = [&words](std::uint64_t v) {
      words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
      words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push(seed);
    for (auto k : key) push(k);
    std::seed_seq seq(words.begin(), words.end());
    return std::mt19937_64(seq);
  }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline std::uint64_t stream_key(Stream s) { return static_cast<std::uint64_t>(s); }

/// Seed for a sub-stream, e.g. the optimizer run of one sensor.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> key) {
  return KeyedRng(seed, key).next_u64();
}

}  // namespace autoclean
