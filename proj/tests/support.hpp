#pragma once

// Test-only helpers: random generators and independent reference
// implementations ("oracles") written as plainly as possible.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "autoclean/epochs.hpp"
#include "autoclean/random.hpp"
#include "autoclean/synth.hpp"

namespace autoclean::testing {

inline constexpr int kPropertyCases = 100;

inline KeyedRng case_rng(std::uint64_t test_id, int case_index) {
  return KeyedRng(test_id, {stream_key(Stream::test), static_cast<std::uint64_t>(case_index)});
}

inline EpochsTensor random_epochs(KeyedRng& rng, std::size_t n, std::size_t q, std::size_t t, double scale = 1.0) {
  std::vector<double> data(n * q * t);
  for (auto& v : data) v = scale * rng.normal();
  return EpochsTensor(std::move(data), n, q, t, 100.0);
}

inline EpochsTensor from_function(std::size_t n, std::size_t q, std::size_t t,
                                  const std::function<double(std::size_t, std::size_t, std::size_t)>& f,
                                  double sfreq = 100.0) {
  std::vector<double> data(n * q * t);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < q; ++j)
      for (std::size_t s = 0; s < t; ++s) data[(i * q + j) * t + s] = f(i, j, s);
  return EpochsTensor(std::move(data), n, q, t, sfreq);
}

// Real spherical harmonics of degree 1 and 2 (unnormalized).
inline double harmonic1(const Position& p) { return 0.3 * p[0] - 0.5 * p[1] + 0.8 * p[2]; }
inline double harmonic2(const Position& p) { return 3.0 * p[2] * p[2] - 1.0 + 2.0 * p[0] * p[1] + (p[0] * p[0] - p[1] * p[1]); }

// --- oracles ---------------------------------------------------------------

inline double oracle_p2p(const EpochsTensor& e, std::size_t i, std::size_t j) {
  double hi = e.at(i, j, 0);
  double lo = e.at(i, j, 0);
  for (std::size_t s = 1; s < e.n_times(); ++s) {
    hi = std::max(hi, e.at(i, j, s));
    lo = std::min(lo, e.at(i, j, s));
  }
  return hi - lo;
}

inline double oracle_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Mean of the listed trials minus the median of the listed validation
// trials, Frobenius norm, computed element by element.
inline double oracle_mean_median_error(const EpochsTensor& e, const std::vector<std::size_t>& good,
                                       const std::vector<std::size_t>& val) {
  double ss = 0.0;
  for (std::size_t f = 0; f < e.n_features(); ++f) {
    double mean = 0.0;
    for (auto i : good) mean += e.data()[i * e.n_features() + f];
    if (!good.empty()) mean /= static_cast<double>(good.size());
    std::vector<double> vals;
    for (auto i : val) vals.push_back(e.data()[i * e.n_features() + f]);
    const double d = mean - oracle_median(vals);
    ss += d * d;
  }
  return std::sqrt(ss);
}

// Legendre-series kernel from the standard library's special functions.
inline double oracle_kernel(double x, int m = 4, int n_terms = 50) {
  double g = 0.0;
  for (int n = 1; n <= n_terms; ++n) {
    g += (2.0 * n + 1.0) / (std::pow(n, m) * std::pow(n + 1.0, m) * 4.0 * M_PI) * std::legendre(n, x);
  }
  return g;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("autoclean_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace autoclean::testing
