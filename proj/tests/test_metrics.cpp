#include <gtest/gtest.h>

#include <cmath>

#include "autoclean/errors.hpp"
#include "autoclean/metrics.hpp"
#include "support.hpp"

using namespace autoclean;
using namespace autoclean::testing;

namespace {

EvokedMatrix random_evoked(KeyedRng& rng, Eigen::Index q, Eigen::Index t) {
  EvokedMatrix m;
  m.values = RowMatrix(q, t);
  for (Eigen::Index a = 0; a < q; ++a)
    for (Eigen::Index b = 0; b < t; ++b) m.values(a, b) = rng.normal();
  return m;
}

std::vector<std::size_t> random_subset(KeyedRng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(idx);
  idx.resize(k);
  return idx;
}

}  // namespace

TEST(PeakToPeak, ConstantTrialGivesZeros) {
  const auto e = from_function(2, 3, 4, [](auto i, auto, auto) { return i == 0 ? 7.0 : 1.0 * i; });
  const auto a = peak_to_peak(e);
  EXPECT_TRUE((a.values.array() == 0.0).all());
}

TEST(PeakToPeak, SimpleSeries) {
  const EpochsTensor e({1.0, -2.0, 3.0, 0.0, 0.0, 0.0}, 1, 2, 3, 100.0);
  const auto a = peak_to_peak(e);
  EXPECT_EQ(a.values(0, 0), 5.0);
  EXPECT_EQ(a.values(0, 1), 0.0);
}

TEST(PeakToPeak, MatchesScanOracle) {
  auto rng = case_rng(20, 0);
  const auto e = random_epochs(rng, 3, 2, 4);
  const auto a = peak_to_peak(e);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(a.values(i, j), oracle_p2p(e, i, j));
}

TEST(TrialMean, SingleEmptyAndRandom) {
  auto rng = case_rng(21, 0);
  const auto e = random_epochs(rng, 6, 3, 5);
  const std::size_t one[] = {4};
  const auto m1 = trial_mean(e, one);
  EXPECT_EQ(m1.values, RowMatrix(e.trial(4)));
  EXPECT_EQ(m1.n_contributing, 1u);

  const auto m0 = trial_mean(e, {});
  EXPECT_TRUE((m0.values.array() == 0.0).all());
  EXPECT_EQ(m0.n_contributing, 0u);
  EXPECT_EQ(m0.values.rows(), 3);

  const std::vector<std::size_t> sub = {0, 2, 5};
  const auto m = trial_mean(e, sub);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t s = 0; s < 5; ++s) {
      double sum = 0.0;
      for (auto i : sub) sum += e.at(i, j, s);
      EXPECT_NEAR(m.values(j, s), sum / 3.0, 1e-15);
    }
}

TEST(TrialMean, BadIndices) {
  auto rng = case_rng(22, 0);
  const auto e = random_epochs(rng, 3, 2, 2);
  const std::size_t dup[] = {1, 1};
  const std::size_t oob[] = {3};
  EXPECT_THROW(trial_mean(e, dup), ContractError);
  EXPECT_THROW(trial_mean(e, oob), IndexError);
  EXPECT_THROW(trial_median(e, oob), IndexError);
}

TEST(TrialMedian, OddAndEven) {
  const auto odd = from_function(3, 2, 2, [](auto i, auto, auto) { return i == 2 ? 100.0 : 1.0; });
  const std::size_t all[] = {0, 1, 2};
  EXPECT_EQ(trial_median(odd, all).values(0, 0), 1.0);
  const auto even = from_function(2, 2, 2, [](auto i, auto, auto) { return i == 0 ? 1.0 : 3.0; });
  const std::size_t both[] = {0, 1};
  EXPECT_EQ(trial_median(even, both).values(1, 1), 2.0);
  EXPECT_THROW(trial_median(even, {}), ContractError);
}

TEST(TrialMedian, MatchesSortOracle) {
  auto rng = case_rng(23, 0);
  const auto e = random_epochs(rng, 12, 3, 4);
  const auto sub = random_subset(rng, 12, 7);
  const auto m = trial_median(e, sub);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t s = 0; s < 4; ++s) {
      std::vector<double> v;
      for (auto i : sub) v.push_back(e.at(i, j, s));
      EXPECT_EQ(m.values(j, s), oracle_median(v));
    }
}

TEST(EvalMetrics, Basics) {
  auto rng = case_rng(24, 0);
  const auto a = random_evoked(rng, 3, 4);
  EXPECT_EQ(eval_linf(a, a), 0.0);
  EXPECT_EQ(eval_l2(a, a), 0.0);
  auto b = a;
  b.values(1, 2) += 0.7;
  EXPECT_NEAR(eval_linf(a, b), 0.7, 1e-15);
  b = a;
  b.values(2, 3) -= 3.0;
  EXPECT_NEAR(eval_l2(a, b), 3.0, 1e-14);
  auto wrong = random_evoked(rng, 2, 4);
  EXPECT_THROW(eval_linf(a, wrong), ContractError);
}

TEST(EvalMetrics, MatchOracles) {
  auto rng = case_rng(25, 0);
  const auto a = random_evoked(rng, 4, 6);
  const auto b = random_evoked(rng, 4, 6);
  double mx = 0.0;
  double ss = 0.0;
  for (Eigen::Index r = 0; r < 4; ++r)
    for (Eigen::Index c = 0; c < 6; ++c) {
      const double d = a.values(r, c) - b.values(r, c);
      mx = std::max(mx, std::abs(d));
      ss += d * d;
    }
  EXPECT_EQ(eval_linf(a, b), mx);
  EXPECT_NEAR(eval_l2(a, b), std::sqrt(ss), 1e-12);
}

TEST(Property, PeakToPeakTranslationInvariant) {
  for (int c = 0; c < kPropertyCases; ++c) {
    auto rng = case_rng(26, c);
    const std::size_t n = 1 + rng.index(4);
    const std::size_t q = 2 + rng.index(4);
    const std::size_t t = 2 + rng.index(10);
    const auto e = random_epochs(rng, n, q, t);
    const std::size_t target = rng.index(n);
    const double shift = rng.uniform(-50.0, 50.0);
    const auto moved = from_function(n, q, t, [&](auto i, auto j, auto s) {
      return e.at(i, j, s) + (i == target ? shift : 0.0);
    });
    const auto a = peak_to_peak(e);
    const auto b = peak_to_peak(moved);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < q; ++j) {
        if (i == target) {
          ASSERT_NEAR(b.values(i, j), a.values(i, j), 1e-12 * (1.0 + std::abs(shift)));
        } else {
          ASSERT_EQ(b.values(i, j), a.values(i, j));
        }
      }
    }
  }
}

TEST(Property, PeakToPeakHomogeneous) {
  for (int c = 0; c < kPropertyCases; ++c) {
    auto rng = case_rng(27, c);
    const auto e = random_epochs(rng, 1 + rng.index(4), 2 + rng.index(4), 2 + rng.index(10));
    const double k = rng.uniform(1e-6, 1e6);
    const auto scaled = from_function(e.n_trials(), e.n_sensors(), e.n_times(),
                                      [&](auto i, auto j, auto s) { return k * e.at(i, j, s); });
    const auto a = peak_to_peak(e).values;
    const auto b = peak_to_peak(scaled).values;
    for (Eigen::Index r = 0; r < a.rows(); ++r)
      for (Eigen::Index s = 0; s < a.cols(); ++s) ASSERT_NEAR(b(r, s), k * a(r, s), 1e-12 * k * a(r, s));
  }
}

TEST(Property, NormInequalities) {
  for (int c = 0; c < kPropertyCases; ++c) {
    auto rng = case_rng(28, c);
    const auto q = static_cast<Eigen::Index>(1 + rng.index(6));
    const auto t = static_cast<Eigen::Index>(1 + rng.index(20));
    const auto a = random_evoked(rng, q, t);
    auto b = random_evoked(rng, q, t);
    if (c % 5 == 0) b = a;  // include the equality case
    const double linf = eval_linf(a, b);
    const double l2 = eval_l2(a, b);
    ASSERT_LE(linf, l2 * (1 + 1e-15));
    ASSERT_LE(l2, std::sqrt(static_cast<double>(q * t)) * linf * (1 + 1e-12));
  }
}

TEST(Property, MedianRobustToMinoritySpikes) {
  for (int c = 0; c < kPropertyCases; ++c) {
    auto rng = case_rng(29, c);
    const std::size_t n = 3 + rng.index(15);
    const auto clean = random_epochs(rng, n, 2, 3);
    const std::size_t n_bad = (n - 1) / 2;  // strictly fewer than half
    const auto bad = random_subset(rng, n, n_bad);
    const std::size_t jj = rng.index(2);
    const std::size_t ss = rng.index(3);
    std::vector<double> spikes(n, 0.0);
    for (auto i : bad) spikes[i] = (rng.bernoulli(0.5) ? 1 : -1) * std::pow(10.0, rng.uniform(0.0, 12.0));
    const auto dirty = from_function(n, 2, 3, [&](auto i, auto j, auto s) {
      return clean.at(i, j, s) + (j == jj && s == ss ? spikes[i] : 0.0);
    });
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    const double med = trial_median(dirty, all).values(jj, ss);
    double lo = 1e300;
    double hi = -1e300;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::find(bad.begin(), bad.end(), i) != bad.end()) continue;
      lo = std::min(lo, clean.at(i, jj, ss));
      hi = std::max(hi, clean.at(i, jj, ss));
    }
    ASSERT_GE(med, lo);
    ASSERT_LE(med, hi);
  }
}

TEST(Property, MeanAndMedianMatchOracles) {
  for (int c = 0; c < kPropertyCases; ++c) {
    auto rng = case_rng(30, c);
    const std::size_t n = 1 + rng.index(10);
    const auto e = random_epochs(rng, n, 2 + rng.index(3), 2 + rng.index(4));
    const auto sub = random_subset(rng, n, 1 + rng.index(n));
    const auto mean = trial_mean(e, sub);
    const auto med = trial_median(e, sub);
    for (std::size_t j = 0; j < e.n_sensors(); ++j)
      for (std::size_t s = 0; s < e.n_times(); ++s) {
        std::vector<double> v;
        double sum = 0.0;
        for (auto i : sub) {
          v.push_back(e.at(i, j, s));
          sum += e.at(i, j, s);
        }
        ASSERT_NEAR(mean.values(j, s), sum / static_cast<double>(sub.size()), 1e-13);
        ASSERT_EQ(med.values(j, s), oracle_median(v));
      }
  }
}
