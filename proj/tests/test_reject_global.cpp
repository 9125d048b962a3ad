#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "autoclean/errors.hpp"
#include "autoclean/reject_global.hpp"
#include "support.hpp"

using namespace autoclean;
using namespace autoclean::testing;

namespace {

std::vector<std::size_t> rejected_set(const RejectLog& log) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < log.n_trials; ++i)
    if (log.rejected(i)) out.push_back(i);
  return out;
}

// Small recording: shared waveform plus noise, with a few trials carrying a
// large spike on one sensor.
EpochsTensor spiky_epochs(KeyedRng& rng, std::size_t n, std::size_t q, std::size_t t, std::size_t n_bad,
                          double scale = 1.0) {
  std::vector<std::size_t> bad(n);
  std::iota(bad.begin(), bad.end(), 0);
  rng.shuffle(bad);
  bad.resize(n_bad);
  std::vector<double> data(n * q * t);
  for (std::size_t i = 0; i < n; ++i) {
    const bool is_bad = std::find(bad.begin(), bad.end(), i) != bad.end();
    const std::size_t spike_sensor = rng.index(q);
    for (std::size_t j = 0; j < q; ++j)
      for (std::size_t s = 0; s < t; ++s) {
        double v = std::sin(0.4 * static_cast<double>(s) + static_cast<double>(j)) + 0.3 * rng.normal();
        if (is_bad && j == spike_sensor && s >= t / 3 && s < 2 * t / 3) v += 10.0 + 5.0 * rng.uniform();
        data[(i * q + j) * t + s] = scale * v;
      }
  }
  return EpochsTensor(std::move(data), n, q, t, 100.0);
}

struct GridOptimum {
  double tau;
  double error;
};

GridOptimum dense_grid(const EpochsTensor& e, const FoldPlan& folds, Bounds b) {
  const auto amps = peak_to_peak(e);
  GridOptimum best{b.first, 1e300};
  for (int k = 0; k <= 200; ++k) {
    const double tau = b.first + (b.second - b.first) * k / 200.0;
    const double err = cv_error_global(e, amps, folds, tau).mean_error;
    if (err < best.error) best = {tau, err};
  }
  return best;
}

}  // namespace

TEST(Folds, EqualSizes) {
  const auto plan = make_folds(10, 5, 3);
  for (int f = 0; f < 5; ++f) EXPECT_EQ(plan.validation(f).size(), 2u);
  EXPECT_EQ(plan.training(0).size(), 8u);
}

TEST(Folds, Stratified) {
  std::vector<bool> strata(10, false);
  for (std::size_t i = 5; i < 10; ++i) strata[i] = true;
  const auto plan = make_folds(10, 5, 3, strata);
  for (int f = 0; f < 5; ++f) {
    const auto v = plan.validation(f);
    ASSERT_EQ(v.size(), 2u);
    EXPECT_NE(strata[v[0]], strata[v[1]]);
  }
}

TEST(Folds, DeterministicAndChecked) {
  EXPECT_EQ(make_folds(37, 5, 11).assignments, make_folds(37, 5, 11).assignments);
  EXPECT_NE(make_folds(37, 5, 11).assignments, make_folds(37, 5, 12).assignments);
  EXPECT_THROW(make_folds(4, 5, 0), ContractError);
  EXPECT_THROW(make_folds(4, 1, 0), ContractError);
}

TEST(ThresholdCv, HandComputedToySet) {
  RowMatrix features(4, 2);
  features << 1, 2, 3, 4, 5, 0, 1, 0;
  const FoldPlan folds{2, {0, 1, 0, 1}};
  const ThresholdCv cv(features, {1.0, 2.0, 3.0, 4.0}, folds);
  const auto mid = cv.evaluate(2.5);
  EXPECT_DOUBLE_EQ(mid.fold_errors[0], 3.0);
  EXPECT_DOUBLE_EQ(mid.fold_errors[1], 1.0);
  EXPECT_DOUBLE_EQ(mid.mean_error, 2.0);
  const auto all = cv.evaluate(10.0);
  EXPECT_DOUBLE_EQ(all.fold_errors[0], std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(all.fold_errors[1], std::sqrt(2.0));
  const auto none = cv.evaluate(0.0);
  EXPECT_DOUBLE_EQ(none.fold_errors[0], std::sqrt(10.0));
  EXPECT_DOUBLE_EQ(none.fold_errors[1], std::sqrt(8.0));
}

TEST(CvErrorGlobal, IdenticalTrialsZero) {
  const auto e = from_function(6, 3, 4, [](auto, auto j, auto s) { return 1.0 * j - 0.5 * s; });
  const auto folds = make_folds(6, 3, 0);
  EXPECT_EQ(cv_error_global(e, peak_to_peak(e), folds, 100.0).mean_error, 0.0);
}

TEST(CvErrorGlobal, TauBelowAllIsMedianNorm) {
  auto rng = case_rng(60, 0);
  const auto e = random_epochs(rng, 10, 3, 4);
  const auto folds = make_folds(10, 5, 1);
  const auto r = cv_error_global(e, peak_to_peak(e), folds, -1.0);
  for (int f = 0; f < 5; ++f) {
    EXPECT_NEAR(r.fold_errors[static_cast<std::size_t>(f)], oracle_mean_median_error(e, {}, folds.validation(f)), 1e-12);
  }
}

TEST(FitGlobal, SeparatesPlantedTrials) {
  auto rng = case_rng(61, 0);
  // 95 trials with amplitude about a, 5 with about 10a.
  std::vector<double> data;
  const std::size_t n = 100, q = 4, t = 20;
  std::vector<bool> bad(n, false);
  for (std::size_t k = 0; k < 5; ++k) bad[k * 19 + 3] = true;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < q; ++j)
      for (std::size_t s = 0; s < t; ++s) {
        const double a = bad[i] ? 10.0 : 1.0;
        data.push_back(0.5 * a * std::sin(0.3 * static_cast<double>(s + j)) * (1.0 + 0.05 * rng.normal()));
      }
  const EpochsTensor e(data, n, q, t, 100.0);
  const auto fit = fit_global(e, 5, 4);
  const double tau = *fit.model.global_tau;
  EXPECT_GT(tau, 1.0 * 1.1);
  EXPECT_LT(tau, 10.0 * 0.9);
  const auto log = apply_global(e, tau);
  for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(log.rejected(i), bad[i]) << i;

  // The dense grid may settle anywhere on the flat floor of the curve; the
  // search must match its error.
  const auto grid = dense_grid(e, make_folds(n, 5, 4), *fit.model.global_bounds);
  EXPECT_LE(fit.search.y_star, 1.05 * grid.error);
  const auto grid_rejected = rejected_set(apply_global(e, grid.tau));
  const auto fit_rejected = rejected_set(log);
  EXPECT_TRUE(std::includes(grid_rejected.begin(), grid_rejected.end(), fit_rejected.begin(), fit_rejected.end()));
  EXPECT_EQ(fit.model.cv_traces.size(), 50u);
}

TEST(FitGlobal, IdenticalTrialsDegenerate) {
  const auto e = from_function(8, 3, 5, [](auto, auto j, auto s) { return std::cos(1.0 * s + j); });
  const auto fit = fit_global(e, 4, 0);
  EXPECT_TRUE(fit.model.degenerate);
  EXPECT_TRUE(fit.search.degenerate);
  EXPECT_NEAR(fit.search.y_star, 0.0, 1e-12);
  EXPECT_EQ(apply_global(e, *fit.model.global_tau).n_rejected(), 0u);
}

TEST(ApplyGlobal, BelowAllRejectsAllAndMatchesScan) {
  auto rng = case_rng(62, 0);
  const auto e = random_epochs(rng, 12, 4, 6);
  const auto amps = peak_to_peak(e);
  EXPECT_EQ(apply_global(e, 0.0).n_rejected(), 12u);
  const double tau = 0.5 * (amps.values.minCoeff() + amps.values.maxCoeff());
  const auto log = apply_global(e, tau);
  for (std::size_t i = 0; i < 12; ++i) {
    bool over = false;
    for (std::size_t j = 0; j < 4; ++j) {
      const bool cell = oracle_p2p(e, i, j) > tau;
      over = over || cell;
      EXPECT_EQ(log.cell(i, j) == CellState::bad_uninterpolated, cell);
    }
    EXPECT_EQ(log.rejected(i), over);
  }
  EXPECT_EQ(log.provenance.at("method"), "global");
  EXPECT_NO_THROW(log.validate());
}

TEST(Property, StratifiedFoldsBalanced) {
  for (int c = 0; c < kPropertyCases; ++c) {
    auto rng = case_rng(63, c);
    const int k = 2 + static_cast<int>(rng.index(6));
    const std::size_t n = static_cast<std::size_t>(k) + rng.index(60);
    std::vector<bool> strata(n);
    for (std::size_t i = 0; i < n; ++i) strata[i] = rng.bernoulli(rng.uniform());
    const auto plan = make_folds(n, k, rng.next_u64(), c % 4 == 0 ? std::optional<std::vector<bool>>{} : strata);
    std::size_t lo = n, hi = 0, lo_t = n, hi_t = 0, lo_f = n, hi_f = 0;
    for (int f = 0; f < k; ++f) {
      const auto v = plan.validation(f);
      std::size_t n_true = 0;
      for (auto i : v) n_true += strata[i] ? 1 : 0;
      lo = std::min(lo, v.size());
      hi = std::max(hi, v.size());
      lo_t = std::min(lo_t, n_true);
      hi_t = std::max(hi_t, n_true);
      lo_f = std::min(lo_f, v.size() - n_true);
      hi_f = std::max(hi_f, v.size() - n_true);
    }
    ASSERT_GE(lo, 1u);
    ASSERT_LE(hi - lo, 1u);
    if (c % 4 != 0) {
      ASSERT_LE(hi_t - lo_t, 1u) << c;
      ASSERT_LE(hi_f - lo_f, 1u) << c;
    }
  }
}

TEST(Property, RejectionMonotoneInTau) {
  for (int c = 0; c < kPropertyCases; ++c) {
    auto rng = case_rng(64, c);
    const auto e = spiky_epochs(rng, 5 + rng.index(20), 2 + rng.index(4), 4 + rng.index(8), rng.index(4));
    const auto amps = peak_to_peak(e);
    double t1 = rng.uniform(0.0, 1.2 * amps.values.maxCoeff());
    double t2 = rng.uniform(0.0, 1.2 * amps.values.maxCoeff());
    if (t1 > t2) std::swap(t1, t2);
    const auto low = rejected_set(apply_global(e, t1));
    const auto high = rejected_set(apply_global(e, t2));
    ASSERT_TRUE(std::includes(low.begin(), low.end(), high.begin(), high.end()));
  }
}

TEST(Property, ScaleEquivariance) {
  for (int c = 0; c < kPropertyCases; ++c) {
    auto rng = case_rng(65, c);
    const std::size_t n = 10 + rng.index(15);
    const std::size_t q = 2 + rng.index(3);
    const std::size_t t = 6 + rng.index(6);
    const std::size_t n_bad = rng.index(4);
    const std::uint64_t data_seed = rng.next_u64();
    const double factor = std::ldexp(1.0, static_cast<int>(rng.index(41)) - 20);
    auto r1 = KeyedRng(data_seed, {1});
    auto r2 = KeyedRng(data_seed, {1});
    const auto base = spiky_epochs(r1, n, q, t, n_bad);
    const auto scaled = spiky_epochs(r2, n, q, t, n_bad, factor);
    const auto folds = make_folds(n, 5, data_seed);
    const auto b1 = peak_to_peak(base).trial_max();
    const auto b2 = peak_to_peak(scaled).trial_max();
    const Bounds bounds1{b1.minCoeff(), b1.maxCoeff()};
    const Bounds bounds2{b2.minCoeff(), b2.maxCoeff()};
    ASSERT_EQ(bounds2.first, factor * bounds1.first);
    ASSERT_EQ(bounds2.second, factor * bounds1.second);
    const auto g1 = dense_grid(base, folds, bounds1);
    const auto g2 = dense_grid(scaled, folds, bounds2);
    ASSERT_NEAR(g2.tau, factor * g1.tau, 1e-12 * factor * g1.tau) << c;
    ASSERT_EQ(rejected_set(apply_global(base, g1.tau)), rejected_set(apply_global(scaled, g2.tau)));
  }
}

TEST(Property, TauAboveMaxIsNoRejection) {
  for (int c = 0; c < kPropertyCases; ++c) {
    auto rng = case_rng(66, c);
    const std::size_t n = 4 + rng.index(20);
    const auto e = spiky_epochs(rng, n, 2 + rng.index(3), 3 + rng.index(5), rng.index(3));
    const auto amps = peak_to_peak(e);
    const int k = 2 + static_cast<int>(rng.index(std::min<std::size_t>(n - 1, 5)));
    const auto folds = make_folds(n, k, rng.next_u64());
    const double tau = amps.trial_max().maxCoeff() * (1.0 + rng.uniform());
    const auto r = cv_error_global(e, amps, folds, tau);
    double expected = 0.0;
    for (int f = 0; f < k; ++f) expected += oracle_mean_median_error(e, folds.training(f), folds.validation(f));
    expected /= k;
    ASSERT_NEAR(r.mean_error, expected, 1e-12 * (1.0 + expected));
  }
}
