#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "autoclean/errors.hpp"
#include "autoclean/interp.hpp"
#include "support.hpp"

using namespace autoclean;
using namespace autoclean::testing;

namespace {

std::vector<std::size_t> all_but(std::size_t q, std::size_t skip) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < q; ++j)
    if (j != skip) out.push_back(j);
  return out;
}

EpochsTensor field_epochs(const SensorLayout& layout, std::size_t n, std::size_t t,
                          const std::function<double(const Position&)>& field) {
  return from_function(n, layout.size(), t, [&](auto i, auto j, auto s) {
    return field(layout.position(j)) * std::sin(0.3 * static_cast<double>(s + 1) + static_cast<double>(i));
  });
}

// Largest held-out error over all sensors, relative to the field's peak
// magnitude over the layout.
double worst_holdout_error(const SensorLayout& layout, const std::function<double(const Position&)>& field) {
  const std::size_t q = layout.size();
  double peak = 0.0;
  for (std::size_t j = 0; j < q; ++j) peak = std::max(peak, std::abs(field(layout.position(j))));
  double worst = 0.0;
  for (std::size_t h = 0; h < q; ++h) {
    const auto src = all_but(q, h);
    const std::size_t tgt[] = {h};
    const auto op = build_operator(layout, src, tgt);
    double pred = 0.0;
    for (std::size_t k = 0; k < src.size(); ++k) pred += op.weights(0, static_cast<Eigen::Index>(k)) * field(layout.position(src[k]));
    worst = std::max(worst, std::abs(pred - field(layout.position(h))) / peak);
  }
  return worst;
}

}  // namespace

TEST(SplineKernel, MatchesLegendreOracle) {
  for (double x : {-1.0, -0.7, -0.2, 0.0, 0.31, 0.9, 1.0}) {
    EXPECT_NEAR(spline_kernel(x), oracle_kernel(x), 1e-14) << x;
  }
  SplineParams p;
  p.stiffness_order = 3;
  p.n_terms = 20;
  EXPECT_NEAR(spline_kernel(0.4, p), oracle_kernel(0.4, 3, 20), 1e-14);
}

TEST(BuildOperator, ConstantFieldReproduced) {
  const auto layout = fibonacci_layout(16);
  const auto src = all_but(16, 3);
  const std::size_t tgt[] = {3, 7};
  const auto op = build_operator(layout, src, tgt);
  const Eigen::VectorXd ones = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(src.size()), 2.5);
  const Eigen::VectorXd pred = op.weights * ones;
  EXPECT_NEAR(pred(0), 2.5, 1e-9);
  EXPECT_NEAR(pred(1), 2.5, 1e-9);
}

TEST(BuildOperator, FewSourcesIsGeometryError) {
  const auto layout = fibonacci_layout(8);
  const std::size_t src[] = {0, 1, 2};
  const std::size_t tgt[] = {5};
  EXPECT_THROW(build_operator(layout, src, tgt), GeometryError);
}

TEST(BuildOperator, HarmonicHoldoutDegreeOne) {
  const auto layout = fibonacci_layout(32);
  EXPECT_LT(worst_holdout_error(layout, harmonic1), 0.05);
}

TEST(BuildOperator, HarmonicHoldoutDegreeTwo) {
  const auto layout = fibonacci_layout(32);
  EXPECT_LT(worst_holdout_error(layout, harmonic2), 0.05);
}

TEST(InterpolateSensors, EmptyMaskIsIdentity) {
  auto rng = case_rng(40, 0);
  const auto layout = fibonacci_layout(8);
  const auto e = random_epochs(rng, 3, 8, 5);
  const BoolMatrix mask = BoolMatrix::Constant(3, 8, false);
  EXPECT_EQ(interpolate_sensors(e, layout, mask), e);
}

TEST(InterpolateSensors, ConstantFieldCell) {
  const auto layout = fibonacci_layout(12);
  const auto e = from_function(2, 12, 4, [](auto i, auto, auto) { return i == 0 ? 3.0 : -1.0; });
  BoolMatrix mask = BoolMatrix::Constant(2, 12, false);
  mask(1, 5) = true;
  const auto out = interpolate_sensors(e, layout, mask);
  for (std::size_t s = 0; s < 4; ++s) EXPECT_NEAR(out.at(1, 5, s), -1.0, 1e-9);
}

TEST(InterpolateSensors, HarmonicCellReconstructed) {
  const auto layout = fibonacci_layout(32);
  const auto e = field_epochs(layout, 2, 10, harmonic2);
  BoolMatrix mask = BoolMatrix::Constant(2, 32, false);
  mask(0, 9) = true;
  const auto out = interpolate_sensors(e, layout, mask);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t s = 0; s < 10; ++s) {
    num += std::pow(out.at(0, 9, s) - e.at(0, 9, s), 2);
    den += std::pow(e.at(0, 9, s), 2);
  }
  EXPECT_LT(std::sqrt(num / den), 0.05);
}

TEST(InterpolateSensors, TooFewGoodSensorsIsRepairError) {
  auto rng = case_rng(41, 0);
  const auto layout = fibonacci_layout(6);
  const auto e = random_epochs(rng, 2, 6, 3);
  BoolMatrix mask = BoolMatrix::Constant(2, 6, false);
  mask(1, 0) = mask(1, 1) = mask(1, 2) = true;
  EXPECT_THROW(interpolate_sensors(e, layout, mask), RepairError);
}

TEST(Augment, DoublesAndKeepsOriginals) {
  auto rng = case_rng(42, 0);
  const auto layout = fibonacci_layout(10);
  const auto e = random_epochs(rng, 3, 10, 6);
  const auto a = augment(e, layout);
  ASSERT_EQ(a.n_trials(), 6u);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 10; ++j)
      for (std::size_t s = 0; s < 6; ++s) EXPECT_EQ(a.at(i, j, s), e.at(i, j, s));
  const std::vector<bool> flags = {false, false, false, true, true, true};
  EXPECT_EQ(a.origin_flags(), flags);
}

TEST(Augment, ConstantFieldCopyMatches) {
  const auto layout = fibonacci_layout(10);
  const auto e = from_function(1, 10, 3, [](auto, auto, auto s) { return 1.0 + static_cast<double>(s); });
  const auto a = augment(e, layout);
  for (std::size_t j = 0; j < 10; ++j)
    for (std::size_t s = 0; s < 3; ++s) EXPECT_NEAR(a.at(1, j, s), e.at(0, j, s), 1e-6);
}

TEST(Augment, EqualsSingleSensorInterpolation) {
  auto rng = case_rng(43, 0);
  const auto layout = fibonacci_layout(9);
  const auto e = random_epochs(rng, 2, 9, 4);
  const auto a = augment(e, layout);
  for (std::size_t j = 0; j < 9; ++j) {
    BoolMatrix mask = BoolMatrix::Constant(2, 9, false);
    mask.col(static_cast<Eigen::Index>(j)).setConstant(true);
    const auto one = interpolate_sensors(e, layout, mask);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t s = 0; s < 4; ++s) EXPECT_NEAR(a.at(2 + i, j, s), one.at(i, j, s), 1e-12);
  }
}

TEST(ClusteredRepairs, FlagsTightPatchesOnly) {
  const auto layout = fibonacci_layout(256);
  BoolMatrix mask = BoolMatrix::Constant(2, 256, false);
  // Trial 0: the two closest sensors to sensor 0. Trial 1: antipodal-ish pair.
  std::size_t nearest = 1;
  std::size_t farthest = 1;
  for (std::size_t j = 1; j < 256; ++j) {
    if (cos_angle(layout.position(0), layout.position(j)) > cos_angle(layout.position(0), layout.position(nearest))) nearest = j;
    if (cos_angle(layout.position(0), layout.position(j)) < cos_angle(layout.position(0), layout.position(farthest))) farthest = j;
  }
  mask(0, 0) = mask(0, static_cast<Eigen::Index>(nearest)) = true;
  mask(1, 0) = mask(1, static_cast<Eigen::Index>(farthest)) = true;
  const auto w = clustered_repairs(layout, mask);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0].trial, 0u);
  EXPECT_FALSE(describe(w, layout).empty());
}

TEST(Property, OperatorLinearity) {
  for (int c = 0; c < kPropertyCases; ++c) {
    auto rng = case_rng(44, c);
    const std::size_t q = 6 + rng.index(20);
    const auto layout = fibonacci_layout(q);
    std::vector<std::size_t> ids(q);
    std::iota(ids.begin(), ids.end(), 0);
    rng.shuffle(ids);
    const std::size_t ns = 4 + rng.index(q - 4);
    std::vector<std::size_t> src(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(ns));
    // Targets drawn from the whole layout, so they may overlap the sources.
    std::vector<std::size_t> tgt(ids.begin(), ids.end());
    rng.shuffle(tgt);
    tgt.resize(1 + rng.index(4));
    const auto op = build_operator(layout, src, tgt);
    const auto t = static_cast<Eigen::Index>(1 + rng.index(8));
    RowMatrix x(static_cast<Eigen::Index>(ns), t);
    RowMatrix y(static_cast<Eigen::Index>(ns), t);
    for (Eigen::Index r = 0; r < x.rows(); ++r)
      for (Eigen::Index s = 0; s < t; ++s) {
        x(r, s) = rng.normal();
        y(r, s) = rng.normal();
      }
    const double alpha = rng.uniform(-3, 3);
    const double beta = rng.uniform(-3, 3);
    const RowMatrix lhs = op.apply(alpha * x + beta * y);
    const RowMatrix rhs = alpha * op.apply(x) + beta * op.apply(y);
    const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
    ASSERT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-9 * scale) << "case " << c;
  }
}

TEST(Property, OperatorRowSumsAreOne) {
  for (int c = 0; c < kPropertyCases; ++c) {
    auto rng = case_rng(45, c);
    const std::size_t q = 5 + rng.index(40);
    const auto layout = fibonacci_layout(q);
    std::vector<std::size_t> ids(q);
    std::iota(ids.begin(), ids.end(), 0);
    rng.shuffle(ids);
    const std::size_t ns = 4 + rng.index(q - 4);
    std::vector<std::size_t> src(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(ns));
    std::vector<std::size_t> tgt(ids.begin(), ids.end());
    SplineParams p;
    p.stiffness_order = 2 + static_cast<int>(rng.index(4));
    const auto op = build_operator(layout, src, tgt, p);
    const Eigen::VectorXd sums = op.weights.rowwise().sum();
    ASSERT_LE((sums.array() - 1.0).abs().maxCoeff(), 1e-8) << "case " << c;
  }
}

TEST(Property, AugmentDeterministicAndPrefixExact) {
  for (int c = 0; c < kPropertyCases; ++c) {
    auto rng = case_rng(46, c);
    const std::size_t q = 5 + rng.index(8);
    const auto layout = fibonacci_layout(q);
    const std::size_t n = 1 + rng.index(4);
    const auto e = random_epochs(rng, n, q, 2 + rng.index(5));
    const auto a = augment(e, layout);
    const auto b = augment(e, layout);
    ASSERT_EQ(a, b);
    ASSERT_EQ(a.n_trials(), 2 * n);
    for (std::size_t k = 0; k < e.data().size(); ++k) ASSERT_EQ(a.data()[k], e.data()[k]);
    // The first N rows of augmenting the prefix reproduce the prefix again.
    std::vector<std::size_t> head(n);
    std::iota(head.begin(), head.end(), 0);
    const auto again = augment(a.select_trials(head), layout);
    ASSERT_EQ(again, a);
  }
}
