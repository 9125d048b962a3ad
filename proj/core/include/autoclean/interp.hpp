#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "autoclean/epochs.hpp"

namespace autoclean {

/// Spherical-spline settings. stiffness_order is the exponent m in the
/// Legendre coefficients (2n+1) / (n^m (n+1)^m), n_terms the truncation of the
/// series and reg the ridge added to the source-source kernel diagonal.
struct SplineParams {
  int stiffness_order = 4;
  int n_terms = 50;
  double reg = 1e-5;
};

/// Spline kernel g(cos theta) = 1/(4 pi) sum_n (2n+1)/(n^m (n+1)^m) P_n(cos theta).
double spline_kernel(double cos_theta, const SplineParams& params = {});

/// Linear map from signals at source sensors to predictions at target sensors.
struct InterpolationOperator {
  std::vector<std::size_t> source_ids;
  std::vector<std::size_t> target_ids;
  Eigen::MatrixXd weights;  // targets x sources

  /// Predicts target series from a (sources x times) block.
  RowMatrix apply(const Eigen::Ref<const RowMatrix>& sources) const { return weights * sources; }
};

/// Solves the bordered spherical-spline system for the given sensors. Targets
/// may overlap sources. Fewer than four sources is a GeometryError, a system
/// that stays singular after regularization a NumericalError.
InterpolationOperator build_operator(const SensorLayout& layout, std::span<const std::size_t> sources,
                                     std::span<const std::size_t> targets, const SplineParams& params = {});

/// Replaces every flagged (trial, sensor) series with its prediction from the
/// unflagged sensors of the same trial. Unflagged samples are copied
/// bit-for-bit. A trial with fewer than four unflagged sensors is a
/// RepairError.
EpochsTensor interpolate_sensors(const EpochsTensor& epochs, const SensorLayout& layout, const BoolMatrix& bad,
                                 const SplineParams& params = {});

/// Returns 2N trials: the originals followed by one copy per trial in which
/// each sensor is replaced by its leave-one-sensor-out prediction. Copies
/// carry origin flag true.
EpochsTensor augment(const EpochsTensor& epochs, const SensorLayout& layout, const SplineParams& params = {});

/// A trial whose flagged sensors sit within a small angular patch, where
/// spline repair is unreliable.
struct ClusterWarning {
  std::size_t trial = 0;
  std::vector<std::size_t> sensors;
  double diameter_deg = 0.0;
};

/// Trials with two or more flagged sensors whose largest pairwise angular
/// separation is below diameter_deg.
std::vector<ClusterWarning> clustered_repairs(const SensorLayout& layout, const BoolMatrix& bad,
                                              double diameter_deg = 20.0);

std::string describe(const std::vector<ClusterWarning>& warnings, const SensorLayout& layout);

}  // namespace autoclean
