#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "autoclean/epochs.hpp"
#include "autoclean/interp.hpp"

namespace autoclean {

enum class FasterCriterion { variance, correlation, hurst, kurtosis, line_noise };
inline constexpr std::size_t kFasterCriteria = 5;
std::string_view to_string(FasterCriterion c);

struct FasterReport {
  Eigen::MatrixXd metrics;  // Q x 5, columns in FasterCriterion order
  Eigen::MatrixXd zscores;  // Q x 5
  std::array<std::vector<std::size_t>, kFasterCriteria> flagged;
  std::vector<std::size_t> union_flagged;
};

inline constexpr double kFasterZThreshold = 3.0;

/// Population z-scores of one column; zero where the column is constant.
Eigen::VectorXd zscore(const Eigen::VectorXd& values);

/// Hurst exponent by rescaled range over dyadic windows 8, 16, ... <= T/2,
/// windows taken inside each trial. Zero when fewer than two windows are usable.
double hurst_exponent(const EpochsTensor& epochs, std::size_t sensor);

/// Power within mains_hz +- 2 Hz over total power, from per-trial demeaned
/// periodograms summed over trials.
double line_noise_ratio(const EpochsTensor& epochs, std::size_t sensor, double mains_hz);

/// Bad-sensor step of FASTER: five statistics per sensor over the
/// concatenated trials, flagged where |z| > 3.
FasterReport faster_bad_sensors(const EpochsTensor& epochs, const SensorLayout& layout, double mains_hz = 50.0);

/// Sensor Noise Suppression: each sensor is replaced by its projection onto
/// the span of its n most correlated neighbors, all computed from the input.
EpochsTensor sns_clean(const EpochsTensor& epochs, int n_neighbors = 8);

struct RansacParams {
  int n_resamples = 50;
  double fraction = 0.25;
  double corr_threshold = 0.75;
  double unbroken_time = 0.4;
  std::uint64_t seed = 0;
  int max_retries = 100;
  SplineParams spline;
};

struct RansacResult {
  BoolMatrix per_trial_bad;      // N x Q
  Eigen::MatrixXd correlations;  // N x Q
  std::vector<std::size_t> global_bad;
};

/// Pearson correlation; zero when either series has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

RansacResult ransac_bad_sensors(const EpochsTensor& epochs, const SensorLayout& layout, const RansacParams& params = {});

/// Interpolates the given sensors in every trial.
EpochsTensor interpolate_bad_sensors(const EpochsTensor& epochs, const SensorLayout& layout,
                                     std::span<const std::size_t> sensors, const SplineParams& spline = {});

}  // namespace autoclean
