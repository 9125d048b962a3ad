#pragma once

#include <optional>
#include <utility>
#include <vector>

namespace autoclean {

using Bounds = std::pair<double, double>;

/// One evaluated parameter value of a cross-validation curve.
struct CvTracePoint {
  double value = 0.0;
  std::vector<double> fold_errors;
  double mean_error = 0.0;

  bool operator==(const CvTracePoint&) const = default;
};

/// Fitted rejection thresholds. The global variant fills global_tau, the
/// per-sensor variant fills sensor_taus (and rho/kappa when selected).
struct ThresholdModel {
  std::optional<double> global_tau;
  std::optional<Bounds> global_bounds;
  std::optional<std::vector<double>> sensor_taus;
  std::optional<std::vector<Bounds>> sensor_bounds;
  std::optional<int> rho_star;
  std::optional<int> kappa_star;
  std::vector<CvTracePoint> cv_traces;
  bool degenerate = false;

  /// Thresholds inside their bounds, rho_star < kappa_star. Throws ContractError.
  void validate() const;

  bool operator==(const ThresholdModel&) const = default;
};

}  // namespace autoclean
