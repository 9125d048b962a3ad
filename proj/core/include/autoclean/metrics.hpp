#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Core>

#include "autoclean/epochs.hpp"

namespace autoclean {

/// Peak-to-peak amplitude per (trial, sensor): rows = trials, cols = sensors.
struct AmplitudeMatrix {
  Eigen::MatrixXd values;

  Eigen::Index n_trials() const { return values.rows(); }
  Eigen::Index n_sensors() const { return values.cols(); }
  /// Largest amplitude of each trial across sensors.
  Eigen::VectorXd trial_max() const { return values.rowwise().maxCoeff(); }
};

/// Sensors x times average (or median) over some set of trials.
struct EvokedMatrix {
  RowMatrix values;
  std::size_t n_contributing = 0;
};

AmplitudeMatrix peak_to_peak(const EpochsTensor& epochs);

/// Element-wise mean over the selected trials. An empty selection yields the
/// all-zero matrix with n_contributing = 0. Duplicate indices are a
/// ContractError, out-of-range ones an IndexError.
EvokedMatrix trial_mean(const EpochsTensor& epochs, std::span<const std::size_t> trials);

/// Element-wise median; even counts take the midpoint of the central pair.
EvokedMatrix trial_median(const EpochsTensor& epochs, std::span<const std::size_t> trials);

/// Evoked response over every trial.
EvokedMatrix evoked(const EpochsTensor& epochs);

/// max |a - b| over all elements.
double eval_linf(const EvokedMatrix& a, const EvokedMatrix& b);
/// Frobenius norm of a - b.
double eval_l2(const EvokedMatrix& a, const EvokedMatrix& b);

// Row-wise building blocks shared with the cross-validation code, which also
// runs on single-sensor (trials x times) matrices.

/// Mean of the selected rows; zero vector when rows is empty.
Eigen::RowVectorXd mean_of_rows(const Eigen::Ref<const RowMatrix>& matrix, std::span<const std::size_t> rows);
/// Per-column median of the selected rows (rows must be nonempty).
Eigen::RowVectorXd median_of_rows(const Eigen::Ref<const RowMatrix>& matrix, std::span<const std::size_t> rows);

/// Median of the values, reordering them. Values must be nonempty.
double median_inplace(std::span<double> values);

}  // namespace autoclean
