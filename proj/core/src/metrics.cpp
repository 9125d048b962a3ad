#include "autoclean/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "autoclean/errors.hpp"

namespace autoclean {

namespace {

void check_selection(std::size_t n_trials, std::span<const std::size_t> trials) {
  std::vector<bool> seen(n_trials, false);
  for (auto i : trials) {
    if (i >= n_trials) {
      throw IndexError("trial index " + std::to_string(i) + " out of range [0, " + std::to_string(n_trials) + ")");
    }
    if (seen[i]) throw ContractError("trial index " + std::to_string(i) + " selected twice");
    seen[i] = true;
  }
}

void check_same_shape(const EvokedMatrix& a, const EvokedMatrix& b) {
  if (a.values.rows() != b.values.rows() || a.values.cols() != b.values.cols()) {
    throw ContractError("evoked shapes differ: " + std::to_string(a.values.rows()) + "x" +
                        std::to_string(a.values.cols()) + " vs " + std::to_string(b.values.rows()) + "x" +
                        std::to_string(b.values.cols()));
  }
}

EvokedMatrix reshape(const EpochsTensor& epochs, const Eigen::RowVectorXd& flat, std::size_t n_contributing) {
  EvokedMatrix out;
  out.values = ConstRowMap(flat.data(), static_cast<Eigen::Index>(epochs.n_sensors()),
                           static_cast<Eigen::Index>(epochs.n_times()));
  out.n_contributing = n_contributing;
  return out;
}

}  // namespace

AmplitudeMatrix peak_to_peak(const EpochsTensor& epochs) {
  AmplitudeMatrix out;
  out.values.resize(static_cast<Eigen::Index>(epochs.n_trials()), static_cast<Eigen::Index>(epochs.n_sensors()));
  for (std::size_t i = 0; i < epochs.n_trials(); ++i) {
    for (std::size_t j = 0; j < epochs.n_sensors(); ++j) {
      const auto s = epochs.series(i, j);
      const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = *hi - *lo;
    }
  }
  return out;
}

Eigen::RowVectorXd mean_of_rows(const Eigen::Ref<const RowMatrix>& matrix, std::span<const std::size_t> rows) {
  Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(matrix.cols());
  if (rows.empty()) return acc;
  for (auto i : rows) acc += matrix.row(static_cast<Eigen::Index>(i));
  return acc / static_cast<double>(rows.size());
}

double median_inplace(std::span<double> values) {
  const std::size_t n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  const double upper = *mid;
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

Eigen::RowVectorXd median_of_rows(const Eigen::Ref<const RowMatrix>& matrix, std::span<const std::size_t> rows) {
  if (rows.empty()) throw ContractError("median of an empty trial set");
  Eigen::RowVectorXd out(matrix.cols());
  std::vector<double> column(rows.size());
  for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
    for (std::size_t k = 0; k < rows.size(); ++k) column[k] = matrix(static_cast<Eigen::Index>(rows[k]), c);
    out[c] = median_inplace(column);
  }
  return out;
}

EvokedMatrix trial_mean(const EpochsTensor& epochs, std::span<const std::size_t> trials) {
  check_selection(epochs.n_trials(), trials);
  return reshape(epochs, mean_of_rows(epochs.as_matrix(), trials), trials.size());
}

EvokedMatrix trial_median(const EpochsTensor& epochs, std::span<const std::size_t> trials) {
  if (trials.empty()) throw ContractError("median of an empty trial set");
  check_selection(epochs.n_trials(), trials);
  return reshape(epochs, median_of_rows(epochs.as_matrix(), trials), trials.size());
}

EvokedMatrix evoked(const EpochsTensor& epochs) {
  std::vector<std::size_t> all(epochs.n_trials());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return trial_mean(epochs, all);
}

double eval_linf(const EvokedMatrix& a, const EvokedMatrix& b) {
  check_same_shape(a, b);
  if (a.values.size() == 0) return 0.0;
  return (a.values - b.values).cwiseAbs().maxCoeff();
}

double eval_l2(const EvokedMatrix& a, const EvokedMatrix& b) {
  check_same_shape(a, b);
  return (a.values - b.values).norm();
}

}  // namespace autoclean
