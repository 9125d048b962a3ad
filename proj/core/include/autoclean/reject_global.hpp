#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "autoclean/epochs.hpp"
#include "autoclean/metrics.hpp"
#include "autoclean/optim.hpp"
#include "autoclean/reject_log.hpp"
#include "autoclean/threshold_model.hpp"

namespace autoclean {

/// Assignment of N trials to K cross-validation folds.
struct FoldPlan {
  int k = 0;
  std::vector<int> assignments;

  std::vector<std::size_t> training(int fold) const;
  std::vector<std::size_t> validation(int fold) const;
};

/// Seeded shuffle, then round-robin assignment. With strata the shuffle and
/// round-robin run per stratum (false first), continuing the fold counter so
/// overall sizes still differ by at most one. K > n is a ContractError.
FoldPlan make_folds(std::size_t n, int k, std::uint64_t seed, const std::optional<std::vector<bool>>& strata = {});

struct CvResult {
  double mean_error = 0.0;
  std::vector<double> fold_errors;
};

/// Robust cross-validation of a rejection threshold over a trials x features
/// matrix. Per fold, training trials whose score is <= tau are averaged and
/// compared (Frobenius norm) with the median of all validation trials.
class ThresholdCv {
 public:
  ThresholdCv(RowMatrix features, std::vector<double> trial_scores, FoldPlan folds);

  CvResult evaluate(double tau) const;
  const FoldPlan& folds() const { return folds_; }

 private:
  RowMatrix features_;
  std::vector<double> scores_;
  FoldPlan folds_;
  std::vector<std::vector<std::size_t>> training_;
  std::vector<Eigen::RowVectorXd> validation_median_;
};

/// Cross-validation error of one global threshold, using each trial's largest
/// peak-to-peak amplitude across sensors as its score.
CvResult cv_error_global(const EpochsTensor& epochs, const AmplitudeMatrix& amplitudes, const FoldPlan& folds,
                         double tau);

struct GlobalFit {
  ThresholdModel model;
  SearchResult search;
};

inline constexpr int kDefaultFolds = 5;

/// Learns a single threshold for all sensors. Bounds span the per-trial
/// maximum amplitudes. Constant amplitudes yield a degenerate fit at that value.
GlobalFit fit_global(const EpochsTensor& epochs, int k, std::uint64_t seed, const Budget& budget = {});

/// Rejects trial i iff its largest amplitude exceeds tau. Cells over tau are
/// logged as bad_uninterpolated; nothing is interpolated.
RejectLog apply_global(const EpochsTensor& epochs, double tau);

}  // namespace autoclean
