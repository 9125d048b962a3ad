#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "autoclean/epochs.hpp"
#include "autoclean/interp.hpp"
#include "autoclean/metrics.hpp"
#include "autoclean/optim.hpp"
#include "autoclean/reject_global.hpp"
#include "autoclean/reject_log.hpp"
#include "autoclean/threshold_model.hpp"

namespace autoclean {

/// ceil(f * Q) for f = 0.1, 0.2, ..., 1.0, deduplicated.
std::vector<int> default_kappa_candidates(std::size_t n_sensors);
/// {1, 2, 4, 8, 16, 32} restricted to values below Q.
std::vector<int> default_rho_candidates(std::size_t n_sensors);

/// Fixed settings of the per-sensor fit.
struct LocalConfig {
  int k = kDefaultFolds;
  std::uint64_t seed = 0;
  Budget budget;
  std::vector<int> rho_candidates;    // empty: defaults
  std::vector<int> kappa_candidates;  // empty: defaults
  SplineParams spline;
  int n_jobs = 1;  // worker threads for the per-sensor searches
};

/// C_ij = A_ij > tau_j.
BoolMatrix indicator(const AmplitudeMatrix& amplitudes, std::span<const double> taus);

/// s_ij = A_ij where flagged, kNoScore elsewhere.
Eigen::MatrixXd sensor_scores(const AmplitudeMatrix& amplitudes, const BoolMatrix& bad);

/// Turns the indicator into verdicts: trials with at least kappa bad sensors
/// are rejected; otherwise the min(rho, bad) highest-scoring bad sensors are
/// interpolated (ties to the lower index) and the rest stay bad_uninterpolated.
RejectLog repair_plan(const BoolMatrix& bad, const Eigen::MatrixXd& scores, int rho, int kappa);

struct SensorThresholds {
  std::vector<double> taus;
  std::vector<Bounds> bounds;
  std::vector<SearchResult> searches;
  std::vector<std::size_t> excluded;  // flat sensors, never flagged
};

/// Bayesian search for one sensor's threshold. `series` holds that sensor's
/// augmented trials (rows) and `amplitudes` their peak-to-peak values.
SearchResult fit_single_sensor_threshold(const RowMatrix& series, std::span<const double> amplitudes,
                                         const FoldPlan& folds, const Budget& budget, std::uint64_t stream_seed);

/// Per-sensor thresholds learned on the augmented data (originals plus
/// leave-one-sensor-out interpolations), folds stratified by origin.
SensorThresholds fit_sensor_thresholds(const EpochsTensor& epochs, const SensorLayout& layout,
                                       const LocalConfig& config);

/// Cross-validation of a (rho, kappa) pair on original trials. Training trials
/// are repaired per the plan before averaging; validation medians use the
/// unrepaired data. Repairs are cached per plan across folds.
class LocalCv {
 public:
  LocalCv(const EpochsTensor& epochs, const SensorLayout& layout, std::span<const double> taus, FoldPlan folds,
          SplineParams spline = {});

  CvResult evaluate(int rho, int kappa) const;

 private:
  const EpochsTensor& epochs_;
  const SensorLayout& layout_;
  SplineParams spline_;
  FoldPlan folds_;
  BoolMatrix bad_;
  Eigen::MatrixXd scores_;
  std::vector<std::vector<std::size_t>> training_;
  std::vector<Eigen::RowVectorXd> validation_median_;
};

double cv_error_local(const EpochsTensor& epochs, const SensorLayout& layout, std::span<const double> taus, int rho,
                      int kappa, const FoldPlan& folds, const SplineParams& spline = {});

/// Everything needed to re-apply a per-sensor fit to new trials.
struct LocalModel {
  std::vector<std::string> sensor_names;
  std::vector<double> sensor_taus;
  std::vector<Bounds> sensor_bounds;
  int rho_star = 0;
  int kappa_star = 1;
  int k = kDefaultFolds;
  std::uint64_t seed = 0;
  Budget budget;
  SplineParams spline;
  std::vector<PairEvaluation> cv_table;
  std::vector<SearchResult> threshold_searches;
  std::vector<std::string> excluded_sensors;

  ThresholdModel thresholds() const;
  /// Shapes agree, taus inside bounds, rho < kappa. Throws ContractError.
  void validate() const;
};

LocalModel fit_local(const EpochsTensor& epochs, const SensorLayout& layout, const LocalConfig& config = {});

/// Reject log of the model's plan on these trials. Sensor names must match
/// the model (ModelMismatchError otherwise).
RejectLog plan_local(const EpochsTensor& epochs, const SensorLayout& layout, const LocalModel& model);

/// Retained trials with their bad_interpolated cells repaired. Other cells
/// are copied bit for bit. All trials rejected is a DataError.
EpochsTensor apply_reject_log(const EpochsTensor& epochs, const SensorLayout& layout, const RejectLog& log,
                              const SplineParams& spline = {});

struct TransformResult {
  EpochsTensor cleaned;
  RejectLog log;
};

TransformResult transform(const EpochsTensor& epochs, const SensorLayout& layout, const LocalModel& model);

std::string encode_local_model(const LocalModel& model);
LocalModel decode_local_model(const std::string& text);
void save_local_model(const LocalModel& model, const std::filesystem::path& path);
LocalModel load_local_model(const std::filesystem::path& path);

}  // namespace autoclean
