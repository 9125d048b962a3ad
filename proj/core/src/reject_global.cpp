#include "autoclean/reject_global.hpp"

#include <algorithm>
#include <numeric>

#include "autoclean/errors.hpp"
#include "autoclean/random.hpp"
#include "format_util.hpp"

namespace autoclean {

std::vector<std::size_t> FoldPlan::training(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::validation(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == fold) out.push_back(i);
  }
  return out;
}

FoldPlan make_folds(std::size_t n, int k, std::uint64_t seed, const std::optional<std::vector<bool>>& strata) {
  if (k < 2) throw ContractError("need at least 2 folds, got " + std::to_string(k));
  if (static_cast<std::size_t>(k) > n) {
    throw ContractError("cannot split " + std::to_string(n) + " trials into " + std::to_string(k) + " folds");
  }
  if (strata && strata->size() != n) throw ContractError("strata length does not match trial count");

  FoldPlan plan;
  plan.k = k;
  plan.assignments.assign(n, 0);
  KeyedRng rng(seed, {stream_key(Stream::folds)});
  std::size_t counter = 0;
  const auto assign = [&](std::vector<std::size_t> members) {
    rng.shuffle(members);
    for (auto i : members) plan.assignments[i] = static_cast<int>(counter++ % static_cast<std::size_t>(k));
  };
  if (!strata) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    assign(std::move(all));
  } else {
    for (bool level : {false, true}) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < n; ++i) {
        if ((*strata)[i] == level) members.push_back(i);
      }
      assign(std::move(members));
    }
  }
  return plan;
}

ThresholdCv::ThresholdCv(RowMatrix features, std::vector<double> trial_scores, FoldPlan folds)
    : features_(std::move(features)), scores_(std::move(trial_scores)), folds_(std::move(folds)) {
  if (static_cast<std::size_t>(features_.rows()) != scores_.size() || scores_.size() != folds_.assignments.size()) {
    throw ContractError("features, scores and folds disagree on the trial count");
  }
  for (int f = 0; f < folds_.k; ++f) {
    const auto val = folds_.validation(f);
    if (val.empty()) throw ContractError("fold " + std::to_string(f) + " has no validation trials");
    training_.push_back(folds_.training(f));
    validation_median_.push_back(median_of_rows(features_, val));
  }
}

CvResult ThresholdCv::evaluate(double tau) const {
  CvResult out;
  out.fold_errors.reserve(training_.size());
  std::vector<std::size_t> good;
  for (std::size_t f = 0; f < training_.size(); ++f) {
    good.clear();
    for (auto i : training_[f]) {
      if (scores_[i] <= tau) good.push_back(i);
    }
    out.fold_errors.push_back((mean_of_rows(features_, good) - validation_median_[f]).norm());
  }
  out.mean_error = std::accumulate(out.fold_errors.begin(), out.fold_errors.end(), 0.0) /
                   static_cast<double>(out.fold_errors.size());
  return out;
}

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

CvResult cv_error_global(const EpochsTensor& epochs, const AmplitudeMatrix& amplitudes, const FoldPlan& folds,
                         double tau) {
  return ThresholdCv(epochs.as_matrix(), to_std(amplitudes.trial_max()), folds).evaluate(tau);
}

GlobalFit fit_global(const EpochsTensor& epochs, int k, std::uint64_t seed, const Budget& budget) {
  const auto amplitudes = peak_to_peak(epochs);
  const auto scores = to_std(amplitudes.trial_max());
  const ThresholdCv cv(epochs.as_matrix(), scores, make_folds(epochs.n_trials(), k, seed));
  const Bounds bounds{*std::min_element(scores.begin(), scores.end()), *std::max_element(scores.begin(), scores.end())};

  GlobalFit fit;
  fit.model.global_bounds = bounds;
  const auto record = [&fit, &cv](double tau) {
    auto r = cv.evaluate(tau);
    fit.model.cv_traces.push_back({tau, r.fold_errors, r.mean_error});
    return r.mean_error;
  };

  if (!(bounds.first < bounds.second)) {
    const double y = record(bounds.first);
    fit.search.x_star = bounds.first;
    fit.search.y_star = y;
    fit.search.trace.emplace_back(bounds.first, y);
    fit.search.degenerate = true;
    fit.model.degenerate = true;
  } else {
    fit.search = minimize_scalar(record, bounds, budget, derive_seed(seed, {stream_key(Stream::optimizer)}));
  }
  fit.model.global_tau = fit.search.x_star;
  return fit;
}

RejectLog apply_global(const EpochsTensor& epochs, double tau) {
  const auto amplitudes = peak_to_peak(epochs);
  auto log = RejectLog::all_good(epochs.n_trials(), epochs.n_sensors());
  for (std::size_t i = 0; i < log.n_trials; ++i) {
    bool over = false;
    for (std::size_t j = 0; j < log.n_sensors; ++j) {
      const double a = amplitudes.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (a > tau) {
        over = true;
        log.cell(i, j) = CellState::bad_uninterpolated;
        log.scores[i * log.n_sensors + j] = a;
      }
    }
    if (over) log.trial_verdicts[i] = Verdict::rejected;
  }
  log.provenance["method"] = "global";
  log.provenance["tau"] = detail::format_real(tau);
  log.provenance["rho_star"] = "0";
  return log;
}

}  // namespace autoclean
