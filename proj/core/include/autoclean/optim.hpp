#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "autoclean/threshold_model.hpp"

namespace autoclean {

/// Evaluated points of a scalar objective over [lo, hi].
struct ObservationSet {
  std::vector<double> xs;
  std::vector<double> ys;
  Bounds bounds{0.0, 1.0};

  /// lo < hi, xs inside bounds, equal lengths, finite ys. Throws ContractError.
  void validate() const;
};

struct SearchResult {
  double x_star = 0.0;
  double y_star = 0.0;
  std::vector<std::pair<double, double>> trace;
  bool degenerate = false;
};

/// Evaluation budget of the sequential search: seeded uniform draws first,
/// then acquisition-driven steps.
struct Budget {
  int n_initial = 10;
  int n_iterations = 40;

  /// Accepts "INIT+ITER" (e.g. "10+40") or a total count ("50" = 10 + 40).
  static Budget parse(const std::string& text);
  std::string to_string() const;
};

struct Posterior {
  std::vector<double> means;
  std::vector<double> stddevs;
};

/// Gaussian-process surrogate with a Matern-5/2 kernel on inputs rescaled to
/// [0, 1] and standardized outputs. The length-scale is picked from a fixed
/// 16-point log grid by marginal likelihood; the signal variance takes its
/// closed-form maximum-likelihood value for each candidate.
class GaussianProcess {
 public:
  explicit GaussianProcess(const ObservationSet& obs);

  Posterior predict(std::span<const double> xs) const;

  double length_scale() const { return length_scale_; }
  double signal_variance() const { return signal_variance_; }

  /// Relative diagonal jitter added to the correlation matrix.
  static constexpr double kJitter = 1e-6;
  static std::vector<double> length_scale_grid();

 private:
  double to_unit(double x) const { return (x - lo_) / (hi_ - lo_); }

  double lo_;
  double hi_;
  double y_mean_ = 0.0;
  double y_scale_ = 0.0;  // zero for constant observations
  double length_scale_ = 1.0;
  double signal_variance_ = 0.0;  // in standardized units
  Eigen::VectorXd unit_xs_;
  Eigen::VectorXd alpha_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
};

/// Matern-5/2 correlation at distance r for length-scale ell.
double matern52(double r, double ell);

Posterior gp_posterior(const ObservationSet& obs, std::span<const double> query);

/// Expected improvement for minimization; zero where sigma is zero.
double expected_improvement(double mean, double stddev, double y_best);
std::vector<double> expected_improvement(const ObservationSet& obs, std::span<const double> query);

/// Sequential Bayesian minimization of a scalar function over [lo, hi]:
/// n_initial seeded uniform draws, then n_iterations points maximizing
/// expected improvement over a 1000-point grid. Deterministic for a seed.
SearchResult minimize_scalar(const std::function<double(double)>& objective, Bounds bounds, int n_initial,
                             int n_iterations, std::uint64_t seed);

inline SearchResult minimize_scalar(const std::function<double(double)>& objective, Bounds bounds,
                                    const Budget& budget, std::uint64_t seed) {
  return minimize_scalar(objective, bounds, budget.n_initial, budget.n_iterations, seed);
}

inline constexpr int kAcquisitionGridSize = 1000;

struct PairEvaluation {
  int rho = 0;
  int kappa = 0;
  double value = 0.0;
};

struct PairSearchResult {
  int rho = 0;
  int kappa = 0;
  double value = 0.0;
  std::vector<PairEvaluation> table;  // in evaluation order: kappa ascending, then rho
};

/// Exhaustive search over pairs with rho < kappa. Ties go to the smaller
/// kappa, then the smaller rho. No admissible pair is a ContractError.
PairSearchResult grid_search_pairs(const std::function<double(int, int)>& objective, std::vector<int> rho_candidates,
                                   std::vector<int> kappa_candidates);

}  // namespace autoclean
