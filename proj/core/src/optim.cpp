#include "autoclean/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "autoclean/errors.hpp"
#include "autoclean/random.hpp"

namespace autoclean {

void ObservationSet::validate() const {
  if (!(bounds.first < bounds.second)) throw ContractError("observation bounds must satisfy lo < hi");
  if (xs.size() != ys.size()) throw ContractError("observation xs and ys differ in length");
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (!(xs[k] >= bounds.first && xs[k] <= bounds.second)) {
      throw ContractError("observation x = " + std::to_string(xs[k]) + " outside bounds");
    }
    if (!std::isfinite(ys[k])) throw ContractError("observation y is not finite");
  }
}

Budget Budget::parse(const std::string& text) {
  Budget b;
  try {
    const auto plus = text.find('+');
    std::size_t used = 0;
    if (plus == std::string::npos) {
      const int total = std::stoi(text, &used);
      if (used != text.size()) throw ContractError("trailing characters");
      b.n_initial = std::min(total, 10);
      b.n_iterations = total - b.n_initial;
    } else {
      const std::string head = text.substr(0, plus);
      const std::string tail = text.substr(plus + 1);
      b.n_initial = std::stoi(head, &used);
      if (used != head.size()) throw ContractError("trailing characters");
      b.n_iterations = std::stoi(tail, &used);
      if (used != tail.size()) throw ContractError("trailing characters");
    }
  } catch (const std::logic_error&) {
    throw ContractError("budget '" + text + "' is not INIT+ITER or a total count");
  }
  if (b.n_initial < 2 || b.n_iterations < 0) {
    throw ContractError("budget needs at least 2 initial points and nonnegative iterations");
  }
  return b;
}

std::string Budget::to_string() const { return std::to_string(n_initial) + "+" + std::to_string(n_iterations); }

double matern52(double r, double ell) {
  const double s = std::sqrt(5.0) * std::abs(r) / ell;
  return (1.0 + s + s * s / 3.0) * std::exp(-s);
}

std::vector<double> GaussianProcess::length_scale_grid() {
  // 16 points, log-spaced over [0.01, 3] in unit-interval coordinates.
  std::vector<double> grid(16);
  const double a = std::log(0.01);
  const double b = std::log(3.0);
  for (std::size_t k = 0; k < grid.size(); ++k) grid[k] = std::exp(a + (b - a) * static_cast<double>(k) / 15.0);
  return grid;
}

GaussianProcess::GaussianProcess(const ObservationSet& obs) : lo_(obs.bounds.first), hi_(obs.bounds.second) {
  obs.validate();
  const auto n = static_cast<Eigen::Index>(obs.xs.size());
  if (n < 2) throw ContractError("Gaussian process needs at least 2 observations");

  unit_xs_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) unit_xs_[i] = to_unit(obs.xs[static_cast<std::size_t>(i)]);

  const Eigen::Map<const Eigen::VectorXd> ys(obs.ys.data(), n);
  y_mean_ = ys.mean();
  const double var = (ys.array() - y_mean_).square().mean();
  y_scale_ = std::sqrt(var);
  if (!(y_scale_ > 0.0)) {
    y_scale_ = 0.0;
    return;
  }
  const Eigen::VectorXd y = (ys.array() - y_mean_) / y_scale_;

  double best_ll = -std::numeric_limits<double>::infinity();
  for (double ell : length_scale_grid()) {
    Eigen::MatrixXd corr(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b <= a; ++b) {
        const double k = matern52(unit_xs_[a] - unit_xs_[b], ell);
        corr(a, b) = k;
        corr(b, a) = k;
      }
      corr(a, a) += kJitter;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(corr);
    if (llt.info() != Eigen::Success) continue;
    const Eigen::VectorXd alpha = llt.solve(y);
    const double s2 = y.dot(alpha) / static_cast<double>(n);
    if (!(s2 > 0.0)) continue;
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const double ll = -0.5 * static_cast<double>(n) * std::log(s2) - 0.5 * log_det;
    if (ll > best_ll) {
      best_ll = ll;
      length_scale_ = ell;
      signal_variance_ = s2;
      alpha_ = alpha;
      chol_ = std::move(llt);
    }
  }
  if (!std::isfinite(best_ll)) throw NumericalError("Gaussian process fit failed for every length-scale");
}

Posterior GaussianProcess::predict(std::span<const double> xs) const {
  Posterior out;
  out.means.resize(xs.size());
  out.stddevs.resize(xs.size());
  if (y_scale_ == 0.0) {
    std::fill(out.means.begin(), out.means.end(), y_mean_);
    std::fill(out.stddevs.begin(), out.stddevs.end(), 0.0);
    return out;
  }
  const auto n = unit_xs_.size();
  const auto m = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd cross(n, m);
  for (Eigen::Index q = 0; q < m; ++q) {
    const double u = to_unit(xs[static_cast<std::size_t>(q)]);
    for (Eigen::Index i = 0; i < n; ++i) cross(i, q) = matern52(u - unit_xs_[i], length_scale_);
  }
  const Eigen::VectorXd mean = cross.transpose() * alpha_;
  const Eigen::MatrixXd v = chol_.matrixL().solve(cross);
  const Eigen::VectorXd explained = v.colwise().squaredNorm().transpose();
  for (Eigen::Index q = 0; q < m; ++q) {
    const double var = signal_variance_ * std::max(0.0, 1.0 - explained[q]);
    out.means[static_cast<std::size_t>(q)] = y_mean_ + y_scale_ * mean[q];
    out.stddevs[static_cast<std::size_t>(q)] = y_scale_ * std::sqrt(var);
  }
  return out;
}

Posterior gp_posterior(const ObservationSet& obs, std::span<const double> query) {
  return GaussianProcess(obs).predict(query);
}

double expected_improvement(double mean, double stddev, double y_best) {
  if (!(stddev > 0.0)) return 0.0;
  const double improvement = y_best - mean;
  const double z = improvement / stddev;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(0.0, improvement * cdf + stddev * pdf);
}

std::vector<double> expected_improvement(const ObservationSet& obs, std::span<const double> query) {
  const auto post = gp_posterior(obs, query);
  const double y_best = *std::min_element(obs.ys.begin(), obs.ys.end());
  std::vector<double> ei(query.size());
  for (std::size_t q = 0; q < query.size(); ++q) ei[q] = expected_improvement(post.means[q], post.stddevs[q], y_best);
  return ei;
}

SearchResult minimize_scalar(const std::function<double(double)>& objective, Bounds bounds, int n_initial,
                             int n_iterations, std::uint64_t seed) {
  if (n_initial < 2) throw ContractError("minimize_scalar needs n_initial >= 2");
  if (n_iterations < 0) throw ContractError("minimize_scalar needs n_iterations >= 0");
  const auto [lo, hi] = bounds;
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) throw ContractError("search bounds must satisfy lo < hi");

  ObservationSet obs;
  obs.bounds = bounds;
  SearchResult result;

  const auto evaluate = [&](double x) {
    const double y = objective(x);
    if (!std::isfinite(y)) throw ObjectiveError("objective returned a non-finite value at x = " + std::to_string(x));
    obs.xs.push_back(x);
    obs.ys.push_back(y);
    result.trace.emplace_back(x, y);
  };

  for (int e = 0; e < n_initial; ++e) {
    KeyedRng rng(seed, {stream_key(Stream::optimizer), static_cast<std::uint64_t>(e)});
    evaluate(std::clamp(rng.uniform(lo, hi), lo, hi));
  }

  std::vector<double> grid(kAcquisitionGridSize);
  for (int k = 0; k < kAcquisitionGridSize; ++k) {
    grid[static_cast<std::size_t>(k)] =
        std::clamp(lo + (hi - lo) * static_cast<double>(k) / (kAcquisitionGridSize - 1), lo, hi);
  }
  std::vector<std::size_t> order(grid.size());

  for (int it = 0; it < n_iterations; ++it) {
    const auto ei = expected_improvement(obs, grid);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&ei](std::size_t a, std::size_t b) { return ei[a] > ei[b]; });
    double next = grid[order.front()];
    for (auto idx : order) {
      const double x = grid[idx];
      const bool seen = std::any_of(obs.xs.begin(), obs.xs.end(), [x](double v) { return std::abs(v - x) < 1e-9; });
      if (!seen) {
        next = x;
        break;
      }
    }
    evaluate(next);
  }

  const auto best = std::min_element(obs.ys.begin(), obs.ys.end());
  const auto k = static_cast<std::size_t>(best - obs.ys.begin());
  result.x_star = obs.xs[k];
  result.y_star = obs.ys[k];
  return result;
}

PairSearchResult grid_search_pairs(const std::function<double(int, int)>& objective, std::vector<int> rho_candidates,
                                   std::vector<int> kappa_candidates) {
  if (rho_candidates.empty() || kappa_candidates.empty()) throw ContractError("candidate lists must be nonempty");
  std::sort(rho_candidates.begin(), rho_candidates.end());
  rho_candidates.erase(std::unique(rho_candidates.begin(), rho_candidates.end()), rho_candidates.end());
  std::sort(kappa_candidates.begin(), kappa_candidates.end());
  kappa_candidates.erase(std::unique(kappa_candidates.begin(), kappa_candidates.end()), kappa_candidates.end());

  PairSearchResult result;
  bool found = false;
  for (int kappa : kappa_candidates) {
    for (int rho : rho_candidates) {
      if (!(rho < kappa)) continue;
      const double v = objective(rho, kappa);
      result.table.push_back({rho, kappa, v});
      // Iteration order already encodes the tie rule, so only strict improvements win.
      if (!found || v < result.value) {
        result.rho = rho;
        result.kappa = kappa;
        result.value = v;
        found = true;
      }
    }
  }
  if (!found) throw ContractError("no admissible (rho, kappa) pair with rho < kappa");
  return result;
}

}  // namespace autoclean
