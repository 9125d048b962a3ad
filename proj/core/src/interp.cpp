#include "autoclean/interp.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include <Eigen/LU>

#include "autoclean/errors.hpp"

namespace autoclean {

namespace {

std::vector<double> legendre_coefficients(const SplineParams& params) {
  std::vector<double> c(static_cast<std::size_t>(params.n_terms) + 1, 0.0);
  for (int n = 1; n <= params.n_terms; ++n) {
    const double nn = n;
    c[static_cast<std::size_t>(n)] = (2.0 * nn + 1.0) /
                                     (std::pow(nn, params.stiffness_order) * std::pow(nn + 1.0, params.stiffness_order) *
                                      4.0 * std::numbers::pi);
  }
  return c;
}

double evaluate_series(double x, const std::vector<double>& coefs) {
  // Three-term recurrence: (n+1) P_{n+1} = (2n+1) x P_n - n P_{n-1}.
  double p_prev = 1.0;
  double p = x;
  double sum = coefs.size() > 1 ? coefs[1] * p : 0.0;
  for (std::size_t n = 1; n + 1 < coefs.size(); ++n) {
    const double nn = static_cast<double>(n);
    const double p_next = ((2.0 * nn + 1.0) * x * p - nn * p_prev) / (nn + 1.0);
    p_prev = p;
    p = p_next;
    sum += coefs[n + 1] * p;
  }
  return sum;
}

void check_ids(std::span<const std::size_t> ids, std::size_t n, const char* what) {
  std::vector<bool> seen(n, false);
  for (auto id : ids) {
    if (id >= n) throw IndexError(std::string(what) + " sensor index " + std::to_string(id) + " out of range");
    if (seen[id]) throw ContractError(std::string(what) + " sensor index " + std::to_string(id) + " repeated");
    seen[id] = true;
  }
}

}  // namespace

double spline_kernel(double cos_theta, const SplineParams& params) {
  return evaluate_series(std::clamp(cos_theta, -1.0, 1.0), legendre_coefficients(params));
}

InterpolationOperator build_operator(const SensorLayout& layout, std::span<const std::size_t> sources,
                                     std::span<const std::size_t> targets, const SplineParams& params) {
  if (sources.size() < 4) {
    throw GeometryError("spherical spline needs at least 4 source sensors, got " + std::to_string(sources.size()));
  }
  if (params.stiffness_order < 1 || params.n_terms < 1 || params.reg < 0.0) {
    throw ContractError("invalid spline parameters");
  }
  check_ids(sources, layout.size(), "source");
  check_ids(targets, layout.size(), "target");

  const auto coefs = legendre_coefficients(params);
  const auto n = static_cast<Eigen::Index>(sources.size());
  const auto m = static_cast<Eigen::Index>(targets.size());

  // Bordered system [G + reg I, 1; 1^T, 0] keeps the constant term exact.
  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(n + 1, n + 1);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a; b < n; ++b) {
      const double g = evaluate_series(
          cos_angle(layout.position(sources[static_cast<std::size_t>(a)]), layout.position(sources[static_cast<std::size_t>(b)])),
          coefs);
      system(a, b) = g;
      system(b, a) = g;
    }
    system(a, a) += params.reg;
    system(a, n) = 1.0;
    system(n, a) = 1.0;
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible()) throw NumericalError("spherical spline system is singular");
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + 1, n);
  rhs.topRows(n).setIdentity();
  const Eigen::MatrixXd solution = lu.solve(rhs);
  if (!solution.allFinite()) throw NumericalError("spherical spline solve produced non-finite weights");

  Eigen::MatrixXd cross(m, n + 1);
  for (Eigen::Index t = 0; t < m; ++t) {
    const auto& pt = layout.position(targets[static_cast<std::size_t>(t)]);
    for (Eigen::Index s = 0; s < n; ++s) {
      cross(t, s) = evaluate_series(cos_angle(pt, layout.position(sources[static_cast<std::size_t>(s)])), coefs);
    }
    cross(t, n) = 1.0;
  }

  InterpolationOperator op;
  op.source_ids.assign(sources.begin(), sources.end());
  op.target_ids.assign(targets.begin(), targets.end());
  op.weights = cross * solution;
  return op;
}

EpochsTensor interpolate_sensors(const EpochsTensor& epochs, const SensorLayout& layout, const BoolMatrix& bad,
                                 const SplineParams& params) {
  const auto n_trials = epochs.n_trials();
  const auto n_sensors = epochs.n_sensors();
  if (layout.size() != n_sensors) throw ContractError("layout size does not match sensor count");
  if (static_cast<std::size_t>(bad.rows()) != n_trials || static_cast<std::size_t>(bad.cols()) != n_sensors) {
    throw ContractError("bad-sensor mask shape does not match epochs");
  }

  std::vector<double> data(epochs.data().begin(), epochs.data().end());
  std::map<std::vector<bool>, InterpolationOperator> cache;
  const auto n_times = static_cast<Eigen::Index>(epochs.n_times());

  for (std::size_t i = 0; i < n_trials; ++i) {
    std::vector<bool> pattern(n_sensors);
    std::vector<std::size_t> good;
    std::vector<std::size_t> flagged;
    for (std::size_t j = 0; j < n_sensors; ++j) {
      pattern[j] = bad(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      (pattern[j] ? flagged : good).push_back(j);
    }
    if (flagged.empty()) continue;
    if (good.size() < 4) {
      throw RepairError("trial " + std::to_string(i) + " has only " + std::to_string(good.size()) +
                        " good sensors; at least 4 are needed to interpolate");
    }
    auto it = cache.find(pattern);
    if (it == cache.end()) it = cache.emplace(pattern, build_operator(layout, good, flagged, params)).first;
    const auto& op = it->second;

    const auto trial = epochs.trial(i);
    RowMatrix src(static_cast<Eigen::Index>(good.size()), n_times);
    for (std::size_t k = 0; k < good.size(); ++k) src.row(static_cast<Eigen::Index>(k)) = trial.row(static_cast<Eigen::Index>(good[k]));
    const RowMatrix pred = op.apply(src);
    RowMap out(data.data() + i * epochs.n_features(), static_cast<Eigen::Index>(n_sensors), n_times);
    for (std::size_t k = 0; k < flagged.size(); ++k) out.row(static_cast<Eigen::Index>(flagged[k])) = pred.row(static_cast<Eigen::Index>(k));
  }
  return EpochsTensor(std::move(data), n_trials, n_sensors, epochs.n_times(), epochs.sfreq_hz(), epochs.unit(),
                      epochs.origin_flags());
}

EpochsTensor augment(const EpochsTensor& epochs, const SensorLayout& layout, const SplineParams& params) {
  const auto n_sensors = epochs.n_sensors();
  if (layout.size() != n_sensors) throw ContractError("layout size does not match sensor count");

  // One leave-one-out operator per held-out sensor; they depend on the layout only.
  std::vector<InterpolationOperator> ops;
  ops.reserve(n_sensors);
  for (std::size_t j = 0; j < n_sensors; ++j) {
    std::vector<std::size_t> others;
    for (std::size_t k = 0; k < n_sensors; ++k) {
      if (k != j) others.push_back(k);
    }
    const std::size_t target[] = {j};
    ops.push_back(build_operator(layout, others, target, params));
  }

  const auto n_trials = epochs.n_trials();
  const auto n_times = static_cast<Eigen::Index>(epochs.n_times());
  std::vector<double> data(epochs.data().begin(), epochs.data().end());
  data.resize(2 * data.size());
  std::vector<bool> flags(epochs.origin_flags());
  flags.resize(2 * n_trials, true);

  RowMatrix src(static_cast<Eigen::Index>(n_sensors - 1), n_times);
  for (std::size_t i = 0; i < n_trials; ++i) {
    const auto trial = epochs.trial(i);
    RowMap out(data.data() + (n_trials + i) * epochs.n_features(), static_cast<Eigen::Index>(n_sensors), n_times);
    for (std::size_t j = 0; j < n_sensors; ++j) {
      const auto& op = ops[j];
      for (std::size_t k = 0; k < op.source_ids.size(); ++k) {
        src.row(static_cast<Eigen::Index>(k)) = trial.row(static_cast<Eigen::Index>(op.source_ids[k]));
      }
      out.row(static_cast<Eigen::Index>(j)) = op.apply(src);
    }
  }
  return EpochsTensor(std::move(data), 2 * n_trials, n_sensors, epochs.n_times(), epochs.sfreq_hz(), epochs.unit(),
                      std::move(flags));
}

std::vector<ClusterWarning> clustered_repairs(const SensorLayout& layout, const BoolMatrix& bad, double diameter_deg) {
  std::vector<ClusterWarning> out;
  for (Eigen::Index i = 0; i < bad.rows(); ++i) {
    std::vector<std::size_t> flagged;
    for (Eigen::Index j = 0; j < bad.cols(); ++j) {
      if (bad(i, j)) flagged.push_back(static_cast<std::size_t>(j));
    }
    if (flagged.size() < 2) continue;
    double min_cos = 1.0;
    for (std::size_t a = 0; a < flagged.size(); ++a) {
      for (std::size_t b = a + 1; b < flagged.size(); ++b) {
        min_cos = std::min(min_cos, cos_angle(layout.position(flagged[a]), layout.position(flagged[b])));
      }
    }
    const double diameter = std::acos(min_cos) * 180.0 / std::numbers::pi;
    if (diameter < diameter_deg) out.push_back({static_cast<std::size_t>(i), std::move(flagged), diameter});
  }
  return out;
}

std::string describe(const std::vector<ClusterWarning>& warnings, const SensorLayout& layout) {
  std::ostringstream ss;
  for (std::size_t w = 0; w < warnings.size(); ++w) {
    if (w > 0) ss << ";";
    ss << "trial " << warnings[w].trial << ":";
    for (std::size_t k = 0; k < warnings[w].sensors.size(); ++k) {
      ss << (k ? "," : "") << layout.name(warnings[w].sensors[k]);
    }
  }
  return ss.str();
}

}  // namespace autoclean
