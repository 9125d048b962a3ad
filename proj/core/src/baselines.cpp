#include "autoclean/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "autoclean/errors.hpp"
#include "autoclean/metrics.hpp"
#include "autoclean/random.hpp"

namespace autoclean {

std::string_view to_string(FasterCriterion c) {
  switch (c) {
    case FasterCriterion::variance: return "variance";
    case FasterCriterion::correlation: return "correlation";
    case FasterCriterion::hurst: return "hurst";
    case FasterCriterion::kurtosis: return "kurtosis";
    case FasterCriterion::line_noise: return "line_noise";
  }
  return "?";
}

namespace {

// Uncentered Gram matrix and per-sensor sums over the concatenated trials.
struct SecondMoments {
  Eigen::MatrixXd gram;  // Q x Q, sum over samples of x_a x_b
  Eigen::VectorXd sums;  // Q
  double n_samples = 0.0;

  Eigen::MatrixXd correlation() const {
    const Eigen::VectorXd mean = sums / n_samples;
    const Eigen::MatrixXd cov = gram / n_samples - mean * mean.transpose();
    const auto q = cov.rows();
    Eigen::MatrixXd corr = Eigen::MatrixXd::Zero(q, q);
    for (Eigen::Index a = 0; a < q; ++a) {
      for (Eigen::Index b = 0; b < q; ++b) {
        const double d = cov(a, a) * cov(b, b);
        if (cov(a, a) > 0.0 && cov(b, b) > 0.0 && d > 0.0) corr(a, b) = cov(a, b) / std::sqrt(d);
      }
    }
    return corr;
  }
};

SecondMoments second_moments(const EpochsTensor& epochs) {
  const auto q = static_cast<Eigen::Index>(epochs.n_sensors());
  SecondMoments m{Eigen::MatrixXd::Zero(q, q), Eigen::VectorXd::Zero(q),
                  static_cast<double>(epochs.n_trials() * epochs.n_times())};
  for (std::size_t i = 0; i < epochs.n_trials(); ++i) {
    const auto trial = epochs.trial(i);
    m.gram.noalias() += trial * trial.transpose();
    m.sums += trial.rowwise().sum();
  }
  return m;
}

}  // namespace

Eigen::VectorXd zscore(const Eigen::VectorXd& values) {
  const double mean = values.mean();
  const double sd = std::sqrt((values.array() - mean).square().mean());
  if (!(sd > 0.0)) return Eigen::VectorXd::Zero(values.size());
  return (values.array() - mean) / sd;
}

double hurst_exponent(const EpochsTensor& epochs, std::size_t sensor) {
  const auto t = epochs.n_times();
  std::vector<double> log_n;
  std::vector<double> log_rs;
  std::vector<double> cum;
  for (std::size_t n = 8; n <= t / 2; n *= 2) {
    double total = 0.0;
    std::size_t count = 0;
    cum.resize(n);
    for (std::size_t i = 0; i < epochs.n_trials(); ++i) {
      const auto s = epochs.series(i, sensor);
      for (std::size_t start = 0; start + n <= t; start += n) {
        const auto chunk = s.subspan(start, n);
        const double mean = std::accumulate(chunk.begin(), chunk.end(), 0.0) / static_cast<double>(n);
        double acc = 0.0;
        double ss = 0.0;
        double lo = 0.0;
        double hi = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double d = chunk[k] - mean;
          acc += d;
          ss += d * d;
          lo = std::min(lo, acc);
          hi = std::max(hi, acc);
        }
        const double sd = std::sqrt(ss / static_cast<double>(n));
        if (sd > 0.0) {
          total += (hi - lo) / sd;
          ++count;
        }
      }
    }
    if (count > 0 && total > 0.0) {
      log_n.push_back(std::log(static_cast<double>(n)));
      log_rs.push_back(std::log(total / static_cast<double>(count)));
    }
  }
  if (log_n.size() < 2) return 0.0;
  // Least-squares slope of log(R/S) on log(n).
  const double k = static_cast<double>(log_n.size());
  const double mx = std::accumulate(log_n.begin(), log_n.end(), 0.0) / k;
  const double my = std::accumulate(log_rs.begin(), log_rs.end(), 0.0) / k;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t w = 0; w < log_n.size(); ++w) {
    sxy += (log_n[w] - mx) * (log_rs[w] - my);
    sxx += (log_n[w] - mx) * (log_n[w] - mx);
  }
  return sxy / sxx;
}

double line_noise_ratio(const EpochsTensor& epochs, std::size_t sensor, double mains_hz) {
  const auto t = epochs.n_times();
  const double df = epochs.sfreq_hz() / static_cast<double>(t);
  std::vector<std::size_t> bins;
  for (std::size_t k = 1; k <= t / 2; ++k) {
    const double f = static_cast<double>(k) * df;
    if (f >= mains_hz - 2.0 && f <= mains_hz + 2.0) bins.push_back(k);
  }
  double band = 0.0;
  double total = 0.0;
  std::vector<double> x(t);
  for (std::size_t i = 0; i < epochs.n_trials(); ++i) {
    const auto s = epochs.series(i, sensor);
    const double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(t);
    double energy = 0.0;
    for (std::size_t n = 0; n < t; ++n) {
      x[n] = s[n] - mean;
      energy += x[n] * x[n];
    }
    // Parseval: sum_k |X_k|^2 = T * sum_n x_n^2.
    total += static_cast<double>(t) * energy;
    for (auto k : bins) {
      double re = 0.0;
      double im = 0.0;
      for (std::size_t n = 0; n < t; ++n) {
        const double phase = 2.0 * std::numbers::pi * static_cast<double>(k * n % t) / static_cast<double>(t);
        re += x[n] * std::cos(phase);
        im -= x[n] * std::sin(phase);
      }
      // Bins other than Nyquist have a mirror at T - k.
      const double mult = (2 * k == t) ? 1.0 : 2.0;
      band += mult * (re * re + im * im);
    }
  }
  return total > 0.0 ? band / total : 0.0;
}

FasterReport faster_bad_sensors(const EpochsTensor& epochs, const SensorLayout& layout, double mains_hz) {
  const auto q = epochs.n_sensors();
  if (q < 4) throw ContractError("FASTER needs at least 4 sensors");
  if (layout.size() != q) throw ContractError("layout size does not match sensor count");
  if (epochs.n_times() < 32) throw ContractError("FASTER needs at least 32 samples per trial for the Hurst exponent");

  const auto moments = second_moments(epochs);
  const Eigen::MatrixXd corr = moments.correlation();
  const double n = moments.n_samples;

  FasterReport report;
  const auto qi = static_cast<Eigen::Index>(q);
  report.metrics.resize(qi, static_cast<Eigen::Index>(kFasterCriteria));
  for (std::size_t j = 0; j < q; ++j) {
    const auto r = static_cast<Eigen::Index>(j);
    const double mean = moments.sums[r] / n;
    double m2 = 0.0;
    double m4 = 0.0;
    for (std::size_t i = 0; i < epochs.n_trials(); ++i) {
      for (double v : epochs.series(i, j)) {
        const double d2 = (v - mean) * (v - mean);
        m2 += d2;
        m4 += d2 * d2;
      }
    }
    m2 /= n;
    m4 /= n;
    double abs_corr = 0.0;
    for (Eigen::Index b = 0; b < qi; ++b) {
      if (b != r) abs_corr += std::abs(corr(r, b));
    }
    report.metrics(r, 0) = m2;
    report.metrics(r, 1) = abs_corr / static_cast<double>(q - 1);
    report.metrics(r, 2) = hurst_exponent(epochs, j);
    report.metrics(r, 3) = m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;
    report.metrics(r, 4) = line_noise_ratio(epochs, j, mains_hz);
  }

  report.zscores.resize(qi, static_cast<Eigen::Index>(kFasterCriteria));
  std::vector<bool> any(q, false);
  for (std::size_t c = 0; c < kFasterCriteria; ++c) {
    const auto col = static_cast<Eigen::Index>(c);
    report.zscores.col(col) = zscore(report.metrics.col(col));
    for (std::size_t j = 0; j < q; ++j) {
      if (std::abs(report.zscores(static_cast<Eigen::Index>(j), col)) > kFasterZThreshold) {
        report.flagged[c].push_back(j);
        any[j] = true;
      }
    }
  }
  for (std::size_t j = 0; j < q; ++j) {
    if (any[j]) report.union_flagged.push_back(j);
  }
  return report;
}

EpochsTensor sns_clean(const EpochsTensor& epochs, int n_neighbors) {
  const auto q = epochs.n_sensors();
  if (n_neighbors < 1 || static_cast<std::size_t>(n_neighbors) >= q) {
    throw ContractError("SNS needs 1 <= n_neighbors < Q");
  }
  const auto moments = second_moments(epochs);
  const Eigen::MatrixXd corr = moments.correlation();
  const auto k = static_cast<Eigen::Index>(n_neighbors);

  // Projection coefficients per sensor: x_j ~ c^T X_nb with
  // c = pinv(X_nb X_nb^T) X_nb x_j, the pseudo-inverse taken over principal
  // components with nonnegligible variance.
  std::vector<std::vector<std::size_t>> neighbors(q);
  std::vector<Eigen::VectorXd> coefs(q);
  for (std::size_t j = 0; j < q; ++j) {
    auto& nb = neighbors[j];
    for (std::size_t b = 0; b < q; ++b) {
      if (b != j) nb.push_back(b);
    }
    const auto r = static_cast<Eigen::Index>(j);
    std::stable_sort(nb.begin(), nb.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(corr(r, static_cast<Eigen::Index>(a))) > std::abs(corr(r, static_cast<Eigen::Index>(b)));
    });
    nb.resize(static_cast<std::size_t>(n_neighbors));
    std::sort(nb.begin(), nb.end());

    Eigen::MatrixXd c(k, k);
    Eigen::VectorXd b(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      const auto na = static_cast<Eigen::Index>(nb[static_cast<std::size_t>(a)]);
      for (Eigen::Index e = 0; e < k; ++e) c(a, e) = moments.gram(na, static_cast<Eigen::Index>(nb[static_cast<std::size_t>(e)]));
      b[a] = moments.gram(na, r);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
    if (eig.info() != Eigen::Success) throw NumericalError("SNS eigendecomposition failed");
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    const double top = lambda.maxCoeff();
    if (!(top > 0.0)) {
      throw NumericalError("SNS neighbor covariance of sensor " + std::to_string(j) + " is degenerate");
    }
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      if (lambda[a] > 1e-12 * top) inv[a] = 1.0 / lambda[a];
    }
    const Eigen::MatrixXd& v = eig.eigenvectors();
    coefs[j] = v * inv.asDiagonal() * (v.transpose() * b);
  }

  std::vector<double> out(epochs.data().size());
  const auto t = static_cast<Eigen::Index>(epochs.n_times());
  for (std::size_t i = 0; i < epochs.n_trials(); ++i) {
    const auto trial = epochs.trial(i);
    RowMap dst(out.data() + i * epochs.n_features(), static_cast<Eigen::Index>(q), t);
    for (std::size_t j = 0; j < q; ++j) {
      Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(t);
      for (Eigen::Index a = 0; a < k; ++a) {
        acc += coefs[j][a] * trial.row(static_cast<Eigen::Index>(neighbors[j][static_cast<std::size_t>(a)]));
      }
      dst.row(static_cast<Eigen::Index>(j)) = acc;
    }
  }
  return EpochsTensor(std::move(out), epochs.n_trials(), q, epochs.n_times(), epochs.sfreq_hz(), epochs.unit(),
                      epochs.origin_flags());
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw ContractError("pearson needs equal-length nonempty series");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double da = a[k] - ma;
    const double db = b[k] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

RansacResult ransac_bad_sensors(const EpochsTensor& epochs, const SensorLayout& layout, const RansacParams& params) {
  const auto q = epochs.n_sensors();
  if (layout.size() != q) throw ContractError("layout size does not match sensor count");
  if (params.n_resamples < 1) throw ContractError("RANSAC needs at least one resample");
  const auto m = static_cast<std::size_t>(std::ceil(params.fraction * static_cast<double>(q)));
  if (m < 4 || m > q) throw ContractError("RANSAC subset size ceil(fraction * Q) must lie in [4, Q]");

  // Sensors that carry signal somewhere; a subset needs at least 4 of them.
  const auto moments = second_moments(epochs);
  std::vector<bool> usable(q);
  for (std::size_t j = 0; j < q; ++j) {
    const auto r = static_cast<Eigen::Index>(j);
    const double mean = moments.sums[r] / moments.n_samples;
    usable[j] = moments.gram(r, r) / moments.n_samples - mean * mean > 0.0;
  }

  std::vector<std::size_t> all(q);
  std::iota(all.begin(), all.end(), 0);
  std::vector<InterpolationOperator> ops;
  for (int r = 0; r < params.n_resamples; ++r) {
    bool done = false;
    for (int attempt = 0; attempt <= params.max_retries && !done; ++attempt) {
      KeyedRng rng(params.seed,
                   {stream_key(Stream::ransac), static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(attempt)});
      std::vector<std::size_t> subset(all);
      rng.shuffle(subset);
      subset.resize(m);
      std::sort(subset.begin(), subset.end());
      const auto n_usable = std::count_if(subset.begin(), subset.end(), [&](std::size_t j) { return usable[j]; });
      if (n_usable < 4) continue;
      try {
        ops.push_back(build_operator(layout, subset, all, params.spline));
        done = true;
      } catch (const NumericalFailure&) {
      }
    }
    if (!done) {
      throw ResampleError("RANSAC resample " + std::to_string(r) + " found no usable subset after " +
                          std::to_string(params.max_retries + 1) + " draws");
    }
  }

  const auto n_trials = epochs.n_trials();
  const auto t = static_cast<Eigen::Index>(epochs.n_times());
  const auto qi = static_cast<Eigen::Index>(q);
  RansacResult result;
  result.per_trial_bad = BoolMatrix::Constant(static_cast<Eigen::Index>(n_trials), qi, false);
  result.correlations = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_trials), qi);

  std::vector<RowMatrix> preds(ops.size());
  std::vector<double> column(ops.size());
  std::vector<double> median(static_cast<std::size_t>(t));
  for (std::size_t i = 0; i < n_trials; ++i) {
    const auto trial = epochs.trial(i);
    for (std::size_t r = 0; r < ops.size(); ++r) {
      RowMatrix src(static_cast<Eigen::Index>(m), t);
      for (std::size_t k = 0; k < m; ++k) src.row(static_cast<Eigen::Index>(k)) = trial.row(static_cast<Eigen::Index>(ops[r].source_ids[k]));
      preds[r] = ops[r].apply(src);
    }
    for (std::size_t j = 0; j < q; ++j) {
      for (Eigen::Index s = 0; s < t; ++s) {
        for (std::size_t r = 0; r < ops.size(); ++r) column[r] = preds[r](static_cast<Eigen::Index>(j), s);
        median[static_cast<std::size_t>(s)] = median_inplace(column);
      }
      const double c = pearson(median, epochs.series(i, j));
      result.correlations(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c;
      result.per_trial_bad(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c < params.corr_threshold;
    }
  }
  for (std::size_t j = 0; j < q; ++j) {
    const auto bad = result.per_trial_bad.col(static_cast<Eigen::Index>(j)).count();
    if (static_cast<double>(bad) > params.unbroken_time * static_cast<double>(n_trials)) result.global_bad.push_back(j);
  }
  return result;
}

EpochsTensor interpolate_bad_sensors(const EpochsTensor& epochs, const SensorLayout& layout,
                                     std::span<const std::size_t> sensors, const SplineParams& spline) {
  BoolMatrix mask = BoolMatrix::Constant(static_cast<Eigen::Index>(epochs.n_trials()),
                                         static_cast<Eigen::Index>(epochs.n_sensors()), false);
  for (auto j : sensors) {
    if (j >= epochs.n_sensors()) throw IndexError("sensor index " + std::to_string(j) + " out of range");
    mask.col(static_cast<Eigen::Index>(j)).setConstant(true);
  }
  return interpolate_sensors(epochs, layout, mask, spline);
}

}  // namespace autoclean
