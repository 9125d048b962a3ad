#include "autoclean/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <sstream>

#include "autoclean/baselines.hpp"
#include "autoclean/errors.hpp"
#include "autoclean/random.hpp"
#include "autoclean/reject_global.hpp"
#include "autoclean/reject_local.hpp"
#include "json_util.hpp"

namespace autoclean {

namespace {

// Sub-streams of the simulate stream.
enum Purpose : std::uint64_t { kNoise = 1, kCells = 2, kGlobalPick = 3, kGlobalNoise = 4, kBlinks = 5 };

KeyedRng sim_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> rest) {
  std::vector<std::uint64_t> key{stream_key(Stream::simulate)};
  key.insert(key.end(), rest.begin(), rest.end());
  return KeyedRng(seed, std::span<const std::uint64_t>(key));
}

// Demeans the row and scales it so that max |x| equals peak.
void scale_to_peak(Eigen::Ref<Eigen::RowVectorXd> row, double peak) {
  row.array() -= row.mean();
  const double m = row.cwiseAbs().maxCoeff();
  if (m > 0.0) row *= peak / m;
}

}  // namespace

void SimConfig::validate() const {
  if (n_trials < 1 || n_sensors < 4 || n_times < 2) throw ContractError("simulation needs N >= 1, Q >= 4, T >= 2");
  if (!(sfreq_hz > 0.0)) throw ContractError("sampling rate must be positive");
  if (!(evoked_amplitude >= 0.0) || !(noise_amplitude >= 0.0)) throw ContractError("amplitudes must be nonnegative");
  if (!(artifact_amplitude > 5.0 * (evoked_amplitude + noise_amplitude))) {
    throw ContractError("artifact_amplitude must exceed 5 x (evoked_amplitude + noise_amplitude)");
  }
  if (!(p_cell_artifact >= 0.0 && p_cell_artifact <= 1.0)) throw ContractError("p_cell_artifact must lie in [0, 1]");
  if (!(blink_rate >= 0.0 && blink_rate <= 1.0)) throw ContractError("blink_rate must lie in [0, 1]");
  if (global_bad_sensors < 0 || static_cast<std::size_t>(global_bad_sensors) + 4 > n_sensors) {
    throw ContractError("global_bad_sensors must leave at least 4 good sensors");
  }
}

SensorLayout fibonacci_layout(std::size_t n_sensors) {
  std::vector<std::string> names;
  std::vector<Position> positions;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (std::size_t k = 0; k < n_sensors; ++k) {
    const double z = 1.0 - (2.0 * static_cast<double>(k) + 1.0) / static_cast<double>(n_sensors);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * static_cast<double>(k);
    positions.push_back({r * std::cos(phi), r * std::sin(phi), z});
    char name[32];
    std::snprintf(name, sizeof name, "S%03zu", k);
    names.emplace_back(name);
  }
  return SensorLayout(std::move(names), std::move(positions));
}

Simulation simulate(const SimConfig& config) {
  config.validate();
  const auto n = config.n_trials;
  const auto q = config.n_sensors;
  const auto t = config.n_times;
  auto layout = fibonacci_layout(q);

  // Evoked template: Gaussian bump at T/2 with width T/10.
  Eigen::RowVectorXd bump(static_cast<Eigen::Index>(t));
  const double centre = static_cast<double>(t) / 2.0;
  const double width = static_cast<double>(t) / 10.0;
  for (std::size_t s = 0; s < t; ++s) {
    const double d = (static_cast<double>(s) - centre) / width;
    bump[static_cast<Eigen::Index>(s)] = std::exp(-0.5 * d * d);
  }
  Eigen::VectorXd pattern(static_cast<Eigen::Index>(q));
  for (std::size_t j = 0; j < q; ++j) {
    const auto& p = layout.position(j);
    pattern[static_cast<Eigen::Index>(j)] = 3.0 * p[2] * p[2] - 1.0 + 2.0 * p[0] * p[1];
  }
  pattern /= pattern.cwiseAbs().maxCoeff();

  // 1/f noise by spectral synthesis: amplitude f^-1/2 on random quadratures.
  const auto n_freq = static_cast<Eigen::Index>(t / 2);
  Eigen::MatrixXd basis(2 * n_freq, static_cast<Eigen::Index>(t));
  for (Eigen::Index k = 0; k < n_freq; ++k) {
    const double f = static_cast<double>(k + 1);
    for (std::size_t s = 0; s < t; ++s) {
      const double phase = 2.0 * std::numbers::pi * f * static_cast<double>(s) / static_cast<double>(t);
      basis(2 * k, static_cast<Eigen::Index>(s)) = std::cos(phase) / std::sqrt(f);
      basis(2 * k + 1, static_cast<Eigen::Index>(s)) = std::sin(phase) / std::sqrt(f);
    }
  }
  const auto rows = static_cast<Eigen::Index>(n * q);
  Eigen::MatrixXd coefs(rows, 2 * n_freq);
  {
    auto rng = sim_rng(config.seed, {kNoise});
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < coefs.cols(); ++c) coefs(r, c) = rng.normal();
    }
  }
  RowMatrix clean = coefs * basis;
  for (Eigen::Index r = 0; r < rows; ++r) {
    scale_to_peak(clean.row(r), config.noise_amplitude);
    clean.row(r) += config.evoked_amplitude * pattern[r % static_cast<Eigen::Index>(q)] * bump;
  }

  RowMatrix corrupted = clean;
  BoolMatrix mask = BoolMatrix::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(q), false);
  const auto row_of = [q](std::size_t i, std::size_t j) { return static_cast<Eigen::Index>(i * q + j); };

  std::vector<std::size_t> global_bad;
  if (config.global_bad_sensors > 0) {
    auto rng = sim_rng(config.seed, {kGlobalPick});
    std::vector<std::size_t> order(q);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    global_bad.assign(order.begin(), order.begin() + config.global_bad_sensors);
    std::sort(global_bad.begin(), global_bad.end());
    for (auto j : global_bad) {
      for (std::size_t i = 0; i < n; ++i) {
        auto noise_rng = sim_rng(config.seed, {kGlobalNoise, i, j});
        Eigen::RowVectorXd noise(static_cast<Eigen::Index>(t));
        for (auto& v : noise) v = noise_rng.normal();
        scale_to_peak(noise, config.artifact_amplitude);
        corrupted.row(row_of(i, j)) += noise;
        mask(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = true;
      }
    }
  }

  // Square pulses in round(p N Q) distinct cells outside the globally bad sensors.
  {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < q; ++j) {
        if (!std::binary_search(global_bad.begin(), global_bad.end(), j)) candidates.push_back(i * q + j);
      }
    }
    auto rng = sim_rng(config.seed, {kCells});
    const auto wanted = static_cast<std::size_t>(std::llround(config.p_cell_artifact * static_cast<double>(n * q)));
    const auto count = std::min(wanted, candidates.size());
    // Partial Fisher-Yates: the first `count` entries become a uniform sample.
    for (std::size_t k = 0; k < count; ++k) std::swap(candidates[k], candidates[k + rng.index(candidates.size() - k)]);
    const std::size_t min_len = std::max<std::size_t>(1, t / 10);
    const std::size_t max_len = std::max(min_len, t / 2);
    for (std::size_t k = 0; k < count; ++k) {
      const auto cell = candidates[k];
      const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
      const auto len = std::min(t - 1, min_len + rng.index(max_len - min_len + 1));
      const auto onset = rng.index(t - len + 1);
      corrupted.row(static_cast<Eigen::Index>(cell)).segment(static_cast<Eigen::Index>(onset), static_cast<Eigen::Index>(len)).array() +=
          sign * config.artifact_amplitude;
      mask(static_cast<Eigen::Index>(cell / q), static_cast<Eigen::Index>(cell % q)) = true;
    }
  }

  // Blink-like half-sines on the 20% of sensors nearest the frontal pole.
  if (config.blink_rate > 0.0) {
    std::vector<std::size_t> order(q);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return layout.position(a)[1] > layout.position(b)[1]; });
    order.resize(std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.2 * static_cast<double>(q)))));
    const auto len = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(0.3 * config.sfreq_hz)), 2, t);
    for (std::size_t i = 0; i < n; ++i) {
      auto rng = sim_rng(config.seed, {kBlinks, i});
      if (!rng.bernoulli(config.blink_rate)) continue;
      const double amp = rng.uniform(0.1, 1.0) * config.artifact_amplitude;
      const auto onset = rng.index(t - len + 1);
      for (auto j : order) {
        auto row = corrupted.row(row_of(i, j));
        for (std::size_t s = 0; s < len; ++s) {
          row[static_cast<Eigen::Index>(onset + s)] +=
              amp * std::sin(std::numbers::pi * static_cast<double>(s) / static_cast<double>(len - 1));
        }
        mask(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = true;
      }
    }
  }

  const auto to_vector = [](const RowMatrix& m) { return std::vector<double>(m.data(), m.data() + m.size()); };
  EpochsTensor clean_epochs(to_vector(clean), n, q, t, config.sfreq_hz);
  auto clean_evoked = evoked(clean_epochs);
  return Simulation{EpochsTensor(to_vector(corrupted), n, q, t, config.sfreq_hz), std::move(layout),
                    GroundTruth{std::move(clean_epochs), std::move(mask), std::move(clean_evoked), std::move(global_bad)}};
}

std::string encode_sim_config(const SimConfig& c) {
  const detail::Json doc{
      {"n_trials", c.n_trials},
      {"n_sensors", c.n_sensors},
      {"n_times", c.n_times},
      {"sfreq_hz", c.sfreq_hz},
      {"evoked_amplitude", c.evoked_amplitude},
      {"noise_amplitude", c.noise_amplitude},
      {"artifact_amplitude", c.artifact_amplitude},
      {"p_cell_artifact", c.p_cell_artifact},
      {"global_bad_sensors", c.global_bad_sensors},
      {"blink_rate", c.blink_rate},
      {"seed", c.seed},
  };
  return doc.dump(2) + "\n";
}

SimConfig decode_sim_config(const std::string& text) {
  constexpr const char* what = "simulation config";
  const auto doc = detail::parse_json(text, what);
  if (!doc.is_object()) throw FormatError("simulation config must be a JSON object");
  SimConfig c;
  // Every key is optional; absent keys keep their defaults.
  const auto read = [&](const char* key, auto& field) {
    if (doc.contains(key)) field = detail::get_field<std::decay_t<decltype(field)>>(doc, key, what);
  };
  read("n_trials", c.n_trials);
  read("n_sensors", c.n_sensors);
  read("n_times", c.n_times);
  read("sfreq_hz", c.sfreq_hz);
  read("evoked_amplitude", c.evoked_amplitude);
  read("noise_amplitude", c.noise_amplitude);
  read("artifact_amplitude", c.artifact_amplitude);
  read("p_cell_artifact", c.p_cell_artifact);
  read("global_bad_sensors", c.global_bad_sensors);
  read("blink_rate", c.blink_rate);
  read("seed", c.seed);
  for (const auto& [key, value] : doc.items()) {
    static const std::vector<std::string> known{"n_trials", "n_sensors", "n_times", "sfreq_hz", "evoked_amplitude",
                                                "noise_amplitude", "artifact_amplitude", "p_cell_artifact",
                                                "global_bad_sensors", "blink_rate", "seed"};
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw FormatError("simulation config: unknown key '" + key + "'");
    }
  }
  return c;
}

DetectionScores detection_scores(const RejectLog& log, const BoolMatrix& truth) {
  if (static_cast<std::size_t>(truth.rows()) != log.n_trials || static_cast<std::size_t>(truth.cols()) != log.n_sensors) {
    throw ContractError("reject log and corruption mask differ in shape");
  }
  DetectionScores s;
  for (std::size_t i = 0; i < log.n_trials; ++i) {
    for (std::size_t j = 0; j < log.n_sensors; ++j) {
      const bool detected = log.rejected(i) || log.cell(i, j) != CellState::good;
      const bool actual = truth(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (detected && actual) ++s.true_positives;
      if (detected && !actual) ++s.false_positives;
      if (!detected && actual) ++s.false_negatives;
    }
  }
  const auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  s.precision = ratio(s.true_positives, s.true_positives + s.false_positives);
  s.recall = ratio(s.true_positives, s.true_positives + s.false_negatives);
  return s;
}

std::string_view to_string(Metric m) { return m == Metric::linf ? "linf" : "l2"; }

Metric metric_from_string(std::string_view text) {
  if (text == "linf") return Metric::linf;
  if (text == "l2") return Metric::l2;
  throw ContractError("unknown metric '" + std::string(text) + "' (expected linf or l2)");
}

std::vector<std::string> known_methods() {
  return {"reject_global", "reject_local", "faster", kNoRejection, "ransac", "sns"};
}

std::vector<NamedMethod> standard_methods(const std::vector<std::string>& names, std::uint64_t seed) {
  std::vector<NamedMethod> out;
  for (const auto& name : names) {
    MethodFn fn;
    if (name == kNoRejection) {
      fn = [](const EpochsTensor& e, const SensorLayout&) { return evoked(e); };
    } else if (name == "reject_global") {
      fn = [seed](const EpochsTensor& e, const SensorLayout&) {
        const auto fit = fit_global(e, kDefaultFolds, seed);
        const auto keep = apply_global(e, *fit.model.global_tau).retained_trials();
        return trial_mean(e, keep);
      };
    } else if (name == "reject_local") {
      fn = [seed](const EpochsTensor& e, const SensorLayout& layout) {
        LocalConfig config;
        config.seed = seed;
        return evoked(transform(e, layout, fit_local(e, layout, config)).cleaned);
      };
    } else if (name == "faster") {
      fn = [](const EpochsTensor& e, const SensorLayout& layout) {
        return evoked(interpolate_bad_sensors(e, layout, faster_bad_sensors(e, layout).union_flagged));
      };
    } else if (name == "sns") {
      fn = [](const EpochsTensor& e, const SensorLayout&) { return evoked(sns_clean(e)); };
    } else if (name == "ransac") {
      fn = [seed](const EpochsTensor& e, const SensorLayout& layout) {
        RansacParams params;
        params.seed = seed;
        return evoked(interpolate_bad_sensors(e, layout, ransac_bad_sensors(e, layout, params).global_bad));
      };
    } else {
      throw ContractError("unknown method '" + name + "'");
    }
    out.push_back({name, std::move(fn)});
  }
  return out;
}

const BenchRow* BenchReport::find(const std::string& method) const {
  for (const auto& r : rows) {
    if (r.method == method) return &r;
  }
  return nullptr;
}

BenchReport benchmark(const Simulation& dataset, const std::vector<NamedMethod>& methods, Metric metric) {
  auto all = methods;
  if (std::none_of(all.begin(), all.end(), [](const NamedMethod& m) { return m.name == kNoRejection; })) {
    all.push_back(standard_methods({kNoRejection}, 0).front());
  }
  BenchReport report;
  report.metric = metric;
  for (const auto& m : all) {
    BenchRow row;
    row.method = m.name;
    const auto start = std::chrono::steady_clock::now();
    try {
      const auto estimate = m.run(dataset.corrupted, dataset.layout);
      row.linf = eval_linf(estimate, dataset.truth.clean_evoked);
      row.l2 = eval_l2(estimate, dataset.truth.clean_evoked);
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.rows.push_back(std::move(row));
  }
  std::sort(report.rows.begin(), report.rows.end(),
            [](const BenchRow& a, const BenchRow& b) { return a.method < b.method; });
  return report;
}

std::string format_bench_table(const BenchReport& report) {
  std::ostringstream ss;
  char line[256];
  std::snprintf(line, sizeof line, "%-20s %14s %14s %9s\n", "method", "linf", "l2", "seconds");
  ss << line;
  for (const auto& r : report.rows) {
    if (r.failed) {
      std::snprintf(line, sizeof line, "%-20s %14s %14s %9.2f  %s\n", r.method.c_str(), "failed", "failed", r.seconds,
                    r.error.c_str());
    } else {
      std::snprintf(line, sizeof line, "%-20s %14.6g %14.6g %9.2f\n", r.method.c_str(), r.linf, r.l2, r.seconds);
    }
    ss << line;
  }
  return ss.str();
}

std::string encode_bench_report(const BenchReport& report) {
  detail::Json rows = detail::Json::array();
  for (const auto& r : report.rows) {
    detail::Json row{{"method", r.method}, {"failed", r.failed}};
    if (r.failed) {
      row["error"] = r.error;
      row["linf"] = nullptr;
      row["l2"] = nullptr;
    } else {
      row["linf"] = r.linf;
      row["l2"] = r.l2;
    }
    rows.push_back(std::move(row));
  }
  const detail::Json doc{{"version", 1}, {"metric", std::string(to_string(report.metric))}, {"rows", rows}};
  return doc.dump(2) + "\n";
}

}  // namespace autoclean
