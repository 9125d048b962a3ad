#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "autoclean/epochs.hpp"
#include "autoclean/metrics.hpp"
#include "autoclean/reject_log.hpp"

namespace autoclean {

struct SimConfig {
  std::size_t n_trials = 100;
  std::size_t n_sensors = 32;
  std::size_t n_times = 200;
  double sfreq_hz = 200.0;
  double evoked_amplitude = 5e-6;
  double noise_amplitude = 2e-6;
  double artifact_amplitude = 100e-6;
  // Expected fraction of corrupted cells; round(p * N * Q) cells are drawn.
  double p_cell_artifact = 0.05 / 32.0;
  int global_bad_sensors = 0;
  double blink_rate = 0.0;
  std::uint64_t seed = 0;

  /// Separability (artifact > 5 x (evoked + noise)) and ranges. Throws ContractError.
  void validate() const;
};

struct GroundTruth {
  EpochsTensor clean_epochs;
  BoolMatrix corruption_mask;  // N x Q
  EvokedMatrix clean_evoked;
  std::vector<std::size_t> global_bad;
};

struct Simulation {
  EpochsTensor corrupted;
  SensorLayout layout;
  GroundTruth truth;
};

/// Q points on the unit sphere along a Fibonacci spiral, named S000, S001, ...
SensorLayout fibonacci_layout(std::size_t n_sensors);

/// Seeded synthetic recording: Gaussian-bump evoked response with a
/// degree-2 spatial pattern, 1/f noise, and planted artifacts (square pulses
/// in single cells, globally noisy sensors, blink-like half-sines).
Simulation simulate(const SimConfig& config);

std::string encode_sim_config(const SimConfig& config);
SimConfig decode_sim_config(const std::string& text);

struct DetectionScores {
  double precision = 1.0;
  double recall = 1.0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
};

/// A cell is detected when it is bad (either state) or its trial was rejected.
/// 0/0 precision or recall counts as 1.
DetectionScores detection_scores(const RejectLog& log, const BoolMatrix& truth);

enum class Metric { linf, l2 };
std::string_view to_string(Metric m);
Metric metric_from_string(std::string_view text);

/// Maps corrupted epochs to an evoked estimate.
using MethodFn = std::function<EvokedMatrix(const EpochsTensor&, const SensorLayout&)>;

struct NamedMethod {
  std::string name;
  MethodFn run;
};

inline constexpr const char* kNoRejection = "no_rejection";

/// Method names understood by standard_methods().
std::vector<std::string> known_methods();

/// Built-in pipelines: no_rejection, reject_global, reject_local,
/// faster (+ interpolation), sns, ransac (+ interpolation). Unknown names are
/// a ContractError.
std::vector<NamedMethod> standard_methods(const std::vector<std::string>& names, std::uint64_t seed);

struct BenchRow {
  std::string method;
  double linf = 0.0;
  double l2 = 0.0;
  double seconds = 0.0;
  bool failed = false;
  std::string error;

  double value(Metric m) const { return m == Metric::linf ? linf : l2; }
};

struct BenchReport {
  Metric metric = Metric::linf;
  std::vector<BenchRow> rows;  // sorted by method name

  const BenchRow* find(const std::string& method) const;
};

/// Scores each method against the clean evoked response. The no-rejection
/// control is always included. A failing method is recorded, not fatal.
BenchReport benchmark(const Simulation& dataset, const std::vector<NamedMethod>& methods, Metric metric);

std::string format_bench_table(const BenchReport& report);
std::string encode_bench_report(const BenchReport& report);

}  // namespace autoclean
