#include "autoclean/reject_local.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <optional>
#include <mutex>
#include <numeric>
#include <thread>

#include "autoclean/errors.hpp"
#include "autoclean/io.hpp"
#include "autoclean/random.hpp"
#include "format_util.hpp"
#include "json_util.hpp"

namespace autoclean {

std::vector<int> default_kappa_candidates(std::size_t n_sensors) {
  std::vector<int> out;
  for (int step = 1; step <= 10; ++step) {
    // Integer arithmetic keeps ceil(0.1 * k * Q) exact.
    const auto q = static_cast<int>(n_sensors);
    out.push_back((step * q + 9) / 10);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  out.erase(std::remove(out.begin(), out.end(), 0), out.end());
  return out;
}

std::vector<int> default_rho_candidates(std::size_t n_sensors) {
  std::vector<int> out;
  for (int r : {1, 2, 4, 8, 16, 32}) {
    if (static_cast<std::size_t>(r) < n_sensors) out.push_back(r);
  }
  return out;
}

BoolMatrix indicator(const AmplitudeMatrix& amplitudes, std::span<const double> taus) {
  if (static_cast<std::size_t>(amplitudes.n_sensors()) != taus.size()) {
    throw ContractError("threshold count does not match sensor count");
  }
  BoolMatrix bad(amplitudes.n_trials(), amplitudes.n_sensors());
  for (Eigen::Index j = 0; j < bad.cols(); ++j) {
    bad.col(j) = amplitudes.values.col(j).array() > taus[static_cast<std::size_t>(j)];
  }
  return bad;
}

Eigen::MatrixXd sensor_scores(const AmplitudeMatrix& amplitudes, const BoolMatrix& bad) {
  if (bad.rows() != amplitudes.n_trials() || bad.cols() != amplitudes.n_sensors()) {
    throw ContractError("indicator shape does not match amplitudes");
  }
  return bad.select(amplitudes.values.array(), kNoScore).matrix();
}

RejectLog repair_plan(const BoolMatrix& bad, const Eigen::MatrixXd& scores, int rho, int kappa) {
  const auto n_sensors = static_cast<int>(bad.cols());
  if (!(0 <= rho && rho < kappa && kappa <= n_sensors)) {
    throw ContractError("need 0 <= rho < kappa <= Q, got rho = " + std::to_string(rho) +
                        ", kappa = " + std::to_string(kappa));
  }
  if (scores.rows() != bad.rows() || scores.cols() != bad.cols()) {
    throw ContractError("score shape does not match indicator");
  }
  auto log = RejectLog::all_good(static_cast<std::size_t>(bad.rows()), static_cast<std::size_t>(bad.cols()));
  std::vector<std::size_t> flagged;
  for (std::size_t i = 0; i < log.n_trials; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    flagged.clear();
    for (std::size_t j = 0; j < log.n_sensors; ++j) {
      if (bad(row, static_cast<Eigen::Index>(j))) {
        flagged.push_back(j);
        log.cell(i, j) = CellState::bad_uninterpolated;
        log.scores[i * log.n_sensors + j] = scores(row, static_cast<Eigen::Index>(j));
      }
    }
    if (static_cast<int>(flagged.size()) >= kappa) {
      log.trial_verdicts[i] = Verdict::rejected;
      continue;
    }
    std::stable_sort(flagged.begin(), flagged.end(), [&](std::size_t a, std::size_t b) {
      return scores(row, static_cast<Eigen::Index>(a)) > scores(row, static_cast<Eigen::Index>(b));
    });
    const auto n_repair = std::min(flagged.size(), static_cast<std::size_t>(rho));
    for (std::size_t k = 0; k < n_repair; ++k) log.cell(i, flagged[k]) = CellState::bad_interpolated;
  }
  log.provenance["rho_star"] = std::to_string(rho);
  log.provenance["kappa_star"] = std::to_string(kappa);
  return log;
}

SearchResult fit_single_sensor_threshold(const RowMatrix& series, std::span<const double> amplitudes,
                                         const FoldPlan& folds, const Budget& budget, std::uint64_t stream_seed) {
  if (amplitudes.empty()) throw ContractError("no amplitudes to fit a threshold on");
  const Bounds bounds{*std::min_element(amplitudes.begin(), amplitudes.end()),
                      *std::max_element(amplitudes.begin(), amplitudes.end())};
  const ThresholdCv cv(series, {amplitudes.begin(), amplitudes.end()}, folds);
  const auto objective = [&cv](double tau) { return cv.evaluate(tau).mean_error; };
  if (!(bounds.first < bounds.second)) {
    SearchResult r;
    r.x_star = bounds.first;
    r.y_star = objective(bounds.first);
    r.trace.emplace_back(r.x_star, r.y_star);
    r.degenerate = true;
    return r;
  }
  return minimize_scalar(objective, bounds, budget, stream_seed);
}

SensorThresholds fit_sensor_thresholds(const EpochsTensor& epochs, const SensorLayout& layout,
                                       const LocalConfig& config) {
  const auto n_sensors = epochs.n_sensors();
  const auto n_trials = epochs.n_trials();
  const auto aug = augment(epochs, layout, config.spline);
  const auto amps = peak_to_peak(aug);
  const auto folds = make_folds(aug.n_trials(), config.k, config.seed, aug.origin_flags());

  SensorThresholds out;
  out.taus.resize(n_sensors);
  out.bounds.resize(n_sensors);
  out.searches.resize(n_sensors);

  // A sensor is flat when its largest amplitude on original trials is
  // negligible next to the typical sensor's.
  std::vector<double> ranges(n_sensors);
  for (std::size_t j = 0; j < n_sensors; ++j) {
    ranges[j] = amps.values.col(static_cast<Eigen::Index>(j)).head(static_cast<Eigen::Index>(n_trials)).maxCoeff();
  }
  std::vector<double> scratch(ranges);
  const double typical = median_inplace(scratch);
  std::vector<bool> flat(n_sensors, false);
  for (std::size_t j = 0; j < n_sensors; ++j) {
    if (ranges[j] < 1e-12 * typical) {
      flat[j] = true;
      out.excluded.push_back(j);
    }
  }

  const auto n_times = static_cast<Eigen::Index>(epochs.n_times());
  const auto fit_one = [&](std::size_t j) {
    RowMatrix series(static_cast<Eigen::Index>(aug.n_trials()), n_times);
    for (std::size_t i = 0; i < aug.n_trials(); ++i) {
      const auto s = aug.series(i, j);
      series.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(s.data(), n_times);
    }
    const Eigen::VectorXd a = amps.values.col(static_cast<Eigen::Index>(j));
    const std::span<const double> amplitudes(a.data(), static_cast<std::size_t>(a.size()));
    out.bounds[j] = {a.minCoeff(), a.maxCoeff()};
    if (flat[j]) {
      out.taus[j] = out.bounds[j].second;
      out.searches[j].x_star = out.taus[j];
      out.searches[j].degenerate = true;
      return;
    }
    out.searches[j] = fit_single_sensor_threshold(
        series, amplitudes, folds, config.budget,
        derive_seed(config.seed, {stream_key(Stream::optimizer), static_cast<std::uint64_t>(j)}));
    out.taus[j] = out.searches[j].x_star;
  };

  const auto n_workers = static_cast<std::size_t>(std::max(1, config.n_jobs));
  if (n_workers == 1) {
    for (std::size_t j = 0; j < n_sensors; ++j) fit_one(j);
    return out;
  }
  // Each sensor writes only its own slots and draws from its own keyed
  // stream, so results do not depend on scheduling.
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < std::min(n_workers, n_sensors); ++w) {
    workers.emplace_back([&] {
      for (std::size_t j = next++; j < n_sensors; j = next++) {
        try {
          fit_one(j);
        } catch (...) {
          const std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

LocalCv::LocalCv(const EpochsTensor& epochs, const SensorLayout& layout, std::span<const double> taus, FoldPlan folds,
                 SplineParams spline)
    : epochs_(epochs), layout_(layout), spline_(spline), folds_(std::move(folds)) {
  if (folds_.assignments.size() != epochs.n_trials()) throw ContractError("fold plan does not cover the trials");
  if (layout.size() != epochs.n_sensors()) throw ContractError("layout size does not match sensor count");
  const auto amps = peak_to_peak(epochs);
  bad_ = indicator(amps, taus);
  scores_ = sensor_scores(amps, bad_);
  const auto matrix = epochs.as_matrix();
  for (int f = 0; f < folds_.k; ++f) {
    const auto val = folds_.validation(f);
    if (val.empty()) throw ContractError("fold " + std::to_string(f) + " has no validation trials");
    training_.push_back(folds_.training(f));
    validation_median_.push_back(median_of_rows(matrix, val));
  }
}

CvResult LocalCv::evaluate(int rho, int kappa) const {
  const auto log = repair_plan(bad_, scores_, rho, kappa);
  // One repair pass serves every fold: a trial's repair does not depend on
  // which fold it trains in.
  std::optional<EpochsTensor> repaired;
  try {
    repaired.emplace(interpolate_sensors(epochs_, layout_, log.interpolation_mask(), spline_));
  } catch (const RepairError& e) {
    throw RepairError(std::string(e.what()) + " (rho = " + std::to_string(rho) + ", kappa = " + std::to_string(kappa) +
                      ", during cross-validation)");
  }
  const auto matrix = repaired->as_matrix();
  CvResult out;
  std::vector<std::size_t> good;
  for (std::size_t f = 0; f < training_.size(); ++f) {
    good.clear();
    for (auto i : training_[f]) {
      if (!log.rejected(i)) good.push_back(i);
    }
    out.fold_errors.push_back((mean_of_rows(matrix, good) - validation_median_[f]).norm());
  }
  out.mean_error = std::accumulate(out.fold_errors.begin(), out.fold_errors.end(), 0.0) /
                   static_cast<double>(out.fold_errors.size());
  return out;
}

double cv_error_local(const EpochsTensor& epochs, const SensorLayout& layout, std::span<const double> taus, int rho,
                      int kappa, const FoldPlan& folds, const SplineParams& spline) {
  return LocalCv(epochs, layout, taus, folds, spline).evaluate(rho, kappa).mean_error;
}

ThresholdModel LocalModel::thresholds() const {
  ThresholdModel m;
  m.sensor_taus = sensor_taus;
  m.sensor_bounds = sensor_bounds;
  m.rho_star = rho_star;
  m.kappa_star = kappa_star;
  return m;
}

void LocalModel::validate() const {
  const auto q = sensor_names.size();
  if (sensor_taus.size() != q || sensor_bounds.size() != q) {
    throw ContractError("local model: thresholds and bounds must have one entry per sensor");
  }
  if (!(0 <= rho_star && rho_star < kappa_star && static_cast<std::size_t>(kappa_star) <= q)) {
    throw ContractError("local model: need 0 <= rho < kappa <= Q");
  }
  thresholds().validate();
}

LocalModel fit_local(const EpochsTensor& epochs, const SensorLayout& layout, const LocalConfig& config) {
  if (layout.size() != epochs.n_sensors()) throw ContractError("layout size does not match sensor count");
  const auto q = epochs.n_sensors();
  auto rhos = config.rho_candidates.empty() ? default_rho_candidates(q) : config.rho_candidates;
  auto kappas = config.kappa_candidates.empty() ? default_kappa_candidates(q) : config.kappa_candidates;
  for (int r : rhos) {
    if (r < 0 || static_cast<std::size_t>(r) >= q) throw ContractError("rho candidate " + std::to_string(r) + " outside [0, Q)");
  }
  for (int k : kappas) {
    if (k < 1 || static_cast<std::size_t>(k) > q) throw ContractError("kappa candidate " + std::to_string(k) + " outside [1, Q]");
  }

  const auto thresholds = fit_sensor_thresholds(epochs, layout, config);
  const LocalCv cv(epochs, layout, thresholds.taus, make_folds(epochs.n_trials(), config.k, config.seed), config.spline);

  std::size_t failures = 0;
  std::string last_failure;
  const auto objective = [&](int rho, int kappa) {
    try {
      return cv.evaluate(rho, kappa).mean_error;
    } catch (const RepairError& e) {
      ++failures;
      last_failure = e.what();
      return std::numeric_limits<double>::infinity();
    }
  };
  const auto pairs = grid_search_pairs(objective, rhos, kappas);
  if (failures == pairs.table.size()) throw RepairError("every (rho, kappa) pair failed: " + last_failure);

  LocalModel model;
  model.sensor_names = layout.names();
  model.sensor_taus = thresholds.taus;
  model.sensor_bounds = thresholds.bounds;
  model.rho_star = pairs.rho;
  model.kappa_star = pairs.kappa;
  model.k = config.k;
  model.seed = config.seed;
  model.budget = config.budget;
  model.spline = config.spline;
  model.cv_table = pairs.table;
  model.threshold_searches = thresholds.searches;
  for (auto j : thresholds.excluded) model.excluded_sensors.push_back(layout.name(j));
  return model;
}

RejectLog plan_local(const EpochsTensor& epochs, const SensorLayout& layout, const LocalModel& model) {
  if (layout.names() != model.sensor_names) {
    throw ModelMismatchError("sensor names of the data do not match the fitted model");
  }
  if (layout.size() != epochs.n_sensors()) throw ContractError("layout size does not match sensor count");
  const auto amps = peak_to_peak(epochs);
  const auto bad = indicator(amps, model.sensor_taus);
  auto log = repair_plan(bad, sensor_scores(amps, bad), model.rho_star, model.kappa_star);
  log.provenance["method"] = "local";
  log.provenance["seed"] = std::to_string(model.seed);
  if (!model.excluded_sensors.empty()) {
    std::string names;
    for (const auto& n : model.excluded_sensors) names += (names.empty() ? "" : ",") + n;
    log.provenance["excluded_sensors"] = names;
  }
  const auto warnings = clustered_repairs(layout, log.interpolation_mask());
  if (!warnings.empty()) log.provenance["interp_cluster_warnings"] = describe(warnings, layout);
  return log;
}

EpochsTensor apply_reject_log(const EpochsTensor& epochs, const SensorLayout& layout, const RejectLog& log,
                              const SplineParams& spline) {
  if (log.n_trials != epochs.n_trials() || log.n_sensors != epochs.n_sensors()) {
    throw ContractError("reject log shape does not match epochs");
  }
  const auto retained = log.retained_trials();
  if (retained.empty()) throw DataError("every trial was rejected; nothing remains to write");
  return interpolate_sensors(epochs, layout, log.interpolation_mask(), spline).select_trials(retained);
}

TransformResult transform(const EpochsTensor& epochs, const SensorLayout& layout, const LocalModel& model) {
  auto log = plan_local(epochs, layout, model);
  auto cleaned = apply_reject_log(epochs, layout, log, model.spline);
  return {std::move(cleaned), std::move(log)};
}

namespace {

using detail::Json;

constexpr int kModelVersion = 1;

Json encode_search(const SearchResult& s) {
  Json trace = Json::array();
  for (const auto& [x, y] : s.trace) trace.push_back(Json::array({x, y}));
  return Json{{"x_star", s.x_star}, {"y_star", s.y_star}, {"degenerate", s.degenerate}, {"trace", trace}};
}

SearchResult decode_search(const Json& j) {
  constexpr const char* what = "local model search";
  SearchResult s;
  s.x_star = detail::get_field<double>(j, "x_star", what);
  s.y_star = detail::get_field<double>(j, "y_star", what);
  s.degenerate = detail::get_field<bool>(j, "degenerate", what);
  for (const auto& p : detail::get_field<std::vector<std::vector<double>>>(j, "trace", what)) {
    if (p.size() != 2) throw FormatError("local model: trace points must be [x, y]");
    s.trace.emplace_back(p[0], p[1]);
  }
  return s;
}

}  // namespace

std::string encode_local_model(const LocalModel& model) {
  Json bounds = Json::array();
  for (const auto& [lo, hi] : model.sensor_bounds) bounds.push_back(Json::array({lo, hi}));
  Json table = Json::array();
  for (const auto& e : model.cv_table) {
    table.push_back(Json{{"rho", e.rho}, {"kappa", e.kappa}, {"value", detail::encode_real(e.value)}});
  }
  Json searches = Json::array();
  for (const auto& s : model.threshold_searches) searches.push_back(encode_search(s));
  const Json doc{
      {"version", kModelVersion},
      {"method", "local"},
      {"sensor_names", model.sensor_names},
      {"sensor_taus", model.sensor_taus},
      {"sensor_bounds", bounds},
      {"rho_star", model.rho_star},
      {"kappa_star", model.kappa_star},
      {"k", model.k},
      {"seed", model.seed},
      {"budget", model.budget.to_string()},
      {"spline", {{"stiffness_order", model.spline.stiffness_order}, {"n_terms", model.spline.n_terms}, {"reg", model.spline.reg}}},
      {"cv_table", table},
      {"threshold_searches", searches},
      {"excluded_sensors", model.excluded_sensors},
  };
  return doc.dump(2) + "\n";
}

LocalModel decode_local_model(const std::string& text) {
  constexpr const char* what = "local model";
  const auto doc = detail::parse_json(text, what);
  if (detail::get_field<int>(doc, "version", what) != kModelVersion) throw FormatError("local model: unsupported version");
  if (detail::get_field<std::string>(doc, "method", what) != "local") throw FormatError("local model: method is not 'local'");
  LocalModel m;
  m.sensor_names = detail::get_field<std::vector<std::string>>(doc, "sensor_names", what);
  m.sensor_taus = detail::get_field<std::vector<double>>(doc, "sensor_taus", what);
  for (const auto& b : detail::get_field<std::vector<std::vector<double>>>(doc, "sensor_bounds", what)) {
    if (b.size() != 2) throw FormatError("local model: bounds must be [lo, hi]");
    m.sensor_bounds.emplace_back(b[0], b[1]);
  }
  m.rho_star = detail::get_field<int>(doc, "rho_star", what);
  m.kappa_star = detail::get_field<int>(doc, "kappa_star", what);
  m.k = detail::get_field<int>(doc, "k", what);
  m.seed = detail::get_field<std::uint64_t>(doc, "seed", what);
  try {
    m.budget = Budget::parse(detail::get_field<std::string>(doc, "budget", what));
  } catch (const ContractError& e) {
    throw FormatError(std::string("local model: ") + e.what());
  }
  const auto& spline = doc.at("spline");
  m.spline.stiffness_order = detail::get_field<int>(spline, "stiffness_order", what);
  m.spline.n_terms = detail::get_field<int>(spline, "n_terms", what);
  m.spline.reg = detail::get_field<double>(spline, "reg", what);
  for (const auto& e : detail::get_field<Json>(doc, "cv_table", what)) {
    m.cv_table.push_back({detail::get_field<int>(e, "rho", what), detail::get_field<int>(e, "kappa", what),
                          detail::decode_real(detail::get_field<Json>(e, "value", what))});
  }
  for (const auto& s : detail::get_field<Json>(doc, "threshold_searches", what)) m.threshold_searches.push_back(decode_search(s));
  m.excluded_sensors = detail::get_field<std::vector<std::string>>(doc, "excluded_sensors", what);
  try {
    m.validate();
  } catch (const ContractError& e) {
    throw FormatError(std::string("local model: ") + e.what());
  }
  return m;
}

void save_local_model(const LocalModel& model, const std::filesystem::path& path) {
  write_text_file(path, encode_local_model(model));
}

LocalModel load_local_model(const std::filesystem::path& path) { return decode_local_model(read_text_file(path)); }

}  // namespace autoclean
