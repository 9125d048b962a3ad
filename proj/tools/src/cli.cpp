#include "autoclean_tools/cli.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "autoclean/baselines.hpp"
#include "autoclean/errors.hpp"
#include "autoclean/io.hpp"
#include "autoclean/reject_global.hpp"
#include "autoclean/reject_local.hpp"
#include "autoclean/review.hpp"
#include "autoclean/synth.hpp"
#include "autoclean_tools/review_server.hpp"

namespace autoclean::tools {

namespace {

using Json = nlohmann::json;

std::vector<int> parse_int_list(const std::string& text, const char* what) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    int v = 0;
    const auto* end = item.data() + item.size();
    const auto [ptr, ec] = std::from_chars(item.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ContractError(std::string(what) + ": '" + item + "' is not an integer");
    out.push_back(v);
  }
  if (out.empty()) throw ContractError(std::string(what) + " is empty");
  return out;
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void record_sensor_names(RejectLog& log, const SensorLayout& layout) {
  log.provenance["sensor_names"] = Json(layout.names()).dump();
}

std::vector<std::string> sensor_names_from_log(const RejectLog& log) {
  const auto it = log.provenance.find("sensor_names");
  if (it == log.provenance.end()) return {};
  try {
    return Json::parse(it->second).get<std::vector<std::string>>();
  } catch (const Json::exception&) {
    throw FormatError("reject log provenance 'sensor_names' is not a list of names");
  }
}

std::vector<std::int64_t> select_events(const std::vector<std::int64_t>& events, const std::vector<std::size_t>& keep) {
  if (events.empty()) return {};
  std::vector<std::int64_t> out;
  for (auto i : keep) out.push_back(events[i]);
  return out;
}

// Options shared between commands, filled by CLI11.
struct Options {
  std::string input;
  std::string out;
  std::string log;
  std::string model;
  std::string reject_log;
  std::uint64_t seed = 0;
  int k = kDefaultFolds;
  std::string budget = "10+40";
  std::string rho_grid;
  std::string kappa_grid;
  int jobs = 1;
  std::optional<double> tau;

  // simulate
  SimConfig sim;
  std::string config;
  std::string clean_out;
  std::string mask_out;

  // baselines
  double mains_hz = 50.0;
  int neighbors = 8;
  RansacParams ransac;
  std::string report;

  // evaluate / bench
  std::string metric = "linf";
  std::string a;
  std::string b;
  std::string methods = "reject_local,faster,ransac,sns";

  // review
  std::string overrides;
  std::string epochs;
  std::string host = "127.0.0.1";
  int port = 8765;
  std::string static_dir;
  int decimate = 0;
};

std::uint64_t default_seed() {
  const char* env = std::getenv("AUTOCLEAN_SEED");
  if (env == nullptr || *env == '\0') return 0;
  std::uint64_t v = 0;
  const auto* end = env + std::char_traits<char>::length(env);
  const auto [ptr, ec] = std::from_chars(env, end, v);
  if (ec != std::errc() || ptr != end) throw CLI::ValidationError("AUTOCLEAN_SEED", "must be a nonnegative integer");
  return v;
}

int cmd_simulate(Options& o, std::ostream& err) {
  SimConfig config = o.sim;
  if (!o.config.empty()) {
    // Explicit flags were already applied on top of the defaults; the file
    // provides the base and flags given on the command line win.
    const auto base = decode_sim_config(read_text_file(o.config));
    const SimConfig defaults;
    if (config.n_trials == defaults.n_trials) config.n_trials = base.n_trials;
    if (config.n_sensors == defaults.n_sensors) config.n_sensors = base.n_sensors;
    if (config.n_times == defaults.n_times) config.n_times = base.n_times;
    if (config.seed == defaults.seed) config.seed = base.seed;
    config.sfreq_hz = base.sfreq_hz;
    config.evoked_amplitude = base.evoked_amplitude;
    config.noise_amplitude = base.noise_amplitude;
    config.artifact_amplitude = base.artifact_amplitude;
    config.p_cell_artifact = base.p_cell_artifact;
    config.global_bad_sensors = base.global_bad_sensors;
    config.blink_rate = base.blink_rate;
  }
  const auto sim = simulate(config);
  const std::vector<std::int64_t> events(config.n_trials, 1);
  save_epochs(sim.corrupted, sim.layout, events, o.out);
  if (!o.clean_out.empty()) save_epochs(sim.truth.clean_epochs, sim.layout, events, o.clean_out);
  if (!o.mask_out.empty()) {
    Json mask = Json::array();
    for (Eigen::Index i = 0; i < sim.truth.corruption_mask.rows(); ++i) {
      Json row = Json::array();
      for (Eigen::Index j = 0; j < sim.truth.corruption_mask.cols(); ++j) row.push_back(sim.truth.corruption_mask(i, j) ? 1 : 0);
      mask.push_back(std::move(row));
    }
    const Json doc{{"version", 1}, {"corruption_mask", mask}, {"global_bad", sim.truth.global_bad}};
    write_text_file(o.mask_out, doc.dump() + "\n");
  }
  err << "simulated " << config.n_trials << " trials x " << config.n_sensors << " sensors x " << config.n_times
      << " samples (seed " << config.seed << ")\n";
  return kExitOk;
}

int cmd_fit_global(Options& o, std::ostream& err) {
  const auto bundle = load_epochs(o.input);
  const auto fit = fit_global(bundle.epochs, o.k, o.seed, Budget::parse(o.budget));
  write_text_file(o.out, encode_threshold_model(fit.model));
  err << "global threshold " << format_real(*fit.model.global_tau) << " (cv error " << format_real(fit.search.y_star)
      << ")\n";
  return kExitOk;
}

int cmd_fit_local(Options& o, std::ostream& err) {
  const auto bundle = load_epochs(o.input);
  LocalConfig config;
  config.k = o.k;
  config.seed = o.seed;
  config.budget = Budget::parse(o.budget);
  config.n_jobs = o.jobs;
  if (!o.rho_grid.empty()) config.rho_candidates = parse_int_list(o.rho_grid, "--rho-grid");
  if (!o.kappa_grid.empty()) config.kappa_candidates = parse_int_list(o.kappa_grid, "--kappa-grid");
  const auto model = fit_local(bundle.epochs, bundle.layout, config);
  save_local_model(model, o.out);
  err << "rho* = " << model.rho_star << ", kappa* = " << model.kappa_star << "\n";
  if (!model.excluded_sensors.empty()) {
    err << "warning: flat sensors excluded from thresholding:";
    for (const auto& n : model.excluded_sensors) err << " " << n;
    err << "\n";
  }
  return kExitOk;
}

int cmd_transform(Options& o, std::ostream& err) {
  const auto bundle = load_epochs(o.input);
  SplineParams spline;
  std::optional<LocalModel> model;
  if (!o.model.empty()) {
    model = load_local_model(o.model);
    spline = model->spline;
  } else if (o.reject_log.empty()) {
    throw CLI::RequiredError("--model");
  }
  RejectLog log;
  if (!o.reject_log.empty()) {
    log = load_reject_log(o.reject_log);
    const auto names = sensor_names_from_log(log);
    if (!names.empty() && names != bundle.layout.names()) {
      throw ModelMismatchError("reject log sensor names do not match the epochs");
    }
  } else {
    log = plan_local(bundle.epochs, bundle.layout, *model);
    record_sensor_names(log, bundle.layout);
  }
  const auto cleaned = apply_reject_log(bundle.epochs, bundle.layout, log, spline);
  save_epochs(cleaned, bundle.layout, select_events(bundle.event_codes, log.retained_trials()), o.out);
  if (!o.log.empty()) save_reject_log(log, o.log);
  if (const auto it = log.provenance.find("interp_cluster_warnings"); it != log.provenance.end()) {
    err << "warning: clustered interpolation in " << it->second << "\n";
  }
  err << "kept " << cleaned.n_trials() << " of " << bundle.epochs.n_trials() << " trials\n";
  return kExitOk;
}

int cmd_apply_global(Options& o, std::ostream& err) {
  const auto bundle = load_epochs(o.input);
  double tau = 0.0;
  if (o.tau) {
    tau = *o.tau;
  } else if (!o.model.empty()) {
    const auto m = decode_threshold_model(read_text_file(o.model));
    if (!m.global_tau) throw ModelMismatchError("model has no global threshold");
    tau = *m.global_tau;
  } else {
    throw CLI::RequiredError("--tau or --model");
  }
  auto log = apply_global(bundle.epochs, tau);
  record_sensor_names(log, bundle.layout);
  if (!o.log.empty()) save_reject_log(log, o.log);
  if (!o.out.empty()) {
    const auto keep = log.retained_trials();
    if (keep.empty()) throw DataError("every trial was rejected; nothing remains to write");
    save_epochs(bundle.epochs.select_trials(keep), bundle.layout, select_events(bundle.event_codes, keep), o.out);
  }
  err << "rejected " << log.n_rejected() << " of " << log.n_trials << " trials\n";
  return kExitOk;
}

Json sensor_list(const SensorLayout& layout, const std::vector<std::size_t>& ids) {
  Json out = Json::array();
  for (auto j : ids) out.push_back(layout.name(j));
  return out;
}

int cmd_faster(Options& o, std::ostream& err) {
  const auto bundle = load_epochs(o.input);
  const auto report = faster_bad_sensors(bundle.epochs, bundle.layout, o.mains_hz);
  const auto cleaned = interpolate_bad_sensors(bundle.epochs, bundle.layout, report.union_flagged);
  save_epochs(cleaned, bundle.layout, bundle.event_codes, o.out);
  if (!o.report.empty()) {
    Json flagged = Json::object();
    for (std::size_t c = 0; c < kFasterCriteria; ++c) {
      flagged[std::string(to_string(static_cast<FasterCriterion>(c)))] = sensor_list(bundle.layout, report.flagged[c]);
    }
    const Json doc{{"version", 1}, {"method", "faster"}, {"mains_hz", o.mains_hz}, {"flagged", flagged},
                   {"union", sensor_list(bundle.layout, report.union_flagged)}};
    write_text_file(o.report, doc.dump(2) + "\n");
  }
  err << "FASTER flagged " << report.union_flagged.size() << " sensors\n";
  return kExitOk;
}

int cmd_sns(Options& o, std::ostream& err) {
  const auto bundle = load_epochs(o.input);
  save_epochs(sns_clean(bundle.epochs, o.neighbors), bundle.layout, bundle.event_codes, o.out);
  err << "SNS applied with " << o.neighbors << " neighbors\n";
  return kExitOk;
}

int cmd_ransac(Options& o, std::ostream& err) {
  const auto bundle = load_epochs(o.input);
  auto params = o.ransac;
  params.seed = o.seed;
  const auto result = ransac_bad_sensors(bundle.epochs, bundle.layout, params);
  save_epochs(interpolate_bad_sensors(bundle.epochs, bundle.layout, result.global_bad), bundle.layout,
              bundle.event_codes, o.out);
  if (!o.report.empty()) {
    Json per_trial = Json::array();
    for (Eigen::Index i = 0; i < result.per_trial_bad.rows(); ++i) {
      std::vector<std::size_t> bad;
      for (Eigen::Index j = 0; j < result.per_trial_bad.cols(); ++j) {
        if (result.per_trial_bad(i, j)) bad.push_back(static_cast<std::size_t>(j));
      }
      per_trial.push_back(sensor_list(bundle.layout, bad));
    }
    const Json doc{{"version", 1}, {"method", "ransac"}, {"seed", params.seed},
                   {"global_bad", sensor_list(bundle.layout, result.global_bad)}, {"per_trial_bad", per_trial}};
    write_text_file(o.report, doc.dump(2) + "\n");
  }
  err << "RANSAC marked " << result.global_bad.size() << " sensors globally bad\n";
  return kExitOk;
}

int cmd_evaluate(Options& o, std::ostream& out) {
  const auto metric = metric_from_string(o.metric);
  const auto a = evoked(load_epochs(o.a).epochs);
  const auto b = evoked(load_epochs(o.b).epochs);
  out << format_real(metric == Metric::linf ? eval_linf(a, b) : eval_l2(a, b)) << "\n";
  return kExitOk;
}

int cmd_bench(Options& o, std::ostream& out, std::ostream& err) {
  auto config = o.config.empty() ? SimConfig{} : decode_sim_config(read_text_file(o.config));
  const auto sim = simulate(config);
  std::vector<std::string> names;
  std::stringstream ss(o.methods);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) names.push_back(item);
  }
  const auto report = benchmark(sim, standard_methods(names, config.seed), metric_from_string(o.metric));
  out << format_bench_table(report);
  if (!o.out.empty()) write_text_file(o.out, encode_bench_report(report));
  for (const auto& r : report.rows) {
    if (r.failed) err << "warning: method " << r.method << " failed: " << r.error << "\n";
  }
  return kExitOk;
}

int cmd_review_serve(Options& o, std::ostream& err) {
  const auto bundle = load_epochs(o.input);
  const auto log = load_reject_log(o.log);
  const int decimate = o.decimate > 0 ? o.decimate : default_decimation(bundle.epochs);
  ReviewServerConfig config;
  config.bundle_json = make_review_bundle(bundle.epochs, bundle.layout, log, decimate, bundle.event_codes);
  config.overrides_path = o.overrides;
  config.n_trials = bundle.epochs.n_trials();
  config.sensor_names = bundle.layout.names();
  if (!o.static_dir.empty()) config.static_dir = o.static_dir;
  ReviewServer server(std::move(config));
  const int port = server.bind(o.host, o.port);
  err << "review server listening on http://" << o.host << ":" << port << "/\n";
  server.serve();
  return kExitOk;
}

int cmd_review_apply(Options& o, std::ostream& err) {
  const auto log = load_reject_log(o.log);
  auto names = sensor_names_from_log(log);
  if (!o.epochs.empty()) {
    const auto from_epochs = load_epochs(o.epochs).layout.names();
    if (!names.empty() && names != from_epochs) throw ModelMismatchError("reject log sensor names do not match the epochs");
    names = from_epochs;
  }
  if (names.empty()) throw DataError("reject log carries no sensor names; pass --epochs to supply them");
  const auto overrides = decode_overrides(read_text_file(o.overrides));
  const auto updated = apply_overrides(log, overrides, names);
  save_reject_log(updated, o.out);
  err << "applied " << overrides.entries.size() << " overrides\n";
  return kExitOk;
}

int cmd_review_bundle(Options& o) {
  const auto bundle = load_epochs(o.input);
  const auto log = load_reject_log(o.log);
  const int decimate = o.decimate > 0 ? o.decimate : default_decimation(bundle.epochs);
  write_text_file(o.out, make_review_bundle(bundle.epochs, bundle.layout, log, decimate, bundle.event_codes));
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Automated rejection and repair of bad trials and sensors in multi-trial recordings", "autoclean"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "autoclean 0.1.0");

  try {
    o.seed = default_seed();
    o.sim.seed = o.seed;
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  auto* sim = app.add_subcommand("simulate", "Write a synthetic recording with planted artifacts");
  sim->add_option("--seed", o.sim.seed, "Random seed");
  sim->add_option("--trials", o.sim.n_trials, "Number of trials");
  sim->add_option("--sensors", o.sim.n_sensors, "Number of sensors");
  sim->add_option("--times", o.sim.n_times, "Samples per trial");
  sim->add_option("--global-bad", o.sim.global_bad_sensors, "Number of globally bad sensors");
  sim->add_option("--blink-rate", o.sim.blink_rate, "Fraction of trials with a blink");
  sim->add_option("--p-cell", o.sim.p_cell_artifact, "Fraction of corrupted cells");
  sim->add_option("--config", o.config, "Simulation config file (JSON) used as the base");
  sim->add_option("--out", o.out, "Output recording (.erb)")->required();
  sim->add_option("--clean-out", o.clean_out, "Also write the artifact-free recording");
  sim->add_option("--mask-out", o.mask_out, "Also write the ground-truth corruption mask (JSON)");

  auto* fg = app.add_subcommand("fit-global", "Learn one rejection threshold for all sensors");
  fg->add_option("input", o.input, "Input recording (.erb)")->required();
  fg->add_option("--k", o.k, "Cross-validation folds");
  fg->add_option("--seed", o.seed, "Random seed");
  fg->add_option("--budget", o.budget, "Evaluations as INIT+ITER or a total");
  fg->add_option("--out", o.out, "Output model (JSON)")->required();

  auto* fl = app.add_subcommand("fit-local", "Learn per-sensor thresholds and the repair policy");
  fl->add_option("input", o.input, "Input recording (.erb)")->required();
  fl->add_option("--k", o.k, "Cross-validation folds");
  fl->add_option("--seed", o.seed, "Random seed");
  fl->add_option("--budget", o.budget, "Evaluations per sensor as INIT+ITER or a total");
  fl->add_option("--rho-grid", o.rho_grid, "Comma-separated candidates for the number of interpolated sensors");
  fl->add_option("--kappa-grid", o.kappa_grid, "Comma-separated candidates for the rejection count");
  fl->add_option("--jobs", o.jobs, "Worker threads for the per-sensor searches");
  fl->add_option("--out", o.out, "Output model (JSON)")->required();

  auto* tr = app.add_subcommand("transform", "Reject and repair trials with a fitted local model");
  tr->add_option("input", o.input, "Input recording (.erb)")->required();
  tr->add_option("--model", o.model, "Local model from fit-local");
  tr->add_option("--reject-log", o.reject_log, "Apply this (possibly reviewed) reject log instead of planning");
  tr->add_option("--out", o.out, "Cleaned recording (.erb)")->required();
  tr->add_option("--log", o.log, "Reject log output (JSON)");

  auto* ag = app.add_subcommand("apply-global", "Reject trials over a global threshold");
  ag->add_option("input", o.input, "Input recording (.erb)")->required();
  ag->add_option("--tau", o.tau, "Threshold in data units");
  ag->add_option("--model", o.model, "Global model from fit-global");
  ag->add_option("--log", o.log, "Reject log output (JSON)");
  ag->add_option("--out", o.out, "Retained trials (.erb)");

  auto* bl = app.add_subcommand("baseline", "Run a competing method");
  bl->require_subcommand(1);
  auto* bf = bl->add_subcommand("faster", "FASTER bad-sensor detection, then interpolation");
  bf->add_option("input", o.input, "Input recording (.erb)")->required();
  bf->add_option("--mains-hz", o.mains_hz, "Line frequency");
  bf->add_option("--out", o.out, "Repaired recording (.erb)")->required();
  bf->add_option("--report", o.report, "Flagged sensors (JSON)");
  auto* bs = bl->add_subcommand("sns", "Sensor Noise Suppression");
  bs->add_option("input", o.input, "Input recording (.erb)")->required();
  bs->add_option("--neighbors", o.neighbors, "Neighbors per sensor");
  bs->add_option("--out", o.out, "Cleaned recording (.erb)")->required();
  auto* br = bl->add_subcommand("ransac", "RANSAC bad-sensor detection, then interpolation");
  br->add_option("input", o.input, "Input recording (.erb)")->required();
  br->add_option("--resamples", o.ransac.n_resamples, "Number of random subsets");
  br->add_option("--fraction", o.ransac.fraction, "Fraction of sensors per subset");
  br->add_option("--corr-threshold", o.ransac.corr_threshold, "Correlation below which a cell is bad");
  br->add_option("--unbroken-time", o.ransac.unbroken_time, "Fraction of bad trials for a globally bad sensor");
  br->add_option("--seed", o.seed, "Random seed");
  br->add_option("--out", o.out, "Repaired recording (.erb)")->required();
  br->add_option("--report", o.report, "Per-trial and global bad sensors (JSON)");

  auto* ev = app.add_subcommand("evaluate", "Distance between the evoked responses of two recordings");
  ev->add_option("--metric", o.metric, "linf or l2")->check(CLI::IsMember({"linf", "l2"}));
  ev->add_option("a", o.a, "First recording (.erb)")->required();
  ev->add_option("b", o.b, "Second recording (.erb)")->required();

  auto* be = app.add_subcommand("bench", "Compare methods on a simulated recording");
  be->add_option("--config", o.config, "Simulation config (JSON)");
  be->add_option("--methods", o.methods, "Comma-separated methods");
  be->add_option("--metric", o.metric, "Sort metric: linf or l2")->check(CLI::IsMember({"linf", "l2"}));
  be->add_option("--out", o.out, "Report output (JSON)");

  auto* rv = app.add_subcommand("review", "Human review of a reject log");
  rv->require_subcommand(1);
  auto* rs = rv->add_subcommand("serve", "Serve the review API and viewer");
  rs->add_option("input", o.input, "Recording (.erb)")->required();
  rs->add_option("--log", o.log, "Reject log (JSON)")->required();
  rs->add_option("--overrides", o.overrides, "Where POSTed overrides are written")->required();
  rs->add_option("--port", o.port, "TCP port (0 picks a free one)");
  rs->add_option("--host", o.host, "Bind address");
  rs->add_option("--static", o.static_dir, "Directory with the viewer's static assets");
  rs->add_option("--decimate", o.decimate, "Keep every n-th sample (default: fit the payload limit)");
  auto* ra = rv->add_subcommand("apply", "Apply an override file to a reject log");
  ra->add_option("--log", o.log, "Reject log (JSON)")->required();
  ra->add_option("--overrides", o.overrides, "Override file (JSON)")->required();
  ra->add_option("--out", o.out, "Updated reject log (JSON)")->required();
  ra->add_option("--epochs", o.epochs, "Recording that supplies sensor names when the log has none");
  auto* rb = rv->add_subcommand("bundle", "Write the review bundle document");
  rb->add_option("input", o.input, "Recording (.erb)")->required();
  rb->add_option("--log", o.log, "Reject log (JSON)")->required();
  rb->add_option("--decimate", o.decimate, "Keep every n-th sample");
  rb->add_option("--out", o.out, "Bundle output (JSON)")->required();

  // CLI11 consumes its argument vector from the back; argv[0] is skipped.
  std::vector<std::string> rev;
  if (args.size() > 1) rev.assign(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (sim->parsed()) return cmd_simulate(o, err);
    if (fg->parsed()) return cmd_fit_global(o, err);
    if (fl->parsed()) return cmd_fit_local(o, err);
    if (tr->parsed()) return cmd_transform(o, err);
    if (ag->parsed()) return cmd_apply_global(o, err);
    if (bf->parsed()) return cmd_faster(o, err);
    if (bs->parsed()) return cmd_sns(o, err);
    if (br->parsed()) return cmd_ransac(o, err);
    if (ev->parsed()) return cmd_evaluate(o, out);
    if (be->parsed()) return cmd_bench(o, out, err);
    if (rs->parsed()) return cmd_review_serve(o, err);
    if (ra->parsed()) return cmd_review_apply(o, err);
    if (rb->parsed()) return cmd_review_bundle(o);
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataFailure& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalFailure& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace autoclean::tools
