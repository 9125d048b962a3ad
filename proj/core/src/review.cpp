#include "autoclean/review.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "autoclean/errors.hpp"
#include "json_util.hpp"

namespace autoclean {

using detail::Json;

std::string_view to_string(OverrideAction a) {
  switch (a) {
    case OverrideAction::keep: return "keep";
    case OverrideAction::reject: return "reject";
    case OverrideAction::interpolate: return "interpolate";
  }
  return "?";
}

namespace {

constexpr int kOverrideVersion = 1;

std::string field(std::size_t k, const char* name) {
  return "entries[" + std::to_string(k) + "]." + name;
}

}  // namespace

OverrideSet decode_overrides(const std::string& text) {
  const auto doc = detail::parse_json(text, "overrides");
  if (!doc.is_object()) throw FormatError("overrides: document must be an object");
  if (!doc.contains("version") || doc.at("version") != kOverrideVersion) {
    throw FormatError("overrides: version must be " + std::to_string(kOverrideVersion));
  }
  if (!doc.contains("entries") || !doc.at("entries").is_array()) throw FormatError("overrides: entries must be an array");
  OverrideSet set;
  std::size_t k = 0;
  for (const auto& e : doc.at("entries")) {
    if (!e.is_object()) throw FormatError("overrides: " + field(k, "") + " must be an object");
    if (!e.contains("trial") || !e.at("trial").is_number_integer() || e.at("trial").get<std::int64_t>() < 0) {
      throw FormatError("overrides: " + field(k, "trial") + " must be a nonnegative integer");
    }
    OverrideEntry entry;
    entry.trial = e.at("trial").get<std::size_t>();
    if (e.contains("sensor") && !e.at("sensor").is_null()) {
      if (!e.at("sensor").is_string()) throw FormatError("overrides: " + field(k, "sensor") + " must be a string");
      entry.sensor = e.at("sensor").get<std::string>();
    }
    const auto action = e.contains("action") && e.at("action").is_string() ? e.at("action").get<std::string>() : "";
    if (action == "keep") {
      entry.action = OverrideAction::keep;
    } else if (action == "reject") {
      entry.action = OverrideAction::reject;
    } else if (action == "interpolate") {
      entry.action = OverrideAction::interpolate;
    } else {
      throw FormatError("overrides: " + field(k, "action") + " must be keep, reject or interpolate");
    }
    for (const auto& [key, value] : e.items()) {
      if (key != "trial" && key != "sensor" && key != "action") {
        throw FormatError("overrides: " + field(k, key.c_str()) + " is not a known field");
      }
    }
    set.entries.push_back(std::move(entry));
    ++k;
  }
  return set;
}

std::string encode_overrides(const OverrideSet& overrides) {
  Json entries = Json::array();
  for (const auto& e : overrides.entries) {
    Json j{{"trial", e.trial}, {"action", std::string(to_string(e.action))}};
    if (e.sensor) j["sensor"] = *e.sensor;
    entries.push_back(std::move(j));
  }
  return Json{{"version", kOverrideVersion}, {"entries", entries}}.dump(2) + "\n";
}

void validate_overrides(const OverrideSet& overrides, std::size_t n_trials, const std::vector<std::string>& sensor_names) {
  for (std::size_t k = 0; k < overrides.entries.size(); ++k) {
    const auto& e = overrides.entries[k];
    if (e.trial >= n_trials) {
      throw OverrideError(field(k, "trial") + ": " + std::to_string(e.trial) + " is outside [0, " +
                          std::to_string(n_trials) + ")");
    }
    if (e.sensor) {
      if (std::find(sensor_names.begin(), sensor_names.end(), *e.sensor) == sensor_names.end()) {
        throw OverrideError(field(k, "sensor") + ": unknown sensor '" + *e.sensor + "'");
      }
    } else if (e.action == OverrideAction::interpolate) {
      throw OverrideError(field(k, "sensor") + ": interpolate needs a sensor");
    }
  }
}

RejectLog apply_overrides(const RejectLog& log, const OverrideSet& overrides,
                          const std::vector<std::string>& sensor_names) {
  if (sensor_names.size() != log.n_sensors) throw ContractError("sensor names do not match the reject log");
  validate_overrides(overrides, log.n_trials, sensor_names);
  if (overrides.entries.empty()) return log;

  RejectLog out = log;
  const auto manual = log.manual_trials();
  std::set<std::size_t> touched(manual.begin(), manual.end());
  for (const auto& e : overrides.entries) {
    const auto i = e.trial;
    touched.insert(i);
    if (!e.sensor) {
      if (e.action == OverrideAction::keep) {
        out.trial_verdicts[i] = Verdict::retained;
        for (std::size_t j = 0; j < out.n_sensors; ++j) out.cell(i, j) = CellState::good;
      } else {
        out.trial_verdicts[i] = Verdict::rejected;
        for (std::size_t j = 0; j < out.n_sensors; ++j) {
          if (out.cell(i, j) == CellState::bad_interpolated) out.cell(i, j) = CellState::bad_uninterpolated;
        }
      }
      continue;
    }
    const auto j = static_cast<std::size_t>(std::find(sensor_names.begin(), sensor_names.end(), *e.sensor) -
                                            sensor_names.begin());
    switch (e.action) {
      case OverrideAction::keep: out.cell(i, j) = CellState::good; break;
      case OverrideAction::reject: out.cell(i, j) = CellState::bad_uninterpolated; break;
      case OverrideAction::interpolate:
        out.cell(i, j) = CellState::bad_interpolated;
        out.trial_verdicts[i] = Verdict::retained;
        break;
    }
  }
  std::string list;
  for (auto i : touched) list += (list.empty() ? "" : ",") + std::to_string(i);
  out.provenance["manual_trials"] = list;
  out.validate();
  return out;
}

int default_decimation(const EpochsTensor& epochs, std::size_t limit_bytes) {
  // Rendered JSON numbers take at most ~24 bytes each.
  constexpr std::size_t kBytesPerValue = 24;
  const auto cells = epochs.n_trials() * epochs.n_sensors();
  for (std::size_t d = 1;; ++d) {
    const auto len = (epochs.n_times() + d - 1) / d;
    if (cells * len * kBytesPerValue <= limit_bytes || len == 1) return static_cast<int>(d);
  }
}

std::string make_review_bundle(const EpochsTensor& epochs, const SensorLayout& layout, const RejectLog& log,
                               int decimate, const std::vector<std::int64_t>& event_codes) {
  if (decimate < 1) throw ContractError("decimate must be at least 1");
  if (log.n_trials != epochs.n_trials() || log.n_sensors != epochs.n_sensors() || layout.size() != epochs.n_sensors()) {
    throw ContractError("reject log, layout and epochs disagree in shape");
  }
  const auto d = static_cast<std::size_t>(decimate);
  const auto len = (epochs.n_times() + d - 1) / d;

  Json verdicts = Json::array();
  Json states = Json::array();
  Json series = Json::array();
  Json boundaries = Json::array();
  for (std::size_t i = 0; i < log.n_trials; ++i) {
    verdicts.push_back(std::string(to_string(log.trial_verdicts[i])));
    boundaries.push_back(i * len);
    Json row = Json::array();
    Json trial = Json::array();
    for (std::size_t j = 0; j < log.n_sensors; ++j) {
      row.push_back(std::string(to_code(log.cell(i, j))));
      const auto s = epochs.series(i, j);
      Json values = Json::array();
      for (std::size_t t = 0; t < s.size(); t += d) values.push_back(s[t]);
      trial.push_back(std::move(values));
    }
    states.push_back(std::move(row));
    series.push_back(std::move(trial));
  }
  const Json doc{
      {"version", 1},
      {"n_trials", epochs.n_trials()},
      {"n_sensors", epochs.n_sensors()},
      {"n_times", epochs.n_times()},
      {"decimate", decimate},
      {"samples_per_trial", len},
      {"sfreq_hz", epochs.sfreq_hz()},
      {"unit", std::string(to_string(epochs.unit()))},
      {"sensor_names", layout.names()},
      {"trial_boundaries", boundaries},
      {"event_codes", event_codes},
      {"trial_verdicts", verdicts},
      {"cell_state", states},
      {"series", series},
  };
  return doc.dump();
}

}  // namespace autoclean
