#include "autoclean/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "autoclean/errors.hpp"
#include "json_util.hpp"

namespace autoclean {

namespace {

using detail::Json;

constexpr char kMagic[4] = {'A', 'R', 'J', '1'};
constexpr int kVersion = 1;

void put_u64_le(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint64_t get_u64_le(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int b = 7; b >= 0; --b) v = (v << 8) | p[b];
  return v;
}

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_binary_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace

std::vector<std::uint8_t> encode_epochs(const EpochsTensor& epochs, const SensorLayout& layout,
                                        const std::vector<std::int64_t>& events) {
  if (layout.size() != epochs.n_sensors()) throw ContractError("layout size does not match sensor count");
  if (events.size() != epochs.n_trials()) throw ContractError("event code count does not match trial count");

  Json positions = Json::array();
  for (const auto& p : layout.positions()) positions.push_back({p[0], p[1], p[2]});
  Json flags = Json::array();
  for (bool f : epochs.origin_flags()) flags.push_back(f);

  // nlohmann::json keeps object keys sorted, so the header bytes are canonical.
  const Json header = {
      {"version", kVersion},
      {"n_trials", epochs.n_trials()},
      {"n_sensors", epochs.n_sensors()},
      {"n_times", epochs.n_times()},
      {"sfreq_hz", epochs.sfreq_hz()},
      {"unit", std::string(to_string(epochs.unit()))},
      {"sensor_names", layout.names()},
      {"sensor_positions", positions},
      {"event_codes", events},
      {"origin_flags", flags},
  };
  const std::string text = header.dump();

  std::vector<std::uint8_t> out;
  out.reserve(8 + text.size() + epochs.data().size() * 8);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  const auto h = static_cast<std::uint32_t>(text.size());
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(h >> (8 * b)));
  out.insert(out.end(), text.begin(), text.end());
  for (double v : epochs.data()) put_u64_le(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

EpochsBundle decode_epochs(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("not an epochs bundle (bad magic bytes)");
  }
  if (bytes.size() < 8) throw TruncationError("epochs bundle ends inside the header length field");
  std::uint32_t h = 0;
  for (int b = 3; b >= 0; --b) h = (h << 8) | bytes[4 + static_cast<std::size_t>(b)];
  if (bytes.size() < 8 + static_cast<std::size_t>(h)) throw TruncationError("epochs bundle ends inside the header");

  const std::string text(bytes.begin() + 8, bytes.begin() + 8 + h);
  const Json header = detail::parse_json(text, "epochs header");
  constexpr const char* what = "epochs header";
  if (detail::get_field<int>(header, "version", what) != kVersion) throw FormatError("unsupported bundle version");
  const auto n_trials = detail::get_field<std::size_t>(header, "n_trials", what);
  const auto n_sensors = detail::get_field<std::size_t>(header, "n_sensors", what);
  const auto n_times = detail::get_field<std::size_t>(header, "n_times", what);
  const auto sfreq = detail::get_field<double>(header, "sfreq_hz", what);
  const auto unit = unit_from_string(detail::get_field<std::string>(header, "unit", what));
  auto names = detail::get_field<std::vector<std::string>>(header, "sensor_names", what);
  const auto raw_positions = detail::get_field<std::vector<std::vector<double>>>(header, "sensor_positions", what);
  auto events = detail::get_field<std::vector<std::int64_t>>(header, "event_codes", what);
  auto flags = detail::get_field<std::vector<bool>>(header, "origin_flags", what);

  if (names.size() != n_sensors || raw_positions.size() != n_sensors) {
    throw FormatError("sensor names/positions do not match n_sensors");
  }
  if (events.size() != n_trials) throw FormatError("event_codes length does not match n_trials");
  std::vector<Position> positions;
  positions.reserve(n_sensors);
  for (const auto& p : raw_positions) {
    if (p.size() != 3) throw FormatError("sensor positions must have three coordinates");
    positions.push_back({p[0], p[1], p[2]});
  }

  const std::size_t n_values = n_trials * n_sensors * n_times;
  const std::size_t blob = bytes.size() - 8 - h;
  if (blob != n_values * 8) {
    throw TruncationError("sample blob holds " + std::to_string(blob) + " bytes, header declares " +
                          std::to_string(n_values * 8));
  }
  std::vector<double> data(n_values);
  const std::uint8_t* p = bytes.data() + 8 + h;
  for (std::size_t k = 0; k < n_values; ++k) data[k] = std::bit_cast<double>(get_u64_le(p + 8 * k));

  SensorLayout layout(std::move(names), std::move(positions));
  EpochsTensor epochs(std::move(data), n_trials, n_sensors, n_times, sfreq, unit, std::move(flags));
  return EpochsBundle{std::move(epochs), std::move(layout), std::move(events)};
}

void save_epochs(const EpochsTensor& epochs, const SensorLayout& layout, const std::vector<std::int64_t>& events,
                 const std::filesystem::path& path) {
  write_binary_file(path, encode_epochs(epochs, layout, events));
}

EpochsBundle load_epochs(const std::filesystem::path& path) { return decode_epochs(read_binary_file(path)); }

std::string encode_reject_log(const RejectLog& log) {
  log.validate();
  Json verdicts = Json::array();
  for (auto v : log.trial_verdicts) verdicts.push_back(std::string(to_string(v)));
  Json cells = Json::array();
  Json scores = Json::array();
  for (std::size_t i = 0; i < log.n_trials; ++i) {
    Json row = Json::array();
    Json srow = Json::array();
    for (std::size_t j = 0; j < log.n_sensors; ++j) {
      row.push_back(std::string(to_code(log.cell(i, j))));
      srow.push_back(detail::encode_real(log.score(i, j)));
    }
    cells.push_back(std::move(row));
    scores.push_back(std::move(srow));
  }
  const Json doc = {
      {"version", kVersion},
      {"trial_verdicts", verdicts},
      {"cell_state", cells},
      {"scores", scores},
      {"provenance", log.provenance},
  };
  return doc.dump() + "\n";
}

RejectLog decode_reject_log(const std::string& text) {
  constexpr const char* what = "reject log";
  const Json doc = detail::parse_json(text, what);
  if (detail::get_field<int>(doc, "version", what) != kVersion) throw FormatError("unsupported reject log version");
  const auto verdicts = detail::get_field<std::vector<std::string>>(doc, "trial_verdicts", what);
  const auto cells = detail::get_field<std::vector<std::vector<std::string>>>(doc, "cell_state", what);
  if (!doc.contains("scores") || !doc["scores"].is_array()) throw FormatError("reject log: missing scores");
  const Json& scores = doc["scores"];

  RejectLog log;
  log.n_trials = verdicts.size();
  log.n_sensors = cells.empty() ? 0 : cells.front().size();
  if (cells.size() != log.n_trials || scores.size() != log.n_trials) {
    throw FormatError("reject log: row counts disagree");
  }
  for (const auto& v : verdicts) log.trial_verdicts.push_back(verdict_from_string(v));
  for (std::size_t i = 0; i < log.n_trials; ++i) {
    if (cells[i].size() != log.n_sensors || !scores[i].is_array() || scores[i].size() != log.n_sensors) {
      throw FormatError("reject log: ragged row " + std::to_string(i));
    }
    for (std::size_t j = 0; j < log.n_sensors; ++j) {
      log.cell_state.push_back(cell_state_from_code(cells[i][j]));
      log.scores.push_back(detail::decode_real(scores[i][j]));
    }
  }
  if (doc.contains("provenance")) {
    log.provenance = detail::get_field<std::map<std::string, std::string>>(doc, "provenance", what);
  }
  log.validate();
  return log;
}

void save_reject_log(const RejectLog& log, const std::filesystem::path& path) {
  write_text_file(path, encode_reject_log(log));
}

RejectLog load_reject_log(const std::filesystem::path& path) { return decode_reject_log(read_text_file(path)); }

std::string encode_threshold_model(const ThresholdModel& model) {
  model.validate();
  Json doc = {{"version", kVersion}, {"degenerate", model.degenerate}};
  doc["global_tau"] = model.global_tau ? Json(*model.global_tau) : Json(nullptr);
  doc["global_bounds"] = model.global_bounds ? Json::array({model.global_bounds->first, model.global_bounds->second})
                                             : Json(nullptr);
  doc["sensor_taus"] = model.sensor_taus ? Json(*model.sensor_taus) : Json(nullptr);
  if (model.sensor_bounds) {
    Json b = Json::array();
    for (const auto& [lo, hi] : *model.sensor_bounds) b.push_back({lo, hi});
    doc["sensor_bounds"] = b;
  } else {
    doc["sensor_bounds"] = nullptr;
  }
  doc["rho_star"] = model.rho_star ? Json(*model.rho_star) : Json(nullptr);
  doc["kappa_star"] = model.kappa_star ? Json(*model.kappa_star) : Json(nullptr);
  Json traces = Json::array();
  for (const auto& t : model.cv_traces) {
    Json folds = Json::array();
    for (double e : t.fold_errors) folds.push_back(detail::encode_real(e));
    traces.push_back({{"value", t.value}, {"fold_errors", folds}, {"mean_error", detail::encode_real(t.mean_error)}});
  }
  doc["cv_traces"] = traces;
  return doc.dump() + "\n";
}

ThresholdModel decode_threshold_model(const std::string& text) {
  constexpr const char* what = "threshold model";
  const Json doc = detail::parse_json(text, what);
  if (detail::get_field<int>(doc, "version", what) != kVersion) throw FormatError("unsupported model version");
  ThresholdModel m;
  m.degenerate = doc.value("degenerate", false);
  try {
    if (doc.contains("global_tau") && !doc["global_tau"].is_null()) m.global_tau = doc["global_tau"].get<double>();
    if (doc.contains("global_bounds") && !doc["global_bounds"].is_null()) {
      const auto b = doc["global_bounds"].get<std::vector<double>>();
      if (b.size() != 2) throw FormatError("global_bounds must have two entries");
      m.global_bounds = Bounds{b[0], b[1]};
    }
    if (doc.contains("sensor_taus") && !doc["sensor_taus"].is_null()) {
      m.sensor_taus = doc["sensor_taus"].get<std::vector<double>>();
    }
    if (doc.contains("sensor_bounds") && !doc["sensor_bounds"].is_null()) {
      std::vector<Bounds> bounds;
      for (const auto& b : doc["sensor_bounds"]) bounds.emplace_back(b.at(0).get<double>(), b.at(1).get<double>());
      m.sensor_bounds = std::move(bounds);
    }
    if (doc.contains("rho_star") && !doc["rho_star"].is_null()) m.rho_star = doc["rho_star"].get<int>();
    if (doc.contains("kappa_star") && !doc["kappa_star"].is_null()) m.kappa_star = doc["kappa_star"].get<int>();
    for (const auto& t : doc.value("cv_traces", Json::array())) {
      CvTracePoint p;
      p.value = t.at("value").get<double>();
      for (const auto& e : t.at("fold_errors")) p.fold_errors.push_back(detail::decode_real(e));
      p.mean_error = detail::decode_real(t.at("mean_error"));
      m.cv_traces.push_back(std::move(p));
    }
  } catch (const Json::exception& e) {
    throw FormatError(std::string("threshold model: ") + e.what());
  }
  m.validate();
  return m;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << text;
    if (!out) throw IoError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

}  // namespace autoclean
