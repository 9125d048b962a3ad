#include "autoclean/reject_log.hpp"

#include <algorithm>
#include <sstream>

#include "autoclean/errors.hpp"

namespace autoclean {

std::string_view to_string(Verdict v) { return v == Verdict::retained ? "retained" : "rejected"; }

std::string_view to_code(CellState s) {
  switch (s) {
    case CellState::good:
      return "g";
    case CellState::bad_interpolated:
      return "i";
    case CellState::bad_uninterpolated:
      return "b";
  }
  return "g";
}

Verdict verdict_from_string(std::string_view text) {
  if (text == "retained") return Verdict::retained;
  if (text == "rejected") return Verdict::rejected;
  throw FormatError("unknown trial verdict '" + std::string(text) + "'");
}

CellState cell_state_from_code(std::string_view code) {
  if (code == "g") return CellState::good;
  if (code == "i") return CellState::bad_interpolated;
  if (code == "b") return CellState::bad_uninterpolated;
  throw FormatError("unknown cell state '" + std::string(code) + "'");
}

RejectLog RejectLog::all_good(std::size_t n_trials, std::size_t n_sensors) {
  RejectLog log;
  log.n_trials = n_trials;
  log.n_sensors = n_sensors;
  log.trial_verdicts.assign(n_trials, Verdict::retained);
  log.cell_state.assign(n_trials * n_sensors, CellState::good);
  log.scores.assign(n_trials * n_sensors, kNoScore);
  return log;
}

std::vector<std::size_t> RejectLog::retained_trials() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n_trials; ++i) {
    if (trial_verdicts[i] == Verdict::retained) out.push_back(i);
  }
  return out;
}

std::size_t RejectLog::n_rejected() const {
  return static_cast<std::size_t>(std::count(trial_verdicts.begin(), trial_verdicts.end(), Verdict::rejected));
}

BoolMatrix RejectLog::interpolation_mask() const {
  BoolMatrix mask = BoolMatrix::Constant(static_cast<Eigen::Index>(n_trials), static_cast<Eigen::Index>(n_sensors), false);
  for (std::size_t i = 0; i < n_trials; ++i) {
    for (std::size_t j = 0; j < n_sensors; ++j) {
      mask(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cell(i, j) == CellState::bad_interpolated;
    }
  }
  return mask;
}

std::vector<std::size_t> RejectLog::manual_trials() const {
  std::vector<std::size_t> out;
  const auto it = provenance.find("manual_trials");
  if (it == provenance.end()) return out;
  std::stringstream ss(it->second);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoul(item));
  }
  return out;
}

void RejectLog::validate() const {
  if (trial_verdicts.size() != n_trials || cell_state.size() != n_trials * n_sensors ||
      scores.size() != n_trials * n_sensors) {
    throw ContractError("reject log field sizes do not match its shape");
  }
  long rho_star = -1;
  if (const auto it = provenance.find("rho_star"); it != provenance.end()) rho_star = std::stol(it->second);
  const auto manual = manual_trials();
  for (std::size_t i = 0; i < n_trials; ++i) {
    std::size_t n_interp = 0;
    for (std::size_t j = 0; j < n_sensors; ++j) {
      if (cell(i, j) == CellState::bad_interpolated) ++n_interp;
    }
    if (rejected(i) && n_interp > 0) {
      throw ContractError("rejected trial " + std::to_string(i) + " has interpolated cells");
    }
    const bool is_manual = std::find(manual.begin(), manual.end(), i) != manual.end();
    if (rho_star >= 0 && !is_manual && n_interp > static_cast<std::size_t>(rho_star)) {
      throw ContractError("trial " + std::to_string(i) + " interpolates " + std::to_string(n_interp) +
                          " sensors, more than rho_star " + std::to_string(rho_star));
    }
  }
}

}  // namespace autoclean
