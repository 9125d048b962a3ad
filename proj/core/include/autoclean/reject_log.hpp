#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "autoclean/epochs.hpp"

namespace autoclean {

enum class Verdict { retained, rejected };
enum class CellState { good, bad_interpolated, bad_uninterpolated };

std::string_view to_string(Verdict v);
std::string_view to_code(CellState s);  // "g", "i", "b"
Verdict verdict_from_string(std::string_view text);
CellState cell_state_from_code(std::string_view code);

/// Score assigned to cells that did not exceed their threshold.
inline constexpr double kNoScore = -std::numeric_limits<double>::infinity();

/// Audit record of every trial verdict and per-(trial, sensor) cell state.
struct RejectLog {
  std::size_t n_trials = 0;
  std::size_t n_sensors = 0;
  std::vector<Verdict> trial_verdicts;
  std::vector<CellState> cell_state;  // row-major, n_trials x n_sensors
  std::vector<double> scores;         // row-major, kNoScore where not bad
  std::map<std::string, std::string> provenance;

  /// Log with every trial retained, every cell good and every score kNoScore.
  static RejectLog all_good(std::size_t n_trials, std::size_t n_sensors);

  CellState cell(std::size_t trial, std::size_t sensor) const { return cell_state[trial * n_sensors + sensor]; }
  CellState& cell(std::size_t trial, std::size_t sensor) { return cell_state[trial * n_sensors + sensor]; }
  double score(std::size_t trial, std::size_t sensor) const { return scores[trial * n_sensors + sensor]; }
  bool rejected(std::size_t trial) const { return trial_verdicts[trial] == Verdict::rejected; }

  std::vector<std::size_t> retained_trials() const;
  std::size_t n_rejected() const;
  /// True where a cell is planned for interpolation.
  BoolMatrix interpolation_mask() const;
  /// Trials listed under provenance "manual_trials".
  std::vector<std::size_t> manual_trials() const;

  /// Checks shapes and the two log invariants: rejected trials carry no
  /// bad_interpolated cells, and retained trials interpolate at most
  /// provenance "rho_star" sensors (manual trials exempt). Throws ContractError.
  void validate() const;

  bool operator==(const RejectLog& other) const = default;
};

}  // namespace autoclean
