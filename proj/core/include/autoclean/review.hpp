#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "autoclean/epochs.hpp"
#include "autoclean/reject_log.hpp"

namespace autoclean {

enum class OverrideAction { keep, reject, interpolate };
std::string_view to_string(OverrideAction a);

struct OverrideEntry {
  std::size_t trial = 0;
  std::optional<std::string> sensor;  // absent: the whole trial
  OverrideAction action = OverrideAction::keep;

  bool operator==(const OverrideEntry&) const = default;
};

/// Ordered human corrections; later entries shadow earlier ones.
struct OverrideSet {
  std::vector<OverrideEntry> entries;

  bool operator==(const OverrideSet&) const = default;
};

/// Parses an override document. Syntax problems are FormatErrors.
OverrideSet decode_overrides(const std::string& text);
std::string encode_overrides(const OverrideSet& overrides);

/// Range and name checks against a log of n_trials and these sensors.
/// Throws OverrideError naming the offending field, e.g. "entries[2].trial".
void validate_overrides(const OverrideSet& overrides, std::size_t n_trials, const std::vector<std::string>& sensor_names);

/// Applies the entries in order. keep (trial) retains the trial with all
/// cells good; reject (trial) rejects it; interpolate (cell) marks the cell
/// bad_interpolated and retains the trial; keep/reject on a cell set it good
/// or bad_uninterpolated. Touched trials are listed in provenance
/// "manual_trials" and are exempt from the rho limit.
RejectLog apply_overrides(const RejectLog& log, const OverrideSet& overrides,
                          const std::vector<std::string>& sensor_names);

inline constexpr std::size_t kReviewPayloadLimit = 50'000'000;

/// Smallest decimation keeping the bundle's sample payload under the limit.
int default_decimation(const EpochsTensor& epochs, std::size_t limit_bytes = kReviewPayloadLimit);

/// Viewer document: names, trial boundaries, verdicts, cell states and
/// every decimate-th sample of each (trial, sensor) series.
std::string make_review_bundle(const EpochsTensor& epochs, const SensorLayout& layout, const RejectLog& log,
                               int decimate, const std::vector<std::int64_t>& event_codes = {});

}  // namespace autoclean
