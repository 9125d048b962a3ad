#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "autoclean/epochs.hpp"
#include "autoclean/reject_log.hpp"
#include "autoclean/threshold_model.hpp"

namespace autoclean {

/// Contents of an epochs recording bundle (.erb).
struct EpochsBundle {
  EpochsTensor epochs;
  SensorLayout layout;
  std::vector<std::int64_t> event_codes;
};

/// ERB container: "ARJ1", u32 LE header length, JSON header, then the
/// trial/sensor/time-ordered sample blob as little-endian float64.
std::vector<std::uint8_t> encode_epochs(const EpochsTensor& epochs, const SensorLayout& layout,
                                        const std::vector<std::int64_t>& events);
EpochsBundle decode_epochs(const std::vector<std::uint8_t>& bytes);

void save_epochs(const EpochsTensor& epochs, const SensorLayout& layout, const std::vector<std::int64_t>& events,
                 const std::filesystem::path& path);
EpochsBundle load_epochs(const std::filesystem::path& path);

std::string encode_reject_log(const RejectLog& log);
RejectLog decode_reject_log(const std::string& text);
void save_reject_log(const RejectLog& log, const std::filesystem::path& path);
RejectLog load_reject_log(const std::filesystem::path& path);

std::string encode_threshold_model(const ThresholdModel& model);
ThresholdModel decode_threshold_model(const std::string& text);

std::string read_text_file(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames it into place.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace autoclean
