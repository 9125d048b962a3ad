#include "autoclean/epochs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "autoclean/errors.hpp"

namespace autoclean {

namespace {

constexpr double kNormTolerance = 1e-3;
constexpr double kMinSeparationDeg = 0.5;

}  // namespace

std::string_view to_string(Unit unit) {
  switch (unit) {
    case Unit::volt:
      return "volt";
    case Unit::tesla:
      return "tesla";
  }
  return "volt";
}

Unit unit_from_string(std::string_view text) {
  if (text == "volt") return Unit::volt;
  if (text == "tesla") return Unit::tesla;
  throw FormatError("unknown unit '" + std::string(text) + "'");
}

EpochsTensor::EpochsTensor(std::vector<double> data, std::size_t n_trials, std::size_t n_sensors,
                           std::size_t n_times, double sfreq_hz, Unit unit, std::vector<bool> origin_flags)
    : data_(std::move(data)),
      n_trials_(n_trials),
      n_sensors_(n_sensors),
      n_times_(n_times),
      sfreq_hz_(sfreq_hz),
      unit_(unit),
      origin_flags_(std::move(origin_flags)) {
  if (n_trials_ < 1) throw ContractError("epochs need at least one trial");
  if (n_sensors_ < 2) throw ContractError("epochs need at least two sensors");
  if (n_times_ < 2) throw ContractError("epochs need at least two time samples");
  if (!(sfreq_hz_ > 0.0) || !std::isfinite(sfreq_hz_)) throw ContractError("sampling rate must be positive");
  if (data_.size() != n_trials_ * n_sensors_ * n_times_) {
    throw ContractError("sample count " + std::to_string(data_.size()) + " does not match shape " +
                        std::to_string(n_trials_) + "x" + std::to_string(n_sensors_) + "x" +
                        std::to_string(n_times_));
  }
  if (origin_flags_.empty()) origin_flags_.assign(n_trials_, false);
  if (origin_flags_.size() != n_trials_) throw ContractError("origin_flags length must equal n_trials");
  for (std::size_t k = 0; k < data_.size(); ++k) {
    if (!std::isfinite(data_[k])) {
      const std::size_t trial = k / (n_sensors_ * n_times_);
      const std::size_t sensor = (k / n_times_) % n_sensors_;
      throw DataError("non-finite sample at trial " + std::to_string(trial) + ", sensor " + std::to_string(sensor));
    }
  }
}

EpochsTensor EpochsTensor::select_trials(std::span<const std::size_t> trials) const {
  if (trials.empty()) throw ContractError("cannot select zero trials");
  std::vector<double> out;
  out.reserve(trials.size() * n_features());
  std::vector<bool> flags;
  flags.reserve(trials.size());
  for (auto i : trials) {
    if (i >= n_trials_) throw IndexError("trial index " + std::to_string(i) + " out of range");
    const auto* begin = data_.data() + i * n_features();
    out.insert(out.end(), begin, begin + n_features());
    flags.push_back(origin_flags_[i]);
  }
  return EpochsTensor(std::move(out), trials.size(), n_sensors_, n_times_, sfreq_hz_, unit_, std::move(flags));
}

double cos_angle(const Position& a, const Position& b) {
  const double c = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
  return std::clamp(c, -1.0, 1.0);
}

SensorLayout::SensorLayout(std::vector<std::string> names, std::vector<Position> positions)
    : names_(std::move(names)), positions_(std::move(positions)) {
  if (names_.size() != positions_.size()) throw LayoutError("sensor name and position counts differ");
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw LayoutError("empty sensor name");
    if (!seen.insert(n).second) throw LayoutError("duplicate sensor name '" + n + "'");
  }
  for (std::size_t i = 0; i < positions_.size(); ++i) {
    auto& p = positions_[i];
    const double norm = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > kNormTolerance) {
      throw LayoutError("sensor '" + names_[i] + "' is not on the unit sphere (norm " + std::to_string(norm) + ")");
    }
    // Leave already-unit vectors untouched so save/load round-trips are exact.
    if (std::abs(norm - 1.0) > 4 * std::numeric_limits<double>::epsilon()) {
      for (auto& c : p) c /= norm;
    }
  }
  const double max_cos = std::cos(kMinSeparationDeg * std::numbers::pi / 180.0);
  for (std::size_t i = 0; i < positions_.size(); ++i) {
    for (std::size_t j = i + 1; j < positions_.size(); ++j) {
      if (cos_angle(positions_[i], positions_[j]) >= max_cos) {
        throw LayoutError("sensors '" + names_[i] + "' and '" + names_[j] + "' are closer than 0.5 degrees");
      }
    }
  }
}

std::size_t SensorLayout::index_of(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw LayoutError("unknown sensor '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - names_.begin());
}

}  // namespace autoclean
