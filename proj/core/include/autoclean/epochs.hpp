#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace autoclean {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;
using RowMap = Eigen::Map<RowMatrix>;

/// Per-trial, per-sensor boolean mask (rows = trials, cols = sensors).
using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

enum class Unit { volt, tesla };

std::string_view to_string(Unit unit);
Unit unit_from_string(std::string_view text);

/// Multi-trial recording: n_trials x n_sensors x n_times samples stored
/// trial-major, then sensor, then time. Immutable once constructed.
class EpochsTensor {
 public:
  /// Validates shape (N >= 1, Q >= 2, T >= 2) and finiteness of every
  /// sample. Throws ContractError on shape problems and DataError on
  /// non-finite samples. An empty origin_flags means "all original".
  EpochsTensor(std::vector<double> data, std::size_t n_trials, std::size_t n_sensors, std::size_t n_times,
               double sfreq_hz, Unit unit = Unit::volt, std::vector<bool> origin_flags = {});

  std::size_t n_trials() const { return n_trials_; }
  std::size_t n_sensors() const { return n_sensors_; }
  std::size_t n_times() const { return n_times_; }
  /// P = Q * T, the flattened per-trial feature count.
  std::size_t n_features() const { return n_sensors_ * n_times_; }
  double sfreq_hz() const { return sfreq_hz_; }
  Unit unit() const { return unit_; }
  const std::vector<bool>& origin_flags() const { return origin_flags_; }

  double at(std::size_t trial, std::size_t sensor, std::size_t time) const {
    return data_[(trial * n_sensors_ + sensor) * n_times_ + time];
  }

  std::span<const double> series(std::size_t trial, std::size_t sensor) const {
    return {data_.data() + (trial * n_sensors_ + sensor) * n_times_, n_times_};
  }

  /// Sensors x times view of one trial.
  ConstRowMap trial(std::size_t trial) const {
    return ConstRowMap(data_.data() + trial * n_features(), static_cast<Eigen::Index>(n_sensors_),
                       static_cast<Eigen::Index>(n_times_));
  }

  /// Trials x (sensors * times) view of the whole tensor.
  ConstRowMap as_matrix() const {
    return ConstRowMap(data_.data(), static_cast<Eigen::Index>(n_trials_), static_cast<Eigen::Index>(n_features()));
  }

  std::span<const double> data() const { return data_; }

  /// New tensor holding the given trials in the given order.
  EpochsTensor select_trials(std::span<const std::size_t> trials) const;

  bool operator==(const EpochsTensor& other) const = default;

 private:
  std::vector<double> data_;
  std::size_t n_trials_;
  std::size_t n_sensors_;
  std::size_t n_times_;
  double sfreq_hz_;
  Unit unit_;
  std::vector<bool> origin_flags_;
};

using Position = std::array<double, 3>;

/// Sensor names and unit-sphere positions. Positions whose norm is within
/// 0.1% of 1 are renormalized; anything further off is a LayoutError, as are
/// duplicate names and sensors closer than 0.5 degrees to each other.
class SensorLayout {
 public:
  SensorLayout(std::vector<std::string> names, std::vector<Position> positions);

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<Position>& positions() const { return positions_; }
  const std::string& name(std::size_t i) const { return names_[i]; }
  const Position& position(std::size_t i) const { return positions_[i]; }

  /// Index of the named sensor; throws LayoutError when absent.
  std::size_t index_of(std::string_view name) const;

  bool operator==(const SensorLayout& other) const = default;

 private:
  std::vector<std::string> names_;
  std::vector<Position> positions_;
};

/// Cosine of the great-circle angle between two unit vectors, clamped to [-1, 1].
double cos_angle(const Position& a, const Position& b);

}  // namespace autoclean
