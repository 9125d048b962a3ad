#pragma once

#include <stdexcept>
#include <string>

namespace autoclean {

// Broad categories. The CLI maps DataError-derived failures to exit code 2
// and NumericalFailure-derived failures to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataFailure : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class FormatError : public DataFailure {
 public:
  using DataFailure::DataFailure;
};

class TruncationError : public DataFailure {
 public:
  using DataFailure::DataFailure;
};

class DataError : public DataFailure {
 public:
  using DataFailure::DataFailure;
};

class LayoutError : public DataFailure {
 public:
  using DataFailure::DataFailure;
};

class IoError : public DataFailure {
 public:
  using DataFailure::DataFailure;
};

class ModelMismatchError : public DataFailure {
 public:
  using DataFailure::DataFailure;
};

class OverrideError : public DataFailure {
 public:
  using DataFailure::DataFailure;
};

/// Violated precondition on arguments (bad shapes, empty sets, K > n, ...).
class ContractError : public DataFailure {
 public:
  using DataFailure::DataFailure;
};

class IndexError : public ContractError {
 public:
  using ContractError::ContractError;
};

class GeometryError : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

class NumericalError : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

class RepairError : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

class ObjectiveError : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

class ResampleError : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

}  // namespace autoclean
