#pragma once

#include <stdexcept>
#include <string>

namespace crystclr {

/// Malformed input: a structure file, manifest, config or checkpoint that
/// cannot be read or violates its schema.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A domain object would be constructed in a state that breaks its invariants.
class InvariantError : public DataError {
 public:
  using DataError::DataError;
};

/// Array shapes disagree (model parameters, batches, checkpoints).
class ShapeError : public DataError {
 public:
  using DataError::DataError;
};

/// A computation produced NaN/Inf or was asked to divide by a zero norm.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace crystclr
