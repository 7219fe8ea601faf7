#pragma once

#include <stdexcept>

namespace fedsketch {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid static configuration: bad geometry, infeasible spec fields,
/// violated cross-field constraints.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A runtime argument outside its allowed value range (non-finite value,
/// empty batch, fraction out of range).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Index out of the sketch domain or mismatched vector lengths.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Attempt to combine sketches with different geometry or seed.
class IncompatibleSketchError : public Error {
 public:
  using Error::Error;
};

/// Malformed serialized bytes; the message names the failing offset.
class SerializationError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input (CSV rows, config documents); names the location.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failures: missing paths, unwritable targets.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fedsketch
