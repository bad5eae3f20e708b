#pragma once

#include <stdexcept>
#include <string>

namespace mvrf {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition violated by the caller (bad sizes, out-of-range values).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A feature vector whose length does not match the model.
class DimensionMismatch : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// OOB accuracy requested but no sample has a sub-forest.
class UndefinedAccuracy : public Error {
 public:
  using Error::Error;
};

/// Malformed table, manifest or synthetic spec.
class IngestionError : public Error {
 public:
  using Error::Error;
};

/// Model container could not be decoded.
class CorruptContainer : public Error {
 public:
  using Error::Error;
};

class VersionMismatch : public CorruptContainer {
 public:
  using CorruptContainer::CorruptContainer;
};

}  // namespace mvrf
