#pragma once

#include <stdexcept>
#include <string>

namespace layoutkit {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class ContextError : public Error {
 public:
  using Error::Error;
};

class OutOfMemoryError : public ContextError {
 public:
  using ContextError::ContextError;
};

/// Direct element access to a buffer from an execution context that may not
/// touch it (e.g. host code reading a mock-device collection).
class AccessFault : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

class LayoutError : public Error {
 public:
  using Error::Error;
};

class StaleViewError : public Error {
 public:
  using Error::Error;
};

class TransferError : public Error {
 public:
  using Error::Error;
};

class BindingError : public Error {
 public:
  using Error::Error;
};

class BehaviorError : public Error {
 public:
  using Error::Error;
};

}  // namespace layoutkit
