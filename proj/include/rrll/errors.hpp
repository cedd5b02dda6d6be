#pragma once

#include <stdexcept>
#include <string>

namespace rrll {

// Base class for everything this library throws on purpose.
class error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Bad configuration or command usage (CLI exit code 2).
class config_error : public error {
public:
  using error::error;
};

// Malformed or inconsistent input data (CLI exit code 3).
class data_error : public error {
public:
  using error::error;
};

// Non-finite loss/gradient detected during training (CLI exit code 4).
// Deliberately loud: nothing is clamped or skipped.
class numeric_error : public error {
public:
  using error::error;
};

// Contract violation on an API boundary (out-of-range label, shape mismatch).
class domain_error : public error {
public:
  using error::error;
};

} // namespace rrll
