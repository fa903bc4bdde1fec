// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace ygan {

// Error categories map one-to-one onto CLI exit codes (see tools/yieldgan.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration, arguments or shapes supplied by the caller.  Exit 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data.  Exit 3.
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite values, failed convergence, invalid numerical domain.  Exit 4.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace ygan
