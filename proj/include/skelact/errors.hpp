#pragma once

#include <stdexcept>
#include <string>

namespace skelact {

// Error families map one-to-one onto CLI exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exit 2: filesystem and parsing-at-the-byte-level failures.
struct IoError : Error {
  using Error::Error;
};

// Exit 3: invalid configuration or flag values.
struct ConfigError : Error {
  using Error::Error;
};

// Exit 4: structurally invalid or ineligible data.
struct DataError : Error {
  using Error::Error;
};

// Exit 5: a model could not be trained (e.g. single-class split).
struct TrainingError : Error {
  using Error::Error;
};

}  // namespace skelact
