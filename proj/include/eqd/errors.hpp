#pragma once

#include <stdexcept>
#include <string>

namespace eqd {

/// Bad user input: unreadable data, malformed grid specs, out-of-range arguments.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure could not produce a usable result (e.g. a failed fit).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The requested computation is impossible for this data/configuration
/// (too few exceedances, every candidate skipped, ...).
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace eqd
