#pragma once

#include <stdexcept>
#include <string>

namespace cspphase {

// Invalid model, instance or parameter supplied by the caller.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Exact enumeration or sampling would exceed a hard size limit.
class SizeGuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A formula is outside its domain (divergent product, failed population, ...).
class NumericRefusal : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cspphase
