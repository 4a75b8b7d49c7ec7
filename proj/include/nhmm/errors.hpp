#pragma once

#include <stdexcept>
#include <string>

namespace nhmm {

// Malformed or out-of-domain user data.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid settings (iteration counts, priors, oracle truncation, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical failure inside a sampler step.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nhmm
