#pragma once

#include <stdexcept>
#include <string>

namespace lsfm {

/// A computation that ran but whose result violates a structural property the
/// pipeline depends on (e.g. no increasing branch in a diffusion-time curve).
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration value that fails validation; `field` is a JSON-pointer-like path.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace lsfm
