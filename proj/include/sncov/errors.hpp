#pragma once

#include <stdexcept>
#include <string>

namespace sncov {

// Invalid arguments, unsupported regimes and bad configuration. The CLI maps
// this family to exit code 2.
class DomainError : public std::invalid_argument {
 public:
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

// Log-LSS requested with y_n >= 1.
class UnsupportedRegime : public DomainError {
 public:
  explicit UnsupportedRegime(const std::string& what) : DomainError(what) {}
};

// Some eigenvalue sits at or below the eigen floor where a positive spectrum is required.
class DegenerateSpectrum : public DomainError {
 public:
  explicit DegenerateSpectrum(const std::string& what) : DomainError(what) {}
};

class DegenerateTarget : public DomainError {
 public:
  explicit DegenerateTarget(const std::string& what) : DomainError(what) {}
};

class UnsupportedParameters : public DomainError {
 public:
  explicit UnsupportedParameters(const std::string& what) : DomainError(what) {}
};

class ConfigError : public DomainError {
 public:
  explicit ConfigError(const std::string& what) : DomainError(what) {}
};

class IncompleteReport : public DomainError {
 public:
  explicit IncompleteReport(const std::string& what) : DomainError(what) {}
};

// Non-convergence, non-finite intermediate values, failed internal checks.
// The CLI maps this family to exit code 1.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sncov
