#pragma once

#include <stdexcept>
#include <string>

namespace esnssm {

/// Raised when inputs are well-formed but violate a mathematical
/// precondition (dimension mismatch, non-PSD covariance, unstable A, ...).
class DomainError : public std::runtime_error {
 public:
  DomainError(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

/// Raised for unreadable files and malformed or unknown config/model keys.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace esnssm
