#pragma once

#include <stdexcept>
#include <string>

namespace fracwave {

enum class ErrorKind {
  ParameterDomain,
  Regime,
  SingularKernel,
  Capability,
  Accuracy,
  Validation,
  Configuration,
  InsufficientData,
  NonContraction,
  Hypothesis,
};

const char* to_string(ErrorKind kind) noexcept;

/// Base exception for everything the library throws on purpose. The kind
/// lets front ends map failures onto exit codes without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Validation failure that points at one entry of an input list.
class ValidationError : public Error {
 public:
  ValidationError(std::size_t index, const std::string& what)
      : Error(ErrorKind::Validation, what), index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

}  // namespace fracwave
