#include "fracwave/errors.hpp"

namespace fracwave {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::ParameterDomain:
      return "parameter-domain";
    case ErrorKind::Regime:
      return "regime";
    case ErrorKind::SingularKernel:
      return "singular-kernel";
    case ErrorKind::Capability:
      return "capability";
    case ErrorKind::Accuracy:
      return "accuracy";
    case ErrorKind::Validation:
      return "validation";
    case ErrorKind::Configuration:
      return "configuration";
    case ErrorKind::InsufficientData:
      return "insufficient-data";
    case ErrorKind::NonContraction:
      return "non-contraction";
    case ErrorKind::Hypothesis:
      return "hypothesis";
  }
  return "unknown";
}

}  // namespace fracwave
