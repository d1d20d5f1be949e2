#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace matchprod {

enum class ErrorKind {
  InvalidParam,
  PamViolation,
  DivisionDegenerate,
  DomainError,
  GridTooSmall,
  ConfigError,
  ConfigParse,
  MissingInput,
  NotConnected,
  SolverNoConvergence,
  UnknownWorker,
  TooFewObservations,
  RankDeficient,
  NoConvergence,
  InsufficientPanel,
  MissingCoefficients,
  KeyMismatch,
  SharesNotNormalized,
  WindowOutOfRange,
  TooFewFirms,
  BootstrapFailed,
};

std::string_view to_string(ErrorKind kind);

// All library failures surface as this exception; `kind()` lets callers
// (and tests) branch on the failure class without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace matchprod
