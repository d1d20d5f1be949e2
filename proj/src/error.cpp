#include "matchprod/error.hpp"

namespace matchprod {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParam: return "InvalidParam";
    case ErrorKind::PamViolation: return "PamViolation";
    case ErrorKind::DivisionDegenerate: return "DivisionDegenerate";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::GridTooSmall: return "GridTooSmall";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::ConfigParse: return "ConfigParse";
    case ErrorKind::MissingInput: return "MissingInput";
    case ErrorKind::NotConnected: return "NotConnected";
    case ErrorKind::SolverNoConvergence: return "SolverNoConvergence";
    case ErrorKind::UnknownWorker: return "UnknownWorker";
    case ErrorKind::TooFewObservations: return "TooFewObservations";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::InsufficientPanel: return "InsufficientPanel";
    case ErrorKind::MissingCoefficients: return "MissingCoefficients";
    case ErrorKind::KeyMismatch: return "KeyMismatch";
    case ErrorKind::SharesNotNormalized: return "SharesNotNormalized";
    case ErrorKind::WindowOutOfRange: return "WindowOutOfRange";
    case ErrorKind::TooFewFirms: return "TooFewFirms";
    case ErrorKind::BootstrapFailed: return "BootstrapFailed";
  }
  return "Unknown";
}

}  // namespace matchprod
