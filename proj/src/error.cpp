#include "vcd/error.hpp"

namespace vcd {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Sizing: return "sizing";
    case ErrorKind::OpticalConfig: return "optical-configuration";
    case ErrorKind::Resolution: return "resolution";
    case ErrorKind::IllConditioned: return "ill-conditioned";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::PoseOutOfRange: return "pose-out-of-range";
    case ErrorKind::NoFace: return "no-face";
    case ErrorKind::UndefinedCorrelation: return "undefined-correlation";
    case ErrorKind::Detector: return "detector";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Io: return "io";
    case ErrorKind::Usage: return "usage";
  }
  return "unknown";
}

}  // namespace vcd
