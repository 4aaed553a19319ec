#include "puzzlemeasure/error.hpp"

namespace puzzlemeasure {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDiverged: return "diverged";
    case ErrorKind::kRoleUndetermined: return "role-undetermined";
    case ErrorKind::kDegreeTooLarge: return "degree-too-large";
    case ErrorKind::kBranchLost: return "branch-lost";
    case ErrorKind::kNewtonStall: return "newton-stall";
    case ErrorKind::kNotLanded: return "not-landed";
    case ErrorKind::kNoDividingFixedPoint: return "no-dividing-fixed-point";
    case ErrorKind::kNoCycleFound: return "no-cycle-found";
    case ErrorKind::kAssemblyFailure: return "assembly-failure";
    case ErrorKind::kOnBoundary: return "on-boundary";
    case ErrorKind::kOutsidePotential: return "outside-potential";
    case ErrorKind::kNotLocatable: return "not-locatable";
    case ErrorKind::kNoReturnWithinHorizon: return "no-return-within-horizon";
    case ErrorKind::kAddressUnderflow: return "address-underflow";
    case ErrorKind::kNonRecurrent: return "non-recurrent";
    case ErrorKind::kDegenerateAnnulus: return "degenerate-annulus";
    case ErrorKind::kEmptyPartition: return "empty-partition";
    case ErrorKind::kCriticalSample: return "critical-sample";
    case ErrorKind::kPowerIterationStall: return "power-iteration-stall";
    case ErrorKind::kNoBracket: return "no-bracket";
    case ErrorKind::kZeroDenominator: return "zero-denominator";
    case ErrorKind::kNotUnivalent: return "not-univalent";
    case ErrorKind::kZeroMass: return "zero-mass";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kInvalidArgument: return "invalid-argument";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& detail)
    : std::runtime_error(std::string(to_string(kind)) + (detail.empty() ? "" : ": " + detail)),
      kind_(kind) {}

}  // namespace puzzlemeasure
