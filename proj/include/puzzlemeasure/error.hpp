#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace puzzlemeasure {

enum class ErrorKind {
  kDiverged,
  kRoleUndetermined,
  kDegreeTooLarge,
  kBranchLost,
  kNewtonStall,
  kNotLanded,
  kNoDividingFixedPoint,
  kNoCycleFound,
  kAssemblyFailure,
  kOnBoundary,
  kOutsidePotential,
  kNotLocatable,
  kNoReturnWithinHorizon,
  kAddressUnderflow,
  kNonRecurrent,
  kDegenerateAnnulus,
  kEmptyPartition,
  kCriticalSample,
  kPowerIterationStall,
  kNoBracket,
  kZeroDenominator,
  kNotUnivalent,
  kZeroMass,
  kConfig,
  kInvalidArgument,
};

/// Stable kebab-case name, used in reports and error messages.
std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace puzzlemeasure
