#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lamelab {

enum class ErrorKind {
  NonConvergent,
  BadModulus,
  NearPole,
  DimensionMismatch,
  OrderOverflow,
  NotQuasiPeriodic,
  DegenerateSample,
  BadParams,
  CoincidentPoles,
  NoConvergence,
  DegenerateA,
  VerticalComponent,
  CountMismatch,
  NotEigen,
  ResonantOmega,
  BranchAmbiguity,
  RankDeficient,
  DegenerateKernel,
  NotConstant,
  Incompatible,
  IncompatibleQscon,
  SingularOnLine,
  NoSolution,
  Validation,
};

std::string_view to_string(ErrorKind kind);

// Numerical failures carry a kind so the CLI can map them to exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace lamelab
