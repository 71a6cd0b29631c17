#include "lamelab/errors.hpp"

namespace lamelab {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonConvergent: return "NonConvergent";
    case ErrorKind::BadModulus: return "BadModulus";
    case ErrorKind::NearPole: return "NearPole";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::OrderOverflow: return "OrderOverflow";
    case ErrorKind::NotQuasiPeriodic: return "NotQuasiPeriodic";
    case ErrorKind::DegenerateSample: return "DegenerateSample";
    case ErrorKind::BadParams: return "BadParams";
    case ErrorKind::CoincidentPoles: return "CoincidentPoles";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::DegenerateA: return "DegenerateA";
    case ErrorKind::VerticalComponent: return "VerticalComponent";
    case ErrorKind::CountMismatch: return "CountMismatch";
    case ErrorKind::NotEigen: return "NotEigen";
    case ErrorKind::ResonantOmega: return "ResonantOmega";
    case ErrorKind::BranchAmbiguity: return "BranchAmbiguity";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::DegenerateKernel: return "DegenerateKernel";
    case ErrorKind::NotConstant: return "NotConstant";
    case ErrorKind::Incompatible: return "Incompatible";
    case ErrorKind::IncompatibleQscon: return "IncompatibleQscon";
    case ErrorKind::SingularOnLine: return "SingularOnLine";
    case ErrorKind::NoSolution: return "NoSolution";
    case ErrorKind::Validation: return "Validation";
  }
  return "Unknown";
}

void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, std::string(to_string(kind)) + ": " + what);
}

}  // namespace lamelab
