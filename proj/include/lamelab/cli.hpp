#pragma once

// Command-line driver: a run configuration (from flags or a JSON file),
// dispatch to the solvers and checkers, deterministic JSON results, an
// optional CSV grid and a separate manifest with timing.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lamelab/errors.hpp"
#include "lamelab/thetaforms.hpp"

namespace lamelab {

inline constexpr const char* kToolVersion = "0.1.0";

// Pass thresholds echoed into every result; overrides must be >= 1e-15.
std::map<std::string, double> default_tolerances();

struct RunConfig {
  std::string command;
  cplx tau{0.0, 1.0};
  std::optional<cplx> omega;
  CVec a, k, b;
  CVec a_sq;               // Hietarinta a_i^2
  CVec poles;              // locus-solve initial guess
  std::vector<int> mults;  // locus-solve multiplicities
  std::optional<std::array<int, 2>> label;
  std::vector<double> omegas;  // qb2-limit
  cplx z{0.3, 0.1};            // theta, wp
  int order = 0;               // theta
  std::string name = "B2_CM";  // quasiinv-check catalog entry
  int n = 2, m = 1;            // catalog parameters
  cplx t{};                    // Hietarinta free parameter
  std::map<std::string, double> tolerances = default_tolerances();
  std::uint64_t seed = 1;
  std::string output_path, csv_path, manifest_path, verify_path;

  // Validation error (exit 2) on missing or malformed command-specific fields.
  void validate() const;

  // Paths are excluded so that the same run written elsewhere hashes the same.
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

struct RunResult {
  int exit_code = 0;
  nlohmann::json output;  // result or error object
  std::string summary;    // one line
};

// Never throws for library errors: they become exit 2 (validation) or 3
// (numerical failure) with {"error": {"kind", "message"}}.
RunResult run(const RunConfig& config);

// Exit code for a library error kind.
int exit_code_for(ErrorKind kind);

// Config echo, tool version, worker count, SIMD path and wall time.
nlohmann::json make_manifest(const RunConfig& config, const RunResult& result, double wall_seconds);

// Parses "re,im", "re" or a JSON [re, im] string.
cplx parse_cplx(const std::string& s);

int cli_main(int argc, char** argv);

}  // namespace lamelab
