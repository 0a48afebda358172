#ifndef MORSE_REPORT_HPP
#define MORSE_REPORT_HPP

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "morse/bridge.hpp"
#include "morse/scenario_io.hpp"

namespace morse {

inline constexpr const char* kToolVersion = "1.0.0";

/// How far the pipeline runs before the report is assembled.
enum class Stage { Critical, Instantons, Cohomology, Verify };

struct RunConfig {
  /// Builtin name or path to a scenario JSON file.
  std::string scenario;
  double tol_ode = 1e-10;
  double tol_newton = 1e-12;
  double tol_quad = 1e-7;
  double tol_verify = 1e-6;
  /// Confirmation samples per gap-2 arc.
  int sweep = 8;
  /// Gauss-Legendre nodes per panel.
  int quad_order = 32;
  std::uint64_t seed = 1;
  /// Random forms (and cochains) per degree in the chain map and Leibniz checks.
  int samples = 3;
  int consistency_samples = 1000;
  int lyapunov_samples = 10000;
  /// Any of delta2, stokes, leibniz, cup, detect.
  std::set<std::string> checks = {"delta2", "stokes", "leibniz", "cup", "detect"};
  int threads = 1;
  Stage stage = Stage::Verify;
  bool timestamp = true;

  /// Throws std::invalid_argument on a non-positive tolerance or count.
  void validate() const;
};

std::set<std::string> parse_checks(const std::string& list);

enum ExitCode { kPass = 0, kVerificationFailure = 1, kRejected = 2, kInternalError = 3 };

struct RunResult {
  Json report;
  int exit_code = kPass;
  /// Human-readable table of the verdicts.
  std::string summary;
};

/// Runs scenario -> critical -> moduli -> complex -> bridge up to
/// `config.stage`. Scenario rejections are reported in the JSON (section
/// "rejection") rather than thrown.
RunResult run_pipeline(const RunConfig& config);

/// The report serialized with the timestamp removed.
std::string deterministic_dump(const Json& report);

Json identity_json(const IdentityCheck& c);

}  // namespace morse

#endif  // MORSE_REPORT_HPP
