#pragma once

// Verification suites: every acceptance check as a function of a RunConfig, the
// scaling checks behind them (error at a given field amplitude), convergence
// sweeps over those, and deterministic report/CSV serialization.

#include <span>
#include <string>
#include <vector>

#include "geodex/config.hpp"
#include "geodex/convergence.hpp"
#include "json.hpp"

namespace geodex {

inline constexpr const char* kVersion = "0.1.0";

struct CheckResult {
  std::string id;    // C1 ... C12
  std::string name;
  std::string criterion;          // thresholds as applied
  nlohmann::ordered_json details;  // measured values, fitted slopes ("exact" when no signal)
  bool passed = false;
  std::string error;  // set when the check threw instead of measuring
  double seconds = 0.0;  // wall time; not serialized
};

struct SuiteReport {
  std::string suite;
  std::vector<CheckResult> checks;
  nlohmann::ordered_json environment;  // version, seed, grids

  bool passed() const;
  /// Deterministic for a fixed config: no timings, fixed key order.
  std::string to_json() const;
};

std::vector<std::string> suite_names();
/// The checks a suite runs, in order ("all" lists C1 ... C12).
std::vector<std::string> suite_checks(const std::string& suite);

/// Runs one acceptance check by id ("C1" ... "C12").  Failures are recorded in the
/// result; only configuration problems throw.
CheckResult run_check(const RunConfig& cfg, const std::string& id);
SuiteReport run_suite(const RunConfig& cfg, const std::string& suite);

/// One line: "<id> <name> PASS|FAIL <summary>".
std::string summary_line(const CheckResult& r);

/// A background with the configured fields sampled on it at unit amplitude
/// (tangential d x N, normal k x N, generator d x N).  On the doubled-theta
/// sphere all three carry a sin^6(theta) factor so they vanish at the
/// coordinate poles.  cfg.grid, when set, replaces ic.n.
struct SampledFields {
  BackgroundPtr bg;
  Mat t, n, e;
  std::string label;
};
SampledFields sample_fields(const RunConfig& cfg, ImmersionCase ic);

/// Checks whose error is a function of the field amplitude.
std::vector<std::string> sweep_checks();

struct SweepOptions {
  std::string manifold;   // geodesic checks: id of a configured manifold (default: the first)
  std::string immersion;  // deviation checks: builtin immersion id (default: the check's own)
  std::vector<double> params;
};

struct SweepTable {
  std::string check;
  std::string target;
  std::vector<double> scales, errors;
  double floor = 0.0;
  SlopeFit fit;
};

/// Errors at every scale and the least-squares slope.  Throws InsufficientSignal
/// when fewer than 3 scales clear the noise floor (but some do).
SweepTable sweep(const RunConfig& cfg, const std::string& check, std::span<const double> scales,
                 const SweepOptions& opt = {});
/// Header "scale,error,used", one row per scale, then "slope,<value>" or "slope,exact".
std::string to_csv(const SweepTable& t);

}  // namespace geodex
