#pragma once

// Run configuration for the verification suites and the command line tool.
// The file format is JSON; the schema is documented in docs/config.md.
// Unknown keys are rejected with the path of the offending key.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geodex/deviation.hpp"
#include "geodex/immersion.hpp"
#include "geodex/manifold.hpp"

namespace geodex {

/// A manifold plus the base point and direction used by the geodesic checks.
struct ManifoldCase {
  std::string id;  // builtin id or "expression"
  double radius = 1.0;
  // id == "expression"
  std::string name;
  std::vector<std::string> coordinates;
  std::vector<std::vector<std::string>> metric;
  std::vector<AxisDomain> domain;
  Point base;
  Vec direction;

  ManifoldSpec build() const;
  std::string label() const { return id == "expression" ? name : id; }
};

struct ImmersionCase {
  std::string id;
  std::vector<double> params;
  int n = 32;

  Immersion build() const;
};

/// A vector field on a parameter grid: explicit Fourier modes or seeded random modes.
struct FieldSpec {
  enum class Kind { fourier, random };
  Kind kind = Kind::random;
  std::vector<FourierMode> modes;  // fourier
  int max_mode = 2;                // random
  double amplitude = 0.3;
  std::optional<std::uint64_t> seed;

  /// components x grid.size() samples.  Random fields are drawn for the requested
  /// component count and grid dimension; explicit modes must match them.
  Mat sample(const Lattice& grid, int components) const;
};

struct RunConfig {
  std::optional<std::uint64_t> seed;
  std::vector<double> scales{0.2, 0.1, 0.05, 0.025};
  std::optional<int> grid;           // overrides the resolution of the deviation/gauge backgrounds
  std::optional<double> noise_floor;  // overrides every slope-fit floor
  std::map<std::string, double> tolerances;
  std::vector<ManifoldCase> manifolds;
  std::vector<ImmersionCase> immersions;
  FieldSpec tangential, normal, generator;
  std::string report_path, csv_path;

  /// Names accepted under "tolerances".
  static const std::vector<std::string>& tolerance_names();
  double tolerance(const std::string& name, double fallback) const;
  /// "tangential", "normal" or "generator" with its seed resolved.
  FieldSpec field(const std::string& which) const;
};

/// The configuration the acceptance suite runs: builtin sphere and half-plane,
/// every builtin immersion, seeded random fields (seed 20240917).
RunConfig default_config();

/// Parses and validates; throws ConfigError with a JSON-pointer path.  Random
/// fields without their own seed take the top-level one (offset per field); if
/// neither is given the field's path is reported.  `seed` replaces the
/// top-level seed before that check.
RunConfig parse_config(const std::string& json_text, std::optional<std::uint64_t> seed = {});
RunConfig load_config(const std::string& path, std::optional<std::uint64_t> seed = {});

/// Applies command-line overrides and re-validates seeds.
void apply_overrides(RunConfig& cfg, std::optional<std::uint64_t> seed, std::optional<int> grid,
                     std::optional<double> tol);

}  // namespace geodex
