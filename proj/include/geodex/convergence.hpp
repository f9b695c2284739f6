#pragma once

#include <span>
#include <vector>

namespace geodex {

struct SlopeFit {
  double slope = 0.0;     // meaningful unless `exact`
  int used = 0;           // scales that passed the noise floor
  bool exact = false;     // every error sat below the floor
  std::vector<bool> kept;
};

/// Least-squares slope of log(error) against log(scale), ignoring scales whose error
/// is below `floor`.  Throws InsufficientSignal when 1 or 2 scales survive.
SlopeFit fit_slope(std::span<const double> scales, std::span<const double> errors, double floor);

}  // namespace geodex
