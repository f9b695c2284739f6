#include "geodex/convergence.hpp"

#include <cmath>

#include "geodex/error.hpp"

namespace geodex {

SlopeFit fit_slope(std::span<const double> scales, std::span<const double> errors, double floor) {
  if (scales.size() != errors.size()) throw PreconditionError("fit_slope: scales and errors differ in length");
  SlopeFit fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < scales.size(); ++i) {
    const bool keep = std::isfinite(errors[i]) && errors[i] >= floor && scales[i] > 0;
    fit.kept.push_back(keep);
    if (!keep) continue;
    const double x = std::log(scales[i]), y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++fit.used;
  }
  if (fit.used == 0) {
    fit.exact = true;
    return fit;
  }
  if (fit.used < 3)
    throw InsufficientSignal("insufficient signal: only " + std::to_string(fit.used) +
                             " scale(s) above the noise floor");
  const double n = fit.used;
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return fit;
}

}  // namespace geodex
