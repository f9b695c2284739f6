#include "geodex/kernels.hpp"

#include <stdexcept>
#include <vector>

namespace geodex::kernels::scalar {

void periodic_stencil(std::span<const double> in, std::span<double> out, AxisLayout layout,
                      std::span<const double> coeffs) {
  if (coeffs.size() % 2 == 0) throw std::invalid_argument("periodic_stencil: even stencil width");
  if (in.size() < layout.size() || out.size() < layout.size())
    throw std::invalid_argument("periodic_stencil: buffer smaller than layout");
  const std::size_t n = layout.axis;
  const std::size_t r = coeffs.size() / 2;
  const std::size_t inner = layout.inner;

  if (inner == 1) {
    // Pad each line periodically so the stencil runs over contiguous memory.
    std::vector<double> pad(n + 2 * r);
    for (std::size_t o = 0; o < layout.outer; ++o) {
      const double* line = in.data() + o * n;
      for (std::size_t k = 0; k < n + 2 * r; ++k) pad[k] = line[(k + n * (r / n + 1) - r) % n];
      double* dst = out.data() + o * n;
      for (std::size_t k = 0; k < n; ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < coeffs.size(); ++j) acc = acc + coeffs[j] * pad[k + j];
        dst[k] = acc;
      }
    }
    return;
  }

  for (std::size_t o = 0; o < layout.outer; ++o) {
    const double* block = in.data() + o * n * inner;
    double* dst = out.data() + o * n * inner;
    for (std::size_t k = 0; k < n; ++k) {
      double* row = dst + k * inner;
      for (std::size_t i = 0; i < inner; ++i) row[i] = 0.0;
      for (std::size_t j = 0; j < coeffs.size(); ++j) {
        const std::size_t src = (k + j + n * (r / n + 1) - r) % n;
        const double* srow = block + src * inner;
        const double c = coeffs[j];
        for (std::size_t i = 0; i < inner; ++i) row[i] = row[i] + c * srow[i];
      }
    }
  }
}

double weighted_sum(std::span<const double> values, std::span<const double> weights) {
  if (values.size() != weights.size()) throw std::invalid_argument("weighted_sum: size mismatch");
  const std::size_t n = values.size();
  const std::size_t blocked = n - n % 4;
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t k = 0; k < blocked; k += 4)
    for (std::size_t l = 0; l < 4; ++l) lane[l] = lane[l] + values[k + l] * weights[k + l];
  double acc = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (std::size_t k = blocked; k < n; ++k) acc = acc + values[k] * weights[k];
  return acc;
}

}  // namespace geodex::kernels::scalar
