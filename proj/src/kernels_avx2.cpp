// Compiled with -mavx2; only entered after a runtime CPU check.
#include "geodex/kernels.hpp"

#include <immintrin.h>

#include <stdexcept>
#include <vector>

namespace geodex::kernels::avx2 {

bool available() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

void periodic_stencil(std::span<const double> in, std::span<double> out, AxisLayout layout,
                      std::span<const double> coeffs) {
  if (coeffs.size() % 2 == 0) throw std::invalid_argument("periodic_stencil: even stencil width");
  if (in.size() < layout.size() || out.size() < layout.size())
    throw std::invalid_argument("periodic_stencil: buffer smaller than layout");
  const std::size_t n = layout.axis;
  const std::size_t r = coeffs.size() / 2;
  const std::size_t inner = layout.inner;
  const std::size_t width = coeffs.size();

  if (inner == 1) {
    std::vector<double> pad(n + 2 * r);
    for (std::size_t o = 0; o < layout.outer; ++o) {
      const double* line = in.data() + o * n;
      for (std::size_t k = 0; k < n + 2 * r; ++k) pad[k] = line[(k + n * (r / n + 1) - r) % n];
      double* dst = out.data() + o * n;
      std::size_t k = 0;
      for (; k + 4 <= n; k += 4) {
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t j = 0; j < width; ++j) {
          const __m256d c = _mm256_set1_pd(coeffs[j]);
          acc = _mm256_add_pd(acc, _mm256_mul_pd(c, _mm256_loadu_pd(pad.data() + k + j)));
        }
        _mm256_storeu_pd(dst + k, acc);
      }
      for (; k < n; ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < width; ++j) acc = acc + coeffs[j] * pad[k + j];
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
      std::size_t i = 0;
      for (; i + 4 <= inner; i += 4) {
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t j = 0; j < width; ++j) {
          const std::size_t src = (k + j + n * (r / n + 1) - r) % n;
          const __m256d c = _mm256_set1_pd(coeffs[j]);
          acc = _mm256_add_pd(acc, _mm256_mul_pd(c, _mm256_loadu_pd(block + src * inner + i)));
        }
        _mm256_storeu_pd(row + i, acc);
      }
      for (; i < inner; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < width; ++j) {
          const std::size_t src = (k + j + n * (r / n + 1) - r) % n;
          acc = acc + coeffs[j] * block[src * inner + i];
        }
        row[i] = acc;
      }
    }
  }
}

double weighted_sum(std::span<const double> values, std::span<const double> weights) {
  if (values.size() != weights.size()) throw std::invalid_argument("weighted_sum: size mismatch");
  const std::size_t n = values.size();
  const std::size_t blocked = n - n % 4;
  __m256d lane = _mm256_setzero_pd();
  for (std::size_t k = 0; k < blocked; k += 4)
    lane = _mm256_add_pd(lane, _mm256_mul_pd(_mm256_loadu_pd(values.data() + k),
                                             _mm256_loadu_pd(weights.data() + k)));
  alignas(32) double l[4];
  _mm256_store_pd(l, lane);
  double acc = (l[0] + l[1]) + (l[2] + l[3]);
  for (std::size_t k = blocked; k < n; ++k) acc = acc + values[k] * weights[k];
  return acc;
}

}  // namespace geodex::kernels::avx2
