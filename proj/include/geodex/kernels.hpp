#pragma once

// Data-parallel inner loops shared by the grid code: periodic stencils along
// one axis of a strided block and weighted reductions.  Each kernel has a
// portable scalar reference and an AVX2 variant; the variant is chosen once at
// runtime.  Both variants perform the same floating point operations in the
// same order, so results are bit-identical.

#include <cstddef>
#include <span>
#include <string_view>

namespace geodex::kernels {

enum class Isa { scalar, avx2 };

/// Layout of a block of samples viewed as [outer][axis][inner], inner contiguous.
struct AxisLayout {
  std::size_t outer = 1;
  std::size_t axis = 1;
  std::size_t inner = 1;
  std::size_t size() const { return outer * axis * inner; }
};

/// out[o][k][i] = sum_j coeffs[j] * in[o][(k + j - r) mod axis][i], r = coeffs.size() / 2.
/// `coeffs` must have odd length.  `in` and `out` must not alias.
void periodic_stencil(std::span<const double> in, std::span<double> out, AxisLayout layout,
                      std::span<const double> coeffs);

/// Sum of values[k] * weights[k] in a fixed four-lane blocked order.
double weighted_sum(std::span<const double> values, std::span<const double> weights);

// Explicit variants, exposed for equivalence tests and benchmarks.
namespace scalar {
void periodic_stencil(std::span<const double> in, std::span<double> out, AxisLayout layout,
                      std::span<const double> coeffs);
double weighted_sum(std::span<const double> values, std::span<const double> weights);
}  // namespace scalar

namespace avx2 {
bool available();
void periodic_stencil(std::span<const double> in, std::span<double> out, AxisLayout layout,
                      std::span<const double> coeffs);
double weighted_sum(std::span<const double> values, std::span<const double> weights);
}  // namespace avx2

/// ISA used by the dispatching entry points.  GEODEX_ISA=scalar forces the reference path.
Isa active_isa();
std::string_view isa_name(Isa isa);

}  // namespace geodex::kernels
