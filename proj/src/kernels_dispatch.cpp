#include "geodex/kernels.hpp"

#include <cstdlib>
#include <string>

namespace geodex::kernels {

namespace {
Isa detect() {
  if (const char* env = std::getenv("GEODEX_ISA"); env && std::string(env) == "scalar") return Isa::scalar;
  return avx2::available() ? Isa::avx2 : Isa::scalar;
}
}  // namespace

Isa active_isa() {
  static const Isa isa = detect();
  return isa;
}

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

void periodic_stencil(std::span<const double> in, std::span<double> out, AxisLayout layout,
                      std::span<const double> coeffs) {
  if (active_isa() == Isa::avx2) return avx2::periodic_stencil(in, out, layout, coeffs);
  scalar::periodic_stencil(in, out, layout, coeffs);
}

double weighted_sum(std::span<const double> values, std::span<const double> weights) {
  if (active_isa() == Isa::avx2) return avx2::weighted_sum(values, weights);
  return scalar::weighted_sum(values, weights);
}

}  // namespace geodex::kernels
