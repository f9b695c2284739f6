#pragma once

// Uniform periodic lattices over a coordinate box: sample layout, periodic
// differentiation, trapezoid quadrature and trigonometric interpolation.
// Shared by the parameter grids of immersions and the field grids of the
// measure checks.

#include <span>
#include <string>
#include <vector>

#include "geodex/manifold.hpp"

namespace geodex {

enum class DiffScheme {
  central4,  // 5-point periodic central differences
  spectral,  // dense periodic (Fourier) differentiation, Nyquist mode dropped
};

DiffScheme parse_scheme(const std::string& name);
std::string scheme_name(DiffScheme s);

class Lattice {
 public:
  /// counts[a] points along axis a covering [origin[a], origin[a] + period[a]).  With
  /// `cell_centred` the points sit at half-integer offsets.
  Lattice(std::vector<int> counts, std::vector<double> origin, std::vector<double> period,
          DiffScheme scheme = DiffScheme::central4, bool cell_centred = false);

  int dim() const { return static_cast<int>(counts_.size()); }
  std::size_t size() const { return size_; }
  int count(int axis) const { return counts_[static_cast<std::size_t>(axis)]; }
  double spacing(int axis) const { return spacing_[static_cast<std::size_t>(axis)]; }
  double period(int axis) const { return period_[static_cast<std::size_t>(axis)]; }
  DiffScheme scheme() const { return scheme_; }
  /// Quadrature weight of every point (product of spacings).
  double weight() const { return weight_; }

  Point point(std::size_t k) const;
  std::vector<int> index(std::size_t k) const;
  std::size_t flat(std::span<const int> idx) const;  // wraps periodically

  /// d/dx_axis of one scalar sample per point.
  std::vector<double> diff(std::span<const double> f, int axis) const;
  /// Stencil coefficients along an axis (odd length, centred).
  const std::vector<double>& stencil(int axis) const { return stencils_[static_cast<std::size_t>(axis)]; }
  /// The derivative along `axis` as a dense size() x size() matrix.
  Mat diff_matrix(int axis) const;

  /// Trapezoid quadrature: weight() * sum f.
  double integrate(std::span<const double> f) const;

  /// Trigonometric interpolant of the samples evaluated at a coordinate point.
  double interpolate(std::span<const double> f, const Point& x) const;

 private:
  std::vector<int> counts_;
  std::vector<double> origin_, period_, spacing_;
  DiffScheme scheme_;
  bool centred_;
  std::size_t size_ = 1;
  double weight_ = 1.0;
  std::vector<std::vector<double>> stencils_;
};

}  // namespace geodex
