#pragma once

// Log-densities of the right/left invariant measures on geodesic expansions and
// of the diffeomorphism measure, plus brute-force lattice Jacobian checks of the
// determinant identities relating them.

#include <string>
#include <utility>
#include <vector>

#include "geodex/geodesic.hpp"
#include "geodex/lattice.hpp"

namespace geodex {

enum class MeasureKind { right, left, diffeo };

/// A log-density split into named terms; log_density is their sum.
struct MeasureWeight {
  MeasureKind kind = MeasureKind::right;
  Point base;
  double log_density = 0.0;
  bool includes_volume_factor = false;
  std::vector<std::pair<std::string, double>> terms;

  double term(const std::string& name) const;
};

/// -1/6 R_ab v^a v^b  [+ 1/2 log|h|]
MeasureWeight right_log_weight(const ManifoldSpec& m, const Point& x0, const Vec& v, bool volume = false);
/// -v^a_;a + 1/2 v^a_;b v^b_;a + 1/3 R_ab v^a v^b  [+ 1/2 log|h|]
MeasureWeight left_log_weight(const ManifoldSpec& m, const Point& x0, const VectorField& v, bool volume = false);
/// The left exponent from precomputed data.
MeasureWeight left_log_weight(const CurvatureBundle& cb, const CovariantDerivatives& v);

/// A periodic lattice laid along some chart axes of a manifold.  Chart coordinates
/// not covered by a lattice axis are held at the anchor's values and fields are
/// taken to be constant along them.
class FieldGrid {
 public:
  FieldGrid(ManifoldSpec m, Lattice lattice, std::vector<int> chart_axes, Point anchor);

  const ManifoldSpec& manifold() const { return m_; }
  const Lattice& lattice() const { return lattice_; }
  std::size_t size() const { return lattice_.size(); }
  int dim() const { return m_.dim; }
  Point point(std::size_t k) const;
  const CurvatureBundle& curvature(std::size_t k) const { return curv_[k]; }

  /// n x size() samples of a field, one column per lattice point.
  Mat sample(const VectorField& v) const;
  /// Chart partial derivatives of sampled components: entry c is d_c of every row.
  std::vector<Mat> partials(const Mat& samples) const;
  /// Covariant derivatives from lattice differences and the pointwise Christoffels.
  std::vector<CovariantDerivatives> covariant(const Mat& samples, int order) const;

  /// Throws PreconditionError if lattice derivatives of v disagree with chart
  /// finite differences by more than `rel` (relative to the field's scale).
  void require_resolved(const VectorField& v, double rel = 1e-3) const;

 private:
  ManifoldSpec m_;
  Lattice lattice_;
  std::vector<int> axes_;
  Point anchor_;
  std::vector<CurvatureBundle> curv_;
};

/// Lattice composition: V(x) = compose3(x, v1(x), v2) with v2 differentiated on the lattice.
Mat compose_on_lattice(const FieldGrid& grid, const Mat& v1, const Mat& v2);

enum class Side { right, left };

struct JacobianCheck {
  double numeric_logdet = 0.0;
  double formula_logdet = 0.0;
  double residual = 0.0;  // numeric - formula
};

/// log det of the lattice Jacobian of the composition (d V / d v2 for right,
/// d V / d v1 for left) against the lattice sum of the closed-form exponent.
/// The trace delta(x,x) is 1/w, so quadratures of densities become plain sums.
JacobianCheck product_jacobian_check(const FieldGrid& grid, const Mat& v1, const Mat& v2, Side side);

/// sum over the lattice of the right exponent -1/6 R v v.
double right_exponent_sum(const FieldGrid& grid, const Mat& v);
/// sum over the lattice of the left exponent.
double left_exponent_sum(const FieldGrid& grid, const Mat& v);

struct NormalMetricFit {
  Tensor4 fitted;     // (a,b,c,d): coefficient of Y^c Y^d in h_ab, symmetrised in (c,d)
  Tensor4 predicted;  // -1/6 (R_acbd + R_adbc) in the normal frame
  double max_deviation = 0.0;
  double max_symmetry_defect = 0.0;
  double condition = 0.0;
  int samples = 0;
};

/// Fits the normal-coordinate metric to a quadratic form in Y (cubic and quartic
/// terms fitted as nuisance) on samples inside |Y| <= radius.
NormalMetricFit normal_metric_expansion_check(const ManifoldSpec& m, const Point& x0, double radius);

struct DiffeoCheck {
  double passive_numeric_logdet = 0.0;  // sum log|det dY/dv|
  double spatial_logdet = 0.0;          // sum log|det dY/dX|
  double covariant_formula_logdet = 0.0;
  // Gamma-bearing pieces: the printed ones and the measured non-covariant remainders.
  double printed_noncovariant_jacobian = 0.0;
  double printed_noncovariant_volume = 0.0;
  double measured_noncovariant_jacobian = 0.0;
  double measured_noncovariant_volume = 0.0;
  double noncovariant_cancellation = 0.0;  // measured_jacobian - measured_volume
  double residual = 0.0;  // (passive - spatial) - covariant formula
};

/// Y(x) = expand3(x, v(x)) on the lattice.  The sqrt(h) ratio of the passive
/// transformation is computed as |det dY/dX|^-1.
DiffeoCheck diffeo_measure_check(const FieldGrid& grid, const Mat& v);

}  // namespace geodex
