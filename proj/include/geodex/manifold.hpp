#pragma once

// Finite-dimensional Riemannian charts and everything derived from the metric:
// Christoffel symbols, their derivatives, the Riemann and Ricci tensors, and
// covariant derivatives of vector fields.
//
// Conventions (used by every other module):
//   Gamma^a_bc   = 1/2 h^ad (h_db,c + h_dc,b - h_bc,d)
//   R^a_bcd      = Gamma^a_bd,c - Gamma^a_bc,d + Gamma^a_ce Gamma^e_bd - Gamma^a_de Gamma^e_bc
//   R_ab         = R^c_acb          (round sphere: R_ab = +h_ab)
//   v^a_;b       = nabla_b v^a,     v^a_;bc = nabla_c nabla_b v^a

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "geodex/tensor.hpp"

namespace geodex {

using Point = Eigen::VectorXd;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct AxisDomain {
  double lo = -1e300;
  double hi = 1e300;
  bool periodic = false;  // [lo, hi) is identified end to end
};

using MetricFn = std::function<Mat(const Point&)>;
/// Returns the n matrices d_c h (first) or the n*n matrices d_c d_d h at index c*n+d (second).
using MetricDerivFn = std::function<std::vector<Mat>(const Point&)>;

/// A chart with a metric.  Immutable after construction; copies share the callables.
struct ManifoldSpec {
  std::string name;
  int dim = 0;
  MetricFn metric;
  MetricDerivFn metric_d1;  // optional analytic derivatives
  MetricDerivFn metric_d2;
  double fd_step = 1e-3;
  std::vector<AxisDomain> domain;

  bool contains(const Point& x) const;
};

struct MetricValue {
  Mat h;
  Mat inverse;
  double log_det = 0.0;
};

struct CurvatureBundle {
  Mat metric;
  Mat inverse;
  Tensor3 gamma;   // (a,b,c)   Gamma^a_bc
  Tensor4 dgamma;  // (a,b,c,d) d_d Gamma^a_bc
  Tensor4 riemann; // (a,b,c,d) R^a_bcd
  Mat ricci;       // R_ab

  /// R_abcd with the first index lowered.
  double riemann_lower(int a, int b, int c, int d) const;
};

/// Metric, its inverse and log|det| by Cholesky.  Throws SignatureError if h is
/// not positive definite, NumericError on NaN, DomainError outside the chart.
MetricValue metric_at(const ManifoldSpec& m, const Point& x);

/// Christoffels, their first derivatives, Riemann and Ricci at x.  Uses analytic
/// metric derivatives when present, else 4th-order central differences.
CurvatureBundle curvature_at(const ManifoldSpec& m, const Point& x);

/// Just the Christoffel symbols (cheaper than curvature_at).
Tensor3 christoffel_at(const ManifoldSpec& m, const Point& x);

/// d_c h_ab (index c*... see MetricDerivFn) by analytic formula or finite differences.
std::vector<Mat> metric_first_derivatives(const ManifoldSpec& m, const Point& x);

struct VectorField {
  std::function<Vec(const Point&)> eval;

  /// Field whose chart components are the same everywhere.
  static VectorField constant(const Vec& components);
  static VectorField zero(int dim);
};

struct CovariantDerivatives {
  Vec value;      // v^a
  Mat first;      // (a,b) v^a_;b
  Tensor3 second; // (a,b,c) v^a_;bc (only when order == 2)
};

/// Covariant derivatives of v at x up to `order` (1 or 2), from 4th-order
/// central differences of the chart components and curvature_at's Christoffels.
CovariantDerivatives covariant_derivatives(const ManifoldSpec& m, const VectorField& v,
                                           const Point& x, int order);

/// to - from in chart components, wrapped into half a period on periodic axes.
Vec chart_delta(const ManifoldSpec& m, const Point& from, const Point& to);

/// Finite-difference gradient of a vector-valued function: column c is d_c f.
Mat fd_jacobian(const std::function<Vec(const Point&)>& f, const Point& x, double step);

namespace builtin {
ManifoldSpec euclidean(int n);
/// Round sphere of the given radius in (theta, phi); theta restricted to [collar, pi - collar].
ManifoldSpec sphere(double radius = 1.0, double collar = 0.1);
/// Round sphere in Riemann normal coordinates centred on a point; |Y_i| <= box.
ManifoldSpec sphere_normal(double radius = 1.0, double box = 1.2);
/// Upper half-plane (dx^2 + dy^2) / y^2, y >= y_min.
ManifoldSpec poincare_half_plane(double y_min = 1e-2);
/// Flat torus R^n / (period Z)^n.
ManifoldSpec flat_torus(int n, double period = 1.0);
/// Euclidean plane in polar coordinates (r, phi), r >= r_min.
ManifoldSpec polar_plane(double r_min = 0.05);
/// Metric components given as expressions in the named coordinates (full symmetric matrix).
ManifoldSpec from_expressions(const std::string& name, const std::vector<std::string>& coordinates,
                              const std::vector<std::vector<std::string>>& components,
                              std::vector<AxisDomain> domain, double fd_step = 1e-3);
/// Looks up a builtin by id: euclidean2, euclidean3, euclidean4, sphere, sphere_normal,
/// half_plane, flat_torus, polar_plane.
std::optional<ManifoldSpec> by_id(const std::string& id, double radius = 1.0);
}  // namespace builtin

}  // namespace geodex
