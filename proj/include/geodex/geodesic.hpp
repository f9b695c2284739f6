#pragma once

// Geodesics: an adaptive Runge-Kutta oracle, the log map by shooting, the
// truncated third-order expansion, and the group operations built on it.

#include <limits>
#include <vector>

#include "geodex/manifold.hpp"

namespace geodex {

struct GeodesicSample {
  double s = 0.0;
  Point x;
  Vec v;
};

struct ShootOptions {
  double tol = 1e-12;
  int max_steps = 200000;
  double min_step = 1e-14;
};

/// Integrates x'' = -Gamma(x', x') with Dormand-Prince 5(4) from (x0, v) to parameter t.
/// Returns every accepted step including both ends.  Throws DomainError (with the
/// exit parameter) if the curve leaves the chart, ConvergenceError on step underflow.
std::vector<GeodesicSample> shoot_path(const ManifoldSpec& m, const Point& x0, const Vec& v, double t,
                                       const ShootOptions& opt = {});
GeodesicSample shoot_state(const ManifoldSpec& m, const Point& x0, const Vec& v, double t,
                           const ShootOptions& opt = {});
Point shoot(const ManifoldSpec& m, const Point& x0, const Vec& v, double t = 1.0, double tol = 1e-12);

/// Classical RK4 with a fixed number of steps.  A smooth function of (x0, v), which
/// the adaptive integrator is not at the level of its tolerance; used where the
/// endpoint gets differentiated numerically.
GeodesicSample shoot_fixed(const ManifoldSpec& m, const Point& x0, const Vec& v, double t, int steps);

/// Initial velocity of the geodesic from x0 reaching x1 at parameter 1, by Newton
/// iteration on the endpoint residual.  Throws ConvergenceError("no unique geodesic ...").
Vec log_map(const ManifoldSpec& m, const Point& x0, const Point& x1, double tol = 1e-10, int max_iter = 50);

/// |v| in the metric at x.
double metric_norm(const ManifoldSpec& m, const Point& x, const Vec& v);

/// 0.5 x the smallest parameter distance, over `directions` evenly spread unit
/// directions, at which the shooting Jacobian degenerates or the geodesic leaves the
/// chart; capped at `cap`.
double trust_radius(const ManifoldSpec& m, const Point& x0, int directions = 8, double cap = 10.0);

struct Expansion {
  Point point;
  bool trust_violation = false;
};

/// X0 + v - 1/2 Gamma v v + 1/6 (-dGamma + 2 Gamma Gamma) v v v, truncated at `order`.
Expansion expand3(const ManifoldSpec& m, const Point& x0, const Vec& v, int order = 3,
                  double trust = std::numeric_limits<double>::infinity());

/// Terms of the composed generator (move by v1, then by the field v2).
struct Composition {
  Vec linear;     // v1 + v2
  Vec transport;  // v1^b v2^a_;b
  Vec second;     // 1/2 v1^b v1^c v2^a_;bc
  Vec curvature;  // 1/3 R^a_bcd (v2 + v1/2)^b v2^c v1^d
  Vec total() const { return linear + transport + second + curvature; }
};

/// The same from precomputed curvature at the base and covariant derivatives of v2 there.
Composition compose3_terms(const CurvatureBundle& cb, const Vec& v1, const CovariantDerivatives& v2);
Composition compose3_terms(const ManifoldSpec& m, const Point& x0, const Vec& v1, const VectorField& v2);
Vec compose3(const ManifoldSpec& m, const Point& x0, const Vec& v1, const VectorField& v2);

/// Third-order endpoint from precomputed curvature (see expand3).
Point expand3_at(const CurvatureBundle& cb, const Point& x0, const Vec& v, int order = 3);

/// Generator at x1 = expand3(x0, v) leading back to x0 through third order.
Vec invert3(const ManifoldSpec& m, const Point& x0, const Vec& v);

/// Riemann normal coordinates around x0 in an orthonormal frame.
class NormalChart {
 public:
  NormalChart(ManifoldSpec m, Point x0, int steps = 64);

  Vec to_normal(const Point& x, double tol = 1e-12) const;
  Point from_normal(const Vec& y) const;
  /// Pulled-back metric at normal coordinate y (Jacobian by central differences).
  Mat metric(const Vec& y, double step = 1e-4) const;
  /// The normal chart as a manifold on the box |y_i| <= radius.
  ManifoldSpec as_manifold(double radius) const;

  /// Columns are an h-orthonormal frame at x0.
  const Mat& frame() const { return frame_; }
  /// R_abcd at x0 with all indices in the frame.
  Tensor4 frame_riemann() const;
  const Point& base() const { return x0_; }

 private:
  ManifoldSpec m_;
  Point x0_;
  int steps_;
  Mat frame_;
  Mat frame_inv_;
};

}  // namespace geodex
