#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "geodex/convergence.hpp"
#include "geodex/error.hpp"
#include "geodex/haar.hpp"

using namespace geodex;

namespace {

constexpr double kPi = std::numbers::pi;

// Sphere normal chart, 1-D lattice along Y^1.
struct SpherePatch {
  double L = 1.5;
  int N = 16;
  FieldGrid grid{builtin::sphere_normal(1.0, 3.0), Lattice({N}, {-L / 2}, {L}, DiffScheme::spectral, true), {0},
                 Point::Zero(2)};

  void fields(double eps, Mat& v1, Mat& v2) const {
    v1.resize(2, N);
    v2.resize(2, N);
    for (int k = 0; k < N; ++k) {
      double s = grid.point(k)[0];
      double b = std::pow(std::sin(kPi * (s + L / 2) / L), 12);
      v1(0, k) = eps * 0.05;
      v1(1, k) = 0.0;
      v2(0, k) = eps * 0.8 * b;
      v2(1, k) = -eps * 0.5 * b * std::cos(2 * kPi * s / L);
    }
  }
};

Mat latitude_field(const FieldGrid& g, double eps) {
  Mat v(2, g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    double ph = g.point(k)[1];
    v(0, k) = eps * (0.3 + 0.2 * std::cos(ph));
    v(1, k) = eps * (0.1 * std::sin(2 * ph) - 0.2);
  }
  return v;
}

}  // namespace

TEST_CASE("right weight: sign follows the curvature") {
  auto e = right_log_weight(builtin::euclidean(2), Point{{0.4, -1.0}}, Vec{{0.3, 0.7}});
  CHECK(e.log_density == 0.0);

  auto s = right_log_weight(builtin::sphere(1.0), Point{{1.0, 0.3}}, Vec{{0.1, 0.0}});
  CHECK(s.log_density == doctest::Approx(-1.0 / 600).epsilon(1e-9));

  // |v|^2 = 0.01 in h = I / y^2 at y = 1
  auto hp = right_log_weight(builtin::poincare_half_plane(), Point{{0.2, 1.0}}, Vec{{0.1, 0.0}});
  CHECK(hp.log_density == doctest::Approx(1.0 / 600).epsilon(1e-9));

  auto neg = right_log_weight(builtin::sphere(1.0), Point{{1.0, 0.3}}, Vec{{-0.1, 0.0}});
  CHECK(neg.log_density == doctest::Approx(s.log_density).epsilon(1e-14));
}

TEST_CASE("right weight volume factor") {
  Point x{{1.0, 0.3}};
  auto w = right_log_weight(builtin::sphere(2.0), x, Vec{{0.05, 0.02}}, true);
  CHECK(w.includes_volume_factor);
  double h = 16.0 * std::sin(1.0) * std::sin(1.0);
  CHECK(w.term("volume") == doctest::Approx(0.5 * std::log(h)).epsilon(1e-12));
  CHECK(w.log_density == doctest::Approx(w.term("ricci") + w.term("volume")).epsilon(1e-14));
}

TEST_CASE("left weight examples") {
  auto m = builtin::euclidean(2);
  Point x{{0.3, -0.2}};
  CHECK(left_log_weight(m, x, VectorField::zero(2)).log_density == 0.0);
  CHECK(std::abs(left_log_weight(m, x, VectorField::constant(Vec{{1.0, -2.0}})).log_density) < 1e-12);

  VectorField rot{[](const Point& p) { return Vec{{-p[1], p[0]}}; }};
  auto w = left_log_weight(m, x, rot);
  CHECK(std::abs(w.term("divergence")) < 1e-9);
  CHECK(w.term("quadratic") == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(w.term("ricci") == 0.0);
  CHECK(w.log_density == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("left weight: divergence is odd, the rest even") {
  auto m = builtin::sphere(1.0);
  Point x{{1.1, 0.4}};
  VectorField v{[](const Point& p) { return Vec{{0.1 * std::sin(p[1]), 0.05 * p[0] * p[0]}}; }};
  VectorField mv{[&](const Point& p) { return Vec(-v.eval(p)); }};
  auto a = left_log_weight(m, x, v), b = left_log_weight(m, x, mv);
  CHECK(a.term("divergence") == doctest::Approx(-b.term("divergence")).epsilon(1e-12));
  CHECK(a.term("quadratic") == doctest::Approx(b.term("quadratic")).epsilon(1e-12));
  CHECK(a.term("ricci") == doctest::Approx(b.term("ricci")).epsilon(1e-12));
  CHECK(a.term("ricci") == doctest::Approx(-2.0 * right_log_weight(m, x, v.eval(x)).term("ricci")).epsilon(1e-12));
}

TEST_CASE("product Jacobian: zero v1 makes the right map the identity") {
  SpherePatch p;
  Mat v1, v2;
  p.fields(0.1, v1, v2);
  v1.setZero();
  auto r = product_jacobian_check(p.grid, v1, v2, Side::right);
  CHECK(std::abs(r.numeric_logdet) < 1e-10);
  CHECK(std::abs(r.formula_logdet) < 1e-14);
}

TEST_CASE("product Jacobian on flat space matches the lattice closed form") {
  // For constant v1 = c the right Jacobian is I + cD + c^2 D^2 / 2 per component;
  // with spectral wavenumbers mu_k its log-det is sum_k 1/2 log(1 + (c mu_k)^4 / 4).
  const int N = 16;
  const double L = 1.5, c = 0.04;
  FieldGrid g(builtin::euclidean(2), Lattice({N}, {-L / 2}, {L}, DiffScheme::spectral, true), {0}, Point::Zero(2));
  Mat v1(2, N), v2(2, N);
  for (int k = 0; k < N; ++k) {
    double s = g.point(k)[0];
    v1(0, k) = c;
    v1(1, k) = 0.0;
    v2(0, k) = 0.1 * std::cos(2 * kPi * s / L);
    v2(1, k) = 0.05;
  }
  double oracle = 0.0;
  for (int k = -N / 2 + 1; k < N / 2; ++k) {
    double mu = 2 * kPi * k / L;
    oracle += 2 * 0.5 * std::log1p(std::pow(c * mu, 4) / 4);
  }
  auto r = product_jacobian_check(g, v1, v2, Side::right);
  CHECK(r.formula_logdet == 0.0);
  CHECK(r.numeric_logdet == doctest::Approx(oracle).epsilon(1e-6));
  CHECK(r.numeric_logdet > 0.0);
}

TEST_CASE("product Jacobian residual is higher order on the sphere patch") {
  SpherePatch p;
  for (Side side : {Side::right, Side::left}) {
    std::vector<double> sc, er;
    for (double eps : {0.2, 0.1, 0.05}) {
      Mat v1, v2;
      p.fields(eps, v1, v2);
      auto r = product_jacobian_check(p.grid, v1, v2, side);
      sc.push_back(eps);
      er.push_back(std::abs(r.residual));
    }
    CHECK(fit_slope(sc, er, 1e-13).slope >= 2.7);
  }
}

TEST_CASE("product Jacobian rejects mismatched samples") {
  SpherePatch p;
  Mat bad = Mat::Zero(2, 5);
  CHECK_THROWS_AS(product_jacobian_check(p.grid, bad, bad, Side::right), PreconditionError);
}

TEST_CASE("under-resolved fields are refused") {
  FieldGrid g(builtin::sphere(1.0), Lattice({8}, {0.0}, {2 * kPi}, DiffScheme::spectral, true), {1}, Point{{1.0, 0.0}});
  VectorField smooth{[](const Point& x) { return Vec{{0.1 * std::cos(x[1]), 0.0}}; }};
  VectorField rough{[](const Point& x) { return Vec{{0.1 * std::cos(7 * x[1]), 0.0}}; }};
  CHECK_NOTHROW(g.require_resolved(smooth));
  CHECK_THROWS_AS(g.require_resolved(rough), PreconditionError);
}

TEST_CASE("normal metric quadratic coefficient") {
  auto s = normal_metric_expansion_check(builtin::sphere(1.0), Point{{1.0, 0.3}}, 0.1);
  CHECK(s.max_deviation < 1e-3);
  CHECK(s.max_symmetry_defect < 1e-6);
  // unit sphere: h_11 picks up -Y2^2/3
  CHECK(s.fitted(0, 0, 1, 1) == doctest::Approx(-1.0 / 3).epsilon(1e-4));

  auto e = normal_metric_expansion_check(builtin::euclidean(2), Point{{0.1, 0.2}}, 0.1);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d) CHECK(std::abs(e.fitted(a, b, c, d)) < 1e-8);
}

TEST_CASE("diffeo measure: Cartesian flat chart has no Christoffel pieces") {
  FieldGrid g(builtin::euclidean(2), Lattice({16}, {0.0}, {2 * kPi}, DiffScheme::spectral, true), {1},
              Point::Zero(2));
  auto d = diffeo_measure_check(g, latitude_field(g, 0.05));
  CHECK(d.printed_noncovariant_jacobian == 0.0);
  CHECK(d.printed_noncovariant_volume == 0.0);
  CHECK(std::abs(d.passive_numeric_logdet) < 1e-10);
}

TEST_CASE("diffeo measure: polar Christoffel pieces cancel") {
  FieldGrid g(builtin::polar_plane(), Lattice({16}, {0.0}, {2 * kPi}, DiffScheme::spectral, true), {1},
              Point{{1.0, 0.0}});
  auto d = diffeo_measure_check(g, latitude_field(g, 1e-3));
  CHECK(std::abs(d.measured_noncovariant_jacobian) > 1e-3);
  CHECK(std::abs(d.noncovariant_cancellation) < 1e-8);
  CHECK(d.residual == doctest::Approx(d.noncovariant_cancellation).epsilon(1e-6));
}

TEST_CASE("diffeo measure residual is third order on the sphere") {
  FieldGrid g(builtin::sphere(1.0), Lattice({16}, {0.0}, {2 * kPi}, DiffScheme::spectral, true), {1},
              Point{{1.0, 0.0}});
  std::vector<double> sc, er;
  for (double eps : {0.2, 0.1, 0.05, 0.025}) {
    sc.push_back(eps);
    er.push_back(std::abs(diffeo_measure_check(g, latitude_field(g, eps)).residual));
  }
  CHECK(fit_slope(sc, er, 1e-13).slope >= 2.7);
}
