#include <doctest.h>

#include <cmath>

#include "geodex/error.hpp"
#include "geodex/manifold.hpp"
#include "geodex/rng.hpp"

using namespace geodex;

namespace {
Point pt(std::initializer_list<double> v) {
  Point p(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double x : v) p[i++] = x;
  return p;
}

ManifoldSpec without_derivatives(ManifoldSpec m) {
  m.metric_d1 = nullptr;
  m.metric_d2 = nullptr;
  return m;
}

double max_ricci_defect(const CurvatureBundle& cb, double k) {
  return (cb.ricci - k * cb.metric).cwiseAbs().maxCoeff();
}
}  // namespace

TEST_CASE("sphere Ricci equals the metric over r^2") {
  for (double r : {1.0, 2.0}) {
    const auto analytic = builtin::sphere(r);
    const auto numeric = without_derivatives(analytic);
    for (double th : {0.4, 1.0, 2.3}) {
      const Point x = pt({th, 0.7});
      CHECK(max_ricci_defect(curvature_at(analytic, x), 1.0 / (r * r)) < 1e-12);
      CHECK(max_ricci_defect(curvature_at(numeric, x), 1.0 / (r * r)) < 1e-7);
    }
  }
}

TEST_CASE("half-plane and normal-coordinate sphere curvature") {
  const auto hp = builtin::poincare_half_plane();
  CHECK(max_ricci_defect(curvature_at(hp, pt({0.3, 0.8})), -1.0) < 1e-12);
  CHECK(max_ricci_defect(curvature_at(without_derivatives(hp), pt({0.3, 0.8})), -1.0) < 1e-6);

  const auto sn = builtin::sphere_normal(1.5);
  for (const Point& y : {pt({0.0, 0.0}), pt({0.01, -0.02}), pt({0.4, 0.3}), pt({-0.6, 0.5})}) {
    const auto cb = curvature_at(sn, y);
    CHECK(max_ricci_defect(cb, 1.0 / 2.25) < 1e-6);
  }
}

TEST_CASE("flat charts have vanishing curvature") {
  const auto pp = builtin::polar_plane();
  const auto cb = curvature_at(pp, pt({0.9, 1.3}));
  for (double v : cb.riemann.data()) CHECK(std::abs(v) < 1e-12);
  const auto ex = builtin::from_expressions("polar_expr", {"r", "p"}, {{"1", "0"}, {"0", "r^2"}},
                                            {AxisDomain{0.1, 10, false}, AxisDomain{}});
  const auto cbe = curvature_at(ex, pt({0.9, 1.3}));
  for (double v : cbe.riemann.data()) CHECK(std::abs(v) < 1e-7);
}

TEST_CASE("Riemann symmetries and first Bianchi identity on a generic metric") {
  const auto m = builtin::from_expressions(
      "generic", {"x", "y", "z"},
      {{"1 + 0.3*sin(x*y)", "0.1*z", "0.05*x"},
       {"0.1*z", "2 + cos(y)*0.2", "0.1*x*y"},
       {"0.05*x", "0.1*x*y", "1.5 + 0.1*z^2"}},
      {});
  const Point x = pt({0.3, -0.4, 0.5});
  const auto cb = curvature_at(m, x);
  double worst = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) {
          const double r = cb.riemann_lower(a, b, c, d);
          worst = std::max(worst, std::abs(r + cb.riemann_lower(b, a, c, d)));
          worst = std::max(worst, std::abs(r + cb.riemann_lower(a, b, d, c)));
          worst = std::max(worst, std::abs(r - cb.riemann_lower(c, d, a, b)));
          worst = std::max(worst, std::abs(cb.riemann(a, b, c, d) + cb.riemann(a, c, d, b) + cb.riemann(a, d, b, c)));
        }
  CHECK(worst < 1e-6);
  CHECK((cb.ricci - cb.ricci.transpose()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("finite-difference Christoffels converge at fourth order") {
  auto m = without_derivatives(builtin::sphere(1.0));
  const auto exact = christoffel_at(builtin::sphere(1.0), pt({0.9, 0.2}));
  auto err = [&](double h) {
    m.fd_step = h;
    const auto g = christoffel_at(m, pt({0.9, 0.2}));
    double e = 0;
    for (std::size_t i = 0; i < g.data().size(); ++i) e = std::max(e, std::abs(g.data()[i] - exact.data()[i]));
    return e;
  };
  CHECK(err(0.04) / err(0.02) > 12.0);
}

TEST_CASE("rotation field on the sphere is Killing") {
  const auto s = builtin::sphere(1.3);
  const VectorField rot = VectorField::constant(pt({0.0, 1.0}));
  for (double th : {0.5, 1.2, 2.0}) {
    const Point x = pt({th, 0.1});
    const auto cd = covariant_derivatives(s, rot, x, 2);
    const Mat h = s.metric(x);
    const Mat lowered = h * cd.first;  // v_a;b
    CHECK((lowered + lowered.transpose()).cwiseAbs().maxCoeff() < 1e-9);
    // Killing fields satisfy v_a;bc = R_dcba v^d  ->  contract: v^a_;b^b = -R^a_d v^d
    const auto cb = curvature_at(s, x);
    const Vec lap = [&] {
      Vec l = Vec::Zero(2);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          for (int c = 0; c < 2; ++c) l[a] += cb.inverse(b, c) * cd.second(a, b, c);
      return l;
    }();
    const Vec ric = cb.inverse * cb.ricci * cd.value;
    CHECK((lap + ric).cwiseAbs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("covariant derivative is chart independent") {
  // Cartesian constant field (1,0) written in polar coordinates is parallel.
  const auto pp = builtin::polar_plane();
  VectorField ex{[](const Point& x) { return Vec(pt({std::cos(x[1]), -std::sin(x[1]) / x[0]})); }};
  const auto cd = covariant_derivatives(pp, ex, pt({1.1, 0.6}), 2);
  CHECK(cd.first.cwiseAbs().maxCoeff() < 1e-10);
  for (double v : cd.second.data()) CHECK(std::abs(v) < 1e-8);
}

TEST_CASE("errors name the failure") {
  const auto s = builtin::sphere(1.0, 0.1);
  CHECK_THROWS_AS(metric_at(s, pt({0.05, 0.0})), DomainError);
  CHECK_THROWS_AS(curvature_at(without_derivatives(s), pt({0.1005, 0.0})), DomainError);
  const auto bad = builtin::from_expressions("bad", {"x", "y"}, {{"1", "0"}, {"0", "-1"}}, {});
  CHECK_THROWS_AS(metric_at(bad, pt({0.0, 0.0})), SignatureError);
  const auto nan = builtin::from_expressions("nan", {"x", "y"}, {{"log(x)", "0"}, {"0", "1"}}, {});
  CHECK_THROWS_AS(metric_at(nan, pt({-1.0, 0.0})), NumericError);
}
