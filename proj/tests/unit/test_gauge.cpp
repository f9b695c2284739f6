#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "geodex/convergence.hpp"
#include "geodex/error.hpp"
#include "geodex/gauge.hpp"
#include "geodex/geodesic.hpp"

using namespace geodex;

namespace {

constexpr double kPi = std::numbers::pi;
const std::vector<double> kScales{0.2, 0.1, 0.05, 0.025};

struct Fields {
  Mat t, n, e;
};

Fields fields(const BackgroundPtr& bg, double eps, bool bump = false) {
  const auto& g = bg->immersion().grid();
  const int N = static_cast<int>(g.size()), d = bg->dim(), k = bg->codim();
  Fields f{Mat(d, N), Mat(k, N), Mat(d, N)};
  for (int p = 0; p < N; ++p) {
    Point s = g.point(static_cast<std::size_t>(p));
    double u = s[0], v = d > 1 ? s[1] : 0.0;
    double b = bump ? std::pow(std::sin(u), 6) : 1.0;
    f.t(0, p) = eps * b * (0.3 * std::cos(u) + 0.2 * std::sin(v) + 0.1);
    f.e(0, p) = eps * b * (0.4 + 0.3 * std::cos(u + v) - 0.2 * std::sin(2 * u));
    if (d > 1) {
      f.t(1, p) = eps * b * (0.2 * std::cos(v) - 0.1 * std::sin(u));
      f.e(1, p) = eps * b * (-0.3 + 0.2 * std::sin(v) * std::cos(u));
    }
    for (int i = 0; i < k; ++i) f.n(i, p) = eps * b * (0.25 * std::cos(u - v) + 0.1 * (i + 1) + 0.15 * std::sin(2 * v + i));
  }
  return f;
}

double slope_of(const std::vector<double>& err) { return fit_slope(kScales, err, 1e-13).slope; }

ManifoldSpec s2xr() {
  return builtin::from_expressions("s2xr", {"t", "p", "z"}, {{"1", "0", "0"}, {"0", "sin(t)^2", "0"}, {"0", "0", "1"}},
                                   {}, 1e-3);
}

// A closed curve in S^2 x R: codimension 2 in a curved ambient, so both
// ambient-curvature projections are live.
Immersion helix(int n) {
  Mat W = Mat::Zero(3, 1);
  W(1, 0) = 1.0;
  return Immersion::from_function(
      "helix", s2xr(), parameter_grid({n}, {2 * kPi}),
      [](const Point& s) { return Vec{{1.2 + 0.3 * std::cos(s[0]), s[0], 0.4 * std::sin(2 * s[0])}}; }, W);
}

// Tube around the equator of S^2 x R (codimension 1, curved ambient).
Immersion tube(int n) {
  Mat W = Mat::Zero(3, 2);
  W(1, 1) = 1.0;
  return Immersion::from_function(
      "tube", s2xr(), parameter_grid({n, n}, {2 * kPi, 2 * kPi}),
      [](const Point& s) {
        return Vec{{kPi / 2 + 0.3 * std::cos(s[0]), s[1] + 0.1 * std::sin(s[0]), 0.3 * std::sin(s[0])}};
      },
      W);
}

// 1 where the frame normal points away from the origin, -1 otherwise.
double outward(const Background& bg) {
  return bg.frame().normals[0].col(0).dot(bg.immersion().position(0)) > 0 ? 1.0 : -1.0;
}

}  // namespace

TEST_CASE("right functional measure") {
  auto flat = make_background(immersions::circle(1.0, 64));
  auto wf = functional_right_measure_log(DeviationField(flat, Mat::Constant(2, 64, 0.3)));
  CHECK(wf.term("ricci") == 0.0);
  CHECK(wf.term("prefactor_metric") == 0.0);  // h = I
  CHECK(wf.log_density == doctest::Approx(wf.term("prefactor_volume")).epsilon(1e-15));

  // world line on the unit sphere with |Xdot|^2 = c: exponent -c L / (6 N)
  const double rho = 0.6, c = 0.09;
  auto bg = make_background(immersions::world_line(rho, 256));
  Mat X(2, 256);
  for (int p = 0; p < 256; ++p) X.col(p) = std::sqrt(c) * bg->frame().normals[static_cast<std::size_t>(p)].col(0);
  auto w = functional_right_measure_log(DeviationField(bg, X));
  CHECK(w.term("ricci") == doctest::Approx(-c * 2 * kPi * std::sin(rho) / 6).epsilon(1e-7));

  auto w2 = functional_right_measure_log(DeviationField(bg, Mat(2 * X)));
  CHECK(w2.term("ricci") == doctest::Approx(4 * w.term("ricci")).epsilon(1e-13));
  double sum = 0.0;
  for (const auto& [n, v] : w.breakdown) sum += v;
  CHECK(sum == doctest::Approx(w.log_density).epsilon(1e-14));
}

TEST_CASE("generator measure: trivial fields") {
  auto bg = make_background(immersions::circle(1.5, 64));
  auto zero = eta_measure_log(GeneratorField{Mat::Zero(1, 64)}, *bg);
  CHECK(zero.term("divergence") == 0.0);
  CHECK(zero.term("quadratic") == 0.0);
  CHECK(zero.term("ricci") == 0.0);

  auto cst = eta_measure_log(GeneratorField{Mat::Constant(1, 64, 0.4)}, *bg);
  CHECK(std::abs(cst.term("divergence")) < 1e-12);
  CHECK(std::abs(cst.term("quadratic")) < 1e-12);
  CHECK(std::abs(cst.term("ricci")) < 1e-12);
}

TEST_CASE("generator measure on the sphere matches an analytic quadrature") {
  // eta^t = sin^2 t (0.3 cos p + 0.1), eta^p = sin t (0.2 sin p) with the
  // unit-sphere Christoffels written out by hand.
  auto bg = make_background(immersions::sphere(1.0, 256, 256));
  const auto& g = bg->immersion().grid();
  const std::size_t N = g.size();
  Mat E(2, static_cast<Eigen::Index>(N));
  std::vector<double> div(N), quad(N), ric(N);
  for (std::size_t p = 0; p < N; ++p) {
    Point s = g.point(p);
    double t = s[0], ph = s[1], st = std::sin(t), ct = std::cos(t);
    double et = st * st * (0.3 * std::cos(ph) + 0.1), ep = st * 0.2 * std::sin(ph);
    E(0, static_cast<Eigen::Index>(p)) = et;
    E(1, static_cast<Eigen::Index>(p)) = ep;
    double dt_et = 2 * st * ct * (0.3 * std::cos(ph) + 0.1), dp_et = -0.3 * st * st * std::sin(ph);
    double dt_ep = ct * 0.2 * std::sin(ph), dp_ep = st * 0.2 * std::cos(ph);
    double n_tt = dt_et, n_pt = dp_et - st * ct * ep;  // nabla_b eta^a as n_ba
    double n_tp = dt_ep + ct / st * ep, n_pp = dp_ep + ct / st * et;
    double w = std::abs(st);
    div[p] = -w * (n_tt + n_pp);
    quad[p] = 0.5 * w * (n_tt * n_tt + n_pp * n_pp + 2 * n_pt * n_tp);
    ric[p] = w * (et * et + st * st * ep * ep) / 3.0;
  }
  auto m = eta_measure_log(GeneratorField{E}, *bg);
  CHECK(std::abs(m.term("divergence") - bg->immersion().integrate(div)) < 1e-8);
  CHECK(std::abs(m.term("divergence")) < 1e-8);  // total derivative on a closed surface
  CHECK(std::abs(m.term("quadratic") - bg->immersion().integrate(quad)) < 1e-8);
  CHECK(std::abs(m.term("ricci") - bg->immersion().integrate(ric)) < 1e-8);
}

TEST_CASE("FP determinant: flat geodesic backgrounds give exactly zero") {
  for (const char* id : {"line", "plane"}) {
    auto bg = make_background(immersions::by_id(id, {}, 16));
    auto f = fields(bg, 0.2);
    auto w = fp_log_determinant(make_xi(bg, f.t, f.n));
    CHECK(w.log_density == 0.0);
  }
}

TEST_CASE("FP determinant on a circle matches the closed form") {
  const double r = 1.4;
  auto bg = make_background(immersions::circle(r, 256));
  const auto& g = bg->immersion().grid();
  const double s = outward(*bg);
  // xi^t = 0.1 cos u (parameter components), xi^n = 0.2 + 0.1 sin u
  Mat T(1, 256), Nn(1, 256);
  std::vector<double> oracle(256);
  for (int p = 0; p < 256; ++p) {
    double u = g.point(static_cast<std::size_t>(p))[0];
    double xt = 0.1 * std::cos(u), xn = 0.2 + 0.1 * std::sin(u), dxn = 0.1 * std::cos(u);
    T(0, p) = xt;
    Nn(0, p) = xn;
    // H_uu = -s r, so xi_0 = xi - xi^u d_u xi + s r xi^u xi^u / 2 and -2 H xi_0 = s xi_0 / r
    double x0 = xn - xt * dxn + 0.5 * s * r * xt * xt;
    oracle[static_cast<std::size_t>(p)] = r * (s * x0 / r - xn * xn / (2 * r * r));
  }
  auto w = fp_log_determinant(make_xi(bg, T, Nn));
  CHECK(w.frame_signs == bg->frame().signs);
  CHECK(w.log_density == doctest::Approx(bg->immersion().integrate(oracle)).epsilon(1e-6));
  CHECK(w.term("curvature") == 0.0);
}

TEST_CASE("FP determinant is invariant to second order") {
  for (auto& imm : {immersions::circle(1.0, 256), immersions::world_line(0.6, 256)}) {
    auto bg = make_background(imm);
    std::vector<double> err;
    for (double eps : kScales) {
      auto f = fields(bg, eps);
      auto xi = make_xi(bg, f.t, f.n);
      auto moved = xi_transform(xi, GeneratorField{f.e});
      err.push_back(std::abs(fp_log_determinant(moved).log_density - fp_log_determinant(xi).log_density));
    }
    CAPTURE(imm.name());
    CHECK(slope_of(err) >= 2.7);
  }
}

TEST_CASE("frame Jacobian") {
  auto plane = immersions::by_id("plane", {}, 8);
  auto fp = frame_jacobian_check(plane, build_frame(plane));
  for (std::size_t p = 0; p < fp.det_a.size(); ++p) {
    CHECK(std::abs(fp.det_a[p]) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(fp.sqrt_g_over_h[p] == doctest::Approx(1.0).epsilon(1e-14));
  }

  auto circ = immersions::circle(2.5, 256);
  auto fc = frame_jacobian_check(circ, build_frame(circ));
  CHECK(std::abs(fc.det_a[7]) == doctest::Approx(2.5).epsilon(1e-7));
  CHECK(fc.orientation != 0);

  auto sph = immersions::sphere(1.0, 32, 64);
  CHECK(frame_jacobian_check(sph, build_frame(sph)).max_residual < 1e-10);
  auto tb = tube(32);
  CHECK(frame_jacobian_check(tb, build_frame(tb)).max_residual < 1e-10);
}

TEST_CASE("gauge-fixed integrand") {
  auto flat = make_background(immersions::by_id("plane", {}, 8));
  auto w = gauge_fixed_log_integrand(make_xi(flat, Mat::Zero(2, 64), Mat::Constant(1, 64, 0.3)));
  CHECK(w.term("mean_curvature") == 0.0);
  CHECK(w.term("shape_quadratic") == 0.0);
  CHECK(w.term("curvature_tangential") == 0.0);
  CHECK(w.term("curvature_normal") == 0.0);
  CHECK(w.log_density == w.term("prefactor"));

  const double r = 0.8;
  auto bg = make_background(immersions::circle(r, 256));
  const double s = outward(*bg);
  Mat xn = Mat::Constant(1, 256, 0.1);
  auto c = gauge_fixed_log_integrand(make_xi(bg, Mat::Zero(1, 256), xn));
  // density s xi / r - xi^2 / (2 r^2), integrated over length 2 pi r
  CHECK(c.term("mean_curvature") == doctest::Approx(2 * kPi * r * s * 0.1 / r).epsilon(1e-7));
  CHECK(c.term("shape_quadratic") == doctest::Approx(-2 * kPi * r * 0.01 / (2 * r * r)).epsilon(1e-7));

  Mat bad = Mat::Zero(1, 256);
  bad(0, 3) = 1e-3;
  CHECK_THROWS_AS(gauge_fixed_log_integrand(make_xi(bg, bad, xn)), PreconditionError);
}

TEST_CASE("pipeline identity on every background") {
  struct Case {
    Immersion imm;
    bool bump;
  };
  std::vector<Case> cases;
  for (const auto& [id, p] : std::vector<std::pair<std::string, std::vector<double>>>{{"circle", {1.3}},
                                                                                       {"circle3", {1.0, 0.5}},
                                                                                       {"ellipse", {1.0, 0.6}},
                                                                                       {"torus", {2.0, 0.7}},
                                                                                       {"world_line", {0.6}},
                                                                                       {"line", {}},
                                                                                       {"plane", {}}})
    cases.push_back({immersions::by_id(id, p, 32), false});
  cases.push_back({immersions::by_id("sphere", {1.0}, 24), true});
  cases.push_back({helix(64), false});
  cases.push_back({tube(32), false});
  for (auto& c : cases) {
    auto bg = make_background(c.imm);
    auto f = fields(bg, 0.3, c.bump);
    auto check = pipeline_identity(make_xi(bg, Mat::Zero(bg->dim(), static_cast<Eigen::Index>(bg->size())), f.n));
    CAPTURE(c.imm.name());
    CHECK(check.max_residual < 1e-8);
    CHECK(check.residuals.size() == 4);
  }

  // on the helix both ambient projections are nonzero
  auto bg = make_background(helix(64));
  auto f = fields(bg, 0.3);
  auto g = gauge_fixed_log_integrand(make_xi(bg, Mat::Zero(1, 64), f.n));
  CHECK(std::abs(g.term("curvature_tangential")) > 1e-3);
  CHECK(std::abs(g.term("curvature_normal")) > 1e-3);
}

TEST_CASE("Nambu-Goto action") {
  CHECK(nambu_goto_action(immersions::circle(1.7, 256)) == doctest::Approx(2 * kPi * 1.7).epsilon(1e-7));
  CHECK(nambu_goto_action(immersions::sphere(1.0, 128, 128)) == doctest::Approx(4 * kPi).epsilon(1e-3));

  // r = 1 + eps cos u against a fine midpoint rule for sqrt(r^2 + r'^2)
  const double eps = 0.1;
  auto imm = Immersion::from_function("wobble", builtin::euclidean(2), parameter_grid({512}, {2 * kPi}),
                                      [&](const Point& s) {
                                        double r = 1 + eps * std::cos(s[0]);
                                        return Vec{{r * std::cos(s[0]), r * std::sin(s[0])}};
                                      });
  double ref = 0.0;
  const int M = 1 << 16;
  for (int j = 0; j < M; ++j) {
    double u = 2 * kPi * (j + 0.5) / M, r = 1 + eps * std::cos(u), dr = -eps * std::sin(u);
    ref += std::sqrt(r * r + dr * dr) * 2 * kPi / M;
  }
  CHECK(std::abs(nambu_goto_action(imm) - ref) < 1e-8);

  auto pinched = Immersion::from_function("pinched", builtin::euclidean(2), parameter_grid({64}, {2 * kPi}),
                                          [](const Point& s) { return Vec{{std::cos(s[0]), 0.0}}; });
  CHECK_THROWS_AS(nambu_goto_action(pinched), SignatureError);
}

TEST_CASE("normal Laplacian on a circle") {
  const double r = 1.3;
  auto bg = make_background(immersions::circle(r, 256));
  const auto& g = bg->immersion().grid();
  Mat xi(1, 256);
  for (int p = 0; p < 256; ++p) xi(0, p) = std::cos(3 * g.point(static_cast<std::size_t>(p))[0]);
  Mat lap = normal_laplacian(*bg, xi);
  CHECK((lap + 9.0 / (r * r) * xi).cwiseAbs().maxCoeff() < 5e-5);
}

TEST_CASE("action expansion") {
  auto bg = make_background(immersions::circle(1.2, 256));
  auto zero = action_expansion(make_xi(bg, Mat::Zero(1, 256), Mat::Zero(1, 256)));
  CHECK(zero.value == doctest::Approx(nambu_goto_action(bg->immersion())).epsilon(1e-14));
  CHECK(zero.value == doctest::Approx(2 * kPi * 1.2).epsilon(1e-7));

  // H = 0: no linear term
  auto plane = make_background(immersions::by_id("plane", {}, 16));
  auto fp = fields(plane, 0.2);
  CHECK(action_expansion(make_xi(plane, fp.t, fp.n)).linear == 0.0);

  // exact action of X0 + xi^a dX + xi^i N
  std::vector<double> err, inv;
  for (double eps : kScales) {
    auto f = fields(bg, eps);
    auto xi = make_xi(bg, f.t, f.n);
    Mat X = recompose(xi).samples;
    Mat S(2, 256);
    for (int p = 0; p < 256; ++p)
      S.col(p) = expand3(bg->immersion().ambient(), bg->immersion().position(static_cast<std::size_t>(p)), X.col(p)).point;
    err.push_back(std::abs(action_expansion(xi).value - nambu_goto_action(bg->immersion().with_samples(S))));
    inv.push_back(std::abs(action_expansion(xi_transform(xi, GeneratorField{f.e})).value - action_expansion(xi).value));
  }
  CHECK(slope_of(err) >= 2.7);
  CHECK(slope_of(inv) >= 2.7);
}

TEST_CASE("weights serialize as term rows") {
  FunctionalWeight w;
  w.add("a", 1.5);
  w.add("b", -0.25);
  CHECK(w.log_density == 1.25);
  CHECK(to_csv(w) == "term,value\na,1.5\nb,-0.25\nlog_density,1.25\n");
  CHECK_THROWS_AS(w.term("c"), PreconditionError);
}
