#include <cmath>
#include <vector>

#include "doctest.h"
#include "geodex/convergence.hpp"
#include "geodex/deviation.hpp"
#include "geodex/error.hpp"
#include "geodex/geodesic.hpp"

using namespace geodex;

namespace {

const std::vector<double> kScales{0.2, 0.1, 0.05, 0.025};

struct Fields {
  Mat t, n, e;
};

// Smooth test fields; `bump` multiplies by sin^6 of the first parameter so they
// vanish at the sphere's coordinate poles.
Fields fields(const BackgroundPtr& bg, double eps, bool bump = false) {
  const auto& g = bg->immersion().grid();
  const int N = static_cast<int>(g.size()), d = bg->dim(), k = bg->codim();
  Fields f{Mat(d, N), Mat(k, N), Mat(d, N)};
  for (int p = 0; p < N; ++p) {
    Point s = g.point(p);
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

Mat interpolate_rows(const Lattice& g, const Mat& m, const Point& x) {
  Mat out(m.rows(), 1);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Vec row = m.row(r).transpose();
    out(r, 0) = g.interpolate(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())), x);
  }
  return out;
}

// Reparametrize first, then shoot: compare exp(X0(s), Xdot'(s)) with
// exp(X0(f(s)), Xdot(f(s))) for f the intrinsic geodesic map of eta.
double reparam_error(const BackgroundPtr& bg, const Fields& f, int order) {
  const auto& imm = bg->immersion();
  const auto& g = imm.grid();
  Mat X = recompose(make_xi(bg, f.t, f.n)).samples;
  GeneratorField eta{f.e};
  auto moved = act_diffeo(DeviationField{bg, X}, eta, order);
  Mat shift = parameter_shift(*bg, eta);
  double err = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p) {
    auto c = static_cast<Eigen::Index>(p);
    Point fs = g.point(p) + shift.col(c);
    Point a = shoot(imm.ambient(), imm.position(p), moved.samples.col(c));
    Point b = shoot(imm.ambient(), imm.evaluate(fs), interpolate_rows(g, X, fs).col(0));
    err = std::max(err, chart_delta(imm.ambient(), a, b).norm());
  }
  return err;
}

double slope_of(const std::vector<double>& err) { return fit_slope(kScales, err, 1e-13).slope; }

}  // namespace

TEST_CASE("act_diffeo: truncation order n leaves an O(eps^(n+1)) residual") {
  // world line on the unit sphere: the ambient curvature term is live
  auto bg = make_background(immersions::world_line(0.6, 256));
  for (int order : {1, 2, 3}) {
    std::vector<double> err;
    for (double eps : kScales) err.push_back(reparam_error(bg, fields(bg, eps), order));
    CAPTURE(order);
    CHECK(slope_of(err) == doctest::Approx(order + 1).epsilon(0.3 / (order + 1)));
  }
}

TEST_CASE("act_diffeo: ellipse exercises the intrinsic Christoffels") {
  auto bg = make_background(immersions::ellipse(1.0, 0.6, 256));
  std::vector<double> err;
  for (double eps : kScales) err.push_back(reparam_error(bg, fields(bg, eps), 3));
  CHECK(slope_of(err) >= 3.7);
}

TEST_CASE("act_diffeo: terms add up and zero eta is the identity") {
  auto bg = make_background(immersions::torus(2.0, 0.7, 16, 16));
  auto f = fields(bg, 0.1);
  DeviationField dev{bg, recompose(make_xi(bg, f.t, f.n)).samples};
  auto out = act_diffeo(dev, GeneratorField{f.e}, 3);
  Mat sum = Mat::Zero(out.samples.rows(), out.samples.cols());
  for (const auto& [name, m] : out.terms.terms) sum += m;
  CHECK((sum - out.samples).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(out.terms.has("curvature"));
  CHECK_THROWS_AS(out.terms.term("nope"), PreconditionError);

  auto same = act_diffeo(dev, GeneratorField{Mat::Zero(2, 256)}, 3);
  CHECK((same.samples - dev.samples).cwiseAbs().maxCoeff() == 0.0);
  // flat ambient
  CHECK(out.terms.term("curvature").cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("act_diffeo: successive actions compose") {
  // On the unit circle f(s) = s + eta(s) exactly, so f1(f2(s)) is generated by
  // eta2(s) + eta1(s + eta2(s)).
  auto bg = make_background(immersions::circle(1.0, 256));
  const auto& g = bg->immersion().grid();
  std::vector<double> err;
  for (double eps : kScales) {
    auto f = fields(bg, eps);
    Mat e2(1, 256), v(1, 256);
    for (int p = 0; p < 256; ++p) {
      double s = g.point(static_cast<std::size_t>(p))[0];
      e2(0, p) = eps * (0.2 * std::sin(s) - 0.1);
    }
    for (int p = 0; p < 256; ++p) {
      Point s = g.point(static_cast<std::size_t>(p));
      v(0, p) = e2(0, p) + interpolate_rows(g, f.e, s + e2.col(p))(0, 0);
    }
    DeviationField dev{bg, recompose(make_xi(bg, f.t, f.n)).samples};
    auto twice = act_diffeo(act_diffeo(dev, GeneratorField{f.e}), GeneratorField{e2});
    auto once = act_diffeo(dev, GeneratorField{v});
    err.push_back((twice.samples - once.samples).cwiseAbs().maxCoeff());
  }
  CHECK(slope_of(err) >= 3.7);
}

TEST_CASE("act_diffeo: trust radius is flagged") {
  auto bg = make_background(immersions::world_line(0.6, 64));
  Mat X = Mat::Zero(2, 64);
  X.row(0).setConstant(0.1);
  auto small = act_diffeo(DeviationField{bg, X}, GeneratorField{Mat::Zero(1, 64)}, 1);
  CHECK_FALSE(small.trust_violation);
  X.row(0).setConstant(50.0);
  auto big = act_diffeo(DeviationField{bg, X}, GeneratorField{Mat::Zero(1, 64)}, 1);
  CHECK(big.trust_violation);
}

TEST_CASE("act_diffeo rejects bad input") {
  auto bg = make_background(immersions::circle(1.0, 32));
  DeviationField dev{bg, Mat::Zero(2, 32)};
  CHECK_THROWS_AS(act_diffeo(dev, GeneratorField{Mat::Zero(1, 31)}), PreconditionError);
  CHECK_THROWS_AS(act_diffeo(dev, GeneratorField{Mat::Zero(1, 32)}, 4), PreconditionError);
  CHECK_THROWS_AS(act_diffeo(DeviationField{nullptr, Mat::Zero(2, 32)}, GeneratorField{Mat::Zero(1, 32)}),
                  PreconditionError);
}

TEST_CASE("decompose and recompose are inverse") {
  auto bg = make_background(immersions::sphere(1.0, 16, 16));
  auto f = fields(bg, 0.3, true);
  auto xi = make_xi(bg, f.t, f.n);
  auto back = decompose(recompose(xi));
  CHECK((back.tangential - xi.tangential).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((back.tangential_lower - xi.tangential_lower).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((back.normal - xi.normal).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("xi_transform agrees with projecting act_diffeo") {
  // The tangential formulas agree through third order up to the grid error; the
  // normal formula stops at second order.
  auto bg = make_background(immersions::torus(2.0, 0.7, 48, 48));
  std::vector<double> normal;
  for (double eps : kScales) {
    auto f = fields(bg, eps);
    auto xi = make_xi(bg, f.t, f.n);
    GeneratorField eta{f.e};
    auto projected = decompose(act_diffeo(recompose(xi), eta, 3));
    auto direct = xi_transform(xi, eta, 3, 2);
    CHECK((projected.tangential - direct.tangential).cwiseAbs().maxCoeff() < 1e-5 * eps / 0.2);
    normal.push_back((projected.normal - direct.normal).cwiseAbs().maxCoeff());
  }
  CHECK(slope_of(normal) == doctest::Approx(3.0).epsilon(0.1));
}

TEST_CASE("xi_0 is invariant to second order") {
  struct Case {
    Immersion imm;
    bool bump;
  };
  for (auto& c : {Case{immersions::circle(1.0, 256), false}, Case{immersions::sphere(1.0, 48, 48), true}}) {
    auto bg = make_background(c.imm);
    std::vector<double> err;
    for (double eps : kScales) {
      auto f = fields(bg, eps, c.bump);
      auto xi = make_xi(bg, f.t, f.n);
      auto moved = xi_transform(xi, GeneratorField{f.e});
      err.push_back((xi_invariant(moved) - xi_invariant(xi)).cwiseAbs().maxCoeff());
    }
    CAPTURE(c.imm.name());
    CHECK(slope_of(err) >= 2.7);
  }
}

TEST_CASE("gauge generator removes the tangential part") {
  auto bg = make_background(immersions::torus(2.0, 0.7, 48, 48));
  std::vector<double> full, first;
  for (double eps : kScales) {
    auto f = fields(bg, eps);
    auto xi = make_xi(bg, f.t, f.n);
    full.push_back(tangential_norm(xi_transform(xi, gauge_generator(xi))));
    first.push_back(tangential_norm(xi_transform(xi, gauge_generator(xi, false))));
  }
  CHECK(slope_of(full) >= 2.7);
  CHECK(slope_of(first) == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("Fourier fields") {
  auto grid = parameter_grid({32, 16}, {6.283185307179586, 3.0});
  FourierField f{2, {FourierMode{{1, 0}, Vec{{1.0, 0.0}}, Vec{{0.0, 2.0}}}}};
  Mat s = f.sample(grid);
  for (std::size_t p = 0; p < grid.size(); p += 37) {
    double u = grid.point(p)[0];
    CHECK(s(0, static_cast<Eigen::Index>(p)) == doctest::Approx(std::cos(u)).epsilon(1e-12));
    CHECK(s(1, static_cast<Eigen::Index>(p)) == doctest::Approx(2 * std::sin(u)).epsilon(1e-12));
  }
  auto a = FourierField::random(3, 2, 2, 0.1, 42), b = FourierField::random(3, 2, 2, 0.1, 42);
  auto c = FourierField::random(3, 2, 2, 0.1, 43);
  CHECK(a.modes.size() == 13);  // (25 + 1) / 2
  CHECK((a.sample(grid) - b.sample(grid)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.sample(grid) - c.sample(grid)).cwiseAbs().maxCoeff() > 0.0);
  FourierField bad{2, {FourierMode{{1}, Vec{{1.0, 0.0}}, Vec{{0.0, 0.0}}}}};
  CHECK_THROWS_AS(bad.sample(grid), PreconditionError);
}
