#include "geodex/suites.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>

#include "geodex/error.hpp"
#include "geodex/gauge.hpp"
#include "geodex/geodesic.hpp"
#include "geodex/haar.hpp"
#include "geodex/immersion.hpp"

namespace geodex {

namespace {

using ojson = nlohmann::ordered_json;
constexpr double kPi = std::numbers::pi;

constexpr double kGeodesicFloor = 1e-11;
constexpr double kDeviationFloor = 1e-13;
constexpr double kStructureFloor = 1e-10;
// associativity differentiates a field that is itself built from finite
// differences; flat-space round-off reaches 5e-10 at eps = 0.2
constexpr double kNestedFloor = 1e-9;

double floor_for(const RunConfig& cfg, double fallback) { return cfg.noise_floor.value_or(fallback); }

ojson slope_json(const SlopeFit& f) { return f.exact ? ojson("exact") : ojson(f.slope); }

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(3) << v;
  return os.str();
}

std::string slope_text(const SlopeFit& f) { return f.exact ? "exact" : fmt(f.slope); }

// drops the separator left after the last item of a list
std::string joined(const std::ostringstream& sum) {
  std::string s = sum.str();
  if (s.size() >= 2 && s.compare(s.size() - 2, 2, "; ") == 0) s.resize(s.size() - 2);
  return s;
}

bool within(const SlopeFit& f, double target, double band) { return f.exact || std::abs(f.slope - target) <= band; }
bool at_least(const SlopeFit& f, double min) { return f.exact || f.slope >= min; }

// ---------------------------------------------------------------------------
// geodesic checks

// Test fields for the group law, both scaled by eps.  Linear then quadratic in
// the chart, so in flat space every composition is exact.
Vec second_field(const Point& x) { return Vec{{0.3 + 0.5 * x[1], -0.4 + 0.2 * x[0]}}; }
Vec third_field(const Point& x) { return Vec{{-0.2 + 0.1 * x[1] * x[1], 0.3 * x[0] * x[1]}}; }

VectorField scaled(double eps, Vec (*f)(const Point&), int dim) {
  return VectorField{[=](const Point& x) {
    if (dim == 2) return Vec(eps * f(x));
    Vec out = Vec::Zero(dim);  // other dimensions: a linear field in the first two slots
    out[0] = eps * (0.3 + 0.2 * x[dim - 1]);
    out[dim - 1] = eps * (-0.4 + 0.1 * x[0]);
    return out;
  }};
}

struct GeodesicCtx {
  ManifoldSpec m;
  Point x0;
  Vec dir;
};

double expand_error(const GeodesicCtx& c, double eps, int order) {
  Vec v = eps * c.dir;
  return chart_delta(c.m, shoot(c.m, c.x0, v, 1.0, 1e-13), expand3(c.m, c.x0, v, order).point).norm();
}

double compose_error(const GeodesicCtx& c, double eps) {
  Vec v1 = eps * c.dir;
  auto w2 = scaled(eps, second_field, c.m.dim);
  Point x1 = shoot(c.m, c.x0, v1, 1.0, 1e-13);
  Point x2 = shoot(c.m, x1, w2.eval(x1), 1.0, 1e-13);
  return chart_delta(c.m, x2, expand3(c.m, c.x0, compose3(c.m, c.x0, v1, w2)).point).norm();
}

double associativity_error(const GeodesicCtx& c, double eps) {
  Vec v1 = eps * c.dir;
  auto w2 = scaled(eps, second_field, c.m.dim);
  auto w3 = scaled(eps, third_field, c.m.dim);
  Vec a = compose3(c.m, c.x0, compose3(c.m, c.x0, v1, w2), w3);
  VectorField w23{[&](const Point& x) { return compose3(c.m, x, w2.eval(x), w3); }};
  return (a - compose3(c.m, c.x0, v1, w23)).norm();
}

double inverse_error(const GeodesicCtx& c, double eps) {
  Vec v = eps * c.dir;
  Point x1 = expand3(c.m, c.x0, v).point;
  return chart_delta(c.m, c.x0, expand3(c.m, x1, invert3(c.m, c.x0, v)).point).norm();
}

GeodesicCtx geodesic_ctx(const ManifoldCase& mc) { return GeodesicCtx{mc.build(), mc.base, mc.direction}; }

// ---------------------------------------------------------------------------
// lattice checks

// Sphere (or flat plane) in normal coordinates, lattice along Y^1 through the
// origin.  v1 is constant along that geodesic; v2 carries a bump so it is
// smooth across the seam.
struct HaarSetup {
  FieldGrid grid;
  Mat v1, v2;  // unit amplitude
};

HaarSetup haar_setup(bool curved) {
  constexpr int n = 16;
  constexpr double period = 1.5;
  ManifoldSpec m = curved ? builtin::sphere_normal(1.0, 3.0) : builtin::euclidean(2);
  Lattice lat({n}, {-period / 2}, {period}, DiffScheme::spectral, true);
  FieldGrid g(m, lat, {0}, Point::Zero(2));
  Mat v1(2, n), v2(2, n);
  for (int k = 0; k < n; ++k) {
    double y = g.point(static_cast<std::size_t>(k))[0];
    double bump = std::pow(std::sin(kPi * (y + period / 2) / period), 12);
    v1.col(k) = Vec{{0.05, 0.0}};
    v2.col(k) = Vec{{0.8 * bump, -0.5 * bump * std::cos(2 * kPi * y / period)}};
  }
  return HaarSetup{std::move(g), v1, v2};
}

// A latitude (sphere) or the unit circle (flat polar chart), lattice along phi.
FieldGrid ring_grid(bool curved) {
  constexpr int n = 16;
  Lattice lat({n}, {0.0}, {2 * kPi}, DiffScheme::spectral, true);
  return FieldGrid(curved ? builtin::sphere(1.0) : builtin::polar_plane(), lat, {1}, Point{{1.0, 0.0}});
}

Mat ring_field(const FieldGrid& g, double eps) {
  const int n = static_cast<int>(g.size());
  Mat v(2, n);
  for (int k = 0; k < n; ++k) {
    double ph = g.point(static_cast<std::size_t>(k))[1];
    v(0, k) = eps * (0.3 + 0.2 * std::cos(ph));
    v(1, k) = eps * (0.1 * std::sin(2 * ph) - 0.2);
  }
  return v;
}

// ---------------------------------------------------------------------------
// deviation checks

using DeviationCtx = SampledFields;

// Coordinate Christoffels of the doubled-theta sphere blow up at the poles;
// fields there get a sin^6(theta) factor.
DeviationCtx deviation_ctx(const RunConfig& cfg, ImmersionCase ic) {
  if (cfg.grid) ic.n = *cfg.grid;
  auto bg = make_background(ic.build());
  const auto& g = bg->immersion().grid();
  DeviationCtx c{bg, cfg.field("tangential").sample(g, bg->dim()), cfg.field("normal").sample(g, bg->codim()),
                 cfg.field("generator").sample(g, bg->dim()), ""};
  if (bg->immersion().name() == "sphere") {
    for (std::size_t p = 0; p < g.size(); ++p) {
      double taper = std::pow(std::sin(g.point(p)[0]), 6);
      auto col = static_cast<Eigen::Index>(p);
      c.t.col(col) *= taper;
      c.n.col(col) *= taper;
      c.e.col(col) *= taper;
    }
  }
  std::ostringstream os;
  os << ic.id << "(";
  for (std::size_t i = 0; i < ic.params.size(); ++i) os << (i ? "," : "") << ic.params[i];
  os << ") n=" << ic.n;
  c.label = os.str();
  return c;
}

XiDecomposition xi_at(const DeviationCtx& c, double eps) { return make_xi(c.bg, eps * c.t, eps * c.n); }

Mat interpolate_rows(const Lattice& g, const Mat& m, const Point& x) {
  Mat out(m.rows(), 1);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Vec row = m.row(r).transpose();
    out(r, 0) = g.interpolate(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())), x);
  }
  return out;
}

// Oracle for act_diffeo: exp(X0(s), Xdot'(s)) against exp(X0(f(s)), Xdot(f(s))),
// with f the intrinsic geodesic map of eta and the background and field
// interpolated at f(s).
double act_diffeo_error(const DeviationCtx& c, double eps) {
  const auto& imm = c.bg->immersion();
  const auto& g = imm.grid();
  Mat X = recompose(xi_at(c, eps)).samples;
  GeneratorField eta{eps * c.e};
  auto moved = act_diffeo(DeviationField{c.bg, X}, eta, 3);
  Mat shift = parameter_shift(*c.bg, eta);
  double err = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p) {
    auto col = static_cast<Eigen::Index>(p);
    Point fs = g.point(p) + shift.col(col);
    Point a = shoot(imm.ambient(), imm.position(p), moved.samples.col(col));
    Point b = shoot(imm.ambient(), imm.evaluate(fs), interpolate_rows(g, X, fs).col(0));
    err = std::max(err, chart_delta(imm.ambient(), a, b).norm());
  }
  return err;
}

double xi0_error(const DeviationCtx& c, double eps) {
  auto xi = xi_at(c, eps);
  auto moved = xi_transform(xi, GeneratorField{eps * c.e});
  return (xi_invariant(moved) - xi_invariant(xi)).cwiseAbs().maxCoeff();
}

double gauge_error(const DeviationCtx& c, double eps, bool second_order) {
  auto xi = xi_at(c, eps);
  return tangential_norm(xi_transform(xi, gauge_generator(xi, second_order)));
}

double fp_error(const DeviationCtx& c, double eps) {
  auto xi = xi_at(c, eps);
  auto moved = xi_transform(xi, GeneratorField{eps * c.e});
  return std::abs(fp_log_determinant(moved).log_density - fp_log_determinant(xi).log_density);
}

// Exact area of the expanded immersion against the second-order expansion.
double action_error(const DeviationCtx& c, double eps) {
  auto xi = xi_at(c, eps);
  const auto& imm = c.bg->immersion();
  Mat X = recompose(xi).samples;
  Mat S(imm.ambient_dim(), static_cast<Eigen::Index>(imm.size()));
  for (std::size_t p = 0; p < imm.size(); ++p) {
    auto col = static_cast<Eigen::Index>(p);
    S.col(col) = expand3(imm.ambient(), imm.position(p), X.col(col)).point;
  }
  return std::abs(action_expansion(xi).value - nambu_goto_action(imm.with_samples(S)));
}

double action_invariance_error(const DeviationCtx& c, double eps) {
  auto xi = xi_at(c, eps);
  return std::abs(action_expansion(xi_transform(xi, GeneratorField{eps * c.e})).value - action_expansion(xi).value);
}

// ---------------------------------------------------------------------------
// registry of scaling checks

enum class Target { manifold, immersion, lattice };

struct Scaling {
  std::string name;
  Target target;
  double floor;
  ImmersionCase background;  // Target::immersion default
  std::function<double(const GeodesicCtx&, double)> geodesic;
  std::function<double(const DeviationCtx&, double)> deviation;
  std::function<double(double)> lattice;
};

const std::vector<Scaling>& registry() {
  static const std::vector<Scaling> r = [] {
    std::vector<Scaling> v;
    auto geo = [&](std::string name, std::function<double(const GeodesicCtx&, double)> f) {
      v.push_back(Scaling{std::move(name), Target::manifold, kGeodesicFloor, {}, std::move(f), {}, {}});
    };
    auto dev = [&](std::string name, ImmersionCase bg, std::function<double(const DeviationCtx&, double)> f) {
      v.push_back(Scaling{std::move(name), Target::immersion, kDeviationFloor, std::move(bg), {}, std::move(f), {}});
    };
    auto lat = [&](std::string name, std::function<double(double)> f) {
      v.push_back(Scaling{std::move(name), Target::lattice, kDeviationFloor, {}, {}, {}, std::move(f)});
    };
    for (int order : {1, 2, 3})
      geo("expand" + std::to_string(order), [order](const GeodesicCtx& c, double e) { return expand_error(c, e, order); });
    geo("compose3", compose_error);
    geo("associativity", associativity_error);
    v.back().floor = kNestedFloor;
    geo("inverse", inverse_error);
    for (Side side : {Side::right, Side::left})
      lat(side == Side::right ? "haar_right" : "haar_left", [side](double e) {
        auto s = haar_setup(true);
        return std::abs(product_jacobian_check(s.grid, e * s.v1, e * s.v2, side).residual);
      });
    lat("diffeo_measure", [](double e) {
      auto g = ring_grid(true);
      return std::abs(diffeo_measure_check(g, ring_field(g, e)).residual);
    });
    const ImmersionCase circle{"circle", {1.0}, 256};
    dev("act_diffeo", circle, act_diffeo_error);
    dev("xi0_invariance", circle, xi0_error);
    dev("gauge_generator", {"torus", {2.0, 0.7}, 48}, [](const DeviationCtx& c, double e) { return gauge_error(c, e, true); });
    dev("gauge_generator_first_order", {"torus", {2.0, 0.7}, 48},
        [](const DeviationCtx& c, double e) { return gauge_error(c, e, false); });
    dev("fp_invariance", circle, fp_error);
    dev("action_expansion", circle, action_error);
    dev("action_invariance", circle, action_invariance_error);
    return v;
  }();
  return r;
}

const Scaling& scaling(const std::string& name) {
  for (const auto& s : registry())
    if (s.name == name) return s;
  throw PreconditionError("no scaling check named '" + name + "'");
}

std::vector<double> errors_over(const std::vector<double>& scales, const std::function<double(double)>& f) {
  std::vector<double> out;
  for (double e : scales) out.push_back(f(e));
  return out;
}

struct Fitted {
  std::vector<double> errors;
  SlopeFit fit;
};

Fitted fitted(const RunConfig& cfg, double floor, const std::function<double(double)>& f) {
  Fitted r{errors_over(cfg.scales, f), {}};
  r.fit = fit_slope(cfg.scales, r.errors, floor_for(cfg, floor));
  return r;
}

ojson fitted_json(const Fitted& f) {
  ojson j;
  j["errors"] = f.errors;
  j["slope"] = slope_json(f.fit);
  return j;
}

Fitted fit_deviation(const RunConfig& cfg, const std::string& name, const DeviationCtx& c) {
  const auto& s = scaling(name);
  return fitted(cfg, s.floor, [&](double e) { return s.deviation(c, e); });
}

// ---------------------------------------------------------------------------
// the acceptance checks

using CheckFn = std::function<void(const RunConfig&, CheckResult&)>;

void c1_geodesic_order(const RunConfig& cfg, CheckResult& r) {
  const double band = cfg.tolerance("geodesic.slope_band", 0.3);
  r.criterion = "slope of order-n truncation = n + 1 +- " + fmt(band) + " (exact counts as pass)";
  bool ok = true;
  std::ostringstream sum;
  for (const auto& mc : cfg.manifolds) {
    auto ctx = geodesic_ctx(mc);
    ojson m;
    sum << mc.label() << ":";
    for (int order : {1, 2, 3}) {
      auto f = fitted(cfg, kGeodesicFloor, [&](double e) { return expand_error(ctx, e, order); });
      m["order" + std::to_string(order)] = fitted_json(f);
      ok = ok && within(f.fit, order + 1, band);
      sum << " " << slope_text(f.fit);
    }
    sum << "; ";
    r.details[mc.label()] = m;
  }
  r.details["summary"] = joined(sum);
  r.passed = ok;
}

void c2_group_law(const RunConfig& cfg, CheckResult& r) {
  const double min = cfg.tolerance("group.slope_min", 3.7);
  r.criterion = "compose/associativity/inverse slopes >= " + fmt(min) + "; identity exact";
  bool ok = true;
  std::ostringstream sum;
  for (const auto& mc : cfg.manifolds) {
    auto ctx = geodesic_ctx(mc);
    ojson m;
    sum << mc.label() << ":";
    for (const char* name : {"compose3", "associativity", "inverse"}) {
      const auto& s = scaling(name);
      auto f = fitted(cfg, s.floor, [&](double e) { return s.geodesic(ctx, e); });
      m[name] = fitted_json(f);
      ok = ok && at_least(f.fit, min);
      sum << " " << slope_text(f.fit);
    }
    // identity: the zero generator on either side
    Vec v1 = 0.1 * ctx.dir;
    auto w2 = scaled(0.1, second_field, ctx.m.dim);
    VectorField zero = VectorField::constant(Vec::Zero(ctx.m.dim));
    double id_err = (expand3(ctx.m, ctx.x0, Vec::Zero(ctx.m.dim)).point - ctx.x0).norm() +
                    (compose3(ctx.m, ctx.x0, v1, zero) - v1).norm() +
                    (compose3(ctx.m, ctx.x0, Vec::Zero(ctx.m.dim), w2) - w2.eval(ctx.x0)).norm();
    m["identity_defect"] = id_err;
    ok = ok && id_err == 0.0;
    sum << " id=" << fmt(id_err) << "; ";
    r.details[mc.label()] = m;
  }
  r.details["summary"] = joined(sum);
  r.passed = ok;
}

void c3_normal_metric(const RunConfig& cfg, CheckResult& r) {
  const double tol = cfg.tolerance("normal_metric.max_deviation", 1e-3);
  r.criterion = "max |fitted - (-1/3 R_acbd)| <= " + fmt(tol) + " on the unit sphere at radius 0.1";
  auto f = normal_metric_expansion_check(builtin::sphere(1.0), Point{{1.0, 0.3}}, 0.1);
  r.details["max_deviation"] = f.max_deviation;
  r.details["symmetry_defect"] = f.max_symmetry_defect;
  r.details["condition"] = f.condition;
  r.details["samples"] = f.samples;
  r.details["summary"] = "deviation " + fmt(f.max_deviation);
  r.passed = f.max_deviation <= tol;
}

void c4_haar(const RunConfig& cfg, CheckResult& r) {
  const double min = cfg.tolerance("haar.slope_min", 2.7);
  const double flat_tol = cfg.tolerance("haar.euclidean", 1e-12);
  r.criterion = "right/left residual slopes >= " + fmt(min) + " on the sphere; Euclidean |residual| <= " + fmt(flat_tol);
  bool ok = true;
  std::ostringstream sum;
  for (const char* name : {"haar_right", "haar_left"}) {
    const auto& s = scaling(name);
    auto f = fitted(cfg, s.floor, s.lattice);
    r.details[name] = fitted_json(f);
    ok = ok && at_least(f.fit, min);
    sum << name << " " << slope_text(f.fit) << "; ";
  }
  auto flat = haar_setup(false);
  double worst = 0.0;
  ojson e = ojson::array();
  for (Side side : {Side::right, Side::left})
    for (double eps : cfg.scales) {
      auto j = product_jacobian_check(flat.grid, eps * flat.v1, eps * flat.v2, side);
      worst = std::max(worst, std::abs(j.residual));
      e.push_back({{"side", side == Side::right ? "right" : "left"},
                   {"scale", eps},
                   {"numeric_logdet", j.numeric_logdet},
                   {"formula_logdet", j.formula_logdet},
                   {"residual", j.residual}});
    }
  r.details["euclidean"] = e;
  r.details["euclidean_max_residual"] = worst;
  ok = ok && worst <= flat_tol;
  sum << "euclidean max |residual| " << fmt(worst);
  r.details["summary"] = joined(sum);
  r.passed = ok;
}

void c5_diffeo_measure(const RunConfig& cfg, CheckResult& r) {
  const double tau = cfg.tolerance("diffeo_measure.lattice", 1e-9);
  const double min = cfg.tolerance("diffeo_measure.slope_min", 2.7);
  r.criterion = "flat polar cancellation <= 10 x " + fmt(tau) + "; sphere residual slope >= " + fmt(min);
  auto polar = ring_grid(false);
  auto a = diffeo_measure_check(polar, ring_field(polar, 1e-3));
  r.details["polar_cancellation"] = a.noncovariant_cancellation;
  r.details["polar_amplitude"] = 1e-3;
  const auto& s = scaling("diffeo_measure");
  auto f = fitted(cfg, s.floor, s.lattice);
  r.details["sphere"] = fitted_json(f);
  r.details["summary"] = "cancellation " + fmt(a.noncovariant_cancellation) + "; sphere slope " + slope_text(f.fit);
  r.passed = std::abs(a.noncovariant_cancellation) <= 10 * tau && at_least(f.fit, min);
}

void c6_structure(const RunConfig& cfg, CheckResult& r) {
  const double tol = cfg.tolerance("structure.residual", 1e-6);
  const double band = cfg.tolerance("structure.slope_band", 0.5);
  r.criterion = "unit sphere 128^2: residuals and Gauss identity < " + fmt(tol) + "; refinement slope 4 +- " + fmt(band);
  const std::vector<int> ns{16, 32, 64, 128};
  std::vector<double> h, gauss, codazzi, ricci;
  double identity = 0.0;
  for (int n : ns) {
    auto imm = immersions::sphere(1.0, n, n);
    auto fr = build_frame(imm);
    auto ext = extrinsic_geometry(imm, fr);
    auto res = structure_residuals(imm, fr, ext);
    h.push_back(1.0 / n);
    gauss.push_back(res.gauss);
    codazzi.push_back(res.codazzi);
    ricci.push_back(res.ricci);
    if (n == ns.back()) {
      for (std::size_t k = 0; k < imm.size(); ++k) {
        const Mat& H = ext.H[k][0];
        identity = std::max(identity, std::abs(fr.induced.riemann[k](0, 1, 0, 1) - (H(0, 0) * H(1, 1) - H(0, 1) * H(0, 1))));
      }
    }
  }
  const double floor = floor_for(cfg, kStructureFloor);
  auto gf = fit_slope(h, gauss, floor), cf = fit_slope(h, codazzi, floor), rf = fit_slope(h, ricci, floor);
  r.details["n"] = ns;
  r.details["gauss"] = {{"residuals", gauss}, {"slope", slope_json(gf)}};
  r.details["codazzi"] = {{"residuals", codazzi}, {"slope", slope_json(cf)}};
  r.details["ricci"] = {{"residuals", ricci}, {"slope", slope_json(rf)}};
  r.details["gauss_identity"] = identity;
  r.details["summary"] = "gauss " + fmt(gauss.back()) + " slope " + slope_text(gf) + "; codazzi " + slope_text(cf) +
                         "; ricci " + slope_text(rf) + "; R1212 identity " + fmt(identity);
  r.passed = gauss.back() < tol && codazzi.back() < tol && ricci.back() < tol && identity < tol &&
             within(gf, 4.0, band) && within(cf, 4.0, band) && within(rf, 4.0, band);
}

void c7_act_diffeo(const RunConfig& cfg, CheckResult& r) {
  const double min = cfg.tolerance("act_diffeo.slope_min", 3.7);
  r.criterion = "act_diffeo vs reparametrize-then-expand slope >= " + fmt(min) + " on the circle";
  auto c = deviation_ctx(cfg, scaling("act_diffeo").background);
  auto f = fit_deviation(cfg, "act_diffeo", c);
  r.details[c.label] = fitted_json(f);
  r.details["summary"] = c.label + " slope " + slope_text(f.fit);
  r.passed = at_least(f.fit, min);
}

void c8_xi0(const RunConfig& cfg, CheckResult& r) {
  const double min = cfg.tolerance("xi0.slope_min", 2.7);
  r.criterion = "|xi0' - xi0| slope >= " + fmt(min) + " on circle and sphere";
  bool ok = true;
  std::ostringstream sum;
  for (const auto& ic : {ImmersionCase{"circle", {1.0}, 256}, ImmersionCase{"sphere", {1.0}, 48}}) {
    auto c = deviation_ctx(cfg, ic);
    auto f = fit_deviation(cfg, "xi0_invariance", c);
    r.details[c.label] = fitted_json(f);
    ok = ok && at_least(f.fit, min);
    sum << c.label << " " << slope_text(f.fit) << "; ";
  }
  r.details["summary"] = joined(sum);
  r.passed = ok;
}

void c9_gauge_generator(const RunConfig& cfg, CheckResult& r) {
  const double min = cfg.tolerance("gauge_generator.slope_min", 2.7);
  const double band = cfg.tolerance("gauge_generator.first_order_band", 0.3);
  r.criterion = "residual tangential slope >= " + fmt(min) + "; first-order generator 2 +- " + fmt(band);
  auto c = deviation_ctx(cfg, scaling("gauge_generator").background);
  auto full = fit_deviation(cfg, "gauge_generator", c);
  auto first = fit_deviation(cfg, "gauge_generator_first_order", c);
  r.details["background"] = c.label;
  r.details["second_order"] = fitted_json(full);
  r.details["first_order"] = fitted_json(first);
  r.details["summary"] = c.label + " full " + slope_text(full.fit) + ", first order " + slope_text(first.fit);
  r.passed = at_least(full.fit, min) && !first.fit.exact && std::abs(first.fit.slope - 2.0) <= band;
}

void c10_fp(const RunConfig& cfg, CheckResult& r) {
  const double min = cfg.tolerance("fp.slope_min", 2.7);
  r.criterion = "log FP change slope >= " + fmt(min) + " on circle and world line; exactly 0 on line and plane";
  bool ok = true;
  std::ostringstream sum;
  for (const auto& ic : {ImmersionCase{"circle", {1.0}, 256}, ImmersionCase{"world_line", {0.6}, 256}}) {
    auto c = deviation_ctx(cfg, ic);
    auto f = fit_deviation(cfg, "fp_invariance", c);
    r.details[c.label] = fitted_json(f);
    ok = ok && at_least(f.fit, min);
    sum << c.label << " " << slope_text(f.fit) << "; ";
  }
  for (const auto& ic : {ImmersionCase{"line", {}, 64}, ImmersionCase{"plane", {}, 16}}) {
    auto c = deviation_ctx(cfg, ic);
    double worst = 0.0;
    for (double eps : cfg.scales) worst = std::max(worst, std::abs(fp_log_determinant(xi_at(c, eps)).log_density));
    r.details[c.label] = {{"max_abs_log_fp", worst}};
    ok = ok && worst == 0.0;
    sum << ic.id << " " << fmt(worst) << "; ";
  }
  r.details["summary"] = joined(sum);
  r.passed = ok;
}

void c11_pipeline(const RunConfig& cfg, CheckResult& r) {
  const double tol = cfg.tolerance("pipeline.residual", 1e-8);
  r.criterion = "gauge-fixed integrand = recombined measure + FP + frame Jacobian, every term within " + fmt(tol);
  double worst = 0.0;
  // the configured background list, not the per-check default resolutions
  RunConfig own = cfg;
  own.grid.reset();
  for (auto ic : cfg.immersions) {
    if (cfg.grid) ic.n = *cfg.grid;
    auto c = deviation_ctx(own, ic);
    const double eps = 0.1;
    auto pc = pipeline_identity(make_xi(c.bg, Mat::Zero(c.bg->dim(), c.t.cols()), eps * c.n));
    ojson terms;
    for (const auto& [name, v] : pc.residuals) terms[name] = v;
    r.details[c.label] = {{"max_residual", pc.max_residual}, {"log_density", pc.gauge.log_density}, {"residuals", terms}};
    worst = std::max(worst, pc.max_residual);
  }
  r.details["max_residual"] = worst;
  r.details["summary"] = std::to_string(cfg.immersions.size()) + " backgrounds, max residual " + fmt(worst);
  r.passed = !cfg.immersions.empty() && worst <= tol;
}

void c12_action(const RunConfig& cfg, CheckResult& r) {
  const double min = cfg.tolerance("action.slope_min", 2.7);
  const double vtol = cfg.tolerance("action.volume", 1e-6);
  const double ftol = cfg.tolerance("action.frame_jacobian", 1e-10);
  r.criterion = "expansion vs exact area slope >= " + fmt(min) + "; xi=0 gives 2 pi r and 4 pi within " + fmt(vtol) +
                "; |det A| = sqrt(g/h) within " + fmt(ftol);
  auto c = deviation_ctx(cfg, scaling("action_expansion").background);
  auto f = fit_deviation(cfg, "action_expansion", c);
  r.details[c.label] = fitted_json(f);

  const auto d = c.bg->dim();
  const auto cols = c.t.cols();
  double circle = action_expansion(make_xi(c.bg, Mat::Zero(d, cols), Mat::Zero(c.bg->codim(), cols))).value;
  double circle_err = std::abs(circle - 2 * kPi);

  // 4 pi needs a fine theta grid (|sin theta| has a kink on the doubled grid);
  // the area alone needs only tangents, so it is evaluated without a full background.
  double sphere_area = nambu_goto_action(immersions::sphere(1.0, 4096, 256));
  double sphere_err = std::abs(sphere_area - 4 * kPi);
  auto small = make_background(immersions::sphere(1.0, 64, 64));
  const auto n_small = static_cast<Eigen::Index>(small->size());
  double expansion_zero = action_expansion(make_xi(small, Mat::Zero(2, n_small), Mat::Zero(1, n_small))).value;
  double consistency = std::abs(expansion_zero - nambu_goto_action(small->immersion()));

  double frame = 0.0;
  for (const auto& imm : {c.bg->immersion(), small->immersion()})
    frame = std::max(frame, frame_jacobian_check(imm, build_frame(imm)).max_residual);

  r.details["circle_area_error"] = circle_err;
  r.details["sphere_area_error"] = sphere_err;
  r.details["sphere_area_grid"] = "4096 x 256 per sheet";
  r.details["expansion_zero_vs_area"] = consistency;
  r.details["frame_jacobian_residual"] = frame;
  r.details["summary"] = "slope " + slope_text(f.fit) + "; 2 pi r err " + fmt(circle_err) + "; 4 pi err " +
                         fmt(sphere_err) + "; det A " + fmt(frame);
  r.passed = at_least(f.fit, min) && circle_err <= vtol && sphere_err <= vtol && consistency <= 1e-12 * 4 * kPi &&
             frame <= ftol;
}

struct CheckDef {
  const char* id;
  const char* name;
  const char* suite;
  CheckFn fn;
};

const std::vector<CheckDef>& checks() {
  static const std::vector<CheckDef> c{
      {"C1", "geodesic_expansion_order", "geodesic", c1_geodesic_order},
      {"C2", "group_law", "geodesic", c2_group_law},
      {"C3", "normal_metric_expansion", "haar", c3_normal_metric},
      {"C4", "haar_jacobian_identities", "haar", c4_haar},
      {"C5", "diffeo_measure_identity", "haar", c5_diffeo_measure},
      {"C6", "structure_equations", "immersion", c6_structure},
      {"C7", "diffeo_action_consistency", "diffeo", c7_act_diffeo},
      {"C8", "xi0_invariance", "diffeo", c8_xi0},
      {"C9", "gauge_generator", "diffeo", c9_gauge_generator},
      {"C10", "fp_determinant_invariance", "gauge", c10_fp},
      {"C11", "pipeline_identity", "gauge", c11_pipeline},
      {"C12", "action_expansion", "action", c12_action},
  };
  return c;
}

}  // namespace

SampledFields sample_fields(const RunConfig& cfg, ImmersionCase ic) { return deviation_ctx(cfg, std::move(ic)); }

bool SuiteReport::passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

std::string SuiteReport::to_json() const {
  ojson j;
  j["suite"] = suite;
  j["passed"] = passed();
  j["environment"] = environment;
  j["checks"] = ojson::array();
  for (const auto& c : checks) {
    ojson cj;
    cj["id"] = c.id;
    cj["name"] = c.name;
    cj["passed"] = c.passed;
    cj["criterion"] = c.criterion;
    if (!c.error.empty()) cj["error"] = c.error;
    cj["details"] = c.details;
    j["checks"].push_back(cj);
  }
  return j.dump(2) + "\n";
}

std::vector<std::string> suite_names() { return {"geodesic", "haar", "immersion", "diffeo", "gauge", "action", "all"}; }

std::vector<std::string> suite_checks(const std::string& suite) {
  std::vector<std::string> out;
  for (const auto& c : checks())
    if (suite == "all" || suite == c.suite) out.push_back(c.id);
  if (out.empty()) throw PreconditionError("unknown suite '" + suite + "'");
  return out;
}

CheckResult run_check(const RunConfig& cfg, const std::string& id) {
  for (const auto& def : checks()) {
    if (id != def.id) continue;
    CheckResult r;
    r.id = def.id;
    r.name = def.name;
    r.details = ojson::object();
    auto t0 = std::chrono::steady_clock::now();
    try {
      def.fn(cfg, r);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      r.passed = false;
      r.error = e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
  }
  throw PreconditionError("unknown check '" + id + "'");
}

SuiteReport run_suite(const RunConfig& cfg, const std::string& suite) {
  SuiteReport rep;
  rep.suite = suite;
  auto ids = suite_checks(suite);
  rep.environment["version"] = kVersion;
  rep.environment["seed"] = cfg.seed ? ojson(*cfg.seed) : ojson(nullptr);
  rep.environment["scales"] = cfg.scales;
  rep.environment["grid_override"] = cfg.grid ? ojson(*cfg.grid) : ojson(nullptr);
  rep.environment["noise_floor_override"] = cfg.noise_floor ? ojson(*cfg.noise_floor) : ojson(nullptr);
  ojson ims = ojson::array();
  for (const auto& ic : cfg.immersions) ims.push_back({{"id", ic.id}, {"params", ic.params}, {"n", ic.n}});
  rep.environment["immersions"] = ims;
  for (const auto& id : ids) rep.checks.push_back(run_check(cfg, id));
  return rep;
}

std::string summary_line(const CheckResult& r) {
  std::string s = r.id + " " + r.name + " " + (r.passed ? "PASS" : "FAIL");
  if (!r.error.empty()) return s + " error: " + r.error;
  if (r.details.contains("summary")) s += " " + r.details["summary"].get<std::string>();
  return s;
}

std::vector<std::string> sweep_checks() {
  std::vector<std::string> out;
  for (const auto& s : registry()) out.push_back(s.name);
  return out;
}

SweepTable sweep(const RunConfig& cfg, const std::string& check, std::span<const double> scales,
                 const SweepOptions& opt) {
  const auto& s = scaling(check);
  SweepTable t;
  t.check = check;
  t.scales.assign(scales.begin(), scales.end());
  t.floor = floor_for(cfg, s.floor);
  std::function<double(double)> f;
  std::optional<GeodesicCtx> geo;
  std::optional<DeviationCtx> dev;
  switch (s.target) {
    case Target::manifold: {
      const ManifoldCase* mc = nullptr;
      for (const auto& m : cfg.manifolds)
        if (opt.manifold.empty() || m.label() == opt.manifold) {
          mc = &m;
          break;
        }
      if (!mc) throw ConfigError("--manifold", "no configured manifold '" + opt.manifold + "'");
      geo = geodesic_ctx(*mc);
      t.target = mc->label();
      f = [&](double e) { return s.geodesic(*geo, e); };
      break;
    }
    case Target::immersion: {
      ImmersionCase ic = s.background;
      if (!opt.immersion.empty()) ic = ImmersionCase{opt.immersion, opt.params, ic.n};
      dev = deviation_ctx(cfg, ic);
      t.target = dev->label;
      f = [&](double e) { return s.deviation(*dev, e); };
      break;
    }
    case Target::lattice:
      t.target = "lattice";
      f = s.lattice;
      break;
  }
  for (double e : t.scales) t.errors.push_back(f(e));
  t.fit = fit_slope(t.scales, t.errors, t.floor);
  return t;
}

std::string to_csv(const SweepTable& t) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "scale,error,used\n";
  for (std::size_t i = 0; i < t.scales.size(); ++i)
    os << t.scales[i] << "," << t.errors[i] << "," << (i < t.fit.kept.size() && t.fit.kept[i] ? 1 : 0) << "\n";
  if (t.fit.exact)
    os << "slope,exact\n";
  else
    os << "slope," << t.fit.slope << "\n";
  return os.str();
}

}  // namespace geodex
