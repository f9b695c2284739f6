#include "geodex/manifold.hpp"

#include <cmath>
#include <numbers>
#include <span>
#include <sstream>

#include "geodex/error.hpp"
#include "geodex/expression.hpp"

namespace geodex {

namespace {

std::string describe(const Point& x) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

void check_finite(const Mat& h, const ManifoldSpec& m, const Point& x) {
  if (!h.allFinite()) throw NumericError(m.name + ": non-finite metric at " + describe(x));
}

/// Every point within `reach` of x along each non-periodic axis must be inside the chart.
void require_stencil(const ManifoldSpec& m, const Point& x, double reach) {
  for (int c = 0; c < m.dim; ++c) {
    const auto& ax = m.domain[static_cast<std::size_t>(c)];
    if (ax.periodic) continue;
    if (x[c] - reach < ax.lo || x[c] + reach > ax.hi)
      throw DomainError(m.name + ": finite-difference stencil around " + describe(x) +
                        " leaves the chart domain along axis " + std::to_string(c));
  }
}

template <class F>
auto central1(const F& f, const Point& x, int c, double h) {
  Point p = x;
  p[c] = x[c] - 2 * h;
  auto fm2 = f(p);
  p[c] = x[c] - h;
  auto fm1 = f(p);
  p[c] = x[c] + h;
  auto fp1 = f(p);
  p[c] = x[c] + 2 * h;
  auto fp2 = f(p);
  return decltype(fm2)((fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h));
}

template <class F>
auto central2(const F& f, const Point& x, int c, double h) {
  Point p = x;
  auto f0 = f(x);
  p[c] = x[c] - 2 * h;
  auto fm2 = f(p);
  p[c] = x[c] - h;
  auto fm1 = f(p);
  p[c] = x[c] + h;
  auto fp1 = f(p);
  p[c] = x[c] + 2 * h;
  auto fp2 = f(p);
  return decltype(f0)((-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * h * h));
}

std::vector<Mat> second_derivatives(const ManifoldSpec& m, const Point& x) {
  const int n = m.dim;
  if (m.metric_d2) return m.metric_d2(x);
  const double h = m.fd_step;
  std::vector<Mat> out(static_cast<std::size_t>(n * n));
  if (m.metric_d1) {
    require_stencil(m, x, 2 * h);
    // d_c (d_d h): differentiate the analytic first derivatives.
    for (int c = 0; c < n; ++c) {
      Point p = x;
      std::vector<std::vector<Mat>> s(4);
      const double off[4] = {-2, -1, 1, 2};
      for (int k = 0; k < 4; ++k) {
        p[c] = x[c] + off[k] * h;
        s[static_cast<std::size_t>(k)] = m.metric_d1(p);
      }
      for (int d = 0; d < n; ++d) {
        const auto dd = static_cast<std::size_t>(d);
        out[static_cast<std::size_t>(c * n + d)] =
            (s[0][dd] - 8.0 * s[1][dd] + 8.0 * s[2][dd] - s[3][dd]) / (12.0 * h);
      }
    }
    return out;
  }
  require_stencil(m, x, 2 * h);
  auto metric = [&](const Point& p) {
    Mat g = m.metric(p);
    check_finite(g, m, p);
    return g;
  };
  for (int c = 0; c < n; ++c) {
    out[static_cast<std::size_t>(c * n + c)] = central2(metric, x, c, h);
    for (int d = c + 1; d < n; ++d) {
      Mat mixed = central1([&](const Point& p) { return central1(metric, p, d, h); }, x, c, h);
      out[static_cast<std::size_t>(c * n + d)] = mixed;
      out[static_cast<std::size_t>(d * n + c)] = mixed;
    }
  }
  return out;
}

Tensor3 christoffel_from(const Mat& inv, const std::vector<Mat>& dh) {
  const int n = static_cast<int>(inv.rows());
  Tensor3 g(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = b; c < n; ++c) {
        double s = 0.0;
        for (int d = 0; d < n; ++d)
          s += inv(a, d) * (dh[static_cast<std::size_t>(c)](d, b) + dh[static_cast<std::size_t>(b)](d, c) -
                            dh[static_cast<std::size_t>(d)](b, c));
        g(a, b, c) = 0.5 * s;
        g(a, c, b) = 0.5 * s;
      }
  return g;
}

}  // namespace

bool ManifoldSpec::contains(const Point& x) const {
  if (x.size() != dim) return false;
  for (int c = 0; c < dim; ++c) {
    const auto& ax = domain[static_cast<std::size_t>(c)];
    if (!std::isfinite(x[c])) return false;
    if (!ax.periodic && (x[c] < ax.lo || x[c] > ax.hi)) return false;
  }
  return true;
}

double CurvatureBundle::riemann_lower(int a, int b, int c, int d) const {
  double s = 0.0;
  for (int e = 0; e < metric.rows(); ++e) s += metric(a, e) * riemann(e, b, c, d);
  return s;
}

Vec chart_delta(const ManifoldSpec& m, const Point& from, const Point& to) {
  Vec d = to - from;
  for (int c = 0; c < m.dim; ++c) {
    const auto& ax = m.domain[static_cast<std::size_t>(c)];
    if (!ax.periodic) continue;
    const double p = ax.hi - ax.lo;
    d[c] -= p * std::round(d[c] / p);
  }
  return d;
}

MetricValue metric_at(const ManifoldSpec& m, const Point& x) {
  if (x.size() != m.dim) throw PreconditionError(m.name + ": point has wrong dimension");
  if (!m.contains(x)) throw DomainError(m.name + ": point " + describe(x) + " outside the chart domain");
  MetricValue out;
  out.h = m.metric(x);
  check_finite(out.h, m, x);
  Eigen::LLT<Mat> llt(out.h);
  if (llt.info() != Eigen::Success)
    throw SignatureError(m.name + ": signature violation, metric not positive definite at " + describe(x));
  const Mat L = llt.matrixL();
  out.log_det = 2.0 * L.diagonal().array().log().sum();
  out.inverse = llt.solve(Mat::Identity(m.dim, m.dim));
  return out;
}

std::vector<Mat> metric_first_derivatives(const ManifoldSpec& m, const Point& x) {
  if (m.metric_d1) return m.metric_d1(x);
  const double h = m.fd_step;
  require_stencil(m, x, 2 * h);
  std::vector<Mat> out;
  out.reserve(static_cast<std::size_t>(m.dim));
  auto metric = [&](const Point& p) {
    Mat g = m.metric(p);
    check_finite(g, m, p);
    return g;
  };
  for (int c = 0; c < m.dim; ++c) out.push_back(central1(metric, x, c, h));
  return out;
}

Tensor3 christoffel_at(const ManifoldSpec& m, const Point& x) {
  const MetricValue mv = metric_at(m, x);
  return christoffel_from(mv.inverse, metric_first_derivatives(m, x));
}

CurvatureBundle curvature_at(const ManifoldSpec& m, const Point& x) {
  const int n = m.dim;
  const MetricValue mv = metric_at(m, x);
  const auto dh = metric_first_derivatives(m, x);
  const auto d2h = second_derivatives(m, x);

  CurvatureBundle cb;
  cb.metric = mv.h;
  cb.inverse = mv.inverse;
  cb.gamma = christoffel_from(mv.inverse, dh);

  // d_e h^ad = -h^ap (d_e h_pq) h^qd
  std::vector<Mat> dinv;
  for (int e = 0; e < n; ++e) dinv.push_back(-mv.inverse * dh[static_cast<std::size_t>(e)] * mv.inverse);

  cb.dgamma = Tensor4(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = b; c < n; ++c)
        for (int e = 0; e < n; ++e) {
          double s = 0.0;
          for (int d = 0; d < n; ++d) {
            const auto C = static_cast<std::size_t>(c), B = static_cast<std::size_t>(b),
                       D = static_cast<std::size_t>(d), E = static_cast<std::size_t>(e);
            const double bracket = dh[C](d, b) + dh[B](d, c) - dh[D](b, c);
            const double dbracket = d2h[E * n + C](d, b) + d2h[E * n + B](d, c) - d2h[E * n + D](b, c);
            s += dinv[E](a, d) * bracket + mv.inverse(a, d) * dbracket;
          }
          cb.dgamma(a, b, c, e) = 0.5 * s;
          cb.dgamma(a, c, b, e) = 0.5 * s;
        }

  cb.riemann = Tensor4(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double s = cb.dgamma(a, b, d, c) - cb.dgamma(a, b, c, d);
          for (int e = 0; e < n; ++e)
            s += cb.gamma(a, c, e) * cb.gamma(e, b, d) - cb.gamma(a, d, e) * cb.gamma(e, b, c);
          cb.riemann(a, b, c, d) = s;
        }

  cb.ricci = Mat::Zero(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) cb.ricci(a, b) += cb.riemann(c, a, c, b);
  return cb;
}

VectorField VectorField::constant(const Vec& components) {
  return VectorField{[components](const Point&) { return components; }};
}

VectorField VectorField::zero(int dim) { return constant(Vec::Zero(dim)); }

Mat fd_jacobian(const std::function<Vec(const Point&)>& f, const Point& x, double step) {
  const Vec f0 = f(x);
  Mat J(f0.size(), x.size());
  for (Eigen::Index c = 0; c < x.size(); ++c) J.col(c) = central1(f, x, static_cast<int>(c), step);
  return J;
}

CovariantDerivatives covariant_derivatives(const ManifoldSpec& m, const VectorField& v, const Point& x,
                                           int order) {
  if (order < 1 || order > 2) throw PreconditionError("covariant_derivatives: order must be 1 or 2");
  const int n = m.dim;
  const double h = m.fd_step;
  require_stencil(m, x, 4 * h);
  const CurvatureBundle cb = curvature_at(m, x);

  CovariantDerivatives out;
  out.value = v.eval(x);
  if (!out.value.allFinite()) throw NumericError("covariant_derivatives: non-finite field value");
  Mat partial(n, n);  // (a,b) d_b v^a
  for (int b = 0; b < n; ++b) partial.col(b) = central1(v.eval, x, b, h);

  out.first = partial;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) out.first(a, b) += cb.gamma(a, b, c) * out.value[c];
  if (order == 1) return out;

  // d_c d_b v^a
  std::vector<Vec> pp(static_cast<std::size_t>(n * n));
  for (int c = 0; c < n; ++c) {
    pp[static_cast<std::size_t>(c * n + c)] = central2(v.eval, x, c, h);
    for (int b = c + 1; b < n; ++b) {
      Vec mixed = central1([&](const Point& p) { return Vec(central1(v.eval, p, b, h)); }, x, c, h);
      pp[static_cast<std::size_t>(c * n + b)] = mixed;
      pp[static_cast<std::size_t>(b * n + c)] = mixed;
    }
  }
  // nabla_c (nabla_b v^a) = d_c d_b v^a + (d_c Gamma^a_be) v^e + Gamma^a_be d_c v^e
  //                        + Gamma^a_ce (nabla_b v)^e - Gamma^e_cb (nabla_e v)^a
  out.second = Tensor3(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        double s = pp[static_cast<std::size_t>(c * n + b)][a];
        for (int e = 0; e < n; ++e) {
          s += cb.dgamma(a, b, e, c) * out.value[e] + cb.gamma(a, b, e) * partial(e, c);
          s += cb.gamma(a, c, e) * out.first(e, b) - cb.gamma(e, c, b) * out.first(a, e);
        }
        out.second(a, b, c) = s;
      }
  return out;
}

namespace builtin {

namespace {
std::vector<AxisDomain> unbounded(int n) { return std::vector<AxisDomain>(static_cast<std::size_t>(n)); }

std::vector<Mat> zeros(int n, int count) { return std::vector<Mat>(static_cast<std::size_t>(count), Mat::Zero(n, n)); }

/// (1 - sin^2 x / x^2) / x^2, accurate at small x.
double sphere_normal_f(double x) {
  if (x < 0.5) {
    double term = 0.0, sum = 0.0;
    // sum_{k>=2} (-1)^k 2^(2k-1) x^(2k-4) / (2k)!
    double pow4 = 8.0, fact = 24.0, xp = 1.0;
    for (int k = 2; k < 14; ++k) {
      term = ((k % 2 == 0) ? 1.0 : -1.0) * pow4 * xp / fact;
      sum += term;
      pow4 *= 4.0;
      fact *= (2.0 * k + 1.0) * (2.0 * k + 2.0);
      xp *= x * x;
    }
    return sum;
  }
  const double s = std::sin(x) / x;
  return (1.0 - s * s) / (x * x);
}
}  // namespace

ManifoldSpec euclidean(int n) {
  ManifoldSpec m;
  m.name = "euclidean" + std::to_string(n);
  m.dim = n;
  m.metric = [n](const Point&) { return Mat(Mat::Identity(n, n)); };
  m.metric_d1 = [n](const Point&) { return zeros(n, n); };
  m.metric_d2 = [n](const Point&) { return zeros(n, n * n); };
  m.domain = unbounded(n);
  return m;
}

ManifoldSpec sphere(double radius, double collar) {
  ManifoldSpec m;
  m.name = "sphere";
  m.dim = 2;
  const double r2 = radius * radius;
  m.metric = [r2](const Point& x) {
    Mat h = Mat::Zero(2, 2);
    h(0, 0) = r2;
    h(1, 1) = r2 * std::sin(x[0]) * std::sin(x[0]);
    return h;
  };
  m.metric_d1 = [r2](const Point& x) {
    auto d = zeros(2, 2);
    d[0](1, 1) = r2 * std::sin(2.0 * x[0]);
    return d;
  };
  m.metric_d2 = [r2](const Point& x) {
    auto d = zeros(2, 4);
    d[0](1, 1) = 2.0 * r2 * std::cos(2.0 * x[0]);
    return d;
  };
  m.domain = {AxisDomain{collar, std::numbers::pi - collar, false},
              AxisDomain{0.0, 2.0 * std::numbers::pi, true}};
  return m;
}

ManifoldSpec sphere_normal(double radius, double box) {
  ManifoldSpec m;
  m.name = "sphere_normal";
  m.dim = 2;
  m.metric = [radius](const Point& y) {
    const double r = y.norm();
    const double x = r / radius;
    // h = s I + (1 - s) y y^T / r^2 with s = sin^2 x / x^2 and (1 - s)/r^2 = f(x) / radius^2
    const double f = sphere_normal_f(x) / (radius * radius);
    const double s = 1.0 - f * r * r;
    Mat h = s * Mat::Identity(2, 2) + f * y * y.transpose();
    return h;
  };
  m.domain = {AxisDomain{-box, box, false}, AxisDomain{-box, box, false}};
  return m;
}

ManifoldSpec poincare_half_plane(double y_min) {
  ManifoldSpec m;
  m.name = "half_plane";
  m.dim = 2;
  m.metric = [](const Point& x) { return Mat(Mat::Identity(2, 2) / (x[1] * x[1])); };
  m.metric_d1 = [](const Point& x) {
    auto d = zeros(2, 2);
    d[1] = -2.0 / (x[1] * x[1] * x[1]) * Mat::Identity(2, 2);
    return d;
  };
  m.metric_d2 = [](const Point& x) {
    auto d = zeros(2, 4);
    d[3] = 6.0 / (x[1] * x[1] * x[1] * x[1]) * Mat::Identity(2, 2);
    return d;
  };
  m.domain = {AxisDomain{}, AxisDomain{y_min, 1e300, false}};
  return m;
}

ManifoldSpec flat_torus(int n, double period) {
  ManifoldSpec m = euclidean(n);
  m.name = "flat_torus";
  m.domain = std::vector<AxisDomain>(static_cast<std::size_t>(n), AxisDomain{0.0, period, true});
  return m;
}

ManifoldSpec polar_plane(double r_min) {
  ManifoldSpec m;
  m.name = "polar_plane";
  m.dim = 2;
  m.metric = [](const Point& x) {
    Mat h = Mat::Identity(2, 2);
    h(1, 1) = x[0] * x[0];
    return h;
  };
  m.metric_d1 = [](const Point& x) {
    auto d = zeros(2, 2);
    d[0](1, 1) = 2.0 * x[0];
    return d;
  };
  m.metric_d2 = [](const Point&) {
    auto d = zeros(2, 4);
    d[0](1, 1) = 2.0;
    return d;
  };
  m.domain = {AxisDomain{r_min, 1e300, false}, AxisDomain{0.0, 2.0 * std::numbers::pi, true}};
  return m;
}

ManifoldSpec from_expressions(const std::string& name, const std::vector<std::string>& coordinates,
                              const std::vector<std::vector<std::string>>& components,
                              std::vector<AxisDomain> domain, double fd_step) {
  const int n = static_cast<int>(coordinates.size());
  if (n == 0) throw Error(name + ": no coordinates");
  if (static_cast<int>(components.size()) != n) throw Error(name + ": metric must be " + std::to_string(n) + "x" + std::to_string(n));
  std::vector<Expression> expr;
  for (const auto& row : components) {
    if (static_cast<int>(row.size()) != n) throw Error(name + ": metric row has wrong length");
    for (const auto& s : row) expr.emplace_back(s, coordinates);
  }
  if (domain.empty()) domain = unbounded(n);
  if (static_cast<int>(domain.size()) != n) throw Error(name + ": domain must list every coordinate");
  ManifoldSpec m;
  m.name = name;
  m.dim = n;
  m.fd_step = fd_step;
  m.domain = std::move(domain);
  m.metric = [expr, n](const Point& x) {
    Mat h(n, n);
    const std::span<const double> vals(x.data(), static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) h(a, b) = expr[static_cast<std::size_t>(a * n + b)](vals);
    return Mat(0.5 * (h + h.transpose()));
  };
  return m;
}

std::optional<ManifoldSpec> by_id(const std::string& id, double radius) {
  if (id == "euclidean1") return euclidean(1);
  if (id == "euclidean2") return euclidean(2);
  if (id == "euclidean3") return euclidean(3);
  if (id == "euclidean4") return euclidean(4);
  if (id == "sphere") return sphere(radius);
  if (id == "sphere_normal") return sphere_normal(radius);
  if (id == "half_plane") return poincare_half_plane();
  if (id == "flat_torus") return flat_torus(2);
  if (id == "polar_plane") return polar_plane();
  return std::nullopt;
}

}  // namespace builtin

}  // namespace geodex
