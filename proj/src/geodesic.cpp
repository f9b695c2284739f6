#include "geodex/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "geodex/error.hpp"
#include "geodex/rng.hpp"

namespace geodex {

namespace {

struct State {
  Vec x, v;
};

State rhs(const ManifoldSpec& m, const State& y) {
  const int n = m.dim;
  const Tensor3 g = christoffel_at(m, y.x);
  State d{y.v, Vec::Zero(n)};
  for (int a = 0; a < n; ++a) {
    double s = 0.0;
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) s += g(a, b, c) * y.v[b] * y.v[c];
    d.v[a] = -s;
  }
  return d;
}

State axpy(const State& y, double h, std::initializer_list<std::pair<double, const State*>> ks) {
  State r = y;
  for (const auto& [c, k] : ks) {
    if (c == 0.0) continue;
    r.x += (h * c) * k->x;
    r.v += (h * c) * k->v;
  }
  return r;
}

[[noreturn]] void left_chart(double s, const std::string& what) {
  std::ostringstream os;
  os << "geodesic left the chart at parameter s = " << s << " (" << what << ")";
  throw DomainError(os.str());
}

// Gamma v v  and  (-dGamma + 2 Gamma Gamma) v v v
std::pair<Vec, Vec> series_terms(const CurvatureBundle& cb, const Vec& v) {
  const int n = static_cast<int>(v.size());
  Vec q = Vec::Zero(n), c3 = Vec::Zero(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        const double vv = v[b] * v[c];
        q[a] += cb.gamma(a, b, c) * vv;
        for (int d = 0; d < n; ++d) {
          double t = -cb.dgamma(a, b, c, d);
          for (int e = 0; e < n; ++e) t += 2.0 * cb.gamma(a, d, e) * cb.gamma(e, b, c);
          c3[a] += t * vv * v[d];
        }
      }
  return {q, c3};
}

}  // namespace

std::vector<GeodesicSample> shoot_path(const ManifoldSpec& m, const Point& x0, const Vec& v, double t,
                                       const ShootOptions& opt) {
  if (x0.size() != m.dim || v.size() != m.dim) throw PreconditionError("shoot: dimension mismatch");
  if (!v.allFinite()) throw NumericError("shoot: non-finite initial velocity");
  std::vector<GeodesicSample> path{{0.0, x0, v}};
  if (t == 0.0) return path;

  // Dormand-Prince 5(4)
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  (void)c2, (void)c3, (void)c4, (void)c5;

  const double dir = t > 0 ? 1.0 : -1.0;
  const double span = std::abs(t);
  State y{x0, v};
  double s = 0.0;
  double h = std::min(span, 0.05 * span + 0.01);
  auto eval = [&](const State& st) {
    if (!m.contains(st.x)) left_chart(s, "point outside the domain");
    try {
      return rhs(m, st);
    } catch (const DomainError& e) {
      left_chart(s, e.what());
    }
  };
  State k1 = eval(y);
  for (int step = 0; step < opt.max_steps; ++step) {
    if (s >= span) return path;
    h = std::min(h, span - s);
    const double hs = dir * h;
    const State k2 = eval(axpy(y, hs, {{a21, &k1}}));
    const State k3 = eval(axpy(y, hs, {{a31, &k1}, {a32, &k2}}));
    const State k4 = eval(axpy(y, hs, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
    const State k5 = eval(axpy(y, hs, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    const State k6 = eval(axpy(y, hs, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
    const State y5 = axpy(y, hs, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
    const State k7 = eval(y5);
    const State err = axpy(State{Vec::Zero(m.dim), Vec::Zero(m.dim)}, hs,
                           {{e1, &k1}, {e3, &k3}, {e4, &k4}, {e5, &k5}, {e6, &k6}, {e7, &k7}});
    double en = 0.0;
    for (int i = 0; i < m.dim; ++i) {
      en = std::max(en, std::abs(err.x[i]) / (opt.tol * (1.0 + std::abs(y5.x[i]))));
      en = std::max(en, std::abs(err.v[i]) / (opt.tol * (1.0 + std::abs(y5.v[i]))));
    }
    if (!std::isfinite(en)) throw NumericError("shoot: non-finite error estimate");
    const double factor = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
    if (en <= 1.0) {
      s += h;
      if (span - s < 1e-14 * span) s = span;
      y = y5;
      k1 = k7;
      path.push_back({dir * s, y.x, y.v});
    }
    h *= factor;
    if (h < opt.min_step * span && s < span) {
      std::ostringstream os;
      os << "shoot: step size underflow at s = " << s << " (stiff or singular geodesic equation)";
      throw ConvergenceError(os.str());
    }
  }
  throw ConvergenceError("shoot: step budget exhausted");
}

GeodesicSample shoot_state(const ManifoldSpec& m, const Point& x0, const Vec& v, double t, const ShootOptions& opt) {
  return shoot_path(m, x0, v, t, opt).back();
}

Point shoot(const ManifoldSpec& m, const Point& x0, const Vec& v, double t, double tol) {
  ShootOptions opt;
  opt.tol = tol;
  return shoot_state(m, x0, v, t, opt).x;
}

GeodesicSample shoot_fixed(const ManifoldSpec& m, const Point& x0, const Vec& v, double t, int steps) {
  if (steps < 1) throw PreconditionError("shoot_fixed: steps must be positive");
  const double h = t / steps;
  State y{x0, v};
  for (int i = 0; i < steps; ++i) {
    const State k1 = rhs(m, y);
    const State k2 = rhs(m, axpy(y, h, {{0.5, &k1}}));
    const State k3 = rhs(m, axpy(y, h, {{0.5, &k2}}));
    const State k4 = rhs(m, axpy(y, h, {{1.0, &k3}}));
    y = axpy(y, h, {{1.0 / 6, &k1}, {1.0 / 3, &k2}, {1.0 / 3, &k3}, {1.0 / 6, &k4}});
  }
  return {t, y.x, y.v};
}

double metric_norm(const ManifoldSpec& m, const Point& x, const Vec& v) {
  return std::sqrt(std::max(0.0, v.dot(metric_at(m, x).h * v)));
}

Vec log_map(const ManifoldSpec& m, const Point& x0, const Point& x1, double tol, int max_iter) {
  const int n = m.dim;
  const double shoot_tol = std::max(1e-14, 1e-3 * tol);
  auto residual = [&](const Vec& v) { return chart_delta(m, x1, shoot(m, x0, v, 1.0, shoot_tol)); };
  Vec v = chart_delta(m, x0, x1);
  Vec r;
  try {
    r = residual(v);
  } catch (const DomainError&) {
    throw ConvergenceError("log_map: no unique geodesic (initial guess leaves the chart)");
  }
  for (int it = 0; it < max_iter; ++it) {
    if (r.lpNorm<Eigen::Infinity>() <= tol) return v;
    const double step = 1e-6 * std::max(1.0, v.norm());
    Mat J(n, n);
    try {
      for (int c = 0; c < n; ++c) {
        Vec vp = v, vm = v;
        vp[c] += step;
        vm[c] -= step;
        J.col(c) = (residual(vp) - residual(vm)) / (2 * step);
      }
    } catch (const DomainError&) {
      throw ConvergenceError("log_map: no unique geodesic (Newton probe left the chart)");
    }
    Eigen::FullPivLU<Mat> lu(J);
    if (!lu.isInvertible()) throw ConvergenceError("log_map: no unique geodesic (singular shooting Jacobian)");
    Vec dv = lu.solve(r);
    // damped update: halve until the residual decreases
    double lambda = 1.0;
    for (int k = 0; k < 30; ++k, lambda *= 0.5) {
      try {
        Vec cand = v - lambda * dv;
        Vec rc = residual(cand);
        if (rc.norm() < r.norm() || rc.lpNorm<Eigen::Infinity>() <= tol) {
          v = cand;
          r = rc;
          break;
        }
      } catch (const DomainError&) {
      }
      if (k == 29) throw ConvergenceError("log_map: no unique geodesic (line search failed)");
    }
  }
  if (r.lpNorm<Eigen::Infinity>() <= tol) return v;
  throw ConvergenceError("log_map: no unique geodesic within the iteration limit");
}

double trust_radius(const ManifoldSpec& m, const Point& x0, int directions, double cap) {
  const int n = m.dim;
  const MetricValue mv = metric_at(m, x0);
  const Mat L = Eigen::LLT<Mat>(mv.h).matrixL();
  const Mat frame = L.transpose().triangularView<Eigen::Upper>().solve(Mat::Identity(n, n));
  Rng rng(0x7a57);
  ShootOptions opt;
  opt.tol = 1e-10;

  auto healthy = [&](const Vec& w) {
    try {
      const double step = 1e-5 * std::max(1.0, w.norm());
      Mat J(n, n);
      for (int c = 0; c < n; ++c) {
        Vec wp = w, wm = w;
        wp[c] += step;
        wm[c] -= step;
        J.col(c) = chart_delta(m, shoot_state(m, x0, wm, 1.0, opt).x, shoot_state(m, x0, wp, 1.0, opt).x) / (2 * step);
      }
      if (J.determinant() <= 0.0) return false;
      Eigen::JacobiSVD<Mat> svd(J);
      const auto& sv = svd.singularValues();
      return sv[n - 1] > 1e-3 * sv[0];
    } catch (const Error&) {
      return false;
    }
  };

  double best = cap;
  for (int k = 0; k < directions; ++k) {
    Vec u(n);
    if (k < 2 * n) {
      u.setZero();
      u[k / 2] = (k % 2 == 0) ? 1.0 : -1.0;
    } else {
      for (int i = 0; i < n; ++i) u[i] = rng.uniform(-1.0, 1.0);
      u.normalize();
    }
    const Vec dir = frame * u;  // unit in the metric
    const double ds = cap / 40.0;
    double good = 0.0;
    double bad = -1.0;
    for (double s = ds; s <= best + 1e-12; s += ds) {
      if (healthy(s * dir)) {
        good = s;
      } else {
        bad = s;
        break;
      }
    }
    if (bad < 0) continue;
    for (int it = 0; it < 30; ++it) {
      const double mid = 0.5 * (good + bad);
      (healthy(mid * dir) ? good : bad) = mid;
    }
    best = std::min(best, good);
  }
  return 0.5 * best;
}

Point expand3_at(const CurvatureBundle& cb, const Point& x0, const Vec& v, int order) {
  if (order < 1 || order > 3) throw PreconditionError("expand3: order must be 1, 2 or 3");
  Point p = x0 + v;
  if (order == 1) return p;
  const auto [q, c3] = series_terms(cb, v);
  p -= 0.5 * q;
  if (order == 3) p += c3 / 6.0;
  return p;
}

Expansion expand3(const ManifoldSpec& m, const Point& x0, const Vec& v, int order, double trust) {
  if (order < 1 || order > 3) throw PreconditionError("expand3: order must be 1, 2 or 3");
  Expansion out;
  out.trust_violation = metric_norm(m, x0, v) > trust;
  out.point = order == 1 ? Point(x0 + v) : expand3_at(curvature_at(m, x0), x0, v, order);
  return out;
}

Composition compose3_terms(const CurvatureBundle& cb, const Vec& v1, const CovariantDerivatives& cd) {
  const int n = static_cast<int>(v1.size());
  Composition c;
  c.linear = v1 + cd.value;
  c.transport = cd.first * v1;
  c.second = Vec::Zero(n);
  c.curvature = Vec::Zero(n);
  const Vec mix = cd.value + 0.5 * v1;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int k = 0; k < n; ++k) {
        c.second[a] += 0.5 * v1[b] * v1[k] * cd.second(a, b, k);
        for (int d = 0; d < n; ++d) c.curvature[a] += cb.riemann(a, b, k, d) * mix[b] * cd.value[k] * v1[d] / 3.0;
      }
  return c;
}

Composition compose3_terms(const ManifoldSpec& m, const Point& x0, const Vec& v1, const VectorField& v2) {
  return compose3_terms(curvature_at(m, x0), v1, covariant_derivatives(m, v2, x0, 2));
}

Vec compose3(const ManifoldSpec& m, const Point& x0, const Vec& v1, const VectorField& v2) {
  return compose3_terms(m, x0, v1, v2).total();
}

Vec invert3(const ManifoldSpec& m, const Point& x0, const Vec& v) {
  const CurvatureBundle cb = curvature_at(m, x0);
  const auto [q, c3] = series_terms(cb, v);
  return -(v - q + 0.5 * c3);
}

NormalChart::NormalChart(ManifoldSpec m, Point x0, int steps) : m_(std::move(m)), x0_(std::move(x0)), steps_(steps) {
  const MetricValue mv = metric_at(m_, x0_);
  const Mat L = Eigen::LLT<Mat>(mv.h).matrixL();
  frame_inv_ = L.transpose();
  frame_ = frame_inv_.triangularView<Eigen::Upper>().solve(Mat::Identity(m_.dim, m_.dim));
}

Vec NormalChart::to_normal(const Point& x, double tol) const { return frame_inv_ * log_map(m_, x0_, x, tol); }

Point NormalChart::from_normal(const Vec& y) const { return shoot_fixed(m_, x0_, frame_ * y, 1.0, steps_).x; }

Mat NormalChart::metric(const Vec& y, double step) const {
  const Mat J = fd_jacobian([this](const Point& p) { return Vec(from_normal(p)); }, y, step);
  return J.transpose() * metric_at(m_, from_normal(y)).h * J;
}

ManifoldSpec NormalChart::as_manifold(double radius) const {
  ManifoldSpec out;
  out.name = m_.name + "_normal_chart";
  out.dim = m_.dim;
  out.domain.assign(static_cast<std::size_t>(m_.dim), AxisDomain{-radius, radius, false});
  const NormalChart self = *this;
  out.metric = [self](const Point& y) { return self.metric(y); };
  return out;
}

Tensor4 NormalChart::frame_riemann() const {
  const int n = m_.dim;
  const CurvatureBundle cb = curvature_at(m_, x0_);
  Tensor4 lower(n), out(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) lower(a, b, c, d) = cb.riemann_lower(a, b, c, d);
  const Mat& E = frame_;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double s = 0.0;
          for (int p = 0; p < n; ++p)
            for (int q = 0; q < n; ++q)
              for (int r = 0; r < n; ++r)
                for (int t = 0; t < n; ++t) s += E(p, a) * E(q, b) * E(r, c) * E(t, d) * lower(p, q, r, t);
          out(a, b, c, d) = s;
        }
  return out;
}

}  // namespace geodex
