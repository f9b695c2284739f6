#include "geodex/haar.hpp"

#include <cmath>

#include "geodex/error.hpp"
#include "geodex/rng.hpp"

namespace geodex {

namespace {

double ricci_form(const CurvatureBundle& cb, const Vec& a, const Vec& b) { return a.dot(cb.ricci * b); }

double logabsdet(const Mat& J) {
  Eigen::PartialPivLU<Mat> lu(J);
  const Mat& U = lu.matrixLU();
  double s = 0.0;
  for (Eigen::Index i = 0; i < U.rows(); ++i) {
    const double u = std::abs(U(i, i));
    if (u == 0.0 || !std::isfinite(u)) throw NumericError("log-determinant of a singular Jacobian");
    s += std::log(u);
  }
  return s;
}

Vec flat(const Mat& samples) { return Eigen::Map<const Vec>(samples.data(), samples.size()); }
Mat unflat(const Vec& v, Eigen::Index rows) { return Eigen::Map<const Mat>(v.data(), rows, v.size() / rows); }

// Central differences of a map R^N -> R^N that is at most quadratic, so the
// 2-point stencil is exact up to rounding.
Mat quadratic_map_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x0, double step) {
  const Eigen::Index N = x0.size();
  Mat J(N, N);
  Vec x = x0;
  for (Eigen::Index j = 0; j < N; ++j) {
    x[j] = x0[j] + step;
    const Vec fp = f(x);
    x[j] = x0[j] - step;
    const Vec fm = f(x);
    x[j] = x0[j];
    J.col(j) = (fp - fm) / (2 * step);
  }
  return J;
}

}  // namespace

double MeasureWeight::term(const std::string& name) const {
  for (const auto& [k, v] : terms)
    if (k == name) return v;
  throw Error("measure weight has no term '" + name + "'");
}

MeasureWeight right_log_weight(const ManifoldSpec& m, const Point& x0, const Vec& v, bool volume) {
  const CurvatureBundle cb = curvature_at(m, x0);
  MeasureWeight w;
  w.kind = MeasureKind::right;
  w.base = x0;
  w.includes_volume_factor = volume;
  w.terms.emplace_back("ricci", -ricci_form(cb, v, v) / 6.0);
  if (volume) w.terms.emplace_back("volume", 0.5 * metric_at(m, x0).log_det);
  for (const auto& t : w.terms) w.log_density += t.second;
  return w;
}

MeasureWeight left_log_weight(const CurvatureBundle& cb, const CovariantDerivatives& cd) {
  MeasureWeight w;
  w.kind = MeasureKind::left;
  const Mat& F = cd.first;
  w.terms.emplace_back("divergence", -F.trace());
  w.terms.emplace_back("quadratic", 0.5 * (F * F).trace());
  w.terms.emplace_back("ricci", ricci_form(cb, cd.value, cd.value) / 3.0);
  for (const auto& t : w.terms) w.log_density += t.second;
  return w;
}

MeasureWeight left_log_weight(const ManifoldSpec& m, const Point& x0, const VectorField& v, bool volume) {
  MeasureWeight w = left_log_weight(curvature_at(m, x0), covariant_derivatives(m, v, x0, 1));
  w.base = x0;
  if (volume) {
    w.includes_volume_factor = true;
    w.terms.emplace_back("volume", 0.5 * metric_at(m, x0).log_det);
    w.log_density += w.terms.back().second;
  }
  return w;
}

FieldGrid::FieldGrid(ManifoldSpec m, Lattice lattice, std::vector<int> chart_axes, Point anchor)
    : m_(std::move(m)), lattice_(std::move(lattice)), axes_(std::move(chart_axes)), anchor_(std::move(anchor)) {
  if (static_cast<int>(axes_.size()) != lattice_.dim()) throw PreconditionError("field grid: one chart axis per lattice axis");
  if (anchor_.size() != m_.dim) throw PreconditionError("field grid: anchor has the wrong dimension");
  for (int a : axes_)
    if (a < 0 || a >= m_.dim) throw PreconditionError("field grid: chart axis out of range");
  curv_.reserve(lattice_.size());
  for (std::size_t k = 0; k < lattice_.size(); ++k) curv_.push_back(curvature_at(m_, point(k)));
}

Point FieldGrid::point(std::size_t k) const {
  Point p = anchor_;
  const Point q = lattice_.point(k);
  for (std::size_t a = 0; a < axes_.size(); ++a) p[axes_[a]] = q[static_cast<Eigen::Index>(a)];
  return p;
}

Mat FieldGrid::sample(const VectorField& v) const {
  Mat s(m_.dim, static_cast<Eigen::Index>(size()));
  for (std::size_t k = 0; k < size(); ++k) s.col(static_cast<Eigen::Index>(k)) = v.eval(point(k));
  if (!s.allFinite()) throw NumericError("field grid: non-finite field sample");
  return s;
}

std::vector<Mat> FieldGrid::partials(const Mat& samples) const {
  std::vector<Mat> out(static_cast<std::size_t>(m_.dim), Mat::Zero(samples.rows(), samples.cols()));
  std::vector<double> row(size());
  for (std::size_t a = 0; a < axes_.size(); ++a) {
    Mat& d = out[static_cast<std::size_t>(axes_[a])];
    for (Eigen::Index r = 0; r < samples.rows(); ++r) {
      for (std::size_t k = 0; k < size(); ++k) row[k] = samples(r, static_cast<Eigen::Index>(k));
      const auto dr = lattice_.diff(row, static_cast<int>(a));
      for (std::size_t k = 0; k < size(); ++k) d(r, static_cast<Eigen::Index>(k)) = dr[k];
    }
  }
  return out;
}

std::vector<CovariantDerivatives> FieldGrid::covariant(const Mat& samples, int order) const {
  const int n = m_.dim;
  const auto N = static_cast<Eigen::Index>(size());
  const auto P = partials(samples);
  std::vector<CovariantDerivatives> out(size());
  for (Eigen::Index k = 0; k < N; ++k) {
    const auto& cb = curv_[static_cast<std::size_t>(k)];
    auto& cd = out[static_cast<std::size_t>(k)];
    cd.value = samples.col(k);
    cd.first = Mat(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        double s = P[static_cast<std::size_t>(b)](a, k);
        for (int c = 0; c < n; ++c) s += cb.gamma(a, b, c) * cd.value[c];
        cd.first(a, b) = s;
      }
  }
  if (order < 2) return out;
  // nabla_c nabla_b v^a = d_c (nabla_b v^a) + Gamma^a_ce nabla_b v^e - Gamma^e_cb nabla_e v^a.
  // Along lattice axes d_c acts on the lattice field nabla_b v (a traceless lattice
  // operator); along the other axes v is constant and d_c (nabla_b v) = (d_c Gamma) v.
  Mat T(n * n, N);  // row a + n*b: nabla_b v^a
  for (Eigen::Index k = 0; k < N; ++k)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) T(a + n * b, k) = out[static_cast<std::size_t>(k)].first(a, b);
  const auto PT = partials(T);
  std::vector<bool> on_lattice(static_cast<std::size_t>(n), false);
  for (int a : axes_) on_lattice[static_cast<std::size_t>(a)] = true;
  for (Eigen::Index k = 0; k < N; ++k) {
    const auto& cb = curv_[static_cast<std::size_t>(k)];
    auto& cd = out[static_cast<std::size_t>(k)];
    cd.second = Tensor3(n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c) {
          double s = 0.0;
          if (on_lattice[static_cast<std::size_t>(c)]) {
            s = PT[static_cast<std::size_t>(c)](a + n * b, k);
          } else {
            for (int e = 0; e < n; ++e) s += cb.dgamma(a, b, e, c) * cd.value[e];
          }
          for (int e = 0; e < n; ++e) s += cb.gamma(a, c, e) * cd.first(e, b) - cb.gamma(e, c, b) * cd.first(a, e);
          cd.second(a, b, c) = s;
        }
  }
  return out;
}

void FieldGrid::require_resolved(const VectorField& v, double rel) const {
  const Mat s = sample(v);
  const auto P = partials(s);
  const double scale = std::max(s.cwiseAbs().maxCoeff(), 1e-300);
  double worst = 0.0, dscale = 0.0;
  for (std::size_t k = 0; k < size(); ++k) {
    const Mat J = fd_jacobian(v.eval, point(k), m_.fd_step);
    for (std::size_t a = 0; a < axes_.size(); ++a) {
      const int c = axes_[a];
      worst = std::max(worst, (J.col(c) - P[static_cast<std::size_t>(c)].col(static_cast<Eigen::Index>(k))).cwiseAbs().maxCoeff());
      dscale = std::max(dscale, J.col(c).cwiseAbs().maxCoeff());
    }
  }
  if (worst > rel * std::max(scale, dscale))
    throw PreconditionError("lattice too coarse: lattice derivatives deviate from the field's derivatives by " +
                            std::to_string(worst));
}

Mat compose_on_lattice(const FieldGrid& grid, const Mat& v1, const Mat& v2) {
  const auto cd = grid.covariant(v2, 2);
  Mat out(v1.rows(), v1.cols());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    out.col(kk) = compose3_terms(grid.curvature(k), v1.col(kk), cd[k]).total();
  }
  return out;
}

double right_exponent_sum(const FieldGrid& grid, const Mat& v) {
  double s = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Vec c = v.col(static_cast<Eigen::Index>(k));
    s += -ricci_form(grid.curvature(k), c, c) / 6.0;
  }
  return s;
}

double left_exponent_sum(const FieldGrid& grid, const Mat& v) {
  const auto cd = grid.covariant(v, 1);
  double s = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) s += left_log_weight(grid.curvature(k), cd[k]).log_density;
  return s;
}

JacobianCheck product_jacobian_check(const FieldGrid& grid, const Mat& v1, const Mat& v2, Side side) {
  const Eigen::Index n = grid.dim();
  if (v1.rows() != n || v2.rows() != n || v1.cols() != static_cast<Eigen::Index>(grid.size()) ||
      v2.cols() != v1.cols())
    throw PreconditionError("product_jacobian_check: samples do not match the grid");
  const double scale = std::max({v1.cwiseAbs().maxCoeff(), v2.cwiseAbs().maxCoeff(), 1e-3});
  const double step = 1e-3 * scale;
  JacobianCheck out;
  if (side == Side::right) {
    const Mat J = quadratic_map_jacobian([&](const Vec& x) { return flat(compose_on_lattice(grid, v1, unflat(x, n))); },
                                         flat(v2), step);
    out.numeric_logdet = logabsdet(J);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      const Vec a = v1.col(kk), b = v2.col(kk);
      out.formula_logdet += ricci_form(grid.curvature(k), b, a) / 3.0 + ricci_form(grid.curvature(k), a, a) / 6.0;
    }
  } else {
    const Mat J = quadratic_map_jacobian([&](const Vec& x) { return flat(compose_on_lattice(grid, unflat(x, n), v2)); },
                                         flat(v1), step);
    out.numeric_logdet = logabsdet(J);
    out.formula_logdet = left_exponent_sum(grid, v1) - left_exponent_sum(grid, compose_on_lattice(grid, v1, v2));
  }
  out.residual = out.numeric_logdet - out.formula_logdet;
  return out;
}

NormalMetricFit normal_metric_expansion_check(const ManifoldSpec& m, const Point& x0, double radius) {
  const int n = m.dim;
  const NormalChart chart(m, x0);

  // monomials in u = Y / radius up to degree 4, as exponent vectors
  std::vector<std::vector<int>> monos;
  std::vector<int> e(static_cast<std::size_t>(n), 0);
  std::function<void(int, int, int)> gen = [&](int start, int left, int deg) {
    if (left == 0) {
      monos.push_back(e);
      return;
    }
    for (int c = start; c < n; ++c) {
      ++e[static_cast<std::size_t>(c)];
      gen(c, left - 1, deg);
      --e[static_cast<std::size_t>(c)];
    }
  };
  for (int deg = 0; deg <= 4; ++deg) gen(0, deg, deg);

  const int samples = std::max(80, 6 * static_cast<int>(monos.size()));
  Rng rng(0x6e6f726d);
  Mat A(samples, static_cast<Eigen::Index>(monos.size()));
  std::vector<Mat> h;
  for (int s = 0; s < samples; ++s) {
    Vec u(n);
    do {
      for (int c = 0; c < n; ++c) u[c] = rng.uniform(-1.0, 1.0);
    } while (u.squaredNorm() > 1.0);
    for (std::size_t j = 0; j < monos.size(); ++j) {
      double v = 1.0;
      for (int c = 0; c < n; ++c) v *= std::pow(u[c], monos[j][static_cast<std::size_t>(c)]);
      A(s, static_cast<Eigen::Index>(j)) = v;
    }
    h.push_back(chart.metric(radius * u));
  }
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  NormalMetricFit fit;
  fit.samples = samples;
  fit.condition = sv[0] / sv[sv.size() - 1];
  if (!(fit.condition < 1e8)) throw PreconditionError("normal metric fit: sample design is ill-conditioned");

  fit.fitted = Tensor4(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      Vec rhs(samples);
      for (int s = 0; s < samples; ++s) rhs[s] = h[static_cast<std::size_t>(s)](a, b);
      const Vec coef = svd.solve(rhs);
      for (std::size_t j = 0; j < monos.size(); ++j) {
        const auto& mj = monos[j];
        int deg = 0;
        for (int x : mj) deg += x;
        if (deg != 2) continue;
        int c = -1, d = -1;
        for (int i = 0; i < n; ++i)
          for (int r = 0; r < mj[static_cast<std::size_t>(i)]; ++r) (c < 0 ? c : d) = i;
        const double q = coef[static_cast<Eigen::Index>(j)] / (radius * radius);
        if (c == d) {
          fit.fitted(a, b, c, d) = q;
        } else {
          fit.fitted(a, b, c, d) = 0.5 * q;
          fit.fitted(a, b, d, c) = 0.5 * q;
        }
      }
    }

  const Tensor4 R = chart.frame_riemann();
  fit.predicted = Tensor4(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          fit.predicted(a, b, c, d) = -(R(a, c, b, d) + R(a, d, b, c)) / 6.0;
          fit.max_deviation = std::max(fit.max_deviation, std::abs(fit.fitted(a, b, c, d) - fit.predicted(a, b, c, d)));
          fit.max_symmetry_defect = std::max({fit.max_symmetry_defect,
                                              std::abs(fit.fitted(a, b, c, d) - fit.fitted(b, a, c, d)),
                                              std::abs(fit.fitted(a, b, c, d) - fit.fitted(c, d, a, b))});
        }
  return fit;
}

DiffeoCheck diffeo_measure_check(const FieldGrid& grid, const Mat& v) {
  const ManifoldSpec& m = grid.manifold();
  const int n = m.dim;
  const auto cd = grid.covariant(v, 1);
  const auto P = grid.partials(v);
  DiffeoCheck out;
  const double dv = 1e-3 * std::max(v.cwiseAbs().maxCoeff(), 1e-3);
  const double dx = m.fd_step;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const CurvatureBundle& cb = grid.curvature(k);
    const Point x = grid.point(k);
    const Vec vk = v.col(kk);

    // dY/dv at fixed x: the 4th-order stencil is exact for the cubic map
    Mat Jv(n, n);
    for (int b = 0; b < n; ++b) {
      auto Y = [&](double t) {
        Vec w = vk;
        w[b] += t;
        return expand3_at(cb, x, w);
      };
      Jv.col(b) = (-Y(2 * dv) + 8 * Y(dv) - 8 * Y(-dv) + Y(-2 * dv)) / (12 * dv);
    }
    // dY/dX with the field continued linearly by its lattice derivatives
    Mat gradv(n, n);
    for (int c = 0; c < n; ++c) gradv.col(c) = P[static_cast<std::size_t>(c)].col(kk);
    const Mat Jx = fd_jacobian(
        [&](const Point& xp) {
          const Vec dxv = chart_delta(m, x, xp);
          return Vec(expand3_at(curvature_at(m, xp), xp, Vec(vk + gradv * dxv)));
        },
        x, dx);
    out.passive_numeric_logdet += logabsdet(Jv);
    out.spatial_logdet += logabsdet(Jx);

    const Mat& F = cd[k].first;
    const double ric = ricci_form(cb, vk, vk);
    out.covariant_formula_logdet += -F.trace() + 0.5 * (F * F).trace() + ric / 3.0;
    out.measured_noncovariant_jacobian -= -ric / 6.0;
    out.measured_noncovariant_volume -= F.trace() - 0.5 * (F * F).trace() - 0.5 * ric;

    // w_b = Gamma^c_cb and its formal covariant derivative w_b;a
    Vec w = Vec::Zero(n);
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) w[b] += cb.gamma(c, c, b);
    double lin = 0.0, quad_jac = 0.0, quad_vol = 0.0;
    for (int b = 0; b < n; ++b) lin -= w[b] * vk[b];
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        double wab = 0.0;  // w_b;a
        for (int c = 0; c < n; ++c) wab += cb.dgamma(c, c, b, a);
        for (int d = 0; d < n; ++d) wab -= cb.gamma(d, a, b) * w[d];
        quad_jac -= 0.5 * wab * vk[a] * vk[b];
        quad_vol -= 0.5 * wab * vk[b] * vk[a];
      }
    out.printed_noncovariant_jacobian += lin + quad_jac;
    out.printed_noncovariant_volume += lin + quad_vol;
  }
  out.measured_noncovariant_jacobian += out.passive_numeric_logdet;
  out.measured_noncovariant_volume += out.spatial_logdet;
  out.noncovariant_cancellation = out.measured_noncovariant_jacobian - out.measured_noncovariant_volume;
  out.residual = (out.passive_numeric_logdet - out.spatial_logdet) - out.covariant_formula_logdet;
  return out;
}

}  // namespace geodex
