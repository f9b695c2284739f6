#include "geodex/gauge.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "geodex/error.hpp"

namespace geodex {

namespace {

using Index = Eigen::Index;
Index col(std::size_t k) { return static_cast<Index>(k); }

double riemann4(const Tensor4& R, const Vec& a, const Vec& b, const Vec& c, const Vec& e) {
  const int D = R.dim();
  double s = 0.0;
  for (int m = 0; m < D; ++m)
    for (int n = 0; n < D; ++n)
      for (int l = 0; l < D; ++l)
        for (int r = 0; r < D; ++r) s += R(m, n, l, r) * a[m] * b[n] * c[l] * e[r];
  return s;
}

// R~(d^a X, N_i, d_a X, N_j)
double tangential_projection(const InducedMetric& in, const Mat& normals, std::size_t p, int i, int j) {
  const int d = static_cast<int>(in.metric[p].rows());
  double s = 0.0;
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      s += in.inverse[p](a, b) *
           riemann4(in.ambient_riemann[p], in.tangents[p].col(a), normals.col(i), in.tangents[p].col(b), normals.col(j));
  return s;
}

// sum_k R~(N_k, N_i, N_k, N_j)
double normal_projection(const InducedMetric& in, const Mat& normals, std::size_t p, int i, int j) {
  double s = 0.0;
  for (Index k = 0; k < normals.cols(); ++k)
    s += riemann4(in.ambient_riemann[p], normals.col(k), normals.col(i), normals.col(k), normals.col(j));
  return s;
}

// R~_mu nu a^mu b^nu with R_mu nu = h^{lambda sigma} R_sigma mu lambda nu
double ambient_ricci(const InducedMetric& in, std::size_t p, const Vec& a, const Vec& b) {
  const Tensor4& R = in.ambient_riemann[p];
  const int D = R.dim();
  Mat hinv = in.ambient_metric[p].inverse();
  double s = 0.0;
  for (int sg = 0; sg < D; ++sg)
    for (int l = 0; l < D; ++l) {
      if (hinv(sg, l) == 0.0) continue;
      for (int m = 0; m < D; ++m)
        for (int n = 0; n < D; ++n) s += hinv(sg, l) * R(sg, m, l, n) * a[m] * b[n];
    }
  return s;
}

// (1/N) integral of f sqrt(g) over the image
double integrate_density(const Background& bg, std::vector<double> f) {
  const auto& imm = bg.immersion();
  for (std::size_t p = 0; p < f.size(); ++p) f[p] *= bg.induced().sqrt_det[p] / imm.normalization();
  return imm.integrate(f);
}

FunctionalWeight blank(const Background& bg) {
  FunctionalWeight w;
  w.normalization = bg.immersion().normalization();
  for (int a = 0; a < bg.dim(); ++a) w.grid.push_back(bg.immersion().grid().count(a));
  return w;
}

// sum over points of log(sqrt g / N)
double log_volume_sum(const Background& bg) {
  double s = 0.0;
  for (double sg : bg.induced().sqrt_det) s += std::log(sg / bg.immersion().normalization());
  return s;
}

double log_sqrt_g_sum(const Background& bg) {
  double s = 0.0;
  for (double sg : bg.induced().sqrt_det) s += std::log(sg);
  return s;
}

}  // namespace

double FunctionalWeight::term(const std::string& name) const {
  for (const auto& [n, v] : breakdown)
    if (n == name) return v;
  throw PreconditionError("no weight term named '" + name + "'");
}

void FunctionalWeight::add(std::string name, double value) {
  breakdown.emplace_back(std::move(name), value);
  log_density += value;
}

FunctionalWeight functional_right_measure_log(const DeviationField& dev) {
  if (!dev.background) throw PreconditionError("functional_right_measure_log: no background");
  const Background& bg = *dev.background;
  const std::size_t N = bg.size();
  if (dev.samples.rows() != bg.ambient_dim() || dev.samples.cols() != col(N))
    throw PreconditionError("functional_right_measure_log: samples must be D x grid size");
  const auto& in = bg.induced();
  std::vector<double> ric(N);
  double logh = 0.0;
  for (std::size_t p = 0; p < N; ++p) {
    Vec x = dev.samples.col(col(p));
    ric[p] = -ambient_ricci(in, p, x, x) / 6.0;
    logh += 0.5 * std::log(std::abs(in.ambient_metric[p].determinant()));
  }
  FunctionalWeight w = blank(bg);
  w.add("ricci", integrate_density(bg, ric));
  w.add("prefactor_metric", logh);
  w.add("prefactor_volume", 0.5 * bg.ambient_dim() * log_volume_sum(bg));
  return w;
}

FunctionalWeight eta_measure_log(const GeneratorField& eta, const Background& bg) {
  const int d = bg.dim();
  const std::size_t N = bg.size();
  if (eta.samples.rows() != d || eta.samples.cols() != col(N))
    throw PreconditionError("eta_measure_log: generator must be d x grid size");
  auto grad = tangent_gradient(bg, eta.samples);  // grad[b](a, p) = nabla_b eta^a
  std::vector<double> div(N), quad(N), ric(N);
  for (std::size_t p = 0; p < N; ++p) {
    double dv = 0.0, q = 0.0;
    for (int a = 0; a < d; ++a) {
      dv += grad[a](a, col(p));
      for (int b = 0; b < d; ++b) q += grad[a](b, col(p)) * grad[b](a, col(p));
    }
    Vec e = eta.samples.col(col(p));
    div[p] = -dv;
    quad[p] = 0.5 * q;
    ric[p] = e.dot(bg.induced().ricci[p] * e) / 3.0;
  }
  FunctionalWeight w = blank(bg);
  w.add("divergence", integrate_density(bg, div));
  w.add("quadratic", integrate_density(bg, quad));
  w.add("ricci", integrate_density(bg, ric));
  w.add("prefactor_metric", log_sqrt_g_sum(bg));
  w.add("prefactor_volume", 0.5 * d * log_volume_sum(bg));
  return w;
}

FunctionalWeight fp_log_determinant(const XiDecomposition& xi) {
  if (!xi.background) throw PreconditionError("fp_log_determinant: no background");
  const Background& bg = *xi.background;
  const int k = bg.codim();
  const std::size_t N = bg.size();
  const auto& in = bg.induced();
  const auto& ext = bg.extrinsic();
  Mat x0 = xi_invariant(xi);
  std::vector<double> mean(N), shape(N), curv(N);
  for (std::size_t p = 0; p < N; ++p) {
    double m = 0.0, s = 0.0, c = 0.0;
    for (int i = 0; i < k; ++i) {
      m += -2.0 * ext.mean(i, col(p)) * x0(i, col(p));
      for (int j = 0; j < k; ++j) {
        double xx = xi.normal(i, col(p)) * xi.normal(j, col(p));
        double hh = (in.inverse[p] * ext.H[p][i] * in.inverse[p] * ext.H[p][j].transpose()).trace();
        s += -0.5 * hh * xx;
        c += -tangential_projection(in, bg.frame().normals[p], p, i, j) * xx / 3.0;
      }
    }
    mean[p] = m;
    shape[p] = s;
    curv[p] = c;
  }
  FunctionalWeight w = blank(bg);
  w.frame_signs = bg.frame().signs;
  w.add("mean_curvature", integrate_density(bg, mean));
  w.add("shape_quadratic", integrate_density(bg, shape));
  w.add("curvature", integrate_density(bg, curv));
  return w;
}

FrameJacobian frame_jacobian_check(const Immersion& imm, const Frame& frame) {
  const auto& in = frame.induced;
  const int D = imm.ambient_dim(), d = imm.dim();
  FrameJacobian out;
  int sign = 0;
  bool mixed = false;
  for (std::size_t p = 0; p < imm.size(); ++p) {
    Mat A(D, D);
    A.leftCols(d) = in.tangents[p];
    A.rightCols(D - d) = frame.normals[p];
    double det = A.determinant();
    double ratio = std::sqrt(in.metric[p].determinant() / in.ambient_metric[p].determinant());
    out.det_a.push_back(det);
    out.sqrt_g_over_h.push_back(ratio);
    out.max_residual = std::max(out.max_residual, std::abs(std::abs(det) - ratio));
    int s = det > 0 ? 1 : -1;
    if (sign == 0) sign = s;
    if (s != sign) mixed = true;
  }
  out.orientation = mixed ? 0 : sign;
  return out;
}

FunctionalWeight gauge_fixed_log_integrand(const XiDecomposition& xi) {
  if (!xi.background) throw PreconditionError("gauge_fixed_log_integrand: no background");
  const Background& bg = *xi.background;
  const int k = bg.codim();
  const std::size_t N = bg.size();
  double scale = 1.0 + (xi.normal.size() ? xi.normal.cwiseAbs().maxCoeff() : 0.0);
  if (xi.tangential.size() && xi.tangential.cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw PreconditionError("gauge_fixed_log_integrand: tangential components must vanish (gauge xi_alpha = 0)");
  const auto& in = bg.induced();
  const auto& ext = bg.extrinsic();
  std::vector<double> mean(N), shape(N), ct(N), cn(N);
  for (std::size_t p = 0; p < N; ++p) {
    const Mat& nm = bg.frame().normals[p];
    double m = 0.0, s = 0.0, a = 0.0, b = 0.0;
    for (int i = 0; i < k; ++i) {
      m += -2.0 * ext.mean(i, col(p)) * xi.normal(i, col(p));
      for (int j = 0; j < k; ++j) {
        double xx = xi.normal(i, col(p)) * xi.normal(j, col(p));
        double hh = (in.inverse[p] * ext.H[p][i] * in.inverse[p] * ext.H[p][j].transpose()).trace();
        s += -0.5 * hh * xx;
        a += -0.5 * tangential_projection(in, nm, p, i, j) * xx;
        b += -normal_projection(in, nm, p, i, j) * xx / 6.0;
      }
    }
    mean[p] = m;
    shape[p] = s;
    ct[p] = a;
    cn[p] = b;
  }
  FunctionalWeight w = blank(bg);
  w.frame_signs = bg.frame().signs;
  w.add("mean_curvature", integrate_density(bg, mean));
  w.add("shape_quadratic", integrate_density(bg, shape));
  w.add("curvature_tangential", integrate_density(bg, ct));
  w.add("curvature_normal", integrate_density(bg, cn));
  w.add("prefactor", 0.5 * k * log_volume_sum(bg));
  return w;
}

PipelineCheck pipeline_identity(const XiDecomposition& xi) {
  if (!xi.background) throw PreconditionError("pipeline_identity: no background");
  const Background& bg = *xi.background;
  PipelineCheck c;
  c.gauge = gauge_fixed_log_integrand(xi);
  c.right = functional_right_measure_log(recompose(xi));
  c.fp = fp_log_determinant(xi);
  auto fj = frame_jacobian_check(bg.immersion(), bg.frame());
  for (double a : fj.det_a) c.frame_jacobian += std::log(std::abs(a));
  c.delta_prefactor = -(log_sqrt_g_sum(bg) + 0.5 * bg.dim() * log_volume_sum(bg));

  auto add = [&](std::string name, double r) {
    c.residuals.emplace_back(std::move(name), r);
    c.max_residual = std::max(c.max_residual, std::abs(r));
  };
  add("mean_curvature", c.gauge.term("mean_curvature") - c.fp.term("mean_curvature"));
  add("shape_quadratic", c.gauge.term("shape_quadratic") - c.fp.term("shape_quadratic"));
  add("ambient_curvature", c.gauge.term("curvature_tangential") + c.gauge.term("curvature_normal") -
                               c.fp.term("curvature") - c.right.term("ricci"));
  double pre = c.right.term("prefactor_metric") + c.right.term("prefactor_volume") + c.frame_jacobian + c.delta_prefactor;
  add("prefactor", c.gauge.term("prefactor") - pre);
  return c;
}

double nambu_goto_action(const Immersion& imm) {
  auto T = tangent_vectors(imm);
  std::vector<Mat> g(imm.size());
  double scale = 0.0;
  for (std::size_t p = 0; p < imm.size(); ++p) {
    g[p] = T[p].transpose() * metric_at(imm.ambient(), imm.position(p)).h * T[p];
    scale = std::max(scale, std::abs(g[p].trace()));
  }
  std::vector<double> f(imm.size());
  for (std::size_t p = 0; p < imm.size(); ++p) {
    Eigen::SelfAdjointEigenSolver<Mat> es(g[p], Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 1e-12 * scale) {
      std::ostringstream os;
      os << "nambu_goto_action: degenerate induced metric at sigma = (" << imm.grid().point(p).transpose() << ")";
      throw SignatureError(os.str());
    }
    f[p] = std::sqrt(std::abs(g[p].determinant())) / imm.normalization();
  }
  return imm.integrate(f);
}

Mat normal_laplacian(const Background& bg, const Mat& xi_normal) {
  const int d = bg.dim();
  const std::size_t N = bg.size();
  auto G = normal_gradient(bg, xi_normal);
  std::vector<std::vector<Mat>> GG(d);
  for (int b = 0; b < d; ++b) GG[b] = normal_gradient(bg, G[b]);
  const auto& in = bg.induced();
  Mat out = Mat::Zero(bg.codim(), col(N));
  for (std::size_t p = 0; p < N; ++p)
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        Vec v = GG[b][a].col(col(p));
        for (int c = 0; c < d; ++c) v -= in.gamma[p](c, a, b) * G[c].col(col(p));
        out.col(col(p)) += in.inverse[p](a, b) * v;
      }
  return out;
}

ActionExpansion action_expansion(const XiDecomposition& xi) {
  if (!xi.background) throw PreconditionError("action_expansion: no background");
  const Background& bg = *xi.background;
  const int k = bg.codim();
  const std::size_t N = bg.size();
  const auto& in = bg.induced();
  const auto& ext = bg.extrinsic();
  Mat x0 = xi_invariant(xi);
  Mat lap = normal_laplacian(bg, xi.normal);
  std::vector<double> one(N, 1.0), lin(N), quad(N);
  for (std::size_t p = 0; p < N; ++p) {
    double l = 0.0, q = 0.0;
    for (int j = 0; j < k; ++j) {
      l += -2.0 * ext.mean(j, col(p)) * x0(j, col(p));
      double op = lap(j, col(p));
      for (int i = 0; i < k; ++i) {
        double hh = (in.inverse[p] * ext.H[p][j] * in.inverse[p] * ext.H[p][i].transpose()).trace();
        double c = hh - 4.0 * ext.mean(j, col(p)) * ext.mean(i, col(p)) +
                   tangential_projection(in, bg.frame().normals[p], p, j, i);
        op += c * xi.normal(i, col(p));
      }
      q += -0.5 * xi.normal(j, col(p)) * op;
    }
    lin[p] = l;
    quad[p] = q;
  }
  ActionExpansion a;
  a.area = integrate_density(bg, one);
  a.linear = integrate_density(bg, lin);
  a.quadratic = integrate_density(bg, quad);
  a.value = a.area + a.linear + a.quadratic;
  return a;
}

std::string to_csv(const FunctionalWeight& w) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "term,value\n";
  for (const auto& [n, v] : w.breakdown) os << n << ',' << v << '\n';
  os << "log_density," << w.log_density << '\n';
  return os.str();
}

}  // namespace geodex
