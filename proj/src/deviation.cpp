#include "geodex/deviation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "geodex/error.hpp"
#include "geodex/geodesic.hpp"
#include "geodex/rng.hpp"

namespace geodex {

namespace {

using Index = Eigen::Index;

Index col(std::size_t k) { return static_cast<Index>(k); }

void require_shape(const Mat& m, Index rows, std::size_t cols, const char* what) {
  if (m.rows() != rows || m.cols() != col(cols))
    throw PreconditionError(std::string(what) + ": expected " + std::to_string(rows) + " x " + std::to_string(cols) +
                            " samples");
}

// Gamma~^mu_nu rho a^nu b^rho
Vec ambient_contract(const Tensor3& G, const Vec& a, const Vec& b) {
  const int D = G.dim();
  Vec out = Vec::Zero(D);
  for (int m = 0; m < D; ++m)
    for (int n = 0; n < D; ++n)
      for (int r = 0; r < D; ++r) out[m] += G(m, n, r) * a[n] * b[r];
  return out;
}

// R(a, b, c, e) with all four slots lowered.
double riemann4(const Tensor4& R, const Vec& a, const Vec& b, const Vec& c, const Vec& e) {
  const int D = R.dim();
  double s = 0.0;
  for (int m = 0; m < D; ++m)
    for (int n = 0; n < D; ++n)
      for (int l = 0; l < D; ++l)
        for (int r = 0; r < D; ++r) s += R(m, n, l, r) * a[m] * b[n] * c[l] * e[r];
  return s;
}

// nabla_b H^i_ac with the normal connection: [point][b*k + i] (d x d, indices a, c).
std::vector<std::vector<Mat>> shape_gradient(const Background& bg) {
  const int d = bg.dim(), k = bg.codim();
  const std::size_t N = bg.size();
  const auto& ext = bg.extrinsic();
  const auto& gam = bg.induced().gamma;
  const auto& grid = bg.immersion().grid();
  // rows: i*d*d + a*d + c
  Mat H(k * d * d, col(N));
  for (std::size_t p = 0; p < N; ++p)
    for (int i = 0; i < k; ++i)
      for (int a = 0; a < d; ++a)
        for (int c = 0; c < d; ++c) H(i * d * d + a * d + c, col(p)) = ext.H[p][i](a, c);
  std::vector<Mat> dH(d);
  for (int b = 0; b < d; ++b) dH[b] = grid_diff(grid, H, b);
  std::vector<std::vector<Mat>> out(N, std::vector<Mat>(d * k, Mat::Zero(d, d)));
  for (std::size_t p = 0; p < N; ++p)
    for (int b = 0; b < d; ++b)
      for (int i = 0; i < k; ++i) {
        Mat& M = out[p][b * k + i];
        for (int a = 0; a < d; ++a)
          for (int c = 0; c < d; ++c) {
            double v = dH[b](i * d * d + a * d + c, col(p));
            for (int e = 0; e < d; ++e)
              v -= gam[p](e, b, a) * ext.H[p][i](e, c) + gam[p](e, b, c) * ext.H[p][i](a, e);
            for (int j = 0; j < k; ++j) v += ext.A[p][b](i, j) * ext.H[p][j](a, c);
            M(a, c) = v;
          }
      }
  return out;
}

double hnorm(const Mat& h, const Vec& v) { return std::sqrt(std::max(0.0, v.dot(h * v))); }

}  // namespace

Background::Background(Immersion imm) : Background(imm, build_frame(imm)) {}

Background::Background(Immersion imm, Frame frame)
    : imm_(std::move(imm)), frame_(std::move(frame)), ext_(extrinsic_geometry(imm_, frame_)) {}

double Background::trust_radius() const {
  if (trust_ < 0.0) {
    const std::size_t N = size();
    const std::size_t stride = std::max<std::size_t>(1, N / 16);
    double r = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < N; p += stride) r = std::min(r, geodex::trust_radius(imm_.ambient(), imm_.position(p)));
    trust_ = r;
  }
  return trust_;
}

BackgroundPtr make_background(Immersion imm) { return std::make_shared<const Background>(std::move(imm)); }

const Mat& TermSet::term(const std::string& name) const {
  for (const auto& [n, m] : terms)
    if (n == name) return m;
  throw PreconditionError("no term named '" + name + "'");
}

bool TermSet::has(const std::string& name) const {
  return std::any_of(terms.begin(), terms.end(), [&](const auto& t) { return t.first == name; });
}

std::vector<Mat> ambient_gradient(const Background& bg, const Mat& field) {
  const int d = bg.dim();
  const std::size_t N = bg.size();
  require_shape(field, bg.ambient_dim(), N, "ambient_gradient");
  const auto& in = bg.induced();
  std::vector<Mat> out(d);
  for (int a = 0; a < d; ++a) {
    out[a] = grid_diff(bg.immersion().grid(), field, a);
    for (std::size_t p = 0; p < N; ++p)
      out[a].col(col(p)) += ambient_contract(in.ambient_gamma[p], in.tangents[p].col(a), field.col(col(p)));
  }
  return out;
}

std::vector<Mat> tangent_gradient(const Background& bg, const Mat& field) {
  const int d = bg.dim();
  const std::size_t N = bg.size();
  require_shape(field, d, N, "tangent_gradient");
  const auto& gam = bg.induced().gamma;
  std::vector<Mat> out(d);
  for (int b = 0; b < d; ++b) {
    out[b] = grid_diff(bg.immersion().grid(), field, b);
    for (std::size_t p = 0; p < N; ++p)
      for (int a = 0; a < d; ++a)
        for (int c = 0; c < d; ++c) out[b](a, col(p)) += gam[p](a, b, c) * field(c, col(p));
  }
  return out;
}

std::vector<Mat> normal_gradient(const Background& bg, const Mat& field) {
  const int d = bg.dim();
  const std::size_t N = bg.size();
  require_shape(field, bg.codim(), N, "normal_gradient");
  const auto& A = bg.extrinsic().A;
  std::vector<Mat> out(d);
  for (int b = 0; b < d; ++b) {
    out[b] = grid_diff(bg.immersion().grid(), field, b);
    for (std::size_t p = 0; p < N; ++p) out[b].col(col(p)) += A[p][b] * field.col(col(p));
  }
  return out;
}

DeviationField act_diffeo(const DeviationField& dev, const GeneratorField& eta, int order) {
  if (!dev.background) throw PreconditionError("act_diffeo: deviation field has no background");
  if (order < 1 || order > 3) throw PreconditionError("act_diffeo: order must be 1, 2 or 3");
  const Background& bg = *dev.background;
  const int D = bg.ambient_dim(), d = bg.dim(), k = bg.codim();
  const std::size_t N = bg.size();
  require_shape(dev.samples, D, N, "act_diffeo deviation");
  require_shape(eta.samples, d, N, "act_diffeo generator");
  const auto& in = bg.induced();
  const auto& ext = bg.extrinsic();
  const auto& normals = bg.frame().normals;
  const Mat& X = dev.samples;

  DeviationField out(dev.background, X, dev.scale);
  out.terms.terms.emplace_back("field", X);

  Mat shift(D, col(N));
  for (std::size_t p = 0; p < N; ++p) shift.col(col(p)) = in.tangents[p] * eta.samples.col(col(p));
  out.terms.terms.emplace_back("shift", shift);
  out.samples += shift;

  if (order >= 2) {
    auto grad = ambient_gradient(bg, X);
    Mat transport = Mat::Zero(D, col(N)), bending = Mat::Zero(D, col(N));
    for (std::size_t p = 0; p < N; ++p) {
      Vec e = eta.samples.col(col(p));
      for (int a = 0; a < d; ++a) transport.col(col(p)) += e[a] * grad[a].col(col(p));
      for (int i = 0; i < k; ++i) bending.col(col(p)) += 0.5 * e.dot(ext.H[p][i] * e) * normals[p].col(i);
    }
    out.terms.terms.emplace_back("transport", transport);
    out.terms.terms.emplace_back("bending", bending);
    out.samples += transport + bending;

    if (order >= 3) {
      const auto& gam = in.gamma;
      // 1/2 eta^a eta^b nabla_a nabla_b Xdot
      Mat second = Mat::Zero(D, col(N));
      std::vector<std::vector<Mat>> gg(d);
      for (int b = 0; b < d; ++b) gg[b] = ambient_gradient(bg, grad[b]);
      for (std::size_t p = 0; p < N; ++p) {
        Vec e = eta.samples.col(col(p));
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b) {
            Vec v = gg[b][a].col(col(p));
            for (int c = 0; c < d; ++c) v -= gam[p](c, a, b) * grad[c].col(col(p));
            second.col(col(p)) += 0.5 * e[a] * e[b] * v;
          }
      }

      // 1/6 eta^a eta^b eta^c nabla_a (H^i_bc N_i)
      Mat bendgrad = Mat::Zero(D, col(N));
      std::vector<Mat> HN(d * d, Mat::Zero(D, col(N)));
      for (std::size_t p = 0; p < N; ++p)
        for (int b = 0; b < d; ++b)
          for (int c = 0; c < d; ++c)
            for (int i = 0; i < k; ++i) HN[b * d + c].col(col(p)) += ext.H[p][i](b, c) * normals[p].col(i);
      std::vector<std::vector<Mat>> dHN(d * d);
      for (int bc = 0; bc < d * d; ++bc) dHN[bc] = ambient_gradient(bg, HN[bc]);
      for (std::size_t p = 0; p < N; ++p) {
        Vec e = eta.samples.col(col(p));
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b)
            for (int c = 0; c < d; ++c) {
              Vec v = dHN[b * d + c][a].col(col(p));
              for (int f = 0; f < d; ++f)
                v -= gam[p](f, a, b) * HN[f * d + c].col(col(p)) + gam[p](f, a, c) * HN[b * d + f].col(col(p));
              bendgrad.col(col(p)) += e[a] * e[b] * e[c] * v / 6.0;
            }
      }

      // 1/3 R~^mu_nu lambda rho (Xdot + eta.dX/2)^nu Xdot^lambda (eta.dX)^rho
      Mat curv = Mat::Zero(D, col(N));
      for (std::size_t p = 0; p < N; ++p) {
        Vec et = in.tangents[p] * eta.samples.col(col(p));
        Vec xd = X.col(col(p));
        Vec u = xd + 0.5 * et;
        Vec low(D);
        for (int m = 0; m < D; ++m) low[m] = riemann4(in.ambient_riemann[p], Vec::Unit(D, m), u, xd, et);
        Mat hinv = in.ambient_metric[p].inverse();
        curv.col(col(p)) = hinv * low / 3.0;
      }

      out.terms.terms.emplace_back("second_transport", second);
      out.terms.terms.emplace_back("bending_gradient", bendgrad);
      out.terms.terms.emplace_back("curvature", curv);
      out.samples += second + bendgrad + curv;
    }
  }

  double r = bg.trust_radius();
  for (std::size_t p = 0; p < N && !out.trust_violation; ++p)
    if (hnorm(in.ambient_metric[p], out.samples.col(col(p))) > r) out.trust_violation = true;
  return out;
}

Mat parameter_shift(const Background& bg, const GeneratorField& eta) {
  const int d = bg.dim();
  const std::size_t N = bg.size();
  require_shape(eta.samples, d, N, "parameter_shift");
  const auto& gam = bg.induced().gamma;
  Mat G(d * d * d, col(N));
  for (std::size_t p = 0; p < N; ++p)
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        for (int c = 0; c < d; ++c) G((a * d + b) * d + c, col(p)) = gam[p](a, b, c);
  std::vector<Mat> dG(d);
  for (int e = 0; e < d; ++e) dG[e] = grid_diff(bg.immersion().grid(), G, e);

  Mat out = eta.samples;
  for (std::size_t p = 0; p < N; ++p) {
    Vec e = eta.samples.col(col(p));
    for (int a = 0; a < d; ++a) {
      double s2 = 0.0, s3 = 0.0;
      for (int b = 0; b < d; ++b)
        for (int c = 0; c < d; ++c) {
          s2 += gam[p](a, b, c) * e[b] * e[c];
          for (int f = 0; f < d; ++f) {
            double t = -dG[f]((a * d + b) * d + c, col(p));
            for (int g = 0; g < d; ++g) t += 2.0 * gam[p](a, f, g) * gam[p](g, b, c);
            s3 += t * e[b] * e[c] * e[f];
          }
        }
      out(a, col(p)) += -0.5 * s2 + s3 / 6.0;
    }
  }
  return out;
}

XiDecomposition decompose(const DeviationField& dev) {
  if (!dev.background) throw PreconditionError("decompose: deviation field has no background");
  const Background& bg = *dev.background;
  const int d = bg.dim(), k = bg.codim();
  const std::size_t N = bg.size();
  require_shape(dev.samples, bg.ambient_dim(), N, "decompose");
  const auto& in = bg.induced();
  XiDecomposition xi{dev.background, Mat(d, col(N)), Mat(d, col(N)), Mat(k, col(N)), {}};
  for (std::size_t p = 0; p < N; ++p) {
    Vec hx = in.ambient_metric[p] * dev.samples.col(col(p));
    xi.tangential_lower.col(col(p)) = in.tangents[p].transpose() * hx;
    xi.tangential.col(col(p)) = in.inverse[p] * xi.tangential_lower.col(col(p));
    xi.normal.col(col(p)) = bg.frame().normals[p].transpose() * hx;
  }
  return xi;
}

DeviationField recompose(const XiDecomposition& xi) {
  if (!xi.background) throw PreconditionError("recompose: decomposition has no background");
  const Background& bg = *xi.background;
  const std::size_t N = bg.size();
  require_shape(xi.tangential, bg.dim(), N, "recompose tangential");
  require_shape(xi.normal, bg.codim(), N, "recompose normal");
  Mat X(bg.ambient_dim(), col(N));
  for (std::size_t p = 0; p < N; ++p)
    X.col(col(p)) = bg.induced().tangents[p] * xi.tangential.col(col(p)) +
                    bg.frame().normals[p] * xi.normal.col(col(p));
  return DeviationField(xi.background, std::move(X));
}

XiDecomposition make_xi(BackgroundPtr bg, Mat tangential, Mat normal) {
  if (!bg) throw PreconditionError("make_xi: no background");
  const std::size_t N = bg->size();
  require_shape(tangential, bg->dim(), N, "make_xi tangential");
  require_shape(normal, bg->codim(), N, "make_xi normal");
  Mat lower(bg->dim(), col(N));
  for (std::size_t p = 0; p < N; ++p) lower.col(col(p)) = bg->induced().metric[p] * tangential.col(col(p));
  return XiDecomposition{std::move(bg), std::move(lower), std::move(tangential), std::move(normal), {}};
}

XiDecomposition xi_transform(const XiDecomposition& xi, const GeneratorField& eta, int tangential_order,
                             int normal_order) {
  if (!xi.background) throw PreconditionError("xi_transform: decomposition has no background");
  if (tangential_order < 1 || tangential_order > 3) throw PreconditionError("xi_transform: tangential order 1..3");
  if (normal_order < 1 || normal_order > 2) throw PreconditionError("xi_transform: normal order 1..2");
  const Background& bg = *xi.background;
  const int d = bg.dim(), k = bg.codim();
  const std::size_t N = bg.size();
  require_shape(eta.samples, d, N, "xi_transform generator");
  const auto& in = bg.induced();
  const auto& ext = bg.extrinsic();
  const auto& gam = in.gamma;

  Mat T = xi.tangential + eta.samples;
  Mat Nrm = xi.normal;
  TermSet terms;
  terms.terms.emplace_back("tangential.field", xi.tangential);
  terms.terms.emplace_back("tangential.shift", eta.samples);
  terms.terms.emplace_back("normal.field", xi.normal);

  const bool need_grad = tangential_order >= 2 || normal_order >= 2;
  std::vector<Mat> gt, gn;
  if (need_grad) {
    gt = tangent_gradient(bg, xi.tangential);
    gn = normal_gradient(bg, xi.normal);
  }
  // eta^b nabla_b xi^i, reused by the third-order tangential term
  Mat eta_gn = Mat::Zero(k, col(N));
  if (need_grad)
    for (std::size_t p = 0; p < N; ++p)
      for (int b = 0; b < d; ++b) eta_gn.col(col(p)) += eta.samples(b, col(p)) * gn[b].col(col(p));

  if (tangential_order >= 2) {
    Mat transport = Mat::Zero(d, col(N)), mixing = Mat::Zero(d, col(N));
    for (std::size_t p = 0; p < N; ++p) {
      Vec e = eta.samples.col(col(p));
      for (int b = 0; b < d; ++b) transport.col(col(p)) += e[b] * gt[b].col(col(p));
      for (int i = 0; i < k; ++i) mixing.col(col(p)) -= xi.normal(i, col(p)) * (in.inverse[p] * ext.H[p][i] * e);
    }
    terms.terms.emplace_back("tangential.transport", transport);
    terms.terms.emplace_back("tangential.mixing", mixing);
    T += transport + mixing;
  }

  if (tangential_order >= 3) {
    Mat second = Mat::Zero(d, col(N)), hgrad = Mat::Zero(d, col(N)), cubic = Mat::Zero(d, col(N));
    Mat shape = Mat::Zero(d, col(N)), curv = Mat::Zero(d, col(N));
    std::vector<std::vector<Mat>> ggt(d);
    for (int c = 0; c < d; ++c) ggt[c] = tangent_gradient(bg, gt[c]);
    auto dH = shape_gradient(bg);
    for (std::size_t p = 0; p < N; ++p) {
      Vec e = eta.samples.col(col(p));
      const Mat& gi = in.inverse[p];
      for (int b = 0; b < d; ++b)
        for (int c = 0; c < d; ++c) {
          Vec v = ggt[c][b].col(col(p));
          for (int f = 0; f < d; ++f) v -= gam[p](f, b, c) * gt[f].col(col(p));
          second.col(col(p)) += 0.5 * e[b] * e[c] * v;
        }
      for (int i = 0; i < k; ++i) {
        Mat eb(d, d);
        for (int b = 0; b < d; ++b) eb.row(b) = (dH[p][b * k + i] * e).transpose();  // (b, a): nabla_b H_ac eta^c
        // -1/2 eta^b eta^c xi^i nabla_b H^a_ic
        hgrad.col(col(p)) -= 0.5 * xi.normal(i, col(p)) * (gi * (eb.transpose() * e));
        Vec He = gi * ext.H[p][i] * e;
        cubic.col(col(p)) -= He * e.dot(ext.H[p][i] * e) / 6.0;
        Vec xs = xi.tangential.col(col(p));
        double s = eta_gn(i, col(p)) + 0.5 * e.dot(ext.H[p][i] * xs);
        shape.col(col(p)) -= He * s;
      }
      const Mat& Tn = in.tangents[p];
      Vec xd = Tn * xi.tangential.col(col(p)) + bg.frame().normals[p] * xi.normal.col(col(p));
      Vec et = Tn * e;
      Vec u = xd + 0.5 * et;
      Vec low(d);
      for (int b = 0; b < d; ++b) low[b] = riemann4(in.ambient_riemann[p], Tn.col(b), u, xd, et);
      curv.col(col(p)) = gi * low / 3.0;
    }
    terms.terms.emplace_back("tangential.second_transport", second);
    terms.terms.emplace_back("tangential.shape_gradient", hgrad);
    terms.terms.emplace_back("tangential.shape_cubic", cubic);
    terms.terms.emplace_back("tangential.shape_transport", shape);
    terms.terms.emplace_back("tangential.curvature", curv);
    T += second + hgrad + cubic + shape + curv;
  }

  if (normal_order >= 2) {
    Mat mixing(k, col(N)), bending(k, col(N));
    for (std::size_t p = 0; p < N; ++p) {
      Vec e = eta.samples.col(col(p));
      Vec xs = xi.tangential.col(col(p));
      for (int i = 0; i < k; ++i) {
        mixing(i, col(p)) = e.dot(ext.H[p][i] * xs);
        bending(i, col(p)) = 0.5 * e.dot(ext.H[p][i] * e);
      }
    }
    terms.terms.emplace_back("normal.transport", eta_gn);
    terms.terms.emplace_back("normal.mixing", mixing);
    terms.terms.emplace_back("normal.bending", bending);
    Nrm += eta_gn + mixing + bending;
  }

  XiDecomposition out = make_xi(xi.background, std::move(T), std::move(Nrm));
  out.terms = std::move(terms);
  return out;
}

Mat xi_invariant(const XiDecomposition& xi) {
  if (!xi.background) throw PreconditionError("xi_invariant: decomposition has no background");
  const Background& bg = *xi.background;
  const int d = bg.dim(), k = bg.codim();
  const std::size_t N = bg.size();
  auto gn = normal_gradient(bg, xi.normal);
  Mat out = xi.normal;
  for (std::size_t p = 0; p < N; ++p) {
    Vec xs = xi.tangential.col(col(p));
    for (int a = 0; a < d; ++a) out.col(col(p)) -= xs[a] * gn[a].col(col(p));
    for (int i = 0; i < k; ++i) out(i, col(p)) -= 0.5 * xs.dot(bg.extrinsic().H[p][i] * xs);
  }
  return out;
}

GeneratorField gauge_generator(const XiDecomposition& xi, bool second_order) {
  if (!xi.background) throw PreconditionError("gauge_generator: decomposition has no background");
  GeneratorField eta{-xi.tangential};
  if (!second_order) return eta;
  const Background& bg = *xi.background;
  const int d = bg.dim(), k = bg.codim();
  auto gt = tangent_gradient(bg, xi.tangential);
  for (std::size_t p = 0; p < bg.size(); ++p) {
    Vec xs = xi.tangential.col(col(p));
    for (int b = 0; b < d; ++b) eta.samples.col(col(p)) += xs[b] * gt[b].col(col(p));
    for (int i = 0; i < k; ++i)
      eta.samples.col(col(p)) -= xi.normal(i, col(p)) * (bg.induced().inverse[p] * bg.extrinsic().H[p][i] * xs);
  }
  return eta;
}

double tangential_norm(const XiDecomposition& xi) {
  if (!xi.background) throw PreconditionError("tangential_norm: decomposition has no background");
  double m = 0.0;
  for (std::size_t p = 0; p < xi.background->size(); ++p)
    m = std::max(m, hnorm(xi.background->induced().metric[p], xi.tangential.col(col(p))));
  return m;
}

Mat FourierField::sample(const Lattice& grid) const {
  const int d = grid.dim();
  Mat out = Mat::Zero(components, col(grid.size()));
  for (const auto& mode : modes) {
    if (static_cast<int>(mode.m.size()) != d) throw PreconditionError("Fourier mode dimension does not match the grid");
    if (mode.cos_coeff.size() != components || mode.sin_coeff.size() != components)
      throw PreconditionError("Fourier mode coefficients must have one entry per component");
  }
  for (std::size_t p = 0; p < grid.size(); ++p) {
    Point s = grid.point(p);
    for (const auto& mode : modes) {
      double ph = 0.0;
      for (int a = 0; a < d; ++a) ph += 2.0 * std::numbers::pi * mode.m[a] * s[a] / grid.period(a);
      out.col(col(p)) += std::cos(ph) * mode.cos_coeff + std::sin(ph) * mode.sin_coeff;
    }
  }
  return out;
}

FourierField FourierField::random(int components, int dim, int max_mode, double amplitude, std::uint64_t seed) {
  if (components < 1 || dim < 1 || max_mode < 0) throw PreconditionError("FourierField::random: bad shape");
  Rng rng(seed);
  FourierField f;
  f.components = components;
  std::vector<int> m(dim, -max_mode);
  for (;;) {
    // keep one of each +-m pair: first nonzero entry positive
    int lead = 0;
    for (int a = 0; a < dim && lead == 0; ++a) lead = m[a];
    if (lead >= 0) {
      int n2 = 0;
      for (int v : m) n2 += v * v;
      double s = amplitude / (1.0 + n2);
      FourierMode mode{m, Vec(components), Vec::Zero(components)};
      for (int c = 0; c < components; ++c) mode.cos_coeff[c] = s * rng.uniform(-1.0, 1.0);
      if (lead > 0)
        for (int c = 0; c < components; ++c) mode.sin_coeff[c] = s * rng.uniform(-1.0, 1.0);
      f.modes.push_back(std::move(mode));
    }
    int a = dim - 1;
    while (a >= 0 && m[a] == max_mode) m[a--] = -max_mode;
    if (a < 0) break;
    ++m[a];
  }
  return f;
}

}  // namespace geodex
