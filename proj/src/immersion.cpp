#include "geodex/immersion.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <sstream>

#include "geodex/error.hpp"

namespace geodex {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// A seed is usable on the whole grid if its normal projection never drops below
// this fraction of its length; pointwise it only has to clear kSeedDegenerate.
constexpr double kSeedGlobal = 0.1;
constexpr double kSeedDegenerate = 1e-3;

std::string describe(const Point& x) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

double hdot(const Mat& h, const Vec& a, const Vec& b) { return a.dot(h * b); }

}  // namespace

ParameterGrid parameter_grid(std::vector<int> counts, std::vector<double> periods, bool cell_centred) {
  std::vector<double> origin(counts.size(), 0.0);
  return Lattice(std::move(counts), std::move(origin), std::move(periods), DiffScheme::central4, cell_centred);
}

Immersion::Immersion(std::string name, ManifoldSpec ambient, ParameterGrid grid, Mat samples, Mat winding,
                     double normalization, int sheets)
    : name_(std::move(name)),
      ambient_(std::move(ambient)),
      grid_(std::move(grid)),
      samples_(std::move(samples)),
      winding_(std::move(winding)),
      normalization_(normalization),
      sheets_(sheets) {
  const int D = ambient_.dim, d = grid_.dim();
  if (d < 1 || d > 2) throw PreconditionError(name_ + ": parameter dimension must be 1 or 2");
  if (D <= d) throw PreconditionError(name_ + ": ambient dimension must exceed the parameter dimension");
  if (samples_.rows() != D || samples_.cols() != static_cast<Eigen::Index>(grid_.size()))
    throw PreconditionError(name_ + ": samples must be D x grid size");
  if (winding_.size() == 0) winding_ = Mat::Zero(D, d);
  if (winding_.rows() != D || winding_.cols() != d) throw PreconditionError(name_ + ": winding must be D x d");
  if (!(normalization_ > 0.0)) throw PreconditionError(name_ + ": normalization must be positive");
  if (sheets_ < 1) throw PreconditionError(name_ + ": sheets must be at least 1");
  for (std::size_t k = 0; k < grid_.size(); ++k)
    if (!ambient_.contains(position(k)))
      throw DomainError(name_ + ": sample at sigma = " + describe(grid_.point(k)) + " leaves the ambient chart");
}

Immersion Immersion::from_function(std::string name, ManifoldSpec ambient, ParameterGrid grid,
                                   const std::function<Vec(const Point&)>& X, Mat winding, double normalization,
                                   int sheets) {
  Mat s(ambient.dim, static_cast<Eigen::Index>(grid.size()));
  for (std::size_t k = 0; k < grid.size(); ++k) s.col(static_cast<Eigen::Index>(k)) = X(grid.point(k));
  return Immersion(std::move(name), std::move(ambient), std::move(grid), std::move(s), std::move(winding),
                   normalization, sheets);
}

double Immersion::integrate(std::span<const double> f) const { return grid_.integrate(f) / sheets_; }

Mat Immersion::periodic_part() const {
  Mat p = samples_;
  for (std::size_t k = 0; k < size(); ++k)
    p.col(static_cast<Eigen::Index>(k)) -= winding_ * grid_.point(k);
  return p;
}

Point Immersion::evaluate(const Point& sigma) const {
  const Mat p = periodic_part();
  Point x(ambient_dim());
  std::vector<double> row(size());
  for (int mu = 0; mu < ambient_dim(); ++mu) {
    for (std::size_t k = 0; k < size(); ++k) row[k] = p(mu, static_cast<Eigen::Index>(k));
    x[mu] = grid_.interpolate(row, sigma);
  }
  return x + winding_ * sigma;
}

Immersion Immersion::with_samples(Mat samples) const {
  return Immersion(name_, ambient_, grid_, std::move(samples), winding_, normalization_, sheets_);
}

Mat grid_diff(const Lattice& grid, const Mat& field, int axis) {
  Mat out(field.rows(), field.cols());
  std::vector<double> row(static_cast<std::size_t>(field.cols()));
  for (Eigen::Index r = 0; r < field.rows(); ++r) {
    for (Eigen::Index k = 0; k < field.cols(); ++k) row[static_cast<std::size_t>(k)] = field(r, k);
    auto dr = grid.diff(row, axis);
    for (Eigen::Index k = 0; k < field.cols(); ++k) out(r, k) = dr[static_cast<std::size_t>(k)];
  }
  return out;
}

std::vector<Mat> tangent_vectors(const Immersion& imm) {
  const int D = imm.ambient_dim(), d = imm.dim();
  const Mat p = imm.periodic_part();
  std::vector<Mat> T(imm.size(), Mat(D, d));
  for (int a = 0; a < d; ++a) {
    Mat dp = grid_diff(imm.grid(), p, a);
    for (std::size_t k = 0; k < imm.size(); ++k)
      T[k].col(a) = dp.col(static_cast<Eigen::Index>(k)) + imm.winding().col(a);
  }
  return T;
}

InducedMetric induced_metric(const Immersion& imm) {
  const int D = imm.ambient_dim(), d = imm.dim();
  const std::size_t N = imm.size();
  const auto& grid = imm.grid();
  InducedMetric out;
  out.tangents = tangent_vectors(imm);
  out.metric.resize(N);
  out.inverse.resize(N);
  out.sqrt_det.resize(N);
  out.ambient_metric.resize(N);
  out.ambient_gamma.resize(N);
  out.ambient_riemann.resize(N);

  Mat G(d * d, static_cast<Eigen::Index>(N));
  for (std::size_t k = 0; k < N; ++k) {
    CurvatureBundle cb = curvature_at(imm.ambient(), imm.position(k));
    out.ambient_metric[k] = cb.metric;
    out.ambient_gamma[k] = cb.gamma;
    Tensor4 Rl(D);
    for (int a = 0; a < D; ++a)
      for (int b = 0; b < D; ++b)
        for (int c = 0; c < D; ++c)
          for (int e = 0; e < D; ++e) Rl(a, b, c, e) = cb.riemann_lower(a, b, c, e);
    out.ambient_riemann[k] = std::move(Rl);

    const Mat& T = out.tangents[k];
    Mat g = T.transpose() * cb.metric * T;
    g = 0.5 * (g + g.transpose());
    out.metric[k] = g;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) G(a * d + b, static_cast<Eigen::Index>(k)) = g(a, b);
  }
  // Degeneracy is judged against the largest metric eigenvalue on the grid.
  double scale = 0.0;
  for (const auto& g : out.metric) scale = std::max(scale, g.trace());
  for (std::size_t k = 0; k < N; ++k) {
    const Mat& g = out.metric[k];
    Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
    if (!std::isfinite(g.sum()) || !(es.eigenvalues()[0] > 1e-12 * scale))
      throw SignatureError(imm.name() + ": irregular immersion at sigma = " + describe(grid.point(k)));
    out.inverse[k] = g.llt().solve(Mat::Identity(d, d));
    out.sqrt_det[k] = std::sqrt(g.determinant());
  }

  std::vector<Mat> dG(static_cast<std::size_t>(d));
  std::vector<std::vector<Mat>> ddG(static_cast<std::size_t>(d), std::vector<Mat>(static_cast<std::size_t>(d)));
  for (int c = 0; c < d; ++c) dG[static_cast<std::size_t>(c)] = grid_diff(grid, G, c);
  for (int c = 0; c < d; ++c)
    for (int e = c; e < d; ++e) {
      ddG[static_cast<std::size_t>(c)][static_cast<std::size_t>(e)] = grid_diff(grid, dG[static_cast<std::size_t>(c)], e);
      ddG[static_cast<std::size_t>(e)][static_cast<std::size_t>(c)] = ddG[static_cast<std::size_t>(c)][static_cast<std::size_t>(e)];
    }

  out.gamma.resize(N);
  out.riemann.resize(N);
  out.ricci.resize(N);
  out.scalar.resize(N);
  for (std::size_t k = 0; k < N; ++k) {
    const auto K = static_cast<Eigen::Index>(k);
    auto dg = [&](int a, int b, int c) { return dG[static_cast<std::size_t>(c)](a * d + b, K); };
    auto ddg = [&](int a, int b, int c, int e) {
      return ddG[static_cast<std::size_t>(c)][static_cast<std::size_t>(e)](a * d + b, K);
    };
    const Mat& gi = out.inverse[k];
    Tensor3 low(d), gam(d);
    for (int e = 0; e < d; ++e)
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) low(e, a, b) = 0.5 * (dg(e, a, b) + dg(e, b, a) - dg(a, b, e));
    for (int c = 0; c < d; ++c)
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
          double s = 0.0;
          for (int e = 0; e < d; ++e) s += gi(c, e) * low(e, a, b);
          gam(c, a, b) = s;
        }
    Tensor4 R(d);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        for (int c = 0; c < d; ++c)
          for (int e = 0; e < d; ++e) {
            double s = 0.5 * (ddg(a, e, b, c) + ddg(b, c, a, e) - ddg(a, c, b, e) - ddg(b, e, a, c));
            // g_fh Gamma^f_bc Gamma^h_ae = Gamma_f,bc Gamma^f_ae
            for (int f = 0; f < d; ++f) s += low(f, b, c) * gam(f, a, e) - low(f, b, e) * gam(f, a, c);
            R(a, b, c, e) = s;
          }
    Mat ric = Mat::Zero(d, d);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        for (int c = 0; c < d; ++c)
          for (int e = 0; e < d; ++e) ric(a, b) += gi(c, e) * R(c, a, e, b);
    out.scalar[k] = (gi.array() * ric.array()).sum();
    out.gamma[k] = std::move(gam);
    out.riemann[k] = std::move(R);
    out.ricci[k] = std::move(ric);
  }
  return out;
}

Frame build_frame(const Immersion& imm) { return build_frame(imm, induced_metric(imm)); }

// Normals come from Gram-Schmidt in the ambient metric, seeded with the chart
// basis vectors e_0, e_1, ... in order; a seed whose projection is (nearly)
// tangent is skipped.  At the reference point (grid index 0) the sign makes the
// first nonzero component of the seed's projection positive.  Away from it the
// frame has to stay continuous, so:
//  - a seed that clears kSeedGlobal at every point is used everywhere with the
//    reference sign;
//  - otherwise the last normal (which is fixed up to sign by the others) is built
//    pointwise and its sign carried over the grid from neighbour to neighbour.
Frame build_frame(const Immersion& imm, InducedMetric induced) {
  const int D = imm.ambient_dim(), d = imm.dim(), kk = imm.codim();
  const std::size_t N = imm.size();
  const auto& grid = imm.grid();
  Frame fr;
  fr.induced = std::move(induced);
  const auto& T = fr.induced.tangents;
  const auto& H = fr.induced.ambient_metric;
  fr.normals.assign(N, Mat::Zero(D, kk));

  auto project = [&](std::size_t k, int slot, const Vec& u) {
    const Mat& Tk = T[k];
    Vec p = u - Tk * (fr.induced.inverse[k] * (Tk.transpose() * (H[k] * u)));
    for (int j = 0; j < slot; ++j) {
      Vec n = fr.normals[k].col(j);
      p -= n * hdot(H[k], n, p);
    }
    return p;
  };
  auto ratio = [&](std::size_t k, const Vec& u, const Vec& p) {
    return std::sqrt(std::max(0.0, hdot(H[k], p, p)) / hdot(H[k], u, u));
  };
  auto rule_sign = [](const Vec& p) {
    const double scale = p.cwiseAbs().maxCoeff();
    for (Eigen::Index c = 0; c < p.size(); ++c)
      if (std::abs(p[c]) > 1e-12 * scale) return p[c] > 0 ? 1 : -1;
    return 1;
  };
  auto neighbours = [&](std::size_t k) {
    std::vector<std::size_t> nb;
    auto idx = grid.index(k);
    for (int a = 0; a < d; ++a)
      for (int s : {-1, 1}) {
        auto j = idx;
        j[static_cast<std::size_t>(a)] += s;
        nb.push_back(grid.flat(j));
      }
    return nb;
  };

  std::vector<bool> used(static_cast<std::size_t>(D), false);
  for (int slot = 0; slot < kk; ++slot) {
    int global_seed = -1;
    for (int s = 0; s < D && global_seed < 0; ++s) {
      if (used[static_cast<std::size_t>(s)]) continue;
      Vec e = Vec::Unit(D, s);
      bool ok = true;
      for (std::size_t k = 0; k < N && ok; ++k) ok = ratio(k, e, project(k, slot, e)) >= kSeedGlobal;
      if (ok) global_seed = s;
    }
    if (global_seed >= 0) {
      Vec e = Vec::Unit(D, global_seed);
      const int sign = rule_sign(project(0, slot, e));
      for (std::size_t k = 0; k < N; ++k) {
        Vec p = project(k, slot, e);
        fr.normals[k].col(slot) = sign * p / std::sqrt(hdot(H[k], p, p));
      }
      used[static_cast<std::size_t>(global_seed)] = true;
      fr.seeds.push_back(global_seed);
      fr.signs.push_back(sign);
      fr.propagated.push_back(false);
      continue;
    }
    if (slot != kk - 1)
      throw Error(imm.name() + ": no chart basis vector seeds normal " + std::to_string(slot) +
                  " continuously over the grid");

    int ref_seed = -1;
    for (std::size_t k = 0; k < N; ++k) {
      int chosen = -1;
      Vec p;
      for (int s = 0; s < D && chosen < 0; ++s) {
        Vec e = Vec::Unit(D, s);
        p = project(k, slot, e);
        if (ratio(k, e, p) >= kSeedDegenerate) chosen = s;
      }
      if (chosen < 0)
        throw Error(imm.name() + ": every seed is tangent at sigma = " + describe(grid.point(k)));
      if (k == 0) ref_seed = chosen;
      fr.normals[k].col(slot) = p / std::sqrt(hdot(H[k], p, p));
    }
    const int sign = rule_sign(fr.normals[0].col(slot));
    fr.normals[0].col(slot) *= sign;

    std::vector<bool> seen(N, false);
    std::deque<std::size_t> queue{0};
    seen[0] = true;
    while (!queue.empty()) {
      const std::size_t k = queue.front();
      queue.pop_front();
      for (std::size_t j : neighbours(k)) {
        if (seen[j]) continue;
        if (hdot(H[j], fr.normals[j].col(slot), fr.normals[k].col(slot)) < 0) fr.normals[j].col(slot) *= -1.0;
        seen[j] = true;
        queue.push_back(j);
      }
    }
    for (std::size_t k = 0; k < N; ++k)
      for (std::size_t j : neighbours(k))
        if (hdot(H[j], fr.normals[j].col(slot), fr.normals[k].col(slot)) <= 0)
          throw Error(imm.name() + ": normal orientation does not close around the grid near sigma = " +
                      describe(grid.point(k)));
    fr.seeds.push_back(ref_seed);
    fr.signs.push_back(sign);
    fr.propagated.push_back(true);
  }

  for (std::size_t k = 0; k < N; ++k) {
    const Mat& Nk = fr.normals[k];
    const Mat& Tk = T[k];
    for (int i = 0; i < kk; ++i) {
      for (int a = 0; a < d; ++a) {
        double len = std::sqrt(hdot(H[k], Tk.col(a), Tk.col(a)));
        fr.orthogonality_defect =
            std::max(fr.orthogonality_defect, std::abs(hdot(H[k], Nk.col(i), Tk.col(a))) / len);
      }
      for (int j = 0; j < kk; ++j)
        fr.normality_defect =
            std::max(fr.normality_defect, std::abs(hdot(H[k], Nk.col(i), Nk.col(j)) - (i == j ? 1.0 : 0.0)));
    }
    Mat c = Tk * fr.induced.inverse[k] * Tk.transpose() + Nk * Nk.transpose() - H[k].inverse();
    fr.completeness_defect = std::max(fr.completeness_defect, c.cwiseAbs().maxCoeff());
  }
  return fr;
}

ExtrinsicData second_fundamental_form(const Immersion& imm, const Frame& frame) {
  const int D = imm.ambient_dim(), d = imm.dim(), kk = imm.codim();
  const std::size_t N = imm.size();
  const auto& in = frame.induced;
  ExtrinsicData ext;
  ext.d = d;
  ext.k = kk;

  Mat Tf(D * d, static_cast<Eigen::Index>(N));
  for (std::size_t k = 0; k < N; ++k)
    for (int a = 0; a < d; ++a) Tf.block(D * a, static_cast<Eigen::Index>(k), D, 1) = in.tangents[k].col(a);
  std::vector<Mat> dT(static_cast<std::size_t>(d));
  for (int b = 0; b < d; ++b) dT[static_cast<std::size_t>(b)] = grid_diff(imm.grid(), Tf, b);

  ext.H.assign(N, std::vector<Mat>(static_cast<std::size_t>(kk), Mat::Zero(d, d)));
  ext.mean = Mat::Zero(kk, static_cast<Eigen::Index>(N));
  for (std::size_t k = 0; k < N; ++k) {
    const auto K = static_cast<Eigen::Index>(k);
    const Mat& Tk = in.tangents[k];
    const Tensor3& Gt = in.ambient_gamma[k];
    const Tensor3& G = in.gamma[k];
    const Mat hN = in.ambient_metric[k] * frame.normals[k];
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        Vec K2 = dT[static_cast<std::size_t>(b)].block(D * a, K, D, 1);
        for (int mu = 0; mu < D; ++mu) {
          double s = 0.0;
          for (int nu = 0; nu < D; ++nu)
            for (int rho = 0; rho < D; ++rho) s += Gt(mu, nu, rho) * Tk(nu, a) * Tk(rho, b);
          for (int c = 0; c < d; ++c) s -= G(c, a, b) * Tk(mu, c);
          K2[mu] += s;
        }
        for (int i = 0; i < kk; ++i) ext.H[k][static_cast<std::size_t>(i)](a, b) = hN.col(i).dot(K2);
      }
    for (int i = 0; i < kk; ++i)
      ext.mean(i, K) = 0.5 * (in.inverse[k].array() * ext.H[k][static_cast<std::size_t>(i)].array()).sum();
  }
  return ext;
}

ExtrinsicData normal_connection(const Immersion& imm, const Frame& frame, ExtrinsicData ext) {
  const int D = imm.ambient_dim(), d = imm.dim(), kk = imm.codim();
  const std::size_t N = imm.size();
  const auto& in = frame.induced;
  const auto& grid = imm.grid();
  if (ext.H.size() != N) throw PreconditionError("normal_connection: second fundamental form missing");

  Mat Nf(D * kk, static_cast<Eigen::Index>(N));
  for (std::size_t k = 0; k < N; ++k)
    for (int i = 0; i < kk; ++i) Nf.block(D * i, static_cast<Eigen::Index>(k), D, 1) = frame.normals[k].col(i);
  std::vector<Mat> dN(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) dN[static_cast<std::size_t>(a)] = grid_diff(grid, Nf, a);

  ext.A.assign(N, std::vector<Mat>(static_cast<std::size_t>(d), Mat::Zero(kk, kk)));
  ext.weingarten_residual = 0.0;
  ext.connection_asymmetry = 0.0;
  Mat Af(kk * kk * d, static_cast<Eigen::Index>(N));
  for (std::size_t k = 0; k < N; ++k) {
    const auto K = static_cast<Eigen::Index>(k);
    const Mat& Tk = in.tangents[k];
    const Mat& Nk = frame.normals[k];
    const Tensor3& Gt = in.ambient_gamma[k];
    const Mat& h = in.ambient_metric[k];
    for (int a = 0; a < d; ++a) {
      // nabla_a N_j without the normal connection
      Mat DN(D, kk);
      for (int j = 0; j < kk; ++j) {
        Vec v = dN[static_cast<std::size_t>(a)].block(D * j, K, D, 1);
        for (int mu = 0; mu < D; ++mu)
          for (int nu = 0; nu < D; ++nu)
            for (int rho = 0; rho < D; ++rho) v[mu] += Gt(mu, nu, rho) * Tk(nu, a) * Nk(rho, j);
        DN.col(j) = v;
      }
      Mat raw = Nk.transpose() * h * DN;
      ext.connection_asymmetry = std::max(ext.connection_asymmetry, (raw + raw.transpose()).cwiseAbs().maxCoeff());
      Mat A = 0.5 * (raw - raw.transpose());
      ext.A[k][static_cast<std::size_t>(a)] = A;
      for (int i = 0; i < kk; ++i)
        for (int j = 0; j < kk; ++j) Af((i * kk + j) * d + a, K) = A(i, j);
      for (int i = 0; i < kk; ++i) {
        Vec w = DN.col(i) + Nk * A.row(i).transpose();
        const Mat& Hi = ext.H[k][static_cast<std::size_t>(i)];
        for (int b = 0; b < d; ++b) {
          double up = 0.0;  // H^{i b}_a
          for (int c = 0; c < d; ++c) up += in.inverse[k](b, c) * Hi(c, a);
          w += up * Tk.col(b);
        }
        ext.weingarten_residual = std::max(ext.weingarten_residual, w.cwiseAbs().maxCoeff());
      }
    }
  }

  std::vector<Mat> dA(static_cast<std::size_t>(d));
  for (int b = 0; b < d; ++b) dA[static_cast<std::size_t>(b)] = grid_diff(grid, Af, b);
  ext.F.assign(N, std::vector<Mat>(static_cast<std::size_t>(d * d), Mat::Zero(kk, kk)));
  for (std::size_t k = 0; k < N; ++k) {
    const auto K = static_cast<Eigen::Index>(k);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        Mat F(kk, kk);
        for (int i = 0; i < kk; ++i)
          for (int j = 0; j < kk; ++j)
            F(i, j) = dA[static_cast<std::size_t>(a)]((i * kk + j) * d + b, K) -
                      dA[static_cast<std::size_t>(b)]((i * kk + j) * d + a, K);
        const Mat& Aa = ext.A[k][static_cast<std::size_t>(a)];
        const Mat& Ab = ext.A[k][static_cast<std::size_t>(b)];
        F += Aa * Ab - Ab * Aa;
        ext.F[k][static_cast<std::size_t>(a * d + b)] = F;
      }
  }
  return ext;
}

ExtrinsicData extrinsic_geometry(const Immersion& imm, const Frame& frame) {
  return normal_connection(imm, frame, second_fundamental_form(imm, frame));
}

StructureResiduals structure_residuals(const Immersion& imm, const Frame& frame, const ExtrinsicData& ext) {
  const int D = imm.ambient_dim(), d = imm.dim(), kk = imm.codim();
  const std::size_t N = imm.size();
  const auto& in = frame.induced;
  if (ext.H.size() != N || ext.A.size() != N || ext.F.size() != N)
    throw PreconditionError("structure_residuals: extrinsic data incomplete");

  Mat Hf(kk * d * d, static_cast<Eigen::Index>(N));
  for (std::size_t k = 0; k < N; ++k)
    for (int i = 0; i < kk; ++i)
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
          Hf((i * d + a) * d + b, static_cast<Eigen::Index>(k)) = ext.H[k][static_cast<std::size_t>(i)](a, b);
  std::vector<Mat> dH(static_cast<std::size_t>(d));
  for (int c = 0; c < d; ++c) dH[static_cast<std::size_t>(c)] = grid_diff(imm.grid(), Hf, c);

  StructureResiduals out;
  out.weingarten = ext.weingarten_residual;
  out.gauss_field.assign(N, 0.0);
  out.codazzi_field.assign(N, 0.0);
  out.ricci_field.assign(N, 0.0);

  for (std::size_t k = 0; k < N; ++k) {
    const auto K = static_cast<Eigen::Index>(k);
    // Columns 0..d-1 are the tangents, d..D-1 the normals.
    Mat E(D, D);
    E << in.tangents[k], frame.normals[k];
    const Tensor4& Rt = in.ambient_riemann[k];
    auto Rp = [&](int p, int q, int r, int s) {  // R~ contracted with frame columns
      double v = 0.0;
      for (int m = 0; m < D; ++m)
        for (int n = 0; n < D; ++n)
          for (int l = 0; l < D; ++l)
            for (int o = 0; o < D; ++o) v += Rt(m, n, l, o) * E(m, p) * E(n, q) * E(l, r) * E(o, s);
      return v;
    };
    const auto& H = ext.H[k];
    const Tensor3& G = in.gamma[k];
    const Mat& gi = in.inverse[k];

    double gmax = 0.0;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        for (int c = 0; c < d; ++c)
          for (int e = 0; e < d; ++e) {
            double rhs = in.riemann[k](a, b, c, e);
            for (int i = 0; i < kk; ++i) {
              const Mat& Hi = H[static_cast<std::size_t>(i)];
              rhs += Hi(a, e) * Hi(b, c) - Hi(a, c) * Hi(b, e);
            }
            gmax = std::max(gmax, std::abs(Rp(a, b, c, e) - rhs));
          }

    auto nablaH = [&](int i, int a, int b, int c) {
      double v = dH[static_cast<std::size_t>(a)]((i * d + b) * d + c, K);
      const Mat& Hi = H[static_cast<std::size_t>(i)];
      for (int e = 0; e < d; ++e) v -= G(e, a, b) * Hi(e, c) + G(e, a, c) * Hi(b, e);
      for (int j = 0; j < kk; ++j) v += ext.A[k][static_cast<std::size_t>(a)](i, j) * H[static_cast<std::size_t>(j)](b, c);
      return v;
    };
    double cmax = 0.0;
    for (int i = 0; i < kk; ++i)
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
          for (int c = 0; c < d; ++c)
            cmax = std::max(cmax, std::abs(Rp(a, b, d + i, c) - (nablaH(i, a, b, c) - nablaH(i, b, a, c))));

    double rmax = 0.0;
    for (int i = 0; i < kk; ++i)
      for (int j = 0; j < kk; ++j)
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b) {
            const Mat& Hi = H[static_cast<std::size_t>(i)];
            const Mat& Hj = H[static_cast<std::size_t>(j)];
            double rhs = ext.F[k][static_cast<std::size_t>(a * d + b)](i, j);
            rhs -= (Hi.transpose() * gi * Hj)(a, b);
            rhs += (Hi.transpose() * gi * Hj)(b, a);
            rmax = std::max(rmax, std::abs(Rp(a, b, d + i, d + j) - rhs));
          }

    out.gauss_field[k] = gmax;
    out.codazzi_field[k] = cmax;
    out.ricci_field[k] = rmax;
    out.gauss = std::max(out.gauss, gmax);
    out.codazzi = std::max(out.codazzi, cmax);
    out.ricci = std::max(out.ricci, rmax);
  }
  return out;
}

double immersion_volume(const Immersion& imm, const InducedMetric& g) {
  return imm.integrate(g.sqrt_det);
}

std::vector<double> delta_diagonal(const Immersion& imm, const InducedMetric& g) {
  std::vector<double> out(g.sqrt_det.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = g.sqrt_det[k] / imm.normalization();
  return out;
}

double functional_trace(const Immersion& imm, const InducedMetric& g) {
  const auto diag = delta_diagonal(imm, g);
  double s = 0.0;
  for (int mu = 0; mu < imm.ambient_dim(); ++mu) s += imm.integrate(diag);
  return s;
}

namespace immersions {

Immersion circle(double r, int n, int D, double tilt) {
  if (D != 2 && D != 3) throw PreconditionError("circle: ambient dimension must be 2 or 3");
  auto grid = parameter_grid({n}, {kTwoPi});
  return Immersion::from_function(D == 2 ? "circle" : "circle3", builtin::euclidean(D), grid,
                                  [=](const Point& s) {
                                    if (D == 2) return Vec{{r * std::cos(s[0]), r * std::sin(s[0])}};
                                    return Vec{{r * std::cos(s[0]), r * std::sin(s[0]) * std::cos(tilt),
                                                r * std::sin(s[0]) * std::sin(tilt)}};
                                  });
}

Immersion ellipse(double a, double b, int n) {
  return Immersion::from_function("ellipse", builtin::euclidean(2), parameter_grid({n}, {kTwoPi}),
                                  [=](const Point& s) { return Vec{{a * std::cos(s[0]), b * std::sin(s[0])}}; });
}

Immersion sphere(double r, int n_theta, int n_phi) {
  auto grid = parameter_grid({2 * n_theta, n_phi}, {kTwoPi, kTwoPi}, true);
  return Immersion::from_function("sphere", builtin::euclidean(3), grid, [=](const Point& s) {
    return Vec{{r * std::sin(s[0]) * std::cos(s[1]), r * std::sin(s[0]) * std::sin(s[1]), r * std::cos(s[0])}};
  }, Mat(), 1.0, 2);
}

Immersion torus(double R, double r, int n_u, int n_v) {
  if (!(r < R)) throw PreconditionError("torus: tube radius must be below the centre radius");
  return Immersion::from_function("torus", builtin::euclidean(3), parameter_grid({n_u, n_v}, {kTwoPi, kTwoPi}),
                                  [=](const Point& s) {
                                    double w = R + r * std::cos(s[1]);
                                    return Vec{{w * std::cos(s[0]), w * std::sin(s[0]), r * std::sin(s[1])}};
                                  });
}

Immersion graph(std::string name, std::function<double(const Point&)> f, std::vector<int> counts,
                std::vector<double> periods) {
  const int d = static_cast<int>(counts.size());
  Mat W = Mat::Zero(d + 1, d);
  W.topRows(d).setIdentity();
  return Immersion::from_function(std::move(name), builtin::euclidean(d + 1),
                                  parameter_grid(std::move(counts), std::move(periods)),
                                  [&](const Point& s) {
                                    Vec x(d + 1);
                                    x.head(d) = s;
                                    x[d] = f(s);
                                    return x;
                                  },
                                  W);
}

Immersion world_line(double rho, int n) {
  auto ambient = builtin::sphere(1.0);
  return Immersion::from_function("world_line", ambient, parameter_grid({n}, {kTwoPi}), [=](const Point& s) {
    const double x = std::cos(rho), y = std::sin(rho) * std::cos(s[0]), z = std::sin(rho) * std::sin(s[0]);
    return Vec{{std::acos(z), std::atan2(y, x)}};
  });
}

Immersion by_id(const std::string& id, const std::vector<double>& p, int n) {
  auto need = [&](std::size_t count) {
    if (p.size() != count)
      throw PreconditionError("immersion " + id + " takes " + std::to_string(count) + " parameters");
  };
  if (id == "circle") return need(1), circle(p[0], n);
  if (id == "circle3") return need(2), circle(p[0], n, 3, p[1]);
  if (id == "ellipse") return need(2), ellipse(p[0], p[1], n);
  if (id == "sphere") return need(1), sphere(p[0], n, n);
  if (id == "torus") return need(2), torus(p[0], p[1], n, n);
  if (id == "world_line") return need(1), world_line(p[0], n);
  if (id == "line") return need(0), graph("line", [](const Point&) { return 0.0; }, {n}, {kTwoPi});
  if (id == "plane") return need(0), graph("plane", [](const Point&) { return 0.0; }, {n, n}, {kTwoPi, kTwoPi});
  throw PreconditionError("unknown immersion id '" + id + "'");
}

}  // namespace immersions

}  // namespace geodex
