#pragma once

// Sampled immersions of a periodic parameter grid into a chart, with their
// induced geometry, normal frames, second fundamental forms, normal connections
// and the residuals of the Gauss, Codazzi, Ricci and Weingarten equations.
//
// Index conventions: alpha, beta... run over the d parameter axes, mu, nu over
// the D ambient chart coordinates, i, j over the k = D - d normals.
// Lowered Riemann tensors follow manifold.hpp (R_1212 = +sin^2 theta on the
// unit sphere).

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "geodex/lattice.hpp"
#include "geodex/manifold.hpp"

namespace geodex {

/// The parameter manifold: a periodic lattice with 4th-order central differences.
using ParameterGrid = Lattice;

ParameterGrid parameter_grid(std::vector<int> counts, std::vector<double> periods, bool cell_centred = false);

class Immersion {
 public:
  /// `samples` is D x size(); X(sigma) - winding * sigma must be periodic.  If the
  /// grid covers the image `sheets` times, integrals over it are divided by that.
  Immersion(std::string name, ManifoldSpec ambient, ParameterGrid grid, Mat samples, Mat winding = Mat(),
            double normalization = 1.0, int sheets = 1);

  static Immersion from_function(std::string name, ManifoldSpec ambient, ParameterGrid grid,
                                 const std::function<Vec(const Point&)>& X, Mat winding = Mat(),
                                 double normalization = 1.0, int sheets = 1);

  const std::string& name() const { return name_; }
  const ManifoldSpec& ambient() const { return ambient_; }
  const ParameterGrid& grid() const { return grid_; }
  const Mat& samples() const { return samples_; }
  const Mat& winding() const { return winding_; }
  double normalization() const { return normalization_; }
  int sheets() const { return sheets_; }
  /// Quadrature over the image: the grid sum of f w / sheets.
  double integrate(std::span<const double> f) const;
  int dim() const { return grid_.dim(); }
  int ambient_dim() const { return ambient_.dim; }
  int codim() const { return ambient_.dim - grid_.dim(); }
  std::size_t size() const { return grid_.size(); }
  Point position(std::size_t k) const { return samples_.col(static_cast<Eigen::Index>(k)); }

  /// X - winding * sigma at every grid point.
  Mat periodic_part() const;
  /// Trigonometric interpolation of the periodic part plus the winding ramp.
  Point evaluate(const Point& sigma) const;
  /// Same grid, ambient and winding; new samples.
  Immersion with_samples(Mat samples) const;

 private:
  std::string name_;
  ManifoldSpec ambient_;
  ParameterGrid grid_;
  Mat samples_;
  Mat winding_;
  double normalization_;
  int sheets_;
};

/// Grid derivative along `axis` of every row of a (rows x size()) field.
Mat grid_diff(const Lattice& grid, const Mat& field, int axis);

/// d_alpha X as D x d per point, using the winding for the non-periodic part.
std::vector<Mat> tangent_vectors(const Immersion& imm);

struct InducedMetric {
  std::vector<Mat> tangents;  // D x d
  std::vector<Mat> metric;    // g_ab
  std::vector<Mat> inverse;
  std::vector<double> sqrt_det;
  std::vector<Tensor3> gamma;    // (c,a,b) Gamma^c_ab of g
  std::vector<Tensor4> riemann;  // R_abcd, all lowered
  std::vector<Mat> ricci;        // R_ab
  std::vector<double> scalar;
  // Ambient data at X(sigma).
  std::vector<Mat> ambient_metric;
  std::vector<Tensor3> ambient_gamma;
  std::vector<Tensor4> ambient_riemann;  // lowered
};

/// Pullback metric and its intrinsic curvature.  The Riemann tensor is assembled
/// in lowered form from grid second derivatives of g, so coordinate
/// singularities of g^-1 between grid points do not get differentiated.
/// Throws SignatureError naming sigma if g degenerates.
InducedMetric induced_metric(const Immersion& imm);

struct Frame {
  InducedMetric induced;
  std::vector<Mat> normals;  // D x k, columns N_i
  /// Ambient basis vector that seeded each normal at the reference point.
  std::vector<int> seeds;
  /// +1 or -1 per normal: orientation relative to the seed's projection there.
  std::vector<int> signs;
  /// True where the normal was continued from the reference point by sign
  /// propagation instead of a seed admissible on the whole grid.
  std::vector<bool> propagated;
  double orthogonality_defect = 0.0;  // max |N_i . d_a X| / |d_a X|
  double normality_defect = 0.0;      // max |N_i . N_j - delta_ij|
  double completeness_defect = 0.0;   // max |g^ab dX dX + N N - h^-1|
};

/// Gram-Schmidt normals in the ambient metric; see the implementation for the
/// seed and sign rules.
Frame build_frame(const Immersion& imm);
Frame build_frame(const Immersion& imm, InducedMetric induced);

struct ExtrinsicData {
  int d = 0, k = 0;
  std::vector<std::vector<Mat>> H;  // [point][i]: H^i_ab (d x d)
  Mat mean;                          // k x size(): H^i = 1/2 g^ab H^i_ab
  std::vector<std::vector<Mat>> A;  // [point][alpha]: A^i_j (k x k)
  std::vector<std::vector<Mat>> F;  // [point][alpha*d+beta]: F^i_j (k x k)
  double weingarten_residual = 0.0;
  double connection_asymmetry = 0.0;  // max |A + A^T| before antisymmetrising
};

/// H^i_ab = N_i . (d_a d_b X + Gamma~ dX dX - Gamma^c_ab d_c X) and the mean curvature.
ExtrinsicData second_fundamental_form(const Immersion& imm, const Frame& frame);
/// Adds A, F and the Weingarten residual to `ext`.
ExtrinsicData normal_connection(const Immersion& imm, const Frame& frame, ExtrinsicData ext);
/// Both of the above.
ExtrinsicData extrinsic_geometry(const Immersion& imm, const Frame& frame);

struct StructureResiduals {
  double gauss = 0.0;
  double codazzi = 0.0;
  double ricci = 0.0;
  double weingarten = 0.0;
  // Pointwise max over components, one entry per grid point.
  std::vector<double> gauss_field, codazzi_field, ricci_field;
};

/// LHS - RHS of the Gauss, Codazzi and Ricci equations, max norms over the grid.
StructureResiduals structure_residuals(const Immersion& imm, const Frame& frame, const ExtrinsicData& ext);

/// Volume of the image: sum of w sqrt(g) / sheets.
double immersion_volume(const Immersion& imm, const InducedMetric& g);
/// Diagonal of the grid delta function in the induced measure: sqrt(g) / N.
std::vector<double> delta_diagonal(const Immersion& imm, const InducedMetric& g);
/// Trace over (mu, sigma) of the functional identity: D times the image integral of delta(sigma, sigma).
double functional_trace(const Immersion& imm, const InducedMetric& g);

namespace immersions {
/// Circle of radius r in R^D (D = 2 or 3), tilted about the x axis by `tilt` when D = 3.
Immersion circle(double r, int n, int D = 2, double tilt = 0.0);
Immersion ellipse(double a, double b, int n);
/// Round sphere of radius r in R^3.  theta runs over [0, 2 pi), covering the
/// sphere twice, so the parameter grid is periodic; n_theta counts points per sheet.
Immersion sphere(double r, int n_theta, int n_phi);
Immersion torus(double R, double r, int n_u, int n_v);
/// z = f(sigma) over a periodic box, as an immersion in R^(d+1).
Immersion graph(std::string name, std::function<double(const Point&)> f, std::vector<int> counts,
                std::vector<double> periods);
/// Small circle of geodesic radius rho about (pi/2, 0) on the unit sphere chart.
Immersion world_line(double rho, int n);
Immersion by_id(const std::string& id, const std::vector<double>& params, int n);
}  // namespace immersions

}  // namespace geodex
