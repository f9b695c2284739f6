#pragma once

// Functional measures over deviation fields and generators, the Faddeev-Popov
// determinant of the gauge xi_alpha = 0, the gauge-fixed integrand over normal
// deviations, and the area action with its expansion about a background.
//
// Every integral is (1/N) sum_sigma w sqrt(g) (...) / sheets, N the
// immersion's normalization.  Products over sigma (measure prefactors) are sums
// of logs over grid points.

#include <string>
#include <utility>
#include <vector>

#include "geodex/deviation.hpp"

namespace geodex {

struct FunctionalWeight {
  double log_density = 0.0;
  std::vector<std::pair<std::string, double>> breakdown;
  double normalization = 1.0;
  std::vector<int> grid;        // points per axis
  std::vector<int> frame_signs;  // orientation of each normal, when the weight depends on it

  double term(const std::string& name) const;
  void add(std::string name, double value);
};

/// Right-invariant measure over Xdot: Ricci exponent and per-point prefactors
/// ("ricci", "prefactor_metric", "prefactor_volume").
FunctionalWeight functional_right_measure_log(const DeviationField& dev);

/// Left-invariant measure over generators ("divergence", "quadratic", "ricci",
/// "prefactor_metric", "prefactor_volume").
FunctionalWeight eta_measure_log(const GeneratorField& eta, const Background& bg);

/// Log of the Faddeev-Popov determinant ("mean_curvature", "shape_quadratic",
/// "curvature").
FunctionalWeight fp_log_determinant(const XiDecomposition& xi);

struct FrameJacobian {
  std::vector<double> det_a;         // det(dX | N) in chart components
  std::vector<double> sqrt_g_over_h;
  double max_residual = 0.0;         // max ||det A| - sqrt(g/h)|
  int orientation = 0;               // sign of det A (constant over a connected grid), 0 if it changes
};

FrameJacobian frame_jacobian_check(const Immersion& imm, const Frame& frame);

/// The gauge-fixed exponent at xi^alpha = 0 ("mean_curvature", "shape_quadratic",
/// "curvature_tangential", "curvature_normal") plus the normal measure prefactor
/// ("prefactor").  Throws PreconditionError if a tangential component is nonzero.
FunctionalWeight gauge_fixed_log_integrand(const XiDecomposition& xi);

/// Recombines the right measure of N_i xi^i, the Faddeev-Popov determinant, the
/// frame Jacobian and the generator-measure prefactor that the covariant delta
/// absorbs, and compares with the gauge-fixed integrand term by term.
struct PipelineCheck {
  FunctionalWeight gauge, right, fp;
  double frame_jacobian = 0.0;   // sum log |det A|
  double delta_prefactor = 0.0;  // -(prefactors of the generator measure)
  std::vector<std::pair<std::string, double>> residuals;
  double max_residual = 0.0;
};

PipelineCheck pipeline_identity(const XiDecomposition& xi_normal_only);

/// (1/N) sum w sqrt|det g| / sheets.  Needs only tangents and the ambient metric.
double nambu_goto_action(const Immersion& imm);

/// Second-order expansion of the area action about the background in xi.
struct ActionExpansion {
  double value = 0.0;
  double area = 0.0, linear = 0.0, quadratic = 0.0;
};
ActionExpansion action_expansion(const XiDecomposition& xi);

/// nabla^2 xi^i with the induced Christoffels and the normal connection, k x size().
Mat normal_laplacian(const Background& bg, const Mat& xi_normal);

/// One "term,value" row per breakdown entry, then "log_density,value".
std::string to_csv(const FunctionalWeight& w);

}  // namespace geodex
