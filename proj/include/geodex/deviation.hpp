#pragma once

// Deviation fields over a background immersion: how a reparametrization with
// generator eta acts on them, their split into tangential and normal parts, the
// diffeomorphism-invariant normal displacement xi_0 and the generator that removes
// the tangential part.

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "geodex/immersion.hpp"

namespace geodex {

/// An immersion with its frame and extrinsic data, computed once and shared.
class Background {
 public:
  explicit Background(Immersion imm);
  Background(Immersion imm, Frame frame);

  const Immersion& immersion() const { return imm_; }
  const Frame& frame() const { return frame_; }
  const InducedMetric& induced() const { return frame_.induced; }
  const ExtrinsicData& extrinsic() const { return ext_; }
  std::size_t size() const { return imm_.size(); }
  int dim() const { return imm_.dim(); }
  int ambient_dim() const { return imm_.ambient_dim(); }
  int codim() const { return imm_.codim(); }

  /// Smallest ambient trust radius over a subsample of the grid (cached).
  double trust_radius() const;

 private:
  Immersion imm_;
  Frame frame_;
  ExtrinsicData ext_;
  mutable double trust_ = -1.0;
};

using BackgroundPtr = std::shared_ptr<const Background>;
BackgroundPtr make_background(Immersion imm);

/// Named pieces of a transformed field, each rows x size().
struct TermSet {
  std::vector<std::pair<std::string, Mat>> terms;
  const Mat& term(const std::string& name) const;
  bool has(const std::string& name) const;
};

struct DeviationField {
  DeviationField() = default;
  DeviationField(BackgroundPtr bg, Mat xdot, double eps = 1.0)
      : background(std::move(bg)), samples(std::move(xdot)), scale(eps) {}

  BackgroundPtr background;
  Mat samples;  // D x size(): Xdot^mu(sigma)
  double scale = 1.0;
  bool trust_violation = false;
  TermSet terms;
};

struct GeneratorField {
  Mat samples;  // d x size(): eta^alpha(sigma)
};

struct XiDecomposition {
  BackgroundPtr background;
  Mat tangential_lower;  // d x size(): xi_alpha
  Mat tangential;        // d x size(): xi^alpha
  Mat normal;            // k x size(): xi^i
  TermSet terms;
};

/// Xdot' for the reparametrization generated by eta, through the given order
/// (1, 2 or 3).  Terms: "field", "shift", "transport", "bending",
/// "second_transport", "bending_gradient", "curvature".
DeviationField act_diffeo(const DeviationField& dev, const GeneratorField& eta, int order = 3);

/// delta sigma^alpha of the intrinsic geodesic expansion generated by eta (third order).
Mat parameter_shift(const Background& bg, const GeneratorField& eta);

XiDecomposition decompose(const DeviationField& dev);
DeviationField recompose(const XiDecomposition& xi);
/// Builds the decomposition from contravariant tangential and normal components.
XiDecomposition make_xi(BackgroundPtr bg, Mat tangential, Mat normal);

/// xi' under eta: tangential through `tangential_order` (<= 3), normal through
/// `normal_order` (<= 2).
XiDecomposition xi_transform(const XiDecomposition& xi, const GeneratorField& eta, int tangential_order = 3,
                             int normal_order = 2);

/// xi_0^i = xi^i - xi^a nabla_a xi^i - 1/2 H^i_ab xi^a xi^b, k x size().
Mat xi_invariant(const XiDecomposition& xi);

/// eta^a = -xi^a + xi^b nabla_b xi^a - H^a_ib xi^i xi^b; with `second_order` false
/// only -xi^a.
GeneratorField gauge_generator(const XiDecomposition& xi, bool second_order = true);

/// Max over the grid of the g-norm of the tangential part.
double tangential_norm(const XiDecomposition& xi);

// Grid covariant derivatives used by the transforms (exposed for tests).
/// nabla_a of an ambient vector field along the immersion: d entries, each D x size().
std::vector<Mat> ambient_gradient(const Background& bg, const Mat& field);
/// nabla_a of a tangent vector field: d entries, each d x size().
std::vector<Mat> tangent_gradient(const Background& bg, const Mat& field);
/// nabla_a of a normal-bundle field with the normal connection: d entries, each k x size().
std::vector<Mat> normal_gradient(const Background& bg, const Mat& field);

/// Low Fourier modes for fields on a parameter grid: each mode m contributes
/// cos(k.sigma) c + sin(k.sigma) s with k_a = 2 pi m_a / period_a.
struct FourierMode {
  std::vector<int> m;
  Vec cos_coeff;
  Vec sin_coeff;
};

struct FourierField {
  int components = 0;
  std::vector<FourierMode> modes;

  Mat sample(const Lattice& grid) const;
  /// Coefficients uniform in [-amplitude, amplitude] / (1 + |m|^2) for all modes with
  /// max |m_a| <= max_mode, drawn from std::mt19937_64 seeded with `seed`.
  static FourierField random(int components, int dim, int max_mode, double amplitude, std::uint64_t seed);
};

}  // namespace geodex
