#include "geodex/lattice.hpp"

#include <cmath>
#include <numbers>

#include "geodex/error.hpp"
#include "geodex/kernels.hpp"

namespace geodex {

namespace {

std::vector<double> make_stencil(DiffScheme s, int n, double h) {
  if (s == DiffScheme::central4) {
    if (n < 5) throw PreconditionError("lattice: central4 differences need at least 5 points per axis");
    return {1.0 / (12 * h), -8.0 / (12 * h), 0.0, 8.0 / (12 * h), -1.0 / (12 * h)};
  }
  // Entry k+m of row k is c(m) = -(-1)^m / 2 * cot(m h' / 2) for even n,
  // -(-1)^m / 2 / sin(m h' / 2) for odd n, with h' = 2 pi / n and period scaling.
  const int r = n / 2;
  std::vector<double> c(static_cast<std::size_t>(2 * r + 1), 0.0);
  const double scale = 2 * std::numbers::pi / (n * h);
  const double hp = 2 * std::numbers::pi / n;
  for (int m = 1; m <= r; ++m) {
    if (n % 2 == 0 && m == r) continue;  // cot(pi/2) = 0
    const double sgn = (m % 2 == 0) ? 1.0 : -1.0;
    const double v = -0.5 * sgn * (n % 2 == 0 ? 1.0 / std::tan(m * hp / 2) : 1.0 / std::sin(m * hp / 2)) * scale;
    c[static_cast<std::size_t>(r + m)] = v;
    c[static_cast<std::size_t>(r - m)] = -v;
  }
  return c;
}

// Periodic cardinal function of an n-point trigonometric interpolant at offset t (units of the period).
double cardinal(int n, double t) {
  const double a = std::numbers::pi * t;
  const double s = std::sin(a);
  if (std::abs(s) < 1e-14) return 1.0;  // t is a whole number of periods
  return n % 2 == 1 ? std::sin(n * a) / (n * s) : std::sin(n * a) / (n * std::tan(a));
}

}  // namespace

DiffScheme parse_scheme(const std::string& name) {
  if (name == "central4") return DiffScheme::central4;
  if (name == "spectral") return DiffScheme::spectral;
  throw Error("unknown difference scheme '" + name + "' (expected central4 or spectral)");
}

std::string scheme_name(DiffScheme s) { return s == DiffScheme::central4 ? "central4" : "spectral"; }

Lattice::Lattice(std::vector<int> counts, std::vector<double> origin, std::vector<double> period, DiffScheme scheme,
                 bool cell_centred)
    : counts_(std::move(counts)), origin_(std::move(origin)), period_(std::move(period)), scheme_(scheme),
      centred_(cell_centred) {
  if (counts_.empty() || counts_.size() != origin_.size() || counts_.size() != period_.size())
    throw PreconditionError("lattice: counts, origin and period must have the same nonzero length");
  for (std::size_t a = 0; a < counts_.size(); ++a) {
    if (counts_[a] < 3 || !(period_[a] > 0)) throw PreconditionError("lattice: need >= 3 points and positive period");
    spacing_.push_back(period_[a] / counts_[a]);
    size_ *= static_cast<std::size_t>(counts_[a]);
    weight_ *= spacing_.back();
    stencils_.push_back(make_stencil(scheme_, counts_[a], spacing_.back()));
  }
}

Point Lattice::point(std::size_t k) const {
  const auto idx = index(k);
  Point p(dim());
  for (int a = 0; a < dim(); ++a)
    p[a] = origin_[static_cast<std::size_t>(a)] + (idx[static_cast<std::size_t>(a)] + (centred_ ? 0.5 : 0.0)) * spacing(a);
  return p;
}

std::vector<int> Lattice::index(std::size_t k) const {
  std::vector<int> idx(counts_.size());
  for (int a = dim() - 1; a >= 0; --a) {
    const auto n = static_cast<std::size_t>(counts_[static_cast<std::size_t>(a)]);
    idx[static_cast<std::size_t>(a)] = static_cast<int>(k % n);
    k /= n;
  }
  return idx;
}

std::size_t Lattice::flat(std::span<const int> idx) const {
  std::size_t k = 0;
  for (int a = 0; a < dim(); ++a) {
    const int n = counts_[static_cast<std::size_t>(a)];
    const int i = ((idx[static_cast<std::size_t>(a)] % n) + n) % n;
    k = k * static_cast<std::size_t>(n) + static_cast<std::size_t>(i);
  }
  return k;
}

std::vector<double> Lattice::diff(std::span<const double> f, int axis) const {
  if (f.size() != size_) throw PreconditionError("lattice: sample count does not match the lattice");
  kernels::AxisLayout L;
  for (int a = 0; a < axis; ++a) L.outer *= static_cast<std::size_t>(count(a));
  L.axis = static_cast<std::size_t>(count(axis));
  for (int a = axis + 1; a < dim(); ++a) L.inner *= static_cast<std::size_t>(count(a));
  std::vector<double> out(size_);
  kernels::periodic_stencil(f, out, L, stencil(axis));
  return out;
}

Mat Lattice::diff_matrix(int axis) const {
  Mat D = Mat::Zero(static_cast<Eigen::Index>(size_), static_cast<Eigen::Index>(size_));
  const auto& c = stencil(axis);
  const int r = static_cast<int>(c.size() / 2);
  for (std::size_t k = 0; k < size_; ++k) {
    auto idx = index(k);
    const int base = idx[static_cast<std::size_t>(axis)];
    for (int j = 0; j < static_cast<int>(c.size()); ++j) {
      if (c[static_cast<std::size_t>(j)] == 0.0) continue;
      idx[static_cast<std::size_t>(axis)] = base + j - r;
      D(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(flat(idx))) += c[static_cast<std::size_t>(j)];
    }
  }
  return D;
}

double Lattice::integrate(std::span<const double> f) const {
  const std::vector<double> w(f.size(), weight_);
  return kernels::weighted_sum(f, w);
}

double Lattice::interpolate(std::span<const double> f, const Point& x) const {
  if (f.size() != size_) throw PreconditionError("lattice: sample count does not match the lattice");
  std::vector<std::vector<double>> card(counts_.size());
  for (int a = 0; a < dim(); ++a) {
    const int n = count(a);
    auto& w = card[static_cast<std::size_t>(a)];
    w.resize(static_cast<std::size_t>(n));
    const double x0 = origin_[static_cast<std::size_t>(a)] + (centred_ ? 0.5 : 0.0) * spacing(a);
    for (int j = 0; j < n; ++j) w[static_cast<std::size_t>(j)] = cardinal(n, (x[a] - x0 - j * spacing(a)) / period(a));
  }
  double s = 0.0;
  for (std::size_t k = 0; k < size_; ++k) {
    const auto idx = index(k);
    double w = f[k];
    for (int a = 0; a < dim(); ++a) w *= card[static_cast<std::size_t>(a)][static_cast<std::size_t>(idx[static_cast<std::size_t>(a)])];
    s += w;
  }
  return s;
}

}  // namespace geodex
