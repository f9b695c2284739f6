#include <doctest.h>

#include <cmath>
#include <numbers>

#include "geodex/lattice.hpp"

using namespace geodex;

TEST_CASE("lattice layout and points") {
  const Lattice L({4, 6}, {0.0, 1.0}, {2.0, 3.0}, DiffScheme::spectral, true);
  CHECK(L.size() == 24);
  CHECK(L.weight() == doctest::Approx(0.25));
  const std::vector<int> idx{1, 5};
  const std::size_t k = L.flat(idx);
  CHECK(L.index(k) == idx);
  CHECK(L.point(k)[0] == doctest::Approx(0.75));
  CHECK(L.point(k)[1] == doctest::Approx(1.0 + 5.5 * 0.5));
  const std::vector<int> wrapped{5, -1};
  CHECK(L.flat(wrapped) == k);
}

TEST_CASE("periodic derivatives") {
  for (auto scheme : {DiffScheme::central4, DiffScheme::spectral}) {
    for (int n : {16, 17}) {
      const Lattice L({n, 8}, {0, 0}, {2 * std::numbers::pi, 2 * std::numbers::pi}, scheme);
      std::vector<double> f(L.size()), dfx(L.size());
      for (std::size_t k = 0; k < L.size(); ++k) {
        const Point p = L.point(k);
        f[k] = std::sin(2 * p[0]) * std::cos(p[1]);
        dfx[k] = 2 * std::cos(2 * p[0]) * std::cos(p[1]);
      }
      const auto d = L.diff(f, 0);
      double err = 0;
      for (std::size_t k = 0; k < L.size(); ++k) err = std::max(err, std::abs(d[k] - dfx[k]));
      CHECK(err < (scheme == DiffScheme::spectral ? 1e-12 : 3e-2));
      const Mat D = L.diff_matrix(1);
      CHECK((D + D.transpose()).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(std::abs(D.trace()) < 1e-12);
      const Eigen::Map<const Vec> fv(f.data(), static_cast<Eigen::Index>(f.size()));
      const Vec viaM = L.diff_matrix(0) * fv;
      for (std::size_t k = 0; k < L.size(); ++k) CHECK(viaM[static_cast<Eigen::Index>(k)] == doctest::Approx(d[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("central4 converges at fourth order") {
  auto err = [](int n) {
    const Lattice L({n}, {0}, {1.0});
    std::vector<double> f(L.size());
    for (std::size_t k = 0; k < L.size(); ++k) f[k] = std::exp(std::sin(2 * std::numbers::pi * L.point(k)[0]));
    const auto d = L.diff(f, 0);
    double e = 0;
    for (std::size_t k = 0; k < L.size(); ++k) {
      const double x = 2 * std::numbers::pi * L.point(k)[0];
      e = std::max(e, std::abs(d[k] - 2 * std::numbers::pi * std::cos(x) * std::exp(std::sin(x))));
    }
    return e;
  };
  CHECK(std::log2(err(64) / err(128)) == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("quadrature and interpolation") {
  for (int n : {10, 11}) {
    const Lattice L({n, n}, {0, 0}, {1, 2}, DiffScheme::central4, n == 10);
    std::vector<double> f(L.size());
    auto fn = [](const Point& p) { return 1.0 + std::cos(2 * std::numbers::pi * p[0]) * std::sin(std::numbers::pi * p[1]) + std::sin(4 * std::numbers::pi * p[0]); };
    for (std::size_t k = 0; k < L.size(); ++k) f[k] = fn(L.point(k));
    CHECK(L.integrate(f) == doctest::Approx(2.0).epsilon(1e-13));
    Point x(2);
    x << 0.3183, 1.777;
    CHECK(L.interpolate(f, x) == doctest::Approx(fn(x)).epsilon(1e-12));
    CHECK(L.interpolate(f, L.point(7)) == doctest::Approx(f[7]).epsilon(1e-13));
  }
}
