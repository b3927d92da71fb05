// Apache License, Version 2.0, refer to LICENSE.txt

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "csmark/grid.hpp"
#include "csmark/laplacian.hpp"
#include "csmark/rng.hpp"
#include "support/eigen_sym.hpp"

using namespace csmark;

namespace {

GridLaplacian full_laplacian(const GridSpec& g) {
  auto lap = build_laplacian(g);
  build_precision(lap);
  return lap;
}

}  // namespace

TEST_CASE("Laplacian of tiny grids") {
  SUBCASE("1x2 grid is the 2-node path graph") {
    const auto lap = build_laplacian(make_grid(1.0, 2.0, 1, 2));
    const auto m = lap.laplacian_dense();
    CHECK(m[0] == 1.0);
    CHECK(m[1] == -1.0);
    CHECK(m[2] == -1.0);
    CHECK(m[3] == 1.0);
  }

  SUBCASE("2x2 grid is the 4-cycle") {
    const auto g = make_grid(1.0, 2.0, 2, 2);
    const auto lap = build_laplacian(g);
    for (int l = 0; l < 4; ++l) CHECK(lap.degree(l) == 2);
    CHECK(lap.laplacian_at(0, 1) == -1.0);  // row neighbour
    CHECK(lap.laplacian_at(0, 2) == -1.0);  // column neighbour
    CHECK(lap.laplacian_at(0, 3) == 0.0);   // diagonal: not adjacent
  }

  SUBCASE("3x3 grid degrees") {
    const auto g = make_grid(1.0, 2.0, 3, 3);
    const auto lap = build_laplacian(g);
    CHECK(lap.degree(g.index_of(1, 1)) == 4);
    CHECK(lap.degree(g.index_of(0, 0)) == 2);
    CHECK(lap.degree(g.index_of(1, 0)) == 3);
  }
}

TEST_CASE("Laplacian structure invariants on assorted grids") {
  for (const auto [J, K] : {std::pair{1, 1}, {4, 1}, {1, 6}, {3, 5}, {8, 8}}) {
    const auto g = make_grid(1.0, 2.0, J, K);
    const auto lap = build_laplacian(g);
    const auto m = lap.laplacian_dense();
    const std::size_t p = static_cast<std::size_t>(g.p);
    for (std::size_t a = 0; a < p; ++a) {
      double rowsum = 0.0;
      for (std::size_t b = 0; b < p; ++b) {
        const double v = m[a * p + b];
        CHECK(v == m[b * p + a]);
        if (a != b) CHECK((v == 0.0 || v == -1.0));
        rowsum += v;
      }
      CHECK(rowsum == 0.0);
      const int deg = static_cast<int>(m[a * p + a]);
      CHECK(deg >= 0);
      CHECK(deg <= 4);
    }
    // kernel contains the all-ones vector
    std::vector<double> ones(p, 1.0);
    std::vector<double> out(p);
    lap.apply_laplacian(ones, out);
    for (double v : out) CHECK(v == 0.0);
  }
}

TEST_CASE("precision matrix and Cholesky factor") {
  SUBCASE("1x1 grid") {
    const auto lap = full_laplacian(make_grid(1.0, 2.0, 1, 1));
    CHECK(lap.precision_dense()[0] == doctest::Approx(1.0));
    CHECK(lap.chol_upper_dense()[0] == doctest::Approx(1.0));
  }

  SUBCASE("1x2 grid: shift is p^-2 = 1/4") {
    const auto lap = full_laplacian(make_grid(1.0, 2.0, 1, 2));
    const auto u = lap.precision_dense();
    CHECK(u[0] == doctest::Approx(1.25));
    CHECK(u[1] == doctest::Approx(-1.0));
    CHECK(u[3] == doctest::Approx(1.25));
    const auto ev = csmark_test::eigen_sym_values(u, 2);
    CHECK(ev.front() == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(ev.back() == doctest::Approx(2.25).epsilon(1e-12));
  }

  SUBCASE("2x2 grid: Upsilon = L + I/16") {
    const auto lap = full_laplacian(make_grid(1.0, 2.0, 2, 2));
    const auto u = lap.precision_dense();
    const auto l = lap.laplacian_dense();
    for (std::size_t i = 0; i < 16; ++i) {
      const double shift = (i % 5 == 0) ? 1.0 / 16.0 : 0.0;
      CHECK(u[i] == doctest::Approx(l[i] + shift));
    }
  }

  SUBCASE("U^T U reconstructs Upsilon within 1e-10") {
    for (const auto [J, K] : {std::pair{3, 4}, {6, 2}, {5, 9}, {12, 12}}) {
      const auto g = make_grid(1.0, 2.0, J, K);
      const auto lap = full_laplacian(g);
      const auto u = lap.chol_upper_dense();
      const auto ups = lap.precision_dense();
      const std::size_t p = static_cast<std::size_t>(g.p);
      for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = 0; b < p; ++b) {
          double s = 0.0;
          for (std::size_t m = 0; m < p; ++m) s += u[m * p + a] * u[m * p + b];
          CHECK(std::abs(s - ups[a * p + b]) < 1e-10);
        }
      }
    }
  }
}

TEST_CASE("spectral facts on small grids via a dense eigensolver") {
  // full 20x20 sweep lives in the acceptance suite; spot-check here
  for (const auto [J, K] : {std::pair{1, 2}, {2, 2}, {3, 3}, {5, 4}, {7, 9}}) {
    const auto g = make_grid(1.0, 2.0, J, K);
    const auto lap = full_laplacian(g);
    const auto evl = csmark_test::eigen_sym_values(lap.laplacian_dense(), g.p);
    CHECK(evl.back() <= 8.0 + 1e-9);
    CHECK(std::abs(evl.front()) < 1e-9);
    const auto evu = csmark_test::eigen_sym_values(lap.precision_dense(), g.p);
    const double shift = 1.0 / (static_cast<double>(g.p) * g.p);
    CHECK(evu.front() == doctest::Approx(shift).epsilon(1e-9));
  }
}

TEST_CASE("dense eigensolver agrees with Jacobi and closed forms") {
  // path graph Laplacian eigenvalues: 4 sin^2(a pi / (2n))
  const auto g = make_grid(1.0, 2.0, 1, 6);
  const auto lap = build_laplacian(g);
  auto ev = csmark_test::eigen_sym_values(lap.laplacian_dense(), g.p);
  for (int a = 0; a < 6; ++a) {
    const double expect = 4.0 * std::pow(std::sin(a * M_PI / 12.0), 2);
    CHECK(ev[static_cast<std::size_t>(a)] == doctest::Approx(expect).epsilon(1e-10));
  }
  const auto g2 = make_grid(1.0, 2.0, 4, 3);
  const auto lap2 = full_laplacian(g2);
  const auto ql = csmark_test::eigen_sym_values(lap2.precision_dense(), g2.p);
  const auto jac = csmark_test::jacobi_eigenvalues(lap2.precision_dense(), g2.p);
  for (std::size_t i = 0; i < ql.size(); ++i)
    CHECK(ql[i] == doctest::Approx(jac[i]).epsilon(1e-9));
}

TEST_CASE("triangular solves invert the factor") {
  const auto g = make_grid(1.0, 2.0, 5, 7);
  const auto lap = full_laplacian(g);
  Rng rng(8);
  std::vector<double> b(static_cast<std::size_t>(g.p));
  for (auto& v : b) v = rng.normal();
  std::vector<double> x(b.size());
  lap.precision_solve(b, x);
  // residual of Upsilon x = b
  const auto ups = lap.precision_dense();
  const std::size_t p = static_cast<std::size_t>(g.p);
  for (std::size_t a = 0; a < p; ++a) {
    double s = 0.0;
    for (std::size_t c = 0; c < p; ++c) s += ups[a * p + c] * x[c];
    CHECK(s == doctest::Approx(b[a]).epsilon(1e-8));
  }
}

TEST_CASE("theta_from_latent basics") {
  const auto g = make_grid(1.0, 2.0, 3, 3);
  const auto lap = full_laplacian(g);

  SUBCASE("zero latent vector gives the uniform weights") {
    std::vector<double> z(static_cast<std::size_t>(g.p), 0.0);
    const auto w = theta_from_latent(lap, z, 1.7);
    for (double v : w.theta) CHECK(v == doctest::Approx(1.0 / g.p));
  }

  SUBCASE("softmax translation invariance") {
    Rng rng(13);
    std::vector<double> h(static_cast<std::size_t>(g.p));
    for (auto& v : h) v = rng.normal();
    const auto w1 = softmax(h);
    for (auto& v : h) v += 3.25;
    const auto w2 = softmax(h);
    for (std::size_t l = 0; l < w1.size(); ++l)
      CHECK(w1.theta[l] == doctest::Approx(w2.theta[l]).epsilon(1e-12));
  }

  SUBCASE("sqrt-tau scaling identity: theta(z,4) == theta(2z,1)") {
    Rng rng(14);
    std::vector<double> z(static_cast<std::size_t>(g.p));
    for (auto& v : z) v = rng.normal();
    const auto w4 = theta_from_latent(lap, z, 4.0);
    std::vector<double> z2 = z;
    for (auto& v : z2) v *= 2.0;
    const auto w1 = theta_from_latent(lap, z2, 1.0);
    for (std::size_t l = 0; l < w4.size(); ++l)
      CHECK(w4.theta[l] == doctest::Approx(w1.theta[l]).epsilon(1e-12));
  }

  SUBCASE("non-positive tau is rejected") {
    std::vector<double> z(static_cast<std::size_t>(g.p), 0.0);
    CHECK_THROWS_AS(theta_from_latent(lap, z, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(theta_from_latent(lap, z, -1.0), std::invalid_argument);
  }

  SUBCASE("valid probability vector for random inputs") {
    Rng rng(15);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> z(static_cast<std::size_t>(g.p));
      for (auto& v : z) v = rng.normal() * 5.0;
      const auto w = theta_from_latent(lap, z, rng.exponential());
      CHECK(w.is_valid(1e-12));
    }
  }
}

TEST_CASE("softmax is 1-Lipschitz in the Euclidean norm") {
  Rng rng(21);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform01() * 10);
    std::vector<double> a(n);
    std::vector<double> b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.normal() * 3.0;
      b[i] = rng.normal() * 3.0;
    }
    const auto sa = softmax(a);
    const auto sb = softmax(b);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      num += (sa.theta[i] - sb.theta[i]) * (sa.theta[i] - sb.theta[i]);
      den += (a[i] - b[i]) * (a[i] - b[i]);
    }
    CHECK(std::sqrt(num) <= std::sqrt(den) + 1e-12);
  }
}

TEST_CASE("whitened field has covariance tau * Upsilon^-1") {
  const auto g = make_grid(1.0, 2.0, 2, 3);
  const auto lap = full_laplacian(g);
  const double tau = 2.0;
  const std::size_t p = static_cast<std::size_t>(g.p);

  // reference covariance: tau * Upsilon^-1 column by column
  std::vector<double> cov(p * p);
  std::vector<double> e(p, 0.0);
  std::vector<double> col(p);
  for (std::size_t c = 0; c < p; ++c) {
    e.assign(p, 0.0);
    e[c] = 1.0;
    lap.precision_solve(e, col);
    for (std::size_t r = 0; r < p; ++r) cov[r * p + c] = tau * col[r];
  }

  const int ndraws = 100000;
  Rng rng(1234);
  std::vector<double> z(p);
  std::vector<double> h(p);
  std::vector<double> acc(p * p, 0.0);
  for (int d = 0; d < ndraws; ++d) {
    for (auto& v : z) v = rng.normal();
    latent_field(lap, z, tau, h);
    for (std::size_t r = 0; r < p; ++r)
      for (std::size_t c = r; c < p; ++c) acc[r * p + c] += h[r] * h[c];
  }
  for (std::size_t r = 0; r < p; ++r) {
    for (std::size_t c = r; c < p; ++c) {
      const double est = acc[r * p + c] / ndraws;
      const double truth = cov[r * p + c];
      // var of the sample cross-moment of a Gaussian pair
      const double sd = std::sqrt(
          (cov[r * p + r] * cov[c * p + c] + truth * truth) / ndraws);
      CHECK(std::abs(est - truth) <= 4.0 * sd);
    }
  }
}
