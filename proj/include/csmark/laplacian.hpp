// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "csmark/grid.hpp"

namespace csmark {

/// Graph Laplacian of the 4-neighbour grid graph on the cells of a GridSpec,
/// the precision matrix Upsilon = L + p^-2 I, and its Cholesky factor.
///
/// With the row-major cell ordering both matrices are banded with half
/// bandwidth j_bins, so the factor is stored as a lower band: the whitening
/// solve and the factorisation are O(p*b) and O(p*b^2). The object is
/// immutable once build_precision has run; independent chains may share one
/// factorisation.
class GridLaplacian {
 public:
  const GridSpec& grid() const { return grid_; }
  int size() const { return grid_.p; }
  int bandwidth() const { return band_; }
  double precision_shift() const { return shift_; }
  bool has_precision() const { return factored_; }

  int degree(int l) const {
    const auto [j, k] = grid_.coords_of(l);
    return (j > 0) + (j < grid_.j_bins - 1) + (k > 0) + (k < grid_.k_bins - 1);
  }

  /// Entry L[a][b] of the Laplacian.
  double laplacian_at(int a, int b) const {
    if (a == b) return degree(a);
    return adjacent(a, b) ? -1.0 : 0.0;
  }

  /// y = L x
  void apply_laplacian(std::span<const double> x, std::span<double> y) const {
    const int J = grid_.j_bins;
    const int K = grid_.k_bins;
    for (int k = 0; k < K; ++k) {
      for (int j = 0; j < J; ++j) {
        const int l = grid_.index_of(j, k);
        double v = degree(l) * x[static_cast<std::size_t>(l)];
        if (j > 0) v -= x[static_cast<std::size_t>(l - 1)];
        if (j < J - 1) v -= x[static_cast<std::size_t>(l + 1)];
        if (k > 0) v -= x[static_cast<std::size_t>(l - J)];
        if (k < K - 1) v -= x[static_cast<std::size_t>(l + J)];
        y[static_cast<std::size_t>(l)] = v;
      }
    }
  }

  std::vector<double> laplacian_dense() const {
    const std::size_t p = static_cast<std::size_t>(grid_.p);
    std::vector<double> m(p * p, 0.0);
    for (int a = 0; a < grid_.p; ++a)
      for (int b = 0; b < grid_.p; ++b)
        m[static_cast<std::size_t>(a) * p + static_cast<std::size_t>(b)] =
            laplacian_at(a, b);
    return m;
  }

  std::vector<double> precision_dense() const {
    auto m = laplacian_dense();
    const std::size_t p = static_cast<std::size_t>(grid_.p);
    for (std::size_t i = 0; i < p; ++i) m[i * p + i] += shift_;
    return m;
  }

  /// Upper factor U with Upsilon = U^T U, as a dense matrix (test use).
  std::vector<double> chol_upper_dense() const {
    require_factor();
    const std::size_t p = static_cast<std::size_t>(grid_.p);
    std::vector<double> m(p * p, 0.0);
    for (int i = 0; i < grid_.p; ++i)
      for (int d = 0; d <= band_ && i - d >= 0; ++d)
        m[static_cast<std::size_t>(i - d) * p + static_cast<std::size_t>(i)] =
            chol_[static_cast<std::size_t>(i) * (band_ + 1) +
                  static_cast<std::size_t>(d)];
    return m;
  }

  /// Back substitution U x = b.
  void solve_upper(std::span<const double> b, std::span<double> x) const {
    require_factor();
    const int p = grid_.p;
    const int w = band_ + 1;
    for (int i = p - 1; i >= 0; --i) {
      double s = b[static_cast<std::size_t>(i)];
      const int mmax = std::min(p - 1, i + band_);
      for (int m = i + 1; m <= mmax; ++m)
        s -= chol_[static_cast<std::size_t>(m) * w +
                   static_cast<std::size_t>(m - i)] *
             x[static_cast<std::size_t>(m)];
      x[static_cast<std::size_t>(i)] = s / chol_[static_cast<std::size_t>(i) * w];
    }
  }

  /// Forward substitution U^T x = b.
  void solve_lower(std::span<const double> b, std::span<double> x) const {
    require_factor();
    const int p = grid_.p;
    const int w = band_ + 1;
    for (int i = 0; i < p; ++i) {
      double s = b[static_cast<std::size_t>(i)];
      const int mmin = std::max(0, i - band_);
      for (int m = mmin; m < i; ++m)
        s -= chol_[static_cast<std::size_t>(i) * w +
                   static_cast<std::size_t>(i - m)] *
             x[static_cast<std::size_t>(m)];
      x[static_cast<std::size_t>(i)] = s / chol_[static_cast<std::size_t>(i) * w];
    }
  }

  /// x = Upsilon^-1 b through the factor.
  void precision_solve(std::span<const double> b, std::span<double> x) const {
    std::vector<double> tmp(b.size());
    solve_lower(b, tmp);
    solve_upper(tmp, x);
  }

  friend GridLaplacian build_laplacian(const GridSpec& grid);
  friend void build_precision(GridLaplacian& lap);

 private:
  bool adjacent(int a, int b) const {
    const auto [ja, ka] = grid_.coords_of(a);
    const auto [jb, kb] = grid_.coords_of(b);
    const int dj = ja > jb ? ja - jb : jb - ja;
    const int dk = ka > kb ? ka - kb : kb - ka;
    return dj + dk == 1;
  }

  void require_factor() const {
    if (!factored_)
      throw std::logic_error("precision matrix has not been built");
  }

  GridSpec grid_;
  int band_ = 0;
  double shift_ = 1.0;            // p^-2
  std::vector<double> chol_;      // lower band, chol_[i*(band_+1)+d] = Lf[i][i-d]
  bool factored_ = false;
};

/// Builds the Laplacian part only; the precision and its factor are filled by
/// build_precision.
inline GridLaplacian build_laplacian(const GridSpec& grid) {
  GridLaplacian lap;
  lap.grid_ = grid;
  int band = 0;
  if (grid.j_bins > 1) band = 1;
  if (grid.k_bins > 1) band = grid.j_bins;
  lap.band_ = std::min(band, grid.p - 1);
  lap.shift_ = 1.0 / (static_cast<double>(grid.p) * grid.p);
  return lap;
}

/// Fills Upsilon = L + p^-2 I and factors it once (banded Cholesky,
/// Upsilon = U^T U). Idempotent.
inline void build_precision(GridLaplacian& lap) {
  if (lap.factored_) return;
  const GridSpec& grid = lap.grid_;
  const int p = grid.p;
  const int b = lap.band_;
  const int w = b + 1;

  auto upsilon_at = [&](int a, int c) {
    if (a == c) return lap.degree(a) + lap.shift_;
    return lap.laplacian_at(a, c);
  };

  lap.chol_.assign(static_cast<std::size_t>(p) * w, 0.0);
  auto lf = [&](int i, int j) -> double& {
    return lap.chol_[static_cast<std::size_t>(i) * w + static_cast<std::size_t>(i - j)];
  };
  for (int i = 0; i < p; ++i) {
    for (int j = std::max(0, i - b); j <= i; ++j) {
      double s = upsilon_at(i, j);
      for (int m = std::max(0, i - b); m < j; ++m) s -= lf(i, m) * lf(j, m);
      if (j < i) {
        lf(i, j) = s / lf(j, j);
      } else {
        if (!(s > 0.0))
          throw std::runtime_error("Cholesky factorisation failed: matrix not positive definite");
        lf(i, i) = std::sqrt(s);
      }
    }
  }
  lap.factored_ = true;
}

/// Numerically stable softmax (max-shift trick).
inline BinWeights softmax(std::span<const double> h) {
  double hmax = -std::numeric_limits<double>::infinity();
  for (double v : h) hmax = std::max(hmax, v);
  BinWeights w;
  w.theta.resize(h.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    w.theta[i] = std::exp(h[i] - hmax);
    sum += w.theta[i];
  }
  for (double& v : w.theta) v /= sum;
  return w;
}

/// Whitened field H = U^-1 z * sqrt(tau).
inline void latent_field(const GridLaplacian& lap, std::span<const double> zvec,
                         double tau, std::span<double> h) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (zvec.size() != static_cast<std::size_t>(lap.size()))
    throw std::invalid_argument("latent vector does not match the grid");
  lap.solve_upper(zvec, h);
  const double rt = std::sqrt(tau);
  for (double& v : h) v *= rt;
}

/// theta = softmax(U^-1 z * sqrt(tau)): the prior pushforward of independent
/// standard normals through the whitening map and the softmax.
inline BinWeights theta_from_latent(const GridLaplacian& lap,
                                    std::span<const double> zvec, double tau) {
  std::vector<double> h(zvec.size());
  latent_field(lap, zvec, tau, h);
  return softmax(h);
}

}  // namespace csmark
