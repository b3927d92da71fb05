// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace csmark {

/// Rectangular partition of the support [0,m1] x [0,m2] into j_bins * k_bins
/// equal cells.
///
/// Cell (j,k) covers [j*dx,(j+1)*dx) x [k*dy,(k+1)*dy); the outer boundary is
/// closed so every support point belongs to exactly one cell. The linear index
/// is l = k*j_bins + j (row-major over mark rows). Immutable after
/// construction and safe to share across threads.
struct GridSpec {
  double m1 = 1.0;
  double m2 = 1.0;
  int j_bins = 1;
  int k_bins = 1;
  // derived
  double dx = 1.0;
  double dy = 1.0;
  int p = 1;

  int index_of(int j, int k) const { return k * j_bins + j; }
  std::pair<int, int> coords_of(int l) const { return {l % j_bins, l / j_bins}; }
  double cell_area() const { return dx * dy; }

  bool contains(double x, double y) const {
    return x >= 0.0 && x <= m1 && y >= 0.0 && y <= m2;
  }

  /// Column holding x; the right edge x == m1 maps to the last column.
  int column_of(double x) const {
    if (x < 0.0 || x > m1) throw std::domain_error("x outside grid support");
    const int j = static_cast<int>(x / dx);
    return j >= j_bins ? j_bins - 1 : j;
  }

  /// Row holding y; the top edge y == m2 maps to the last row.
  int row_of(double y) const {
    if (y < 0.0 || y > m2) throw std::domain_error("y outside grid support");
    const int k = static_cast<int>(y / dy);
    return k >= k_bins ? k_bins - 1 : k;
  }

  bool operator==(const GridSpec&) const = default;
};

inline GridSpec make_grid(double m1, double m2, int j_bins, int k_bins) {
  if (!(m1 > 0.0) || !(m2 > 0.0))
    throw std::invalid_argument("grid support bounds must be positive");
  if (j_bins < 1 || k_bins < 1)
    throw std::invalid_argument("grid must have at least one bin per axis");
  GridSpec g;
  g.m1 = m1;
  g.m2 = m2;
  g.j_bins = j_bins;
  g.k_bins = k_bins;
  g.dx = m1 / j_bins;
  g.dy = m2 / k_bins;
  g.p = j_bins * k_bins;
  return g;
}

/// Probability vector over the p grid cells; the model parameter.
struct BinWeights {
  std::vector<double> theta;

  BinWeights() = default;
  explicit BinWeights(std::vector<double> t) : theta(std::move(t)) {}

  std::size_t size() const { return theta.size(); }
  double operator[](std::size_t l) const { return theta[l]; }

  static BinWeights uniform(int p) {
    BinWeights w;
    w.theta.assign(static_cast<std::size_t>(p), 1.0 / p);
    return w;
  }

  double sum() const {
    double s = 0.0;
    for (double v : theta) s += v;
    return s;
  }

  bool is_valid(double tol = 1e-10) const {
    if (theta.empty()) return false;
    for (double v : theta)
      if (!(v >= 0.0) || !std::isfinite(v)) return false;
    return std::abs(sum() - 1.0) <= tol;
  }

  void normalise() {
    const double s = sum();
    if (!(s > 0.0)) throw std::invalid_argument("cannot normalise zero-mass weights");
    for (double& v : theta) v /= s;
  }
};

/// Piecewise-constant density f_theta(x,y) = theta_l / cell area on cell l.
inline double density_at(const GridSpec& grid, const BinWeights& w, double x,
                         double y) {
  if (!grid.contains(x, y)) throw std::domain_error("point outside grid support");
  const int l = grid.index_of(grid.column_of(x), grid.row_of(y));
  return w.theta[static_cast<std::size_t>(l)] / grid.cell_area();
}

/// Distribution function F(x,y) of f_theta, by exact integration.
inline double cdf_at(const GridSpec& grid, const BinWeights& w, double x,
                     double y) {
  if (!grid.contains(x, y)) throw std::domain_error("point outside grid support");
  std::vector<double> fx(static_cast<std::size_t>(grid.j_bins));
  for (int j = 0; j < grid.j_bins; ++j) {
    const double f = (x - j * grid.dx) / grid.dx;
    fx[static_cast<std::size_t>(j)] = f <= 0.0 ? 0.0 : (f >= 1.0 ? 1.0 : f);
  }
  double acc = 0.0;
  for (int k = 0; k < grid.k_bins; ++k) {
    const double f = (y - k * grid.dy) / grid.dy;
    const double fy = f <= 0.0 ? 0.0 : (f >= 1.0 ? 1.0 : f);
    if (fy == 0.0) continue;
    for (int j = 0; j < grid.j_bins; ++j) {
      const double fj = fx[static_cast<std::size_t>(j)];
      if (fj == 0.0) break;  // columns right of x contribute nothing
      acc += w.theta[static_cast<std::size_t>(grid.index_of(j, k))] * fj * fy;
    }
  }
  return acc;
}

/// Bin masses of an arbitrary density: w_l = integral of f over cell l.
///
/// Tensor-product midpoint rule per cell at 16/32/64 points per axis with
/// Richardson extrapolation; the two extrapolated levels act as the
/// convergence check. Entries are renormalised to sum to one afterwards.
template <typename F>
BinWeights true_bin_masses(const GridSpec& grid, F&& f) {
  auto cell_integral = [&](int j, int k, int n) {
    const double x0 = j * grid.dx;
    const double y0 = k * grid.dy;
    const double hx = grid.dx / n;
    const double hy = grid.dy / n;
    double s = 0.0;
    for (int a = 0; a < n; ++a) {
      const double x = x0 + (a + 0.5) * hx;
      double row = 0.0;
      for (int b = 0; b < n; ++b) row += f(x, y0 + (b + 0.5) * hy);
      s += row;
    }
    return s * hx * hy;
  };

  BinWeights w;
  w.theta.resize(static_cast<std::size_t>(grid.p));
  for (int k = 0; k < grid.k_bins; ++k) {
    for (int j = 0; j < grid.j_bins; ++j) {
      // the midpoint rule is O(h^2); Richardson extrapolation cancels that
      // term, and the two extrapolated levels bound the h^4 remainder
      const double i16 = cell_integral(j, k, 16);
      const double i32 = cell_integral(j, k, 32);
      const double i64 = cell_integral(j, k, 64);
      const double extrap32 = i32 + (i32 - i16) / 3.0;
      const double extrap64 = i64 + (i64 - i32) / 3.0;
      const double err = std::abs(extrap64 - extrap32);
      if (err > 1e-9 * std::max(1.0, std::abs(extrap64)) + 1e-10)
        throw std::runtime_error(
            "bin-mass quadrature did not converge at cell (" +
            std::to_string(j) + "," + std::to_string(k) +
            "): estimate=" + std::to_string(extrap64) +
            " error=" + std::to_string(err));
      w.theta[static_cast<std::size_t>(grid.index_of(j, k))] =
          extrap64 < 0.0 ? 0.0 : extrap64;
    }
  }
  const double total = w.sum();
  if (std::abs(total - 1.0) > 1e-6)
    throw std::runtime_error("bin masses sum to " + std::to_string(total) +
                             "; integrand is not a probability density");
  w.normalise();
  return w;
}

}  // namespace csmark
