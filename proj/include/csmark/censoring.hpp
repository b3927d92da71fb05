// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "csmark/grid.hpp"

namespace csmark {

/// One current-status record: inspection time t and z = indicator * mark.
/// z == 0 encodes "event not yet observed"; z > 0 is the observed mark.
struct Observation {
  double t = 0.0;
  double z = 0.0;
};

/// Sparse shaded-area-fraction vector of one observation: the fraction of
/// each cell's area compatible with the censoring information. theta^T a is
/// the observation's likelihood contribution up to constants.
struct CensoringInfo {
  std::vector<std::pair<int, double>> entries;  // (cell index, fraction in (0,1])
};

/// Shading geometry. For z > 0 the compatible region is {x <= t} within the
/// mark row of z; for z == 0 it is {x > t} across all rows. A boundary column
/// with zero shaded area is omitted.
inline CensoringInfo censoring_info(const GridSpec& grid, const Observation& obs) {
  if (obs.t < 0.0 || obs.t > grid.m1)
    throw std::domain_error("inspection time outside grid support");
  if (obs.z < 0.0 || obs.z > grid.m2)
    throw std::domain_error("mark outside grid support");

  CensoringInfo info;
  if (obs.z > 0.0) {
    const int k = grid.row_of(obs.z);
    for (int j = 0; j < grid.j_bins; ++j) {
      const double frac = (obs.t - j * grid.dx) / grid.dx;
      if (frac <= 0.0) break;
      info.entries.emplace_back(grid.index_of(j, k), frac >= 1.0 ? 1.0 : frac);
    }
  } else {
    std::vector<double> colfrac(static_cast<std::size_t>(grid.j_bins));
    for (int j = 0; j < grid.j_bins; ++j) {
      const double frac = ((j + 1) * grid.dx - obs.t) / grid.dx;
      colfrac[static_cast<std::size_t>(j)] =
          frac <= 0.0 ? 0.0 : (frac >= 1.0 ? 1.0 : frac);
    }
    for (int k = 0; k < grid.k_bins; ++k)
      for (int j = 0; j < grid.j_bins; ++j)
        if (colfrac[static_cast<std::size_t>(j)] > 0.0)
          info.entries.emplace_back(grid.index_of(j, k),
                                    colfrac[static_cast<std::size_t>(j)]);
  }
  return info;
}

inline std::vector<CensoringInfo> censoring_infos(
    const GridSpec& grid, std::span<const Observation> data) {
  std::vector<CensoringInfo> infos;
  infos.reserve(data.size());
  for (const auto& obs : data) infos.push_back(censoring_info(grid, obs));
  return infos;
}

inline double sparse_dot(const BinWeights& w, const CensoringInfo& info) {
  double s = 0.0;
  for (const auto& [l, frac] : info.entries)
    s += w.theta[static_cast<std::size_t>(l)] * frac;
  return s;
}

/// Log-likelihood up to an additive constant independent of theta (the
/// censoring-density factors g(t_i) and the mark-row widths dy are dropped).
/// Returns -infinity when any observation has zero mass, so Metropolis
/// rejection can handle such proposals uniformly.
inline double loglik(const BinWeights& w, std::span<const CensoringInfo> infos) {
  double ll = 0.0;
  for (const auto& info : infos) {
    const double dot = sparse_dot(w, info);
    if (!(dot > 0.0)) return -std::numeric_limits<double>::infinity();
    ll += std::log(dot);
  }
  return ll;
}

/// Density of one observation under the dominating measure (Lebesgue on the
/// z > 0 sheet plus Lebesgue on the z = 0 line):
///
///   s(t,z) = g(t) * ( d/dz F(t,z)   if z > 0
///                     1 - F_X(t)    if z == 0 ).
///
/// Evaluated through cdf_at, which makes it an oracle for the sparse
/// likelihood path: for piecewise-constant densities the row-difference
/// quotient of F equals the partial derivative exactly.
template <typename G>
double mu_density(const GridSpec& grid, const BinWeights& w, G&& g, double t,
                  double z) {
  if (t < 0.0 || t > grid.m1)
    throw std::domain_error("inspection time outside grid support");
  if (z < 0.0 || z > grid.m2) throw std::domain_error("mark outside grid support");
  if (z > 0.0) {
    const int k = grid.row_of(z);
    const double y_lo = k * grid.dy;
    const double y_hi = std::min((k + 1) * grid.dy, grid.m2);
    const double d2f =
        (cdf_at(grid, w, t, y_hi) - cdf_at(grid, w, t, y_lo)) / grid.dy;
    return g(t) * d2f;
  }
  return g(t) * (1.0 - cdf_at(grid, w, t, grid.m2));
}

/// L1 distance between the observation densities induced by two weight
/// vectors, integrated over the z > 0 sheet and the z = 0 line. Computed by
/// composite midpoint quadrature per column (the integrand is piecewise
/// smooth in t with kinks only at sign changes).
template <typename G>
double l1_mu_distance(const GridSpec& grid, const BinWeights& w1,
                      const BinWeights& w2, G&& g) {
  if (w1.size() != static_cast<std::size_t>(grid.p) || w2.size() != w1.size())
    throw std::invalid_argument("weight vectors do not match the grid");

  const std::size_t p = w1.size();
  std::vector<double> diff(p);
  for (std::size_t l = 0; l < p; ++l) diff[l] = w1.theta[l] - w2.theta[l];

  std::vector<double> colsum(static_cast<std::size_t>(grid.j_bins), 0.0);
  for (int k = 0; k < grid.k_bins; ++k)
    for (int j = 0; j < grid.j_bins; ++j)
      colsum[static_cast<std::size_t>(j)] +=
          diff[static_cast<std::size_t>(grid.index_of(j, k))];

  // xfrac_j(t) = |[0,t] cap column j| / dx
  auto integrand = [&](double t) {
    std::vector<double> xfrac(static_cast<std::size_t>(grid.j_bins));
    for (int j = 0; j < grid.j_bins; ++j) {
      const double f = (t - j * grid.dx) / grid.dx;
      xfrac[static_cast<std::size_t>(j)] = f <= 0.0 ? 0.0 : (f >= 1.0 ? 1.0 : f);
    }
    double sheet = 0.0;
    for (int k = 0; k < grid.k_bins; ++k) {
      double d2f = 0.0;  // difference of d/dz F(t, row k), times dy
      for (int j = 0; j < grid.j_bins; ++j)
        d2f += diff[static_cast<std::size_t>(grid.index_of(j, k))] *
               xfrac[static_cast<std::size_t>(j)];
      sheet += std::abs(d2f);  // dy * |d2f / dy|
    }
    double fx = 0.0;
    for (int j = 0; j < grid.j_bins; ++j)
      fx += colsum[static_cast<std::size_t>(j)] * xfrac[static_cast<std::size_t>(j)];
    return g(t) * (sheet + std::abs(fx));
  };

  const int pts_per_col = 128;
  double total = 0.0;
  for (int j = 0; j < grid.j_bins; ++j) {
    const double h = grid.dx / pts_per_col;
    double s = 0.0;
    for (int a = 0; a < pts_per_col; ++a) s += integrand(j * grid.dx + (a + 0.5) * h);
    total += s * h;
  }
  return total;
}

}  // namespace csmark
