// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

#include "csmark/grid.hpp"

namespace csmark {

enum class GroundUnits { index, physical };

/// Cityblock ground distance between two cells: |dj|+|dk| in index units,
/// |dj|*dx + |dk|*dy in physical units.
inline double ground_distance(const GridSpec& grid, int a, int b,
                              GroundUnits units) {
  if (a < 0 || a >= grid.p || b < 0 || b >= grid.p)
    throw std::invalid_argument("cell index out of range");
  const auto [ja, ka] = grid.coords_of(a);
  const auto [jb, kb] = grid.coords_of(b);
  const int dj = std::abs(ja - jb);
  const int dk = std::abs(ka - kb);
  if (units == GroundUnits::index) return dj + dk;
  return dj * grid.dx + dk * grid.dy;
}

/// Min-cost-flow formulation of optimal transport between two cell-mass
/// vectors: node supplies are mass differences, edges are the 4-neighbour
/// grid graph with the per-step ground cost. Valid because the cityblock
/// ground cost equals shortest-path length on that graph.
struct FlowProblem {
  struct Edge {
    int u = 0;
    int v = 0;
    double cost = 0.0;
  };
  int p = 0;
  std::vector<double> supply;
  std::vector<Edge> edges;
};

inline FlowProblem make_flow_problem(const GridSpec& grid, const BinWeights& from,
                                     const BinWeights& to, GroundUnits units) {
  if (from.size() != static_cast<std::size_t>(grid.p) || to.size() != from.size())
    throw std::invalid_argument("weight vectors do not match the grid");
  if (std::abs(from.sum() - to.sum()) > 1e-10)
    throw std::invalid_argument("total masses differ beyond tolerance");

  FlowProblem fp;
  fp.p = grid.p;
  fp.supply.resize(static_cast<std::size_t>(grid.p));
  for (int l = 0; l < grid.p; ++l)
    fp.supply[static_cast<std::size_t>(l)] =
        from.theta[static_cast<std::size_t>(l)] - to.theta[static_cast<std::size_t>(l)];

  const double hx = units == GroundUnits::index ? 1.0 : grid.dx;
  const double hy = units == GroundUnits::index ? 1.0 : grid.dy;
  for (int k = 0; k < grid.k_bins; ++k) {
    for (int j = 0; j < grid.j_bins; ++j) {
      const int l = grid.index_of(j, k);
      if (j + 1 < grid.j_bins) fp.edges.push_back({l, l + 1, hx});
      if (k + 1 < grid.k_bins) fp.edges.push_back({l, l + grid.j_bins, hy});
    }
  }
  return fp;
}

/// flow[e] is the signed mass moved along edge e (positive from u to v);
/// cost is accumulated during the augmentations.
struct FlowSolution {
  double cost = 0.0;
  std::vector<double> flow;
};

/// Successive shortest paths with Johnson potentials. Every augmentation
/// saturates at least one terminal arc exactly, so the loop runs at most
/// once per nonzero-supply node.
inline FlowSolution solve_min_cost_flow(const FlowProblem& fp) {
  struct Arc {
    int to = 0;
    double residual = 0.0;
    double cost = 0.0;
  };
  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr double kUnbounded = 1e30;

  const int n = fp.p + 2;
  const int src = fp.p;
  const int snk = fp.p + 1;
  std::vector<Arc> arcs;
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  auto add_arc = [&](int u, int v, double cap, double cost) {
    adj[static_cast<std::size_t>(u)].push_back(static_cast<int>(arcs.size()));
    arcs.push_back({v, cap, cost});
    adj[static_cast<std::size_t>(v)].push_back(static_cast<int>(arcs.size()));
    arcs.push_back({u, 0.0, -cost});
  };

  // grid edges, both directions
  std::vector<int> fwd_arc(fp.edges.size());
  std::vector<int> bwd_arc(fp.edges.size());
  for (std::size_t e = 0; e < fp.edges.size(); ++e) {
    const auto& ed = fp.edges[e];
    if (!(ed.cost > 0.0)) throw std::invalid_argument("edge costs must be positive");
    fwd_arc[e] = static_cast<int>(arcs.size());
    add_arc(ed.u, ed.v, kUnbounded, ed.cost);
    bwd_arc[e] = static_cast<int>(arcs.size());
    add_arc(ed.v, ed.u, kUnbounded, ed.cost);
  }
  // terminal arcs
  double excess = 0.0;
  for (int l = 0; l < fp.p; ++l) {
    const double s = fp.supply[static_cast<std::size_t>(l)];
    excess += s;
    if (s > 0.0)
      add_arc(src, l, s, 0.0);
    else if (s < 0.0)
      add_arc(l, snk, -s, 0.0);
  }
  if (std::abs(excess) > 1e-10)
    throw std::invalid_argument("supplies do not balance");

  std::vector<double> pot(static_cast<std::size_t>(n), 0.0);
  std::vector<double> dist(static_cast<std::size_t>(n));
  std::vector<int> parent_arc(static_cast<std::size_t>(n));
  double total_cost = 0.0;

  for (;;) {
    // remaining supply at the source
    double remaining = 0.0;
    for (int a : adj[static_cast<std::size_t>(src)])
      if (arcs[static_cast<std::size_t>(a)].cost >= 0.0)
        remaining += arcs[static_cast<std::size_t>(a)].residual;
    // the two input masses may differ by fp dust within the 1e-10 guard
    if (remaining <= 1e-13) break;

    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(parent_arc.begin(), parent_arc.end(), -1);
    dist[static_cast<std::size_t>(src)] = 0.0;
    using QEntry = std::pair<double, int>;
    std::priority_queue<QEntry, std::vector<QEntry>, std::greater<QEntry>> pq;
    pq.push({0.0, src});
    while (!pq.empty()) {
      const auto [d, u] = pq.top();
      pq.pop();
      if (d > dist[static_cast<std::size_t>(u)]) continue;
      for (int a : adj[static_cast<std::size_t>(u)]) {
        const Arc& arc = arcs[static_cast<std::size_t>(a)];
        if (!(arc.residual > 0.0)) continue;
        double rc = arc.cost + pot[static_cast<std::size_t>(u)] -
                    pot[static_cast<std::size_t>(arc.to)];
        if (rc < 0.0) rc = 0.0;  // floating-point dust on tight arcs
        const double nd = d + rc;
        if (nd < dist[static_cast<std::size_t>(arc.to)]) {
          dist[static_cast<std::size_t>(arc.to)] = nd;
          parent_arc[static_cast<std::size_t>(arc.to)] = a;
          pq.push({nd, arc.to});
        }
      }
    }
    if (parent_arc[static_cast<std::size_t>(snk)] < 0)
      throw std::runtime_error("min-cost flow: sink unreachable");

    for (std::size_t v = 0; v < pot.size(); ++v)
      if (dist[v] < kInf) pot[v] += dist[v];

    double push = kInf;
    for (int v = snk; v != src;) {
      const Arc& arc = arcs[static_cast<std::size_t>(parent_arc[static_cast<std::size_t>(v)])];
      push = std::min(push, arc.residual);
      v = arcs[static_cast<std::size_t>(parent_arc[static_cast<std::size_t>(v)] ^ 1)].to;
    }
    for (int v = snk; v != src;) {
      const int a = parent_arc[static_cast<std::size_t>(v)];
      arcs[static_cast<std::size_t>(a)].residual -= push;
      arcs[static_cast<std::size_t>(a ^ 1)].residual += push;
      total_cost += push * arcs[static_cast<std::size_t>(a)].cost;
      v = arcs[static_cast<std::size_t>(a ^ 1)].to;
    }
  }

  FlowSolution sol;
  sol.cost = total_cost;
  sol.flow.resize(fp.edges.size());
  for (std::size_t e = 0; e < fp.edges.size(); ++e) {
    const double f_uv = arcs[static_cast<std::size_t>(fwd_arc[e] + 1)].residual;
    const double f_vu = arcs[static_cast<std::size_t>(bwd_arc[e] + 1)].residual;
    sol.flow[e] = f_uv - f_vu;
  }
  return sol;
}

/// Exact Wasserstein-1 distance with cityblock ground metric between two
/// cell-mass vectors on the grid. Arguments are canonicalised so the result
/// is bitwise symmetric.
inline double wasserstein1(const GridSpec& grid, const BinWeights& p,
                           const BinWeights& q,
                           GroundUnits units = GroundUnits::physical) {
  const BinWeights* a = &p;
  const BinWeights* b = &q;
  if (std::lexicographical_compare(q.theta.begin(), q.theta.end(),
                                   p.theta.begin(), p.theta.end()))
    std::swap(a, b);
  const FlowProblem fp = make_flow_problem(grid, *a, *b, units);
  return solve_min_cost_flow(fp).cost;
}

}  // namespace csmark
