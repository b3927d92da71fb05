// Apache License, Version 2.0, refer to LICENSE.txt

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "csmark/grid.hpp"
#include "csmark/rng.hpp"
#include "csmark/transport.hpp"
#include "support/lp_oracle.hpp"

using namespace csmark;

namespace {

BinWeights random_weights(int p, Rng& rng) {
  BinWeights w;
  w.theta.resize(static_cast<std::size_t>(p));
  double sum = 0.0;
  for (auto& v : w.theta) {
    v = rng.exponential();
    sum += v;
  }
  for (auto& v : w.theta) v /= sum;
  return w;
}

BinWeights point_mass(int p, int at) {
  BinWeights w;
  w.theta.assign(static_cast<std::size_t>(p), 0.0);
  w.theta[static_cast<std::size_t>(at)] = 1.0;
  return w;
}

}  // namespace

TEST_CASE("ground_distance") {
  const auto g = make_grid(1.0, 2.0, 25, 50);
  CHECK(ground_distance(g, 7, 7, GroundUnits::index) == 0.0);
  CHECK(ground_distance(g, 7, 7, GroundUnits::physical) == 0.0);

  const int a = g.index_of(3, 4);
  const int right = g.index_of(4, 4);
  CHECK(ground_distance(g, a, right, GroundUnits::index) == 1.0);

  const int b0 = g.index_of(0, 0);
  const int b1 = g.index_of(2, 3);
  CHECK(ground_distance(g, b0, b1, GroundUnits::physical) ==
        doctest::Approx(0.20).epsilon(1e-12));
  CHECK(ground_distance(g, b0, b1, GroundUnits::index) == 5.0);

  CHECK_THROWS_AS(ground_distance(g, -1, 0, GroundUnits::index),
                  std::invalid_argument);
  CHECK_THROWS_AS(ground_distance(g, 0, g.p, GroundUnits::index),
                  std::invalid_argument);
}

TEST_CASE("wasserstein1 trivial cases") {
  const auto g = make_grid(1.0, 2.0, 3, 4);
  Rng rng(41);
  const auto w = random_weights(g.p, rng);
  CHECK(wasserstein1(g, w, w) == 0.0);

  for (int trial = 0; trial < 30; ++trial) {
    const int a = static_cast<int>(rng.uniform01() * g.p);
    const int b = static_cast<int>(rng.uniform01() * g.p);
    for (auto units : {GroundUnits::index, GroundUnits::physical}) {
      const double d = wasserstein1(g, point_mass(g.p, a), point_mass(g.p, b), units);
      CHECK(d == doctest::Approx(ground_distance(g, a, b, units)).epsilon(1e-12));
    }
  }
}

TEST_CASE("wasserstein1 equals the dense LP oracle") {
  Rng rng(42);
  for (int trial = 0; trial < 60; ++trial) {
    const int J = 1 + static_cast<int>(rng.uniform01() * 4);
    const int K = 1 + static_cast<int>(rng.uniform01() * 4);
    const auto g = make_grid(1.0, 2.0, J, K);
    const auto a = random_weights(g.p, rng);
    const auto b = random_weights(g.p, rng);
    for (auto units : {GroundUnits::index, GroundUnits::physical}) {
      const double mine = wasserstein1(g, a, b, units);
      const double lp = csmark_test::lp_transport_cost(g, a, b, units);
      CHECK(mine == doctest::Approx(lp).epsilon(1e-9));
    }
  }
}

TEST_CASE("wasserstein1 on one-dimensional grids equals the cumulative-sum formula") {
  Rng rng(43);
  for (int trial = 0; trial < 40; ++trial) {
    const bool horizontal = rng.uniform01() < 0.5;
    const int n = 2 + static_cast<int>(rng.uniform01() * 10);
    const auto g = horizontal ? make_grid(1.0, 2.0, n, 1) : make_grid(1.0, 2.0, 1, n);
    const double spacing = horizontal ? g.dx : g.dy;
    const auto a = random_weights(g.p, rng);
    const auto b = random_weights(g.p, rng);
    double cum = 0.0;
    double expect = 0.0;
    for (int l = 0; l + 1 < g.p; ++l) {
      cum += a.theta[static_cast<std::size_t>(l)] - b.theta[static_cast<std::size_t>(l)];
      expect += std::abs(cum) * spacing;
    }
    CHECK(wasserstein1(g, a, b) == doctest::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("metric axioms") {
  const auto g = make_grid(1.0, 2.0, 5, 6);
  Rng rng(44);
  for (int trial = 0; trial < 150; ++trial) {
    const auto a = random_weights(g.p, rng);
    const auto b = random_weights(g.p, rng);
    const auto c = random_weights(g.p, rng);
    const double dab = wasserstein1(g, a, b);
    const double dba = wasserstein1(g, b, a);
    const double dac = wasserstein1(g, a, c);
    const double dcb = wasserstein1(g, c, b);
    CHECK(dab == dba);  // exact, by argument canonicalisation
    CHECK(dab >= 0.0);
    CHECK(dab <= dac + dcb + 1e-9);
  }
}

TEST_CASE("flow solution is feasible and reproduces its cost") {
  Rng rng(45);
  for (int trial = 0; trial < 25; ++trial) {
    const auto g = make_grid(1.0, 2.0, 4, 5);
    const auto a = random_weights(g.p, rng);
    const auto b = random_weights(g.p, rng);
    const auto fp = make_flow_problem(g, a, b, GroundUnits::physical);
    const auto sol = solve_min_cost_flow(fp);

    // node balance: outflow - inflow = supply
    std::vector<double> balance(static_cast<std::size_t>(fp.p), 0.0);
    double recost = 0.0;
    for (std::size_t e = 0; e < fp.edges.size(); ++e) {
      balance[static_cast<std::size_t>(fp.edges[e].u)] += sol.flow[e];
      balance[static_cast<std::size_t>(fp.edges[e].v)] -= sol.flow[e];
      recost += std::abs(sol.flow[e]) * fp.edges[e].cost;
    }
    for (int l = 0; l < fp.p; ++l)
      CHECK(balance[static_cast<std::size_t>(l)] ==
            doctest::Approx(fp.supply[static_cast<std::size_t>(l)]).epsilon(1e-12));
    CHECK(recost == doctest::Approx(sol.cost).epsilon(1e-10));
  }
}

TEST_CASE("mass mismatch is rejected") {
  const auto g = make_grid(1.0, 2.0, 2, 2);
  auto a = BinWeights::uniform(4);
  auto b = BinWeights::uniform(4);
  b.theta[0] += 0.01;
  CHECK_THROWS_AS(wasserstein1(g, a, b), std::invalid_argument);
}

TEST_CASE("degenerate zero-mass cells are ordinary nodes") {
  const auto g = make_grid(1.0, 2.0, 3, 1);
  BinWeights a{std::vector<double>{0.5, 0.0, 0.5}};
  BinWeights b{std::vector<double>{0.0, 1.0, 0.0}};
  // both halves travel one step of dx = 1/3
  CHECK(wasserstein1(g, a, b) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(wasserstein1(g, a, b, GroundUnits::index) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("single-cell grid") {
  const auto g = make_grid(1.0, 2.0, 1, 1);
  BinWeights one{std::vector<double>{1.0}};
  CHECK(wasserstein1(g, one, one) == 0.0);
}
