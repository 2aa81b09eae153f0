#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "dense.hpp"
#include "lifshits/bounds.hpp"
#include "lifshits/rng.hpp"
#include "lifshits/stats.hpp"

using namespace lifshits;

namespace {

PotentialField constant_field(const Grid& grid, double c) {
  auto v = zero_field(grid);
  for (auto& x : v.values) x = c;
  return v;
}

Model empty_model(int npc) {
  MeasureConfig m;
  m.rho = 0.0;
  PotentialSpec p;
  p.alpha = {kInf, kInf};
  OperatorSpec op;
  op.n_per_cell = npc;
  return Model(m, p, op);
}

}  // namespace

TEST_CASE("Temple bound closed forms") {
  const auto u = PeriodicPotential::zero(2, 2);
  const auto psi = periodic_ground_state(u);
  const Grid grid(Box::cube(2, 0, 3), 2);
  const auto zero = temple_bound(zero_field(grid), psi, 1.0);
  CHECK(zero.valid);
  CHECK(zero.value == 0.0);
  const auto c = temple_bound(constant_field(grid, 0.1), psi, 1.0);
  CHECK(c.valid);
  CHECK(c.value == doctest::Approx(0.1 - 0.01 / 0.9).epsilon(1e-14));
  const double l0 = dense_eigenvalues(mezincescu_assemble(u, constant_field(grid, 0.1), grid, psi).matrix).front();
  CHECK(l0 == doctest::Approx(0.1));
  CHECK(c.value <= l0);
  CHECK_FALSE(temple_bound(constant_field(grid, 2.0), psi, 1.0).valid);
  CHECK(std::isinf(temple_bound(constant_field(grid, 2.0), psi, 1.0).value));
}

TEST_CASE("Temple bound from the free operator") {
  const auto u = PeriodicPotential::cosine(2, 2);
  const auto psi = periodic_ground_state(u);
  const Grid grid(Box::cube(2, 0, 4), 2);
  const auto h0 = mezincescu_assemble(u, grid, psi);
  const auto ev = dense_eigenvalues(h0.matrix);
  CHECK(spectral_gap(h0) == doctest::Approx(ev[1] - ev[0]).epsilon(1e-8));
  auto v = zero_field(grid);
  CounterRng rng(4);
  for (auto& x : v.values) x = 0.02 * rng.uniform();
  const auto t = temple_bound(h0, v, psi);
  REQUIRE(t.valid);
  const double l0 = dense_eigenvalues(mezincescu_assemble(u, v, grid, psi).matrix).front();
  CHECK(t.value <= l0 + 1e-12);
  CHECK(half_average_bound(v, psi) <= t.value + 1e-12);
}

TEST_CASE("half-average bound") {
  const auto psi = periodic_ground_state(PeriodicPotential::zero(2, 2));
  const Grid grid(Box::cube(2, 0, 3), 2);
  CHECK(half_average_bound(zero_field(grid), psi) == 0.0);
  CHECK(half_average_bound(constant_field(grid, 0.3), psi) == doctest::Approx(0.15));
}

TEST_CASE("smoothed indicator") {
  const Box box = Box::cube(1, 0, 8);
  const std::vector<double> c{4.0}, mid{4.0 + 2.0}, edge{8.0};
  CHECK(smoothed_indicator(c, box) == 1.0);
  CHECK(smoothed_indicator(mid, box) == 1.0);
  CHECK(smoothed_indicator(edge, box) == 0.0);
  const std::vector<double> ramp{4.0 + 3.0};
  CHECK(smoothed_indicator(ramp, box) == doctest::Approx(0.5));
}

TEST_CASE("Rayleigh-Ritz gradient term scales like L^-2") {
  const auto u = PeriodicPotential::zero(2, 2);
  const auto psi = periodic_ground_state(u);
  std::vector<double> lx, ly;
  for (int L : {8, 16, 32}) {
    const Grid grid(Box::cube(2, 0, L), 2);
    const auto v = zero_field(grid);
    const auto rr = rayleigh_ritz_upper(dirichlet_assemble(u, v, grid, psi), v, psi);
    CHECK(rr.potential_term == 0.0);
    CHECK(rr.value == doctest::Approx(rr.gradient_term));
    lx.push_back(std::log(L));
    ly.push_back(std::log(rr.value));
  }
  CHECK(least_squares(lx, ly).slope == doctest::Approx(-2.0).epsilon(0.1));
}

TEST_CASE("Rayleigh-Ritz with a constant potential") {
  const auto u = PeriodicPotential::cosine(2, 2);
  const auto psi = periodic_ground_state(u);
  const Grid grid(Box::cube(2, 0, 8), 2);
  const auto zero = zero_field(grid), c = constant_field(grid, 0.4);
  const auto r0 = rayleigh_ritz_upper(dirichlet_assemble(u, zero, grid, psi), zero, psi);
  const auto rc = rayleigh_ritz_upper(dirichlet_assemble(u, c, grid, psi), c, psi);
  CHECK(rc.potential_term == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(rc.value == doctest::Approx(0.4 + r0.gradient_term).epsilon(1e-12));
}

TEST_CASE("Rayleigh-Ritz is an upper bound") {
  const auto u = PeriodicPotential::cosine(2, 2);
  const auto psi = periodic_ground_state(u);
  const Grid grid(Box::cube(2, 0, 6), 2);
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto v = zero_field(grid);
    CounterRng rng(s);
    for (auto& x : v.values) x = 10.0 * rng.uniform() * rng.uniform();
    const auto hd = dirichlet_assemble(u, v, grid, psi);
    CHECK(rayleigh_ritz_upper(hd, v, psi).value >= dense_eigenvalues(hd.matrix).front() - 1e-12);
  }
}

TEST_CASE("gap scaling of the free Mezincescu operator") {
  const std::vector<int> sizes{4, 8, 16, 32};
  const int npc = 4;
  const double a = 1.0 / npc;
  const auto g1 = gap_scaling(PeriodicPotential::zero(1, npc), sizes);
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const double nodes = sizes[i] * npc;
    CHECK(g1.gaps[i] == doctest::Approx((2.0 - 2.0 * std::cos(std::numbers::pi / nodes)) / (a * a)).epsilon(1e-8));
  }
  CHECK(g1.exponent == doctest::Approx(-2.0).epsilon(0.025));
  const std::vector<int> small{4, 8, 16};
  const auto g2 = gap_scaling(PeriodicPotential::zero(2, 2), small);
  CHECK(g2.exponent == doctest::Approx(-2.0).epsilon(0.05));
  const auto gc = gap_scaling(PeriodicPotential::cosine(1, npc), sizes);
  CHECK(gc.all_positive);
  CHECK(gc.exponent == doctest::Approx(-2.0).epsilon(0.1));
}

TEST_CASE("sandwich without impurities is deterministic") {
  const int npc = 2, L = 4;
  const double a = 1.0 / npc, pi = std::numbers::pi;
  const Model model = empty_model(npc);
  const Box box = Box::cube(2, 0, L);
  const int n = L * npc;
  auto neumann = [&](int k) { return (2.0 - 2.0 * std::cos(k * pi / n)) / (a * a); };
  const double dirichlet0 = 2.0 * (2.0 - 2.0 * std::cos(pi / n)) / (a * a);
  std::vector<double> energies{-0.5, 0.5 * neumann(1), 0.5 * (dirichlet0 + neumann(1) + neumann(2)), 1.2 * dirichlet0};
  std::sort(energies.begin(), energies.end());
  const auto rep = verify_sandwich(model, box, energies, 4, 1, 2, 1);
  for (std::size_t e = 0; e < energies.size(); ++e) {
    const double E = energies[e];
    std::size_t free = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) free += neumann(i) + neumann(j) < E;
    }
    const auto& p = rep.points[e];
    CHECK(p.free_count == free);
    CHECK(p.upper == doctest::Approx(free / box.volume() * (free > 0 ? 1.0 : 0.0)));
    CHECK(p.lower == doctest::Approx((dirichlet0 < E ? 1.0 : 0.0) / box.volume()));
    CHECK(p.lower <= p.upper);
    CHECK(p.ordered);
    CHECK(p.consistent);
  }
  CHECK(rep.points.front().lower == 0.0);
  CHECK(rep.points.front().upper == 0.0);
  CHECK(rep.points.front().direct == 0.0);
}

TEST_CASE("paired hits share the field") {
  MeasureConfig m;
  m.rho = 1.0;
  PotentialSpec p;
  p.f0 = 0.01;
  p.alpha = {kInf, kInf};
  const Model model(m, p, OperatorSpec{});
  const std::vector<double> energies{0.05, 0.2, 1.0, 5.0};
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto h = paired_hits(model, Box::cube(2, 0, 4), energies, s);
    for (std::size_t e = 0; e < energies.size(); ++e) {
      CHECK(h.chi[e] >= h.dirichlet[e]);
      if (e > 0) CHECK(h.dirichlet[e] >= h.dirichlet[e - 1]);
    }
  }
  CHECK(tiled_box(Box({1, 2}, {3, 5}), 3) == Box({1, 2}, {7, 11}));
}
