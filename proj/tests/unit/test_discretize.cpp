#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "dense.hpp"
#include "lifshits/discretize.hpp"
#include "lifshits/impurity.hpp"
#include "lifshits/rng.hpp"

using namespace lifshits;

namespace {

double norm(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

PotentialField random_field(const Grid& grid, std::uint64_t seed, double scale) {
  auto v = zero_field(grid);
  CounterRng rng(seed);
  for (auto& x : v.values) x = scale * rng.uniform();
  return v;
}

double lowest(const DiscreteOperator& op) { return dense_eigenvalues(op.matrix).front(); }

}  // namespace

TEST_CASE("periodic ground state of trivial backgrounds") {
  const auto zero = periodic_ground_state(PeriodicPotential::zero(2, 4));
  CHECK(zero.E0 == doctest::Approx(0.0).epsilon(1e-14));
  for (double p : zero.psi) CHECK(p == doctest::Approx(zero.psi.front()));
  const auto shifted = periodic_ground_state(PeriodicPotential::constant(1, 8, 0.7));
  CHECK(shifted.E0 == doctest::Approx(0.7));
  for (double p : shifted.psi) CHECK(p == doctest::Approx(shifted.psi.front()));
}

TEST_CASE("cosine ground state matches the dense periodic matrix") {
  const int n = 64;
  const double a = 1.0 / n;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    h(k, k) = 2.0 / (a * a) + std::cos(2.0 * std::numbers::pi * (k + 0.5) * a);
    h(k, (k + 1) % n) -= 1.0 / (a * a);
    h(k, (k + n - 1) % n) -= 1.0 / (a * a);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
  const auto gs = periodic_ground_state(PeriodicPotential::cosine(1, n));
  CHECK(std::abs(gs.E0 - es.eigenvalues()(0)) < 1e-10);
  for (double p : gs.psi) CHECK(p > 0.0);
}

TEST_CASE("free Mezincescu operator has psi as exact ground state") {
  for (const auto& u : {PeriodicPotential::zero(1, 8), PeriodicPotential::cosine(1, 8)}) {
    const auto psi = periodic_ground_state(u);
    const Grid grid(Box::cube(1, 0, 4), 8);
    const auto op = mezincescu_assemble(u, grid, psi);
    const auto r = restrict_psi(psi, grid);
    const auto hr = op.matrix.multiply(r);
    CHECK(norm(hr) / norm(r) < 1e-10);
    CHECK(std::abs(lowest(op)) < 1e-10);
  }
}

TEST_CASE("Dirichlet spectrum in one dimension") {
  // boundary on the cell faces: n nodes on an interval of length n a
  const int cells = 6, npc = 2, n = cells * npc;
  const double a = 1.0 / npc;
  const Grid grid(Box::cube(1, 0, cells), npc);
  const auto u = PeriodicPotential::zero(1, npc);
  const auto op = dirichlet_assemble(u, grid, periodic_ground_state(u));
  const auto ev = dense_eigenvalues(op.matrix);
  for (int k = 1; k <= n; ++k) {
    CHECK(ev[k - 1] == doctest::Approx((2.0 - 2.0 * std::cos(k * std::numbers::pi / n)) / (a * a)));
  }
}

TEST_CASE("potentials raise the ground state and Dirichlet dominates Mezincescu") {
  for (const auto& u : {PeriodicPotential::zero(2, 3), PeriodicPotential::cosine(2, 3)}) {
    const auto psi = periodic_ground_state(u);
    for (std::uint64_t s = 0; s < 4; ++s) {
      const Grid grid(Box({0, 0}, {4, 3}), 3);
      const auto v = random_field(grid, s, 2.0);
      const double m0 = lowest(mezincescu_assemble(u, grid, psi));
      const double mv = lowest(mezincescu_assemble(u, v, grid, psi));
      const double dv = lowest(dirichlet_assemble(u, v, grid, psi));
      CHECK(mv >= m0 - 1e-10);
      CHECK(dv >= mv - 1e-10);
    }
  }
}

TEST_CASE("Dirichlet ground state decreases as the box grows") {
  const auto u = PeriodicPotential::cosine(2, 2);
  const auto psi = periodic_ground_state(u);
  double prev = kInf;
  for (int L = 2; L <= 8; ++L) {
    const double l0 = lowest(dirichlet_assemble(u, Grid(Box::cube(2, 0, L), 2), psi));
    CHECK(l0 <= prev + 1e-12);
    prev = l0;
  }
}

TEST_CASE("boundary function chi") {
  const Box cell = Box::cube(1, 0, 1);
  const int n = 64;
  auto samples = [&](auto f) {
    std::vector<double> s;
    for (int k = 0; k < n; ++k) s.push_back(f((k + 0.5) / n));
    return s;
  };
  const auto flat = PeriodicGroundState::from_samples(1, n, samples([](double) { return 1.0; }), 0.0);
  for (double c : chi_values(flat, cell, 0, -1)) CHECK(std::abs(c) < 1e-12);
  const double tp = 2.0 * std::numbers::pi;
  const auto even = PeriodicGroundState::from_samples(1, n, samples([&](double x) { return 2.0 + std::cos(tp * x); }), 0.0);
  CHECK(std::abs(chi_values(even, cell, 0, -1).front()) < 1e-2);
  const auto odd = PeriodicGroundState::from_samples(1, n, samples([&](double x) { return 2.0 + std::sin(tp * x); }), 0.0);
  CHECK(chi_values(odd, cell, 0, -1).front() == doctest::Approx(std::numbers::pi).epsilon(1e-2));
}

TEST_CASE("boundary names") {
  CHECK(boundary_from_string(to_string(BoundaryKind::mezincescu)) == BoundaryKind::mezincescu);
  CHECK_THROWS(boundary_from_string("neumann-ish"));
}
