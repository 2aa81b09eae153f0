#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "lifshits/ids.hpp"

using namespace lifshits;

namespace {

double eta(double a1, double a2) { return eta_theory(AnisotropyProfile::make({1, 1}, {a1, a2})); }

std::vector<double> geometric(double lo, double hi, int n) {
  std::vector<double> e;
  for (int i = 0; i < n; ++i) e.push_back(lo * std::pow(hi / lo, i / double(n - 1)));
  return e;
}

Model model(double rho, double f0, std::vector<double> alpha, int npc = 2) {
  MeasureConfig m;
  m.rho = rho;
  PotentialSpec p;
  p.f0 = f0;
  p.alpha = std::move(alpha);
  OperatorSpec op;
  op.n_per_cell = npc;
  return Model(m, p, op);
}

}  // namespace

TEST_CASE("Lifshits exponent formula") {
  CHECK(eta(kInf, kInf) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(eta(3, 3) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(eta(kInf, 2.5) == doctest::Approx(7.0 / 6.0).epsilon(1e-12));
  // isotropic: d / (alpha - d) for 2 = d < alpha < d + 2 = 4
  CHECK(eta_theory(AnisotropyProfile::isotropic(2, 3.0)) == doctest::Approx(2.0));
  CHECK(eta_theory(AnisotropyProfile::isotropic(2, 6.0)) == doctest::Approx(1.0));
  CHECK_THROWS(eta_theory(AnisotropyProfile::unchecked({1, 1}, {2, 2})));
}

TEST_CASE("regime classification") {
  const auto qm = classify_regime(AnisotropyProfile::make({1, 1}, {10, 10}));
  CHECK(qm.regime == "qm");
  CHECK(qm.blocks[0].classical == doctest::Approx(0.125));
  const auto mixed = classify_regime(AnisotropyProfile::make({1, 1}, {10, 2.2}));
  CHECK(mixed.regime == "qm_cl");
  CHECK(mixed.blocks[1].classical == doctest::Approx((1 / 2.2) / (1 - 0.1 - 1 / 2.2)));
  const auto cl = classify_regime(AnisotropyProfile::make({1, 1}, {2.5, 2.5}));
  CHECK(cl.regime == "cl");
  CHECK(cl.blocks[0].classical == doctest::Approx(2.0));
  CHECK(classify_regime(AnisotropyProfile::make({1, 1}, {2.2, 10})).regime == "cl_qm");
  // d_k / 2 = gamma_k / (1 - gamma) with alpha = (6, 6): 1/6 / (2/3) = 1/4 < 1/2; alpha = (4, 4): 1/4 / (1/2) = 1/2 tie
  const auto tie = classify_regime(AnisotropyProfile::make({1, 1}, {4, 4}));
  CHECK(tie.blocks[0].quantum_side);
  CHECK(tie.regime == "qm");
}

TEST_CASE("scaling lengths") {
  const auto iso = AnisotropyProfile::make({1, 1}, {10, 10});
  const auto s = scaling_lengths(iso, 0.01, 4.0);
  CHECK(s.L == doctest::Approx(10.0));
  CHECK(s.h == doctest::Approx(1.0 / 1600.0));
  const auto qc = scaling_lengths(AnisotropyProfile::make({1, 1}, {kInf, 2.5}), 0.01, 1.0);
  CHECK(qc.block == 1);
  CHECK(qc.R == doctest::Approx(std::pow(10.0, 4.0 / 3.0)));
  CHECK(qc.R == doctest::Approx(21.544).epsilon(1e-4));
  CHECK(qc.beta_lower[0] == doctest::Approx(1.0));
  CHECK(qc.beta_lower[1] == doctest::Approx(4.0 / 3.0));
}

TEST_CASE("IDS of the free operator equals the closed-form Dirichlet count") {
  const Model free = model(0.0, 1.0, {kInf, kInf});
  const Box box({0, 0}, {3, 2});
  const int nx = 6, ny = 4;
  const double a = 0.5, pi = std::numbers::pi;
  auto mode = [&](int k, int n) { return (2.0 - 2.0 * std::cos(k * pi / n)) / (a * a); };
  const std::vector<double> energies{-1.0, 0.0, 3.0, 10.0, 25.0, 40.0};
  const auto est = estimate_ids(free, box, BoundaryKind::dirichlet, energies, 3, 1, 1);
  for (std::size_t e = 0; e < energies.size(); ++e) {
    std::size_t c = 0;
    for (int i = 1; i <= nx; ++i) {
      for (int j = 1; j <= ny; ++j) c += mode(i, nx) + mode(j, ny) < energies[e];
    }
    CHECK(est.values[e] == doctest::Approx(c / box.volume()));
    CHECK(est.std_error[e] == 0.0);
  }
}

TEST_CASE("counts are monotone per realization") {
  const Model m = model(1.0, 2.0, {10, 10});
  const auto energies = geometric(0.1, 20.0, 8);
  const auto est = estimate_ids(m, Box::cube(2, 0, 4), BoundaryKind::dirichlet, energies, 6, 3, 1);
  for (const auto& row : est.counts) {
    for (std::size_t e = 1; e < row.size(); ++e) CHECK(row[e] >= row[e - 1]);
  }
  const bool nonnegative = est.values.front() == 0.0 || est.lo.front() >= 0.0;
  CHECK(nonnegative);
}

TEST_CASE("more impurities mean fewer low states") {
  const std::vector<double> energies{0.5, 1.0};
  double prev = kInf;
  for (double rho : {0.5, 1.0, 2.0}) {
    const auto est = estimate_ids(model(rho, 2.0, {kInf, kInf}), Box::cube(2, 0, 4), BoundaryKind::dirichlet, energies,
                                  40, 5, 1);
    CHECK(est.values[1] <= prev);
    prev = est.values[1];
  }
}

TEST_CASE("ground-state probabilities") {
  const Model m = model(1.0, 1.0, {10, 10});
  const std::vector<double> energies{-1.0, 0.0, 0.5, 2.0, 8.0, 1e4};
  const auto p = ground_state_probabilities(m, Box::cube(2, 0, 3), BoundaryKind::dirichlet, energies, 50, 2, 1);
  CHECK(p[0].p == 0.0);
  CHECK(p[1].p == 0.0);
  CHECK(p.back().p == 1.0);
  for (std::size_t e = 1; e < p.size(); ++e) CHECK(p[e].successes >= p[e - 1].successes);
  CHECK_THROWS(ground_state_probabilities(m, Box::cube(2, 0, 3), BoundaryKind::dirichlet, energies, 10, 2, 1));
}

TEST_CASE("fit of exact double-exponential data") {
  const auto E = geometric(0.02, 0.5, 12);
  std::vector<double> N;
  for (double e : E) N.push_back(std::exp(-1.0 / e));
  const auto f = lifshits_fit(E, N);
  CHECK(std::abs(f.eta - 1.0) < 1e-6);
  CHECK_FALSE(f.no_lifshits_decay);
  for (double eta : {0.5, 7.0 / 6.0, 2.0}) {
    std::vector<double> M;
    for (double e : E) M.push_back(std::exp(-3.0 * std::pow(e, -eta)));
    CHECK(lifshits_fit(E, M).eta == doctest::Approx(eta).epsilon(0.02));
  }
}

TEST_CASE("van Hove data is flagged") {
  const auto E = geometric(1e-4, 0.3, 10);
  std::vector<double> N;
  for (double e : E) N.push_back(e);
  const auto f = lifshits_fit(E, N);
  CHECK(f.no_lifshits_decay);
  CHECK(f.eta < 0.25);
}

TEST_CASE("fit censoring and refusal") {
  const auto E = geometric(0.02, 0.5, 12);
  std::vector<double> N, lo;
  for (double e : E) {
    N.push_back(std::exp(-1.0 / e));
    lo.push_back(N.back() * 0.5);
  }
  N[0] = 0.0;
  lo[1] = 0.0;
  const auto f = lifshits_fit(E, N, lo);
  CHECK(f.censored.size() == 2);
  CHECK(f.points == 10);
  const std::vector<double> narrow_E{0.1, 0.11, 0.12, 0.13};
  std::vector<double> narrow_N;
  for (double e : narrow_E) narrow_N.push_back(std::exp(-1.0 / e));
  CHECK_THROWS_AS(lifshits_fit(narrow_E, narrow_N), std::invalid_argument);
  CHECK_THROWS_AS(lifshits_fit(std::vector<double>{0.1, 0.2, 0.3}, std::vector<double>{1e-5, 1e-4, 1e-3}),
                  std::invalid_argument);
}
