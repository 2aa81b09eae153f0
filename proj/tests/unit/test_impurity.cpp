#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "lifshits/impurity.hpp"
#include "lifshits/rng.hpp"
#include "lifshits/stats.hpp"

using namespace lifshits;

namespace {

ImpurityPotential alg(double a1, double a2, double f0 = 1.0) {
  return ImpurityPotential::algebraic(AnisotropyProfile::make({1, 1}, {a1, a2}), f0);
}

double at(const ImpurityPotential& p, double x, double y) {
  const std::vector<double> v{x, y};
  return eval_f(p, v);
}

}  // namespace

TEST_CASE("profile arithmetic") {
  const auto p = AnisotropyProfile::make({1, 2}, {3.0, 8.0});
  CHECK(p.dim() == 3);
  CHECK(p.block_offset(1) == 1);
  CHECK(p.gamma() == doctest::Approx(1.0 / 3.0 + 2.0 / 8.0));
  CHECK_THROWS(AnisotropyProfile::make({1, 1}, {2.0, 2.0}));
  CHECK_NOTHROW(AnisotropyProfile::unchecked({1, 1}, {2.0, 2.0}));
  CHECK(block_power(0.5, kInf) == 0.0);
  CHECK(std::isinf(block_power(1.5, kInf)));
}

TEST_CASE("algebraic impurity values") {
  CHECK(at(alg(2.5, 2.5), 0, 0) == 1.0);
  CHECK(at(alg(3, 4), 1, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(at(alg(kInf, 2.5), 2, 0) == 0.0);
  CHECK(at(alg(kInf, 2.5), 0.5, 0) == 1.0);
}

TEST_CASE("marginal integrals") {
  const std::vector<double> zero{0.0};
  // f^(2)(0) = int dx / (1 + x^2) for alpha = (2, 2)
  const auto p22 = ImpurityPotential::algebraic(AnisotropyProfile::unchecked({1, 1}, {2.0, 2.0}), 1.0);
  CHECK(marginal(p22, 1, zero).value == doctest::Approx(std::numbers::pi).epsilon(1e-8));
  const auto box = ImpurityPotential::box_indicator({1, 1}, 2.0, 0.5);
  for (double x : {0.0, 0.3, 0.5, 0.51, 2.0}) {
    const std::vector<double> xv{x};
    CHECK(marginal(box, 1, xv).value == doctest::Approx(x <= 0.5 ? 2.0 : 0.0));
  }
}

TEST_CASE("marginal decay exponent") {
  CHECK(marginal_decay_exponent(AnisotropyProfile::make({1, 1}, {3, 4}), 1) == doctest::Approx(8.0 / 3.0));
  CHECK(marginal_decay_exponent(AnisotropyProfile::make({1, 1}, {kInf, 2.5}), 1) == doctest::Approx(2.5));
  CHECK(marginal_decay_exponent(AnisotropyProfile::make({1, 1}, {5, 5}), 0) == doctest::Approx(4.0));
  const auto p = alg(3, 4);
  const std::vector<double> x1{1000.0}, x2{2000.0};
  const double slope = std::log(marginal(p, 1, x2).value / marginal(p, 1, x1).value) / std::log(2.0);
  CHECK(slope == doctest::Approx(-8.0 / 3.0).epsilon(0.05));
}

TEST_CASE("tail mass") {
  const auto box = ImpurityPotential::box_indicator({1, 1}, 1.0, 0.5);
  CHECK(tail_mass(box, 1, 1.0).value == 0.0);
  const auto p = alg(3, 3);
  std::vector<double> lx, ly;
  for (double L : {10.0, 20.0, 40.0}) {
    lx.push_back(std::log(L));
    ly.push_back(std::log(tail_mass(p, 1, L).value));
  }
  CHECK(least_squares(lx, ly).slope == doctest::Approx(-1.0).epsilon(0.1));
}

TEST_CASE("Birman-Solomyak partial sums") {
  const std::vector<int> radii{2, 4, 8, 16};
  const auto box = birman_solomyak_partial_sums(ImpurityPotential::box_indicator({1, 1}, 1.0, 0.5), 2.0, radii);
  for (std::size_t i = 1; i < radii.size(); ++i) CHECK(box.partial_sums[i] == box.partial_sums[0]);
  const auto conv = birman_solomyak_partial_sums(alg(3, 3), 2.0, radii);
  CHECK(conv.convergent);
  for (std::size_t i = 1; i + 1 < conv.increments.size(); ++i) CHECK(conv.increments[i + 1] < conv.increments[i]);
  const auto slow = ImpurityPotential::algebraic(AnisotropyProfile::unchecked({1, 1}, {1.5, 1.5}), 1.0);
  CHECK_FALSE(birman_solomyak_partial_sums(slow, 2.0, radii).convergent);
}

TEST_CASE("sampled potential is a weighted convolution") {
  const auto p = alg(3, 3);
  const Grid grid(Box::cube(2, -2, 2), 4);
  Truncation wide;
  wide.radii = {100.0, 100.0};
  const PointMeasure one(Box::cube(2, -2, 2), 0, MeasureFamily::poisson, {0.0, 0.0}, {1.0});
  const auto v = sample_potential(one, p, grid, wide);
  std::vector<double> x(2);
  for (std::size_t i = 0; i < grid.node_count(); ++i) {
    grid.position(i, x);
    CHECK(v.values[i] == doctest::Approx(eval_f(p, x)).epsilon(1e-15));
  }
  const PointMeasure two(Box::cube(2, -2, 2), 0, MeasureFamily::poisson, {0.3, 0.1, 0.3, 0.1}, {0.5, 0.5});
  const PointMeasure merged(Box::cube(2, -2, 2), 0, MeasureFamily::poisson, {0.3, 0.1}, {1.0});
  const auto a = sample_potential(two, p, grid, wide), b = sample_potential(merged, p, grid, wide);
  for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(std::abs(a.values[i] - b.values[i]) <= 1e-15);
}

TEST_CASE("mean field matches Campbell's formula") {
  // int dy / (c + |y|^3) = (4 pi / (3 sqrt 3)) c^{-2/3}; int (1 + |x|^3)^{-2/3} dx = (2/3) B(1/3, 1/3)
  const double g13 = std::tgamma(1.0 / 3.0), g23 = std::tgamma(2.0 / 3.0);
  const double integral = 4.0 * std::numbers::pi / (3.0 * std::sqrt(3.0)) * (2.0 / 3.0) * g13 * g13 / g23;
  const auto p = alg(3, 3);
  Truncation t;
  t.radii = {6.0, 6.0};
  annotate_truncation(p, t);
  CHECK(t.total_mass == doctest::Approx(integral).epsilon(1e-6));
  const Box box = Box::cube(2, 0, 8);
  const Box sample_box = Box::cube(2, -6, 14);
  const Grid grid(box, 2);
  std::vector<double> means;
  for (std::uint64_t s = 0; s < 40; ++s) means.push_back(sample_potential(sample_poisson(1.0, sample_box, s), p, grid, t).mean());
  const auto m = mean_estimate(means);
  CHECK(m.mean <= integral + 3.0 * m.std_error);
  CHECK(m.mean >= integral - t.neglected_mass - 3.0 * m.std_error);
}

TEST_CASE("default truncation meets its tolerance") {
  const auto p = alg(4, 4);
  const auto t = default_truncation(p, 1e-3, 256.0);
  CHECK(t.neglected_mass <= 1e-3 * t.total_mass);
  const auto box = default_truncation(ImpurityPotential::box_indicator({1, 1}, 1.0, 0.5));
  CHECK(box.neglected_mass == 0.0);
}

TEST_CASE("cut-off potentials") {
  const auto p = alg(kInf, 2.5);
  const Box box = Box::cube(2, -3, 3);
  const Grid grid(box, 4);
  Truncation t;
  t.radii = {1.0, 20.0};
  const auto m = sample_poisson(0.5, Box::cube(2, -25, 25), 3);
  CutoffSpec qc;
  qc.mode = CutoffMode::qc;
  qc.h = 100.0;
  qc.block = 1;
  qc.R = 0.0;
  qc.truncation = t;
  const auto full = sample_potential(m, p, grid, t), cut = cutoff_potential(m, p, grid, qc);
  for (std::size_t i = 0; i < full.values.size(); ++i) CHECK(cut.values[i] == doctest::Approx(full.values[i]).epsilon(1e-14));

  qc.R = 4.0;
  const auto far = cutoff_potential(m, p, grid, qc);
  for (std::size_t i = 0; i < full.values.size(); ++i) CHECK(far.values[i] <= full.values[i] + 1e-15);

  CutoffSpec qm;
  qm.mode = CutoffMode::qm;
  qm.h = 1.0;
  qm.f_u = 0.25;
  const PointMeasure unit(box, 0, MeasureFamily::poisson, {0.0, 0.0}, {1.0});
  const auto v = cutoff_potential(unit, p, grid, qm);
  std::vector<double> x(2);
  for (std::size_t i = 0; i < grid.node_count(); ++i) {
    grid.position(i, x);
    const bool inside = x[0] >= 0.0 && x[0] < 1.0 && x[1] >= 0.0 && x[1] < 1.0;
    CHECK(v.values[i] == (inside ? 0.25 : 0.0));
  }
}
