#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "lifshits/rmeasure.hpp"
#include "lifshits/rng.hpp"
#include "lifshits/stats.hpp"

using namespace lifshits;

namespace {

bool within_sigma(const ProportionEstimate& e, double p, double k = 3.0) {
  const double s = std::sqrt(p * (1 - p) / static_cast<double>(e.n));
  return std::abs(e.p - p) <= k * s;
}

MeasureConfig config(MeasureFamily f, double rho, WeightLaw w) {
  MeasureConfig c;
  c.family = f;
  c.rho = rho;
  c.weights = w;
  return c;
}

}  // namespace

TEST_CASE("Poisson empty-cell probability") {
  const Box cell = Box::cube(2, 0, 1);
  const std::size_t n = 100000;
  std::size_t empty = 0;
  for (std::size_t i = 0; i < n; ++i) empty += sample_poisson(1.0, cell, derive_seed(3, i)).atom_count() == 0;
  const auto est = wilson_interval(empty, n);
  CHECK(within_sigma(est, std::exp(-1.0)));
}

TEST_CASE("Poisson edge cases and mean") {
  CHECK(sample_poisson(0.0, Box::cube(2, 0, 5), 1).atom_count() == 0);
  const Box box({0, 0}, {2, 2});
  std::vector<double> totals;
  for (std::size_t i = 0; i < 10000; ++i) totals.push_back(sample_poisson(2.0, box, derive_seed(5, i)).total_weight());
  const auto m = mean_estimate(totals);
  CHECK(std::abs(m.mean - 8.0) <= 3.0 * m.std_error);
}

TEST_CASE("overlapping boxes see identical atoms") {
  const auto a = sample_poisson(1.3, Box({0, 0}, {4, 4}), 9);
  const auto b = sample_poisson(1.3, Box({2, 2}, {6, 6}), 9);
  const auto ma = cell_masses(a), mb = cell_masses(b);
  for (int i = 2; i < 4; ++i) {
    for (int j = 2; j < 4; ++j) {
      const std::vector<int> c{i, j};
      CHECK(ma.at(c) == mb.at(c));
    }
  }
}

TEST_CASE("displacement model") {
  const Box box = Box::cube(2, 0, 10);
  const auto periodic = sample_displacement(WeightLaw::constant(1.0), box, 1, false);
  const auto pm = cell_masses(periodic);
  for (double v : pm.values()) CHECK(v == 1.0);
  for (std::uint64_t s = 0; s < 5; ++s) CHECK(sample_displacement(WeightLaw::exponential(1.0), box, s).atom_count() == 100);
  std::vector<double> masses;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto cm = cell_masses(sample_displacement(WeightLaw::exponential(1.0), box, s));
    masses.insert(masses.end(), cm.values().begin(), cm.values().end());
  }
  const auto m = mean_estimate(masses);
  CHECK(std::abs(m.mean - 1.0) <= 3.0 * m.std_error);
}

TEST_CASE("compound Poisson") {
  CHECK(sample_compound_poisson(0.0, WeightLaw::exponential(1.0), Box::cube(2, 0, 4), 1).atom_count() == 0);
  const Box box = Box::cube(2, 0, 100);
  const auto ma = cell_masses(sample_compound_poisson(1.0, WeightLaw::constant(1.0), box, 1));
  const auto mb = cell_masses(sample_poisson(1.0, box, 2));
  const std::vector<double> a(ma.values().begin(), ma.values().end()), b(mb.values().begin(), mb.values().end());
  CHECK(ks_two_sample(a, b).p_value > 0.01);
  const auto mc = cell_masses(sample_compound_poisson(1.0, WeightLaw::exponential(2.0), box, 3));
  const std::vector<double> c(mc.values().begin(), mc.values().end());
  const auto m = mean_estimate(c);
  CHECK(std::abs(m.mean - 2.0) <= 3.0 * m.std_error);
}

TEST_CASE("cell masses use half-open cells") {
  const PointMeasure one(Box::cube(2, 0, 2), 0, MeasureFamily::poisson, {0.3, 0.3}, {0.7});
  const auto m1 = cell_masses(one);
  CHECK(m1.at(std::vector<int>{0, 0}) == 0.7);
  CHECK(m1.total() == 0.7);
  const PointMeasure edge(Box({0, 0}, {2, 1}), 0, MeasureFamily::poisson, {1.0, 0.0}, {1.0});
  const auto m2 = cell_masses(edge);
  CHECK(m2.at(std::vector<int>{1, 0}) == 1.0);
  CHECK(m2.at(std::vector<int>{0, 0}) == 0.0);
  const auto r = sample_compound_poisson(2.0, WeightLaw::uniform(0.0, 3.0), Box::cube(2, -3, 5), 4);
  CHECK(cell_masses(r).total() == doctest::Approx(r.total_weight()).epsilon(1e-12));
}

TEST_CASE("regularization caps cell masses") {
  const PointMeasure light(Box::cube(2, 0, 1), 0, MeasureFamily::poisson, {0.5, 0.5}, {0.3});
  CHECK(regularize(light, 1.0) == light);
  const PointMeasure heavy(Box::cube(2, 0, 1), 0, MeasureFamily::poisson, {0.2, 0.2, 0.7, 0.7}, {1.5, 0.5});
  const auto r = regularize(heavy, 1.0);
  CHECK(r.weight(0) == doctest::Approx(0.75));
  CHECK(r.weight(1) == doctest::Approx(0.25));
  const auto m = sample_compound_poisson(3.0, WeightLaw::exponential(1.0), Box::cube(2, 0, 8), 6);
  for (double h : {0.1, 1.0, 2.5}) {
    const auto before = cell_masses(m), after = cell_masses(regularize(m, h));
    for (std::size_t j = 0; j < before.values().size(); ++j) {
      CHECK(after[j] == doctest::Approx(std::min(h, before[j])).epsilon(1e-12));
    }
  }
}

TEST_CASE("small-mass probabilities") {
  const auto poisson = config(MeasureFamily::poisson, 1.0, WeightLaw::constant(1.0));
  const auto p = estimate_small_mass_prob(poisson, 2, 0.5, 20000, 1);
  CHECK(p.lo <= std::exp(-1.0));
  CHECK(std::exp(-1.0) <= p.hi);
  const auto alloy = config(MeasureFamily::displacement, 1.0, WeightLaw::constant(1.0));
  CHECK(estimate_small_mass_prob(alloy, 2, 0.5, 2000, 1).p == 0.0);
  const std::vector<double> eps{0.01, 0.1};
  CHECK(fit_small_mass_exponent(alloy, 2, eps, 2000, 1).violated);
  const auto unif = config(MeasureFamily::compound_displacement, 1.0, WeightLaw::uniform(0.0, 1.0));
  const auto q = estimate_small_mass_prob(unif, 2, 0.25, 20000, 2);
  CHECK(q.lo <= 0.25);
  CHECK(0.25 <= q.hi);
  const auto expo = config(MeasureFamily::compound_displacement, 1.0, WeightLaw::exponential(1.0));
  const std::vector<double> grid{1e-3, 1e-2, 1e-1};
  const auto k = fit_small_mass_exponent(expo, 2, grid, 20000, 3);
  CHECK_FALSE(k.violated);
  // P{w < eps} = 1 - exp(-eps) ~ eps
  CHECK(k.kappa == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("mixing correlations vanish for disjoint cells") {
  const std::vector<int> lag1{1, 0}, lag5{5, 0};
  const auto a = mixing_correlation(config(MeasureFamily::poisson, 1.0, WeightLaw::constant(1.0)), lag1, 20000, 1);
  CHECK(std::abs(a.r) <= 3.0 * a.std_error);
  const auto b = mixing_correlation(config(MeasureFamily::compound_displacement, 1.0, WeightLaw::exponential(1.0)),
                                    lag5, 20000, 2);
  CHECK(std::abs(b.r) <= 3.0 * b.std_error);
  CHECK(mixing_correlation(config(MeasureFamily::periodic, 1.0, WeightLaw::constant(1.0)), lag1, 10000, 3).degenerate);
}

TEST_CASE("empirical intensity") {
  const Box box = Box::cube(2, 0, 2);
  const auto a = empirical_intensity(config(MeasureFamily::poisson, 1.5, WeightLaw::constant(1.0)), box, 4000, 1);
  for (std::size_t j = 0; j < a.mean.size(); ++j) CHECK(std::abs(a.mean[j] - 1.5) <= 3.5 * a.std_error[j]);
  const auto b = empirical_intensity(config(MeasureFamily::periodic, 1.0, WeightLaw::constant(1.0)), box, 100, 1);
  for (double v : b.mean) CHECK(v == 1.0);
  const auto c = empirical_intensity(config(MeasureFamily::compound_poisson, 1.0, WeightLaw::exponential(0.5)), box,
                                     4000, 2);
  for (std::size_t j = 0; j < c.mean.size(); ++j) CHECK(std::abs(c.mean[j] - 0.5) <= 3.5 * c.std_error[j]);
}

TEST_CASE("weight law exact CDF") {
  CHECK(WeightLaw::uniform(0.0, 1.0).cdf_below(0.25) == doctest::Approx(0.25));
  CHECK(WeightLaw::exponential(2.0).cdf_below(1.0) == doctest::Approx(1.0 - std::exp(-0.5)));
  CHECK(WeightLaw::constant(1.0).cdf_below(0.5) == 0.0);
  CHECK_FALSE(WeightLaw::constant(1.0).has_small_mass());
  CHECK(WeightLaw::exponential(1.0).has_small_mass());
}

TEST_CASE("JSON-lines dump round trip") {
  const auto m = sample_compound_poisson(1.0, WeightLaw::exponential(1.0), Box({-1, 0}, {3, 2}), 17);
  std::stringstream ss;
  write_measure_jsonl(ss, m);
  CHECK(read_measure_jsonl(ss) == m);
}

TEST_CASE("invalid configurations are rejected") {
  CHECK_THROWS(sample_poisson(-1.0, Box::cube(2, 0, 1), 1));
  CHECK_THROWS(WeightLaw::exponential(-1.0));
  CHECK_THROWS(regularize(sample_poisson(1.0, Box::cube(2, 0, 1), 1), 0.0));
}
