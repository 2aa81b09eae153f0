// Acceptance run: one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "../unit/dense.hpp"
#include "lifshits/experiments.hpp"
#include "lifshits/rng.hpp"
#include "lifshits/spectral.hpp"
#include "lifshits/stats.hpp"

using namespace lifshits;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1. Exponent formula against hand-derived values.
Outcome formula_suite() {
  std::size_t bad = 0, checked = 0;
  for (int d = 1; d <= 3; ++d) {
    for (int k = 1; k <= 20; ++k) {
      if (k == 8) continue;  // alpha = d + 2, the regime boundary
      const double alpha = d + k / 4.0;
      const double expected = alpha > d + 2 ? d / 2.0 : 4.0 * d / k;
      bad += std::abs(eta_theory(AnisotropyProfile::isotropic(d, alpha)) - expected) > 1e-12;
      ++checked;
    }
  }
  const auto e = [](double a1, double a2) { return eta_theory(AnisotropyProfile::make({1, 1}, {a1, a2})); };
  bad += std::abs(e(kInf, kInf) - 1.0) > 1e-12;
  bad += std::abs(e(3, 3) - 2.0) > 1e-12;
  bad += std::abs(e(kInf, 2.5) - 7.0 / 6.0) > 1e-12;
  checked += 3;
  CounterRng rng(2024);
  std::size_t profiles = 0;
  while (profiles < 1000) {
    const int m = 1 + static_cast<int>(rng() % 3);
    std::vector<int> dims;
    std::vector<double> alphas;
    double gamma = 0;
    for (int k = 0; k < m; ++k) {
      dims.push_back(1 + static_cast<int>(rng() % 3));
      alphas.push_back(rng.uniform() < 0.1 ? kInf : dims.back() * (1.5 + 20.0 * rng.uniform()) * m);
      gamma += dims.back() / alphas.back();
    }
    if (gamma >= 1.0) continue;
    ++profiles;
    const double base = eta_theory(AnisotropyProfile::make(dims, alphas));
    std::vector<std::size_t> order(m);
    for (int k = 0; k < m; ++k) order[k] = (k + 1) % m;
    std::vector<int> pd;
    std::vector<double> pa;
    for (auto k : order) {
      pd.push_back(dims[k]);
      pa.push_back(alphas[k]);
    }
    bad += std::abs(eta_theory(AnisotropyProfile::make(pd, pa)) - base) > 1e-12;
    const int j = static_cast<int>(rng() % m);
    auto grown = alphas;
    if (std::isfinite(grown[j])) grown[j] *= 1.0 + rng.uniform();
    bad += eta_theory(AnisotropyProfile::make(dims, grown)) > base + 1e-12;
    checked += 2;
  }
  return {bad == 0, fmt("%zu/%zu checks exact to 1e-12 (%zu random profiles)", checked - bad, checked, profiles)};
}

// 2. psi is the Mezincescu ground state; Dirichlet lies above.
Outcome mezincescu_exactness() {
  double worst_res = 0, worst_l0 = 0;
  std::size_t order_fail = 0, cases = 0;
  for (const std::string u_name : {"zero", "cosine"}) {
    for (int L : {4, 8, 16, 32, 64}) {
      const int npc = L <= 16 ? 4 : 2;
      const auto u = u_name == "zero" ? PeriodicPotential::zero(2, npc) : PeriodicPotential::cosine(2, npc);
      const auto psi = periodic_ground_state(u);
      const Grid grid(Box::cube(2, 0, L), npc);
      const auto hm = mezincescu_assemble(u, grid, psi);
      const auto r = restrict_psi(psi, grid);
      const auto hr = hm.matrix.multiply(r);
      double num = 0, den = 0;
      for (std::size_t i = 0; i < r.size(); ++i) {
        num += hr[i] * hr[i];
        den += r[i] * r[i];
      }
      worst_res = std::max(worst_res, std::sqrt(num / den));
      EigenOptions opt;
      opt.want_vectors = false;
      const double l0 = smallest_eigs(hm.matrix, 1, opt).values.front();
      worst_l0 = std::max(worst_l0, std::abs(l0));
      const double d0 = smallest_eigs(dirichlet_assemble(u, grid, psi).matrix, 1, opt).values.front();
      order_fail += d0 < l0;
      ++cases;
    }
  }
  return {worst_res < 1e-10 && worst_l0 < 1e-10 && order_fail == 0,
          fmt("%zu boxes: max residual %.2e, max |lambda_0 - E0| %.2e (tol 1e-10), Dirichlet below Mezincescu %zu",
              cases, worst_res, worst_l0, order_fail)};
}

// 3. Inertia counts against a dense eigendecomposition.
Outcome counting_oracle() {
  CounterRng rng(77);
  std::size_t ops = 0, mismatches = 0, max_n = 0;
  while (ops < 100) {
    const int sx = 2 + static_cast<int>(rng() % 11), sy = 2 + static_cast<int>(rng() % 11);
    const int npc = 2 + static_cast<int>(rng() % 3);
    const std::size_t n = static_cast<std::size_t>(sx * sy * npc * npc);
    if (n > 2000) continue;
    ++ops;
    max_n = std::max(max_n, n);
    const auto u = rng() % 2 ? PeriodicPotential::cosine(2, npc) : PeriodicPotential::zero(2, npc);
    const auto psi = periodic_ground_state(u);
    const Grid grid(Box({0, 0}, {sx, sy}), npc);
    auto v = zero_field(grid);
    const double scale = 20.0 * rng.uniform();
    for (auto& x : v.values) x = scale * rng.uniform() * rng.uniform();
    const auto op = rng() % 2 ? dirichlet_assemble(u, v, grid, psi) : mezincescu_assemble(u, v, grid, psi);
    const auto ev = dense_eigenvalues(op.matrix);
    const InertiaCounter counter(op.matrix);
    for (int k = 0; k < 5; ++k) {
      const double E = ev.front() + rng.uniform() * 0.3 * (ev.back() - ev.front());
      const auto expected = static_cast<std::size_t>(std::lower_bound(ev.begin(), ev.end(), E) - ev.begin());
      mismatches += counter.count_below(E).count != expected;
    }
  }
  return {mismatches == 0, fmt("%zu operators (n <= %zu), 500 energies, %zu mismatches (exact)", ops, max_n, mismatches)};
}

// 4. Bound chain on the three regime presets.
Outcome bound_chain_check() {
  std::string detail;
  bool ok = true;
  for (const std::string name : {"chain-qm", "chain-qc", "chain-cl"}) {
    const auto rep = bound_chain(preset(name), 0);
    ok = ok && rep.violations == 0 && rep.valid > 0;
    detail += fmt("%s %zu/%zu valid, %zu violations; ", rep.mode.c_str(), rep.valid, rep.records.size(), rep.violations);
  }
  return {ok, detail + fmt("slack %.0e", kChainTolerance)};
}

// 5. Sandwich on the small Poisson preset.
Outcome sandwich_check() {
  const auto cfg = preset("sandwich-small");
  const auto rep = verify_sandwich(cfg.model(), cfg.experiment.make_box(), cfg.experiment.energy_grid(),
                                   cfg.experiment.n_realizations, cfg.seed, cfg.experiment.tiles, 0);
  bool ok = true;
  std::string detail;
  for (const auto& p : rep.points) {
    ok = ok && p.ordered && p.consistent;
    detail += fmt("E=%.2g: %.3g <= %.3g <= %.3g%s; ", p.E, p.lower, p.direct, p.upper,
                  p.ordered && p.consistent ? "" : " [FAIL]");
  }
  return {ok, detail + fmt("n=%zu, 95%% CIs", rep.n_realizations)};
}

// 6. Statistical suites of the measure sampler.
Outcome statistical_suites() {
  const std::size_t n = 100000;
  std::size_t empty = 0;
  for (std::size_t i = 0; i < n; ++i) empty += sample_poisson(1.0, Box::cube(2, 0, 1), derive_seed(61, i)).atom_count() == 0;
  const double p0 = std::exp(-1.0), phat = static_cast<double>(empty) / n;
  const double z0 = std::abs(phat - p0) / std::sqrt(p0 * (1 - p0) / n);

  MeasureConfig poisson;
  poisson.rho = 1.0;
  const auto inten = empirical_intensity(poisson, Box::cube(2, 0, 3), 4000, 62);
  std::size_t cells_out = 0;
  for (std::size_t j = 0; j < inten.mean.size(); ++j) cells_out += std::abs(inten.mean[j] - 1.0) > 3.0 * inten.std_error[j];

  const std::vector<int> lag{2, 0};
  const auto mix_p = mixing_correlation(poisson, lag, 20000, 63);
  MeasureConfig cd;
  cd.family = MeasureFamily::compound_displacement;
  cd.weights = WeightLaw::exponential(1.0);
  const auto mix_c = mixing_correlation(cd, lag, 20000, 64);
  const bool mix_ok = std::abs(mix_p.r) <= 3 * mix_p.std_error && std::abs(mix_c.r) <= 3 * mix_c.std_error;

  const std::vector<double> eps{1e-3, 1e-2, 1e-1};
  const auto sm_exp = fit_small_mass_exponent(cd, 2, eps, 20000, 65);
  MeasureConfig alloy;
  alloy.family = MeasureFamily::displacement;
  alloy.weights = WeightLaw::constant(1.0);
  const auto sm_const = fit_small_mass_exponent(alloy, 2, eps, 20000, 66);
  const bool sm_ok = !sm_exp.violated && std::isfinite(sm_exp.kappa) && sm_const.violated;

  return {z0 <= 3 && cells_out == 0 && mix_ok && sm_ok,
          fmt("P{0} z=%.2f (<= 3); intensity cells beyond 3se %zu; mixing lag 2 r=%.4f, %.4f (3se %.4f, %.4f); "
              "kappa(exp)=%.3f, constant flagged %s",
              z0, cells_out, mix_p.r, mix_c.r, 3 * mix_p.std_error, 3 * mix_c.std_error, sm_exp.kappa,
              sm_const.violated ? "yes" : "no")};
}

// 7. Marginal decay and tail-mass exponents.
Outcome marginal_lemmas() {
  bool ok = true;
  std::string detail;
  for (const auto& a : std::vector<std::vector<double>>{{3, 4}, {3, 3}}) {
    const auto prof = AnisotropyProfile::make({1, 1}, a);
    const auto p = ImpurityPotential::algebraic(prof, 1.0);
    const double decay = a[1] * (1.0 - 1.0 / a[0]);
    const std::vector<double> x1{1000.0}, x2{2000.0};
    const double slope = -std::log(marginal(p, 1, x2).value / marginal(p, 1, x1).value) / std::log(2.0);
    const double tail_expected = a[1] * (1.0 - prof.gamma());
    std::vector<double> lx, ly;
    for (double L : {10.0, 20.0, 40.0}) {
      lx.push_back(std::log(L));
      ly.push_back(std::log(tail_mass(p, 1, L).value));
    }
    const double tail = -least_squares(lx, ly).slope;
    const double e1 = std::abs(slope / decay - 1), e2 = std::abs(tail / tail_expected - 1);
    ok = ok && e1 <= 0.05 && e2 <= 0.10;
    detail += fmt("(%g,%g): decay %.4f vs %.4f (%.1f%%), tail %.4f vs %.4f (%.1f%%); ", a[0], a[1], slope, decay,
                  100 * e1, tail, tail_expected, 100 * e2);
  }
  const auto box = ImpurityPotential::box_indicator({1, 1}, 1.0, 0.5);
  double box_tail = 0;
  for (double L : {0.5, 1.0, 4.0}) box_tail += tail_mass(box, 1, L).value;
  ok = ok && box_tail == 0.0;
  return {ok, detail + fmt("box tails %g (tol 5%%, 10%%, exact 0)", box_tail)};
}

// 8. Fit recovery on planted data.
Outcome fit_recovery() {
  std::vector<double> E;
  for (int i = 0; i < 12; ++i) E.push_back(0.01 * std::pow(50.0, i / 11.0));
  bool ok = true;
  std::string detail;
  for (double eta : {0.5, 1.0, 7.0 / 6.0, 2.0}) {
    std::vector<double> N;
    for (double e : E) N.push_back(std::exp(-std::pow(e, -eta)));
    const auto f = lifshits_fit(E, N);
    const double err = std::abs(f.eta / eta - 1);
    ok = ok && err <= 0.02 && !f.no_lifshits_decay;
    detail += fmt("%.4f->%.6f; ", eta, f.eta);
  }
  std::vector<double> vh;
  for (double e : E) vh.push_back(e);
  std::vector<double> Ev;
  for (int i = 0; i < 10; ++i) Ev.push_back(1e-4 * std::pow(3000.0, i / 9.0));
  std::vector<double> Nv;
  for (double e : Ev) Nv.push_back(e);
  const auto v = lifshits_fit(Ev, Nv);
  ok = ok && v.no_lifshits_decay;
  return {ok, detail + fmt("van Hove flagged %s (tol 2%%)", v.no_lifshits_decay ? "yes" : "no")};
}

// 9. Desk-scale regime discrimination.
Outcome regime_discrimination() {
  const auto qm = regime_experiment(preset("qm-poisson"), 0);
  const auto cl = regime_experiment(preset("cl"), 0);
  if (!qm.fit || !cl.fit) {
    return {false, "fit unavailable: qm '" + qm.fit_error + "', cl '" + cl.fit_error + "'"};
  }
  const double a = qm.fit->eta, b = cl.fit->eta;
  const bool order = b > a, band = a >= 0.6 && a <= 1.6;
  std::string detail = fmt("eta_hat(qm)=%.3f+-%.3f (theory %.3f, band [0.6,1.6]), eta_hat(cl)=%.3f+-%.3f (theory %.3f)",
                           a, qm.fit->std_error, qm.theory.eta, b, cl.fit->std_error, cl.theory.eta);
  if (!band) detail += " [diagnostic: qm estimate outside the band; discretization or pre-asymptotic window]";
  if (!order) detail += " [diagnostic: ordering not resolved at this budget]";
  return {order && band, detail};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// 10. Thread-count independence of the written records.
Outcome determinism() {
  const auto root = std::filesystem::temp_directory_path() / "lifshits_acceptance_det";
  std::filesystem::remove_all(root);
  struct Case {
    const char* preset;
    std::function<RunResult(const ExperimentConfig&, ResultSink&, int)> run;
  };
  const std::vector<Case> cases{{"chain-qm", run_bounds}, {"ids-small", run_ids}, {"qm-poisson", run_regime}};
  std::string detail;
  bool ok = true;
  for (const auto& c : cases) {
    std::string files[2];
    int i = 0;
    for (int threads : {1, 3}) {
      const auto cfg = preset(c.preset);
      ResultSink sink(cfg);
      c.run(cfg, sink, threads);
      const auto dir = root / (std::string(c.preset) + "_" + std::to_string(threads));
      sink.write(dir);
      files[i++] = slurp(dir / "results.jsonl");
    }
    const bool same = !files[0].empty() && files[0] == files[1];
    ok = ok && same;
    detail += fmt("%s %s; ", c.preset, same ? "identical" : "DIFFERENT");
  }
  return {ok, detail + "threads 1 vs 3, byte comparison"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    Outcome (*fn)();
  };
  const std::vector<Criterion> criteria{{1, "formula suite", formula_suite},
                                        {2, "Mezincescu exactness", mezincescu_exactness},
                                        {3, "counting oracle", counting_oracle},
                                        {4, "bound chain", bound_chain_check},
                                        {5, "sandwich", sandwich_check},
                                        {6, "statistical suites", statistical_suites},
                                        {7, "marginal lemmas", marginal_lemmas},
                                        {8, "fit recovery", fit_recovery},
                                        {9, "regime discrimination", regime_discrimination},
                                        {10, "determinism", determinism}};
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
