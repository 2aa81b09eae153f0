#include "lifshits/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "lifshits/parallel.hpp"
#include "lifshits/spectral.hpp"

namespace lifshits {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Json box_json(const Box& b) { return {{"lo", b.lo()}, {"hi", b.hi()}}; }

Json finite_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

double lowest_eigenvalue(const SparseSymMatrix& a) {
  EigenOptions opt;
  opt.want_vectors = false;
  return smallest_eigs(a, 1, opt).values.front();
}

Json temple_json(const TempleBound& t) {
  return {{"value", finite_or_null(t.value)},
          {"first_moment", t.first_moment},
          {"second_moment", t.second_moment},
          {"gap", t.gap},
          {"valid", t.valid}};
}

Json fit_json(const LifshitsFit& f) {
  return {{"eta_hat", f.eta},         {"std_error", f.std_error}, {"E_min", f.E_min},
          {"E_max", f.E_max},         {"r2", f.r2},               {"powerlaw_r2", f.powerlaw_r2},
          {"points", f.points},       {"used", f.used},           {"censored", f.censored},
          {"no_lifshits_decay", f.no_lifshits_decay}, {"message", f.message}};
}

Json ids_point_json(const IdsEstimate& est, std::size_t e) {
  return {{"E", est.energies[e]},
          {"N", est.values[e]},
          {"lo", est.lo[e]},
          {"hi", est.hi[e]},
          {"std_error", est.std_error[e]},
          {"n_realizations", est.n_realizations},
          {"failures", est.failures},
          {"box", box_json(est.box)},
          {"bc", to_string(est.bc)}};
}

Json sandwich_json(const SandwichPoint& p, const Box& box) {
  return {{"bound_type", "sandwich"},
          {"box", box_json(box)},
          {"E", p.E},
          {"lower", p.lower},
          {"lower_lo", p.lower_lo},
          {"lower_hi", p.lower_hi},
          {"direct", p.direct},
          {"direct_lo", p.direct_lo},
          {"direct_hi", p.direct_hi},
          {"upper", p.upper},
          {"upper_lo", p.upper_lo},
          {"upper_hi", p.upper_hi},
          {"p_dirichlet", p.p_dirichlet.p},
          {"p_chi", p.p_chi.p},
          {"free_count", p.free_count},
          {"value", p.lower},
          {"valid", p.ordered},
          {"ordered", p.ordered},
          {"consistent", p.consistent},
          {"warning", p.warning}};
}

std::vector<std::string> sandwich_header() {
  return {"E", "lower", "lower_lo", "lower_hi", "direct", "direct_lo", "direct_hi", "upper", "upper_lo", "upper_hi"};
}

std::vector<std::string> sandwich_row(const SandwichPoint& p) {
  return {csv_number(p.E),         csv_number(p.lower),    csv_number(p.lower_lo), csv_number(p.lower_hi),
          csv_number(p.direct),    csv_number(p.direct_lo), csv_number(p.direct_hi), csv_number(p.upper),
          csv_number(p.upper_lo),  csv_number(p.upper_hi)};
}

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

}  // namespace

ChainReport bound_chain(const ExperimentConfig& cfg, int threads) {
  const Model model = cfg.model();
  const Box box = cfg.experiment.make_box();
  const auto& prof = model.potential().profile();
  const auto& ex = cfg.experiment;
  const double g = prof.gamma();
  if (!(g < 1.0)) throw std::invalid_argument("bound chain needs gamma < 1");
  const double r0L = ex.r0 * ex.L;

  ChainReport rep;
  rep.mode = ex.cutoff;
  CutoffSpec spec;
  spec.mode = cutoff_mode_from_string(ex.cutoff);
  spec.truncation = model.truncation();
  switch (spec.mode) {
    case CutoffMode::qm:
      spec.h = 1.0 / (r0L * r0L);
      spec.f_u = model.potential().metadata().f_u;
      break;
    case CutoffMode::qc: {
      spec.h = 1.0;
      const auto sl = scaling_lengths(prof, 1.0, 1.0, 1.0);
      if (sl.block < 0) throw std::invalid_argument("qc cut-off needs a block with finite alpha");
      spec.block = sl.block;
      spec.R = std::pow(r0L, 2.0 / (prof.alpha(sl.block) * (1.0 - g)));
      break;
    }
    case CutoffMode::classical:
      spec.h = 1.0;
      for (int k = 0; k < prof.blocks(); ++k) {
        const double a = prof.alpha(k);
        const double beta = std::isinf(a) ? 0.0 : 2.0 / (a * (1.0 - g));
        spec.thresholds.push_back(std::pow(ex.L, beta));
      }
      break;
  }
  rep.h = spec.h;
  rep.R = spec.R;
  rep.thresholds = spec.thresholds;
  rep.gap = spectral_gap(model.assemble_free(BoundaryKind::mezincescu, box));

  const std::size_t n = ex.n_realizations;
  rep.records.resize(n);
  const Grid grid = model.grid(box);
  parallel_for(n, threads, [&](std::size_t r) {
    ChainRecord rec;
    rec.realization = r;
    const auto m = model.measure(box, derive_seed(cfg.seed, r));
    const auto v = sample_potential(m, model.potential(), grid, model.truncation());
    const auto vcut = cutoff_potential(regularize(m, spec.h), model.potential(), grid, spec);
    rec.sup_cut = vcut.max();
    rec.temple = temple_bound(vcut, model.ground_state(), rep.gap);
    rec.half_average = half_average_bound(vcut, model.ground_state());
    rec.lambda_chi_cut = lowest_eigenvalue(model.assemble(BoundaryKind::mezincescu, vcut).matrix);
    rec.lambda_chi = lowest_eigenvalue(model.assemble(BoundaryKind::mezincescu, v).matrix);
    const auto hd = model.assemble(BoundaryKind::dirichlet, v);
    rec.lambda_dirichlet = lowest_eigenvalue(hd.matrix);
    rec.rayleigh_ritz = rayleigh_ritz_upper(hd, v, model.ground_state());
    rec.config_valid = rec.temple.valid && rec.sup_cut <= rep.gap / 4.0;
    const double t = kChainTolerance;
    rec.chain_holds = rec.half_average <= rec.temple.value + t && rec.temple.value <= rec.lambda_chi_cut + t &&
                      rec.lambda_chi_cut <= rec.lambda_chi + t && rec.lambda_chi <= rec.lambda_dirichlet + t &&
                      rec.lambda_dirichlet <= rec.rayleigh_ritz.value + t;
    rep.records[r] = rec;
  });
  for (const auto& rec : rep.records) {
    if (!rec.config_valid) continue;
    ++rep.valid;
    if (!rec.chain_holds) ++rep.violations;
  }
  return rep;
}

RegimeExperiment regime_experiment(const ExperimentConfig& cfg, int threads) {
  const auto t0 = Clock::now();
  const Model model = cfg.model();
  const auto& ex = cfg.experiment;
  RegimeExperiment out{classify_regime(model.potential().profile())};
  out.energies = ex.energy_grid();
  for (double E : out.energies) {
    if (E > 0.0) out.scales.push_back(scaling_lengths(model.potential().profile(), E, ex.r0, ex.prefactor));
  }
  out.lambda_box = Box(std::vector<int>(ex.lambda_box.size(), 0), ex.lambda_box);
  out.direct_box = tiled_box(out.lambda_box, ex.tiles);

  const std::size_t n = ex.n_realizations;
  const std::size_t batch = 25;
  const std::uint64_t direct_seed = derive_seed(cfg.seed, kDirectStream);
  std::vector<PairedHits> hits(n);
  std::vector<std::vector<std::size_t>> counts(n);
  for (std::size_t start = 0; start < n; start += batch) {
    if (start > 0 && ex.budget_seconds > 0.0 && seconds_since(t0) > ex.budget_seconds) {
      out.partial = true;
      break;
    }
    const std::size_t cnt = std::min(batch, n - start);
    parallel_for(cnt, threads, [&](std::size_t i) {
      const std::size_t r = start + i;
      hits[r] = paired_hits(model, out.lambda_box, out.energies, derive_seed(cfg.seed, r));
      counts[r] = realization_counts(model, out.direct_box, BoundaryKind::dirichlet, out.energies,
                                     derive_seed(direct_seed, r));
    });
    out.n_used = start + cnt;
  }
  hits.resize(out.n_used);
  counts.resize(out.n_used);
  out.direct = summarize_counts(out.energies, std::move(counts), out.direct_box, BoundaryKind::dirichlet, direct_seed);
  out.sandwich = sandwich_points(model, out.lambda_box, out.energies, hits, out.direct);
  try {
    out.fit = lifshits_fit(out.direct);
  } catch (const std::invalid_argument& e) {
    out.fit_error = e.what();
  }
  return out;
}

RunResult run_sample_measure(const ExperimentConfig& cfg, ResultSink& sink, const std::string& out_dir) {
  const Box box = cfg.experiment.make_box();
  const auto m = sample_measure(cfg.measure, box, cfg.seed);
  std::filesystem::create_directories(out_dir);
  const auto path = std::filesystem::path(out_dir) / "measure.jsonl";
  std::ofstream os(path, std::ios::binary);
  write_measure_jsonl(os, m);
  const auto masses = cell_masses(m);
  sink.add("sample", {{"what", "measure"},
                      {"family", to_string(m.family())},
                      {"box", box_json(box)},
                      {"atoms", m.atom_count()},
                      {"total_weight", m.total_weight()},
                      {"mean_cell_mass", masses.total() / box.volume()},
                      {"file", "measure.jsonl"}});
  sink.set_header({"cell", "mass"});
  for (std::size_t i = 0; i < box.cell_count(); ++i) sink.add_row({std::to_string(i), csv_number(masses[i])});
  return {format("sample-measure: %zu atoms in %zu cells, mean cell mass %.6g", m.atom_count(), box.cell_count(),
                 masses.total() / box.volume())};
}

RunResult run_sample_potential(const ExperimentConfig& cfg, ResultSink& sink, const std::string& out_dir) {
  const Model model = cfg.model();
  const Box box = cfg.experiment.make_box();
  const auto v = model.field(box, cfg.seed);
  std::filesystem::create_directories(out_dir);
  std::ofstream os(std::filesystem::path(out_dir) / "field.csv", std::ios::binary);
  write_field_csv(os, v);
  const auto& pv = v.provenance;
  sink.add("sample", {{"what", "potential"},
                      {"potential", pv.potential},
                      {"box", box_json(box)},
                      {"nodes", v.values.size()},
                      {"max", v.max()},
                      {"mean", v.mean()},
                      {"truncation", pv.truncation},
                      {"truncation_bound", pv.truncation_bound},
                      {"truncation_warning", pv.truncation_warning},
                      {"file", "field.csv"}});
  sink.set_header({"node", "V"});
  for (std::size_t i = 0; i < v.values.size(); ++i) sink.add_row({std::to_string(i), csv_number(v.values[i])});
  return {format("sample-potential: %zu nodes, mean %.6g, max %.6g", v.values.size(), v.mean(), v.max())};
}

RunResult run_eigs(const ExperimentConfig& cfg, ResultSink& sink) {
  const Model model = cfg.model();
  const Box box = cfg.experiment.make_box();
  const auto v = model.field(box, cfg.seed);
  const auto op = model.assemble(cfg.bc, v);
  EigenOptions opt;
  opt.want_vectors = false;
  const int k = std::min<int>(cfg.experiment.n_eigs, static_cast<int>(op.matrix.size()));
  const auto res = smallest_eigs(op.matrix, k, opt);
  sink.add("eigs", {{"box", box_json(box)},
                    {"bc", to_string(cfg.bc)},
                    {"E0", model.ground_state().E0},
                    {"values", res.values},
                    {"residuals", res.residuals},
                    {"iterations", res.iterations},
                    {"converged", res.converged}});
  sink.set_header({"index", "lambda", "residual"});
  for (std::size_t i = 0; i < res.values.size(); ++i) {
    sink.add_row({std::to_string(i), csv_number(res.values[i]), csv_number(res.residuals[i])});
  }
  return {format("eigs: lambda_0 = %.10g (%s, %zu nodes, %d iterations)", res.values.front(), to_string(cfg.bc).c_str(),
                 op.matrix.size(), res.iterations)};
}

RunResult run_ids(const ExperimentConfig& cfg, ResultSink& sink, int threads) {
  const Model model = cfg.model();
  const Box box = cfg.experiment.make_box();
  const auto E = cfg.experiment.energy_grid();
  const auto est = estimate_ids(model, box, cfg.bc, E, cfg.experiment.n_realizations, cfg.seed, threads);
  sink.set_header({"E", "N", "lo", "hi", "std_error"});
  for (std::size_t e = 0; e < E.size(); ++e) {
    sink.add("ids_point", ids_point_json(est, e));
    sink.add_row({csv_number(E[e]), csv_number(est.values[e]), csv_number(est.lo[e]), csv_number(est.hi[e]),
                  csv_number(est.std_error[e])});
  }
  std::string fit_text = "fit unavailable";
  try {
    const auto fit = lifshits_fit(est);
    sink.add("fit", fit_json(fit));
    fit_text = format("eta_hat = %.6f +- %.6f", fit.eta, fit.std_error);
  } catch (const std::invalid_argument& e) {
    sink.add("fit", {{"error", e.what()}});
    fit_text = std::string("fit: ") + e.what();
  }
  return {format("ids: %zu energies, %zu realizations (%zu failed); %s", E.size(), est.n_realizations, est.failures,
                 fit_text.c_str())};
}

RunResult run_bounds(const ExperimentConfig& cfg, ResultSink& sink, int threads) {
  if (cfg.experiment.kind == "chain") {
    const auto rep = bound_chain(cfg, threads);
    const Box box = cfg.experiment.make_box();
    sink.set_header({"realization", "half_average", "temple", "lambda_chi_cut", "lambda_chi", "lambda_dirichlet",
                     "rayleigh_ritz", "config_valid", "chain_holds"});
    for (const auto& r : rep.records) {
      sink.add("bound", {{"bound_type", "chain"},
                         {"box", box_json(box)},
                         {"params", {{"mode", rep.mode}, {"gap", rep.gap}, {"h", rep.h}, {"R", rep.R},
                                     {"thresholds", rep.thresholds}, {"realization", r.realization}}},
                         {"value", finite_or_null(r.temple.value)},
                         {"lambda0", r.lambda_chi},
                         {"valid", r.config_valid},
                         {"temple", temple_json(r.temple)},
                         {"half_average", r.half_average},
                         {"sup_cut", r.sup_cut},
                         {"lambda_chi_cut", r.lambda_chi_cut},
                         {"lambda_chi", r.lambda_chi},
                         {"lambda_dirichlet", r.lambda_dirichlet},
                         {"rayleigh_ritz", {{"value", r.rayleigh_ritz.value},
                                            {"potential_term", r.rayleigh_ritz.potential_term},
                                            {"gradient_term", r.rayleigh_ritz.gradient_term}}},
                         {"chain_holds", r.chain_holds}});
      sink.add_row({std::to_string(r.realization), csv_number(r.half_average), csv_number(r.temple.value),
                    csv_number(r.lambda_chi_cut), csv_number(r.lambda_chi), csv_number(r.lambda_dirichlet),
                    csv_number(r.rayleigh_ritz.value), r.config_valid ? "1" : "0", r.chain_holds ? "1" : "0"});
    }
    return {format("bounds (chain %s): %zu/%zu valid configurations, %zu violations, gap %.6g", rep.mode.c_str(),
                   rep.valid, rep.records.size(), rep.violations, rep.gap),
            rep.violations == 0 ? 0 : 1};
  }
  const Model model = cfg.model();
  const Box box = cfg.experiment.make_box();
  const auto E = cfg.experiment.energy_grid();
  const auto rep = verify_sandwich(model, box, E, cfg.experiment.n_realizations, cfg.seed, cfg.experiment.tiles, threads);
  sink.set_header(sandwich_header());
  std::size_t ordered = 0, consistent = 0;
  for (const auto& p : rep.points) {
    sink.add("bound", sandwich_json(p, box));
    sink.add_row(sandwich_row(p));
    ordered += p.ordered;
    consistent += p.consistent;
  }
  const bool ok = ordered == rep.points.size();
  return {format("bounds (sandwich): lower <= upper at %zu/%zu energies, within CIs at %zu/%zu", ordered,
                 rep.points.size(), consistent, rep.points.size()),
          ok ? 0 : 1};
}

RunResult run_regime(const ExperimentConfig& cfg, ResultSink& sink, int threads) {
  const auto ex = regime_experiment(cfg, threads);
  sink.set_header(sandwich_header());
  std::size_t si = 0;
  for (std::size_t e = 0; e < ex.energies.size(); ++e) {
    sink.add("ids_point", ids_point_json(ex.direct, e));
    Json b = sandwich_json(ex.sandwich[e], ex.lambda_box);
    if (ex.energies[e] > 0.0 && si < ex.scales.size()) {
      const auto& s = ex.scales[si++];
      b["params"] = {{"L", s.L}, {"h", s.h}, {"R", finite_or_null(s.R)}, {"beta_cl", s.beta_cl},
                     {"beta_lower", s.beta_lower}};
    }
    sink.add("bound", b);
    sink.add_row(sandwich_row(ex.sandwich[e]));
  }
  if (ex.fit) {
    sink.add("fit", fit_json(*ex.fit));
  } else {
    sink.add("fit", {{"error", ex.fit_error}});
  }
  Json blocks = Json::array();
  for (const auto& b : ex.theory.blocks) {
    blocks.push_back({{"quantum", b.quantum}, {"classical", b.classical}, {"quantum_side", b.quantum_side}});
  }
  Json alpha = Json::array();
  for (int k = 0; k < ex.theory.profile.blocks(); ++k) alpha.push_back(finite_or_null(ex.theory.profile.alpha(k)));
  std::size_t ordered = 0, consistent = 0;
  for (const auto& p : ex.sandwich) {
    ordered += p.ordered;
    consistent += p.consistent;
  }
  sink.add("regime", {{"regime", ex.theory.regime},
                      {"alpha", alpha},
                      {"blocks", blocks},
                      {"eta_theory", ex.theory.eta},
                      {"eta_hat", ex.fit ? Json(ex.fit->eta) : Json(nullptr)},
                      {"eta_stderr", ex.fit ? Json(ex.fit->std_error) : Json(nullptr)},
                      {"n_realizations", ex.n_used},
                      {"partial", ex.partial},
                      {"lambda_box", box_json(ex.lambda_box)},
                      {"direct_box", box_json(ex.direct_box)},
                      {"sandwich_ordered", ordered},
                      {"sandwich_consistent", consistent},
                      {"energies", ex.energies.size()}});
  const std::string eta = ex.fit ? format("eta_hat = %.4f +- %.4f", ex.fit->eta, ex.fit->std_error) : "eta_hat unavailable (" + ex.fit_error + ")";
  return {format("regime %s: %s vs eta_theory = %.4f; sandwich ordered %zu/%zu, within CIs %zu/%zu%s",
                 ex.theory.regime.c_str(), eta.c_str(), ex.theory.eta, ordered, ex.sandwich.size(), consistent,
                 ex.sandwich.size(), ex.partial ? " [partial: budget exhausted]" : ""),
          ordered == ex.sandwich.size() ? 0 : 1};
}

RunResult run_stat_tests(const ExperimentConfig& cfg, ResultSink& sink) {
  const int dim = cfg.model().dim();
  sink.set_header({"test", "statistic", "value", "flag"});
  // Small-mass condition.
  const std::vector<double> eps{1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
  const auto sm = fit_small_mass_exponent(cfg.measure, dim, eps, 20000, derive_seed(cfg.seed, 1));
  Json probs = Json::array();
  for (const auto& p : sm.probabilities) probs.push_back({{"p", p.p}, {"lo", p.lo}, {"hi", p.hi}});
  sink.add("stat_test", {{"test", "small_mass"}, {"eps", sm.eps}, {"probabilities", probs}, {"kappa", sm.kappa},
                         {"violated", sm.violated}, {"diagnostic", sm.diagnostic}});
  sink.add_row({"small_mass", "kappa", csv_number(sm.kappa), sm.violated ? "violated" : "ok"});
  // Mixing at lag 2 along axis 0.
  std::vector<int> lag(dim, 0);
  lag[0] = 2;
  const auto mix = mixing_correlation(cfg.measure, lag, 20000, derive_seed(cfg.seed, 2));
  const bool mix_ok = mix.degenerate || std::abs(mix.r) <= 3.0 * mix.std_error;
  sink.add("stat_test", {{"test", "mixing"}, {"lag", lag}, {"r", mix.r}, {"std_error", mix.std_error},
                         {"degenerate", mix.degenerate}, {"within_3se", mix_ok}});
  sink.add_row({"mixing", "r", csv_number(mix.r), mix_ok ? "ok" : "correlated"});
  // Empirical intensity periodicity.
  const auto inten = empirical_intensity(cfg.measure, Box::cube(dim, 0, 3), 4000, derive_seed(cfg.seed, 3));
  const bool inten_ok = inten.max_z <= 4.0;
  sink.add("stat_test", {{"test", "intensity"}, {"grand_mean", inten.grand_mean}, {"max_deviation", inten.max_deviation},
                         {"max_z", inten.max_z}, {"expected", cfg.measure.mean_cell_mass()}, {"periodic", inten_ok}});
  sink.add_row({"intensity", "max_z", csv_number(inten.max_z), inten_ok ? "ok" : "nonperiodic"});
  // Birman-Solomyak summability of the impurity potential.
  const auto pot = cfg.potential.build();
  const std::vector<int> radii{2, 4, 8, 16, 32};
  const double p_int = dim < 4 ? 2.0 : dim / 2.0 + 1.0;
  const auto bs = birman_solomyak_partial_sums(pot, p_int, radii);
  sink.add("stat_test", {{"test", "birman_solomyak"}, {"p", p_int}, {"radii", bs.radii}, {"partial_sums", bs.partial_sums},
                         {"increment_slope", bs.increment_slope}, {"convergent", bs.convergent},
                         {"diagnostic", bs.diagnostic}});
  sink.add_row({"birman_solomyak", "increment_slope", csv_number(bs.increment_slope), bs.convergent ? "ok" : "divergent"});
  return {format("stat-tests: kappa=%.4g%s, mixing r=%.4g (se %.2g), intensity max_z=%.3g, Birman-Solomyak %s", sm.kappa,
                 sm.violated ? " [small-mass violated]" : "", mix.r, mix.std_error, inten.max_z,
                 bs.convergent ? "convergent" : "divergent")};
}

RunResult run_bench(const ExperimentConfig& cfg, ResultSink& sink) {
  const Model model = cfg.model();
  const Box box = cfg.experiment.make_box();
  auto t = Clock::now();
  const auto v = model.field(box, cfg.seed);
  const double t_field = seconds_since(t);
  t = Clock::now();
  const auto op = model.assemble(cfg.bc, v);
  const double t_assemble = seconds_since(t);
  t = Clock::now();
  const InertiaCounter counter(op.matrix);
  const auto cnt = counter.count_below(cfg.experiment.energy_grid().back());
  const double t_count = seconds_since(t);
  t = Clock::now();
  EigenOptions opt;
  opt.want_vectors = false;
  const auto eig = smallest_eigs(op.matrix, std::min<int>(2, static_cast<int>(op.matrix.size())), opt);
  const double t_eigs = seconds_since(t);
  sink.add("bench", {{"nodes", op.matrix.size()},
                     {"bandwidth", counter.ordering().bandwidth},
                     {"ordering", counter.ordering().name},
                     {"field_seconds", t_field},
                     {"assemble_seconds", t_assemble},
                     {"count_seconds", t_count},
                     {"eigs_seconds", t_eigs},
                     {"count", cnt.count},
                     {"lambda0", eig.values.front()}});
  sink.set_header({"stage", "seconds"});
  sink.add_row({"field", csv_number(t_field)});
  sink.add_row({"assemble", csv_number(t_assemble)});
  sink.add_row({"count", csv_number(t_count)});
  sink.add_row({"eigs", csv_number(t_eigs)});
  return {format("bench: %zu nodes (bw %zu, %s): field %.3fs assemble %.3fs count %.3fs eigs %.3fs", op.matrix.size(),
                 counter.ordering().bandwidth, counter.ordering().name, t_field, t_assemble, t_count, t_eigs)};
}

namespace {

void read_series_csv(const std::string& path, std::vector<double>& E, std::vector<double>& N, std::vector<double>& lo) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(path + ": empty file");
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
  }
  auto index_of = [&](const std::string& name) -> int {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (cols[i] == name) return static_cast<int>(i);
    }
    return -1;
  };
  const int ie = index_of("E"), in_ = index_of("N"), il = index_of("lower") >= 0 ? index_of("lower") : index_of("lo");
  if (ie < 0 || in_ < 0) throw std::invalid_argument(path + ": needs columns E and N");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) vals.push_back(std::stod(c));
    if (static_cast<int>(vals.size()) != static_cast<int>(cols.size())) throw std::invalid_argument(path + ": ragged row");
    E.push_back(vals[ie]);
    N.push_back(vals[in_]);
    if (il >= 0) lo.push_back(vals[il]);
  }
}

}  // namespace

RunResult run_fit(const ExperimentConfig& cfg, ResultSink& sink, const std::string& input) {
  (void)cfg;
  std::vector<double> E, N, lo;
  if (input.size() >= 6 && input.substr(input.size() - 6) == ".jsonl") {
    for (const auto& r : read_records(input)) {
      if (r.value("kind", "") != "ids_point") continue;
      E.push_back(r["payload"]["E"].get<double>());
      N.push_back(r["payload"]["N"].get<double>());
      lo.push_back(r["payload"]["lo"].get<double>());
    }
  } else {
    read_series_csv(input, E, N, lo);
  }
  const auto fit = lifshits_fit(E, N, lo);
  sink.add("fit", fit_json(fit));
  sink.set_header({"E", "N", "log_abs_log_N", "used"});
  for (std::size_t i = 0; i < E.size(); ++i) {
    const bool used = std::find(fit.used.begin(), fit.used.end(), E[i]) != fit.used.end();
    const double ll = N[i] > 0.0 && N[i] != 1.0 ? std::log(std::abs(std::log(N[i]))) : std::nan("");
    sink.add_row({csv_number(E[i]), csv_number(N[i]), csv_number(ll), used ? "1" : "0"});
  }
  return {format("fit: eta_hat = %.6f +- %.2g over [%.4g, %.4g] (%zu points, r2 = %.6f)%s", fit.eta, fit.std_error,
                 fit.E_min, fit.E_max, fit.points, fit.r2, fit.no_lifshits_decay ? " [no Lifshits decay]" : "")};
}

Table phase_grid(const std::vector<double>& alphas) {
  Table t;
  t.header = {"alpha1", "alpha2", "eta", "regime"};
  for (double a1 : alphas) {
    for (double a2 : alphas) {
      const auto prof = AnisotropyProfile::unchecked({1, 1}, {a1, a2});
      std::string eta = "nan", tag = "invalid";
      if (prof.gamma() < 1.0) {
        const auto rep = classify_regime(prof);
        eta = csv_number(rep.eta);
        tag = rep.regime;
      }
      t.rows.push_back({csv_number(a1), csv_number(a2), eta, tag});
    }
  }
  return t;
}

Table emit_plot_data(const std::vector<Json>& records, const std::string& kind) {
  Table t;
  auto payloads = [&](const std::string& k, const std::string& bound_type) {
    std::vector<Json> out;
    for (const auto& r : records) {
      if (r.value("kind", "") != k) continue;
      if (!bound_type.empty() && r["payload"].value("bound_type", "") != bound_type) continue;
      out.push_back(r["payload"]);
    }
    return out;
  };
  if (kind == "loglog") {
    t.header = {"E", "N", "log_E", "log_abs_log_N"};
    const auto ps = payloads("ids_point", "");
    if (ps.empty()) t.warnings.push_back("missing series: ids_point");
    double prev = -1.0, prevE = -kInf;
    for (const auto& p : ps) {
      const double E = p["E"].get<double>(), N = p["N"].get<double>();
      if (E > prevE && N < prev) t.warnings.push_back("N is not monotone at E = " + csv_number(E));
      if (E <= prevE) prev = -1.0;
      prev = N;
      prevE = E;
      const double ll = N > 0.0 && N != 1.0 ? std::log(std::abs(std::log(N))) : std::nan("");
      t.rows.push_back({csv_number(E), csv_number(N), csv_number(E > 0 ? std::log(E) : std::nan("")), csv_number(ll)});
    }
  } else if (kind == "phase") {
    return phase_grid({2.2, 2.5, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, kInf});
  } else if (kind == "chain") {
    t.header = {"realization", "half_average", "temple", "lambda_chi_cut", "lambda_chi", "lambda_dirichlet", "rayleigh_ritz"};
    const auto ps = payloads("bound", "chain");
    if (ps.empty()) t.warnings.push_back("missing series: bound/chain");
    for (const auto& p : ps) {
      const auto temple = p["temple"]["value"];
      t.rows.push_back({std::to_string(p["params"]["realization"].get<std::size_t>()),
                        csv_number(p["half_average"].get<double>()),
                        temple.is_null() ? "-inf" : csv_number(temple.get<double>()),
                        csv_number(p["lambda_chi_cut"].get<double>()), csv_number(p["lambda_chi"].get<double>()),
                        csv_number(p["lambda_dirichlet"].get<double>()),
                        csv_number(p["rayleigh_ritz"]["value"].get<double>())});
    }
  } else if (kind == "sandwich") {
    t.header = sandwich_header();
    const auto ps = payloads("bound", "sandwich");
    if (ps.empty()) t.warnings.push_back("missing series: bound/sandwich");
    for (const auto& p : ps) {
      std::vector<std::string> row;
      for (const auto& h : t.header) row.push_back(csv_number(p[h].get<double>()));
      t.rows.push_back(row);
    }
  } else {
    throw std::invalid_argument("plot-data kind must be loglog, phase, chain or sandwich");
  }
  return t;
}

}  // namespace lifshits
