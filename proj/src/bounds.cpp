#include "lifshits/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lifshits/parallel.hpp"
#include "lifshits/spectral.hpp"

namespace lifshits {

namespace {

void require_same_grid(const PotentialField& v, const Grid& g, const char* who) {
  if (!(v.grid == g)) throw std::invalid_argument(std::string(who) + ": field and operator grids differ");
}

double quintic_ramp(double t) {
  if (t <= 0.25) return 1.0;
  if (t >= 0.5) return 0.0;
  const double s = 4.0 * (t - 0.25);
  return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

}  // namespace

double spectral_gap(const DiscreteOperator& hchi0) {
  if (hchi0.matrix.size() < 2) throw std::invalid_argument("spectral_gap: need at least two nodes");
  EigenOptions opt;
  opt.want_vectors = false;
  const auto r = smallest_eigs(hchi0.matrix, 2, opt);
  return r.values[1] - r.values[0];
}

TempleBound temple_bound(const PotentialField& v, const PeriodicGroundState& psi, double gap) {
  const auto w = restrict_psi(psi, v.grid);
  KahanSum s0, s1, s2;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double p2 = w[i] * w[i];
    s0.add(p2);
    s1.add(v.values[i] * p2);
    s2.add(v.values[i] * v.values[i] * p2);
  }
  TempleBound t;
  t.first_moment = s1.value() / s0.value();
  t.second_moment = s2.value() / s0.value();
  t.gap = gap;
  t.valid = gap - t.first_moment > 0.0;
  t.value = t.valid ? t.first_moment - t.second_moment / (gap - t.first_moment)
                    : -std::numeric_limits<double>::infinity();
  return t;
}

TempleBound temple_bound(const DiscreteOperator& hchi0, const PotentialField& v, const PeriodicGroundState& psi) {
  require_same_grid(v, hchi0.grid, "temple_bound");
  return temple_bound(v, psi, spectral_gap(hchi0));
}

double half_average_bound(const PotentialField& v, const PeriodicGroundState& psi) {
  const auto w = restrict_psi(psi, v.grid);
  KahanSum s0, s1;
  for (std::size_t i = 0; i < w.size(); ++i) {
    s0.add(w[i] * w[i]);
    s1.add(v.values[i] * w[i] * w[i]);
  }
  return 0.5 * s1.value() / s0.value();
}

double smoothed_indicator(std::span<const double> x, const Box& box) {
  double th = 1.0;
  for (int i = 0; i < box.dim(); ++i) {
    const double side = box.extent(i);
    const double c = box.lo(i) + 0.5 * side;
    th *= quintic_ramp(std::abs(x[i] - c) / side);
    if (th == 0.0) break;
  }
  return th;
}

RayleighRitzBound rayleigh_ritz_upper(const DiscreteOperator& hd, const PotentialField& v,
                                      const PeriodicGroundState& psi) {
  require_same_grid(v, hd.grid, "rayleigh_ritz_upper");
  const Grid& g = hd.grid;
  const auto w = restrict_psi(psi, g);
  std::vector<double> phi(w.size());
  std::vector<double> x(g.dim());
  for (std::size_t i = 0; i < w.size(); ++i) {
    g.position(i, x);
    phi[i] = smoothed_indicator(x, g.box()) * w[i];
  }
  KahanSum n2, pv;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    n2.add(phi[i] * phi[i]);
    pv.add(v.values[i] * phi[i] * phi[i]);
  }
  if (!(n2.value() > 0.0)) throw std::invalid_argument("rayleigh_ritz_upper: trial function vanishes on the grid");
  RayleighRitzBound rr;
  rr.value = hd.matrix.quadratic_form(phi) / n2.value();
  rr.potential_term = pv.value() / n2.value();
  rr.gradient_term = rr.value - rr.potential_term;
  rr.trial = "theta_L*psi (quintic ramp on [1/4,1/2] of side)";
  return rr;
}

GapFit gap_scaling(const PeriodicPotential& u, std::span<const int> sizes) {
  if (sizes.size() < 2) throw std::invalid_argument("gap_scaling: need at least two box sizes");
  const auto psi = periodic_ground_state(u);
  GapFit fit;
  fit.all_positive = true;
  fit.c0 = std::numeric_limits<double>::infinity();
  std::vector<double> lx, ly;
  for (int L : sizes) {
    if (L < 1) throw std::invalid_argument("gap_scaling: box sizes must be positive");
    const Grid g(Box::cube(u.dim(), 0, L), u.n_per_cell());
    const double gap = spectral_gap(mezincescu_assemble(u, g, psi));
    fit.sizes.push_back(L);
    fit.gaps.push_back(gap);
    if (!(gap > 0.0)) {
      fit.all_positive = false;
      continue;
    }
    fit.c0 = std::min(fit.c0, gap * L * L / 2.0);
    lx.push_back(std::log(static_cast<double>(L)));
    ly.push_back(std::log(gap));
  }
  if (lx.size() >= 2) {
    const auto ls = least_squares(lx, ly);
    fit.exponent = ls.slope;
    fit.exponent_stderr = ls.slope_stderr;
  }
  return fit;
}

PairedHits paired_hits(const Model& model, const Box& box, std::span<const double> energies, std::uint64_t seed) {
  const auto v = model.field(box, seed);
  const auto hd = model.assemble(BoundaryKind::dirichlet, v);
  const auto hc = model.assemble(BoundaryKind::mezincescu, v);
  const InertiaCounter cd(hd.matrix), cc(hc.matrix);
  PairedHits h;
  h.dirichlet.assign(energies.size(), 0);
  h.chi.assign(energies.size(), 0);
  for (std::size_t e = 0; e < energies.size(); ++e) {
    if (energies[e] <= 0.0) continue;
    h.chi[e] = cc.count_below(energies[e]).count > 0;
    h.dirichlet[e] = cd.count_below(energies[e]).count > 0;
  }
  return h;
}

std::vector<SandwichPoint> sandwich_points(const Model& model, const Box& box, std::span<const double> energies,
                                           std::span<const PairedHits> hits, const IdsEstimate& direct) {
  if (hits.empty()) throw std::invalid_argument("sandwich_points: no realizations");
  if (direct.values.size() != energies.size()) throw std::invalid_argument("sandwich_points: direct estimate mismatch");
  const auto free_op = model.assemble_free(BoundaryKind::mezincescu, box);
  const InertiaCounter free_counter(free_op.matrix);
  const double vol = box.volume();
  const std::size_t n = hits.size();
  std::vector<SandwichPoint> out;
  for (std::size_t e = 0; e < energies.size(); ++e) {
    SandwichPoint pt;
    pt.E = energies[e];
    std::size_t sd = 0, sc = 0;
    for (const auto& h : hits) {
      sd += h.dirichlet.at(e);
      sc += h.chi.at(e);
    }
    pt.p_dirichlet = wilson_interval(sd, n);
    pt.p_chi = wilson_interval(sc, n);
    pt.free_count = pt.E > 0.0 ? free_counter.count_below(pt.E).count : 0;
    const double nf = static_cast<double>(pt.free_count);
    pt.lower = pt.p_dirichlet.p / vol;
    pt.lower_lo = pt.p_dirichlet.lo / vol;
    pt.lower_hi = pt.p_dirichlet.hi / vol;
    pt.upper = nf * pt.p_chi.p / vol;
    pt.upper_lo = nf * pt.p_chi.lo / vol;
    pt.upper_hi = nf * pt.p_chi.hi / vol;
    pt.direct = direct.values[e];
    pt.direct_lo = direct.lo[e];
    pt.direct_hi = direct.hi[e];
    if (pt.E <= 0.0) {
      pt.lower_lo = pt.lower_hi = pt.upper_lo = pt.upper_hi = 0.0;
    }
    pt.ordered = pt.lower <= pt.upper;
    pt.consistent = pt.lower_lo <= pt.direct_hi && pt.direct_lo <= pt.upper_hi;
    if (pt.E > 0.0 && sd == 0) pt.warning = "low statistical power: no Dirichlet hits";
    out.push_back(pt);
  }
  return out;
}

Box tiled_box(const Box& box, int tiles) {
  if (tiles < 1) throw std::invalid_argument("tiles must be >= 1");
  std::vector<int> hi(box.dim());
  for (int i = 0; i < box.dim(); ++i) hi[i] = box.lo(i) + tiles * box.extent(i);
  return Box(box.lo(), hi);
}

SandwichReport verify_sandwich(const Model& model, const Box& box, std::span<const double> energies, std::size_t n,
                               std::uint64_t seed, int tiles, int threads) {
  if (n == 0) throw std::invalid_argument("verify_sandwich: need at least one realization");
  for (std::size_t i = 1; i < energies.size(); ++i) {
    if (energies[i] < energies[i - 1]) throw std::invalid_argument("verify_sandwich: energies must be ascending");
  }
  SandwichReport rep;
  rep.box = box;
  rep.direct_box = tiled_box(box, tiles);
  rep.n_realizations = n;
  rep.seed = seed;
  std::vector<PairedHits> hits(n);
  parallel_for(n, threads, [&](std::size_t r) { hits[r] = paired_hits(model, box, energies, derive_seed(seed, r)); });
  const auto direct = estimate_ids(model, rep.direct_box, BoundaryKind::dirichlet, energies, n,
                                   derive_seed(seed, kDirectStream), threads);
  rep.points = sandwich_points(model, box, energies, hits, direct);
  return rep;
}

}  // namespace lifshits
