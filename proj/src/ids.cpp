#include "lifshits/ids.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lifshits/parallel.hpp"
#include "lifshits/spectral.hpp"

namespace lifshits {

double eta_theory(const AnisotropyProfile& profile) {
  const double g = profile.gamma();
  if (!(g < 1.0)) throw std::invalid_argument("eta_theory: gamma must be < 1");
  double eta = 0.0;
  for (int k = 0; k < profile.blocks(); ++k) {
    eta += std::max(profile.block_dim(k) / 2.0, profile.gamma_k(k) / (1.0 - g));
  }
  return eta;
}

RegimeReport classify_regime(const AnisotropyProfile& profile) {
  RegimeReport rep{profile, {}, {}, eta_theory(profile)};
  const double g = profile.gamma();
  for (int k = 0; k < profile.blocks(); ++k) {
    BlockRegime b;
    b.quantum = profile.block_dim(k) / 2.0;
    b.classical = profile.gamma_k(k) / (1.0 - g);
    b.quantum_side = b.quantum >= b.classical;
    rep.blocks.push_back(b);
  }
  if (profile.blocks() == 2) {
    const bool q1 = rep.blocks[0].quantum_side;
    const bool q2 = rep.blocks[1].quantum_side;
    rep.regime = q1 && q2 ? "qm" : (q1 ? "qm_cl" : (q2 ? "cl_qm" : "cl"));
  } else {
    for (std::size_t k = 0; k < rep.blocks.size(); ++k) {
      rep.regime += (k ? "_" : "");
      rep.regime += rep.blocks[k].quantum_side ? "qm" : "cl";
    }
  }
  return rep;
}

ScalingLengths scaling_lengths(const AnisotropyProfile& profile, double E, double r0, double prefactor, int block) {
  if (!(E > 0.0)) throw std::invalid_argument("scaling_lengths: E must be positive");
  if (!(r0 > 0.0) || !(prefactor > 0.0)) throw std::invalid_argument("scaling_lengths: r0 and prefactor must be positive");
  const double g = profile.gamma();
  if (!(g < 1.0)) throw std::invalid_argument("scaling_lengths: gamma must be < 1");
  ScalingLengths s;
  s.E = E;
  s.L = prefactor / std::sqrt(E);
  s.h = std::pow(r0 * s.L, -2.0);
  for (int k = 0; k < profile.blocks(); ++k) {
    const double a = profile.alpha(k);
    const double b = std::isinf(a) ? 0.0 : 2.0 / (a * (1.0 - g));
    s.beta_cl.push_back(b);
    s.beta_lower.push_back(std::max(1.0, b));
  }
  if (block < 0) {
    double best = -1.0;
    for (int k = 0; k < profile.blocks(); ++k) {
      if (std::isinf(profile.alpha(k))) continue;
      const double ratio = profile.gamma_k(k) / (1.0 - g) / (profile.block_dim(k) / 2.0);
      if (ratio > best) {
        best = ratio;
        block = k;
      }
    }
  }
  s.block = block;
  if (block >= 0 && block < profile.blocks() && !std::isinf(profile.alpha(block))) {
    s.R = std::pow(r0 * s.L, 2.0 / (profile.alpha(block) * (1.0 - g)));
  } else {
    s.R = kInf;
  }
  return s;
}

namespace {

void check_energies(std::span<const double> energies) {
  for (std::size_t i = 0; i < energies.size(); ++i) {
    if (!std::isfinite(energies[i])) throw std::invalid_argument("energy grid must be finite");
    if (i && energies[i] < energies[i - 1]) throw std::invalid_argument("energy grid must be ascending");
  }
}

}  // namespace

std::vector<std::size_t> realization_counts(const Model& model, const Box& box, BoundaryKind bc,
                                            std::span<const double> energies, std::uint64_t seed) {
  const auto v = model.field(box, seed);
  const auto op = model.assemble(bc, v);
  const InertiaCounter counter(op.matrix);
  std::vector<std::size_t> out(energies.size(), 0);
  for (std::size_t e = 0; e < energies.size(); ++e) {
    if (energies[e] <= 0.0) continue;
    // Counts are monotone in E: once every eigenvalue is below, stop factoring.
    if (e && out[e - 1] == op.matrix.size()) {
      out[e] = out[e - 1];
      continue;
    }
    out[e] = counter.count_below(energies[e]).count;
  }
  return out;
}

IdsEstimate estimate_ids(const Model& model, const Box& box, BoundaryKind bc, std::span<const double> energies,
                         std::size_t n, std::uint64_t seed, int threads) {
  if (n == 0) throw std::invalid_argument("estimate_ids: need at least one realization");
  check_energies(energies);
  std::vector<std::vector<std::size_t>> counts(n);
  std::vector<char> failed(n, 0);
  parallel_for(n, threads, [&](std::size_t r) {
    try {
      counts[r] = realization_counts(model, box, bc, energies, derive_seed(seed, r));
    } catch (const std::runtime_error&) {
      failed[r] = 1;
    }
  });
  std::vector<std::vector<std::size_t>> ok;
  std::size_t failures = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (failed[r]) {
      ++failures;
    } else {
      ok.push_back(std::move(counts[r]));
    }
  }
  return summarize_counts(energies, std::move(ok), box, bc, seed, failures);
}

IdsEstimate summarize_counts(std::span<const double> energies, std::vector<std::vector<std::size_t>> counts,
                             const Box& box, BoundaryKind bc, std::uint64_t seed, std::size_t failures) {
  if (counts.empty()) throw std::runtime_error("ids: every realization failed");
  IdsEstimate est;
  est.energies.assign(energies.begin(), energies.end());
  est.box = box;
  est.bc = bc;
  est.seed = seed;
  est.failures = failures;
  est.counts = std::move(counts);
  est.n_realizations = est.counts.size();
  const double vol = box.volume();
  for (std::size_t e = 0; e < energies.size(); ++e) {
    std::vector<double> xs;
    xs.reserve(est.counts.size());
    for (const auto& c : est.counts) xs.push_back(static_cast<double>(c.at(e)) / vol);
    const auto m = mean_estimate(xs);
    est.values.push_back(m.mean);
    est.std_error.push_back(m.std_error);
    est.lo.push_back(std::max(0.0, m.mean - 1.959963984540054 * m.std_error));
    est.hi.push_back(m.mean + 1.959963984540054 * m.std_error);
  }
  return est;
}

std::vector<ProportionEstimate> ground_state_probabilities(const Model& model, const Box& box, BoundaryKind bc,
                                                           std::span<const double> energies, std::size_t n,
                                                           std::uint64_t seed, int threads) {
  if (n < 50) throw std::invalid_argument("ground_state_probability: need at least 50 realizations");
  check_energies(energies);
  std::vector<std::vector<std::size_t>> counts(n);
  parallel_for(n, threads, [&](std::size_t r) {
    counts[r] = realization_counts(model, box, bc, energies, derive_seed(seed, r));
  });
  std::vector<ProportionEstimate> out;
  for (std::size_t e = 0; e < energies.size(); ++e) {
    std::size_t hits = 0;
    for (const auto& c : counts) hits += c[e] > 0 ? 1 : 0;
    out.push_back(wilson_interval(hits, n));
  }
  return out;
}

ProportionEstimate ground_state_probability(const Model& model, const Box& box, BoundaryKind bc, double E,
                                            std::size_t n, std::uint64_t seed, int threads) {
  const double es[] = {E};
  return ground_state_probabilities(model, box, bc, es, n, seed, threads).front();
}

LifshitsFit lifshits_fit(std::span<const double> energies, std::span<const double> values,
                         std::span<const double> lower, const FitWindow& window) {
  if (energies.size() != values.size() || (!lower.empty() && lower.size() != values.size())) {
    throw std::invalid_argument("lifshits_fit: array sizes differ");
  }
  LifshitsFit fit;
  // Usable: inside the window, N > 0, CI away from 0, |log N| >= 1.
  std::vector<char> usable(energies.size(), 0);
  for (std::size_t i = 0; i < energies.size(); ++i) {
    const double E = energies[i];
    if (!(E > 0.0) || E < window.E_min || E > window.E_max) continue;
    const double N = values[i];
    const bool ok = N > 0.0 && (lower.empty() || lower[i] > 0.0) && std::abs(std::log(N)) >= 1.0;
    if (ok) {
      usable[i] = 1;
    } else {
      fit.censored.push_back(E);
    }
  }
  // Largest contiguous run of usable energies.
  std::size_t best_start = 0, best_len = 0;
  for (std::size_t i = 0; i < usable.size();) {
    if (!usable[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < usable.size() && usable[j]) ++j;
    if (j - i > best_len) {
      best_len = j - i;
      best_start = i;
    }
    i = j;
  }
  for (std::size_t i = 0; i < usable.size(); ++i) {
    if (usable[i] && (i < best_start || i >= best_start + best_len)) fit.censored.push_back(energies[i]);
  }
  std::sort(fit.censored.begin(), fit.censored.end());
  if (best_len < 4) throw std::invalid_argument("lifshits_fit: fewer than 4 usable energies");
  std::vector<double> lx, ly, lp;
  for (std::size_t i = best_start; i < best_start + best_len; ++i) {
    fit.used.push_back(energies[i]);
    lx.push_back(std::log(energies[i]));
    ly.push_back(std::log(std::abs(std::log(values[i]))));
    lp.push_back(std::log(values[i]));
  }
  fit.E_min = fit.used.front();
  fit.E_max = fit.used.back();
  if (std::log10(fit.E_max / fit.E_min) < 0.5) {
    throw std::invalid_argument("lifshits_fit: insufficient decades (window spans less than half a decade)");
  }
  const auto ls = least_squares(lx, ly);
  const auto pl = least_squares(lx, lp);
  fit.eta = -ls.slope;
  fit.std_error = ls.slope_stderr;
  fit.r2 = ls.r2;
  fit.powerlaw_r2 = pl.r2;
  fit.points = fit.used.size();
  fit.no_lifshits_decay = fit.eta < 0.25 || pl.r2 >= ls.r2;
  fit.message = fit.no_lifshits_decay ? "no Lifshits decay: power law fits at least as well" : "ok";
  return fit;
}

LifshitsFit lifshits_fit(const IdsEstimate& est, const FitWindow& window) {
  return lifshits_fit(est.energies, est.values, est.lo, window);
}

}  // namespace lifshits
