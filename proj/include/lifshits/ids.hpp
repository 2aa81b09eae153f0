#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lifshits/impurity.hpp"
#include "lifshits/model.hpp"
#include "lifshits/stats.hpp"

namespace lifshits {

/// sum_k max{d_k/2, gamma_k/(1-gamma)}; rejects gamma >= 1.
double eta_theory(const AnisotropyProfile& profile);

struct BlockRegime {
  double quantum = 0.0;    // d_k / 2
  double classical = 0.0;  // gamma_k / (1 - gamma)
  bool quantum_side = true;  // quantum >= classical
};

struct RegimeReport {
  AnisotropyProfile profile;
  std::vector<BlockRegime> blocks;
  std::string regime;  // qm | qm_cl | cl_qm | cl for m = 2, per-block tags joined by '_' otherwise
  double eta = 0.0;
};

RegimeReport classify_regime(const AnisotropyProfile& profile);

struct ScalingLengths {
  double E = 0.0;
  double L = 0.0;                  // prefactor * E^{-1/2}
  double h = 0.0;                  // (r0 L)^{-2}
  int block = -1;                  // block used for R
  double R = 0.0;                  // (r0 L)^{2/(alpha_c (1 - gamma))}
  std::vector<double> beta_cl;     // 2/(alpha_k (1 - gamma))
  std::vector<double> beta_lower;  // max{1, beta_cl}
};

/// block < 0 picks the block with the largest classical-to-quantum ratio.
ScalingLengths scaling_lengths(const AnisotropyProfile& profile, double E, double r0, double prefactor = 1.0,
                               int block = -1);

struct IdsEstimate {
  std::vector<double> energies;
  std::vector<double> values;  // per-volume mean count
  std::vector<double> std_error;
  std::vector<double> lo;      // 95% interval
  std::vector<double> hi;
  Box box;
  BoundaryKind bc = BoundaryKind::dirichlet;
  std::size_t n_realizations = 0;
  std::size_t failures = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::size_t>> counts;  // [realization][energy]
};

/// Mean eigenvalue count per unit volume below each energy over n realizations
/// (realization r uses derive_seed(seed, r)). Energies <= 0 give 0.
IdsEstimate estimate_ids(const Model& model, const Box& box, BoundaryKind bc, std::span<const double> energies,
                         std::size_t n, std::uint64_t seed, int threads = 0);

/// Aggregates per-realization counts (counts[r][e]) into an estimate.
IdsEstimate summarize_counts(std::span<const double> energies, std::vector<std::vector<std::size_t>> counts,
                             const Box& box, BoundaryKind bc, std::uint64_t seed, std::size_t failures = 0);

/// #{lambda < E} of the operator on `box` for each energy; energies <= 0 give 0.
std::vector<std::size_t> realization_counts(const Model& model, const Box& box, BoundaryKind bc,
                                            std::span<const double> energies, std::uint64_t seed);

/// P{lambda_0 < E} for every energy with paired realizations.
std::vector<ProportionEstimate> ground_state_probabilities(const Model& model, const Box& box, BoundaryKind bc,
                                                           std::span<const double> energies, std::size_t n,
                                                           std::uint64_t seed, int threads = 0);
ProportionEstimate ground_state_probability(const Model& model, const Box& box, BoundaryKind bc, double E,
                                            std::size_t n, std::uint64_t seed, int threads = 0);

struct FitWindow {
  double E_min = 0.0;
  double E_max = kInf;
};

struct LifshitsFit {
  double eta = 0.0;
  double std_error = 0.0;
  double E_min = 0.0;
  double E_max = 0.0;
  double r2 = 0.0;
  double powerlaw_r2 = 0.0;  // r^2 of log N vs log E over the same points
  std::size_t points = 0;
  std::vector<double> used;      // energies in the fit
  std::vector<double> censored;  // energies excluded (N = 0, CI reaching 0, or |log N| < 1)
  bool no_lifshits_decay = false;
  std::string message;
};

/// OLS of log|log N| on log E; eta = -slope. `lower` holds the lower CI per
/// energy (may be empty for exact data). Throws std::invalid_argument when
/// fewer than 4 usable energies remain or they span less than half a decade.
LifshitsFit lifshits_fit(std::span<const double> energies, std::span<const double> values,
                         std::span<const double> lower = {}, const FitWindow& window = {});
LifshitsFit lifshits_fit(const IdsEstimate& est, const FitWindow& window = {});

}  // namespace lifshits
