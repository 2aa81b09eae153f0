#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lifshits/discretize.hpp"
#include "lifshits/ids.hpp"
#include "lifshits/impurity.hpp"
#include "lifshits/model.hpp"
#include "lifshits/stats.hpp"

namespace lifshits {

struct TempleBound {
  double value = 0.0;          // -inf when invalid
  double first_moment = 0.0;   // <psi_L, V psi_L>
  double second_moment = 0.0;  // <V psi_L, V psi_L>
  double gap = 0.0;            // lambda_1(H^chi(0)) - 0
  bool valid = false;          // gap - first_moment > 0
};

/// lambda_1 - lambda_0 of a V = 0 operator (shifted, so lambda_0 = 0 for
/// the Mezincescu operator).
double spectral_gap(const DiscreteOperator& hchi0);

/// Temple lower bound with the normalized trial psi|_Lambda; moments are grid
/// quadratures sum V psi^2 / sum psi^2.
TempleBound temple_bound(const PotentialField& v, const PeriodicGroundState& psi, double gap);
TempleBound temple_bound(const DiscreteOperator& hchi0, const PotentialField& v, const PeriodicGroundState& psi);

/// Half the psi^2-weighted average of V.
double half_average_bound(const PotentialField& v, const PeriodicGroundState& psi);

struct RayleighRitzBound {
  double value = 0.0;           // Rayleigh quotient of theta_L psi
  double potential_term = 0.0;  // sum V phi^2 / sum phi^2
  double gradient_term = 0.0;   // value - potential_term
  std::string trial;
};

/// Smoothed indicator of the box: product over axes of a quintic ramp in
/// t = |x_i - c_i| / side_i, equal to 1 for t <= 1/4 and 0 for t >= 1/2.
double smoothed_indicator(std::span<const double> x, const Box& box);

/// Upper bound on lambda_0 of hd (an operator that already contains V) from
/// the trial theta_L psi.
RayleighRitzBound rayleigh_ritz_upper(const DiscreteOperator& hd, const PotentialField& v,
                                      const PeriodicGroundState& psi);

struct GapFit {
  std::vector<int> sizes;
  std::vector<double> gaps;
  double exponent = 0.0;  // slope of log gap vs log L
  double exponent_stderr = 0.0;
  double c0 = 0.0;        // min over sizes of gap L^2 / 2
  bool all_positive = false;
};

/// Gaps of H^chi(0) on cubes of side L (cells) for every L in sizes.
GapFit gap_scaling(const PeriodicPotential& u, std::span<const int> sizes);

struct SandwichPoint {
  double E = 0.0;
  ProportionEstimate p_dirichlet;  // P{lambda_0(H^D) < E}
  ProportionEstimate p_chi;        // P{lambda_0(H^chi) < E}
  std::size_t free_count = 0;      // N(E; H^chi(0))
  double lower = 0.0;
  double lower_lo = 0.0;
  double lower_hi = 0.0;
  double upper = 0.0;
  double upper_lo = 0.0;
  double upper_hi = 0.0;
  double direct = 0.0;
  double direct_lo = 0.0;
  double direct_hi = 0.0;
  bool ordered = true;     // lower <= upper
  bool consistent = true;  // lower <= direct <= upper within intervals
  std::string warning;
};

struct SandwichReport {
  Box box;
  Box direct_box;
  std::size_t n_realizations = 0;
  std::uint64_t seed = 0;
  std::vector<SandwichPoint> points;
};

/// Ground-state indicators 1{lambda_0 < E} of H^D and H^chi for one
/// realization; both operators share the field.
struct PairedHits {
  std::vector<char> dirichlet;
  std::vector<char> chi;
};
PairedHits paired_hits(const Model& model, const Box& box, std::span<const double> energies, std::uint64_t seed);

/// Sandwich points from paired hits on `box` and a direct estimate.
std::vector<SandwichPoint> sandwich_points(const Model& model, const Box& box, std::span<const double> energies,
                                           std::span<const PairedHits> hits, const IdsEstimate& direct);

/// Box with the same lower corner and `tiles` times the extent per axis.
Box tiled_box(const Box& box, int tiles);

/// Stream index of the direct estimate's master seed.
inline constexpr std::uint64_t kDirectStream = 0xd1ec7ULL;

/// Paired Dirichlet / Mezincescu probabilities on `box` and a direct
/// Dirichlet IDS estimate on a box tiled by `tiles` copies of it per axis.
SandwichReport verify_sandwich(const Model& model, const Box& box, std::span<const double> energies, std::size_t n,
                               std::uint64_t seed, int tiles = 2, int threads = 0);

}  // namespace lifshits
