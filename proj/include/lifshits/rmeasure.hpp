#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lifshits/grid.hpp"
#include "lifshits/rng.hpp"
#include "lifshits/stats.hpp"

namespace lifshits {

enum class MeasureFamily { poisson, displacement, compound_poisson, compound_displacement, periodic };

std::string to_string(MeasureFamily f);
MeasureFamily measure_family_from_string(const std::string& s);

/// Law of the atom weights q_j.
class WeightLaw {
 public:
  enum class Kind { constant, exponential, uniform, bernoulli_scaled };

  static WeightLaw constant(double c);
  static WeightLaw exponential(double mean);
  static WeightLaw uniform(double a, double b);
  /// c with probability p, 0 otherwise.
  static WeightLaw bernoulli_scaled(double p, double c);

  Kind kind() const noexcept { return kind_; }
  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  double mean() const noexcept;
  /// P{w < eps}; used as an exact oracle in tests.
  double cdf_below(double eps) const noexcept;
  /// Whether P{w < eps} >= eps^kappa for some kappa (small-mass condition).
  bool has_small_mass() const noexcept;

  double sample(CounterRng& rng) const;
  std::string describe() const;

 private:
  WeightLaw(Kind kind, double a, double b);
  Kind kind_ = Kind::constant;
  double a_ = 1.0;
  double b_ = 0.0;
};

/// Sampler configuration shared by the statistical helpers and experiments.
struct MeasureConfig {
  MeasureFamily family = MeasureFamily::poisson;
  double rho = 1.0;                             // per-cell intensity (Poisson families)
  WeightLaw weights = WeightLaw::constant(1.0);  // compound families

  /// Expected mass of one unit cell.
  double mean_cell_mass() const noexcept;
  void validate() const;
};

/// A realization of an atomic random measure restricted to a box.
/// Immutable after construction.
class PointMeasure {
 public:
  PointMeasure(Box box, std::uint64_t seed, MeasureFamily family, std::vector<double> positions,
               std::vector<double> weights);

  const Box& box() const noexcept { return box_; }
  int dim() const noexcept { return box_.dim(); }
  std::uint64_t seed() const noexcept { return seed_; }
  MeasureFamily family() const noexcept { return family_; }
  std::size_t atom_count() const noexcept { return weights_.size(); }
  std::span<const double> position(std::size_t i) const {
    return {positions_.data() + i * static_cast<std::size_t>(dim()), static_cast<std::size_t>(dim())};
  }
  double weight(std::size_t i) const { return weights_[i]; }
  std::span<const double> positions() const noexcept { return positions_; }
  std::span<const double> weights() const noexcept { return weights_; }
  double total_weight() const noexcept;

  bool operator==(const PointMeasure&) const = default;

 private:
  Box box_;
  std::uint64_t seed_;
  MeasureFamily family_;
  std::vector<double> positions_;  // atom_count * dim, row major
  std::vector<double> weights_;
};

PointMeasure sample_poisson(double rho, const Box& box, std::uint64_t seed);
/// One atom per cell at j + d_j, d_j uniform in [0,1)^d (or d_j = 0 when
/// `displaced` is false). Weight 1 and no displacement gives the periodic
/// point measure.
PointMeasure sample_displacement(const WeightLaw& weights, const Box& box, std::uint64_t seed,
                                 bool displaced = true);
PointMeasure sample_compound_poisson(double rho, const WeightLaw& weights, const Box& box, std::uint64_t seed);
PointMeasure sample_measure(const MeasureConfig& cfg, const Box& box, std::uint64_t seed);

/// mu(Lambda_j) for every cell j of the measure's box, flat-indexed like Box.
class CellMassMap {
 public:
  CellMassMap(Box box, std::vector<double> masses);
  const Box& box() const noexcept { return box_; }
  double operator[](std::size_t flat) const { return masses_[flat]; }
  double at(std::span<const int> cell) const { return masses_[box_.flat_index(cell)]; }
  std::span<const double> values() const noexcept { return masses_; }
  double total() const noexcept;

 private:
  Box box_;
  std::vector<double> masses_;
};

/// Half-open cell index floor(x) of a point.
std::vector<int> cell_of(std::span<const double> x);
CellMassMap cell_masses(const PointMeasure& m);

/// Caps every cell mass at h by rescaling the atoms of heavier cells.
PointMeasure regularize(const PointMeasure& m, double h);

// Statistical validation of the measure assumptions.

/// P{mu(Lambda_0) < eps} from n independent unit-cell draws.
ProportionEstimate estimate_small_mass_prob(const MeasureConfig& cfg, int dim, double eps, std::size_t n,
                                            std::uint64_t seed);

struct SmallMassExponent {
  std::vector<double> eps;
  std::vector<ProportionEstimate> probabilities;
  double kappa = 0.0;       // fitted slope of log P vs log eps
  bool violated = false;    // P-hat = 0 at every eps
  std::string diagnostic;
};

SmallMassExponent fit_small_mass_exponent(const MeasureConfig& cfg, int dim, std::span<const double> eps_grid,
                                          std::size_t n, std::uint64_t seed);

/// Pearson correlation of mu(Lambda_0) and mu(Lambda_lag) over n draws.
Correlation mixing_correlation(const MeasureConfig& cfg, std::span<const int> lag, std::size_t n, std::uint64_t seed);

struct IntensityReport {
  Box box;
  std::vector<double> mean;       // per-cell mean mass
  std::vector<double> std_error;  // per-cell standard error
  double max_deviation = 0.0;     // max |mean_j - mean_k|
  double max_z = 0.0;             // max |mean_j - grand mean| / stderr_j
  double grand_mean = 0.0;
};

IntensityReport empirical_intensity(const MeasureConfig& cfg, const Box& box, std::size_t n, std::uint64_t seed);

// JSON-lines dump: a header line {family, seed, box} then one {"x":[..],"w":..} per atom.
void write_measure_jsonl(std::ostream& os, const PointMeasure& m);
PointMeasure read_measure_jsonl(std::istream& is);

}  // namespace lifshits
