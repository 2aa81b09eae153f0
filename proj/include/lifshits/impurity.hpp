#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lifshits/grid.hpp"
#include "lifshits/quadrature.hpp"
#include "lifshits/rmeasure.hpp"

namespace lifshits {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Splitting R^d = R^{d_1} x ... x R^{d_m} with one decay exponent per block.
/// Coordinates of block k are contiguous, block 0 first.
class AnisotropyProfile {
 public:
  /// Validated profile: every d_k >= 1, alpha_k > 0 (infinity allowed) and gamma < 1.
  static AnisotropyProfile make(std::vector<int> dims, std::vector<double> alphas);
  /// Same shape checks but gamma >= 1 admitted (diagnostics only).
  static AnisotropyProfile unchecked(std::vector<int> dims, std::vector<double> alphas);
  /// m = 1 profile of dimension d.
  static AnisotropyProfile isotropic(int d, double alpha);

  int blocks() const noexcept { return static_cast<int>(dims_.size()); }
  int dim() const noexcept;
  int block_dim(int k) const { return dims_.at(k); }
  double alpha(int k) const { return alphas_.at(k); }
  const std::vector<int>& dims() const noexcept { return dims_; }
  const std::vector<double>& alphas() const noexcept { return alphas_; }
  /// First coordinate index of block k.
  int block_offset(int k) const;

  double gamma_k(int k) const;
  double gamma() const;
  bool valid() const noexcept { return gamma() < 1.0; }

  /// Max norm of the block-k coordinates of x.
  double block_norm(std::span<const double> x, int k) const;

  std::string describe() const;
  bool operator==(const AnisotropyProfile&) const = default;

 private:
  AnisotropyProfile(std::vector<int> dims, std::vector<double> alphas, bool check_gamma);
  std::vector<int> dims_;
  std::vector<double> alphas_;
};

/// |t|^alpha with the convention |t|^inf = 0 for |t| <= 1 and inf beyond.
double block_power(double t, double alpha) noexcept;

/// Decay metadata of an impurity potential.
struct EnvelopeMetadata {
  double f0 = 0.0;       // upper envelope constant
  double f_u = 0.0;      // cell-averaged lower envelope constant
  double radius = 0.0;   // envelopes hold for |x| >= radius
  double f_cell = 0.0;   // inf of f over the unit cell [0,1)^d (for f >= f_cell * indicator)
  double support = kInf; // max-norm support radius, inf if unbounded
};

class ImpurityPotential {
 public:
  enum class Family { algebraic, box_indicator, custom };
  using Callback = std::function<double(std::span<const double>)>;

  /// f(x) = f0 / (1 + sum_k |x_k|^alpha_k).
  static ImpurityPotential algebraic(AnisotropyProfile profile, double f0);
  /// f(x) = f0 * 1{|x| <= r}; the profile is all-infinite of the given dims.
  static ImpurityPotential box_indicator(std::vector<int> dims, double f0, double r);
  /// User-supplied f with caller-declared metadata.
  static ImpurityPotential custom(AnisotropyProfile profile, Callback f, EnvelopeMetadata meta);

  Family family() const noexcept { return family_; }
  const AnisotropyProfile& profile() const noexcept { return profile_; }
  const EnvelopeMetadata& metadata() const noexcept { return meta_; }
  int dim() const noexcept { return profile_.dim(); }
  double f0() const noexcept { return meta_.f0; }
  /// Box radius for box_indicator, 0 otherwise.
  double radius() const noexcept { return r_; }

  double operator()(std::span<const double> x) const;
  std::string describe() const;

 private:
  ImpurityPotential(AnisotropyProfile profile, Family family, double f0, double r, Callback f, EnvelopeMetadata meta);
  AnisotropyProfile profile_;
  Family family_;
  double r_ = 0.0;
  Callback callback_;
  EnvelopeMetadata meta_;
};

std::string to_string(ImpurityPotential::Family f);

double eval_f(const ImpurityPotential& p, std::span<const double> x);

/// f^{(k)}(x_k): f integrated over the complementary block (m = 2).
QuadResult marginal(const ImpurityPotential& p, int k, std::span<const double> x_k, const QuadratureSpec& spec = {});

/// alpha_k (1 - gamma_other), the decay exponent of f^{(k)}; requires m = 2.
double marginal_decay_exponent(const AnisotropyProfile& profile, int k);

/// Integral of f^{(k)} over {|x_k| > L}.
QuadResult tail_mass(const ImpurityPotential& p, int k, double L, const QuadratureSpec& spec = {});

/// sup over |y_k| <= shift of the integral of f^{(k)}(x_k - y_k) over {|x_k| > L}; requires d_k = 1.
QuadResult shifted_tail_mass(const ImpurityPotential& p, int k, double L, double shift, const QuadratureSpec& spec = {});

struct BirmanSolomyakReport {
  std::vector<int> radii;
  std::vector<double> partial_sums;
  std::vector<double> increments;
  double increment_slope = 0.0;  // log-log slope of shell increments vs radius
  bool convergent = false;
  std::string diagnostic;
};

/// S_R = sum_{|j| <= R} (int_{Lambda_0} |f(x - j)|^p dx)^{1/p} for each R in radii.
BirmanSolomyakReport birman_solomyak_partial_sums(const ImpurityPotential& p, double p_int, std::span<const int> radii);

/// Fitted envelope constants: max over far sample points of f * sum|x_k|^alpha_k
/// and min of the cell average times the same denominator.
struct EnvelopeFit {
  double upper = 0.0;
  double lower = kInf;
  std::size_t points = 0;
};
EnvelopeFit fit_envelope(const ImpurityPotential& p, double r_min, double r_max, int samples_per_axis);

struct Provenance {
  std::uint64_t seed = 0;
  std::string potential;
  std::string mode = "full";
  std::vector<double> truncation;   // per-block radii
  double truncation_bound = 0.0;    // envelope bound on the neglected mean field
  bool truncation_warning = false;
};

/// Samples of a potential on the nodes of a grid.
struct PotentialField {
  Grid grid;
  std::vector<double> values;
  Provenance provenance;

  double max() const noexcept;
  double mean() const noexcept;
};

/// Zero field on a grid.
PotentialField zero_field(const Grid& grid);

struct Truncation {
  std::vector<double> radii;     // per block; kInf keeps every atom
  double tolerance = 1e-3;       // requested bound on neglected / total mass
  double neglected_mass = -1.0;  // sum_k tail_mass(T_k); negative when not yet computed
  double total_mass = -1.0;      // ||f^{(k)}||_1, the integral of f
};

/// Fills neglected_mass and total_mass of t for potential p.
void annotate_truncation(const ImpurityPotential& p, Truncation& t);

/// Smallest doubling radius per block with tail_mass(T) <= rel_tol * ||f^{(k)}||_1,
/// capped at max_radius. Compactly supported blocks get their support radius.
Truncation default_truncation(const ImpurityPotential& p, double rel_tol = 1e-3, double max_radius = 256.0);

/// V(x) = sum_i w_i f(x - y_i) 1{|x_k - y_k| <= T_k for every block k}.
PotentialField sample_potential(const PointMeasure& m, const ImpurityPotential& p, const Grid& grid,
                                const Truncation& truncation);
/// Same with the default truncation.
PotentialField sample_potential(const PointMeasure& m, const ImpurityPotential& p, const Grid& grid);

enum class CutoffMode { qm, qc, classical };
std::string to_string(CutoffMode m);
CutoffMode cutoff_mode_from_string(const std::string& s);

struct CutoffSpec {
  CutoffMode mode = CutoffMode::qc;
  double h = 1.0;                   // regularization level the measure must satisfy
  double f_u = 0.0;                 // qm: height of f_u * 1_F, F the unit cell
  int block = 1;                    // qc: block whose far atoms are kept
  double R = 0.0;                   // qc: keep atoms with |y_block - c_block| > R
  std::vector<double> thresholds;   // classical: keep atoms with |y_k - c_k| > thresholds[k] for all k
  std::vector<double> center;       // cut-off centre, default origin
  Truncation truncation;            // empty radii means default
};

PotentialField cutoff_potential(const PointMeasure& m, const ImpurityPotential& p, const Grid& grid,
                                const CutoffSpec& spec);

/// Header line (JSON) followed by one value per line.
void write_field_csv(std::ostream& os, const PotentialField& field);

}  // namespace lifshits
