#pragma once

#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lifshits/grid.hpp"
#include "lifshits/impurity.hpp"
#include "lifshits/sparse.hpp"

namespace lifshits {

/// Z^d-periodic background potential sampled at the n_per_cell^d nodes of
/// the unit cell (node k at (k + 1/2) a, axis 0 fastest).
class PeriodicPotential {
 public:
  PeriodicPotential() = default;
  PeriodicPotential(int dim, int n_per_cell, std::vector<double> samples);

  static PeriodicPotential zero(int dim, int n_per_cell);
  static PeriodicPotential constant(int dim, int n_per_cell, double c);
  /// amplitude * sum_i cos(2 pi x_i).
  static PeriodicPotential cosine(int dim, int n_per_cell, double amplitude = 1.0);

  int dim() const noexcept { return dim_; }
  int n_per_cell() const noexcept { return n_; }
  std::span<const double> samples() const noexcept { return samples_; }
  /// Sample at in-cell offsets (each in [0, n_per_cell)).
  double at(std::span<const int> offsets) const;
  bool is_zero() const noexcept;
  std::string describe() const;

 private:
  int dim_ = 0;
  int n_ = 0;
  std::vector<double> samples_;
  std::string name_ = "custom";
};

/// Positive periodic ground state psi of -Delta + U_per on the unit-cell grid,
/// normalized to sum psi^2 a^d = 1 over the cell.
struct PeriodicGroundState {
  int dim = 0;
  int n_per_cell = 0;
  double E0 = 0.0;
  std::vector<double> psi;
  double residual = 0.0;  // ||H_per psi - E0 psi|| / ||psi||

  double at(std::span<const int> offsets) const;
  /// Builds a ground state from given samples (normalized, positivity checked).
  static PeriodicGroundState from_samples(int dim, int n_per_cell, std::vector<double> psi, double E0);
};

/// The periodic second-order stencil of -Delta + U_per on the unit cell.
SparseSymMatrix periodic_operator(const PeriodicPotential& u);
PeriodicGroundState periodic_ground_state(const PeriodicPotential& u);

enum class BoundaryKind { dirichlet, mezincescu };
std::string to_string(BoundaryKind b);
BoundaryKind boundary_from_string(const std::string& s);

/// H - E0 on a grid with its boundary tag; immutable.
struct DiscreteOperator {
  SparseSymMatrix matrix;
  Grid grid;
  BoundaryKind bc = BoundaryKind::dirichlet;
  bool shifted = true;  // E0 already subtracted
  double E0 = 0.0;
};

/// Mezincescu (Robin) operator: each missing coupling to an outside node o is
/// folded onto the diagonal as -(1/a^2) psi(o)/psi(i), making psi|_Lambda an
/// exact eigenvector of the V = 0 operator with eigenvalue E0 (0 after the shift).
DiscreteOperator mezincescu_assemble(const PeriodicPotential& u, const PotentialField& v, const Grid& grid,
                                     const PeriodicGroundState& psi);
DiscreteOperator mezincescu_assemble(const PeriodicPotential& u, const Grid& grid, const PeriodicGroundState& psi);

/// Dirichlet operator with the boundary on the cell faces: each missing
/// coupling to an outside node o is folded as +(1/a^2) psi(o)/psi(i), i.e. the
/// ghost value is -psi(o)/psi(i) times the boundary value.
DiscreteOperator dirichlet_assemble(const PeriodicPotential& u, const PotentialField& v, const Grid& grid,
                                    const PeriodicGroundState& psi);
DiscreteOperator dirichlet_assemble(const PeriodicPotential& u, const Grid& grid, const PeriodicGroundState& psi);

/// psi restricted to the grid (periodic extension), unnormalized.
std::vector<double> restrict_psi(const PeriodicGroundState& psi, const Grid& grid);

/// chi = -(n . grad) psi / psi on the nodes of one face (side = -1 for lo,
/// +1 for hi), by a one-sided second-order difference of log psi. Face nodes
/// are ordered by the remaining axes, lowest axis fastest.
std::vector<double> chi_values(const PeriodicGroundState& psi, const Box& box, int axis, int side);

/// Grid header (JSON line) followed by coordinate text of the matrix.
void write_operator(std::ostream& os, const DiscreteOperator& op);

}  // namespace lifshits
