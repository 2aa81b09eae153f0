#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace lifshits {

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Symmetric sparse matrix in CSR form with both triangles stored.
/// Immutable once built; duplicate triplets are summed.
class SparseSymMatrix {
 public:
  SparseSymMatrix() = default;
  /// Builds from entries of the lower or upper triangle (mirrored) or both;
  /// rejects asymmetric input when both triangles are given.
  static SparseSymMatrix from_triplets(std::size_t n, std::vector<Triplet> entries);
  static SparseSymMatrix diagonal(std::span<const double> d);

  std::size_t size() const noexcept { return n_; }
  std::size_t nnz() const noexcept { return values_.size(); }
  std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
  std::span<const std::size_t> cols() const noexcept { return cols_; }
  std::span<const double> values() const noexcept { return values_; }

  double diag(std::size_t i) const noexcept { return diag_[i]; }
  double at(std::size_t i, std::size_t j) const;

  /// y = A x.
  void multiply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> multiply(std::span<const double> x) const;
  double quadratic_form(std::span<const double> x) const;

  /// A + c I.
  SparseSymMatrix shifted(double c) const;
  /// Max absolute row sum (an upper bound of the spectral radius).
  double norm_inf() const noexcept;
  /// Gershgorin lower bound on the spectrum.
  double gershgorin_lower() const noexcept;
  double max_offdiag() const noexcept;
  bool symmetric() const noexcept;
  /// max |i - j| over stored entries.
  std::size_t bandwidth() const noexcept;

  /// Coordinate text format: "n nnz" then "row col value" per line (0-based).
  void write_coo(std::ostream& os) const;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> cols_;
  std::vector<double> values_;
  std::vector<double> diag_;
};

/// Symmetric permutation: new index i holds old index perm[i].
struct Ordering {
  std::vector<std::size_t> perm;
  std::vector<std::size_t> inverse;  // old -> new
  std::size_t bandwidth = 0;
  const char* name = "natural";
};

Ordering natural_ordering(const SparseSymMatrix& a);
/// Reverse Cuthill-McKee from a pseudo-peripheral start node.
Ordering reverse_cuthill_mckee(const SparseSymMatrix& a);
/// The smaller-bandwidth of natural and reverse Cuthill-McKee orderings.
Ordering best_ordering(const SparseSymMatrix& a);

/// LDL^T factorization of P (A - shift I) P^T in band storage, without pivoting.
class BandedLDLT {
 public:
  enum class Status { ok, tiny_pivot };

  BandedLDLT() = default;

  /// Returns tiny_pivot if some |d_j| <= pivot_tol * scale (the factor is
  /// still complete, with that pivot kept as computed).
  Status factor(const SparseSymMatrix& a, const Ordering& ord, double shift, double pivot_tol = 1e-13);

  std::size_t size() const noexcept { return n_; }
  std::size_t negative_pivots() const noexcept { return negative_; }
  double min_abs_pivot() const noexcept { return min_abs_pivot_; }
  std::span<const double> pivots() const noexcept { return d_; }

  /// Solves (A - shift I) x = b in the original numbering.
  void solve(std::span<const double> b, std::span<double> x) const;

 private:
  std::size_t n_ = 0;
  std::size_t bw_ = 0;
  std::vector<double> band_;  // column j: entries (j+k, j) at j*(bw+1)+k, L below the diagonal
  std::vector<double> d_;
  std::vector<std::size_t> perm_;
  std::size_t negative_ = 0;
  double min_abs_pivot_ = 0.0;
};

}  // namespace lifshits
