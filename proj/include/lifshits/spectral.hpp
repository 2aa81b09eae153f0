#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lifshits/sparse.hpp"

namespace lifshits {

struct EigenOptions {
  double tol = 1e-10;             // residual tolerance relative to ||A||
  std::uint64_t seed = 0x5eedULL;  // starting vectors
  bool want_vectors = true;
  int max_basis = 0;              // Krylov basis cap, 0 = automatic
  int max_restarts = 40;
};

struct EigenResult {
  std::vector<double> values;                 // ascending
  std::vector<std::vector<double>> vectors;   // unit norm, empty unless requested
  std::vector<double> residuals;              // ||A v - lambda v||
  int iterations = 0;
  bool converged = false;
  std::string message;
};

/// k smallest eigenpairs by shift-invert Lanczos with full reorthogonalization
/// and locking. Missed multiplicities are detected by an inertia count.
/// Throws std::runtime_error on non-convergence (the message carries the best residuals).
EigenResult smallest_eigs(const SparseSymMatrix& a, int k, const EigenOptions& opt = {});

struct CountResult {
  enum class Method { inertia, dense };
  double E = 0.0;
  double E_used = 0.0;  // E after any pivot jitter
  std::size_t count = 0;
  Method method = Method::inertia;
  int retries = 0;
};

std::string to_string(CountResult::Method m);

/// Reusable counter: the node ordering is computed once per matrix.
class InertiaCounter {
 public:
  explicit InertiaCounter(const SparseSymMatrix& a);
  /// #{eigenvalues < E} by Sylvester inertia of P(A - E)P^T.
  CountResult count_below(double E) const;
  const Ordering& ordering() const noexcept { return ordering_; }

 private:
  const SparseSymMatrix* a_;
  Ordering ordering_;
};

CountResult count_below(const SparseSymMatrix& a, double E);

/// Largest dimension accepted by the dense oracle.
inline constexpr std::size_t kDenseLimit = 2000;

struct DenseSpectrum {
  std::vector<double> values;                // ascending
  std::vector<std::vector<double>> vectors;  // column eigenvectors
};

/// Full symmetric eigendecomposition (test oracle); rejects n > kDenseLimit.
DenseSpectrum dense_oracle(const SparseSymMatrix& a, bool want_vectors = false);
CountResult count_below_dense(const SparseSymMatrix& a, double E);

}  // namespace lifshits
