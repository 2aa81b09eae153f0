#include "lifshits/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "lifshits/rng.hpp"

namespace lifshits {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

void axpy(double alpha, const std::vector<double>& x, std::vector<double>& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

// Two passes of classical Gram-Schmidt against every vector in the sets.
void orthogonalize(std::vector<double>& w, const std::vector<std::vector<double>>& a,
                   const std::vector<std::vector<double>>& b) {
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& q : a) axpy(-dot(q, w), q, w);
    for (const auto& q : b) axpy(-dot(q, w), q, w);
  }
}

// Implicit QL for a symmetric tridiagonal matrix. On return d holds the
// eigenvalues and column j of z (row-major m x m) the j-th eigenvector.
void tridiagonal_eigen(std::vector<double>& d, std::vector<double> e, std::vector<double>& z) {
  const int n = static_cast<int>(d.size());
  z.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i) * n + i] = 1.0;
  e.resize(n, 0.0);
  if (n > 0) e[n - 1] = 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
      }
      if (m != l) {
        if (iter++ == 100) throw std::runtime_error("tridiagonal_eigen: no convergence");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        int i;
        bool underflow = false;
        for (i = m - 1; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          for (int k = 0; k < n; ++k) {
            const std::size_t row = static_cast<std::size_t>(k) * n;
            f = z[row + i + 1];
            z[row + i + 1] = s * z[row + i] + c * f;
            z[row + i] = c * z[row + i] - s * f;
          }
        }
        if (underflow) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
}

std::vector<double> random_unit(std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform() - 0.5;
  return v;
}

struct Candidate {
  double value;
  std::vector<double> vector;
  double residual;
};

}  // namespace

std::string to_string(CountResult::Method m) { return m == CountResult::Method::inertia ? "inertia" : "dense"; }

InertiaCounter::InertiaCounter(const SparseSymMatrix& a) : a_(&a), ordering_(best_ordering(a)) {}

CountResult InertiaCounter::count_below(double E) const {
  if (!std::isfinite(E)) throw std::invalid_argument("count_below: energy must be finite");
  CountResult r;
  r.E = E;
  r.E_used = E;
  BandedLDLT f;
  for (int attempt = 0;; ++attempt) {
    const auto status = f.factor(*a_, ordering_, r.E_used, 1e-14);
    if (status == BandedLDLT::Status::ok || attempt == 6) break;
    ++r.retries;
    r.E_used = E + 1e-12 * std::max(1.0, std::abs(E)) * std::pow(4.0, attempt);
  }
  r.count = f.negative_pivots();
  return r;
}

CountResult count_below(const SparseSymMatrix& a, double E) { return InertiaCounter(a).count_below(E); }

DenseSpectrum dense_oracle(const SparseSymMatrix& a, bool want_vectors) {
  const std::size_t n = a.size();
  if (n > kDenseLimit) throw std::length_error("dense_oracle: matrix larger than the dense limit");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const auto rp = a.row_ptr();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = rp[i]; p < rp[i + 1]; ++p) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a.cols()[p])) = a.values()[p];
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, want_vectors ? Eigen::ComputeEigenvectors
                                                                     : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("dense_oracle: eigensolver failed");
  DenseSpectrum out;
  out.values.assign(es.eigenvalues().data(), es.eigenvalues().data() + n);
  if (want_vectors) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto col = es.eigenvectors().col(static_cast<Eigen::Index>(j));
      out.vectors.emplace_back(col.data(), col.data() + n);
    }
  }
  return out;
}

CountResult count_below_dense(const SparseSymMatrix& a, double E) {
  const auto spec = dense_oracle(a);
  CountResult r;
  r.E = r.E_used = E;
  r.method = CountResult::Method::dense;
  r.count = static_cast<std::size_t>(std::count_if(spec.values.begin(), spec.values.end(),
                                                   [E](double v) { return v < E; }));
  return r;
}

EigenResult smallest_eigs(const SparseSymMatrix& a, int k, const EigenOptions& opt) {
  const std::size_t n = a.size();
  if (k < 1 || static_cast<std::size_t>(k) > n) throw std::invalid_argument("smallest_eigs: need 1 <= k <= n");
  const double scale = std::max(a.norm_inf(), std::numeric_limits<double>::min());
  const double res_tol = opt.tol * scale;
  const Ordering ord = best_ordering(a);
  InertiaCounter counter(a);

  // Shift strictly below the spectrum so A - sigma is positive definite.
  double sigma = a.gershgorin_lower() - 1e-9 * scale - 1e-300;
  BandedLDLT fac;
  for (int tries = 0;; ++tries) {
    fac.factor(a, ord, sigma);
    if (fac.negative_pivots() == 0 && fac.min_abs_pivot() > 1e-12 * scale) break;
    if (tries == 30) throw std::runtime_error("smallest_eigs: could not place the shift below the spectrum");
    sigma -= std::max(1e-3 * scale, std::abs(sigma));
  }

  std::vector<std::vector<double>> locked;
  std::vector<double> locked_values;
  std::vector<double> locked_res;
  std::size_t wanted = static_cast<std::size_t>(k);
  const std::size_t basis_cap =
      opt.max_basis > 0 ? static_cast<std::size_t>(opt.max_basis)
                        : std::min<std::size_t>(n, std::max<std::size_t>(3 * wanted + 40, 80));
  EigenResult result;
  std::vector<double> start = random_unit(n, opt.seed);
  std::vector<Candidate> best;
  bool refined_shift = false;

  for (int restart = 0; restart <= opt.max_restarts; ++restart) {
    orthogonalize(start, locked, {});
    double s_norm = norm(start);
    if (s_norm < 1e-8) {
      start = random_unit(n, derive_seed(opt.seed, 1000 + restart));
      orthogonalize(start, locked, {});
      s_norm = norm(start);
    }
    if (locked.size() >= n || s_norm == 0.0) break;
    for (auto& x : start) x /= s_norm;

    std::vector<std::vector<double>> basis{start};
    std::vector<double> alpha, beta;
    std::size_t cap = std::min(basis_cap, n - locked.size());
    if (!refined_shift) cap = std::min(cap, 2 * wanted + 20);
    std::vector<double> w(n);
    std::vector<double> ritz_d;
    std::vector<double> ritz_z;
    const std::size_t need = wanted - std::min(wanted, locked.size());
    for (std::size_t j = 0; j < cap; ++j) {
      fac.solve(basis[j], w);
      ++result.iterations;
      const double aj = dot(w, basis[j]);
      alpha.push_back(aj);
      orthogonalize(w, locked, basis);
      const double bj = norm(w);
      const bool last = j + 1 == cap || bj <= 1e-14 * std::abs(aj);
      if (last || (j + 1 >= need && (j + 1) % 8 == 0)) {
        ritz_d = alpha;
        tridiagonal_eigen(ritz_d, beta, ritz_z);
        // Largest mu = 1/(lambda - sigma) are the wanted smallest lambda.
        const std::size_t m = alpha.size();
        std::vector<std::size_t> idx(m);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return ritz_d[x] > ritz_d[y]; });
        bool all_conv = m >= need;
        for (std::size_t t = 0; t < std::min(need, m) && all_conv; ++t) {
          const double mu = ritz_d[idx[t]];
          const double est = std::abs(bj * ritz_z[(m - 1) * m + idx[t]]);
          // Residual in A scales as est * (lambda - sigma) / mu.
          if (!(mu > 0.0) || est / (mu * mu) > 0.1 * res_tol) all_conv = false;
        }
        if (all_conv || last) break;
      }
      beta.push_back(bj);
      for (auto& x : w) x /= bj;
      basis.push_back(w);
    }

    // Ritz vectors of the top candidates and their true residuals.
    const std::size_t m = alpha.size();
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return ritz_d[x] > ritz_d[y]; });
    std::vector<Candidate> cands;
    const std::size_t take = std::min(m, need + 2);
    std::vector<double> av(n);
    for (std::size_t t = 0; t < take; ++t) {
      std::vector<double> v(n, 0.0);
      for (std::size_t b = 0; b < m; ++b) axpy(ritz_z[b * m + idx[t]], basis[b], v);
      orthogonalize(v, locked, {});
      const double vn = norm(v);
      if (vn == 0.0) continue;
      for (auto& x : v) x /= vn;
      a.multiply(v, av);
      const double lambda = dot(v, av);
      axpy(-lambda, v, av);
      cands.push_back({lambda, std::move(v), norm(av)});
    }
    std::sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) { return x.value < y.value; });

    // Lock the leading run of converged candidates.
    std::vector<double> next_start(n, 0.0);
    bool any_unconverged = false;
    std::size_t added = 0;
    for (auto& c : cands) {
      if (added < need && c.residual <= res_tol && !any_unconverged) {
        locked.push_back(c.vector);
        locked_values.push_back(c.value);
        locked_res.push_back(c.residual);
        ++added;
      } else if (added < need) {
        any_unconverged = true;
        axpy(1.0, c.vector, next_start);
      }
    }
    best = cands;

    if (locked.size() >= wanted) {
      // Verify no eigenvalue below the k-th locked value was skipped.
      std::vector<double> sorted = locked_values;
      std::sort(sorted.begin(), sorted.end());
      const double top = sorted[wanted - 1];
      const double margin = std::max(100.0 * res_tol, 1e-9 * scale);
      const std::size_t below = counter.count_below(top + margin).count;
      const auto have = static_cast<std::size_t>(
          std::count_if(sorted.begin(), sorted.end(), [&](double v) { return v < top + margin; }));
      if (below <= have) {
        result.converged = true;
        break;
      }
      wanted = std::min(n, locked.size() + (below - have));
      start = random_unit(n, derive_seed(opt.seed, 2000 + restart));
      continue;
    }
    if (!refined_shift && !cands.empty()) {
      // Move the shift up toward the wanted end; Ritz values bound the spectrum from above.
      const double theta0 = cands.front().value;
      const double spread = cands.size() > 1 ? cands[std::min(need, cands.size() - 1)].value - theta0 : 0.0;
      double target = theta0 - std::max(0.25 * spread, 1e-6 * std::abs(theta0 - sigma));
      BandedLDLT trial;
      for (int tries = 0; tries < 8 && target > sigma; ++tries) {
        trial.factor(a, ord, target);
        if (trial.negative_pivots() == 0 && trial.min_abs_pivot() > 1e-12 * scale) {
          sigma = target;
          fac = std::move(trial);
          break;
        }
        target = sigma + 0.5 * (target - sigma);
      }
      refined_shift = true;
    }
    start = any_unconverged ? next_start : random_unit(n, derive_seed(opt.seed, 3000 + restart));
  }

  std::vector<std::size_t> order(locked.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return locked_values[x] < locked_values[y]; });
  if (!result.converged || order.size() < static_cast<std::size_t>(k)) {
    std::ostringstream os;
    os << "smallest_eigs: no convergence after " << result.iterations << " iterations; locked " << locked.size()
       << " of " << k << "; best residuals:";
    for (const auto& c : best) os << ' ' << c.residual;
    throw std::runtime_error(os.str());
  }
  for (int i = 0; i < k; ++i) {
    const std::size_t j = order[i];
    result.values.push_back(locked_values[j]);
    result.residuals.push_back(locked_res[j]);
    if (opt.want_vectors) result.vectors.push_back(locked[j]);
  }
  return result;
}

}  // namespace lifshits
