#include "lifshits/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace lifshits {

SparseSymMatrix SparseSymMatrix::from_triplets(std::size_t n, std::vector<Triplet> entries) {
  bool upper = false;
  bool lower = false;
  for (const auto& t : entries) {
    if (t.row >= n || t.col >= n) throw std::out_of_range("SparseSymMatrix: index out of range");
    if (!std::isfinite(t.value)) throw std::invalid_argument("SparseSymMatrix: non-finite entry");
    upper = upper || t.col > t.row;
    lower = lower || t.col < t.row;
  }
  const bool mirror = !(upper && lower);
  if (mirror) {
    const std::size_t m = entries.size();
    for (std::size_t i = 0; i < m; ++i) {
      const auto t = entries[i];
      if (t.row != t.col) entries.push_back({t.col, t.row, t.value});
    }
  }
  std::sort(entries.begin(), entries.end(),
            [](const Triplet& a, const Triplet& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
  SparseSymMatrix m;
  m.n_ = n;
  m.row_ptr_.assign(n + 1, 0);
  m.diag_.assign(n, 0.0);
  for (std::size_t i = 0; i < entries.size();) {
    std::size_t j = i;
    double v = 0.0;
    while (j < entries.size() && entries[j].row == entries[i].row && entries[j].col == entries[i].col) {
      v += entries[j].value;
      ++j;
    }
    m.cols_.push_back(entries[i].col);
    m.values_.push_back(v);
    ++m.row_ptr_[entries[i].row + 1];
    if (entries[i].row == entries[i].col) m.diag_[entries[i].row] = v;
    i = j;
  }
  for (std::size_t i = 0; i < n; ++i) m.row_ptr_[i + 1] += m.row_ptr_[i];
  if (!mirror && !m.symmetric()) throw std::invalid_argument("SparseSymMatrix: entries are not symmetric");
  return m;
}

SparseSymMatrix SparseSymMatrix::diagonal(std::span<const double> d) {
  std::vector<Triplet> t;
  t.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) t.push_back({i, i, d[i]});
  return from_triplets(d.size(), std::move(t));
}

double SparseSymMatrix::at(std::size_t i, std::size_t j) const {
  if (i >= n_ || j >= n_) throw std::out_of_range("SparseSymMatrix::at");
  const auto first = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
  const auto last = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
  const auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - cols_.begin())];
}

void SparseSymMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  for (std::size_t i = 0; i < n_; ++i) {
    double s = 0.0;
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) s += values_[p] * x[cols_[p]];
    y[i] = s;
  }
}

std::vector<double> SparseSymMatrix::multiply(std::span<const double> x) const {
  std::vector<double> y(n_);
  multiply(x, y);
  return y;
}

double SparseSymMatrix::quadratic_form(std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    double r = 0.0;
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) r += values_[p] * x[cols_[p]];
    s += x[i] * r;
  }
  return s;
}

SparseSymMatrix SparseSymMatrix::shifted(double c) const {
  std::vector<Triplet> t;
  t.reserve(nnz() + n_);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) t.push_back({i, cols_[p], values_[p]});
    t.push_back({i, i, c});
  }
  return from_triplets(n_, std::move(t));
}

double SparseSymMatrix::norm_inf() const noexcept {
  double m = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    double s = 0.0;
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) s += std::abs(values_[p]);
    m = std::max(m, s);
  }
  return m;
}

double SparseSymMatrix::gershgorin_lower() const noexcept {
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n_; ++i) {
    double r = 0.0;
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      if (cols_[p] != i) r += std::abs(values_[p]);
    }
    lo = std::min(lo, diag_[i] - r);
  }
  return n_ ? lo : 0.0;
}

double SparseSymMatrix::max_offdiag() const noexcept {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      if (cols_[p] != i) m = std::max(m, values_[p]);
    }
  }
  return m;
}

bool SparseSymMatrix::symmetric() const noexcept {
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      if (at(cols_[p], i) != values_[p]) return false;
    }
  }
  return true;
}

std::size_t SparseSymMatrix::bandwidth() const noexcept {
  std::size_t b = 0;
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      const std::size_t j = cols_[p];
      b = std::max(b, i > j ? i - j : j - i);
    }
  }
  return b;
}

void SparseSymMatrix::write_coo(std::ostream& os) const {
  os << n_ << ' ' << nnz() << '\n';
  const auto old = os.precision(17);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) os << i << ' ' << cols_[p] << ' ' << values_[p] << '\n';
  }
  os.precision(old);
}

namespace {

std::size_t permuted_bandwidth(const SparseSymMatrix& a, const std::vector<std::size_t>& inverse) {
  std::size_t b = 0;
  const auto rp = a.row_ptr();
  const auto cols = a.cols();
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t p = rp[i]; p < rp[i + 1]; ++p) {
      const std::size_t u = inverse[i];
      const std::size_t v = inverse[cols[p]];
      b = std::max(b, u > v ? u - v : v - u);
    }
  }
  return b;
}

std::size_t degree(const SparseSymMatrix& a, std::size_t i) { return a.row_ptr()[i + 1] - a.row_ptr()[i]; }

// BFS levels from `start` restricted to unvisited nodes of its component.
std::vector<std::size_t> bfs_levels(const SparseSymMatrix& a, std::size_t start, std::vector<std::size_t>& level) {
  std::vector<std::size_t> order{start};
  level[start] = 0;
  for (std::size_t h = 0; h < order.size(); ++h) {
    const std::size_t u = order[h];
    for (std::size_t p = a.row_ptr()[u]; p < a.row_ptr()[u + 1]; ++p) {
      const std::size_t v = a.cols()[p];
      if (level[v] == std::numeric_limits<std::size_t>::max()) {
        level[v] = level[u] + 1;
        order.push_back(v);
      }
    }
  }
  return order;
}

}  // namespace

Ordering natural_ordering(const SparseSymMatrix& a) {
  Ordering o;
  o.perm.resize(a.size());
  o.inverse.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) o.perm[i] = o.inverse[i] = i;
  o.bandwidth = a.bandwidth();
  o.name = "natural";
  return o;
}

Ordering reverse_cuthill_mckee(const SparseSymMatrix& a) {
  const std::size_t n = a.size();
  constexpr auto unset = std::numeric_limits<std::size_t>::max();
  std::vector<bool> done(n, false);
  std::vector<std::size_t> order;
  order.reserve(n);
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (done[seed]) continue;
    // Pseudo-peripheral node: repeatedly jump to a min-degree node of the last level.
    std::size_t start = seed;
    std::size_t depth = 0;
    for (int iter = 0; iter < 8; ++iter) {
      std::vector<std::size_t> level(n, unset);
      const auto comp = bfs_levels(a, start, level);
      const std::size_t last = level[comp.back()];
      if (iter > 0 && last <= depth) break;
      depth = last;
      std::size_t best = comp.back();
      for (std::size_t v : comp) {
        if (level[v] == last && degree(a, v) < degree(a, best)) best = v;
      }
      start = best;
    }
    std::deque<std::size_t> queue{start};
    done[start] = true;
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop_front();
      order.push_back(u);
      std::vector<std::size_t> next;
      for (std::size_t p = a.row_ptr()[u]; p < a.row_ptr()[u + 1]; ++p) {
        const std::size_t v = a.cols()[p];
        if (!done[v]) {
          done[v] = true;
          next.push_back(v);
        }
      }
      std::sort(next.begin(), next.end(), [&](std::size_t x, std::size_t y) {
        const auto dx = degree(a, x);
        const auto dy = degree(a, y);
        return dx != dy ? dx < dy : x < y;
      });
      for (std::size_t v : next) queue.push_back(v);
    }
  }
  std::reverse(order.begin(), order.end());
  Ordering o;
  o.perm = std::move(order);
  o.inverse.resize(n);
  for (std::size_t i = 0; i < n; ++i) o.inverse[o.perm[i]] = i;
  o.bandwidth = permuted_bandwidth(a, o.inverse);
  o.name = "rcm";
  return o;
}

Ordering best_ordering(const SparseSymMatrix& a) {
  auto nat = natural_ordering(a);
  auto rcm = reverse_cuthill_mckee(a);
  return rcm.bandwidth < nat.bandwidth ? rcm : nat;
}

BandedLDLT::Status BandedLDLT::factor(const SparseSymMatrix& a, const Ordering& ord, double shift, double pivot_tol) {
  n_ = a.size();
  if (ord.perm.size() != n_) throw std::invalid_argument("BandedLDLT: ordering size mismatch");
  bw_ = ord.bandwidth;
  perm_ = ord.perm;
  const std::size_t w = bw_ + 1;
  band_.assign(n_ * w, 0.0);
  d_.assign(n_, 0.0);
  const auto rp = a.row_ptr();
  const auto cols = a.cols();
  const auto vals = a.values();
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t p = rp[i]; p < rp[i + 1]; ++p) {
      const std::size_t u = ord.inverse[i];
      const std::size_t v = ord.inverse[cols[p]];
      if (u < v) continue;
      if (u - v > bw_) throw std::invalid_argument("BandedLDLT: ordering bandwidth is too small");
      band_[v * w + (u - v)] += vals[p];
    }
  }
  for (std::size_t j = 0; j < n_; ++j) band_[j * w] -= shift;

  const double scale = std::max(a.norm_inf(), std::abs(shift)) + std::numeric_limits<double>::min();
  Status status = Status::ok;
  negative_ = 0;
  min_abs_pivot_ = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n_; ++j) {
    double* col = &band_[j * w];
    const double dj = col[0];
    d_[j] = dj;
    min_abs_pivot_ = std::min(min_abs_pivot_, std::abs(dj));
    if (dj < 0.0) ++negative_;
    if (std::abs(dj) <= pivot_tol * scale) {
      status = Status::tiny_pivot;
      if (dj == 0.0) {
        // Cannot eliminate; leave the column as is.
        for (std::size_t k = 1; k < w; ++k) col[k] = 0.0;
        continue;
      }
    }
    const std::size_t kmax = std::min(bw_, n_ - 1 - j);
    // Rank-one update of the trailing band, then scale the column into L.
    for (std::size_t p = 1; p <= kmax; ++p) {
      const double cp = col[p];
      if (cp == 0.0) continue;
      const double f = cp / dj;
      double* target = &band_[(j + p) * w];
      for (std::size_t q = p; q <= kmax; ++q) target[q - p] -= col[q] * f;
    }
    const double inv = 1.0 / dj;
    for (std::size_t p = 1; p <= kmax; ++p) col[p] *= inv;
  }
  return status;
}

void BandedLDLT::solve(std::span<const double> b, std::span<double> x) const {
  const std::size_t w = bw_ + 1;
  std::vector<double> y(n_);
  for (std::size_t i = 0; i < n_; ++i) y[i] = b[perm_[i]];
  // L y = b
  for (std::size_t j = 0; j < n_; ++j) {
    const double yj = y[j];
    if (yj == 0.0) continue;
    const std::size_t kmax = std::min(bw_, n_ - 1 - j);
    const double* col = &band_[j * w];
    for (std::size_t k = 1; k <= kmax; ++k) y[j + k] -= col[k] * yj;
  }
  for (std::size_t j = 0; j < n_; ++j) y[j] /= d_[j];
  // L^T x = y
  for (std::size_t j = n_; j-- > 0;) {
    const std::size_t kmax = std::min(bw_, n_ - 1 - j);
    const double* col = &band_[j * w];
    double s = y[j];
    for (std::size_t k = 1; k <= kmax; ++k) s -= col[k] * y[j + k];
    y[j] = s;
  }
  for (std::size_t i = 0; i < n_; ++i) x[perm_[i]] = y[i];
}

}  // namespace lifshits
