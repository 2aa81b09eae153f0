#include "lifshits/grid.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace lifshits {

Box::Box(std::vector<int> lo, std::vector<int> hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.empty() || lo_.size() != hi_.size()) {
    throw std::invalid_argument("Box: corners must be nonempty and of equal dimension");
  }
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    if (hi_[i] <= lo_[i]) throw std::invalid_argument("Box: hi must exceed lo on every axis");
  }
}

Box Box::cube(int dim, int lo, int hi) {
  if (dim < 1) throw std::invalid_argument("Box::cube: dim must be positive");
  return Box(std::vector<int>(dim, lo), std::vector<int>(dim, hi));
}

Box Box::centered(int dim, int L) {
  if (L < 1) throw std::invalid_argument("Box::centered: L must be at least 1");
  return cube(dim, -(L - 1), L);
}

std::size_t Box::cell_count() const noexcept {
  std::size_t n = lo_.empty() ? 0 : 1;
  for (std::size_t i = 0; i < lo_.size(); ++i) n *= static_cast<std::size_t>(hi_[i] - lo_[i]);
  return n;
}

std::size_t Box::flat_index(std::span<const int> cell) const {
  if (!contains_cell(cell)) throw std::out_of_range("Box::flat_index: cell outside box");
  std::size_t idx = 0;
  std::size_t stride = 1;
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    idx += static_cast<std::size_t>(cell[i] - lo_[i]) * stride;
    stride *= static_cast<std::size_t>(hi_[i] - lo_[i]);
  }
  return idx;
}

std::vector<int> Box::cell_at(std::size_t flat) const {
  std::vector<int> cell(lo_.size());
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    const auto ext = static_cast<std::size_t>(hi_[i] - lo_[i]);
    cell[i] = lo_[i] + static_cast<int>(flat % ext);
    flat /= ext;
  }
  return cell;
}

bool Box::contains_cell(std::span<const int> cell) const noexcept {
  if (cell.size() != lo_.size()) return false;
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    if (cell[i] < lo_[i] || cell[i] >= hi_[i]) return false;
  }
  return true;
}

bool Box::contains_point(std::span<const double> x) const noexcept {
  if (x.size() != lo_.size()) return false;
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    if (!(x[i] >= lo_[i] && x[i] < hi_[i])) return false;
  }
  return true;
}

Box Box::dilated(std::span<const int> margin) const {
  if (margin.size() != lo_.size()) throw std::invalid_argument("Box::dilated: dimension mismatch");
  auto lo = lo_;
  auto hi = hi_;
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (margin[i] < 0) throw std::invalid_argument("Box::dilated: negative margin");
    lo[i] -= margin[i];
    hi[i] += margin[i];
  }
  return Box(std::move(lo), std::move(hi));
}

Box Box::translated(std::span<const int> shift) const {
  if (shift.size() != lo_.size()) throw std::invalid_argument("Box::translated: dimension mismatch");
  auto lo = lo_;
  auto hi = hi_;
  for (std::size_t i = 0; i < lo.size(); ++i) {
    lo[i] += shift[i];
    hi[i] += shift[i];
  }
  return Box(std::move(lo), std::move(hi));
}

std::vector<double> Box::center() const {
  std::vector<double> c(lo_.size());
  for (std::size_t i = 0; i < lo_.size(); ++i) c[i] = 0.5 * (lo_[i] + hi_[i]);
  return c;
}

std::string Box::describe() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    if (i) os << 'x';
    os << '[' << lo_[i] << ',' << hi_[i] << ')';
  }
  return os.str();
}

Grid::Grid(Box box, int n_per_cell) : box_(std::move(box)), n_per_cell_(n_per_cell) {
  if (n_per_cell < 2) throw std::invalid_argument("Grid: n_per_cell must be at least 2");
  node_count_ = 1;
  for (int i = 0; i < box_.dim(); ++i) node_count_ *= static_cast<std::size_t>(nodes_along(i));
}

std::vector<int> Grid::node_multi_index(std::size_t flat) const {
  std::vector<int> idx(dim());
  for (int i = 0; i < dim(); ++i) {
    const auto n = static_cast<std::size_t>(nodes_along(i));
    idx[i] = static_cast<int>(flat % n);
    flat /= n;
  }
  return idx;
}

std::size_t Grid::flat_node(std::span<const int> idx) const {
  std::size_t flat = 0;
  std::size_t stride = 1;
  for (int i = 0; i < dim(); ++i) {
    if (idx[i] < 0 || idx[i] >= nodes_along(i)) throw std::out_of_range("Grid::flat_node: index outside grid");
    flat += static_cast<std::size_t>(idx[i]) * stride;
    stride *= static_cast<std::size_t>(nodes_along(i));
  }
  return flat;
}

void Grid::position(std::size_t flat, std::span<double> out) const {
  for (int i = 0; i < dim(); ++i) {
    const auto n = static_cast<std::size_t>(nodes_along(i));
    out[i] = coordinate(i, static_cast<int>(flat % n));
    flat /= n;
  }
}

int Grid::cell_offset(int axis, int k) const {
  // Global node coordinate in units of a, measured from the lattice origin.
  const long g = static_cast<long>(box_.lo(axis)) * n_per_cell_ + k;
  long r = g % n_per_cell_;
  if (r < 0) r += n_per_cell_;
  return static_cast<int>(r);
}

}  // namespace lifshits
