#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace lifshits {

/// Lattice-compatible cuboid: the union of unit cells [j, j+1)^d for
/// lo <= j < hi componentwise.
class Box {
 public:
  Box() = default;
  Box(std::vector<int> lo, std::vector<int> hi);

  /// Cube of cells with lo <= j_i < hi in every direction.
  static Box cube(int dim, int lo, int hi);
  /// The cells j with |j|_max < L, i.e. j_i in [-(L-1), L-1].
  static Box centered(int dim, int L);

  int dim() const noexcept { return static_cast<int>(lo_.size()); }
  int lo(int axis) const { return lo_.at(axis); }
  int hi(int axis) const { return hi_.at(axis); }
  int extent(int axis) const { return hi_.at(axis) - lo_.at(axis); }
  const std::vector<int>& lo() const noexcept { return lo_; }
  const std::vector<int>& hi() const noexcept { return hi_; }

  std::size_t cell_count() const noexcept;
  double volume() const noexcept { return static_cast<double>(cell_count()); }

  /// Flat index of a cell (axis 0 fastest); cell must lie in the box.
  std::size_t flat_index(std::span<const int> cell) const;
  std::vector<int> cell_at(std::size_t flat) const;
  bool contains_cell(std::span<const int> cell) const noexcept;
  bool contains_point(std::span<const double> x) const noexcept;

  /// Box grown by margin[i] cells on both sides of axis i.
  Box dilated(std::span<const int> margin) const;
  /// Box shifted by an integer lattice vector.
  Box translated(std::span<const int> shift) const;
  std::vector<double> center() const;

  bool operator==(const Box&) const = default;
  std::string describe() const;

 private:
  std::vector<int> lo_;
  std::vector<int> hi_;
};

/// Cell-centred finite-difference grid: n_per_cell nodes per unit length,
/// node k along axis i sits at lo_i + (k + 1/2) a with a = 1/n_per_cell.
/// Node indices are flat with axis 0 fastest.
class Grid {
 public:
  Grid() = default;
  Grid(Box box, int n_per_cell);

  const Box& box() const noexcept { return box_; }
  int dim() const noexcept { return box_.dim(); }
  int n_per_cell() const noexcept { return n_per_cell_; }
  double spacing() const noexcept { return 1.0 / n_per_cell_; }
  int nodes_along(int axis) const { return box_.extent(axis) * n_per_cell_; }
  std::size_t node_count() const noexcept { return node_count_; }

  std::vector<int> node_multi_index(std::size_t flat) const;
  std::size_t flat_node(std::span<const int> idx) const;
  double coordinate(int axis, int k) const { return box_.lo(axis) + (k + 0.5) * spacing(); }
  void position(std::size_t flat, std::span<double> out) const;
  /// Offset of a node inside its unit cell, in [0, n_per_cell); local
  /// indices may lie outside the grid (ghost nodes).
  int cell_offset(int axis, int k) const;

  bool operator==(const Grid&) const = default;

 private:
  Box box_;
  int n_per_cell_ = 0;
  std::size_t node_count_ = 0;
};

}  // namespace lifshits
