#include "lifshits/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "lifshits/spectral.hpp"

namespace lifshits {

namespace {

std::size_t cell_node_count(int dim, int n) {
  std::size_t c = 1;
  for (int i = 0; i < dim; ++i) c *= static_cast<std::size_t>(n);
  return c;
}

std::size_t cell_flat(std::span<const int> offsets, int n) {
  std::size_t flat = 0;
  std::size_t stride = 1;
  for (int o : offsets) {
    flat += static_cast<std::size_t>(o) * stride;
    stride *= static_cast<std::size_t>(n);
  }
  return flat;
}

}  // namespace

PeriodicPotential::PeriodicPotential(int dim, int n_per_cell, std::vector<double> samples)
    : dim_(dim), n_(n_per_cell), samples_(std::move(samples)) {
  if (dim < 1 || n_per_cell < 2) throw std::invalid_argument("PeriodicPotential: bad grid");
  if (samples_.size() != cell_node_count(dim, n_per_cell)) {
    throw std::invalid_argument("PeriodicPotential: need n_per_cell^d samples");
  }
  for (double v : samples_) {
    if (!std::isfinite(v)) throw std::invalid_argument("PeriodicPotential: samples must be finite");
  }
}

PeriodicPotential PeriodicPotential::zero(int dim, int n_per_cell) { return constant(dim, n_per_cell, 0.0); }

PeriodicPotential PeriodicPotential::constant(int dim, int n_per_cell, double c) {
  PeriodicPotential u(dim, n_per_cell, std::vector<double>(cell_node_count(dim, n_per_cell), c));
  std::ostringstream os;
  os << "constant(" << c << ")";
  u.name_ = c == 0.0 ? "zero" : os.str();
  return u;
}

PeriodicPotential PeriodicPotential::cosine(int dim, int n_per_cell, double amplitude) {
  const std::size_t count = cell_node_count(dim, n_per_cell);
  std::vector<double> s(count);
  const double a = 1.0 / n_per_cell;
  for (std::size_t flat = 0; flat < count; ++flat) {
    std::size_t rem = flat;
    double v = 0.0;
    for (int i = 0; i < dim; ++i) {
      const int k = static_cast<int>(rem % static_cast<std::size_t>(n_per_cell));
      rem /= static_cast<std::size_t>(n_per_cell);
      v += std::cos(2.0 * std::numbers::pi * (k + 0.5) * a);
    }
    s[flat] = amplitude * v;
  }
  PeriodicPotential u(dim, n_per_cell, std::move(s));
  std::ostringstream os;
  os << "cosine(" << amplitude << ")";
  u.name_ = os.str();
  return u;
}

double PeriodicPotential::at(std::span<const int> offsets) const { return samples_[cell_flat(offsets, n_)]; }

bool PeriodicPotential::is_zero() const noexcept {
  return std::all_of(samples_.begin(), samples_.end(), [](double v) { return v == 0.0; });
}

std::string PeriodicPotential::describe() const { return name_; }

double PeriodicGroundState::at(std::span<const int> offsets) const { return psi[cell_flat(offsets, n_per_cell)]; }

PeriodicGroundState PeriodicGroundState::from_samples(int dim, int n_per_cell, std::vector<double> psi, double E0) {
  if (psi.size() != cell_node_count(dim, n_per_cell)) {
    throw std::invalid_argument("PeriodicGroundState: need n_per_cell^d samples");
  }
  double s = 0.0;
  for (double v : psi) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("PeriodicGroundState: psi must be positive");
    s += v * v;
  }
  const double ad = std::pow(1.0 / n_per_cell, dim);
  const double scale = 1.0 / std::sqrt(s * ad);
  for (double& v : psi) v *= scale;
  PeriodicGroundState g;
  g.dim = dim;
  g.n_per_cell = n_per_cell;
  g.E0 = E0;
  g.psi = std::move(psi);
  return g;
}

SparseSymMatrix periodic_operator(const PeriodicPotential& u) {
  const int d = u.dim();
  const int n = u.n_per_cell();
  const double inv_a2 = static_cast<double>(n) * n;
  const std::size_t count = cell_node_count(d, n);
  std::vector<Triplet> t;
  t.reserve(count * (2 * d + 1));
  std::vector<int> idx(d), nb(d);
  for (std::size_t flat = 0; flat < count; ++flat) {
    std::size_t rem = flat;
    for (int i = 0; i < d; ++i) {
      idx[i] = static_cast<int>(rem % static_cast<std::size_t>(n));
      rem /= static_cast<std::size_t>(n);
    }
    t.push_back({flat, flat, 2.0 * d * inv_a2 + u.samples()[flat]});
    for (int i = 0; i < d; ++i) {
      for (int s : {-1, 1}) {
        nb = idx;
        nb[i] = (idx[i] + s + n) % n;
        t.push_back({flat, cell_flat(nb, n), -inv_a2});
      }
    }
  }
  return SparseSymMatrix::from_triplets(count, std::move(t));
}

PeriodicGroundState periodic_ground_state(const PeriodicPotential& u) {
  const int d = u.dim();
  const int n = u.n_per_cell();
  const std::size_t count = cell_node_count(d, n);
  const auto samples = u.samples();
  const bool constant = std::all_of(samples.begin(), samples.end(), [&](double v) { return v == samples[0]; });
  if (constant) {
    auto g = PeriodicGroundState::from_samples(d, n, std::vector<double>(count, 1.0), samples[0]);
    g.residual = 0.0;
    return g;
  }
  const auto h = periodic_operator(u);
  EigenOptions opt;
  opt.tol = 1e-12;
  auto res = smallest_eigs(h, 1, opt);
  std::vector<double> v = res.vectors[0];
  double e0 = res.values[0];
  // Polish by inverse iteration just below E0.
  const Ordering ord = best_ordering(h);
  const double scale = h.norm_inf();
  double shift = e0 - 1e-6 * scale;
  BandedLDLT fac;
  for (int tries = 0; tries < 20; ++tries) {
    fac.factor(h, ord, shift);
    if (fac.negative_pivots() == 0) break;
    shift -= 1e-3 * scale;
  }
  std::vector<double> w(count), hv(count);
  for (int it = 0; it < 3; ++it) {
    fac.solve(v, w);
    double nrm = 0.0;
    for (double x : w) nrm += x * x;
    nrm = std::sqrt(nrm);
    for (std::size_t i = 0; i < count; ++i) v[i] = w[i] / nrm;
  }
  double sum = 0.0;
  for (double x : v) sum += x;
  if (sum < 0.0) {
    for (double& x : v) x = -x;
  }
  if (*std::min_element(v.begin(), v.end()) <= 0.0) {
    throw std::runtime_error("periodic_ground_state: computed ground state is not strictly positive");
  }
  h.multiply(v, hv);
  e0 = 0.0;
  for (std::size_t i = 0; i < count; ++i) e0 += v[i] * hv[i];
  double r2 = 0.0;
  for (std::size_t i = 0; i < count; ++i) r2 += (hv[i] - e0 * v[i]) * (hv[i] - e0 * v[i]);
  auto g = PeriodicGroundState::from_samples(d, n, std::move(v), e0);
  g.residual = std::sqrt(r2);
  return g;
}

std::string to_string(BoundaryKind b) { return b == BoundaryKind::dirichlet ? "dirichlet" : "mezincescu"; }

BoundaryKind boundary_from_string(const std::string& s) {
  if (s == "dirichlet" || s == "D") return BoundaryKind::dirichlet;
  if (s == "mezincescu" || s == "robin" || s == "chi") return BoundaryKind::mezincescu;
  throw std::invalid_argument("unknown boundary condition: " + s);
}

std::vector<double> restrict_psi(const PeriodicGroundState& psi, const Grid& grid) {
  if (psi.dim != grid.dim() || psi.n_per_cell != grid.n_per_cell()) {
    throw std::invalid_argument("restrict_psi: grid does not match the ground-state grid");
  }
  std::vector<double> out(grid.node_count());
  std::vector<int> off(grid.dim());
  for (std::size_t flat = 0; flat < grid.node_count(); ++flat) {
    const auto idx = grid.node_multi_index(flat);
    for (int i = 0; i < grid.dim(); ++i) off[i] = grid.cell_offset(i, idx[i]);
    out[flat] = psi.at(off);
  }
  return out;
}

namespace {

DiscreteOperator assemble(const PeriodicPotential& u, const PotentialField* v, const Grid& grid,
                          const PeriodicGroundState& psi, BoundaryKind bc) {
  const int d = grid.dim();
  if (u.dim() != d || u.n_per_cell() != grid.n_per_cell()) {
    throw std::invalid_argument("assemble: U_per grid does not match the operator grid");
  }
  if (psi.dim != d || psi.n_per_cell != grid.n_per_cell()) {
    throw std::invalid_argument("assemble: ground-state grid does not match the operator grid");
  }
  if (v && (v->values.size() != grid.node_count() || !(v->grid == grid))) {
    throw std::invalid_argument("assemble: potential field lives on a different grid");
  }
  const double inv_a2 = static_cast<double>(grid.n_per_cell()) * grid.n_per_cell();
  const double sign = bc == BoundaryKind::mezincescu ? -1.0 : 1.0;
  const std::size_t count = grid.node_count();
  std::vector<Triplet> t;
  t.reserve(count * (2 * d + 1));
  std::vector<int> off(d), nb_off(d), nb(d);
  for (std::size_t flat = 0; flat < count; ++flat) {
    const auto idx = grid.node_multi_index(flat);
    for (int i = 0; i < d; ++i) off[i] = grid.cell_offset(i, idx[i]);
    const double psi_i = psi.at(off);
    double diag = 2.0 * d * inv_a2 + u.at(off) - psi.E0 + (v ? v->values[flat] : 0.0);
    for (int i = 0; i < d; ++i) {
      for (int s : {-1, 1}) {
        nb = idx;
        nb[i] += s;
        if (nb[i] >= 0 && nb[i] < grid.nodes_along(i)) {
          t.push_back({flat, grid.flat_node(nb), -inv_a2});
        } else {
          nb_off = off;
          nb_off[i] = grid.cell_offset(i, nb[i]);
          diag += sign * inv_a2 * psi.at(nb_off) / psi_i;
        }
      }
    }
    t.push_back({flat, flat, diag});
  }
  DiscreteOperator op;
  op.matrix = SparseSymMatrix::from_triplets(count, std::move(t));
  op.grid = grid;
  op.bc = bc;
  op.shifted = true;
  op.E0 = psi.E0;
  return op;
}

}  // namespace

DiscreteOperator mezincescu_assemble(const PeriodicPotential& u, const PotentialField& v, const Grid& grid,
                                     const PeriodicGroundState& psi) {
  return assemble(u, &v, grid, psi, BoundaryKind::mezincescu);
}

DiscreteOperator mezincescu_assemble(const PeriodicPotential& u, const Grid& grid, const PeriodicGroundState& psi) {
  return assemble(u, nullptr, grid, psi, BoundaryKind::mezincescu);
}

DiscreteOperator dirichlet_assemble(const PeriodicPotential& u, const PotentialField& v, const Grid& grid,
                                    const PeriodicGroundState& psi) {
  return assemble(u, &v, grid, psi, BoundaryKind::dirichlet);
}

DiscreteOperator dirichlet_assemble(const PeriodicPotential& u, const Grid& grid, const PeriodicGroundState& psi) {
  return assemble(u, nullptr, grid, psi, BoundaryKind::dirichlet);
}

std::vector<double> chi_values(const PeriodicGroundState& psi, const Box& box, int axis, int side) {
  if (psi.dim != box.dim()) throw std::invalid_argument("chi_values: dimension mismatch");
  if (axis < 0 || axis >= box.dim()) throw std::out_of_range("chi_values: axis");
  if (side != -1 && side != 1) throw std::invalid_argument("chi_values: side must be -1 or +1");
  const Grid grid(box, psi.n_per_cell);
  const int d = grid.dim();
  const int na = grid.nodes_along(axis);
  if (na < 3) throw std::invalid_argument("chi_values: need at least three nodes across the box");
  const double a = grid.spacing();
  std::vector<int> idx(d, 0), off(d);
  std::vector<double> out;
  auto log_psi = [&](int k) {
    idx[axis] = k;
    for (int i = 0; i < d; ++i) off[i] = grid.cell_offset(i, idx[i]);
    return std::log(psi.at(off));
  };
  for (;;) {
    // Inward nodes at distances a/2, 3a/2, 5a/2 from the face.
    const int k0 = side < 0 ? 0 : na - 1;
    const int step = side < 0 ? 1 : -1;
    const double f0 = log_psi(k0);
    const double f1 = log_psi(k0 + step);
    const double f2 = log_psi(k0 + 2 * step);
    out.push_back((-2.0 * f0 + 3.0 * f1 - f2) / a);
    int i = 0;
    for (; i < d; ++i) {
      if (i == axis) continue;
      if (++idx[i] < grid.nodes_along(i)) break;
      idx[i] = 0;
    }
    if (i == d) break;
  }
  return out;
}

void write_operator(std::ostream& os, const DiscreteOperator& op) {
  nlohmann::json header;
  header["box_lo"] = op.grid.box().lo();
  header["box_hi"] = op.grid.box().hi();
  header["n_per_cell"] = op.grid.n_per_cell();
  header["bc"] = to_string(op.bc);
  header["E0"] = op.E0;
  header["shifted"] = op.shifted;
  os << header.dump() << '\n';
  op.matrix.write_coo(os);
}

}  // namespace lifshits
