#include "lifshits/model.hpp"

#include <cmath>
#include <stdexcept>

namespace lifshits {

ImpurityPotential PotentialSpec::build() const {
  if (family == "algebraic") return ImpurityPotential::algebraic(AnisotropyProfile::make(dims, alpha), f0);
  if (family == "box_indicator") return ImpurityPotential::box_indicator(dims, f0, r);
  throw std::invalid_argument("unknown potential family: " + family);
}

PeriodicPotential OperatorSpec::build(int dim) const {
  if (n_per_cell < 2) throw std::invalid_argument("operator.n_per_cell must be at least 2");
  if (u_per == "zero") return PeriodicPotential::zero(dim, n_per_cell);
  if (u_per == "cosine") return PeriodicPotential::cosine(dim, n_per_cell, u_amplitude);
  throw std::invalid_argument("unknown U_per choice: " + u_per);
}

Model::Model(MeasureConfig measure, PotentialSpec potential, OperatorSpec op)
    : measure_(measure),
      potential_spec_(std::move(potential)),
      op_spec_(std::move(op)),
      potential_(potential_spec_.build()),
      u_(op_spec_.build(potential_.dim())),
      psi_(periodic_ground_state(u_)) {
  measure_.validate();
  if (potential_spec_.truncation.empty()) {
    truncation_ = default_truncation(potential_, potential_spec_.truncation_tol, potential_spec_.truncation_cap);
  } else {
    truncation_.radii = potential_spec_.truncation;
    truncation_.tolerance = potential_spec_.truncation_tol;
    for (double r : truncation_.radii) {
      if (!(r > 0.0) || std::isinf(r)) throw std::invalid_argument("potential.truncation radii must be finite and positive");
    }
    annotate_truncation(potential_, truncation_);
  }
}

Box Model::sampling_box(const Box& box) const {
  const auto& prof = potential_.profile();
  std::vector<int> margin(prof.dim(), 0);
  for (int k = 0; k < prof.blocks(); ++k) {
    const int m = static_cast<int>(std::ceil(truncation_.radii[k])) + 1;
    for (int i = prof.block_offset(k); i < prof.block_offset(k) + prof.block_dim(k); ++i) margin[i] = m;
  }
  return box.dilated(margin);
}

PointMeasure Model::measure(const Box& box, std::uint64_t seed) const {
  return sample_measure(measure_, sampling_box(box), seed);
}

PotentialField Model::field(const Box& box, std::uint64_t seed) const {
  return sample_potential(measure(box, seed), potential_, grid(box), truncation_);
}

DiscreteOperator Model::assemble(BoundaryKind bc, const PotentialField& v) const {
  return bc == BoundaryKind::dirichlet ? dirichlet_assemble(u_, v, v.grid, psi_)
                                       : mezincescu_assemble(u_, v, v.grid, psi_);
}

DiscreteOperator Model::assemble_free(BoundaryKind bc, const Box& box) const {
  const Grid g = grid(box);
  return bc == BoundaryKind::dirichlet ? dirichlet_assemble(u_, g, psi_) : mezincescu_assemble(u_, g, psi_);
}

}  // namespace lifshits
