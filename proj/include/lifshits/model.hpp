#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lifshits/discretize.hpp"
#include "lifshits/impurity.hpp"
#include "lifshits/rmeasure.hpp"

namespace lifshits {

struct PotentialSpec {
  std::string family = "algebraic";  // algebraic | box_indicator
  double f0 = 1.0;
  std::vector<int> dims{1, 1};
  std::vector<double> alpha{kInf, kInf};
  double r = 0.5;                    // box_indicator radius
  std::vector<double> truncation;    // per-block radii, empty = default
  double truncation_tol = 1e-3;
  double truncation_cap = 64.0;

  ImpurityPotential build() const;
};

struct OperatorSpec {
  std::string u_per = "zero";  // zero | cosine
  double u_amplitude = 1.0;
  int n_per_cell = 4;

  PeriodicPotential build(int dim) const;
};

/// A fully specified random operator: measure law, impurity potential and
/// background. Realizations are addressed by seed; the measure is generated
/// from per-cell streams, so overlapping boxes see identical atoms.
class Model {
 public:
  Model(MeasureConfig measure, PotentialSpec potential, OperatorSpec op);

  int dim() const noexcept { return potential_.dim(); }
  const MeasureConfig& measure_config() const noexcept { return measure_; }
  const ImpurityPotential& potential() const noexcept { return potential_; }
  const PotentialSpec& potential_spec() const noexcept { return potential_spec_; }
  const OperatorSpec& operator_spec() const noexcept { return op_spec_; }
  const PeriodicPotential& u_per() const noexcept { return u_; }
  const PeriodicGroundState& ground_state() const noexcept { return psi_; }
  const Truncation& truncation() const noexcept { return truncation_; }

  Grid grid(const Box& box) const { return Grid(box, op_spec_.n_per_cell); }
  /// Box plus the truncation margin on every axis.
  Box sampling_box(const Box& box) const;
  PointMeasure measure(const Box& box, std::uint64_t seed) const;
  PotentialField field(const Box& box, std::uint64_t seed) const;
  DiscreteOperator assemble(BoundaryKind bc, const PotentialField& v) const;
  DiscreteOperator assemble_free(BoundaryKind bc, const Box& box) const;

 private:
  MeasureConfig measure_;
  PotentialSpec potential_spec_;
  OperatorSpec op_spec_;
  ImpurityPotential potential_;
  PeriodicPotential u_;
  PeriodicGroundState psi_;
  Truncation truncation_;
};

}  // namespace lifshits
