#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "lifshits/discretize.hpp"
#include "lifshits/grid.hpp"
#include "lifshits/model.hpp"
#include "lifshits/rmeasure.hpp"

namespace lifshits {

using Json = nlohmann::json;

struct ExperimentSection {
  std::string kind = "ids";          // ids | sandwich | regime | chain | eigs
  std::vector<double> energies;      // explicit grid; empty = geometric schedule below
  double e_min = 0.3;
  double e_max = 5.0;
  int points = 16;
  std::vector<int> box_lo;           // empty = origin
  std::vector<int> box{24, 24};      // extents in cells
  std::vector<int> lambda_box{8, 8}; // sandwich cell (regime experiment)
  int tiles = 3;
  std::size_t n_realizations = 200;
  double r0 = 4.0;
  double prefactor = 1.0;
  std::string cutoff = "qm";         // chain: qm | qc | classical
  double L = 3.0;                    // chain: length scale entering h, R, thresholds
  double budget_seconds = 0.0;       // 0 = unlimited
  int n_eigs = 4;

  std::vector<double> energy_grid() const;
  Box make_box() const;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  MeasureConfig measure;
  PotentialSpec potential;
  OperatorSpec op;
  BoundaryKind bc = BoundaryKind::dirichlet;
  ExperimentSection experiment;
  std::string out_dir = "out";
  std::string preset;  // name of the preset it came from, if any

  /// Throws std::invalid_argument on any violated precondition.
  void validate() const;
  Model model() const;
};

Json to_json(const ExperimentConfig& cfg);
/// Strict parse: unknown keys and wrong types are errors.
ExperimentConfig config_from_json(const Json& j);
ExperimentConfig load_config(const std::string& path);

/// key.path=value with value parsed as JSON (bare words become strings).
void apply_override(Json& j, const std::string& assignment);

/// FNV-1a 64 of the canonical (sorted-key, compact) dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

std::vector<std::string> preset_names();
ExperimentConfig preset(const std::string& name);

}  // namespace lifshits
