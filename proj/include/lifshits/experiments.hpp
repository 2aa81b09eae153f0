#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lifshits/bounds.hpp"
#include "lifshits/config.hpp"
#include "lifshits/ids.hpp"
#include "lifshits/records.hpp"

namespace lifshits {

/// One realization of the bound chain
/// half_average <= temple <= lambda_0(H^chi(V_cut)) <= lambda_0(H^chi(V)) <= lambda_0(H^D(V)) <= rayleigh_ritz.
struct ChainRecord {
  std::size_t realization = 0;
  double sup_cut = 0.0;
  TempleBound temple;
  double half_average = 0.0;
  double lambda_chi_cut = 0.0;
  double lambda_chi = 0.0;
  double lambda_dirichlet = 0.0;
  RayleighRitzBound rayleigh_ritz;
  bool config_valid = false;  // temple valid and sup V_cut <= gap / 4
  bool chain_holds = false;
};

struct ChainReport {
  std::string mode;
  double gap = 0.0;
  double h = 0.0;
  double R = 0.0;
  std::vector<double> thresholds;
  std::vector<ChainRecord> records;
  std::size_t valid = 0;
  std::size_t violations = 0;  // among valid configurations
};

/// Absolute slack allowed in chain comparisons.
inline constexpr double kChainTolerance = 1e-9;

ChainReport bound_chain(const ExperimentConfig& cfg, int threads = 0);

struct RegimeExperiment {
  explicit RegimeExperiment(RegimeReport t) : theory(std::move(t)) {}

  RegimeReport theory;
  std::vector<double> energies;
  std::vector<ScalingLengths> scales;
  Box lambda_box;
  Box direct_box;
  std::size_t n_used = 0;
  bool partial = false;
  std::vector<SandwichPoint> sandwich;
  IdsEstimate direct;
  std::optional<LifshitsFit> fit;
  std::string fit_error;
};

RegimeExperiment regime_experiment(const ExperimentConfig& cfg, int threads = 0);

struct RunResult {
  std::string summary;
  int exit_code = 0;
};

// Subcommand drivers: each fills the sink and returns a one-line summary.
RunResult run_sample_measure(const ExperimentConfig& cfg, ResultSink& sink, const std::string& out_dir);
RunResult run_sample_potential(const ExperimentConfig& cfg, ResultSink& sink, const std::string& out_dir);
RunResult run_eigs(const ExperimentConfig& cfg, ResultSink& sink);
RunResult run_ids(const ExperimentConfig& cfg, ResultSink& sink, int threads);
RunResult run_bounds(const ExperimentConfig& cfg, ResultSink& sink, int threads);
RunResult run_regime(const ExperimentConfig& cfg, ResultSink& sink, int threads);
RunResult run_stat_tests(const ExperimentConfig& cfg, ResultSink& sink);
RunResult run_bench(const ExperimentConfig& cfg, ResultSink& sink);
/// Fit from a CSV with columns E,N[,lower] or from ids_point records.
RunResult run_fit(const ExperimentConfig& cfg, ResultSink& sink, const std::string& input);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> warnings;
};

/// kind: loglog | phase | chain | sandwich.
Table emit_plot_data(const std::vector<Json>& records, const std::string& kind);
/// eta_theory over alpha_1 x alpha_2 for d = (1, 1).
Table phase_grid(const std::vector<double>& alphas);

}  // namespace lifshits
