#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lifshits/experiments.hpp"

namespace py = pybind11;
using namespace lifshits;

namespace {

std::string regime_json(const std::vector<int>& dims, const std::vector<double>& alphas) {
  const auto rep = classify_regime(AnisotropyProfile::make(dims, alphas));
  Json blocks = Json::array();
  for (const auto& b : rep.blocks) {
    blocks.push_back({{"quantum", b.quantum}, {"classical", b.classical}, {"quantum_side", b.quantum_side}});
  }
  return Json{{"regime", rep.regime}, {"eta", rep.eta}, {"blocks", blocks}}.dump();
}

std::string fit_json(const std::vector<double>& E, const std::vector<double>& N, const std::vector<double>& lower) {
  const auto f = lifshits_fit(E, N, lower);
  return Json{{"eta_hat", f.eta},
              {"std_error", f.std_error},
              {"E_min", f.E_min},
              {"E_max", f.E_max},
              {"r2", f.r2},
              {"powerlaw_r2", f.powerlaw_r2},
              {"points", f.points},
              {"censored", f.censored},
              {"no_lifshits_decay", f.no_lifshits_decay}}
      .dump();
}

ExperimentConfig parse(const std::string& config_json) {
  auto cfg = config_from_json(Json::parse(config_json));
  cfg.validate();
  return cfg;
}

py::tuple run(const std::string& subcommand, const std::string& config_json, const std::string& input, int threads,
              bool write) {
  const auto cfg = parse(config_json);
  ResultSink sink(cfg);
  RunResult res;
  {
    py::gil_scoped_release release;
    if (subcommand == "sample-measure") res = run_sample_measure(cfg, sink, cfg.out_dir);
    else if (subcommand == "sample-potential") res = run_sample_potential(cfg, sink, cfg.out_dir);
    else if (subcommand == "eigs") res = run_eigs(cfg, sink);
    else if (subcommand == "ids") res = run_ids(cfg, sink, threads);
    else if (subcommand == "bounds") res = run_bounds(cfg, sink, threads);
    else if (subcommand == "regime") res = run_regime(cfg, sink, threads);
    else if (subcommand == "fit") res = run_fit(cfg, sink, input);
    else if (subcommand == "stat-tests") res = run_stat_tests(cfg, sink);
    else if (subcommand == "bench") res = run_bench(cfg, sink);
    else throw std::invalid_argument("unknown subcommand: " + subcommand);
    if (write) sink.write(cfg.out_dir);
  }
  return py::make_tuple(res.summary, res.exit_code, Json(sink.records()).dump());
}

std::vector<std::vector<double>> measure_atoms(const std::string& config_json) {
  const auto cfg = parse(config_json);
  const auto m = sample_measure(cfg.measure, cfg.experiment.make_box(), cfg.seed);
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < m.atom_count(); ++i) {
    const auto x = m.position(i);
    std::vector<double> row(x.begin(), x.end());
    row.push_back(m.weight(i));
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Lifshits tails of random Schroedinger operators with impurity potentials";
  m.def("eta_theory", [](const std::vector<int>& dims, const std::vector<double>& alphas) {
    return eta_theory(AnisotropyProfile::make(dims, alphas));
  }, py::arg("dims"), py::arg("alphas"));
  m.def("classify_regime", &regime_json, py::arg("dims"), py::arg("alphas"));
  m.def("lifshits_fit", &fit_json, py::arg("energies"), py::arg("values"), py::arg("lower") = std::vector<double>{});
  m.def("preset_names", &preset_names);
  m.def("preset", [](const std::string& name) { return to_json(preset(name)).dump(); }, py::arg("name"));
  m.def("default_config", [] { return to_json(ExperimentConfig{}).dump(); });
  m.def("config_hash", [](const std::string& c) { return config_hash(parse(c)); }, py::arg("config"));
  m.def("run", &run, py::arg("subcommand"), py::arg("config"), py::arg("input") = "", py::arg("threads") = 0,
        py::arg("write") = true);
  m.def("sample_measure", &measure_atoms, py::arg("config"));
  m.def("plot_data", [](const std::string& records_json, const std::string& kind) {
    std::vector<Json> recs = Json::parse(records_json).get<std::vector<Json>>();
    const auto t = emit_plot_data(recs, kind);
    return py::make_tuple(t.header, t.rows, t.warnings);
  }, py::arg("records"), py::arg("kind"));
  py::register_exception<std::invalid_argument>(m, "ConfigError", PyExc_ValueError);
}
