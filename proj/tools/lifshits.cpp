// Command line front end for the Lifshits-tail experiments.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lifshits/experiments.hpp"

namespace {

using namespace lifshits;

struct Common {
  std::string config;
  std::string preset;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON config file");
  sub->add_option("--preset", c.preset, "named preset");
  sub->add_option("--override", c.overrides, "key.path=value (repeatable)");
  sub->add_option("--out-dir", c.out_dir, "output directory");
  sub->add_option_function<std::uint64_t>("--seed", [&c](const std::uint64_t& s) {
    c.seed = s;
    c.seed_set = true;
  }, "master seed");
  sub->add_option("--threads", c.threads, "worker threads (0: LIFSHITS_THREADS or hardware)");
}

ExperimentConfig resolve(const Common& c) {
  if (!c.config.empty() && !c.preset.empty()) throw std::invalid_argument("--config and --preset are exclusive");
  Json j = !c.preset.empty() ? to_json(preset(c.preset))
           : !c.config.empty() ? to_json(load_config(c.config))
                               : to_json(ExperimentConfig{});
  for (const auto& o : c.overrides) apply_override(j, o);
  if (c.seed_set) j["seed"] = c.seed;
  if (!c.out_dir.empty()) j["output"]["dir"] = c.out_dir;
  auto cfg = config_from_json(j);
  cfg.validate();
  return cfg;
}

void print_error(const std::string& subcommand, const std::string& type, const std::string& message) {
  const Json err = {{"kind", "error"}, {"subcommand", subcommand}, {"type", type}, {"message", message}};
  std::cerr << err.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lifshits tails of random Schroedinger operators with impurity potentials"};
  app.require_subcommand(1);
  Common common;
  std::string input;
  std::string plot_kind = "loglog";

  struct Sub {
    const char* name;
    const char* help;
  };
  const std::vector<Sub> subs{{"sample-measure", "sample a random measure and dump its atoms"},
                              {"sample-potential", "sample the random potential on the grid"},
                              {"eigs", "lowest eigenvalues of one realization"},
                              {"ids", "Monte Carlo IDS estimate and Lifshits fit"},
                              {"bounds", "bound chain or sandwich check"},
                              {"regime", "regime experiment: sandwich, direct IDS, fit"},
                              {"fit", "Lifshits fit of an existing series"},
                              {"stat-tests", "small-mass, mixing, intensity and Birman-Solomyak checks"},
                              {"bench", "timings of the numerical stages"},
                              {"plot-data", "CSV tables for plotting"}};
  for (const auto& s : subs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    add_common(sub, common);
    if (std::string(s.name) == "fit" || std::string(s.name) == "plot-data") {
      sub->add_option("--input", input, "CSV or results.jsonl")->required(std::string(s.name) == "fit");
    }
    if (std::string(s.name) == "plot-data") {
      sub->add_option("--kind", plot_kind, "loglog | phase | chain | sandwich");
    }
  }
  CLI11_PARSE(app, argc, argv);
  const std::string name = app.get_subcommands().front()->get_name();

  try {
    const ExperimentConfig cfg = resolve(common);
    const std::filesystem::path out = cfg.out_dir;
    if (name == "plot-data") {
      const std::vector<Json> records = input.empty() ? std::vector<Json>{} : read_records(input);
      const Table t = emit_plot_data(records, plot_kind);
      for (const auto& w : t.warnings) {
        std::cerr << Json{{"kind", "warning"}, {"subcommand", name}, {"message", w}}.dump() << '\n';
      }
      std::filesystem::create_directories(out);
      const auto file = out / ("plot_" + plot_kind + ".csv");
      write_csv(file, t.header, t.rows);
      std::cout << "plot-data " << plot_kind << ": " << t.rows.size() << " rows -> " << file.string() << '\n';
      return 0;
    }
    ResultSink sink(cfg);
    RunResult res;
    if (name == "sample-measure") res = run_sample_measure(cfg, sink, out.string());
    else if (name == "sample-potential") res = run_sample_potential(cfg, sink, out.string());
    else if (name == "eigs") res = run_eigs(cfg, sink);
    else if (name == "ids") res = run_ids(cfg, sink, common.threads);
    else if (name == "bounds") res = run_bounds(cfg, sink, common.threads);
    else if (name == "regime") res = run_regime(cfg, sink, common.threads);
    else if (name == "fit") res = run_fit(cfg, sink, input);
    else if (name == "stat-tests") res = run_stat_tests(cfg, sink);
    else if (name == "bench") res = run_bench(cfg, sink);
    sink.write(out);
    std::cout << res.summary << '\n';
    return res.exit_code;
  } catch (const std::invalid_argument& e) {
    print_error(name, "validation", e.what());
    return 2;
  } catch (const std::exception& e) {
    print_error(name, "solver", e.what());
    return 3;
  }
}
