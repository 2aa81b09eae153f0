#include "lifshits/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

namespace lifshits {

namespace {

// Strict view of one JSON object: every key must be consumed.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw std::invalid_argument(path_ + ": expected an object");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key);
  }
  const Json& at(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }
  template <class T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const Json::exception&) {
      throw std::invalid_argument(path_ + "." + key + ": wrong type");
    }
  }
  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) throw std::invalid_argument("unknown config key: " + path_ + "." + k);
    }
  }
  const std::string& path() const { return path_; }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

double number_or_inf(const Json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string() && (v == "inf" || v == "infinity")) return kInf;
  throw std::invalid_argument(where + ": expected a number or \"inf\"");
}

Json number_json(double x) { return std::isinf(x) ? Json("inf") : Json(x); }

Json weights_json(const WeightLaw& w) {
  switch (w.kind()) {
    case WeightLaw::Kind::constant: return {{"law", "constant"}, {"value", w.a()}};
    case WeightLaw::Kind::exponential: return {{"law", "exponential"}, {"mean", w.a()}};
    case WeightLaw::Kind::uniform: return {{"law", "uniform"}, {"a", w.a()}, {"b", w.b()}};
    case WeightLaw::Kind::bernoulli_scaled: return {{"law", "bernoulli_scaled"}, {"p", w.a()}, {"c", w.b()}};
  }
  return {};
}

WeightLaw weights_from_json(const Json& j) {
  Section s(j, "measure.weights");
  std::string law = "constant";
  s.get("law", law);
  WeightLaw w = WeightLaw::constant(1.0);
  if (law == "constant") {
    double v = 1.0;
    s.get("value", v);
    w = WeightLaw::constant(v);
  } else if (law == "exponential") {
    double m = 1.0;
    s.get("mean", m);
    w = WeightLaw::exponential(m);
  } else if (law == "uniform") {
    double a = 0.0, b = 1.0;
    s.get("a", a);
    s.get("b", b);
    w = WeightLaw::uniform(a, b);
  } else if (law == "bernoulli_scaled") {
    double p = 0.5, c = 1.0;
    s.get("p", p);
    s.get("c", c);
    w = WeightLaw::bernoulli_scaled(p, c);
  } else {
    throw std::invalid_argument("measure.weights.law: unknown law " + law);
  }
  s.finish();
  return w;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Sets j[path] = value for a dotted path, creating objects as needed.
void set_path(Json& j, const std::string& path, Json value) {
  Json* cur = &j;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw std::invalid_argument("override: empty key in " + path);
    if (dot == std::string::npos) {
      (*cur)[key] = std::move(value);
      return;
    }
    cur = &(*cur)[key];
    start = dot + 1;
  }
}

}  // namespace

std::vector<double> ExperimentSection::energy_grid() const {
  if (!energies.empty()) return energies;
  if (points < 2) return {e_min};
  std::vector<double> out;
  for (int i = 0; i < points; ++i) out.push_back(e_min * std::pow(e_max / e_min, i / double(points - 1)));
  return out;
}

Box ExperimentSection::make_box() const {
  std::vector<int> lo = box_lo.empty() ? std::vector<int>(box.size(), 0) : box_lo;
  if (lo.size() != box.size()) throw std::invalid_argument("experiment.box_lo and experiment.box differ in length");
  std::vector<int> hi(box.size());
  for (std::size_t i = 0; i < box.size(); ++i) hi[i] = lo[i] + box[i];
  return Box(lo, hi);
}

void ExperimentConfig::validate() const {
  measure.validate();
  const auto pot = potential.build();
  if (potential.f0 < 0.0) throw std::invalid_argument("potential.f0 must be nonnegative");
  if (!(potential.truncation_tol > 0.0)) throw std::invalid_argument("potential.truncation_tol must be positive");
  if (!(potential.truncation_cap >= 1.0)) throw std::invalid_argument("potential.truncation_cap must be >= 1");
  if (!potential.truncation.empty() && static_cast<int>(potential.truncation.size()) != pot.profile().blocks()) {
    throw std::invalid_argument("potential.truncation needs one radius per block");
  }
  if (op.n_per_cell < 2) throw std::invalid_argument("operator.n_per_cell must be at least 2");
  const auto& e = experiment;
  static const std::set<std::string> kinds{"ids", "sandwich", "regime", "chain", "eigs"};
  if (!kinds.count(e.kind)) throw std::invalid_argument("experiment.kind: unknown kind " + e.kind);
  if (static_cast<int>(e.box.size()) != pot.dim()) throw std::invalid_argument("experiment.box must have one extent per axis");
  for (int x : e.box) {
    if (x < 1) throw std::invalid_argument("experiment.box extents must be positive");
  }
  if (static_cast<int>(e.lambda_box.size()) != pot.dim()) {
    throw std::invalid_argument("experiment.lambda_box must have one extent per axis");
  }
  for (int x : e.lambda_box) {
    if (x < 1) throw std::invalid_argument("experiment.lambda_box extents must be positive");
  }
  if (e.tiles < 1) throw std::invalid_argument("experiment.tiles must be >= 1");
  if (e.n_realizations < 1) throw std::invalid_argument("experiment.n_realizations must be >= 1");
  if (e.energies.empty()) {
    if (!(e.e_min > 0.0) || !(e.e_max >= e.e_min) || e.points < 1) {
      throw std::invalid_argument("experiment schedule needs 0 < e_min <= e_max and points >= 1");
    }
  } else {
    for (std::size_t i = 1; i < e.energies.size(); ++i) {
      if (e.energies[i] < e.energies[i - 1]) throw std::invalid_argument("experiment.energies must be ascending");
    }
  }
  if (!(e.r0 > 0.0) || !(e.prefactor > 0.0)) throw std::invalid_argument("experiment.r0 and prefactor must be positive");
  cutoff_mode_from_string(e.cutoff);
  if (!(e.L > 1.0)) throw std::invalid_argument("experiment.L must exceed 1");
  if (e.budget_seconds < 0.0) throw std::invalid_argument("experiment.budget_seconds must be >= 0");
  if (e.n_eigs < 1) throw std::invalid_argument("experiment.n_eigs must be >= 1");
  e.make_box();
}

Model ExperimentConfig::model() const {
  validate();
  return Model(measure, potential, op);
}

Json to_json(const ExperimentConfig& c) {
  Json alpha = Json::array();
  for (double a : c.potential.alpha) alpha.push_back(number_json(a));
  Json j;
  j["seed"] = c.seed;
  j["measure"] = {{"family", to_string(c.measure.family)}, {"rho", c.measure.rho}, {"weights", weights_json(c.measure.weights)}};
  j["potential"] = {{"family", c.potential.family},
                    {"f0", c.potential.f0},
                    {"dims", c.potential.dims},
                    {"alpha", alpha},
                    {"r", c.potential.r},
                    {"truncation", c.potential.truncation},
                    {"truncation_tol", c.potential.truncation_tol},
                    {"truncation_cap", c.potential.truncation_cap}};
  j["operator"] = {{"u_per", c.op.u_per},
                   {"u_amplitude", c.op.u_amplitude},
                   {"n_per_cell", c.op.n_per_cell},
                   {"bc", to_string(c.bc)}};
  const auto& e = c.experiment;
  j["experiment"] = {{"kind", e.kind},       {"energies", e.energies},
                     {"e_min", e.e_min},     {"e_max", e.e_max},
                     {"points", e.points},   {"box_lo", e.box_lo},
                     {"box", e.box},         {"lambda_box", e.lambda_box},
                     {"tiles", e.tiles},     {"n_realizations", e.n_realizations},
                     {"r0", e.r0},           {"prefactor", e.prefactor},
                     {"cutoff", e.cutoff},   {"L", e.L},
                     {"budget_seconds", e.budget_seconds}, {"n_eigs", e.n_eigs}};
  j["output"] = {{"dir", c.out_dir}};
  j["preset"] = c.preset;
  return j;
}

ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig c;
  Section root(j, "config");
  root.get("seed", c.seed);
  root.get("preset", c.preset);
  if (root.has("measure")) {
    Section s(root.at("measure"), "measure");
    std::string fam = to_string(c.measure.family);
    s.get("family", fam);
    c.measure.family = measure_family_from_string(fam);
    s.get("rho", c.measure.rho);
    if (s.has("weights")) c.measure.weights = weights_from_json(s.at("weights"));
    s.finish();
  }
  if (root.has("potential")) {
    Section s(root.at("potential"), "potential");
    s.get("family", c.potential.family);
    s.get("f0", c.potential.f0);
    s.get("dims", c.potential.dims);
    if (s.has("alpha")) {
      const auto& a = s.at("alpha");
      if (!a.is_array()) throw std::invalid_argument("potential.alpha: expected a list");
      c.potential.alpha.clear();
      for (const auto& v : a) c.potential.alpha.push_back(number_or_inf(v, "potential.alpha"));
    }
    s.get("r", c.potential.r);
    s.get("truncation", c.potential.truncation);
    s.get("truncation_tol", c.potential.truncation_tol);
    s.get("truncation_cap", c.potential.truncation_cap);
    s.finish();
  }
  if (root.has("operator")) {
    Section s(root.at("operator"), "operator");
    s.get("u_per", c.op.u_per);
    s.get("u_amplitude", c.op.u_amplitude);
    s.get("n_per_cell", c.op.n_per_cell);
    std::string bc = to_string(c.bc);
    s.get("bc", bc);
    c.bc = boundary_from_string(bc);
    s.finish();
  }
  if (root.has("experiment")) {
    Section s(root.at("experiment"), "experiment");
    auto& e = c.experiment;
    s.get("kind", e.kind);
    s.get("energies", e.energies);
    s.get("e_min", e.e_min);
    s.get("e_max", e.e_max);
    s.get("points", e.points);
    s.get("box_lo", e.box_lo);
    s.get("box", e.box);
    s.get("lambda_box", e.lambda_box);
    s.get("tiles", e.tiles);
    s.get("n_realizations", e.n_realizations);
    s.get("r0", e.r0);
    s.get("prefactor", e.prefactor);
    s.get("cutoff", e.cutoff);
    s.get("L", e.L);
    s.get("budget_seconds", e.budget_seconds);
    s.get("n_eigs", e.n_eigs);
    s.finish();
  }
  if (root.has("output")) {
    Section s(root.at("output"), "output");
    s.get("dir", c.out_dir);
    s.finish();
  }
  root.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument("config parse error in " + path + ": " + e.what());
  }
  // config.lock files carry their hash next to the config
  std::string locked;
  if (j.is_object() && j.contains("config_hash")) {
    if (!j["config_hash"].is_string()) throw std::invalid_argument("config_hash must be a string");
    locked = j["config_hash"].get<std::string>();
    j.erase("config_hash");
  }
  auto cfg = config_from_json(j);
  if (!locked.empty() && locked != config_hash(cfg)) {
    throw std::invalid_argument("config_hash mismatch in " + path + ": file says " + locked + ", content hashes to " +
                                config_hash(cfg));
  }
  return cfg;
}

void apply_override(Json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw std::invalid_argument("override must look like key.path=value: " + assignment);
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::parse_error&) {
    value = text;
  }
  set_path(j, key, std::move(value));
}

std::string config_hash(const ExperimentConfig& cfg) {
  Json j = to_json(cfg);
  j.erase("output");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

std::vector<std::string> preset_names() {
  return {"qm-poisson", "cl", "sandwich-small", "chain-qm", "chain-qc", "chain-cl", "ids-small"};
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.preset = name;
  c.seed = 7;
  c.measure.family = MeasureFamily::poisson;
  if (name == "qm-poisson" || name == "cl") {
    c.measure.rho = 0.5;
    c.potential.alpha = name == "cl" ? std::vector<double>{2.5, 2.5} : std::vector<double>{10.0, 10.0};
    c.potential.f0 = name == "cl" ? 0.2 : 1.0;
    c.op.n_per_cell = 2;
    auto& e = c.experiment;
    e.kind = "regime";
    e.e_min = 0.3;
    e.e_max = 5.0;
    e.points = 16;
    e.box = {24, 24};
    e.lambda_box = {8, 8};
    e.tiles = 3;
    e.n_realizations = 200;
  } else if (name == "sandwich-small") {
    c.measure.rho = 1.0;
    c.potential.alpha = {kInf, kInf};
    c.potential.f0 = 0.006;
    c.op.n_per_cell = 4;
    auto& e = c.experiment;
    e.kind = "sandwich";
    e.energies = {0.02, 0.05, 0.1};
    e.box = {16, 16};
    e.lambda_box = {16, 16};
    e.tiles = 2;
    e.n_realizations = 200;
  } else if (name == "chain-qm") {
    c.measure.rho = 1.0;
    c.potential.alpha = {10.0, 10.0};
    c.potential.f0 = 1.0;
    c.op.n_per_cell = 4;
    auto& e = c.experiment;
    e.kind = "chain";
    e.cutoff = "qm";
    e.L = 3.0;
    e.r0 = 4.0;
    e.box_lo = {-2, -2};
    e.box = {5, 5};
    e.n_realizations = 50;
  } else if (name == "chain-qc") {
    c.measure.rho = 1.0;
    c.potential.alpha = {kInf, 2.5};
    c.potential.f0 = 1.0;
    c.op.n_per_cell = 4;
    auto& e = c.experiment;
    e.kind = "chain";
    e.cutoff = "qc";
    e.L = 4.0;
    e.r0 = 3.0;
    e.box_lo = {-3, 0};
    e.box = {7, 1};
    e.n_realizations = 50;
  } else if (name == "chain-cl") {
    c.measure.rho = 1.0;
    c.potential.alpha = {2.5, 2.5};
    c.potential.f0 = 1.0;
    c.op.n_per_cell = 4;
    auto& e = c.experiment;
    e.kind = "chain";
    e.cutoff = "classical";
    e.L = 2.0;
    e.r0 = 1.0;
    e.box_lo = {0, 0};
    e.box = {1, 1};
    e.n_realizations = 50;
  } else if (name == "ids-small") {
    c.measure.rho = 0.5;
    c.potential.alpha = {10.0, 10.0};
    c.potential.f0 = 1.0;
    c.op.n_per_cell = 2;
    auto& e = c.experiment;
    e.kind = "ids";
    e.e_min = 0.5;
    e.e_max = 5.0;
    e.points = 8;
    e.box = {8, 8};
    e.n_realizations = 20;
  } else {
    throw std::invalid_argument("unknown preset: " + name);
  }
  c.validate();
  return c;
}

}  // namespace lifshits
