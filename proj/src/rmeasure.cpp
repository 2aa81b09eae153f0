#include "lifshits/rmeasure.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace lifshits {

namespace {

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

// Uniform point in the half-open cell [j, j+1) per axis.
double uniform_in_cell(int j, CounterRng& rng) {
  const double lo = static_cast<double>(j);
  double x = lo + rng.uniform();
  if (x >= lo + 1.0) x = std::nextafter(lo + 1.0, lo);
  return x;
}

int poisson_count(double rho, CounterRng& rng) {
  if (rho <= 0.0) return 0;
  std::poisson_distribution<int> dist(rho);
  return dist(rng);
}

template <class Weight>
PointMeasure sample_poisson_impl(MeasureFamily family, double rho, const Box& box, std::uint64_t seed,
                                 Weight&& weight) {
  if (!finite_nonneg(rho)) throw std::invalid_argument("sample_poisson: rho must be finite and >= 0");
  std::vector<double> pos;
  std::vector<double> w;
  const int d = box.dim();
  for (std::size_t c = 0; c < box.cell_count(); ++c) {
    const auto cell = box.cell_at(c);
    auto rng = cell_stream(seed, cell);
    const int count = poisson_count(rho, rng);
    for (int a = 0; a < count; ++a) {
      for (int i = 0; i < d; ++i) pos.push_back(uniform_in_cell(cell[i], rng));
      w.push_back(weight(rng));
    }
  }
  return PointMeasure(box, seed, family, std::move(pos), std::move(w));
}

}  // namespace

std::string to_string(MeasureFamily f) {
  switch (f) {
    case MeasureFamily::poisson: return "poisson";
    case MeasureFamily::displacement: return "displacement";
    case MeasureFamily::compound_poisson: return "compound_poisson";
    case MeasureFamily::compound_displacement: return "compound_displacement";
    case MeasureFamily::periodic: return "periodic";
  }
  return "unknown";
}

MeasureFamily measure_family_from_string(const std::string& s) {
  if (s == "poisson") return MeasureFamily::poisson;
  if (s == "displacement") return MeasureFamily::displacement;
  if (s == "compound_poisson") return MeasureFamily::compound_poisson;
  if (s == "compound_displacement" || s == "alloy") return MeasureFamily::compound_displacement;
  if (s == "periodic") return MeasureFamily::periodic;
  throw std::invalid_argument("unknown measure family '" + s + "'");
}

WeightLaw::WeightLaw(Kind kind, double a, double b) : kind_(kind), a_(a), b_(b) {}

WeightLaw WeightLaw::constant(double c) {
  if (!(finite_nonneg(c) && c > 0.0)) throw std::invalid_argument("WeightLaw::constant: c must be > 0");
  return WeightLaw(Kind::constant, c, 0.0);
}

WeightLaw WeightLaw::exponential(double mean) {
  if (!(finite_nonneg(mean) && mean > 0.0)) throw std::invalid_argument("WeightLaw::exponential: mean must be > 0");
  return WeightLaw(Kind::exponential, mean, 0.0);
}

WeightLaw WeightLaw::uniform(double a, double b) {
  if (!finite_nonneg(a) || !finite_nonneg(b) || !(b > a)) {
    throw std::invalid_argument("WeightLaw::uniform: need 0 <= a < b");
  }
  return WeightLaw(Kind::uniform, a, b);
}

WeightLaw WeightLaw::bernoulli_scaled(double p, double c) {
  if (!(p > 0.0 && p <= 1.0) || !(finite_nonneg(c) && c > 0.0)) {
    throw std::invalid_argument("WeightLaw::bernoulli_scaled: need 0 < p <= 1 and c > 0");
  }
  return WeightLaw(Kind::bernoulli_scaled, p, c);
}

double WeightLaw::mean() const noexcept {
  switch (kind_) {
    case Kind::constant: return a_;
    case Kind::exponential: return a_;
    case Kind::uniform: return 0.5 * (a_ + b_);
    case Kind::bernoulli_scaled: return a_ * b_;
  }
  return 0.0;
}

double WeightLaw::cdf_below(double eps) const noexcept {
  switch (kind_) {
    case Kind::constant: return eps > a_ ? 1.0 : 0.0;
    case Kind::exponential: return eps <= 0.0 ? 0.0 : -std::expm1(-eps / a_);
    case Kind::uniform: return std::clamp((eps - a_) / (b_ - a_), 0.0, 1.0);
    case Kind::bernoulli_scaled: return eps <= 0.0 ? 0.0 : (eps > b_ ? 1.0 : 1.0 - a_);
  }
  return 0.0;
}

bool WeightLaw::has_small_mass() const noexcept {
  switch (kind_) {
    case Kind::constant: return false;
    case Kind::exponential: return true;
    case Kind::uniform: return a_ == 0.0;
    case Kind::bernoulli_scaled: return a_ < 1.0;
  }
  return false;
}

double WeightLaw::sample(CounterRng& rng) const {
  switch (kind_) {
    case Kind::constant: return a_;
    case Kind::exponential: return -a_ * std::log1p(-rng.uniform());
    case Kind::uniform: return a_ + (b_ - a_) * rng.uniform();
    case Kind::bernoulli_scaled: return rng.uniform() < a_ ? b_ : 0.0;
  }
  return 0.0;
}

std::string WeightLaw::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::constant: os << "constant(" << a_ << ")"; break;
    case Kind::exponential: os << "exponential(" << a_ << ")"; break;
    case Kind::uniform: os << "uniform(" << a_ << "," << b_ << ")"; break;
    case Kind::bernoulli_scaled: os << "bernoulli_scaled(" << a_ << "," << b_ << ")"; break;
  }
  return os.str();
}

double MeasureConfig::mean_cell_mass() const noexcept {
  switch (family) {
    case MeasureFamily::poisson: return rho;
    case MeasureFamily::compound_poisson: return rho * weights.mean();
    case MeasureFamily::displacement: return 1.0;
    case MeasureFamily::compound_displacement: return weights.mean();
    case MeasureFamily::periodic: return weights.mean();
  }
  return 0.0;
}

void MeasureConfig::validate() const {
  if (family == MeasureFamily::poisson || family == MeasureFamily::compound_poisson) {
    if (!finite_nonneg(rho)) throw std::invalid_argument("measure.rho must be finite and >= 0");
  }
}

PointMeasure::PointMeasure(Box box, std::uint64_t seed, MeasureFamily family, std::vector<double> positions,
                           std::vector<double> weights)
    : box_(std::move(box)), seed_(seed), family_(family), positions_(std::move(positions)), weights_(std::move(weights)) {
  const auto d = static_cast<std::size_t>(box_.dim());
  if (positions_.size() != weights_.size() * d) throw std::invalid_argument("PointMeasure: positions/weights size mismatch");
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (!finite_nonneg(weights_[i])) throw std::invalid_argument("PointMeasure: weights must be finite and >= 0");
    if (!box_.contains_point(position(i))) throw std::invalid_argument("PointMeasure: atom outside box");
  }
}

double PointMeasure::total_weight() const noexcept { return kahan_total(weights_); }

PointMeasure sample_poisson(double rho, const Box& box, std::uint64_t seed) {
  return sample_poisson_impl(MeasureFamily::poisson, rho, box, seed, [](CounterRng&) { return 1.0; });
}

PointMeasure sample_compound_poisson(double rho, const WeightLaw& weights, const Box& box, std::uint64_t seed) {
  return sample_poisson_impl(MeasureFamily::compound_poisson, rho, box, seed,
                             [&](CounterRng& rng) { return weights.sample(rng); });
}

PointMeasure sample_displacement(const WeightLaw& weights, const Box& box, std::uint64_t seed, bool displaced) {
  const int d = box.dim();
  std::vector<double> pos;
  std::vector<double> w;
  pos.reserve(box.cell_count() * static_cast<std::size_t>(d));
  w.reserve(box.cell_count());
  for (std::size_t c = 0; c < box.cell_count(); ++c) {
    const auto cell = box.cell_at(c);
    auto rng = cell_stream(seed, cell);
    for (int i = 0; i < d; ++i) {
      pos.push_back(displaced ? uniform_in_cell(cell[i], rng) : static_cast<double>(cell[i]));
    }
    w.push_back(weights.sample(rng));
  }
  MeasureFamily family = MeasureFamily::compound_displacement;
  if (!displaced) {
    family = MeasureFamily::periodic;
  } else if (weights.kind() == WeightLaw::Kind::constant && weights.a() == 1.0) {
    family = MeasureFamily::displacement;
  }
  return PointMeasure(box, seed, family, std::move(pos), std::move(w));
}

PointMeasure sample_measure(const MeasureConfig& cfg, const Box& box, std::uint64_t seed) {
  cfg.validate();
  switch (cfg.family) {
    case MeasureFamily::poisson: return sample_poisson(cfg.rho, box, seed);
    case MeasureFamily::compound_poisson: return sample_compound_poisson(cfg.rho, cfg.weights, box, seed);
    case MeasureFamily::displacement: return sample_displacement(WeightLaw::constant(1.0), box, seed, true);
    case MeasureFamily::compound_displacement: return sample_displacement(cfg.weights, box, seed, true);
    case MeasureFamily::periodic: return sample_displacement(cfg.weights, box, seed, false);
  }
  throw std::invalid_argument("sample_measure: unknown family");
}

CellMassMap::CellMassMap(Box box, std::vector<double> masses) : box_(std::move(box)), masses_(std::move(masses)) {
  if (masses_.size() != box_.cell_count()) throw std::invalid_argument("CellMassMap: size mismatch");
}

double CellMassMap::total() const noexcept { return kahan_total(masses_); }

std::vector<int> cell_of(std::span<const double> x) {
  std::vector<int> cell(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) cell[i] = static_cast<int>(std::floor(x[i]));
  return cell;
}

CellMassMap cell_masses(const PointMeasure& m) {
  std::vector<KahanSum> acc(m.box().cell_count());
  for (std::size_t i = 0; i < m.atom_count(); ++i) {
    acc[m.box().flat_index(cell_of(m.position(i)))].add(m.weight(i));
  }
  std::vector<double> masses(acc.size());
  for (std::size_t c = 0; c < acc.size(); ++c) masses[c] = acc[c].value();
  return CellMassMap(m.box(), std::move(masses));
}

PointMeasure regularize(const PointMeasure& m, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("regularize: h must be finite and > 0");
  const auto masses = cell_masses(m);
  std::vector<double> w(m.weights().begin(), m.weights().end());
  for (std::size_t i = 0; i < m.atom_count(); ++i) {
    const double M = masses[m.box().flat_index(cell_of(m.position(i)))];
    if (M > h) w[i] *= h / M;
  }
  return PointMeasure(m.box(), m.seed(), m.family(), std::vector<double>(m.positions().begin(), m.positions().end()),
                      std::move(w));
}

ProportionEstimate estimate_small_mass_prob(const MeasureConfig& cfg, int dim, double eps, std::size_t n,
                                            std::uint64_t seed) {
  if (!(eps > 0.0)) throw std::invalid_argument("estimate_small_mass_prob: eps must be > 0");
  if (n < 1000) throw std::invalid_argument("estimate_small_mass_prob: need n >= 1000 draws");
  const Box unit = Box::cube(dim, 0, 1);
  std::size_t hits = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (sample_measure(cfg, unit, derive_seed(seed, k)).total_weight() < eps) ++hits;
  }
  return wilson_interval(hits, n);
}

SmallMassExponent fit_small_mass_exponent(const MeasureConfig& cfg, int dim, std::span<const double> eps_grid,
                                          std::size_t n, std::uint64_t seed) {
  SmallMassExponent out;
  std::vector<double> lx, ly;
  for (double eps : eps_grid) {
    // Common random numbers across eps keep the estimates monotone.
    auto p = estimate_small_mass_prob(cfg, dim, eps, n, seed);
    out.eps.push_back(eps);
    out.probabilities.push_back(p);
    if (p.successes > 0) {
      lx.push_back(std::log(eps));
      ly.push_back(std::log(p.p));
    }
  }
  if (lx.empty()) {
    out.violated = true;
    out.kappa = std::numeric_limits<double>::infinity();
    out.diagnostic = "assumption (iv) empirically violated: no small-mass events observed";
    return out;
  }
  if (lx.size() == 1) {
    out.kappa = ly[0] / lx[0];
    out.diagnostic = "single usable eps; kappa from log P / log eps";
    return out;
  }
  out.kappa = least_squares(lx, ly).slope;
  out.diagnostic = "ok";
  return out;
}

Correlation mixing_correlation(const MeasureConfig& cfg, std::span<const int> lag, std::size_t n, std::uint64_t seed) {
  if (std::all_of(lag.begin(), lag.end(), [](int v) { return v == 0; })) {
    throw std::invalid_argument("mixing_correlation: lag must be nonzero");
  }
  if (n < 10000) throw std::invalid_argument("mixing_correlation: need n >= 10^4 draws");
  const int d = static_cast<int>(lag.size());
  std::vector<int> lo(d), hi(d), origin(d, 0);
  for (int i = 0; i < d; ++i) {
    lo[i] = std::min(0, lag[i]);
    hi[i] = std::max(0, lag[i]) + 1;
  }
  const Box box(lo, hi);
  const std::size_t i0 = box.flat_index(origin);
  const std::size_t i1 = box.flat_index(lag);
  std::vector<double> a(n), b(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto masses = cell_masses(sample_measure(cfg, box, derive_seed(seed, k)));
    a[k] = masses[i0];
    b[k] = masses[i1];
  }
  return pearson(a, b);
}

IntensityReport empirical_intensity(const MeasureConfig& cfg, const Box& box, std::size_t n, std::uint64_t seed) {
  if (n < 100) throw std::invalid_argument("empirical_intensity: need n >= 100 draws");
  const std::size_t cells = box.cell_count();
  std::vector<std::vector<double>> samples(cells, std::vector<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    const auto masses = cell_masses(sample_measure(cfg, box, derive_seed(seed, k)));
    for (std::size_t c = 0; c < cells; ++c) samples[c][k] = masses[c];
  }
  IntensityReport out;
  out.box = box;
  KahanSum grand;
  for (std::size_t c = 0; c < cells; ++c) {
    const auto est = mean_estimate(samples[c]);
    out.mean.push_back(est.mean);
    out.std_error.push_back(est.std_error);
    grand.add(est.mean);
  }
  out.grand_mean = grand.value() / static_cast<double>(cells);
  const auto [mn, mx] = std::minmax_element(out.mean.begin(), out.mean.end());
  out.max_deviation = *mx - *mn;
  for (std::size_t c = 0; c < cells; ++c) {
    const double dev = std::abs(out.mean[c] - out.grand_mean);
    if (out.std_error[c] > 0.0) {
      out.max_z = std::max(out.max_z, dev / out.std_error[c]);
    } else if (dev > 1e-12 * std::max(1.0, out.grand_mean)) {
      out.max_z = std::numeric_limits<double>::infinity();
    }
  }
  return out;
}

void write_measure_jsonl(std::ostream& os, const PointMeasure& m) {
  nlohmann::json header;
  header["family"] = to_string(m.family());
  header["seed"] = m.seed();
  header["box"] = {{"lo", m.box().lo()}, {"hi", m.box().hi()}};
  header["atoms"] = m.atom_count();
  os << header.dump() << '\n';
  for (std::size_t i = 0; i < m.atom_count(); ++i) {
    const auto p = m.position(i);
    nlohmann::json atom;
    atom["x"] = std::vector<double>(p.begin(), p.end());
    atom["w"] = m.weight(i);
    os << atom.dump() << '\n';
  }
}

PointMeasure read_measure_jsonl(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("read_measure_jsonl: missing header");
  const auto header = nlohmann::json::parse(line);
  Box box(header.at("box").at("lo").get<std::vector<int>>(), header.at("box").at("hi").get<std::vector<int>>());
  std::vector<double> pos, w;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto atom = nlohmann::json::parse(line);
    for (double x : atom.at("x")) pos.push_back(x);
    w.push_back(atom.at("w").get<double>());
  }
  return PointMeasure(std::move(box), header.at("seed").get<std::uint64_t>(),
                      measure_family_from_string(header.at("family").get<std::string>()), std::move(pos), std::move(w));
}

}  // namespace lifshits
