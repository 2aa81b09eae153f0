#include "lifshits/impurity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "lifshits/stats.hpp"

namespace lifshits {

namespace {

void check_shape(const std::vector<int>& dims, const std::vector<double>& alphas) {
  if (dims.empty() || dims.size() != alphas.size()) {
    throw std::invalid_argument("AnisotropyProfile: need one exponent per block");
  }
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (dims[k] < 1) throw std::invalid_argument("AnisotropyProfile: block dimensions must be positive");
    if (std::isnan(alphas[k]) || !(alphas[k] > 0.0)) {
      throw std::invalid_argument("AnisotropyProfile: exponents must be positive or infinite");
    }
  }
}

std::string format_alpha(double a) {
  if (std::isinf(a)) return "inf";
  std::ostringstream os;
  os << a;
  return os.str();
}

// Volume element of the max-norm sphere of radius r in R^n, divided by r^(n-1).
double shell_factor(int n) { return n * std::pow(2.0, n); }

}  // namespace

AnisotropyProfile::AnisotropyProfile(std::vector<int> dims, std::vector<double> alphas, bool check_gamma)
    : dims_(std::move(dims)), alphas_(std::move(alphas)) {
  check_shape(dims_, alphas_);
  if (check_gamma && !(gamma() < 1.0)) {
    throw std::invalid_argument("AnisotropyProfile: gamma = sum d_k/alpha_k must be < 1 (got " +
                                std::to_string(gamma()) + ")");
  }
}

AnisotropyProfile AnisotropyProfile::make(std::vector<int> dims, std::vector<double> alphas) {
  return AnisotropyProfile(std::move(dims), std::move(alphas), true);
}

AnisotropyProfile AnisotropyProfile::unchecked(std::vector<int> dims, std::vector<double> alphas) {
  return AnisotropyProfile(std::move(dims), std::move(alphas), false);
}

AnisotropyProfile AnisotropyProfile::isotropic(int d, double alpha) { return make({d}, {alpha}); }

int AnisotropyProfile::dim() const noexcept {
  int d = 0;
  for (int n : dims_) d += n;
  return d;
}

int AnisotropyProfile::block_offset(int k) const {
  if (k < 0 || k >= blocks()) throw std::out_of_range("AnisotropyProfile: block index");
  int off = 0;
  for (int i = 0; i < k; ++i) off += dims_[i];
  return off;
}

double AnisotropyProfile::gamma_k(int k) const {
  const double a = alphas_.at(k);
  return std::isinf(a) ? 0.0 : dims_[k] / a;
}

double AnisotropyProfile::gamma() const {
  double g = 0.0;
  for (int k = 0; k < blocks(); ++k) g += gamma_k(k);
  return g;
}

double AnisotropyProfile::block_norm(std::span<const double> x, int k) const {
  const int off = block_offset(k);
  double n = 0.0;
  for (int i = 0; i < dims_[k]; ++i) n = std::max(n, std::abs(x[off + i]));
  return n;
}

std::string AnisotropyProfile::describe() const {
  std::ostringstream os;
  os << "d=(";
  for (int k = 0; k < blocks(); ++k) os << (k ? "," : "") << dims_[k];
  os << ") alpha=(";
  for (int k = 0; k < blocks(); ++k) os << (k ? "," : "") << format_alpha(alphas_[k]);
  os << ')';
  return os.str();
}

double block_power(double t, double alpha) noexcept {
  t = std::abs(t);
  if (std::isinf(alpha)) return t <= 1.0 ? 0.0 : kInf;
  return std::pow(t, alpha);
}

ImpurityPotential::ImpurityPotential(AnisotropyProfile profile, Family family, double f0, double r, Callback f,
                                     EnvelopeMetadata meta)
    : profile_(std::move(profile)), family_(family), r_(r), callback_(std::move(f)), meta_(meta) {
  meta_.f0 = f0;
}

ImpurityPotential ImpurityPotential::algebraic(AnisotropyProfile profile, double f0) {
  if (!(f0 > 0.0) || !std::isfinite(f0)) throw std::invalid_argument("algebraic potential: f0 must be positive");
  EnvelopeMetadata meta;
  // Lower envelope with f_u = f0/4: |y_k - x_k| <= |x_k| + 1 on the cell and
  // (t+1)^a <= 2 t^a once t >= s_k = 1/(2^{1/a} - 1).
  double extra = 1.0;
  double alpha_min = kInf;
  int finite_blocks = 0;
  for (int k = 0; k < profile.blocks(); ++k) {
    const double a = profile.alpha(k);
    if (std::isinf(a)) continue;
    ++finite_blocks;
    const double s = 1.0 / (std::pow(2.0, 1.0 / a) - 1.0);
    extra += 2.0 * std::pow(s, a);
    alpha_min = std::min(alpha_min, a);
  }
  meta.f_u = f0 / 4.0;
  meta.radius = finite_blocks ? std::max(1.0, std::pow(extra / 2.0, 1.0 / alpha_min)) : 1.0;
  meta.f_cell = f0 / (1.0 + finite_blocks);
  meta.support = finite_blocks ? kInf : 1.0;
  return ImpurityPotential(std::move(profile), Family::algebraic, f0, 0.0, {}, meta);
}

ImpurityPotential ImpurityPotential::box_indicator(std::vector<int> dims, double f0, double r) {
  if (!(f0 > 0.0) || !std::isfinite(f0)) throw std::invalid_argument("box potential: f0 must be positive");
  if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("box potential: r must be positive");
  std::vector<double> alphas(dims.size(), kInf);
  auto profile = AnisotropyProfile::make(std::move(dims), std::move(alphas));
  EnvelopeMetadata meta;
  meta.radius = r;
  meta.f_u = 0.0;
  meta.f_cell = r >= 1.0 ? f0 : 0.0;
  meta.support = r;
  return ImpurityPotential(std::move(profile), Family::box_indicator, f0, r, {}, meta);
}

ImpurityPotential ImpurityPotential::custom(AnisotropyProfile profile, Callback f, EnvelopeMetadata meta) {
  if (!f) throw std::invalid_argument("custom potential: callback required");
  if (!(meta.f0 > 0.0)) throw std::invalid_argument("custom potential: metadata f0 must be positive");
  const double f0 = meta.f0;
  return ImpurityPotential(std::move(profile), Family::custom, f0, 0.0, std::move(f), meta);
}

double ImpurityPotential::operator()(std::span<const double> x) const {
  switch (family_) {
    case Family::algebraic: {
      double denom = 1.0;
      for (int k = 0; k < profile_.blocks(); ++k) {
        denom += block_power(profile_.block_norm(x, k), profile_.alpha(k));
        if (std::isinf(denom)) return 0.0;
      }
      return meta_.f0 / denom;
    }
    case Family::box_indicator: {
      for (double xi : x) {
        if (std::abs(xi) > r_) return 0.0;
      }
      return meta_.f0;
    }
    case Family::custom:
      return callback_(x);
  }
  return 0.0;
}

std::string ImpurityPotential::describe() const {
  std::ostringstream os;
  os << to_string(family_) << "(f0=" << meta_.f0;
  if (family_ == Family::box_indicator) os << ",r=" << r_;
  os << ") " << profile_.describe();
  return os.str();
}

std::string to_string(ImpurityPotential::Family f) {
  switch (f) {
    case ImpurityPotential::Family::algebraic: return "algebraic";
    case ImpurityPotential::Family::box_indicator: return "box_indicator";
    case ImpurityPotential::Family::custom: return "custom";
  }
  return "?";
}

double eval_f(const ImpurityPotential& p, std::span<const double> x) {
  if (static_cast<int>(x.size()) != p.dim()) throw std::invalid_argument("eval_f: dimension mismatch");
  return p(x);
}

QuadResult marginal(const ImpurityPotential& p, int k, std::span<const double> x_k, const QuadratureSpec& spec) {
  const auto& prof = p.profile();
  if (prof.blocks() != 2) throw std::invalid_argument("marginal: requires m = 2 blocks");
  if (k < 0 || k > 1) throw std::out_of_range("marginal: block index");
  if (static_cast<int>(x_k.size()) != prof.block_dim(k)) throw std::invalid_argument("marginal: x_k dimension");
  const int o = 1 - k;
  const int d_o = prof.block_dim(o);
  double norm = 0.0;
  for (double v : x_k) norm = std::max(norm, std::abs(v));

  QuadResult out;
  switch (p.family()) {
    case ImpurityPotential::Family::box_indicator: {
      if (norm <= p.radius()) out.value = p.f0() * std::pow(2.0 * p.radius(), d_o);
      return out;
    }
    case ImpurityPotential::Family::algebraic: {
      const double A = 1.0 + block_power(norm, prof.alpha(k));
      if (std::isinf(A)) return out;
      const double a_o = prof.alpha(o);
      if (std::isinf(a_o)) {
        out.value = p.f0() / A * std::pow(2.0, d_o);
        return out;
      }
      if (a_o <= d_o) {
        out.value = kInf;
        out.divergent = true;
        return out;
      }
      // Radial integral over the complementary block in max-norm shells.
      const double c = shell_factor(d_o);
      const double f0 = p.f0();
      auto g = [&](double r) { return f0 * c * std::pow(r, d_o - 1) / (A + std::pow(r, a_o)); };
      const double s = std::pow(A, 1.0 / a_o);
      const double pts[] = {0.0, s, 4.0 * s, kInf};
      return integrate_pieces(g, pts, spec);
    }
    case ImpurityPotential::Family::custom: {
      if (d_o != 1) throw std::invalid_argument("marginal: custom potentials need a one-dimensional complement");
      std::vector<double> x(prof.dim());
      const int off_k = prof.block_offset(k);
      const int off_o = prof.block_offset(o);
      for (int i = 0; i < prof.block_dim(k); ++i) x[off_k + i] = x_k[i];
      auto g = [&](double t) {
        auto y = x;
        y[off_o] = t;
        return p(y);
      };
      const double s = std::max(1.0, p.metadata().radius);
      const double pts[] = {-kInf, -s, 0.0, s, kInf};
      return integrate_pieces(g, pts, spec);
    }
  }
  return out;
}

double marginal_decay_exponent(const AnisotropyProfile& profile, int k) {
  if (profile.blocks() != 2) throw std::invalid_argument("marginal_decay_exponent: requires m = 2 blocks");
  if (k < 0 || k > 1) throw std::out_of_range("marginal_decay_exponent: block index");
  const double a = profile.alpha(k);
  const double g_other = profile.gamma_k(1 - k);
  if (std::isinf(a)) return kInf;
  return a * (1.0 - g_other);
}

namespace {

// Integral of f over {|x| > L} for an m = 1 profile.
QuadResult tail_mass_single(const ImpurityPotential& p, double L, const QuadratureSpec& spec) {
  const auto& prof = p.profile();
  const int d = prof.dim();
  QuadResult out;
  switch (p.family()) {
    case ImpurityPotential::Family::box_indicator: {
      const double r = p.radius();
      if (L < r) out.value = p.f0() * (std::pow(2.0 * r, d) - std::pow(2.0 * L, d));
      return out;
    }
    case ImpurityPotential::Family::algebraic: {
      const double a = prof.alpha(0);
      const double f0 = p.f0();
      const double c = shell_factor(d);
      if (std::isinf(a)) {
        if (L < 1.0) out.value = f0 * (std::pow(2.0, d) - std::pow(2.0 * L, d));
        return out;
      }
      if (a <= d) {
        out.value = kInf;
        out.divergent = true;
        return out;
      }
      auto g = [&](double r) { return f0 * c * std::pow(r, d - 1) / (1.0 + std::pow(r, a)); };
      const double lo = std::max(L, 0.0);
      const double mid = std::max(lo, 1.0);
      const double pts[] = {lo, mid, 4.0 * mid, kInf};
      return integrate_pieces(g, pts, spec);
    }
    case ImpurityPotential::Family::custom: {
      if (d != 1) throw std::invalid_argument("tail_mass: custom potentials need d = 1 when m = 1");
      auto g = [&](double t) {
        const double a[] = {t};
        const double b[] = {-t};
        return p(a) + p(b);
      };
      const double lo = std::max(L, 0.0);
      const double mid = std::max(lo, std::max(1.0, p.metadata().radius));
      const double pts[] = {lo, mid, kInf};
      return integrate_pieces(g, pts, spec);
    }
  }
  return out;
}

}  // namespace

QuadResult tail_mass(const ImpurityPotential& p, int k, double L, const QuadratureSpec& spec) {
  if (!(L >= 0.0)) throw std::invalid_argument("tail_mass: L must be nonnegative");
  const auto& prof = p.profile();
  if (prof.blocks() == 1) return tail_mass_single(p, L, spec);
  if (prof.blocks() != 2) throw std::invalid_argument("tail_mass: requires m <= 2 blocks");
  if (k < 0 || k > 1) throw std::out_of_range("tail_mass: block index");
  const int d_k = prof.block_dim(k);
  const int d_o = prof.block_dim(1 - k);
  QuadResult out;

  if (p.family() == ImpurityPotential::Family::box_indicator) {
    const double r = p.radius();
    if (L < r) out.value = p.f0() * std::pow(2.0 * r, d_o) * (std::pow(2.0 * r, d_k) - std::pow(2.0 * L, d_k));
    return out;
  }
  if (p.family() == ImpurityPotential::Family::algebraic) {
    const double a = prof.alpha(k);
    if (prof.gamma() >= 1.0) {
      out.value = kInf;
      out.divergent = true;
      return out;
    }
    // f^{(k)} depends on x_k only through |x_k|, so integrate over max-norm shells.
    const double c = shell_factor(d_k);
    std::vector<double> xk(d_k, 0.0);
    bool divergent = false;
    double inner_error = 0.0;
    auto g = [&](double r) {
      xk[0] = r;
      const auto q = marginal(p, k, xk, spec);
      divergent = divergent || q.divergent;
      inner_error = std::max(inner_error, q.error);
      return c * std::pow(r, d_k - 1) * q.value;
    };
    const double lo = L;
    const double hi = std::isinf(a) ? 1.0 : kInf;
    if (lo >= hi) return out;
    std::vector<double> pts{lo};
    const double mid = std::max(lo, 1.0);
    if (mid > lo && mid < hi) pts.push_back(mid);
    if (std::isfinite(hi)) {
      pts.push_back(hi);
    } else {
      pts.push_back(4.0 * mid);
      pts.push_back(kInf);
    }
    out = integrate_pieces(g, pts, spec);
    out.divergent = out.divergent || divergent;
    return out;
  }
  // custom: one-dimensional block k.
  if (d_k != 1) throw std::invalid_argument("tail_mass: custom potentials need d_k = 1");
  bool divergent = false;
  auto g = [&](double t) {
    const double a[] = {t};
    const double b[] = {-t};
    const auto qa = marginal(p, k, a, spec);
    const auto qb = marginal(p, k, b, spec);
    divergent = divergent || qa.divergent || qb.divergent;
    return qa.value + qb.value;
  };
  const double mid = std::max(L, std::max(1.0, p.metadata().radius));
  const double pts[] = {L, mid, kInf};
  out = integrate_pieces(g, pts, spec);
  out.divergent = out.divergent || divergent;
  return out;
}

QuadResult shifted_tail_mass(const ImpurityPotential& p, int k, double L, double shift, const QuadratureSpec& spec) {
  const auto& prof = p.profile();
  if (prof.blocks() != 2 || prof.block_dim(k) != 1) {
    throw std::invalid_argument("shifted_tail_mass: requires m = 2 and a one-dimensional block");
  }
  if (!(L > 0.0) || !(shift >= 0.0)) throw std::invalid_argument("shifted_tail_mass: bad radii");
  // Integral over {|x| > L} of F(x - y) = int_{L-y}^inf F(u) du + int_{L+y}^inf F(-u) du.
  auto tail_at = [&](double y, bool& divergent) {
    auto plus = [&](double u) {
      const double a[] = {u};
      const auto q = marginal(p, k, a, spec);
      divergent = divergent || q.divergent;
      return q.value;
    };
    auto minus = [&](double u) {
      const double a[] = {-u};
      const auto q = marginal(p, k, a, spec);
      divergent = divergent || q.divergent;
      return q.value;
    };
    auto pieces = [&](double lo, auto&& fn) {
      std::vector<double> pts{lo};
      if (lo < 0.0) pts.push_back(0.0);
      const double mid = std::max(lo, 0.0) + 1.0;
      pts.push_back(mid);
      pts.push_back(4.0 * mid);
      pts.push_back(kInf);
      return integrate_pieces(fn, pts, spec).value;
    };
    return pieces(L - y, plus) + pieces(L + y, minus);
  };
  QuadResult out;
  const int samples = 21;
  for (int i = 0; i < samples; ++i) {
    const double y = -shift + 2.0 * shift * i / (samples - 1);
    bool divergent = false;
    const double v = tail_at(y, divergent);
    out.divergent = out.divergent || divergent;
    out.value = std::max(out.value, v);
  }
  return out;
}

BirmanSolomyakReport birman_solomyak_partial_sums(const ImpurityPotential& p, double p_int,
                                                  std::span<const int> radii) {
  const int d = p.dim();
  if (d <= 3 ? p_int != 2.0 : !(p_int > d / 2.0)) {
    throw std::invalid_argument("birman_solomyak_partial_sums: need p = 2 for d <= 3 and p > d/2 otherwise");
  }
  if (radii.empty()) throw std::invalid_argument("birman_solomyak_partial_sums: empty radius sequence");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (radii[i] < 0 || (i && radii[i] <= radii[i - 1])) {
      throw std::invalid_argument("birman_solomyak_partial_sums: radii must be ascending and nonnegative");
    }
  }
  const int rmax = radii.back();
  std::vector<KahanSum> shells(rmax + 1);
  std::vector<int> j(d, -rmax);
  std::vector<double> x(d);
  for (;;) {
    int shell = 0;
    for (int v : j) shell = std::max(shell, std::abs(v));
    const double integral = integrate_unit_cube(
        [&](std::span<const double> u) {
          for (int i = 0; i < d; ++i) x[i] = u[i] - j[i];
          return std::pow(std::abs(p(x)), p_int);
        },
        d);
    shells[shell].add(std::pow(integral, 1.0 / p_int));
    int axis = 0;
    while (axis < d && ++j[axis] > rmax) {
      j[axis] = -rmax;
      ++axis;
    }
    if (axis == d) break;
  }

  BirmanSolomyakReport rep;
  rep.radii.assign(radii.begin(), radii.end());
  KahanSum running;
  int next = 0;
  for (int R = 0; R <= rmax; ++R) {
    running.add(shells[R].value());
    if (R == radii[next]) {
      rep.partial_sums.push_back(running.value());
      rep.increments.push_back(next ? rep.partial_sums[next] - rep.partial_sums[next - 1] : running.value());
      ++next;
    }
  }
  // Shell sums: decay faster than 1/R means a convergent series.
  std::vector<double> lx, ly;
  bool trailing_zero = true;
  for (int R = std::max(1, rmax / 2); R <= rmax; ++R) {
    const double s = shells[R].value();
    if (s > 0.0) {
      trailing_zero = false;
      lx.push_back(std::log(static_cast<double>(R)));
      ly.push_back(std::log(s));
    }
  }
  if (trailing_zero) {
    rep.convergent = true;
    rep.increment_slope = -kInf;
    rep.diagnostic = "convergent: shells vanish beyond the support";
  } else if (lx.size() < 3) {
    rep.diagnostic = "inconclusive: too few radii";
  } else {
    const auto fit = least_squares(lx, ly);
    rep.increment_slope = fit.slope;
    if (fit.slope < -1.1) {
      rep.convergent = true;
      rep.diagnostic = "convergent";
    } else if (fit.slope > -0.9) {
      rep.diagnostic = "divergent";
    } else {
      rep.diagnostic = "inconclusive: shell decay close to 1/R";
    }
  }
  return rep;
}

EnvelopeFit fit_envelope(const ImpurityPotential& p, double r_min, double r_max, int samples_per_axis) {
  if (!(r_min > 0.0) || !(r_max >= r_min) || samples_per_axis < 2) {
    throw std::invalid_argument("fit_envelope: bad sampling parameters");
  }
  const auto& prof = p.profile();
  const int d = prof.dim();
  EnvelopeFit fit;
  std::vector<double> x(d), y(d);
  std::vector<int> idx(d, 0);
  const int radii = 6;
  for (int ri = 0; ri < radii; ++ri) {
    const double r = r_min * std::pow(r_max / r_min, static_cast<double>(ri) / (radii - 1));
    std::fill(idx.begin(), idx.end(), 0);
    for (;;) {
      double norm = 0.0;
      for (int i = 0; i < d; ++i) {
        x[i] = r * (-1.0 + 2.0 * idx[i] / (samples_per_axis - 1));
        norm = std::max(norm, std::abs(x[i]));
      }
      if (norm >= r * (1.0 - 1e-12)) {
        double denom = 0.0;
        for (int k = 0; k < prof.blocks(); ++k) denom += block_power(prof.block_norm(x, k), prof.alpha(k));
        if (std::isfinite(denom) && denom > 0.0) {
          fit.upper = std::max(fit.upper, p(x) * denom);
          const double avg = integrate_unit_cube(
              [&](std::span<const double> u) {
                for (int i = 0; i < d; ++i) y[i] = u[i] - x[i];
                return p(y);
              },
              d);
          fit.lower = std::min(fit.lower, avg * denom);
          ++fit.points;
        }
      }
      int axis = 0;
      while (axis < d && ++idx[axis] == samples_per_axis) {
        idx[axis] = 0;
        ++axis;
      }
      if (axis == d) break;
    }
  }
  return fit;
}

double PotentialField::max() const noexcept {
  double m = 0.0;
  for (double v : values) m = std::max(m, v);
  return m;
}

double PotentialField::mean() const noexcept {
  return values.empty() ? 0.0 : kahan_total(values) / static_cast<double>(values.size());
}

PotentialField zero_field(const Grid& grid) {
  PotentialField f;
  f.grid = grid;
  f.values.assign(grid.node_count(), 0.0);
  f.provenance.potential = "zero";
  f.provenance.mode = "zero";
  return f;
}

void annotate_truncation(const ImpurityPotential& p, Truncation& t) {
  const auto& prof = p.profile();
  if (static_cast<int>(t.radii.size()) != prof.blocks()) {
    throw std::invalid_argument("truncation: need one radius per block");
  }
  t.total_mass = tail_mass(p, 0, 0.0).value;
  double neglected = 0.0;
  for (int k = 0; k < prof.blocks(); ++k) {
    if (std::isinf(t.radii[k])) continue;
    neglected += tail_mass(p, k, t.radii[k]).value;
  }
  t.neglected_mass = neglected;
}

Truncation default_truncation(const ImpurityPotential& p, double rel_tol, double max_radius) {
  if (!(rel_tol > 0.0)) throw std::invalid_argument("default_truncation: tolerance must be positive");
  const auto& prof = p.profile();
  Truncation t;
  t.tolerance = rel_tol;
  const double support = p.metadata().support;
  const double total = tail_mass(p, 0, 0.0).value;
  for (int k = 0; k < prof.blocks(); ++k) {
    if (std::isfinite(support)) {
      t.radii.push_back(support);
      continue;
    }
    if (p.family() == ImpurityPotential::Family::algebraic && std::isinf(prof.alpha(k))) {
      t.radii.push_back(1.0);
      continue;
    }
    double T = 1.0;
    while (T < max_radius && tail_mass(p, k, T).value > rel_tol * total) T *= 2.0;
    t.radii.push_back(std::min(T, max_radius));
  }
  annotate_truncation(p, t);
  return t;
}

namespace {

// Block-wise distance from point y to the continuous box.
double block_distance(const AnisotropyProfile& prof, const Box& box, std::span<const double> y, int k) {
  const int off = prof.block_offset(k);
  double dist = 0.0;
  for (int i = off; i < off + prof.block_dim(k); ++i) {
    const double lo = box.lo(i);
    const double hi = box.hi(i);
    const double di = y[i] < lo ? lo - y[i] : (y[i] > hi ? y[i] - hi : 0.0);
    dist = std::max(dist, di);
  }
  return dist;
}

// Adds sum_i w_i f(x - y_i) 1{|x_k - y_k| <= T_k for all k} over the
// selected atoms to the field values. The cut is applied to the kernel, so the
// field is the same whichever box it is evaluated on.
void accumulate(const PointMeasure& m, const std::vector<std::size_t>& atoms, const ImpurityPotential& p,
                const Grid& grid, const std::vector<double>& radii, std::vector<double>& values) {
  const auto& prof = p.profile();
  const int d = grid.dim();
  const double a = grid.spacing();
  const double support = p.metadata().support;
  const bool separable = p.family() == ImpurityPotential::Family::algebraic &&
                         std::all_of(prof.dims().begin(), prof.dims().end(), [](int n) { return n == 1; });
  // Per-axis support radius bounding |x_i - y_i| for a nonzero contribution.
  std::vector<double> axis_support(d, support);
  if (p.family() == ImpurityPotential::Family::algebraic) {
    for (int k = 0; k < prof.blocks(); ++k) {
      if (!std::isinf(prof.alpha(k))) continue;
      for (int i = prof.block_offset(k); i < prof.block_offset(k) + prof.block_dim(k); ++i) axis_support[i] = 1.0;
    }
  }
  std::vector<double> axis_cut(d, kInf);
  for (int k = 0; k < prof.blocks(); ++k) {
    for (int i = prof.block_offset(k); i < prof.block_offset(k) + prof.block_dim(k); ++i) {
      axis_cut[i] = radii[k];
      axis_support[i] = std::min(axis_support[i], radii[k]);
    }
  }
  std::vector<int> n_along(d), k_lo(d), k_hi(d);
  for (int i = 0; i < d; ++i) n_along[i] = grid.nodes_along(i);
  std::vector<std::vector<double>> terms(d);
  std::vector<std::size_t> stride(d, 1);
  for (int i = 1; i < d; ++i) stride[i] = stride[i - 1] * static_cast<std::size_t>(n_along[i - 1]);
  std::vector<int> idx(d);
  std::vector<double> diff(d);

  for (std::size_t atom : atoms) {
    const auto y = m.position(atom);
    const double w = m.weight(atom);
    if (w == 0.0) continue;
    bool empty = false;
    for (int i = 0; i < d; ++i) {
      if (std::isinf(axis_support[i])) {
        k_lo[i] = 0;
        k_hi[i] = n_along[i] - 1;
      } else {
        // Nodes x_k = lo + (k + 1/2) a with |x_k - y| <= s, padded by one node.
        const double s = axis_support[i];
        k_lo[i] = std::max(0, static_cast<int>(std::floor((y[i] - s - grid.box().lo(i)) / a - 0.5)) - 1);
        k_hi[i] = std::min(n_along[i] - 1, static_cast<int>(std::ceil((y[i] + s - grid.box().lo(i)) / a - 0.5)) + 1);
      }
      if (k_lo[i] > k_hi[i]) empty = true;
    }
    if (empty) continue;
    if (separable) {
      for (int i = 0; i < d; ++i) {
        terms[i].resize(static_cast<std::size_t>(k_hi[i] - k_lo[i] + 1));
        for (int k = k_lo[i]; k <= k_hi[i]; ++k) {
          const double diff_i = grid.coordinate(i, k) - y[i];
          terms[i][k - k_lo[i]] = std::abs(diff_i) > axis_cut[i] ? kInf : block_power(diff_i, prof.alpha(i));
        }
      }
    }
    for (int i = 0; i < d; ++i) idx[i] = k_lo[i];
    const double wf0 = w * p.f0();
    for (;;) {
      std::size_t flat = 0;
      for (int i = 0; i < d; ++i) flat += static_cast<std::size_t>(idx[i]) * stride[i];
      double v;
      if (separable) {
        double denom = 1.0;
        for (int i = 0; i < d; ++i) denom += terms[i][idx[i] - k_lo[i]];
        v = std::isinf(denom) ? 0.0 : wf0 / denom;
      } else {
        bool inside = true;
        for (int i = 0; i < d; ++i) {
          diff[i] = grid.coordinate(i, idx[i]) - y[i];
          inside = inside && std::abs(diff[i]) <= axis_cut[i];
        }
        v = inside ? w * p(diff) : 0.0;
      }
      values[flat] += v;
      int axis = 0;
      while (axis < d && ++idx[axis] > k_hi[axis]) {
        idx[axis] = k_lo[axis];
        ++axis;
      }
      if (axis == d) break;
    }
  }
}

std::vector<std::size_t> atoms_within(const PointMeasure& m, const ImpurityPotential& p, const Box& box,
                                      const std::vector<double>& radii) {
  const auto& prof = p.profile();
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < m.atom_count(); ++i) {
    const auto y = m.position(i);
    bool ok = true;
    for (int k = 0; k < prof.blocks() && ok; ++k) {
      if (std::isfinite(radii[k]) && block_distance(prof, box, y, k) > radii[k]) ok = false;
    }
    if (ok) keep.push_back(i);
  }
  return keep;
}

PotentialField make_field(const PointMeasure& m, const ImpurityPotential& p, const Grid& grid, const Truncation& t,
                          const std::vector<std::size_t>& atoms, const std::string& mode) {
  if (m.dim() != p.dim() || grid.dim() != p.dim()) throw std::invalid_argument("potential: dimension mismatch");
  PotentialField field;
  field.grid = grid;
  field.values.assign(grid.node_count(), 0.0);
  accumulate(m, atoms, p, grid, t.radii, field.values);
  field.provenance.seed = m.seed();
  field.provenance.potential = p.describe();
  field.provenance.mode = mode;
  field.provenance.truncation = t.radii;
  if (t.neglected_mass >= 0.0) {
    const double intensity = m.box().volume() > 0.0 ? m.total_weight() / m.box().volume() : 0.0;
    field.provenance.truncation_bound = intensity * t.neglected_mass;
    field.provenance.truncation_warning = t.total_mass > 0.0 && t.neglected_mass > t.tolerance * t.total_mass;
  }
  return field;
}

Truncation resolve(const ImpurityPotential& p, const Truncation& t) {
  if (t.radii.empty()) return default_truncation(p, t.tolerance);
  if (static_cast<int>(t.radii.size()) != p.profile().blocks()) {
    throw std::invalid_argument("truncation: need one radius per block");
  }
  for (double r : t.radii) {
    if (!(r > 0.0)) throw std::invalid_argument("truncation: radii must be positive");
  }
  return t;
}

void require_regularized(const PointMeasure& m, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("cutoff_potential: h must be positive");
  const auto masses = cell_masses(m);
  for (double v : masses.values()) {
    if (v > h * (1.0 + 1e-12)) {
      throw std::invalid_argument("cutoff_potential: measure is not regularized at h = " + std::to_string(h));
    }
  }
}

}  // namespace

PotentialField sample_potential(const PointMeasure& m, const ImpurityPotential& p, const Grid& grid,
                                const Truncation& truncation) {
  const auto t = resolve(p, truncation);
  return make_field(m, p, grid, t, atoms_within(m, p, grid.box(), t.radii), "full");
}

PotentialField sample_potential(const PointMeasure& m, const ImpurityPotential& p, const Grid& grid) {
  return sample_potential(m, p, grid, Truncation{});
}

std::string to_string(CutoffMode m) {
  switch (m) {
    case CutoffMode::qm: return "qm";
    case CutoffMode::qc: return "qc";
    case CutoffMode::classical: return "classical";
  }
  return "?";
}

CutoffMode cutoff_mode_from_string(const std::string& s) {
  if (s == "qm") return CutoffMode::qm;
  if (s == "qc") return CutoffMode::qc;
  if (s == "classical" || s == "cl") return CutoffMode::classical;
  throw std::invalid_argument("unknown cutoff mode: " + s);
}

PotentialField cutoff_potential(const PointMeasure& m, const ImpurityPotential& p, const Grid& grid,
                                const CutoffSpec& spec) {
  const auto& prof = p.profile();
  const int d = p.dim();
  if (m.dim() != d || grid.dim() != d) throw std::invalid_argument("cutoff_potential: dimension mismatch");
  std::vector<double> center = spec.center.empty() ? std::vector<double>(d, 0.0) : spec.center;
  if (static_cast<int>(center.size()) != d) throw std::invalid_argument("cutoff_potential: centre dimension");
  require_regularized(m, spec.h);

  if (spec.mode == CutoffMode::qm) {
    if (!(spec.f_u > 0.0)) throw std::invalid_argument("cutoff_potential: qm mode needs f_u > 0");
    if (spec.f_u > p.metadata().f_cell * (1.0 + 1e-12)) {
      throw std::invalid_argument("cutoff_potential: f_u exceeds inf of f on the unit cell");
    }
    PotentialField field = zero_field(grid);
    field.provenance.seed = m.seed();
    field.provenance.potential = p.describe();
    field.provenance.mode = "qm";
    // x - y in [0,1)^d  <=>  y_i <= x_i < y_i + 1.
    const double a = grid.spacing();
    std::vector<int> k_lo(d), k_hi(d), idx(d);
    std::vector<std::size_t> stride(d, 1);
    for (int i = 1; i < d; ++i) stride[i] = stride[i - 1] * static_cast<std::size_t>(grid.nodes_along(i - 1));
    for (std::size_t atom = 0; atom < m.atom_count(); ++atom) {
      const auto y = m.position(atom);
      bool empty = false;
      for (int i = 0; i < d; ++i) {
        const double lo = grid.box().lo(i);
        k_lo[i] = std::max(0, static_cast<int>(std::ceil((y[i] - lo) / a - 0.5)));
        while (k_lo[i] > 0 && grid.coordinate(i, k_lo[i] - 1) >= y[i]) --k_lo[i];
        while (k_lo[i] < grid.nodes_along(i) && grid.coordinate(i, k_lo[i]) < y[i]) ++k_lo[i];
        k_hi[i] = k_lo[i];
        while (k_hi[i] < grid.nodes_along(i) && grid.coordinate(i, k_hi[i]) < y[i] + 1.0) ++k_hi[i];
        --k_hi[i];
        if (k_lo[i] > k_hi[i]) empty = true;
      }
      if (empty) continue;
      const double v = spec.f_u * m.weight(atom);
      for (int i = 0; i < d; ++i) idx[i] = k_lo[i];
      for (;;) {
        std::size_t flat = 0;
        for (int i = 0; i < d; ++i) flat += static_cast<std::size_t>(idx[i]) * stride[i];
        field.values[flat] += v;
        int axis = 0;
        while (axis < d && ++idx[axis] > k_hi[axis]) {
          idx[axis] = k_lo[axis];
          ++axis;
        }
        if (axis == d) break;
      }
    }
    return field;
  }

  const auto t = resolve(p, spec.truncation);
  auto candidates = atoms_within(m, p, grid.box(), t.radii);
  std::vector<std::size_t> keep;
  auto dist = [&](std::span<const double> y, int k) {
    const int off = prof.block_offset(k);
    double n = 0.0;
    for (int i = off; i < off + prof.block_dim(k); ++i) n = std::max(n, std::abs(y[i] - center[i]));
    return n;
  };
  if (spec.mode == CutoffMode::qc) {
    if (spec.block < 0 || spec.block >= prof.blocks()) throw std::invalid_argument("cutoff_potential: qc block index");
    if (!(spec.R >= 0.0)) throw std::invalid_argument("cutoff_potential: qc needs R >= 0");
    for (std::size_t i : candidates) {
      if (dist(m.position(i), spec.block) > spec.R) keep.push_back(i);
    }
  } else {
    if (static_cast<int>(spec.thresholds.size()) != prof.blocks()) {
      throw std::invalid_argument("cutoff_potential: classical mode needs one threshold per block");
    }
    for (double th : spec.thresholds) {
      if (!(th >= 0.0)) throw std::invalid_argument("cutoff_potential: thresholds must be nonnegative");
    }
    for (std::size_t i : candidates) {
      bool far = true;
      for (int k = 0; k < prof.blocks() && far; ++k) far = dist(m.position(i), k) > spec.thresholds[k];
      if (far) keep.push_back(i);
    }
  }
  return make_field(m, p, grid, t, keep, to_string(spec.mode));
}

void write_field_csv(std::ostream& os, const PotentialField& field) {
  nlohmann::json header;
  header["box_lo"] = field.grid.box().lo();
  header["box_hi"] = field.grid.box().hi();
  header["n_per_cell"] = field.grid.n_per_cell();
  header["seed"] = field.provenance.seed;
  header["potential"] = field.provenance.potential;
  header["mode"] = field.provenance.mode;
  header["truncation"] = field.provenance.truncation;
  header["truncation_bound"] = field.provenance.truncation_bound;
  os << header.dump() << '\n';
  os.precision(17);
  for (double v : field.values) os << v << '\n';
}

}  // namespace lifshits
