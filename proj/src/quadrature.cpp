#include "lifshits/quadrature.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace lifshits {

QuadResult integrate(const std::function<double(double)>& f, double a, double b, const QuadratureSpec& spec) {
  QuadResult out;
  if (a == b) return out;
  double err = 0.0;
  double l1 = 0.0;
  out.value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, spec.max_depth, spec.rel_tol,
                                                                           &err, &l1);
  out.error = err;
  if (!std::isfinite(out.value)) out.divergent = true;
  return out;
}

QuadResult integrate_pieces(const std::function<double(double)>& f, std::span<const double> breakpoints,
                            const QuadratureSpec& spec) {
  QuadResult out;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    if (!(breakpoints[i + 1] >= breakpoints[i])) throw std::invalid_argument("integrate_pieces: breakpoints not ascending");
    const auto piece = integrate(f, breakpoints[i], breakpoints[i + 1], spec);
    out.value += piece.value;
    out.error += piece.error;
    out.divergent = out.divergent || piece.divergent;
  }
  return out;
}

double integrate_unit_cube(const std::function<double(std::span<const double>)>& f, int dim, int sub) {
  if (dim < 1 || sub < 1) throw std::invalid_argument("integrate_unit_cube: bad arguments");
  using rule = boost::math::quadrature::gauss<double, 10>;
  // Expand the symmetric rule on [-1, 1] into nodes and weights on [0, 1].
  std::vector<double> nodes, weights;
  const auto& abs = rule::abscissa();
  const auto& wts = rule::weights();
  std::vector<double> ref_x, ref_w;
  for (std::size_t i = 0; i < abs.size(); ++i) {
    ref_x.push_back(abs[i]);
    ref_w.push_back(wts[i]);
    if (abs[i] != 0.0) {
      ref_x.push_back(-abs[i]);
      ref_w.push_back(wts[i]);
    }
  }
  const double h = 1.0 / sub;
  for (int s = 0; s < sub; ++s) {
    for (std::size_t i = 0; i < ref_x.size(); ++i) {
      nodes.push_back((s + 0.5 * (ref_x[i] + 1.0)) * h);
      weights.push_back(0.5 * h * ref_w[i]);
    }
  }
  const std::size_t q = nodes.size();
  std::vector<std::size_t> idx(dim, 0);
  std::vector<double> x(dim);
  double total = 0.0;
  for (;;) {
    double w = 1.0;
    for (int i = 0; i < dim; ++i) {
      x[i] = nodes[idx[i]];
      w *= weights[idx[i]];
    }
    total += w * f(x);
    int axis = 0;
    while (axis < dim && ++idx[axis] == q) {
      idx[axis] = 0;
      ++axis;
    }
    if (axis == dim) break;
  }
  return total;
}

}  // namespace lifshits
