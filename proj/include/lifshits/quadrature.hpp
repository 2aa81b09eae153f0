#pragma once

#include <functional>
#include <span>

namespace lifshits {

struct QuadratureSpec {
  double rel_tol = 1e-10;
  double abs_tol = 1e-300;  // stop refining once the error is below this
  unsigned max_depth = 18;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  bool divergent = false;
};

/// Adaptive 15-point Gauss-Kronrod on [a, b]; either end may be infinite.
QuadResult integrate(const std::function<double(double)>& f, double a, double b, const QuadratureSpec& spec = {});

/// Sum of adaptive integrals over consecutive breakpoints (ascending; the
/// first and last entries may be infinite).
QuadResult integrate_pieces(const std::function<double(double)>& f, std::span<const double> breakpoints,
                            const QuadratureSpec& spec = {});

/// Tensor Gauss-Legendre rule over the unit cube [0,1]^d with `sub`
/// subintervals per axis.
double integrate_unit_cube(const std::function<double(std::span<const double>)>& f, int dim, int sub = 2);

}  // namespace lifshits
