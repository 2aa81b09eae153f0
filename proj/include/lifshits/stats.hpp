#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lifshits {

/// Neumaier-compensated running sum. Used wherever per-realization results
/// are aggregated so totals do not depend on magnitude ordering.
class KahanSum {
 public:
  void add(double x) noexcept;
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double kahan_total(std::span<const double> xs) noexcept;

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;  // standard error of the mean
  std::size_t n = 0;
};

MeanEstimate mean_estimate(std::span<const double> xs);

/// Binomial proportion with a Wilson score interval.
struct ProportionEstimate {
  double p = 0.0;
  std::size_t successes = 0;
  std::size_t n = 0;
  double lo = 0.0;
  double hi = 0.0;
};

ProportionEstimate wilson_interval(std::size_t successes, std::size_t n, double z = 1.959963984540054);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double r2 = 0.0;
  std::size_t n = 0;
};

/// Ordinary least squares y = intercept + slope * x. Requires n >= 2.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

struct Correlation {
  double r = 0.0;
  double std_error = 0.0;
  bool degenerate = false;  // one of the samples has zero variance
  std::size_t n = 0;
};

Correlation pearson(std::span<const double> x, std::span<const double> y);

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Survival function of the Kolmogorov distribution, P{K > t}.
double kolmogorov_survival(double t);

}  // namespace lifshits
