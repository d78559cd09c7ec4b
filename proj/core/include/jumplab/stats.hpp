#pragma once

#include <functional>
#include <span>
#include <vector>

namespace jumplab {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double halfwidth() const { return 0.5 * (hi - lo); }
};

// Wilson score interval for a binomial proportion at normal quantile z.
Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

struct MeanEstimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

// Mean with standard error, accumulated in input order.
MeanEstimate mean_and_se(std::span<const double> xs);

// sup_x |F_n(x) - F(x)| for a continuous reference CDF. Sorts a copy.
double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf);

// Two-sample KS statistic; ties across samples handled by stepping both ECDFs.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

// Dvoretzky-Kiefer-Wolfowitz half-width at confidence 1 - delta.
double dkw_halfwidth(std::size_t n, double delta = 0.05);

}  // namespace jumplab
