#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace superfractal {

// Running mean and variance (Welford).
class MeanAccumulator {
 public:
  void add(double v);
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const;  // unbiased
  double standard_error() const;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

// Upper tail P(K > x) of the Kolmogorov distribution.
double kolmogorov_q(double x);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);
KsResult ks_one_sample(std::vector<double> data, const std::function<double(double)>& cdf);

// P(chi2_df > stat).
double chi_square_sf(double stat, double df);

// Linear-interpolated empirical quantile, q in [0, 1].
double quantile(std::vector<double> v, double q);

// Spearman rank correlation (average ranks for ties).
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace superfractal
