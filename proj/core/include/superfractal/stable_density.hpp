#pragma once

#include <memory>
#include <vector>

namespace superfractal {

// Symmetric alpha-stable density with characteristic function exp(-|xi|^alpha),
// 0.5 <= alpha <= 2. Built once per alpha from an FFT on [-128, 128) with
// periodic images removed; |x| <= 64 is served by cubic Hermite interpolation
// of the corrected samples, |x| > 64 by the convergent/asymptotic series
//   p(x) ~ sum_k a_k |x|^{-alpha k - 1},
//   a_k = (-1)^{k+1} Gamma(alpha k + 1) sin(pi alpha k / 2) / (pi k!).
class UnitStableDensity {
 public:
  explicit UnitStableDensity(double alpha);

  // Shared per-alpha instance; construction happens once per process.
  static std::shared_ptr<const UnitStableDensity> get(double alpha);

  double alpha() const { return alpha_; }
  double pdf(double x) const;
  double dpdf(double x) const;
  double d2pdf(double x) const;
  double cdf(double x) const;
  // P(x < S < y) without cancellation in the tails.
  double mass(double x, double y) const;
  // Leading tail coefficient: p(x) ~ tail_constant() |x|^{-alpha-1}.
  double tail_constant() const { return coef_.empty() ? 0.0 : coef_[0]; }

  // Series parts used for image sums; valid for |x| >= switch_point().
  double series_pdf(double x) const;
  double series_dpdf(double x) const;
  double series_d2pdf(double x) const;
  double series_ccdf(double x) const;  // P(S > x), x > 0
  double switch_point() const { return x_switch_; }
  const std::vector<double>& series_coefficients() const { return coef_; }

 private:
  double hermite(const std::vector<double>& v, const std::vector<double>& dv, double x) const;
  double ccdf_pos(double x) const;
  double series_eval(double ax, int order) const;

  double alpha_;
  double h_;
  double x_switch_;
  std::vector<double> coef_;
  std::vector<double> mag_;
  std::vector<double> p_, dp_, d2p_, d3p_;
  std::vector<double> ccdf_;  // P(S > y_j)
};

}  // namespace superfractal
