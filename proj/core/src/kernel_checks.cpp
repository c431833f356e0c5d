#include <cmath>
#include <functional>
#include <limits>

#include "superfractal/errors.hpp"
#include "superfractal/kernels.hpp"
#include "superfractal/rng.hpp"

namespace superfractal {

namespace {

// Scaled density evaluations p_t, p'_t for a sampled time t.
struct Scaled {
  const UnitStableDensity& d;
  double w;
  double p(double x) const { return d.pdf(x / w) / w; }
  double dp(double x) const { return d.dpdf(x / w) / (w * w); }
};

// Ratio LHS / (RHS without C) for one sample; NaN means "skip".
using RatioFn = std::function<double(const Scaled&, double t, double x, double y)>;

double sample_max(double alpha, std::int64_t samples, std::uint64_t seed, const RatioFn& f) {
  auto unit = UnitStableDensity::get(alpha);
  Rng rng(seed);
  // Gaussian tails leave the range where table roundoff is negligible
  // beyond ~16 widths.
  const double hi = alpha < 2.0 ? 2.5 : 1.2;
  double best = 0.0;
  for (std::int64_t i = 0; i < samples; ++i) {
    double t = std::pow(10.0, rng.uniform(-3.0, 1.0));
    double w = std::pow(t, 1.0 / alpha);
    double sx = rng.uniform() < 0.5 ? -1.0 : 1.0;
    double u = sx * std::pow(10.0, rng.uniform(-3.0, hi));
    double v;
    if (rng.uniform() < 0.5) {
      double sd = rng.uniform() < 0.5 ? -1.0 : 1.0;
      v = u + sd * std::pow(10.0, rng.uniform(-4.0, 2.0));
    } else {
      double sy = rng.uniform() < 0.5 ? -1.0 : 1.0;
      v = sy * std::pow(10.0, rng.uniform(-3.0, hi));
    }
    double r = f(Scaled{*unit, w}, t, u * w, v * w);
    if (std::isnan(r)) continue;
    if (!std::isfinite(r)) return std::numeric_limits<double>::infinity();
    best = std::max(best, r);
  }
  return best;
}

KernelEstimateReport fit(const char* name, double alpha, double delta, std::int64_t samples,
                         std::uint64_t seed, const RatioFn& f) {
  if (samples <= 0) throw DomainError("kernel check: samples must be positive");
  KernelEstimateReport r;
  r.inequality = name;
  r.alpha = alpha;
  r.delta = delta;
  double c1 = sample_max(alpha, samples, derive_seed(seed, 1), f);
  double c2 = sample_max(alpha, 2 * samples, derive_seed(seed, 2), f);
  r.fitted_constant = c1;
  r.max_violation_ratio = c2 / c1;
  r.sample_count = 3 * samples;
  r.passed = std::isfinite(c1) && std::isfinite(c2) && c1 > 0 &&
             std::fabs(r.max_violation_ratio - 1.0) <= 0.1;
  return r;
}

double envelope(const Scaled& s, double x, double y) { return s.p(x / 2) + s.p(y / 2); }

}  // namespace

KernelEstimateReport check_kernel_difference_bound(double alpha, double delta,
                                                   std::int64_t samples, std::uint64_t seed) {
  if (!(delta >= 0.0 && delta <= 1.0))
    throw DomainError("check_kernel_difference_bound: delta must lie in [0, 1]");
  return fit("kernel_difference", alpha, delta, samples, seed,
             [alpha, delta](const Scaled& s, double t, double x, double y) {
               double rhs = std::pow(std::fabs(x - y), delta) * std::pow(t, -delta / alpha) *
                            envelope(s, x, y);
               if (!(rhs > 0)) return std::numeric_limits<double>::quiet_NaN();
               return std::fabs(s.p(x) - s.p(y)) / rhs;
             });
}

KernelEstimateReport check_gradient_difference_bound(double alpha, double delta,
                                                     std::int64_t samples, std::uint64_t seed) {
  if (!(delta >= 0.0 && delta <= 1.0))
    throw DomainError("check_gradient_difference_bound: delta must lie in [0, 1]");
  return fit("gradient_difference", alpha, delta, samples, seed,
             [alpha, delta](const Scaled& s, double t, double x, double y) {
               double rhs = std::pow(std::fabs(x - y), delta) *
                            std::pow(t, -(1.0 + delta) / alpha) * envelope(s, x, y);
               if (!(rhs > 0)) return std::numeric_limits<double>::quiet_NaN();
               return std::fabs(s.dp(x) - s.dp(y)) / rhs;
             });
}

KernelEstimateReport check_gradient_envelope_bound(double alpha, std::int64_t samples,
                                                   std::uint64_t seed) {
  return fit("gradient_envelope", alpha, 0.0, samples, seed,
             [alpha](const Scaled& s, double t, double x, double) {
               double rhs = std::pow(t, -1.0 / alpha) * s.p(x / 2);
               if (!(rhs > 0)) return std::numeric_limits<double>::quiet_NaN();
               return std::fabs(s.dp(x)) / rhs;
             });
}

KernelEstimateReport check_taylor_remainder_bound(double alpha, double delta,
                                                  std::int64_t samples, std::uint64_t seed) {
  if (!(delta >= 1.0 && delta <= 2.0))
    throw DomainError("check_taylor_remainder_bound: delta must lie in [1, 2]");
  return fit("taylor_remainder", alpha, delta, samples, seed,
             [alpha, delta](const Scaled& s, double t, double x, double y) {
               double rhs = std::pow(std::fabs(x - y), delta) * std::pow(t, -delta / alpha) *
                            envelope(s, x, y);
               if (!(rhs > 0)) return std::numeric_limits<double>::quiet_NaN();
               // Below ~1e-4 widths the remainder is lost to roundoff in
               // p(x) - p(y); those samples carry no information.
               if (std::fabs(x - y) < 1e-4 * s.w) return std::numeric_limits<double>::quiet_NaN();
               return std::fabs(s.p(x) - s.p(y) - (x - y) * s.dp(y)) / rhs;
             });
}

KernelEstimateReport check_tail_envelope_bound(double alpha, std::int64_t samples,
                                               std::uint64_t seed) {
  return fit("tail_envelope", alpha, 0.0, samples, seed,
             [alpha](const Scaled& s, double, double x, double) {
               double z = x / s.w;
               double p1 = s.d.pdf(z);
               return p1 * std::pow(std::max(std::fabs(z), 1.0), alpha + 1.0);
             });
}

std::vector<KernelEstimateReport> check_gradient_bounds(double alpha, double delta_a,
                                                        double delta_c, std::int64_t samples,
                                                        std::uint64_t seed) {
  return {check_gradient_difference_bound(alpha, delta_a, samples, derive_seed(seed, 10)),
          check_gradient_envelope_bound(alpha, samples, derive_seed(seed, 11)),
          check_taylor_remainder_bound(alpha, delta_c, samples, derive_seed(seed, 12))};
}

}  // namespace superfractal
