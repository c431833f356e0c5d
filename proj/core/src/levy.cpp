#include "superfractal/levy.hpp"

#include <algorithm>
#include <boost/math/distributions/poisson.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <limits>

#include "superfractal/errors.hpp"
#include "superfractal/rng.hpp"
#include "superfractal/stats.hpp"

namespace superfractal {

namespace {
void check_kappa(double kappa) {
  if (!(kappa > 1.0 && kappa < 2.0)) throw DomainError("kappa must lie in (1, 2)");
}
double jump_rate(double kappa, double r) {
  return stable_levy_constant(kappa) * std::pow(r, -kappa) / kappa;
}
double compensator_drift(double kappa, double r) {
  return -stable_levy_constant(kappa) * std::pow(r, 1.0 - kappa) / (kappa - 1.0);
}
}  // namespace

double stable_levy_constant(double kappa) {
  check_kappa(kappa);
  return kappa * (kappa - 1.0) / std::tgamma(2.0 - kappa);
}

double truncated_laplace_exponent(double kappa, double lambda, double r_min) {
  const double c = stable_levy_constant(kappa);
  if (lambda == 0.0) return 0.0;
  if (lambda * r_min <= 1.0) {
    // Remove the jumps below r_min: c sum_{k>=2} (-lambda)^k r^{k-kappa} / (k! (k-kappa)).
    double small = 0.0, pw = 1.0;
    for (int k = 1; k < 80; ++k) {
      pw *= -lambda * r_min / k;
      if (k < 2) continue;
      double term = pw / (k - kappa);
      small += term;
      if (std::fabs(term) < 1e-18 * std::fabs(small)) break;
    }
    return std::pow(lambda, kappa) - c * std::pow(r_min, -kappa) * small;
  }
  boost::math::quadrature::exp_sinh<double> integrator;
  auto f = [&](double u) {
    double s = r_min + u;
    if (!std::isfinite(s)) return 0.0;
    return (std::expm1(-lambda * s) + lambda * s) * c * std::pow(s, -1.0 - kappa);
  };
  return integrator.integrate(f);
}

double truncation_tolerance(double kappa, double t, double lambda, double r_min) {
  return std::fabs(std::exp(t * std::pow(lambda, kappa)) -
                   std::exp(t * truncated_laplace_exponent(kappa, lambda, r_min)));
}

double StablePathSample::value(double u) const {
  auto it = std::upper_bound(jumps.begin(), jumps.end(), u,
                             [](double v, const StableJump& j) { return v < j.time; });
  auto k = static_cast<std::size_t>(it - jumps.begin());
  return (k ? cumulative[k - 1] : 0.0) + drift_correction * u;
}

StablePathSample sample_path(double kappa, double horizon, double r_min, std::uint64_t seed) {
  check_kappa(kappa);
  if (!(r_min > 0)) throw DomainError("sample_path: r_min must be positive");
  if (!(horizon > 0)) throw DomainError("sample_path: horizon must be positive");
  StablePathSample p;
  p.kappa = kappa;
  p.horizon = horizon;
  p.r_min = r_min;
  p.drift_correction = compensator_drift(kappa, r_min);
  const double rate = jump_rate(kappa, r_min);
  if (rate * horizon < 1.0)
    p.warnings.push_back("expected jump count above r_min is below one over the horizon");
  Rng rng(seed);
  double s = 0.0, cum = 0.0;
  for (;;) {
    s += rng.exponential() / rate;
    if (s > horizon) break;
    double r = r_min * std::pow(rng.uniform(), -1.0 / kappa);
    cum += r;
    p.jumps.push_back({s, r});
    p.cumulative.push_back(cum);
  }
  return p;
}

double sample_terminal(double kappa, double horizon, double r_min, std::uint64_t seed) {
  check_kappa(kappa);
  Rng rng(seed);
  std::uint64_t n = rng.poisson(jump_rate(kappa, r_min) * horizon);
  double sum = 0.0;
  const double e = -1.0 / kappa;
  for (std::uint64_t i = 0; i < n; ++i) sum += std::pow(rng.uniform(), e);
  return r_min * sum + compensator_drift(kappa, r_min) * horizon;
}

LaplaceCheckReport empirical_laplace_check(double kappa, const std::vector<double>& lambdas,
                                           double t, std::int64_t n_paths, double r_min,
                                           std::uint64_t seed) {
  check_kappa(kappa);
  for (double l : lambdas)
    if (!(l >= 0)) throw DomainError("empirical_laplace_check: lambda must be >= 0");
  LaplaceCheckReport rep;
  rep.kappa = kappa;
  rep.t = t;
  rep.r_min = r_min;
  rep.n_paths = n_paths;
  std::vector<MeanAccumulator> acc(lambdas.size());
  for (std::int64_t i = 0; i < n_paths; ++i) {
    double L = sample_terminal(kappa, t, r_min, derive_seed(seed, static_cast<std::uint64_t>(i)));
    for (std::size_t k = 0; k < lambdas.size(); ++k) acc[k].add(std::exp(-lambdas[k] * L));
  }
  rep.passed = true;
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    LaplaceCheckRow row;
    row.lambda = lambdas[k];
    row.empirical = acc[k].mean();
    row.standard_error = acc[k].standard_error();
    row.theory = std::exp(t * std::pow(lambdas[k], kappa));
    row.truncated_theory = std::exp(t * truncated_laplace_exponent(kappa, lambdas[k], r_min));
    row.tolerance = std::fabs(row.theory - row.truncated_theory);
    row.passed = std::fabs(row.empirical - row.theory) <= 3.0 * row.standard_error + row.tolerance;
    rep.passed = rep.passed && row.passed;
    rep.rows.push_back(row);
  }
  return rep;
}

namespace {

// For each y (ascending), the sup of |L_u| over u before the first jump
// larger than y (and u <= t), one path at a time.
std::vector<std::vector<double>> truncated_sups(double kappa, double t,
                                                const std::vector<double>& ys, double r_min,
                                                std::int64_t n_paths, std::uint64_t seed) {
  const double rate = jump_rate(kappa, r_min);
  const double drift = compensator_drift(kappa, r_min);
  const double e = -1.0 / kappa;
  std::vector<std::vector<double>> out(ys.size(), std::vector<double>(n_paths));
  for (std::int64_t p = 0; p < n_paths; ++p) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(p)));
    double s = 0.0, level = 0.0, sup = 0.0;
    // ys ascending: a jump of size r freezes every y < r not yet frozen.
    std::vector<bool> done(ys.size(), false);
    for (;;) {
      double gap = rng.exponential() / rate;
      if (s + gap > t) {
        level += drift * (t - s);
        sup = std::max(sup, std::fabs(level));
        break;
      }
      s += gap;
      level += drift * gap;
      sup = std::max(sup, std::fabs(level));
      double r = r_min * std::pow(rng.uniform(), e);
      for (std::size_t k = 0; k < ys.size() && ys[k] < r; ++k)
        if (!done[k]) {
          out[k][p] = sup;
          done[k] = true;
        }
      level += r;
      sup = std::max(sup, std::fabs(level));
    }
    for (std::size_t k = 0; k < ys.size(); ++k)
      if (!done[k]) out[k][p] = sup;
  }
  return out;
}

TailBoundReport cell_report(double kappa, double t, double x, double y,
                            const std::vector<double>& sups, double fitted_C) {
  TailBoundReport r;
  r.x = x;
  r.y = y;
  r.t = t;
  r.n_paths = static_cast<std::int64_t>(sups.size());
  double hits = 0;
  for (double v : sups) hits += (v >= x);
  double n = static_cast<double>(sups.size());
  r.empirical_prob = hits / n;
  r.standard_error = std::sqrt(r.empirical_prob * (1 - r.empirical_prob) / n);
  r.vacuous = !(r.empirical_prob > 0) || r.standard_error >= 0.3 * r.empirical_prob;
  r.fitted_C = fitted_C;
  if (fitted_C > 0) {
    r.bound_value = std::pow(fitted_C * t / (x * std::pow(y, kappa - 1.0)), x / y);
    r.passed = r.empirical_prob <= r.bound_value + 3.0 * r.standard_error;
  } else {
    r.passed = true;
  }
  return r;
}

double cell_constant(double kappa, const TailBoundReport& c) {
  return std::pow(c.empirical_prob, c.y / c.x) * c.x * std::pow(c.y, kappa - 1.0) / c.t;
}

}  // namespace

TailBoundReport truncated_sup_tail_check(double kappa, double t, double x, double y,
                                         std::int64_t n_paths, std::uint64_t seed,
                                         double fitted_C, double r_min) {
  check_kappa(kappa);
  if (!(x > 0 && y > 0)) throw DomainError("truncated_sup_tail_check: x, y must be positive");
  if (r_min <= 0) r_min = y / 50.0;
  auto sups = truncated_sups(kappa, t, {y}, r_min, n_paths, seed);
  auto r = cell_report(kappa, t, x, y, sups[0], fitted_C);
  if (fitted_C <= 0 && !r.vacuous) r.fitted_C = cell_constant(kappa, r);
  return r;
}

TailGridReport tail_bound_grid_check(double kappa, const std::vector<double>& xs,
                                     const std::vector<double>& ys_in,
                                     const std::vector<double>& ts, std::int64_t n_paths,
                                     std::uint64_t seed) {
  check_kappa(kappa);
  std::vector<double> ys = ys_in;
  std::sort(ys.begin(), ys.end());
  const double r_min = ys.front() / 50.0;
  TailGridReport rep;
  rep.kappa = kappa;
  // Fitting ensemble.
  double C = 0.0;
  for (std::size_t it = 0; it < ts.size(); ++it) {
    auto sups = truncated_sups(kappa, ts[it], ys, r_min, n_paths, derive_seed(seed, 2 * it));
    for (std::size_t k = 0; k < ys.size(); ++k)
      for (double x : xs) {
        auto c = cell_report(kappa, ts[it], x, ys[k], sups[k], 0.0);
        if (!c.vacuous) C = std::max(C, cell_constant(kappa, c));
      }
  }
  rep.fitted_C = C;
  rep.passed = C > 0 && std::isfinite(C);
  // Independent verification ensemble.
  for (std::size_t it = 0; it < ts.size(); ++it) {
    auto sups =
        truncated_sups(kappa, ts[it], ys, r_min, 2 * n_paths, derive_seed(seed, 2 * it + 1));
    for (std::size_t k = 0; k < ys.size(); ++k)
      for (double x : xs) {
        auto c = cell_report(kappa, ts[it], x, ys[k], sups[k], C);
        rep.passed = rep.passed && c.passed;
        rep.cells.push_back(c);
      }
  }
  return rep;
}

JumpCountGofReport jump_count_gof(double kappa, double t, double r_min,
                                  const std::vector<double>& levels, std::int64_t n_paths,
                                  std::uint64_t seed) {
  check_kappa(kappa);
  JumpCountGofReport rep;
  rep.levels = levels;
  std::vector<std::vector<std::uint64_t>> counts(levels.size(), std::vector<std::uint64_t>(n_paths));
  const double e = -1.0 / kappa;
  for (std::int64_t p = 0; p < n_paths; ++p) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(p)));
    std::uint64_t n = rng.poisson(jump_rate(kappa, r_min) * t);
    for (std::uint64_t i = 0; i < n; ++i) {
      double r = r_min * std::pow(rng.uniform(), e);
      for (std::size_t k = 0; k < levels.size(); ++k) counts[k][p] += (r > levels[k]);
    }
  }
  rep.passed = true;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    double mean = jump_rate(kappa, levels[k]) * t;
    rep.expected_means.push_back(mean);
    boost::math::poisson_distribution<double> pd(mean);
    // Bin edges at Poisson quantiles so every bin expects ~n/20 paths.
    std::vector<std::uint64_t> edges;
    for (int b = 1; b < 20; ++b) {
      auto q = static_cast<std::uint64_t>(boost::math::quantile(pd, b / 20.0));
      if (edges.empty() || q > edges.back()) edges.push_back(q);
    }
    const std::size_t nb = edges.size() + 1;
    std::vector<double> obs(nb, 0.0), expct(nb, 0.0);
    for (auto c : counts[k]) {
      std::size_t b = static_cast<std::size_t>(std::lower_bound(edges.begin(), edges.end(), c) - edges.begin());
      obs[b] += 1;
    }
    double prev = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      double cdf = (b + 1 < nb) ? boost::math::cdf(pd, static_cast<double>(edges[b])) : 1.0;
      expct[b] = (cdf - prev) * static_cast<double>(n_paths);
      prev = cdf;
    }
    double chi2 = 0.0;
    for (std::size_t b = 0; b < nb; ++b)
      if (expct[b] > 0) chi2 += (obs[b] - expct[b]) * (obs[b] - expct[b]) / expct[b];
    double pv = chi_square_sf(chi2, static_cast<double>(nb - 1));
    rep.p_values.push_back(pv);
    rep.passed = rep.passed && pv >= 0.01;
  }
  return rep;
}

SelfSimilarityReport self_similarity_check(double kappa, double t, double c, double r_min,
                                           std::int64_t n_paths, std::uint64_t seed) {
  check_kappa(kappa);
  std::vector<double> a(n_paths), b(n_paths);
  const double scale = std::pow(c, 1.0 / kappa);
  for (std::int64_t i = 0; i < n_paths; ++i) {
    a[i] = sample_terminal(kappa, c * t, r_min, derive_seed(seed, 2 * i));
    b[i] = scale * sample_terminal(kappa, t, r_min / scale, derive_seed(seed, 2 * i + 1));
  }
  auto ks = ks_two_sample(a, b);
  return {ks.statistic, ks.p_value, ks.p_value >= 0.01};
}

}  // namespace superfractal
