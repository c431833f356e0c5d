#include "superfractal/simulation.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <tuple>

#include "superfractal/errors.hpp"
#include "superfractal/fft.hpp"
#include "superfractal/rng.hpp"

namespace superfractal {

namespace {

double rho_of(const ModelParams& p) {
  return p.b * (1.0 + p.beta) * p.beta / std::tgamma(1.0 - p.beta);
}

void require_valid(const ModelParams& p) {
  auto rep = validate_params(p);
  if (!rep.ok()) {
    std::ostringstream os;
    os << "invalid model parameters:";
    for (const auto& v : rep.violations) os << ' ' << v << ';';
    throw DomainError(os.str());
  }
}

// Integral of the expected total mass |mu| e^{as} over [0, t].
double integrated_mass(const ModelParams& p) {
  double m = p.mu.total_mass();
  return p.a == 0.0 ? m * p.t : m * std::expm1(p.a * p.t) / p.a;
}

// Spectra (already scaled by dx) of step kernels. Entries that need
// real-space quadrature are cached across calls and replicas.
enum class SpecKind { kSemigroup, kAveraged, kAveragedDerivative };

using SpecKey = std::tuple<std::size_t, double, double, double, double, int, int>;

std::shared_ptr<const std::vector<cplx>> kernel_spectrum(const SpectralPropagator& prop,
                                                         SpecKind kind, double lo, double hi,
                                                         int far_radius) {
  const Grid1D& g = prop.grid();
  const std::size_t n = g.size();
  const double L = g.length();
  const bool cheap = prop.resolved(lo) && far_radius == 0;
  auto closed = [&]() {
    auto out = std::make_shared<std::vector<cplx>>(n / 2 + 1);
    if (kind == SpecKind::kSemigroup) {
      auto m = prop.multiplier(lo);
      for (std::size_t k = 0; k < m.size(); ++k) (*out)[k] = m[k];
    } else {
      auto m = prop.averaged_multiplier(lo, hi, true);
      for (std::size_t k = 0; k < m.size(); ++k) {
        if (kind == SpecKind::kAveraged) {
          (*out)[k] = m[k];
        } else {
          (*out)[k] = (k == n / 2) ? cplx(0.0) : cplx(0.0, fft_frequency(k, L)) * m[k];
        }
      }
    }
    return out;
  };
  if (cheap) return closed();

  static std::mutex mu;
  static std::map<SpecKey, std::shared_ptr<const std::vector<cplx>>> cache;
  SpecKey key{n, L, prop.alpha(), lo, hi, static_cast<int>(kind), far_radius};
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  std::shared_ptr<const std::vector<cplx>> res;
  if (kind == SpecKind::kSemigroup) {
    res = closed();
  } else {
    auto ker = prop.averaged_kernel(lo, hi, kind == SpecKind::kAveragedDerivative ? 1 : 0);
    for (int j = -far_radius; j <= far_radius; ++j)
      ker[static_cast<std::size_t>((j + static_cast<std::int64_t>(n)) % static_cast<std::int64_t>(n))] = 0.0;
    auto spec = fft_for(n).forward(ker);
    for (auto& v : spec) v *= g.dx();
    res = std::make_shared<std::vector<cplx>>(std::move(spec));
  }
  std::lock_guard<std::mutex> lock(mu);
  cache.emplace(key, res);
  return res;
}

std::vector<double> initial_lebesgue(const ModelParams& p, const Grid1D& g) {
  return lebesgue_density_on_grid(p.mu, g);
}

}  // namespace

TimeGrid make_time_grid(double t, std::int64_t steps, double tau_floor, double max_dt,
                        bool geometric) {
  if (!(t > 0)) throw DomainError("time grid: t must be positive");
  if (steps < 1) throw DomainError("time grid: need at least one step");
  std::vector<double> base{0.0};
  if (geometric && tau_floor > 0 && tau_floor < t && steps > 1) {
    const auto G = steps - 1;
    const double q = std::pow(tau_floor / t, 1.0 / static_cast<double>(G));
    for (std::int64_t j = 1; j <= G; ++j) base.push_back(t - t * std::pow(q, static_cast<double>(j)));
    base.push_back(t);
  } else {
    for (std::int64_t j = 1; j <= steps; ++j)
      base.push_back(t * static_cast<double>(j) / static_cast<double>(steps));
  }
  base.back() = t;
  TimeGrid tg;
  tg.times.push_back(0.0);
  for (std::size_t k = 0; k + 1 < base.size(); ++k) {
    double a = base[k], b = base[k + 1];
    auto pieces = (max_dt > 0 && std::isfinite(max_dt))
                      ? std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil((b - a) / max_dt)))
                      : 1;
    for (std::int64_t i = 1; i < pieces; ++i)
      tg.times.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(pieces));
    tg.times.push_back(b);
  }
  return tg;
}

double expected_max_jump(const ModelParams& p) {
  double rho = rho_of(p);
  double scale = rho * integrated_mass(p) / (1.0 + p.beta);
  if (!(scale > 0)) return 0.0;
  return std::pow(scale, 1.0 / (1.0 + p.beta));
}

double default_r_min(const ModelParams& p) {
  double r = 1e-4 * expected_max_jump(p);
  return r > 0 ? r : 1e-4;
}

SimulationPlan::SimulationPlan(const ModelParams& params, const Grid1D& grid,
                               const SimulationOptions& opts)
    : params_(params), grid_(grid), opts_(opts), prop_(grid, params.alpha) {
  require_valid(params);
  if (!(opts.r_min > 0)) throw DomainError("r_min must be positive");
  const double rho = rho_of(params);
  jump_rate_ = rho * std::pow(opts.r_min, -1.0 - params.beta) / (1.0 + params.beta);
  comp_rate_ = rho * std::pow(opts.r_min, -params.beta) / params.beta;
  double tau_floor = opts.tau_floor > 0 ? opts.tau_floor : std::pow(grid.dx() / 4.0, params.alpha);
  double max_dt = comp_rate_ > 0 ? opts.max_compensation / comp_rate_ : 0.0;
  times_ = make_time_grid(params.t, opts.time_steps, tau_floor, max_dt, opts.geometric);
  step_mult_.reserve(times_.steps());
  pos_mult_.reserve(times_.steps());
  std::map<double, std::size_t> seen;
  for (std::size_t k = 0; k < times_.steps(); ++k) {
    double dt = times_.dt(k);
    auto it = seen.find(dt);
    if (it != seen.end()) {
      step_mult_.push_back(step_mult_[it->second]);
      pos_mult_.push_back(pos_mult_[it->second]);
      continue;
    }
    seen.emplace(dt, k);
    std::vector<double> m(grid.size() / 2 + 1);
    for (std::size_t q = 0; q < m.size(); ++q)
      m[q] = std::exp(-dt * std::pow(fft_frequency(q, grid.length()), params.alpha));
    step_mult_.push_back(std::move(m));
    pos_mult_.push_back(prop_.resolved(dt) ? std::vector<double>{} : prop_.multiplier(dt));
  }
  initial_ = initial_lebesgue(params, grid);
  for (const auto& at : params.mu.atoms) initial_[grid.cell_of(at.x)] += at.mass / grid.dx();
}

SimulationResult simulate_measure_path(const SimulationPlan& plan, std::uint64_t seed) {
  const auto& p = plan.params();
  const auto& g = plan.grid();
  const auto& tg = plan.time_grid();
  const auto& opts = plan.options();
  const std::size_t n = g.size();
  const double dx = g.dx();
  const double r_min = opts.r_min;
  const double inv_kappa = -1.0 / (1.0 + p.beta);

  SimulationResult res;
  MeasurePath& path = res.path;
  path.grid = g;
  path.time_grid = tg;
  path.jump_rate = plan.jump_rate();
  path.compensation_rate = plan.compensation_rate();
  res.jumps.r_min = r_min;
  res.jumps.record_min = std::max(r_min, opts.record_min);

  Rng rng(seed);
  std::vector<double> X = plan.initial_field();
  auto mass_of = [&](const std::vector<double>& f) {
    double m = 0.0;
    for (double v : f) m += v;
    return m * dx;
  };
  path.total_mass.push_back(mass_of(X));
  if (opts.store_fields) path.fields.push_back(X);

  std::vector<double> cum(n), prev;
  for (std::size_t k = 0; k < tg.steps(); ++k) {
    const double dt = tg.dt(k);
    // The exact multiplier rings below zero next to fresh point masses when
    // dt is below the grid resolution; such steps use the cell-mass kernel.
    if (!plan.positive_multiplier(k).empty()) prev = X;
    plan.propagator().apply(X, plan.step_multiplier(k));
    if (!plan.positive_multiplier(k).empty()) {
      double top = *std::max_element(X.begin(), X.end());
      double low = *std::min_element(X.begin(), X.end());
      if (low < -1e-12 * top) {
        X = prev;
        plan.propagator().apply(X, plan.positive_multiplier(k));
      }
    }
    const double growth = std::exp(p.a * dt);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double v = X[i] * growth;
      if (v < 0) {
        path.clipped_negativity = std::max(path.clipped_negativity, -v);
        v = 0.0;
      }
      X[i] = v;
      total += v;
      cum[i] = total;
    }
    const std::size_t first = res.jumps.jumps.size();
    if (p.b > 0 && total > 0) {
      std::uint64_t count = rng.poisson(plan.jump_rate() * dt * total * dx);
      for (std::uint64_t j = 0; j < count; ++j) {
        double u = rng.uniform() * total;
        auto cell = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
        if (cell >= n) cell = n - 1;
        Jump J;
        J.cell = static_cast<std::int32_t>(cell);
        J.step = static_cast<std::int32_t>(k);
        J.y = g.x(cell) + (rng.uniform() - 0.5) * dx;
        J.s = tg.times[k] + rng.uniform() * dt;
        J.r = r_min * std::pow(rng.uniform(), inv_kappa);
        res.jumps.jumps.push_back(J);
      }
    }
    const double keep = 1.0 - plan.compensation_rate() * dt;
    for (double& v : X) v *= keep;
    auto& js = res.jumps.jumps;
    std::sort(js.begin() + static_cast<std::ptrdiff_t>(first), js.end(),
              [](const Jump& a, const Jump& b) { return a.s < b.s; });
    for (std::size_t j = first; j < js.size(); ++j) X[static_cast<std::size_t>(js[j].cell)] += js[j].r / dx;
    if (opts.record_min > r_min)
      js.erase(std::remove_if(js.begin() + static_cast<std::ptrdiff_t>(first), js.end(),
                              [&](const Jump& J) { return J.r < opts.record_min; }),
               js.end());
    double m = mass_of(X);
    if (!(m < opts.mass_overflow))
      throw NumericError("total mass overflow at step " + std::to_string(k));
    path.total_mass.push_back(m);
    if (opts.store_fields) path.fields.push_back(X);
  }
  if (!opts.store_fields) path.fields.push_back(X);
  return res;
}

SimulationResult simulate_measure_path(const ModelParams& params, const Grid1D& grid,
                                       const SimulationOptions& opts, std::uint64_t seed) {
  SimulationPlan plan(params, grid, opts);
  return simulate_measure_path(plan, seed);
}

namespace {

void check_path(const Grid1D& grid, const MeasurePath& path, const JumpRecord& jumps) {
  if (!(path.grid == grid)) throw DomainError("path grid does not match");
  if (jumps.record_min > jumps.r_min) throw DomainError("the representation needs every jump recorded");
  if (path.fields.size() != path.time_grid.times.size())
    throw DomainError("the representation needs every step's field stored");
}

// Sum over steps of the jump integral with time-and-cell averaged kernels,
// exact kernels near late jumps (derivative = 1 for the spatial derivative).
std::vector<double> jump_integral(const ModelParams& params, const Grid1D& grid,
                                  const MeasurePath& path, const JumpRecord& jumps,
                                  const RepresentationOptions& opts, int derivative) {
  const std::size_t n = grid.size();
  const double dx = grid.dx();
  const double t = path.time_grid.horizon();
  const auto& tg = path.time_grid;
  SpectralPropagator prop(grid, params.alpha);
  const auto& kernel = prop.kernel();
  RealFft& fft = fft_for(n);
  const SpecKind kind = derivative ? SpecKind::kAveragedDerivative : SpecKind::kAveraged;
  const int R = opts.near_radius;
  const double tau_exact = std::pow(R * dx / 8.0, params.alpha);

  std::vector<cplx> acc(n / 2 + 1, cplx(0.0));
  std::vector<double> near(n, 0.0);
  std::vector<double> jfield(n);
  std::size_t jpos = 0;
  for (std::size_t k = 0; k < tg.steps(); ++k) {
    const double dt = tg.dt(k);
    const double hi = t - tg.times[k];
    const double lo = std::max(0.0, t - tg.times[k + 1]);
    const bool late = std::pow(hi, 1.0 / params.alpha) < R * dx / 8.0 || hi <= tau_exact;
    auto kbar = kernel_spectrum(prop, kind, lo, hi, 0);
    // Compensator: c dt Y_k with Y_k = e^{a dt} S_dt X_k.
    auto xs = fft.forward(path.fields[k]);
    auto mdt = kernel_spectrum(prop, SpecKind::kSemigroup, dt, dt, 0);
    const double comp = path.compensation_rate * dt * std::exp(params.a * dt);
    for (std::size_t q = 0; q < acc.size(); ++q) acc[q] -= comp * (*kbar)[q] * (*mdt)[q] * xs[q];

    std::fill(jfield.begin(), jfield.end(), 0.0);
    std::size_t jend = jpos;
    while (jend < jumps.jumps.size() && jumps.jumps[jend].step == static_cast<std::int32_t>(k)) ++jend;
    if (jend == jpos) continue;
    for (std::size_t j = jpos; j < jend; ++j)
      jfield[static_cast<std::size_t>(jumps.jumps[j].cell)] += jumps.jumps[j].r / dx;
    auto js = fft.forward(jfield);
    auto kj = late ? kernel_spectrum(prop, kind, lo, hi, R) : kbar;
    for (std::size_t q = 0; q < acc.size(); ++q) acc[q] += (*kj)[q] * js[q];
    if (late) {
      for (std::size_t j = jpos; j < jend; ++j) {
        const Jump& J = jumps.jumps[j];
        const double tau = t - J.s;
        for (int d = -R; d <= R; ++d) {
          auto i = static_cast<std::size_t>((J.cell + d + static_cast<std::int64_t>(n)) % static_cast<std::int64_t>(n));
          double z = grid.wrap_delta(grid.x(i) - J.y);
          near[i] += J.r * (derivative ? kernel.dpdf(tau, z) : kernel.pdf(tau, z));
        }
      }
    }
    jpos = jend;
  }
  std::vector<double> out(n);
  for (auto& v : acc) v /= static_cast<double>(n);
  fft.inverse(acc.data(), out.data());
  for (std::size_t i = 0; i < n; ++i) out[i] += near[i];
  return out;
}

}  // namespace

DensityDecomposition density_from_representation(const ModelParams& params, const Grid1D& grid,
                                                 const MeasurePath& path, const JumpRecord& jumps,
                                                 const RepresentationOptions& opts) {
  require_valid(params);
  check_path(grid, path, jumps);
  const std::size_t n = grid.size();
  const double t = path.time_grid.horizon();
  SpectralPropagator prop(grid, params.alpha);
  RealFft& fft = fft_for(n);
  DensityDecomposition d;

  d.z1 = initial_lebesgue(params, grid);
  prop.apply(d.z1, t);
  for (const auto& at : params.mu.atoms)
    for (std::size_t i = 0; i < n; ++i)
      d.z1[i] += at.mass * prop.kernel().pdf(t, grid.wrap_delta(grid.x(i) - at.x));

  d.z3.assign(n, 0.0);
  if (params.a != 0.0) {
    std::vector<cplx> acc(n / 2 + 1, cplx(0.0));
    const auto& tg = path.time_grid;
    for (std::size_t k = 0; k < tg.steps(); ++k) {
      auto xs = fft.forward(path.fields[k]);
      auto m = kernel_spectrum(prop, SpecKind::kSemigroup, t - tg.times[k], t - tg.times[k], 0);
      const double w = std::expm1(params.a * tg.dt(k));
      for (std::size_t q = 0; q < acc.size(); ++q) acc[q] += w * (*m)[q] * xs[q];
    }
    for (auto& v : acc) v /= static_cast<double>(n);
    fft.inverse(acc.data(), d.z3.data());
  }

  if (params.b > 0)
    d.z2 = jump_integral(params, grid, path, jumps, opts, 0);
  else
    d.z2.assign(n, 0.0);

  d.x_t.resize(n);
  double neg = 0.0, tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d.x_t[i] = d.z1[i] + d.z2[i] + d.z3[i];
    if (d.x_t[i] < 0) neg -= d.x_t[i];
    tot += d.x_t[i];
  }
  d.negative_mass_fraction = tot > 0 ? neg / tot : 0.0;
  if (validate_params(params).z2_differentiable)
    d.z2_prime = compute_z2_derivative(params, grid, path, jumps, opts);
  return d;
}

std::vector<double> compute_z2_derivative(const ModelParams& params, const Grid1D& grid,
                                          const MeasurePath& path, const JumpRecord& jumps,
                                          const RepresentationOptions& opts) {
  auto rep = validate_params(params);
  if (!rep.ok()) throw DomainError("invalid model parameters");
  if (!rep.z2_differentiable)
    throw DomainError("Z2 is differentiable only when beta < (alpha - 1) / 2");
  check_path(grid, path, jumps);
  if (params.b == 0) return std::vector<double>(grid.size(), 0.0);
  return jump_integral(params, grid, path, jumps, opts, 1);
}

DiagnosticsReport diagnostics_good_event(const MeasurePath& path, const JumpRecord& jumps,
                                         const ModelParams& params, double gamma,
                                         double epsilon, const GoodEventThresholds& th) {
  DiagnosticsReport r;
  const auto& g = path.grid;
  const double t = path.time_grid.horizon();
  const double expo = 1.0 / (1.0 + params.beta) - gamma;
  for (const auto& J : jumps.jumps) {
    double gap = t - J.s;
    double ratio = gap > 0 ? J.r / std::pow(gap, expo) : INFINITY;
    r.max_jump_ratio = std::max(r.max_jump_ratio, ratio);
  }
  auto inside = [&](double x) { return x > 0.0 && x < 1.0; };
  SpectralPropagator prop(g, params.alpha);
  for (std::size_t k = 0; k < path.fields.size(); ++k) {
    // Unstored steps leave only the terminal field.
    double s = path.fields.size() == path.time_grid.times.size() ? path.time_grid.times[k] : t;
    std::vector<double> f = path.fields[k];
    double tau = std::pow(2.0, params.alpha) * (t - s);
    if (tau > 0) {
      auto m = kernel_spectrum(prop, SpecKind::kSemigroup, tau, tau, 0);
      std::vector<double> mult(m->size());
      for (std::size_t q = 0; q < mult.size(); ++q) mult[q] = (*m)[q].real();
      prop.apply(f, mult);
    }
    for (std::size_t i = 0; i < f.size(); ++i)
      if (inside(g.x(i))) r.v_hat = std::max(r.v_hat, f[i]);
  }
  const auto& X = path.terminal();
  const double eta = params.alpha / (1.0 + params.beta) - 1.0 - epsilon;
  const std::size_t n = g.size();
  for (std::size_t h = 1; h < n / 2 && static_cast<double>(h) * g.dx() <= 0.5; h *= 2) {
    double hx = static_cast<double>(h) * g.dx();
    double denom = std::pow(hx, eta);
    for (std::size_t i = 0; i + h < n; ++i)
      if (inside(g.x(i)) && inside(g.x(i + h)))
        r.holder_ratio = std::max(r.holder_ratio, std::fabs(X[i + h] - X[i]) / denom);
  }
  r.a_eps_pass[0] = r.max_jump_ratio <= th.jump_constant;
  r.a_eps_pass[1] = r.v_hat <= th.v_constant;
  r.a_eps_pass[2] = r.holder_ratio <= th.holder_constant;
  return r;
}

TimeChange increment_time_change(const ModelParams& params, const MeasurePath& path, double x1,
                                 double x2, double eta) {
  require_valid(params);
  const double eta_c = params.alpha / (1.0 + params.beta) - 1.0;
  const double eta_bar = (1.0 + params.alpha) / (1.0 + params.beta) - 1.0;
  if (!(eta > eta_c && eta < eta_bar)) throw DomainError("eta must lie in (eta_c, eta_bar_c)");
  TimeChange tc;
  if (x1 == x2) return tc;
  const auto& g = path.grid;
  const auto& tg = path.time_grid;
  if (path.fields.size() != tg.times.size()) throw DomainError("time change needs stored fields");
  const double t = tg.horizon();
  const double L = g.length();
  const double dx = g.dx();
  const double kappa = 1.0 + params.beta;
  const double delta = x1 - x2;
  auto kernel = PeriodicStableKernel::get(params.alpha, L);

  auto ptilde = [&](double tau, double y) {
    double z1 = g.wrap_delta(x1 - y), z2 = g.wrap_delta(x2 - y);
    double v = kernel->pdf(tau, z1) - kernel->pdf(tau, z2);
    if (eta > 1.0) v -= delta * kernel->dpdf(tau, z2);
    return v;
  };
  // y-integral of X (piecewise constant per cell) times the positive and
  // negative parts of ptilde^{1+beta}, marching out from each point with
  // steps resolving both the kernel width and the distance.
  auto space_integral = [&](const std::vector<double>& X, double tau, double& plus,
                            double& minus) {
    const double w = std::pow(tau, 1.0 / params.alpha);
    const double centres[2] = {x1, x2};
    const double d = g.wrap_delta(x2 - x1);  // x2 = x1 + d on the circle
    for (int c = 0; c < 2; ++c) {
      // Arc owned by this centre: up to the midpoints between the centres.
      double toward = 0.5 * std::fabs(d);
      double away = 0.5 * L - toward;
      int dir_toward = (c == 0) == (d > 0) ? 1 : -1;
      for (int side : {1, -1}) {
        double extent = side == dir_toward ? toward : away;
        double u = 0.0;
        while (u < extent) {
          double h = std::min(dx, std::max(w, u) / 8.0);
          h = std::min(h, extent - u);
          double y = centres[c] + side * (u + 0.5 * h);
          double v = ptilde(tau, y);
          double m = X[g.cell_of(y)] * h;
          if (v > 0)
            plus += m * std::pow(v, kappa);
          else
            minus += m * std::pow(-v, kappa);
          u += h;
        }
      }
    }
  };
  using GL = boost::math::quadrature::gauss<double, 4>;
  for (std::size_t k = 0; k < tg.steps(); ++k) {
    double hi = t - tg.times[k], lo = t - tg.times[k + 1];
    std::vector<std::pair<double, double>> pieces;
    if (lo <= 0.0) {
      double a = hi * std::ldexp(1.0, -16);
      pieces.emplace_back(0.0, a);
      for (; a < hi; a *= 4.0) pieces.emplace_back(a, std::min(hi, 4.0 * a));
    } else {
      pieces.emplace_back(lo, hi);
    }
    for (auto [a, b] : pieces) {
      double half = 0.5 * (b - a), mid = 0.5 * (a + b);
      for (std::size_t q = 0; q < GL::abscissa().size(); ++q)
        for (int sgn : {-1, 1}) {
          if (GL::abscissa()[q] == 0.0 && sgn > 0) continue;
          double tau = mid + sgn * half * GL::abscissa()[q];
          double p = 0.0, m = 0.0;
          space_integral(path.fields[k], tau, p, m);
          tc.t_plus += GL::weights()[q] * half * p;
          tc.t_minus += GL::weights()[q] * half * m;
        }
    }
  }
  return tc;
}

}  // namespace superfractal
