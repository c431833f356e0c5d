#include "superfractal/loglaplace.hpp"

#include <algorithm>
#include <cmath>

#include "superfractal/errors.hpp"
#include "superfractal/kernels.hpp"
#include "superfractal/stats.hpp"

namespace superfractal {

namespace {
constexpr double kOverflowGuard = 1e150;
constexpr double kClipReport = 1e-10;
}  // namespace

double reaction_flow(double u, double a, double b, double beta, double dt) {
  if (u <= 0.0) return 0.0;
  if (b == 0.0) return u * std::exp(a * dt);
  // w = u^{-beta} solves w' = -a beta w + b beta.
  double w0 = std::pow(u, -beta);
  double w = a == 0.0 ? w0 + b * beta * dt
                      : w0 * std::exp(-a * beta * dt) - (b / a) * std::expm1(-a * beta * dt);
  if (!(w > 0.0)) throw NumericError("log-Laplace reaction step left the positive range");
  return std::pow(w, -1.0 / beta);
}

LogLaplaceState solve_log_laplace_to(const std::vector<double>& phi, const ModelParams& params,
                                     const Grid1D& grid, double t, std::int64_t n_steps) {
  if (phi.size() != grid.size()) throw DomainError("phi does not match the grid");
  if (n_steps < 1) throw DomainError("n_steps must be at least 1");
  if (!(t >= 0)) throw DomainError("time must be nonnegative");
  for (double v : phi)
    if (!(v >= 0) || !std::isfinite(v)) throw DomainError("phi must be finite and nonnegative");

  LogLaplaceState st;
  st.grid = grid;
  st.params = params;
  st.u = phi;
  st.n_steps = n_steps;
  if (t == 0.0) return st;

  const double dt = t / static_cast<double>(n_steps);
  SpectralPropagator prop(grid, params.alpha);
  const auto mult = prop.multiplier(dt);
  auto react = [&](double h) {
    for (double& v : st.u) {
      v = reaction_flow(v, params.a, params.b, params.beta, h);
      if (!(v < kOverflowGuard)) throw NumericError("log-Laplace solution overflowed");
    }
  };
  for (std::int64_t k = 0; k < n_steps; ++k) {
    react(0.5 * dt);
    prop.apply(st.u, mult);
    for (double& v : st.u)
      if (v < 0.0) {
        st.clipped_negativity = std::max(st.clipped_negativity, -v);
        v = 0.0;
      }
    react(0.5 * dt);
  }
  st.time = t;
  if (st.clipped_negativity > kClipReport)
    st.diagnostics.push_back("clipped negative values down to -" +
                             std::to_string(st.clipped_negativity));
  return st;
}

LogLaplaceState solve_log_laplace(const std::vector<double>& phi, const ModelParams& params,
                                  const Grid1D& grid, std::int64_t n_steps) {
  return solve_log_laplace_to(phi, params, grid, params.t, n_steps);
}

double pair_measure(const InitialMeasure& mu, const Grid1D& grid, const std::vector<double>& u) {
  double s = 0.0;
  if (mu.segment) {
    auto dens = lebesgue_density_on_grid(mu, grid);
    for (std::size_t i = 0; i < u.size(); ++i) s += dens[i] * u[i];
    s *= grid.dx();
  }
  for (const auto& at : mu.atoms) {
    double pos = (at.x - grid.x_min()) / grid.dx();
    double fl = std::floor(pos);
    double w = pos - fl;
    auto n = static_cast<std::int64_t>(grid.size());
    auto i0 = ((static_cast<std::int64_t>(fl) % n) + n) % n;
    auto i1 = (i0 + 1) % n;
    s += at.mass * ((1.0 - w) * u[i0] + w * u[i1]);
  }
  return s;
}

double laplace_functional(const InitialMeasure& mu, const LogLaplaceState& state) {
  return std::exp(-pair_measure(mu, state.grid, state.u));
}

DualityReport duality_check(const ModelParams& params, const std::vector<double>& phi,
                            const Grid1D& grid,
                            const std::vector<std::vector<double>>& terminal_densities,
                            std::int64_t n_steps, double solver_rel_tol) {
  if (phi.size() != grid.size()) throw DomainError("phi does not match the grid");
  DualityReport rep;
  MeanAccumulator acc;
  for (const auto& x : terminal_densities) {
    if (x.size() != grid.size()) throw DomainError("replica density does not match the grid");
    double pair = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) pair += x[i] * phi[i];
    acc.add(std::exp(-pair * grid.dx()));
  }
  rep.n_replicas = static_cast<std::int64_t>(terminal_densities.size());
  rep.monte_carlo = acc.mean();
  rep.standard_error = acc.standard_error();
  rep.solver = laplace_functional(params.mu, solve_log_laplace(phi, params, grid, n_steps));
  double coarse =
      laplace_functional(params.mu, solve_log_laplace(phi, params, grid, std::max<std::int64_t>(1, n_steps / 2)));
  rep.solver_step_change = std::fabs(rep.solver - coarse);
  rep.tolerance = 3.0 * rep.standard_error + solver_rel_tol * rep.solver;
  rep.passed = std::fabs(rep.monte_carlo - rep.solver) <= rep.tolerance;
  return rep;
}

}  // namespace superfractal
