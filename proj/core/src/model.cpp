#include "superfractal/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "superfractal/errors.hpp"

namespace superfractal {

InitialMeasure InitialMeasure::lebesgue(double lo, double hi, double density) {
  InitialMeasure m;
  m.segment = LebesgueSegment{lo, hi, density};
  return m;
}

InitialMeasure InitialMeasure::atom(double x, double mass) {
  InitialMeasure m;
  m.atoms.push_back({x, mass});
  return m;
}

double InitialMeasure::total_mass() const {
  double m = 0.0;
  if (segment) m += segment->density * (segment->hi - segment->lo);
  for (const auto& a : atoms) m += a.mass;
  return m;
}

ValidationReport validate_params(const ModelParams& p) {
  ValidationReport r;
  auto fail = [&](const std::string& s) { r.violations.push_back(s); };
  if (!(p.beta > 0.0 && p.beta < 1.0)) fail("beta must lie in (0, 1)");
  if (!(p.alpha <= 2.0)) fail("alpha must be <= 2");
  if (!(p.alpha > 1.0 + p.beta)) fail("alpha must exceed 1 + beta");
  if (!(p.b >= 0.0) || !std::isfinite(p.b)) fail("b must be finite and >= 0");
  if (p.b == 0.0) r.notes.push_back("b = 0: branching switched off, deterministic flow");
  if (!(p.t > 0.0) || !std::isfinite(p.t)) fail("t must be finite and > 0");
  if (!std::isfinite(p.a)) fail("a must be finite");
  if (p.mu.segment) {
    const auto& s = *p.mu.segment;
    if (!(s.hi > s.lo) || !std::isfinite(s.lo) || !std::isfinite(s.hi))
      fail("mu segment must satisfy lo < hi");
    if (!(s.density >= 0.0) || !std::isfinite(s.density))
      fail("mu segment density must be finite and >= 0");
  }
  for (const auto& a : p.mu.atoms)
    if (!(a.mass >= 0.0) || !std::isfinite(a.mass) || !std::isfinite(a.x))
      fail("mu atoms need finite location and nonnegative mass");
  if (!std::isfinite(p.mu.total_mass())) fail("mu must have finite total mass");
  r.z2_differentiable = p.beta < (p.alpha - 1.0) / 2.0;
  return r;
}

SpectrumTheory derive_exponents(const ModelParams& p) {
  auto rep = validate_params(p);
  if (!rep.ok()) {
    std::ostringstream os;
    os << "invalid model parameters:";
    for (const auto& v : rep.violations) os << ' ' << v << ';';
    throw DomainError(os.str());
  }
  SpectrumTheory st;
  st.alpha = p.alpha;
  st.beta = p.beta;
  st.eta_c = p.alpha / (1.0 + p.beta) - 1.0;
  st.eta_bar_c = (1.0 + p.alpha) / (1.0 + p.beta) - 1.0;
  st.rho_coeff = p.b * (1.0 + p.beta) * p.beta / std::tgamma(1.0 - p.beta);
  return st;
}

double theoretical_spectrum(const SpectrumTheory& st, double eta) {
  if (!(eta >= st.eta_c && eta < st.eta_bar_c))
    throw DomainError("theoretical_spectrum: eta outside [eta_c, eta_bar_c)");
  return (1.0 + st.beta) * (eta - st.eta_c);
}

Grid1D::Grid1D(double x_min, double x_max, std::size_t n_points)
    : x_min_(x_min), x_max_(x_max), n_(n_points) {
  if (n_points < 2 || (n_points & (n_points - 1)) != 0)
    throw DomainError("Grid1D: n_points must be a power of two >= 2");
  if (!(x_max > x_min)) throw DomainError("Grid1D: x_max must exceed x_min");
  dx_ = (x_max - x_min) / static_cast<double>(n_points);
}

std::size_t Grid1D::cell_of(double x) const {
  double u = (x - x_min_) / dx_ + 0.5;
  double n = static_cast<double>(n_);
  u = std::fmod(u, n);
  if (u < 0) u += n;
  auto i = static_cast<std::size_t>(u);
  return i >= n_ ? 0 : i;
}

double Grid1D::wrap_delta(double d) const {
  const double L = length();
  d = std::fmod(d + 0.5 * L, L);
  if (d < 0) d += L;
  return d - 0.5 * L;
}

std::vector<double> lebesgue_density_on_grid(const InitialMeasure& mu, const Grid1D& g) {
  std::vector<double> f(g.size(), 0.0);
  if (!mu.segment) return f;
  const auto& s = *mu.segment;
  const double L = g.length();
  // Overlap of [lo, hi) with each cell, the segment replicated periodically.
  for (std::size_t i = 0; i < g.size(); ++i) {
    double c_lo = g.x(i) - 0.5 * g.dx();
    double c_hi = c_lo + g.dx();
    double acc = 0.0;
    double k_lo = std::floor((s.lo - c_hi) / L);
    double k_hi = std::ceil((s.hi - c_lo) / L);
    for (double k = k_lo; k <= k_hi; k += 1.0) {
      double lo = std::max(c_lo + k * L, s.lo);
      double hi = std::min(c_hi + k * L, s.hi);
      if (hi > lo) acc += hi - lo;
    }
    f[i] = s.density * acc / g.dx();
  }
  return f;
}

}  // namespace superfractal
