#include "superfractal/mfa.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "superfractal/errors.hpp"
#include "superfractal/stats.hpp"

namespace superfractal {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

// log2 of sum_{i=0}^{count-1} 2^{b i}.
double log2_geometric(double b, double count) {
  if (std::abs(b) < 1e-12) return std::log2(count);
  if (b > 0.0)
    return b * count + std::log2(-std::expm1(-b * count * kLn2)) - std::log2(-std::expm1(-b * kLn2));
  return std::log2(-std::expm1(b * count * kLn2)) - std::log2(-std::expm1(b * kLn2));
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Half-widths in cells of the usable windows around index i, largest first
// (j ascending means h descending).
std::vector<std::size_t> window_cells(const Grid1D& grid, std::size_t i, const ScaleRange& sr,
                                      int& dropped) {
  std::vector<std::size_t> out;
  dropped = 0;
  for (int j = sr.j_min; j <= sr.j_max; ++j) {
    const double h = std::ldexp(1.0, -j);
    const auto m = static_cast<std::size_t>(std::floor(h / grid.dx() + 1e-9));
    if (m < 1) continue;
    if (m > i || i + m >= grid.size()) {
      ++dropped;
      continue;
    }
    out.push_back(m);
  }
  return out;
}

// |f(i + k) - P(i + k)| maximised over |k| <= m.
double oscillation(const std::vector<double>& f, std::size_t i, std::size_t m, int degree,
                   double dx) {
  const double fx = f[i];
  double slope = 0.0;
  if (degree == 1) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 1; k <= m; ++k) {
      const double u = static_cast<double>(k) * dx;
      num += u * ((f[i + k] - fx) - (f[i - k] - fx));
      den += 2.0 * u * u;
    }
    slope = num / den;
  }
  double osc = 0.0;
  for (std::size_t k = 1; k <= m; ++k) {
    const double u = static_cast<double>(k) * dx;
    osc = std::max(osc, std::abs(f[i + k] - fx - slope * u));
    osc = std::max(osc, std::abs(f[i - k] - fx + slope * u));
  }
  return osc;
}

}  // namespace

HolderEstimate pointwise_holder(const std::vector<double>& field, const Grid1D& grid,
                                std::size_t x_index, const ScaleRange& scales,
                                int detrend_degree) {
  if (field.size() != grid.size()) throw DomainError("pointwise_holder: field size mismatch");
  if (x_index >= grid.size()) throw DomainError("pointwise_holder: index outside the grid");
  if (detrend_degree != 0 && detrend_degree != 1)
    throw DomainError("pointwise_holder: detrend degree must be 0 or 1");
  if (scales.j_min > scales.j_max) throw DomainError("pointwise_holder: empty scale range");

  HolderEstimate est;
  est.detrend_degree = detrend_degree;
  int dropped = 0;
  const auto windows = window_cells(grid, x_index, scales, dropped);
  if (dropped > 0) est.warnings.push_back("scale ladder shrunk: window leaves the grid");
  est.scales_used = static_cast<int>(windows.size());
  if (windows.size() < 4) est.warnings.push_back("fewer than 4 scales in the ladder");
  if (windows.size() < 2) {
    est.eta_hat = kNaN;
    return est;
  }

  double fmax = 0.0;
  const std::size_t mmax = windows.front();
  for (std::size_t k = x_index - mmax; k <= x_index + mmax; ++k)
    fmax = std::max(fmax, std::abs(field[k]));
  const double floor = 1e-13 * std::max(fmax, 1e-300);

  std::vector<double> lx, ly;
  for (auto m : windows) {
    const double osc = oscillation(field, x_index, m, detrend_degree, grid.dx());
    if (!(osc > floor)) {
      est.eta_hat = kHolderCap;
      est.smooth = true;
      est.fit_quality = 1.0;
      return est;
    }
    lx.push_back(std::log(static_cast<double>(m) * grid.dx()));
    ly.push_back(std::log(osc));
  }
  const LineFit fit = least_squares(lx, ly);
  est.fit_quality = std::isfinite(fit.r_squared) ? fit.r_squared : 1.0;
  est.eta_hat = std::clamp(fit.slope, 0.0, kHolderCap);
  est.smooth = fit.slope >= kHolderCap - 0.1;
  return est;
}

ScaleRange default_scale_range(const Grid1D& grid) {
  ScaleRange sr;
  sr.j_max = static_cast<int>(std::floor(std::log2(1.0 / (2.0 * grid.dx())) + 1e-9));
  sr.j_min = sr.j_max - 6;
  return sr;
}

HolderField holder_field(const std::vector<double>& field, const Grid1D& grid,
                         const HolderConfig& config) {
  if (field.size() != grid.size()) throw DomainError("holder_field: field size mismatch");
  const ScaleRange sr = config.scales.j_max == 0 ? default_scale_range(grid) : config.scales;

  HolderField hf;
  hf.grid = grid;
  const std::size_t n = grid.size();
  hf.eta_hat.assign(n, kNaN);
  hf.detrend_degree.assign(n, 0);
  hf.fit_quality.assign(n, kNaN);
  hf.smooth.assign(n, false);
  hf.near_one.assign(n, false);

  bool short_ladder = false;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = grid.x(i);
    if (x < config.x_lo || x > config.x_hi) continue;
    HolderEstimate best = pointwise_holder(field, grid, i, sr, 0);
    if (best.smooth || best.eta_hat > 1.0 + config.near_one) {
      best = pointwise_holder(field, grid, i, sr, 1);
      if (best.eta_hat < 1.0) hf.near_one[i] = true;
    } else if (std::abs(best.eta_hat - 1.0) <= config.near_one) {
      hf.near_one[i] = true;
      HolderEstimate e1 = pointwise_holder(field, grid, i, sr, 1);
      if (e1.fit_quality > best.fit_quality) best = e1;
    }
    if (best.scales_used < 4) short_ladder = true;
    hf.eta_hat[i] = best.eta_hat;
    hf.detrend_degree[i] = best.detrend_degree;
    hf.fit_quality[i] = best.fit_quality;
    hf.smooth[i] = best.smooth;
  }
  if (short_ladder) hf.warnings.push_back("some points have fewer than 4 scales");
  return hf;
}

std::vector<EtaBin> make_bins(double lo, double hi, double width) {
  if (!(width > 0.0) || !(hi > lo)) throw DomainError("make_bins: empty range");
  std::vector<EtaBin> bins;
  const auto count = static_cast<int>(std::ceil((hi - lo) / width - 1e-9));
  for (int k = 0; k < count; ++k)
    bins.emplace_back(lo + k * width, std::min(hi, lo + (k + 1) * width));
  return bins;
}

LevelSets level_sets(const HolderField& hf, const std::vector<EtaBin>& bins,
                     const std::vector<bool>* mask) {
  LevelSets ls;
  ls.bins = bins;
  ls.members.resize(bins.size());
  for (std::size_t i = 0; i < hf.eta_hat.size(); ++i) {
    if (!hf.evaluated(i) || hf.smooth[i] || hf.near_one[i]) continue;
    if (mask && !(*mask)[i]) continue;
    const double e = hf.eta_hat[i];
    for (std::size_t b = 0; b < bins.size(); ++b) {
      if (e >= bins[b].first && e < bins[b].second) {
        ls.members[b].push_back(i);
        break;
      }
    }
  }
  for (const auto& m : ls.members) ls.empty.push_back(m.empty());
  return ls;
}

std::vector<double> dyadic_scales(int j_min, int j_max) {
  std::vector<double> s;
  for (int j = j_min; j <= j_max; ++j) s.push_back(std::ldexp(1.0, -j));
  return s;
}

std::vector<double> spectrum_box_scales(const ScaleRange& holder_scales) {
  return dyadic_scales(2, holder_scales.j_max - 1);
}

namespace {

// Occupied boxes [x_min + (k - o) eps, x_min + (k + 1 - o) eps) for box
// origin offset o in [0, 1).
std::int64_t occupied(const std::vector<std::size_t>& sorted, const Grid1D& grid, double eps,
                      double offset) {
  std::int64_t count = 0;
  std::int64_t last = std::numeric_limits<std::int64_t>::min();
  for (auto i : sorted) {
    const auto box =
        static_cast<std::int64_t>(std::floor((grid.x(i) - grid.x_min()) / eps + offset));
    if (box != last) {
      ++count;
      last = box;
    }
  }
  return count;
}

constexpr int kBoxShifts = 8;

}  // namespace

BoxDimension box_dimension(const std::vector<std::size_t>& points, const Grid1D& grid,
                           const std::vector<double>& scales) {
  BoxDimension bd;
  bd.scales = scales;
  std::vector<std::size_t> sorted(points);
  std::sort(sorted.begin(), sorted.end());
  for (double eps : scales) {
    double sum = 0.0;
    for (int k = 0; k < kBoxShifts; ++k)
      sum += static_cast<double>(occupied(sorted, grid, eps, static_cast<double>(k) / kBoxShifts));
    bd.counts.push_back(sum / kBoxShifts);
  }
  if (points.empty() || scales.size() < 2) return bd;
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < scales.size(); ++k) {
    lx.push_back(std::log(1.0 / scales[k]));
    ly.push_back(std::log(bd.counts[k]));
  }
  const LineFit fit = least_squares(lx, ly);
  bd.dimension = fit.slope;
  bd.r_squared = std::isfinite(fit.r_squared) ? fit.r_squared : 1.0;
  bd.defined = points.size() >= 10 && scales.size() >= 4;
  return bd;
}

double gauge_function(const SpectrumTheory& st, double eta, double x) {
  const double l = std::log(1.0 / x);
  return std::pow(x, (st.beta + 1.0) * (eta - st.eta_c)) * l * l;
}

GaugeCoveringReport gauge_covering_sum(const std::vector<std::size_t>& points, const Grid1D& grid,
                                       double eta, const SpectrumTheory& st,
                                       const std::vector<double>& scales) {
  GaugeCoveringReport rep;
  rep.eta = eta;
  rep.cover_scale_ladder = scales;
  std::vector<std::size_t> sorted(points);
  std::sort(sorted.begin(), sorted.end());
  for (double eps : scales) rep.box_counts.push_back(occupied(sorted, grid, eps, 0.0));
  for (std::size_t k = 0; k < scales.size(); ++k)
    rep.gauge_sums.push_back(static_cast<double>(rep.box_counts[k]) *
                             gauge_function(st, eta, scales[k]));
  return rep;
}

std::vector<double> jump_exponent_field(const JumpRecord& jumps, const Grid1D& grid,
                                        const SpectrumTheory& st, double gamma, double t,
                                        const JumpExponentOptions& opts) {
  std::vector<double> out(grid.size(), kNoJumpExponent);
  const double expo = 1.0 / (1.0 + st.beta) - gamma;
  const double reach = std::min(opts.distance_cutoff, 1.0);
  const auto half = static_cast<std::int64_t>(std::ceil(reach / grid.dx()));
  const auto n = static_cast<std::int64_t>(grid.size());
  std::vector<double> best(grid.size(), kNoJumpExponent);
  for (const auto& jp : jumps.jumps) {
    const double lag = t - jp.s;
    if (!(lag > 0.0) || lag >= opts.time_cutoff) continue;
    const double num = std::log(jp.r) - expo * std::log(lag);
    const auto c = static_cast<std::int64_t>(grid.cell_of(jp.y));
    for (std::int64_t d = -std::min(half, n / 2); d < std::min(half + 1, n / 2); ++d) {
      const auto i = static_cast<std::size_t>(((c + d) % n + n) % n);
      const double dist = std::abs(grid.wrap_delta(grid.x(i) - jp.y));
      if (!(dist > 0.0) || dist >= reach) continue;
      best[i] = std::min(best[i], num / std::log(dist));
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i)
    if (best[i] != kNoJumpExponent) out[i] = st.eta_c + best[i];
  return out;
}

double census_intensity(const ModelParams& p, double mass_bound, int n, int j) {
  const double rho = p.b * (1.0 + p.beta) * p.beta / std::tgamma(1.0 - p.beta);
  return mass_bound * rho * (std::pow(2.0, 1.0 + p.beta) - 1.0) / (2.0 * (1.0 + p.beta)) *
         std::pow(2.0, n * (1.0 + p.beta) - j);
}

double census_ball_radius(const SpectrumTheory& st, double gamma, double eta, int n, int j) {
  const double e = 1.0 / (1.0 + st.beta) - gamma;
  return std::pow(std::ldexp(1.0, -n) / std::pow(std::ldexp(1.0, -j - 1), e),
                  1.0 / (eta - st.eta_c));
}

int census_n0(const SpectrumTheory& st, double gamma, int j) {
  return static_cast<int>(std::floor(j * (1.0 / (1.0 + st.beta) - gamma / 4.0)));
}

int census_n1(const SpectrumTheory& st, double gamma, int j) {
  return static_cast<int>(std::floor(j * (1.0 / (1.0 + st.beta) + gamma / 4.0)));
}

double sup_mass_on(const MeasurePath& path, double lo, double hi) {
  double best = 0.0;
  const Grid1D& g = path.grid;
  for (const auto& f : path.fields) {
    if (f.empty()) continue;
    double m = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (g.x(i) > lo && g.x(i) < hi) m += f[i];
    best = std::max(best, m * g.dx());
  }
  return best;
}

JumpCensus jump_census(const JumpRecord& jumps, const ModelParams& params,
                       const SpectrumTheory& st, double gamma, double eta, double mass_bound,
                       const JumpCensusOptions& opts) {
  if (!(eta > st.eta_c && eta < st.eta_bar_c))
    throw DomainError("jump_census: eta outside (eta_c, eta_bar_c)");
  JumpCensus jc;
  jc.gamma = gamma;
  jc.eta = eta;
  jc.mass_bound = mass_bound;
  const double t = params.t;

  const int j_lo = std::max(0, static_cast<int>(std::ceil(std::log2(1.0 / t) - 1e-12)));
  const int j_hi = opts.j_max > 0 ? opts.j_max : 24;
  // 2^{-n-1} >= r_min.
  const double r_rec = std::max(jumps.r_min, jumps.record_min);
  const int n_hi = r_rec > 0.0
                       ? static_cast<int>(std::floor(std::log2(1.0 / r_rec) + 1e-12)) - 1
                       : 40;
  const int n_lo = 0;
  if (j_hi < j_lo || n_hi < n_lo) {
    jc.warnings.push_back("no census box is resolved");
    return jc;
  }
  const int nj = j_hi - j_lo + 1, nn = n_hi - n_lo + 1;
  std::vector<std::int64_t> counts(static_cast<std::size_t>(nj * nn), 0);
  std::int64_t oversized = 0;
  for (const auto& jp : jumps.jumps) {
    if (jp.y < opts.y_lo || jp.y >= opts.y_hi) continue;
    const double lag = t - jp.s;
    if (!(lag > 0.0)) continue;
    // lag in (2^{-j-1}, 2^-j], r in [2^{-n-1}, 2^-n).
    const int j = static_cast<int>(std::floor(-std::log2(lag)));
    const int n = static_cast<int>(std::floor(-std::log2(jp.r)));
    if (n < n_lo) {
      ++oversized;
      continue;
    }
    if (j < j_lo || j > j_hi || n > n_hi) continue;
    ++counts[static_cast<std::size_t>((j - j_lo) * nn + (n - n_lo))];
    if (n >= census_n0(st, gamma, j))
      jc.balls.push_back({jp.y, census_ball_radius(st, gamma, eta, n, j), j, n});
  }
  if (oversized > 0) jc.warnings.push_back("jumps of size >= 1 left out of the census");

  const double chern = 2.0 * std::log(2.0) - 1.0;
  bool incomplete = false;
  for (int j = j_lo; j <= j_hi; ++j) {
    for (int n = n_lo; n <= n_hi; ++n) {
      CensusBox b;
      b.j = j;
      b.n = n;
      b.count = counts[static_cast<std::size_t>((j - j_lo) * nn + (n - n_lo))];
      b.lambda = census_intensity(params, mass_bound, n, j);
      b.exceeds = static_cast<double>(b.count) > 2.0 * b.lambda;
      b.stated_bound = std::exp(-b.lambda);
      b.chernoff_bound = std::exp(-chern * b.lambda);
      jc.boxes.push_back(b);
    }
    CensusOctave o;
    o.j = j;
    o.n0 = std::max(n_lo, census_n0(st, gamma, j));
    o.n1 = census_n1(st, gamma, j);
    if (o.n1 > n_hi) {
      incomplete = true;
      continue;
    }
    for (int n = o.n0; n <= o.n1; ++n) {
      o.Lambda += census_intensity(params, mass_bound, n, j);
      o.count += counts[static_cast<std::size_t>((j - j_lo) * nn + (n - n_lo))];
    }
    o.exceeds = static_cast<double>(o.count) > 2.0 * o.Lambda;
    jc.octaves.push_back(o);
  }
  if (incomplete) jc.warnings.push_back("octaves with n1(j) below the recording threshold omitted");
  return jc;
}

SumRuleReport census_sum_rule(const ModelParams& p, const SpectrumTheory& st, double gamma,
                              double eta, double theta, double mass_bound, int base_truncation,
                              int doublings) {
  if (!(eta > st.eta_c && eta < st.eta_bar_c))
    throw DomainError("census_sum_rule: eta outside (eta_c, eta_bar_c)");
  SumRuleReport rep;
  rep.theta = theta;
  rep.threshold = (1.0 + st.beta) * (eta - st.eta_c);
  const double d = theta / (eta - st.eta_c);
  const double rho = p.b * (1.0 + p.beta) * p.beta / std::tgamma(1.0 - p.beta);
  const double log2_pref =
      std::log2(mass_bound * rho * (std::pow(2.0, 1.0 + p.beta) - 1.0) / (2.0 * (1.0 + p.beta)));
  const double e = 1.0 / (1.0 + st.beta) - gamma;
  // 2 lambda_{n,j} radius^theta = 2^{c0 + b n} with b = 1 + beta - d; the n-range
  // n1 .. n1 + K - 1 is summed as a geometric series.
  const double b = 1.0 + p.beta - d;
  auto n_sum = [&](int j, int K) {
    const double c0 = 1.0 + log2_pref - j + d * (j + 1) * e;
    const int n1 = census_n1(st, gamma, j);
    return std::exp2(c0 + b * n1 + log2_geometric(b, K));
  };
  auto partial = [&](int K) {
    double s = 0.0;
    for (int j = 1; j <= K; ++j) {
      const int n0 = census_n0(st, gamma, j), n1 = census_n1(st, gamma, j);
      const double g = 1.0 + p.beta;
      s += std::exp2(1.0 + log2_pref + n0 * g - j + log2_geometric(g, n1 - n0 + 1) -
                     3.0 * gamma * j / (4.0 * (eta - st.eta_c)) * theta);
      s += n_sum(j, K);
    }
    return s;
  };
  std::int64_t K = base_truncation;
  for (int k = 0; k <= doublings; ++k, K *= 2)
    rep.partial_sums.push_back(partial(static_cast<int>(K)));
  // The j-summands decay at a rate proportional to gamma, so convergence is
  // judged on the last doubling only.
  const std::size_t last = rep.partial_sums.size() - 1;
  const double tail = rep.partial_sums[last] - rep.partial_sums[last - 1];
  rep.converges = std::isfinite(rep.partial_sums[last]) && tail <= 1e-6 * rep.partial_sums[last];
  return rep;
}

std::vector<std::string> resolve_census_params(CensusParams& cp, const SpectrumTheory& st,
                                               const std::vector<double>& terminal,
                                               const Grid1D& grid) {
  std::vector<std::string> bad;
  const double alpha = st.alpha;
  if (cp.theta <= 0.0) {
    double s = 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (grid.x(i) > 0.0 && grid.x(i) < 1.0) {
        s += terminal[i];
        ++k;
      }
    cp.theta = k > 0 ? 0.1 * s / static_cast<double>(k) : 0.0;
  }
  if (cp.gamma <= 0.0) cp.gamma = std::min(1e-2 * st.eta_c / alpha, 1e-3) / 2.0;
  if (cp.rho <= 0.0) cp.rho = cp.gamma / 200.0;
  const double nu_lo = (alpha * cp.gamma + 5.0 * cp.rho) / st.eta_c;
  if (cp.nu <= 0.0) cp.nu = 0.5 * (nu_lo + 0.1);
  const double c_lo = 10.0 / (2.0 - cp.eta), c_hi = 1.0 / (10.0 * cp.rho);
  if (cp.c <= 0.0) cp.c = 2.0 * c_lo < c_hi ? 2.0 * c_lo : 0.5 * (c_lo + c_hi);

  if (!(cp.m > 3.0 / alpha)) bad.push_back("m must exceed 3/alpha");
  if (!(cp.eta > st.eta_c && cp.eta < st.eta_bar_c))
    bad.push_back("eta must lie in (eta_c, eta_bar_c)");
  if (!(cp.rho < 1e-2 * cp.gamma)) bad.push_back("rho must be below 1e-2 gamma");
  if (!(cp.nu > nu_lo && cp.nu < 0.1))
    bad.push_back("nu must lie in ((alpha gamma + 5 rho)/eta_c, 0.1)");
  if (!(cp.c > c_lo && cp.c < c_hi)) bad.push_back("c must lie in (10/(2 - eta), 1/(10 rho))");
  if (cp.Q <= 1) bad.push_back("Q must exceed 1");
  if (cp.R <= 0) bad.push_back("R must be positive");
  if (cp.n_min < 1 || cp.n_max < cp.n_min) bad.push_back("n range must satisfy 1 <= n_min <= n_max");
  return bad;
}

EventCensus event_census(const MeasurePath& path, const JumpRecord& jumps,
                         const ModelParams& params, const SpectrumTheory& st, CensusParams cp) {
  const Grid1D& g = path.grid;
  const auto& tg = path.time_grid.times;
  if (path.fields.size() != tg.size() || path.fields.back().empty())
    throw DomainError("event_census: the path must store its fields");
  const auto bad = resolve_census_params(cp, st, path.terminal(), g);
  if (!bad.empty()) throw DomainError("event_census: " + bad.front());

  EventCensus ec;
  const double alpha = params.alpha, beta = params.beta, m = cp.m, eta = cp.eta;
  ec.q = (alpha + 3.0) * m / ((beta + 1.0) * (eta - st.eta_c));

  const int n_res = static_cast<int>(std::floor(std::log2(1.0 / (2.0 * g.dx())) + 1e-9));
  if (cp.n_max > n_res) {
    ec.warnings.push_back("n range truncated at " + std::to_string(n_res) +
                          ": cells narrower than two grid points");
    cp.n_max = n_res;
  }
  ec.params = cp;
  const double t = tg.back();
  const double rho_b = params.b * (1.0 + beta) * beta / std::tgamma(1.0 - beta);

  // Prefix sums of dx * field over grid points, per stored time.
  const std::size_t ng = g.size();
  auto prefix_of = [&](const std::vector<double>& f) {
    std::vector<double> pre(ng + 1, 0.0);
    for (std::size_t i = 0; i < ng; ++i) pre[i + 1] = pre[i] + f[i] * g.dx();
    return pre;
  };
  // Grid index range [first, last) of points with x in [lo, hi).
  auto first_at = [&](double x) {
    const double u = std::ceil((x - g.x_min()) / g.dx() - 1e-9);
    return static_cast<std::size_t>(std::clamp(u, 0.0, static_cast<double>(ng)));
  };
  auto mass_in = [&](const std::vector<double>& pre, double lo, double hi) {
    return pre[first_at(hi)] - pre[first_at(lo)];
  };

  std::vector<std::vector<double>> prefixes(tg.size());
  auto prefix_at = [&](std::size_t k) -> const std::vector<double>& {
    if (prefixes[k].empty()) prefixes[k] = prefix_of(path.fields[k]);
    return prefixes[k];
  };

  for (int n = cp.n_min; n <= cp.n_max; ++n) {
    EventCensusRow row;
    row.n = n;
    const double nn = n;
    const auto cells = static_cast<std::size_t>(1) << n;
    const double w = std::ldexp(1.0, -n);

    // O_n: sup over s in (t - 2^{-alpha n} n^{alpha^2 m / 3}, t].
    const double win_o = std::pow(2.0, -alpha * nn) * std::pow(nn, alpha * alpha * m / 3.0);
    const double thr_o = w * std::pow(nn, 2.0 * m * alpha / 3.0);
    for (std::size_t k = 0; k < tg.size() && !row.O; ++k) {
      if (path.fields[k].empty() || !(t - tg[k] < win_o)) continue;
      const auto& pre = prefix_at(k);
      for (std::size_t c = 0; c < cells; ++c)
        if (mass_in(pre, c * w, (c + 1) * w) >= thr_o) {
          row.O = true;
          break;
        }
    }

    // B_n: inf over s in (t - 2^{-alpha n} n^{-alpha m}, t].
    const double win_b = std::pow(2.0, -alpha * nn) * std::pow(nn, -alpha * m);
    const double thr_b = w * std::pow(nn, -2.0 * m);
    std::vector<double> inf_mass(cells, std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < tg.size(); ++k) {
      if (path.fields[k].empty() || !(t - tg[k] < win_b)) continue;
      const auto& pre = prefix_at(k);
      for (std::size_t c = 0; c < cells; ++c)
        inf_mass[c] = std::min(inf_mass[c], mass_in(pre, c * w, (c + 1) * w));
    }
    const auto& term = path.terminal();
    for (std::size_t c = 0; c < cells && !row.B; ++c) {
      bool high = false;
      for (std::size_t i = first_at(c * w); i < first_at((c + 1) * w); ++i)
        if (term[i] >= cp.theta) high = true;
      if (high && inf_mass[c] <= thr_b) row.B = true;
    }

    // A_k^(n): a jump of size >= 2^{-(eta+1)n} in the window, tallied by cell.
    const double r_a = std::pow(2.0, -(eta + 1.0) * nn);
    row.A_resolved = r_a >= std::max(jumps.r_min, jumps.record_min);
    const double a_lo = t - win_b;
    const double a_hi = t - std::pow(2.0, -alpha * (nn + 1)) * std::pow(nn + 1, -alpha * m);
    std::vector<char> hit(cells, 0);
    for (const auto& jp : jumps.jumps) {
      if (jp.r < r_a || jp.s < a_lo || jp.s >= a_hi || jp.y < 0.0 || jp.y >= 1.0) continue;
      hit[static_cast<std::size_t>(jp.y / w)] = 1;
    }
    row.A_cells = std::accumulate(hit.begin(), hit.end(), std::int64_t{0});

    // G_k^(n): two or more jumps near cell k.
    const double cr = cp.c * cp.rho;
    const double r_g = std::pow(2.0, -(eta + 1.0 + 2.0 * cp.rho + 2.0 * cr) * nn);
    row.G_resolved = r_g >= std::max(jumps.r_min, jumps.record_min);
    const double g_lo = t - std::pow(2.0, -alpha * (1.0 - cr) * nn);
    const double g_hi = t - std::pow(2.0, -alpha * (1.0 + cr) * nn);
    const double pad = std::pow(2.0, -nn * (1.0 - cr) * (1.0 - cp.nu));
    std::vector<double> ys;
    for (const auto& jp : jumps.jumps)
      if (jp.r >= r_g && jp.s >= g_lo && jp.s < g_hi) ys.push_back(jp.y);
    std::sort(ys.begin(), ys.end());
    // Integrated intensity of qualifying jumps per cell, left-point rule on
    // the stored fields.
    std::vector<double> mu(cells, 0.0);
    const double size_factor = rho_b * std::pow(r_g, -1.0 - beta) / (1.0 + beta);
    for (std::size_t k = 0; k + 1 < tg.size(); ++k) {
      const double overlap = std::min(tg[k + 1], g_hi) - std::max(tg[k], g_lo);
      if (!(overlap > 0.0) || path.fields[k].empty()) continue;
      const auto& pre = prefix_at(k);
      for (std::size_t c = 0; c < cells; ++c)
        mu[c] += overlap * size_factor * mass_in(pre, c * w - pad, (c + 1) * w + pad);
    }
    double env = 0.0;
    for (std::size_t c = 0; c < cells; ++c) {
      const double lo = c * w - pad, hi = (c + 1) * w + pad;
      const auto cnt = std::upper_bound(ys.begin(), ys.end(), hi) -
                       std::lower_bound(ys.begin(), ys.end(), lo);
      if (cnt >= 2) ++row.G_cells;
      env += mu[c] * mu[c];
    }
    row.G_envelope = env / static_cast<double>(cells);
    ec.rows.push_back(row);
  }
  return ec;
}

SpectrumEstimate empirical_spectrum(const LevelSets& ls, const Grid1D& grid,
                                    const SpectrumTheory& st, const std::vector<double>& scales) {
  SpectrumEstimate se;
  se.eta_bins = ls.bins;
  for (std::size_t b = 0; b < ls.bins.size(); ++b) {
    const auto bd = box_dimension(ls.members[b], grid, scales);
    se.d_hat.push_back(bd.defined ? std::clamp(bd.dimension, 0.0, 1.0) : kNaN);
    const double mid = 0.5 * (ls.bins[b].first + ls.bins[b].second);
    se.d_theory.push_back(mid >= st.eta_c && mid < st.eta_bar_c ? theoretical_spectrum(st, mid)
                                                                : kNaN);
    se.counts.push_back(static_cast<std::int64_t>(ls.members[b].size()));
  }
  return se;
}

SpectrumEstimate pool_spectra(const std::vector<SpectrumEstimate>& runs) {
  if (runs.empty()) return {};
  SpectrumEstimate out;
  out.eta_bins = runs.front().eta_bins;
  out.d_theory = runs.front().d_theory;
  const std::size_t nb = out.eta_bins.size();
  out.d_hat.assign(nb, kNaN);
  out.counts.assign(nb, 0);
  for (std::size_t b = 0; b < nb; ++b) {
    MeanAccumulator acc;
    for (const auto& r : runs) {
      if (r.eta_bins.size() != nb) throw DomainError("pool_spectra: bin layouts differ");
      out.counts[b] += r.counts[b];
      if (std::isfinite(r.d_hat[b])) acc.add(r.d_hat[b]);
    }
    if (acc.count() > 0) out.d_hat[b] = acc.mean();
  }
  return out;
}

}  // namespace superfractal
