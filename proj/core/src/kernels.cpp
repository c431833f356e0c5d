#include "superfractal/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>

#include "superfractal/errors.hpp"
#include "superfractal/fft.hpp"

namespace superfractal {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr int kFarTerms = 10;
constexpr int kDirectImages = 2;
// exp(-36) is below double roundoff relative to 1.
constexpr double kResolvedExponent = 36.0;

double lagrange4(const std::vector<double>& v, double u) {
  auto c = static_cast<std::size_t>(u);
  if (c < 1) c = 1;
  if (c + 2 >= v.size()) c = v.size() - 3;
  double f = u - static_cast<double>(c);
  double w0 = -f * (f - 1) * (f - 2) / 6, w1 = (f + 1) * (f - 1) * (f - 2) / 2;
  double w2 = -(f + 1) * f * (f - 2) / 2, w3 = (f + 1) * f * (f - 1) / 6;
  return w0 * v[c - 1] + w1 * v[c] + w2 * v[c + 1] + w3 * v[c + 2];
}
}  // namespace

PeriodicStableKernel::PeriodicStableKernel(double alpha, double length)
    : alpha_(alpha), L_(length), unit_(UnitStableDensity::get(alpha)) {
  if (!(length > 0)) throw DomainError("PeriodicStableKernel: length must be positive");
  const auto& coef = unit_->series_coefficients();
  if (coef.empty()) return;
  const int terms = std::min<int>(kFarTerms, static_cast<int>(coef.size()));
  // Nodes cover |z| <= L so interval masses up to one period stay inside.
  const std::size_t nodes = 516;
  node_ = L_ / 512.0;
  far_h_.assign(terms, std::vector<double>(nodes, 0.0));
  far_dh_.assign(terms, std::vector<double>(nodes, 0.0));
  const int J = 256;
  for (std::size_t c = 0; c < nodes; ++c) {
    double z = (static_cast<double>(c) - 1.0) * node_;
    for (int k = 0; k < terms; ++k) {
      double e = alpha * (k + 1.0) + 1.0;
      double h = 0.0, dh = 0.0;
      for (int j = kDirectImages + 1; j <= J; ++j) {
        double zp = z + j * L_, zm = j * L_ - z;
        h += std::pow(zp, -e) + std::pow(zm, -e);
        dh += -e * std::pow(zp, -e - 1.0) + e * std::pow(zm, -e - 1.0);
      }
      // Midpoint-integral remainder for |j| > J.
      double zl = (J + 0.5) * L_;
      h += (std::pow(zl + z, 1.0 - e) + std::pow(zl - z, 1.0 - e)) / (L_ * (e - 1.0));
      far_h_[k][c] = h;
      far_dh_[k][c] = dh;
    }
  }
}

std::shared_ptr<const PeriodicStableKernel> PeriodicStableKernel::get(double alpha,
                                                                     double length) {
  static std::mutex mu;
  static std::map<std::pair<double, double>, std::shared_ptr<const PeriodicStableKernel>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{alpha, length}];
  if (!slot) slot = std::make_shared<const PeriodicStableKernel>(alpha, length);
  return slot;
}

bool PeriodicStableKernel::narrow(double tau) const {
  return std::pow(tau, 1.0 / alpha_) <= L_ / 16.0;
}

double PeriodicStableKernel::fold(double z) const {
  z = std::fmod(z + 0.5 * L_, L_);
  if (z < 0) z += L_;
  return z - 0.5 * L_;
}

double PeriodicStableKernel::far_images(double tau, double z, int d) const {
  if (far_h_.empty()) return 0.0;
  const auto& coef = unit_->series_coefficients();
  double az = std::fabs(z);
  double u = az / node_ + 1.0;
  double acc = 0.0, tk = 1.0;
  for (std::size_t k = 0; k < far_h_.size(); ++k) {
    tk *= tau;
    double term = coef[k] * tk * lagrange4(d == 0 ? far_h_[k] : far_dh_[k], u);
    acc += term;
    if (std::fabs(term) < 1e-17 * std::fabs(acc)) break;
  }
  return (d == 1 && z < 0) ? -acc : acc;
}

double PeriodicStableKernel::fourier(double tau, double z, int d) const {
  // (1/L) [1 + 2 sum_m e^{-tau xi_m^alpha} cos(xi_m z)] and its derivative.
  const double dxi = 2.0 * kPi / L_;
  const double xmax = std::pow(40.0 / tau, 1.0 / alpha_);
  const auto mmax = static_cast<long>(xmax / dxi) + 1;
  const double th = dxi * z;
  const double c1 = std::cos(th), s1 = std::sin(th);
  double cm = 1.0, sm = 0.0;
  double acc = (d == 0) ? 1.0 : 0.0;
  for (long m = 1; m <= mmax; ++m) {
    double cn = cm * c1 - sm * s1;
    double sn = sm * c1 + cm * s1;
    cm = cn;
    sm = sn;
    double xi = dxi * static_cast<double>(m);
    double g = std::exp(-tau * std::pow(xi, alpha_));
    acc += (d == 0) ? 2.0 * g * cm : -2.0 * g * xi * sm;
  }
  return acc / L_;
}

double PeriodicStableKernel::fourier_mass(double tau, double a, double b) const {
  const double dxi = 2.0 * kPi / L_;
  const double xmax = std::pow(40.0 / tau, 1.0 / alpha_);
  const auto mmax = static_cast<long>(xmax / dxi) + 1;
  double acc = (b - a);
  for (long m = 1; m <= mmax; ++m) {
    double xi = dxi * static_cast<double>(m);
    double g = std::exp(-tau * std::pow(xi, alpha_));
    acc += 2.0 * g * (std::sin(xi * b) - std::sin(xi * a)) / xi;
  }
  return acc / L_;
}

double PeriodicStableKernel::pdf(double tau, double z) const {
  if (!narrow(tau)) return fourier(tau, z, 0);
  z = fold(z);
  const double w = std::pow(tau, 1.0 / alpha_);
  double acc = 0.0;
  for (int j = -kDirectImages; j <= kDirectImages; ++j) acc += unit_->pdf((z + j * L_) / w);
  return acc / w + far_images(tau, z, 0);
}

double PeriodicStableKernel::dpdf(double tau, double z) const {
  if (!narrow(tau)) return fourier(tau, z, 1);
  z = fold(z);
  const double w = std::pow(tau, 1.0 / alpha_);
  double acc = 0.0;
  for (int j = -kDirectImages; j <= kDirectImages; ++j) acc += unit_->dpdf((z + j * L_) / w);
  return acc / (w * w) + far_images(tau, z, 1);
}

double PeriodicStableKernel::mass(double tau, double a, double b) const {
  if (!(b > a)) return 0.0;
  if (!narrow(tau)) return fourier_mass(tau, a, b);
  const double mid = 0.5 * (a + b);
  const double shift = fold(mid) - mid;
  a += shift;
  b += shift;
  const double w = std::pow(tau, 1.0 / alpha_);
  double acc = 0.0;
  for (int j = -kDirectImages; j <= kDirectImages; ++j)
    acc += unit_->mass((a + j * L_) / w, (b + j * L_) / w);
  // Far images vary on the scale of the period: midpoint rule for cells,
  // Gauss-Legendre for long intervals.
  if (b - a <= L_ / 256.0) return acc + (b - a) * far_images(tau, 0.5 * (a + b), 0);
  using GL = boost::math::quadrature::gauss<double, 8>;
  double half = 0.5 * (b - a), c = 0.5 * (a + b), far = 0.0;
  for (std::size_t q = 0; q < GL::abscissa().size(); ++q)
    for (int sg : {-1, 1}) far += GL::weights()[q] * far_images(tau, c + sg * half * GL::abscissa()[q], 0);
  return acc + half * far;
}

double KernelTable::integral() const {
  double acc = 0.0;
  for (double v : values) acc += v;
  auto unit = UnitStableDensity::get(alpha);
  double w = std::pow(t, 1.0 / alpha);
  double end = unit->pdf(grid.x_max() / w) / w;
  acc += 0.5 * (end - values.front());
  return acc * grid.dx();
}

double KernelTable::tail_mass_outside() const {
  auto unit = UnitStableDensity::get(alpha);
  double w = std::pow(t, 1.0 / alpha);
  double lo = grid.x_min() / w, hi = grid.x_max() / w;
  return unit->mass(-INFINITY, lo) + unit->mass(hi, INFINITY);
}

void KernelTable::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw NumericError("cannot open " + path);
  os << "x,p,dp_dx\n" << std::setprecision(17);
  for (std::size_t i = 0; i < values.size(); ++i)
    os << grid.x(i) << ',' << values[i] << ',' << gradient_values[i] << '\n';
}

KernelTable build_kernel(double alpha, double t, const Grid1D& grid) {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("build_kernel: alpha must lie in (0, 2]");
  if (!(t > 0.0)) throw DomainError("build_kernel: t must be positive");
  const double w = std::pow(t, 1.0 / alpha);
  const double L = grid.length();
  if (L < 16.0 * w)
    throw DomainError("build_kernel: grid spans fewer than 16 kernel widths t^{1/alpha}");
  auto unit = UnitStableDensity::get(alpha);

  // Oversample until exp(-t |xi_Nyquist|^alpha) is negligible.
  int over = 1;
  while (t * std::pow(kPi * over / grid.dx(), alpha) < kResolvedExponent) {
    over *= 2;
    if (static_cast<std::size_t>(over) * grid.size() > (std::size_t{1} << 24))
      throw DomainError("build_kernel: t below the resolution of the grid");
  }
  const std::size_t n = grid.size() * static_cast<std::size_t>(over);
  RealFft& fft = fft_for(n);
  std::vector<cplx> spec(fft.spectrum_size()), dspec(fft.spectrum_size());
  for (std::size_t m = 0; m < spec.size(); ++m) {
    double xi = fft_frequency(m, L);
    // Phase shift places sample 0 at x_min.
    cplx phase = std::polar(1.0 / L, xi * grid.x_min());
    double g = std::exp(-t * std::pow(xi, alpha));
    spec[m] = g * phase;
    dspec[m] = (m + 1 == spec.size()) ? cplx(0.0) : g * cplx(0.0, xi) * phase;
  }
  std::vector<double> per(n), dper(n);
  fft.inverse(spec.data(), per.data());
  fft.inverse(dspec.data(), dper.data());

  KernelTable kt;
  kt.alpha = alpha;
  kt.t = t;
  kt.grid = grid;
  kt.oversampling = over;
  kt.values.resize(grid.size());
  kt.gradient_values.resize(grid.size());
  const double stitch = std::max(0.25 * L, 64.0 * w);
  const PeriodicStableKernel& per_kernel = *PeriodicStableKernel::get(alpha, L);
  if (grid.x_min() < -2.0 * L || grid.x_max() > 2.0 * L)
    throw DomainError("build_kernel: grid must lie within two periods of the origin");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double x = grid.x(i);
    double v = per[i * over], dv = dper[i * over];
    // Remove the periodic images: the nearest ones with the exact scaled
    // density, the rest from the far-image series.
    double z = per_kernel.fold(x);
    long own = std::lround((z - x) / L);
    for (long j = -2; j <= 2; ++j) {
      if (j == own) continue;
      double u = (z + j * L) / w;
      v -= unit->pdf(u) / w;
      dv -= unit->dpdf(u) / (w * w);
    }
    v -= per_kernel.far_images(t, z, 0);
    dv -= per_kernel.far_images(t, z, 1);
    // Beyond the reliable octave the image corrections dominate; use the
    // algebraic tail there.
    if (alpha < 2.0 && std::fabs(x) >= stitch) {
      v = unit->pdf(x / w) / w;
      dv = unit->dpdf(x / w) / (w * w);
    }
    // Deep Gaussian tails fall below FFT roundoff; floor the noise at 0.
    kt.values[i] = std::max(v, 0.0);
    kt.gradient_values[i] = dv;
  }
  // On a grid symmetric about 0 enforce exact parity of the samples.
  if (grid.x_min() == -grid.x_max()) {
    const std::size_t n0 = grid.size();
    for (std::size_t i = 1; i < n0 / 2; ++i) {
      double a = 0.5 * (kt.values[n0 / 2 - i] + kt.values[n0 / 2 + i]);
      double b = 0.5 * (kt.gradient_values[n0 / 2 + i] - kt.gradient_values[n0 / 2 - i]);
      kt.values[n0 / 2 - i] = kt.values[n0 / 2 + i] = a;
      kt.gradient_values[n0 / 2 + i] = b;
      kt.gradient_values[n0 / 2 - i] = -b;
    }
    kt.gradient_values[n0 / 2] = 0.0;
  }
  return kt;
}

SpectralPropagator::SpectralPropagator(const Grid1D& grid, double alpha)
    : grid_(grid), alpha_(alpha), kernel_(PeriodicStableKernel::get(alpha, grid.length())) {}

bool SpectralPropagator::resolved(double s) const {
  return s * std::pow(kPi / grid_.dx(), alpha_) >= kResolvedExponent;
}

namespace {
std::vector<double> real_spectrum(const std::vector<double>& kernel, double dx) {
  RealFft& fft = fft_for(kernel.size());
  auto spec = fft.forward(kernel);
  std::vector<double> m(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) m[i] = spec[i].real() * dx;
  return m;
}
}  // namespace

std::vector<double> SpectralPropagator::multiplier(double s) const {
  const std::size_t n = grid_.size();
  std::vector<double> m(n / 2 + 1);
  if (s == 0.0) {
    std::fill(m.begin(), m.end(), 1.0);
    return m;
  }
  if (resolved(s)) {
    for (std::size_t k = 0; k < m.size(); ++k)
      m[k] = std::exp(-s * std::pow(fft_frequency(k, grid_.length()), alpha_));
    return m;
  }
  const double dx = grid_.dx();
  std::vector<double> ker(n);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double z = (j < n / 2 ? static_cast<double>(j) : static_cast<double>(j) - n) * dx;
    ker[j] = kernel_->mass(s, z - 0.5 * dx, z + 0.5 * dx);
    total += ker[j];
  }
  for (double& v : ker) v /= total * dx;
  m = real_spectrum(ker, dx);
  m[0] = 1.0;
  return m;
}

std::vector<double> SpectralPropagator::averaged_multiplier(double s0, double s1,
                                                            bool cell_average) const {
  if (!(s1 > s0) || s0 < 0) throw DomainError("averaged_multiplier: need 0 <= s0 < s1");
  const std::size_t n = grid_.size();
  const double dx = grid_.dx();
  std::vector<double> m(n / 2 + 1);
  if (resolved(s0)) {
    for (std::size_t k = 0; k < m.size(); ++k) {
      double xi = fft_frequency(k, grid_.length());
      double lam = std::pow(xi, alpha_);
      double avg = (k == 0) ? 1.0
                            : std::exp(-s0 * lam) * -std::expm1(-(s1 - s0) * lam) /
                                  ((s1 - s0) * lam);
      double sinc = 1.0;
      if (cell_average && k > 0) sinc = std::sin(0.5 * xi * dx) / (0.5 * xi * dx);
      m[k] = avg * sinc;
    }
    return m;
  }
  return real_spectrum(averaged_kernel(s0, s1, 0), dx);
}

std::vector<double> SpectralPropagator::averaged_kernel(double s0, double s1, int derivative) const {
  if (!(s1 > s0) || s0 < 0) throw DomainError("averaged_kernel: need 0 <= s0 < s1");
  const std::size_t n = grid_.size();
  const double dx = grid_.dx();
  const double L = grid_.length();
  std::vector<double> out(n, 0.0);
  if (resolved(s0)) {
    auto m = averaged_multiplier(s0, s1, true);
    std::vector<cplx> spec(m.size());
    for (std::size_t k = 0; k < m.size(); ++k) {
      double xi = fft_frequency(k, L);
      spec[k] = derivative ? ((k + 1 == m.size()) ? cplx(0.0) : cplx(0.0, xi) * m[k] / L)
                           : cplx(m[k] / L);
    }
    fft_for(n).inverse(spec.data(), out.data());
    return out;
  }
  // Gauss-Legendre in tau; an interval starting at 0 (or spanning more than
  // an octave) is split geometrically so each piece is smooth.
  std::vector<std::pair<double, double>> pieces;
  double lo = s0 > 0 ? s0 : s1 * std::ldexp(1.0, -20);
  if (s0 == 0) pieces.emplace_back(0.0, lo);
  while (lo < s1) {
    double hi = std::min(s1, 2.0 * lo);
    if (s1 - hi < 0.25 * lo) hi = s1;
    pieces.emplace_back(lo, hi);
    lo = hi;
  }
  using GL = boost::math::quadrature::gauss<double, 8>;
  const auto& xs = GL::abscissa();
  const auto& ws = GL::weights();
  for (auto [a, b] : pieces) {
    double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (std::size_t q = 0; q < xs.size(); ++q) {
      for (int sgn : {-1, 1}) {
        if (xs[q] == 0.0 && sgn > 0) continue;
        double tau = mid + sgn * half * xs[q];
        double wt = ws[q] * half / (s1 - s0);
        for (std::size_t j = 0; j < n; ++j) {
          double z = (j < n / 2 ? static_cast<double>(j) : static_cast<double>(j) - n) * dx;
          double v = derivative
                         ? kernel_->pdf(tau, z + 0.5 * dx) - kernel_->pdf(tau, z - 0.5 * dx)
                         : kernel_->mass(tau, z - 0.5 * dx, z + 0.5 * dx);
          out[j] += wt * v / dx;
        }
      }
    }
  }
  return out;
}

void SpectralPropagator::apply(std::vector<double>& field, const std::vector<double>& mult) const {
  if (field.size() != grid_.size()) throw DomainError("apply: field does not match grid");
  RealFft& fft = fft_for(field.size());
  auto spec = fft.forward(field);
  for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= mult[k] / static_cast<double>(field.size());
  fft.inverse(spec.data(), field.data());
}

void SpectralPropagator::apply(std::vector<double>& field, double s) const {
  if (s < 0) throw DomainError("apply: negative time");
  if (s == 0.0) return;
  apply(field, multiplier(s));
}

std::vector<double> apply_semigroup(const std::vector<double>& field, double alpha, double s,
                                    const Grid1D& grid) {
  if (s < 0) throw DomainError("apply_semigroup: s must be >= 0");
  if (field.size() != grid.size()) throw DomainError("apply_semigroup: field does not match grid");
  std::vector<double> out = field;
  if (s == 0.0) return out;
  SpectralPropagator prop(grid, alpha);
  prop.apply(out, s);
  return out;
}

}  // namespace superfractal
