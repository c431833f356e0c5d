#include "superfractal/stable_density.hpp"

#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "superfractal/errors.hpp"
#include "superfractal/fft.hpp"

namespace superfractal {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kBox = 256.0;
constexpr std::size_t kFftSize = std::size_t{1} << 17;
constexpr int kMaxTerms = 40;
}  // namespace

UnitStableDensity::UnitStableDensity(double alpha) : alpha_(alpha) {
  if (!(alpha >= 0.5 && alpha <= 2.0))
    throw DomainError("UnitStableDensity: alpha must lie in [0.5, 2]");
  h_ = kBox / static_cast<double>(kFftSize);
  x_switch_ = 64.0;

  if (alpha < 2.0) {
    for (int k = 1; k <= kMaxTerms; ++k) {
      double mag = std::exp(std::lgamma(alpha * k + 1.0) - std::lgamma(k + 1.0)) / kPi;
      double sn = std::sin(kPi * alpha * k / 2.0);
      if (std::fabs(sn) < 1e-12) sn = 0.0;
      coef_.push_back(((k % 2) ? 1.0 : -1.0) * mag * sn);
      mag_.push_back(mag);
    }
  }

  // Periodized density and its first three derivatives on the FFT box.
  RealFft& fft = fft_for(kFftSize);
  const std::size_t ns = fft.spectrum_size();
  std::vector<cplx> spec(ns);
  std::vector<std::vector<double>> raw(4, std::vector<double>(kFftSize));
  for (int d = 0; d < 4; ++d) {
    for (std::size_t m = 0; m < ns; ++m) {
      double xi = fft_frequency(m, kBox);
      double phi = std::exp(-std::pow(xi, alpha)) / kBox;
      cplx f = phi;
      for (int q = 0; q < d; ++q) f *= cplx(0.0, xi);
      if (m == ns - 1 && (d % 2)) f = 0.0;
      spec[m] = f;
    }
    fft.inverse(spec.data(), raw[d].data());
  }

  const std::size_t nt = static_cast<std::size_t>(x_switch_ / h_) + 3;
  p_.resize(nt);
  dp_.resize(nt);
  d2p_.resize(nt);
  d3p_.resize(nt);
  // Images at y + kL with k != 0 sit at |z| >= 192, deep in the series
  // regime, and vary on the scale of the box: sum them on coarse nodes and
  // interpolate. The sum over |k| > K is replaced by its midpoint integral.
  std::vector<std::array<double, 3>> img;
  const double node = 0.25;
  if (!coef_.empty()) {
    const int K = 512;
    const double s = alpha + 1.0;
    const std::size_t nn = static_cast<std::size_t>(x_switch_ / node) + 4;
    img.resize(nn);
    for (std::size_t c = 0; c < nn; ++c) {
      double y = (static_cast<double>(c) - 1.0) * node;
      std::array<double, 3> acc{0.0, 0.0, 0.0};
      for (int k = 1; k <= K; ++k) {
        for (double z : {y + k * kBox, y - k * kBox}) {
          acc[0] += series_pdf(z);
          acc[1] += series_dpdf(z);
          acc[2] += series_d2pdf(z);
        }
      }
      double zlo = (K + 0.5) * kBox;
      for (double z : {zlo + y, zlo - y})
        acc[0] += coef_[0] * std::pow(z, 1.0 - s) / (kBox * (s - 1.0));
      img[c] = acc;
    }
  }
  auto image = [&](double y, int d) {
    if (img.empty()) return 0.0;
    double u = y / node + 1.0;
    auto c = static_cast<std::size_t>(u);
    if (c < 1) c = 1;
    double f = u - static_cast<double>(c);
    double w0 = -f * (f - 1) * (f - 2) / 6, w1 = (f + 1) * (f - 1) * (f - 2) / 2;
    double w2 = -(f + 1) * f * (f - 2) / 2, w3 = (f + 1) * f * (f - 1) / 6;
    return w0 * img[c - 1][d] + w1 * img[c][d] + w2 * img[c + 1][d] + w3 * img[c + 2][d];
  };
  for (std::size_t j = 0; j < nt; ++j) {
    double y = static_cast<double>(j) * h_;
    // Third derivative images are below roundoff; skip them.
    p_[j] = raw[0][j] - image(y, 0);
    dp_[j] = raw[1][j] - image(y, 1);
    d2p_[j] = raw[2][j] - image(y, 2);
    d3p_[j] = raw[3][j];
  }

  // Complementary distribution on the table: integrate the cubic Hermite
  // pieces backwards from the series value at the switch point.
  ccdf_.assign(nt, 0.0);
  std::size_t js = static_cast<std::size_t>(std::llround(x_switch_ / h_));
  ccdf_[js] = series_ccdf(x_switch_);
  for (std::size_t j = js; j-- > 0;) {
    double piece = h_ * (p_[j] + p_[j + 1]) / 2.0 + h_ * h_ * (dp_[j] - dp_[j + 1]) / 12.0;
    ccdf_[j] = ccdf_[j + 1] + piece;
  }
  for (std::size_t j = js + 1; j < nt; ++j) ccdf_[j] = series_ccdf(j * h_);
}

std::shared_ptr<const UnitStableDensity> UnitStableDensity::get(double alpha) {
  static std::mutex mu;
  static std::map<double, std::shared_ptr<const UnitStableDensity>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[alpha];
  if (!slot) slot = std::make_shared<const UnitStableDensity>(alpha);
  return slot;
}

// Sum of the tail series for the antiderivative (order -1), the density
// (0) or its derivatives (1, 2) at ax > 0, truncated where the magnitude
// envelope stops decreasing.
double UnitStableDensity::series_eval(double ax, int order) const {
  const double xa = std::pow(ax, -alpha_);
  double pw = (order == -1) ? 1.0 : std::pow(ax, -1.0 - order);
  double acc = 0.0;
  double prev = INFINITY;
  for (std::size_t k = 0; k < coef_.size(); ++k) {
    pw *= xa;
    double e = alpha_ * (k + 1.0);
    double factor = 1.0;
    switch (order) {
      case -1: factor = 1.0 / e; break;
      case 0: break;
      case 1: factor = -(e + 1.0); break;
      default: factor = (e + 1.0) * (e + 2.0); break;
    }
    double env = mag_[k] * std::fabs(factor) * pw;
    if (env > prev) break;
    prev = env;
    acc += coef_[k] * factor * pw;
    if (env < 1e-18 * std::fabs(acc)) break;
  }
  return acc;
}

double UnitStableDensity::series_pdf(double x) const { return series_eval(std::fabs(x), 0); }

double UnitStableDensity::series_dpdf(double x) const {
  double v = series_eval(std::fabs(x), 1);
  return x < 0 ? -v : v;
}

double UnitStableDensity::series_d2pdf(double x) const { return series_eval(std::fabs(x), 2); }

double UnitStableDensity::series_ccdf(double x) const { return series_eval(x, -1); }

double UnitStableDensity::hermite(const std::vector<double>& v, const std::vector<double>& dv,
                                  double x) const {
  double u = x / h_;
  auto j = static_cast<std::size_t>(u);
  double s = u - static_cast<double>(j);
  double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * v[j] + (s3 - 2 * s2 + s) * h_ * dv[j] +
         (-2 * s3 + 3 * s2) * v[j + 1] + (s3 - s2) * h_ * dv[j + 1];
}

double UnitStableDensity::pdf(double x) const {
  double ax = std::fabs(x);
  if (ax > x_switch_) return series_pdf(ax);
  return hermite(p_, dp_, ax);
}

double UnitStableDensity::dpdf(double x) const {
  double ax = std::fabs(x);
  double v = ax > x_switch_ ? series_dpdf(ax) : hermite(dp_, d2p_, ax);
  return x < 0 ? -v : v;
}

double UnitStableDensity::d2pdf(double x) const {
  double ax = std::fabs(x);
  if (ax > x_switch_) return series_d2pdf(ax);
  return hermite(d2p_, d3p_, ax);
}

double UnitStableDensity::ccdf_pos(double x) const {
  if (x > x_switch_) return series_ccdf(x);
  double u = x / h_;
  auto j = static_cast<std::size_t>(u);
  double s = u - static_cast<double>(j);
  // Integral of the Hermite cubic over [y_j, y_j + s h].
  double s2 = s * s, s3 = s2 * s, s4 = s3 * s;
  double part = h_ * ((s4 / 2 - s3 + s) * p_[j] + (s4 / 4 - 2 * s3 / 3 + s2 / 2) * h_ * dp_[j] +
                      (-s4 / 2 + s3) * p_[j + 1] + (s4 / 4 - s3 / 3) * h_ * dp_[j + 1]);
  return ccdf_[j] - part;
}

double UnitStableDensity::cdf(double x) const {
  return x >= 0 ? 1.0 - ccdf_pos(x) : ccdf_pos(-x);
}

double UnitStableDensity::mass(double x, double y) const {
  if (y <= x) return 0.0;
  if (x >= 0) return ccdf_pos(x) - ccdf_pos(y);
  if (y <= 0) return ccdf_pos(-y) - ccdf_pos(-x);
  return 1.0 - ccdf_pos(y) - ccdf_pos(-x);
}

}  // namespace superfractal
