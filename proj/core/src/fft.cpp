#include "superfractal/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>

namespace superfractal {

namespace {
// The FFTW planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  std::lock_guard<std::mutex> lock(planner_mutex());
  real_ = fftw_alloc_real(n);
  auto* spec = fftw_alloc_complex(n / 2 + 1);
  spec_ = spec;
  plan_fwd_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), real_, spec, FFTW_ESTIMATE);
  plan_inv_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), spec, real_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
  fftw_free(real_);
  fftw_free(spec_);
}

void RealFft::forward(const double* in, cplx* out) {
  std::copy(in, in + n_, real_);
  fftw_execute(static_cast<fftw_plan>(plan_fwd_));
  auto* s = static_cast<fftw_complex*>(spec_);
  for (std::size_t m = 0; m < spectrum_size(); ++m) out[m] = cplx(s[m][0], s[m][1]);
}

void RealFft::inverse(const cplx* in, double* out) {
  auto* s = static_cast<fftw_complex*>(spec_);
  for (std::size_t m = 0; m < spectrum_size(); ++m) {
    s[m][0] = in[m].real();
    s[m][1] = in[m].imag();
  }
  // c2r destroys its input; the copy above keeps the caller's data intact.
  fftw_execute(static_cast<fftw_plan>(plan_inv_));
  std::copy(real_, real_ + n_, out);
}

std::vector<cplx> RealFft::forward(const std::vector<double>& in) {
  std::vector<cplx> out(spectrum_size());
  forward(in.data(), out.data());
  return out;
}

std::vector<double> RealFft::inverse(const std::vector<cplx>& in) {
  std::vector<double> out(n_);
  inverse(in.data(), out.data());
  return out;
}

RealFft& fft_for(std::size_t n) {
  thread_local std::map<std::size_t, std::unique_ptr<RealFft>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<RealFft>(n);
  return *slot;
}

}  // namespace superfractal
