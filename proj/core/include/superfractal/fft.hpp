#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace superfractal {

using cplx = std::complex<double>;

// Real-to-complex FFT of fixed length backed by FFTW plans (FFTW_ESTIMATE,
// so results do not depend on planner timing). Unnormalized in both
// directions: inverse(forward(f)) == n * f.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  std::size_t spectrum_size() const { return n_ / 2 + 1; }

  void forward(const double* in, cplx* out);
  void inverse(const cplx* in, double* out);

  std::vector<cplx> forward(const std::vector<double>& in);
  std::vector<double> inverse(const std::vector<cplx>& in);

 private:
  std::size_t n_;
  double* real_;
  void* spec_;
  void* plan_fwd_;
  void* plan_inv_;
};

// Per-thread cached transform of length n.
RealFft& fft_for(std::size_t n);

// Angular frequency of rfft bin m on a periodic box of length L.
inline double fft_frequency(std::size_t m, double L) {
  return 2.0 * 3.14159265358979323846 * static_cast<double>(m) / L;
}

}  // namespace superfractal
