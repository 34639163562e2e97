#include "tempo/signal/spectrum.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <utility>

#include "tempo/common/error.hpp"

namespace tempo::signal {

namespace {

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};
using PlanPtr = std::unique_ptr<fftw_plan_s, PlanDeleter>;

struct FftwBuffer {
  explicit FftwBuffer(std::size_t bytes) : ptr(fftw_malloc(bytes)) {
    if (!ptr) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(ptr); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  void* ptr;
};

// Plans are created once per (size, direction) under a lock; executing a plan
// on caller-owned arrays is thread safe.
std::mutex g_plan_mutex;
std::map<std::pair<std::size_t, bool>, PlanPtr> g_plans;

fftw_plan_s* plan_for(std::size_t n, bool forward) {
  std::lock_guard lock(g_plan_mutex);
  auto& slot = g_plans[{n, forward}];
  if (!slot) {
    FftwBuffer real(sizeof(double) * n);
    FftwBuffer cplx(sizeof(fftw_complex) * (n / 2 + 1));
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    const int len = static_cast<int>(n);
    slot.reset(forward ? fftw_plan_dft_r2c_1d(len, static_cast<double*>(real.ptr),
                                              static_cast<fftw_complex*>(cplx.ptr), flags)
                       : fftw_plan_dft_c2r_1d(len, static_cast<fftw_complex*>(cplx.ptr),
                                              static_cast<double*>(real.ptr), flags | FFTW_DESTROY_INPUT));
    if (!slot) throw Error("FFTW plan creation failed for size " + std::to_string(n));
  }
  return slot.get();
}

}  // namespace

std::vector<double> power_spectrum(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) throw ShapeError("power_spectrum of an empty signal");
  std::vector<double> in(x.begin(), x.end());
  std::vector<std::complex<double>> out(n / 2 + 1);
  fftw_execute_dft_r2c(plan_for(n, true), in.data(), reinterpret_cast<fftw_complex*>(out.data()));
  std::vector<double> p(out.size());
  const double nn = static_cast<double>(n) * static_cast<double>(n);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
    p[k] = (edge ? 1.0 : 2.0) * std::norm(out[k]) / nn;
  }
  return p;
}

double bin_frequency(std::size_t bin, std::size_t n, double rate_hz) {
  return static_cast<double>(bin) * rate_hz / static_cast<double>(n);
}

std::vector<double> inverse_real_fft(std::span<const std::complex<double>> spectrum, std::size_t n) {
  if (spectrum.size() != n / 2 + 1) throw ShapeError("inverse_real_fft: spectrum must have n/2 + 1 bins");
  std::vector<std::complex<double>> in(spectrum.begin(), spectrum.end());
  std::vector<double> out(n);
  fftw_execute_dft_c2r(plan_for(n, false), reinterpret_cast<fftw_complex*>(in.data()), out.data());
  return out;
}

}  // namespace tempo::signal
