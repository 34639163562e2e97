#pragma once

#include <span>
#include <vector>

namespace tempo::signal {

/// Linear-phase lowpass FIR. Coefficients are symmetric with odd length and sum to 1.
struct FirFilter {
  std::vector<double> coefficients;
  double cutoff_hz = 0.0;
  double rate_hz = 0.0;
  int design_order = 0;

  std::size_t group_delay() const noexcept { return coefficients.size() / 2; }
};

/// Hamming-windowed sinc design with order + 1 taps (bumped to the next odd
/// count), normalized to unit DC gain. Requires 0 < cutoff < rate / 2, order >= 2.
FirFilter design_lowpass_fir(double cutoff_hz, int order, double rate_hz);

/// |H(f)| of the filter at frequency f.
double magnitude_response(const FirFilter& filter, double frequency_hz);

/// Forward convolution with the group delay cropped, so the output is aligned
/// with the input and has the same length. Samples beyond the edges are zero.
std::vector<double> filter_aligned(const FirFilter& filter, std::span<const double> signal);

}  // namespace tempo::signal
