// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef PHASEVAE_FFT_H_
#define PHASEVAE_FFT_H_

#include <complex>
#include <span>
#include <vector>

namespace phasevae {
namespace dsp {

// Real-input DFT of a fixed even size backed by FFTW. Plans are created once
// per size and shared; Forward/Inverse are safe to call from many threads.
class RealFft {
 public:
  explicit RealFft(int size);

  int size() const { return size_; }
  int num_bins() const { return size_ / 2 + 1; }

  // out[k] = sum_t in[t] exp(-2 pi i k t / size), k = 0 .. size/2.
  void Forward(std::span<const double> in,
               std::span<std::complex<double>> out) const;
  // Exact inverse of Forward (1/size normalization included). Imaginary parts
  // of the DC and Nyquist bins are ignored.
  void Inverse(std::span<const std::complex<double>> in,
               std::span<double> out) const;

 private:
  int size_;
  const void *forward_plan_;
  const void *inverse_plan_;
};

}  // namespace dsp
}  // namespace phasevae

#endif  // PHASEVAE_FFT_H_
