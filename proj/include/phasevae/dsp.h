// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// STFT analysis/synthesis and the phase representations built on it.
//
// Conventions:
//  - Spectrograms are F x N arrays (rows = frequency bins, columns = frames).
//  - Frames are centered: the signal is reflect-padded by window_length/2 on
//    both sides and frame n covers padded samples [n*hop, n*hop + window).
//    N = 1 + floor(length / hop).
//  - The windowed frame occupies the first window_length entries of the DFT
//    buffer, the remaining dft_size - window_length entries are zero.
//  - Synthesis is weighted overlap-add with the analysis window, normalized by
//    the summed squared window.
//  - All phases are wrapped into [-pi, pi); the phase of a zero bin is 0.

#ifndef PHASEVAE_DSP_H_
#define PHASEVAE_DSP_H_

#include <Eigen/Core>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace phasevae {
namespace dsp {

struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate = 16000;

  // Throws InvalidArgument on a nonpositive rate or non-finite samples.
  void Validate() const;
};

enum class WindowKind { kHann };

struct AnalysisConfig {
  int window_length = 512;
  int hop_length = 128;
  int dft_size = 1024;
  WindowKind window = WindowKind::kHann;

  int NumBins() const { return dft_size / 2 + 1; }
  int NumFrames(std::size_t num_samples) const;
  // Throws ConfigError when 0 < hop <= window <= dft, even dft is violated, or
  // when the overlap-add normalizer vanishes somewhere in the interior.
  void Validate() const;
  // Stable 64-bit fingerprint of the fields, stored in feature caches.
  uint64_t Hash() const;
  std::string ToString() const;

  bool operator==(const AnalysisConfig &) const = default;

  // 512-sample Hann, 75% overlap, 1024-point DFT (F = 513).
  static AnalysisConfig Paper() { return {}; }
  // 128-sample Hann, 75% overlap, 256-point DFT (F = 129).
  static AnalysisConfig Toy() { return {128, 32, 256, WindowKind::kHann}; }
};

// Periodic window of the requested kind.
std::vector<double> MakeWindow(WindowKind kind, int length);

struct ComplexSpectrogram {
  Eigen::ArrayXXcd values;  // F x N
  AnalysisConfig config;
  int sample_rate = 16000;

  int NumBins() const { return static_cast<int>(values.rows()); }
  int NumFrames() const { return static_cast<int>(values.cols()); }
};

struct MagnitudeSpectrogram {
  Eigen::ArrayXXd values;  // F x N, >= 0
  void Validate() const;
};

struct PhaseSpectrogram {
  Eigen::ArrayXXd values;  // F x N, in [-pi, pi)
  void Validate() const;
};

struct PhaseDerivatives {
  Eigen::ArrayXXd grd;  // (F-1) x N
  Eigen::ArrayXXd ifr;  // F x (N-1)
};

// Reduces an angle into [-pi, pi). Throws InvalidArgument on non-finite input.
double Wrap(double angle);

ComplexSpectrogram Stft(const AudioBuffer &audio, const AnalysisConfig &config);

// Inverts Stft. `length` defaults to (N - 1) * hop samples; lengths beyond the
// span covered by the frames are rejected.
AudioBuffer Istft(const ComplexSpectrogram &spec,
                  std::optional<std::size_t> length = std::nullopt);

std::pair<MagnitudeSpectrogram, PhaseSpectrogram> Decompose(
    const ComplexSpectrogram &spec);

ComplexSpectrogram Recombine(const MagnitudeSpectrogram &mag,
                             const PhaseSpectrogram &phase,
                             const AnalysisConfig &config,
                             int sample_rate = 16000);

// wrap(psi[f] - psi[f+1]) per frame, (F-1) x N.
Eigen::ArrayXXd GroupDelay(const PhaseSpectrogram &phase);
// wrap(psi[n+1] - psi[n]) per bin, F x (N-1).
Eigen::ArrayXXd InstantaneousFrequency(const PhaseSpectrogram &phase);
PhaseDerivatives Derivatives(const PhaseSpectrogram &phase);

PhaseSpectrogram ShiftPhase(const PhaseSpectrogram &phase, double offset);

}  // namespace dsp
}  // namespace phasevae

#endif  // PHASEVAE_DSP_H_
