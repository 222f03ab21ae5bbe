// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "phasevae/dsp.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "phasevae/angles.h"
#include "phasevae/error.h"
#include "phasevae/fft.h"

namespace phasevae {
namespace dsp {

void AudioBuffer::Validate() const {
  if (sample_rate <= 0) {
    throw InvalidArgument("sample rate must be positive, got " +
                          std::to_string(sample_rate));
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i])) {
      throw InvalidArgument("non-finite audio sample at index " +
                            std::to_string(i));
    }
  }
}

int AnalysisConfig::NumFrames(std::size_t num_samples) const {
  return 1 + static_cast<int>(num_samples / static_cast<std::size_t>(hop_length));
}

void AnalysisConfig::Validate() const {
  if (hop_length <= 0 || hop_length > window_length ||
      window_length > dft_size) {
    throw ConfigError("analysis config requires 0 < hop <= window <= dft, got " +
                      ToString());
  }
  if (dft_size % 2 != 0) {
    throw ConfigError("DFT size must be even, got " + ToString());
  }
  // The overlap-add normalizer sum_m w^2[t + m*hop] is hop-periodic in the
  // interior; synthesis needs it bounded away from zero.
  const std::vector<double> w = MakeWindow(window, window_length);
  double lo = INFINITY, hi = 0.0;
  for (int t = 0; t < hop_length; ++t) {
    double acc = 0.0;
    for (int i = t; i < window_length; i += hop_length) acc += w[i] * w[i];
    lo = std::min(lo, acc);
    hi = std::max(hi, acc);
  }
  if (!(lo > 1e-10 * hi)) {
    throw ConfigError(
        "window/hop combination cannot be inverted by overlap-add: " +
        ToString());
  }
}

uint64_t AnalysisConfig::Hash() const {
  // FNV-1a over the integer fields.
  uint64_t h = 1469598103934665603ull;
  auto mix = [&h](int64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= static_cast<uint64_t>((v >> (8 * b)) & 0xff);
      h *= 1099511628211ull;
    }
  };
  mix(window_length);
  mix(hop_length);
  mix(dft_size);
  mix(static_cast<int64_t>(window));
  return h;
}

std::string AnalysisConfig::ToString() const {
  std::ostringstream os;
  os << "window=" << window_length << " hop=" << hop_length
     << " dft=" << dft_size << " kind=hann";
  return os.str();
}

std::vector<double> MakeWindow(WindowKind kind, int length) {
  std::vector<double> w(length);
  switch (kind) {
    case WindowKind::kHann:
      for (int i = 0; i < length; ++i) {
        w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi<double> * i / length);
      }
      break;
  }
  return w;
}

void MagnitudeSpectrogram::Validate() const {
  if (!values.allFinite() || (values < 0.0).any()) {
    throw InvalidArgument("magnitude spectrogram must be finite and >= 0");
  }
}

void PhaseSpectrogram::Validate() const {
  if (!values.allFinite() || (values < -kPi<double>).any() ||
      (values >= kPi<double>).any()) {
    throw InvalidArgument("phase spectrogram entries must lie in [-pi, pi)");
  }
}

double Wrap(double angle) {
  if (!std::isfinite(angle)) throw InvalidArgument("wrap of non-finite angle");
  return WrapAngle(angle);
}

ComplexSpectrogram Stft(const AudioBuffer &audio,
                        const AnalysisConfig &config) {
  config.Validate();
  audio.Validate();
  const int win = config.window_length;
  const int hop = config.hop_length;
  const std::size_t len = audio.samples.size();
  if (len < static_cast<std::size_t>(win)) {
    throw InvalidArgument("audio shorter than one analysis window (" +
                          std::to_string(len) + " < " + std::to_string(win) +
                          ")");
  }
  const int pad_left = win / 2;
  const int pad_right = win - pad_left;
  const std::ptrdiff_t n_len = static_cast<std::ptrdiff_t>(len);
  std::vector<double> padded(len + pad_left + pad_right);
  for (std::size_t i = 0; i < padded.size(); ++i) {
    std::ptrdiff_t j = static_cast<std::ptrdiff_t>(i) - pad_left;
    if (j < 0) j = -j;
    if (j >= n_len) j = 2 * (n_len - 1) - j;
    padded[i] = audio.samples[j];
  }

  const int num_frames = config.NumFrames(len);
  const std::vector<double> window = MakeWindow(config.window, win);
  const RealFft fft(config.dft_size);
  ComplexSpectrogram spec;
  spec.config = config;
  spec.sample_rate = audio.sample_rate;
  spec.values.resize(config.NumBins(), num_frames);
  std::vector<double> frame(config.dft_size, 0.0);
  std::vector<std::complex<double>> bins(config.NumBins());
  for (int n = 0; n < num_frames; ++n) {
    const double *src = padded.data() + static_cast<std::size_t>(n) * hop;
    for (int i = 0; i < win; ++i) frame[i] = src[i] * window[i];
    fft.Forward(frame, bins);
    for (int k = 0; k < config.NumBins(); ++k) spec.values(k, n) = bins[k];
  }
  return spec;
}

AudioBuffer Istft(const ComplexSpectrogram &spec,
                  std::optional<std::size_t> length) {
  const AnalysisConfig &config = spec.config;
  config.Validate();
  if (spec.NumBins() != config.NumBins()) {
    throw InvalidArgument("spectrogram has " + std::to_string(spec.NumBins()) +
                          " bins, config expects " +
                          std::to_string(config.NumBins()));
  }
  if (spec.NumFrames() < 1) throw InvalidArgument("spectrogram has no frames");
  if (!spec.values.allFinite()) {
    throw InvalidArgument("spectrogram contains non-finite values");
  }
  const int win = config.window_length;
  const int hop = config.hop_length;
  const int num_frames = spec.NumFrames();
  const int pad_left = win / 2;
  const std::size_t total =
      static_cast<std::size_t>(num_frames - 1) * hop + win;
  const std::size_t out_len =
      length.value_or(static_cast<std::size_t>(num_frames - 1) * hop);
  if (out_len + pad_left > total) {
    throw InvalidArgument("requested length " + std::to_string(out_len) +
                          " exceeds the span covered by the frames");
  }

  // Least-squares inverse of Stft for a signal of out_len samples: each
  // padded position is a reflected copy of one signal sample, so overlap-add
  // numerators and window energies are folded onto that sample.
  const std::vector<double> window = MakeWindow(config.window, win);
  const RealFft fft(config.dft_size);
  const std::ptrdiff_t n_len = static_cast<std::ptrdiff_t>(out_len);
  std::vector<double> acc(out_len, 0.0);
  std::vector<double> norm(out_len, 0.0);
  std::vector<std::complex<double>> bins(config.NumBins());
  std::vector<double> frame(config.dft_size);
  for (int n = 0; n < num_frames; ++n) {
    for (int k = 0; k < config.NumBins(); ++k) bins[k] = spec.values(k, n);
    fft.Inverse(bins, frame);
    const std::ptrdiff_t offset = static_cast<std::ptrdiff_t>(n) * hop - pad_left;
    for (int i = 0; i < win; ++i) {
      std::ptrdiff_t j = offset + i;
      if (j < 0) j = -j;
      if (j >= n_len) j = 2 * (n_len - 1) - j;
      if (j < 0 || j >= n_len) continue;
      acc[j] += frame[i] * window[i];
      norm[j] += window[i] * window[i];
    }
  }
  AudioBuffer out;
  out.sample_rate = spec.sample_rate;
  out.samples.resize(out_len);
  for (std::size_t j = 0; j < out_len; ++j) {
    out.samples[j] = norm[j] > 1e-10 ? acc[j] / norm[j] : 0.0;
  }
  return out;
}

std::pair<MagnitudeSpectrogram, PhaseSpectrogram> Decompose(
    const ComplexSpectrogram &spec) {
  MagnitudeSpectrogram mag;
  PhaseSpectrogram phase;
  mag.values.resize(spec.values.rows(), spec.values.cols());
  phase.values.resize(spec.values.rows(), spec.values.cols());
  for (Eigen::Index n = 0; n < spec.values.cols(); ++n) {
    for (Eigen::Index f = 0; f < spec.values.rows(); ++f) {
      const std::complex<double> s = spec.values(f, n);
      const double a = std::abs(s);
      mag.values(f, n) = a;
      phase.values(f, n) = a == 0.0 ? 0.0 : WrapAngle(std::arg(s));
    }
  }
  return {std::move(mag), std::move(phase)};
}

ComplexSpectrogram Recombine(const MagnitudeSpectrogram &mag,
                             const PhaseSpectrogram &phase,
                             const AnalysisConfig &config, int sample_rate) {
  if (mag.values.rows() != phase.values.rows() ||
      mag.values.cols() != phase.values.cols()) {
    throw InvalidArgument("magnitude/phase shape mismatch");
  }
  ComplexSpectrogram spec;
  spec.config = config;
  spec.sample_rate = sample_rate;
  spec.values.resize(mag.values.rows(), mag.values.cols());
  for (Eigen::Index n = 0; n < mag.values.cols(); ++n) {
    for (Eigen::Index f = 0; f < mag.values.rows(); ++f) {
      spec.values(f, n) = std::polar(mag.values(f, n), phase.values(f, n));
    }
  }
  return spec;
}

Eigen::ArrayXXd GroupDelay(const PhaseSpectrogram &phase) {
  const Eigen::Index F = phase.values.rows();
  if (F < 2) throw InvalidArgument("group delay needs at least two bins");
  Eigen::ArrayXXd grd(F - 1, phase.values.cols());
  for (Eigen::Index n = 0; n < phase.values.cols(); ++n) {
    for (Eigen::Index f = 0; f + 1 < F; ++f) {
      grd(f, n) = WrapAngle(-phase.values(f + 1, n) + phase.values(f, n));
    }
  }
  return grd;
}

Eigen::ArrayXXd InstantaneousFrequency(const PhaseSpectrogram &phase) {
  const Eigen::Index N = phase.values.cols();
  if (N < 2) {
    throw InvalidArgument("instantaneous frequency needs at least two frames");
  }
  Eigen::ArrayXXd ifr(phase.values.rows(), N - 1);
  for (Eigen::Index n = 0; n + 1 < N; ++n) {
    for (Eigen::Index f = 0; f < phase.values.rows(); ++f) {
      ifr(f, n) = WrapAngle(phase.values(f, n + 1) - phase.values(f, n));
    }
  }
  return ifr;
}

PhaseDerivatives Derivatives(const PhaseSpectrogram &phase) {
  return {GroupDelay(phase), InstantaneousFrequency(phase)};
}

PhaseSpectrogram ShiftPhase(const PhaseSpectrogram &phase, double offset) {
  if (!std::isfinite(offset)) {
    throw InvalidArgument("phase offset must be finite");
  }
  PhaseSpectrogram out;
  out.values = phase.values.unaryExpr(
      [offset](double p) { return WrapAngle(p + offset); });
  return out;
}

}  // namespace dsp
}  // namespace phasevae
