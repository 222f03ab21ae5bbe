// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Griffin-Lim phase refinement with a fixed magnitude.

#ifndef PHASEVAE_GLA_GRIFFIN_LIM_H_
#define PHASEVAE_GLA_GRIFFIN_LIM_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "phasevae/dsp.h"

namespace phasevae {
namespace gla {

enum class PhaseInit { kGiven, kRandomUniform, kZero };

// "given", "random", "zero"; throws ConfigError otherwise.
PhaseInit ParsePhaseInit(const std::string &name);
std::string PhaseInitName(PhaseInit init);

struct GlaConfig {
  int iterations = 100;
  PhaseInit init = PhaseInit::kGiven;
  uint64_t seed = 0;  // for kRandomUniform

  // Throws ConfigError when iterations < 0.
  void Validate() const;
};

struct GlaResult {
  dsp::PhaseSpectrogram phase;
  dsp::AudioBuffer audio;
};

// Called after each iteration with the 1-based iteration index and the
// current phase.
using GlaObserver = std::function<void(int, const dsp::PhaseSpectrogram &)>;

// The starting phase: `given` for kGiven (required), i.i.d. uniform on
// [-pi, pi) for kRandomUniform, zeros for kZero.
dsp::PhaseSpectrogram InitialPhase(const dsp::MagnitudeSpectrogram &magnitude,
                                   const dsp::PhaseSpectrogram *given, const GlaConfig &config);

// Repeats phase <- angle(stft(istft(magnitude * e^{i phase}))). `length` is
// the signal length passed to istft (default (N - 1) * hop). Zero iterations
// return the initial phase and its resynthesis.
GlaResult Gla(const dsp::MagnitudeSpectrogram &magnitude, const dsp::PhaseSpectrogram &init_phase,
              const dsp::AnalysisConfig &analysis, int iterations,
              std::optional<std::size_t> length = std::nullopt, int sample_rate = 16000,
              const GlaObserver &observer = nullptr);

// Convenience overload resolving the initial phase from `config`.
GlaResult Gla(const dsp::MagnitudeSpectrogram &magnitude, const dsp::PhaseSpectrogram *given,
              const dsp::AnalysisConfig &analysis, const GlaConfig &config,
              std::optional<std::size_t> length = std::nullopt, int sample_rate = 16000);

// ||S - stft(istft(S))|| / ||S|| with S = magnitude * e^{i phase}, 0 when S
// is all zeros. The norm is that of the two-sided spectrum (interior bins
// weighted twice), in which stft(istft(.)) is an orthogonal projection, so
// Griffin-Lim iterations never increase it.
double Inconsistency(const dsp::MagnitudeSpectrogram &magnitude,
                     const dsp::PhaseSpectrogram &phase, const dsp::AnalysisConfig &analysis,
                     std::optional<std::size_t> length = std::nullopt);

}  // namespace gla
}  // namespace phasevae

#endif  // PHASEVAE_GLA_GRIFFIN_LIM_H_
