// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "phasevae/gla/griffin_lim.h"

#include <cmath>
#include <complex>
#include <random>

#include "phasevae/angles.h"
#include "phasevae/error.h"

namespace phasevae {
namespace gla {
namespace {

void CheckShapes(const dsp::MagnitudeSpectrogram &magnitude, const dsp::PhaseSpectrogram &phase,
                 const dsp::AnalysisConfig &analysis) {
  analysis.Validate();
  if (magnitude.values.rows() != analysis.NumBins()) {
    throw InvalidArgument("magnitude has " + std::to_string(magnitude.values.rows()) +
                          " bins, analysis expects " + std::to_string(analysis.NumBins()));
  }
  if (phase.values.rows() != magnitude.values.rows() ||
      phase.values.cols() != magnitude.values.cols()) {
    throw InvalidArgument("magnitude/phase shape mismatch");
  }
  magnitude.Validate();
  if (!phase.values.allFinite()) throw InvalidArgument("phase contains non-finite values");
}

// stft(istft(spec)) with the frame count checked against the input.
dsp::ComplexSpectrogram Project(const dsp::ComplexSpectrogram &spec,
                                std::optional<std::size_t> length) {
  const dsp::AudioBuffer audio = dsp::Istft(spec, length);
  dsp::ComplexSpectrogram out = dsp::Stft(audio, spec.config);
  if (out.NumFrames() != spec.NumFrames()) {
    throw InvalidArgument("signal length " + std::to_string(audio.samples.size()) + " gives " +
                          std::to_string(out.NumFrames()) + " frames, spectrogram has " +
                          std::to_string(spec.NumFrames()));
  }
  return out;
}

// Squared norm of the two-sided spectrum: interior bins count twice.
double TwoSidedEnergy(const Eigen::ArrayXXcd &values) {
  const Eigen::Index f = values.rows();
  double e = 0.0;
  for (Eigen::Index k = 0; k < f; ++k) {
    const double w = (k == 0 || k == f - 1) ? 1.0 : 2.0;
    e += w * values.row(k).abs2().sum();
  }
  return e;
}

}  // namespace

PhaseInit ParsePhaseInit(const std::string &name) {
  if (name == "given") return PhaseInit::kGiven;
  if (name == "random") return PhaseInit::kRandomUniform;
  if (name == "zero") return PhaseInit::kZero;
  throw ConfigError("unknown phase initialization '" + name + "' (given, random, zero)");
}

std::string PhaseInitName(PhaseInit init) {
  switch (init) {
    case PhaseInit::kGiven:
      return "given";
    case PhaseInit::kRandomUniform:
      return "random";
    case PhaseInit::kZero:
      return "zero";
  }
  return "given";
}

void GlaConfig::Validate() const {
  if (iterations < 0) {
    throw ConfigError("GLA iterations must be >= 0, got " + std::to_string(iterations));
  }
}

dsp::PhaseSpectrogram InitialPhase(const dsp::MagnitudeSpectrogram &magnitude,
                                   const dsp::PhaseSpectrogram *given, const GlaConfig &config) {
  dsp::PhaseSpectrogram phase;
  switch (config.init) {
    case PhaseInit::kGiven:
      if (given == nullptr) throw ConfigError("GLA init 'given' needs an initial phase");
      return *given;
    case PhaseInit::kRandomUniform: {
      std::mt19937_64 rng(config.seed);
      std::uniform_real_distribution<double> uniform(-kPi<double>, kPi<double>);
      phase.values.resize(magnitude.values.rows(), magnitude.values.cols());
      // Column-major fill: frame by frame, low to high bin.
      for (Eigen::Index i = 0; i < phase.values.size(); ++i) phase.values(i) = uniform(rng);
      return phase;
    }
    case PhaseInit::kZero:
      phase.values = Eigen::ArrayXXd::Zero(magnitude.values.rows(), magnitude.values.cols());
      return phase;
  }
  return phase;
}

GlaResult Gla(const dsp::MagnitudeSpectrogram &magnitude, const dsp::PhaseSpectrogram &init_phase,
              const dsp::AnalysisConfig &analysis, int iterations,
              std::optional<std::size_t> length, int sample_rate, const GlaObserver &observer) {
  if (iterations < 0) throw ConfigError("GLA iterations must be >= 0");
  CheckShapes(magnitude, init_phase, analysis);
  GlaResult result;
  result.phase = init_phase;
  for (int it = 1; it <= iterations; ++it) {
    const dsp::ComplexSpectrogram projected =
        Project(dsp::Recombine(magnitude, result.phase, analysis, sample_rate), length);
    for (Eigen::Index i = 0; i < projected.values.size(); ++i) {
      // A vanishing projection leaves the phase undefined; keep the old one.
      const std::complex<double> c = projected.values(i);
      if (c != std::complex<double>(0.0, 0.0)) result.phase.values(i) = WrapAngle(std::arg(c));
    }
    if (observer) observer(it, result.phase);
  }
  result.audio = dsp::Istft(dsp::Recombine(magnitude, result.phase, analysis, sample_rate), length);
  return result;
}

GlaResult Gla(const dsp::MagnitudeSpectrogram &magnitude, const dsp::PhaseSpectrogram *given,
              const dsp::AnalysisConfig &analysis, const GlaConfig &config,
              std::optional<std::size_t> length, int sample_rate) {
  config.Validate();
  return Gla(magnitude, InitialPhase(magnitude, given, config), analysis, config.iterations,
             length, sample_rate);
}

double Inconsistency(const dsp::MagnitudeSpectrogram &magnitude,
                     const dsp::PhaseSpectrogram &phase, const dsp::AnalysisConfig &analysis,
                     std::optional<std::size_t> length) {
  CheckShapes(magnitude, phase, analysis);
  const dsp::ComplexSpectrogram spec = dsp::Recombine(magnitude, phase, analysis);
  const double denom = TwoSidedEnergy(spec.values);
  if (denom == 0.0) return 0.0;
  const dsp::ComplexSpectrogram projected = Project(spec, length);
  return std::sqrt(TwoSidedEnergy(spec.values - projected.values) / denom);
}

}  // namespace gla
}  // namespace phasevae
