// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <algorithm>
#include <cmath>
#include <numeric>

#include "phasevae/angles.h"
#include "phasevae/error.h"
#include "phasevae/train/train.h"

namespace phasevae {
namespace train {

int Dataset::NumBins() const {
  if (utterances.empty()) throw DataError("dataset is empty");
  const int f = static_cast<int>(utterances.front().mag.values.rows());
  for (const auto &u : utterances) {
    if (u.mag.values.rows() != f || u.phase.values.rows() != f) {
      throw DataError("utterance " + u.id + " has a different number of bins");
    }
  }
  return f;
}

int64_t Dataset::TotalFrames() const {
  int64_t n = 0;
  for (const auto &u : utterances) n += u.NumFrames();
  return n;
}

Dataset Dataset::FromAudio(const std::vector<std::string> &ids,
                           const std::vector<dsp::AudioBuffer> &audio,
                           const dsp::AnalysisConfig &analysis) {
  if (ids.size() != audio.size()) throw InvalidArgument("ids and audio differ in length");
  Dataset d;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto [mag, phase] = dsp::Decompose(dsp::Stft(audio[i], analysis));
    d.utterances.push_back({ids[i], std::move(mag), std::move(phase)});
  }
  return d;
}

std::vector<dsp::AudioBuffer> MakeHarmonicCorpus(int count, double seconds, int sample_rate,
                                                 uint64_t seed) {
  if (count < 0 || !(seconds > 0) || sample_rate <= 0) {
    throw InvalidArgument("invalid harmonic corpus parameters");
  }
  std::vector<dsp::AudioBuffer> out;
  const int n = static_cast<int>(std::lround(seconds * sample_rate));
  const double nyquist = 0.5 * sample_rate;
  for (int u = 0; u < count; ++u) {
    std::mt19937_64 rng(seed * 1000003ULL + static_cast<uint64_t>(u));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double f_start = 100.0 + 120.0 * unit(rng);
    const double f_end = f_start * (0.8 + 0.45 * unit(rng));
    const int harmonics = 4 + static_cast<int>(unit(rng) * 4);
    std::vector<double> amp(harmonics);
    for (int k = 0; k < harmonics; ++k) amp[k] = 0.3 / (k + 1) * (0.7 + 0.3 * unit(rng));
    const double phase0 = kTwoPi<double> * unit(rng);
    const double mod_rate = 2.0 + 3.0 * unit(rng);
    std::normal_distribution<double> noise(0.0, 1e-3);
    dsp::AudioBuffer buf;
    buf.sample_rate = sample_rate;
    buf.samples.resize(n);
    const double fade = 0.02 * sample_rate;
    double cycles = 0.0;  // integral of f0 in cycles
    for (int i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / n;
      const double f0 = f_start + (f_end - f_start) * t;
      double env = 1.0 + 0.3 * std::sin(kTwoPi<double> * mod_rate * i / sample_rate);
      const double edge = std::min(i, n - 1 - i);
      if (edge < fade) env *= 0.5 - 0.5 * std::cos(kPi<double> * edge / fade);
      double s = 0.0;
      for (int k = 0; k < harmonics; ++k) {
        if ((k + 1) * f0 >= nyquist) break;
        s += amp[k] * std::sin((k + 1) * (kTwoPi<double> * cycles + phase0));
      }
      buf.samples[i] = env * s + noise(rng);
      cycles += f0 / sample_rate;
    }
    out.push_back(std::move(buf));
  }
  return out;
}

template <typename T>
ad::Tensor<T> Minibatch::MagTensor() const {
  return ad::Tensor<T>::FromData({batch, bins, frames}, std::vector<T>(mag.begin(), mag.end()));
}

template <typename T>
ad::Tensor<T> Minibatch::PhaseTensor() const {
  return ad::Tensor<T>::FromData({batch, bins, frames},
                                 std::vector<T>(phase.begin(), phase.end()));
}

template ad::Tensor<float> Minibatch::MagTensor<float>() const;
template ad::Tensor<double> Minibatch::MagTensor<double>() const;
template ad::Tensor<float> Minibatch::PhaseTensor<float>() const;
template ad::Tensor<double> Minibatch::PhaseTensor<double>() const;

Minibatch AssembleMinibatch(const Dataset &dataset, const TrainConfig &config,
                            std::mt19937_64 &rng) {
  const int f = dataset.NumBins();
  const int total = static_cast<int>(dataset.utterances.size());
  const int b = std::min(config.utterances_per_batch, total);
  const int s = config.segment_frames;

  // Partial Fisher-Yates shuffle: the first b entries are a uniform sample
  // without replacement.
  std::vector<int> order(total);
  std::iota(order.begin(), order.end(), 0);
  for (int i = 0; i < b; ++i) {
    std::uniform_int_distribution<int> pick(i, total - 1);
    std::swap(order[i], order[pick(rng)]);
  }

  Minibatch mb;
  mb.batch = b;
  mb.bins = f;
  mb.frames = s;
  mb.mag.resize(static_cast<std::size_t>(b) * f * s);
  mb.phase.resize(mb.mag.size());
  for (int i = 0; i < b; ++i) {
    const Utterance &u = dataset.utterances[order[i]];
    const int n = u.NumFrames();
    if (n < 1) throw DataError("utterance " + u.id + " has no frames");
    int start = 0;
    if (n > s) {
      std::uniform_int_distribution<int> pick(0, n - s);
      start = pick(rng);
    }
    mb.utterance.push_back(order[i]);
    mb.start.push_back(start);
    for (int row = 0; row < f; ++row) {
      const std::size_t base = (static_cast<std::size_t>(i) * f + row) * s;
      for (int j = 0; j < s; ++j) {
        const int col = (start + j) % n;
        mb.mag[base + j] = u.mag.values(row, col);
        mb.phase[base + j] = u.phase.values(row, col);
      }
    }
  }
  return mb;
}

std::vector<double> AugmentPhase(Minibatch &batch, std::mt19937_64 &rng) {
  std::vector<double> offsets(batch.batch);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto &o : offsets) o = normal(rng);
  const std::size_t per_segment = static_cast<std::size_t>(batch.bins) * batch.frames;
  for (int i = 0; i < batch.batch; ++i) {
    for (std::size_t k = 0; k < per_segment; ++k) {
      double &p = batch.phase[i * per_segment + k];
      p = WrapAngle(p + offsets[i]);
    }
  }
  return offsets;
}

int StepsPerEpoch(const Dataset &dataset, const TrainConfig &config) {
  const int64_t total = dataset.TotalFrames();
  if (total <= 0) throw DataError("dataset has no frames");
  return static_cast<int>((total + config.minibatch_frames - 1) / config.minibatch_frames);
}

}  // namespace train
}  // namespace phasevae
