// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Spectrogram feature files, used as the feature cache and as the
// spectrogram exchange format of the CLI. Layout (little-endian):
//
//   char[8]  "PVFEAT01"
//   u64      AnalysisConfig::Hash()
//   u32      window_length, hop_length, dft_size
//   u32      F, N
//   u32      id length, then the id bytes
//   f32[F*N] magnitude, bin-major (row f holds frames 0..N-1)
//   f32[F*N] phase, same order
//
// Values are stored as 32-bit floats. Phases are rounded toward zero when
// float rounding would leave [-pi, pi).

#ifndef PHASEVAE_IO_FEATURES_H_
#define PHASEVAE_IO_FEATURES_H_

#include <cstdint>
#include <string>

#include "phasevae/dsp.h"

namespace phasevae {
namespace io {

struct FeatureRecord {
  std::string id;
  dsp::AnalysisConfig analysis;
  dsp::MagnitudeSpectrogram mag;
  dsp::PhaseSpectrogram phase;
};

// The stored precision: what a write followed by a read returns.
FeatureRecord QuantizeFeatures(FeatureRecord record);

std::string EncodeFeatures(const FeatureRecord &record);
// Throws DataError on a malformed buffer or a hash that does not match the
// stored analysis fields.
FeatureRecord DecodeFeatures(const std::string &bytes, const std::string &name = "<memory>");

void WriteFeatures(const std::string &path, const FeatureRecord &record);
// Throws IoError when unreadable; DataError when malformed or, with
// `expected` set, when the analysis differs.
FeatureRecord ReadFeatures(const std::string &path,
                           const dsp::AnalysisConfig *expected = nullptr);

// Analysis of `audio` as a record.
FeatureRecord ExtractFeatures(const std::string &id, const dsp::AudioBuffer &audio,
                              const dsp::AnalysisConfig &analysis);

}  // namespace io
}  // namespace phasevae

#endif  // PHASEVAE_IO_FEATURES_H_
