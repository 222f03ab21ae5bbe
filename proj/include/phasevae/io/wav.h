// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// RIFF/WAVE PCM 16-bit reader and writer. Samples are scaled by 1/32768 on
// read; writing multiplies by 32768, rounds half away from zero and clamps
// to [-32768, 32767], so read(write(read(f))) reproduces f's integers.

#ifndef PHASEVAE_IO_WAV_H_
#define PHASEVAE_IO_WAV_H_

#include <string>

#include "phasevae/dsp.h"

namespace phasevae {
namespace io {

struct WavReadOptions {
  // Channel to extract from multichannel files; -1 requires mono input.
  int channel = -1;
  // Required sample rate; 0 accepts any rate.
  int expected_rate = 16000;
};

// Throws IoError when the file cannot be opened and DataError for malformed
// headers, codecs other than PCM16, a missing channel or a wrong rate.
dsp::AudioBuffer ReadWav(const std::string &path, const WavReadOptions &options = {});
dsp::AudioBuffer ParseWav(const std::string &bytes, const WavReadOptions &options = {},
                          const std::string &name = "<memory>");

// Mono PCM16 with the canonical 44-byte header; written atomically.
void WriteWav(const std::string &path, const dsp::AudioBuffer &audio);
std::string EncodeWav(const dsp::AudioBuffer &audio);

}  // namespace io
}  // namespace phasevae

#endif  // PHASEVAE_IO_WAV_H_
