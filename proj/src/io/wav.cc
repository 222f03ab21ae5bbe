// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "phasevae/io/wav.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "phasevae/autodiff/archive.h"
#include "phasevae/error.h"

namespace phasevae {
namespace io {
namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatExtensible = 0xFFFE;

uint32_t U32(const std::string &b, std::size_t at) {
  return static_cast<uint32_t>(static_cast<unsigned char>(b[at])) |
         static_cast<uint32_t>(static_cast<unsigned char>(b[at + 1])) << 8 |
         static_cast<uint32_t>(static_cast<unsigned char>(b[at + 2])) << 16 |
         static_cast<uint32_t>(static_cast<unsigned char>(b[at + 3])) << 24;
}

uint16_t U16(const std::string &b, std::size_t at) {
  return static_cast<uint16_t>(static_cast<unsigned char>(b[at]) |
                               static_cast<unsigned char>(b[at + 1]) << 8);
}

void PutU32(std::string &b, uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void PutU16(std::string &b, uint16_t v) {
  b.push_back(static_cast<char>(v & 0xFF));
  b.push_back(static_cast<char>(v >> 8));
}

}  // namespace

dsp::AudioBuffer ParseWav(const std::string &bytes, const WavReadOptions &options,
                          const std::string &name) {
  auto fail = [&](const std::string &what) { throw DataError(name + ": " + what); };
  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0) {
    fail("not a RIFF/WAVE file");
  }
  bool have_fmt = false;
  uint16_t channels = 0, bits = 0;
  uint32_t rate = 0;
  std::size_t data_at = 0, data_size = 0;
  bool have_data = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id = bytes.substr(pos, 4);
    const std::size_t size = U32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      if (size < 16 || body + size > bytes.size()) fail("truncated fmt chunk");
      uint16_t format = U16(bytes, body);
      channels = U16(bytes, body + 2);
      rate = U32(bytes, body + 4);
      bits = U16(bytes, body + 14);
      if (format == kFormatExtensible) {
        if (size < 40) fail("truncated extensible fmt chunk");
        format = U16(bytes, body + 24);  // first two bytes of the subformat GUID
      }
      if (format != kFormatPcm) fail("unsupported codec (format tag " + std::to_string(format) + ")");
      if (bits != 16) fail("unsupported codec (" + std::to_string(bits) + "-bit PCM)");
      if (channels == 0) fail("zero channels");
      have_fmt = true;
    } else if (id == "data") {
      data_at = body;
      data_size = std::min(size, bytes.size() - body);
      have_data = true;
      break;
    }
    pos = body + size + (size & 1);
  }
  if (!have_fmt) fail("missing fmt chunk");
  if (!have_data) fail("missing data chunk");
  if (options.expected_rate > 0 && rate != static_cast<uint32_t>(options.expected_rate)) {
    fail("sample rate " + std::to_string(rate) + " Hz, expected " +
         std::to_string(options.expected_rate) + " Hz");
  }
  int channel = options.channel;
  if (channel < 0) {
    if (channels != 1) fail(std::to_string(channels) + " channels; select one explicitly");
    channel = 0;
  }
  if (channel >= channels) {
    fail("channel " + std::to_string(channel) + " requested, file has " +
         std::to_string(channels));
  }
  const std::size_t frame_bytes = 2u * channels;
  const std::size_t frames = data_size / frame_bytes;
  dsp::AudioBuffer audio;
  audio.sample_rate = static_cast<int>(rate);
  audio.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    const auto v = static_cast<int16_t>(U16(bytes, data_at + i * frame_bytes + 2u * channel));
    audio.samples[i] = v / 32768.0;
  }
  return audio;
}

dsp::AudioBuffer ReadWav(const std::string &path, const WavReadOptions &options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParseWav(ss.str(), options, path);
}

std::string EncodeWav(const dsp::AudioBuffer &audio) {
  audio.Validate();
  const uint32_t data_size = static_cast<uint32_t>(audio.samples.size() * 2);
  std::string b;
  b.reserve(44 + data_size);
  b += "RIFF";
  PutU32(b, 36 + data_size);
  b += "WAVEfmt ";
  PutU32(b, 16);
  PutU16(b, kFormatPcm);
  PutU16(b, 1);
  PutU32(b, static_cast<uint32_t>(audio.sample_rate));
  PutU32(b, static_cast<uint32_t>(audio.sample_rate) * 2);
  PutU16(b, 2);
  PutU16(b, 16);
  b += "data";
  PutU32(b, data_size);
  for (double x : audio.samples) {
    // std::round rounds halves away from zero.
    const double q = std::clamp(std::round(x * 32768.0), -32768.0, 32767.0);
    PutU16(b, static_cast<uint16_t>(static_cast<int16_t>(q)));
  }
  return b;
}

void WriteWav(const std::string &path, const dsp::AudioBuffer &audio) {
  ad::WriteFileAtomic(path, EncodeWav(audio));
}

}  // namespace io
}  // namespace phasevae
