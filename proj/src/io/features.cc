// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "phasevae/io/features.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "phasevae/angles.h"
#include "phasevae/autodiff/archive.h"
#include "phasevae/error.h"

namespace phasevae {
namespace io {
namespace {

constexpr char kMagic[] = "PVFEAT01";

void PutU32(std::string &b, uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void PutU64(std::string &b, uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  Reader(const std::string &bytes, const std::string &name) : b_(bytes), name_(name) {}

  uint64_t Bytes(int n) {
    Need(n);
    uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    pos_ += n;
    return v;
  }
  uint32_t U32() { return static_cast<uint32_t>(Bytes(4)); }
  uint64_t U64() { return Bytes(8); }
  float F32() { return std::bit_cast<float>(U32()); }
  std::string Str(std::size_t n) {
    Need(n);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void Need(std::size_t n) const {
    if (pos_ + n > b_.size()) throw DataError(name_ + ": truncated feature file");
  }
  bool AtEnd() const { return pos_ == b_.size(); }

 private:
  const std::string &b_;
  const std::string &name_;
  std::size_t pos_ = 0;
};

// Nearest float in [-pi, pi) to v.
float PhaseToFloat(double v) {
  float f = static_cast<float>(v);
  constexpr double kP = kPi<double>;
  if (static_cast<double>(f) >= kP) f = std::nextafter(f, 0.0f);
  if (static_cast<double>(f) < -kP) f = std::nextafter(f, 0.0f);
  return f;
}

}  // namespace

FeatureRecord QuantizeFeatures(FeatureRecord r) {
  for (Eigen::Index i = 0; i < r.mag.values.size(); ++i) {
    r.mag.values(i) = static_cast<float>(r.mag.values(i));
  }
  for (Eigen::Index i = 0; i < r.phase.values.size(); ++i) {
    r.phase.values(i) = PhaseToFloat(r.phase.values(i));
  }
  return r;
}

std::string EncodeFeatures(const FeatureRecord &r) {
  r.analysis.Validate();
  const Eigen::Index f = r.mag.values.rows(), n = r.mag.values.cols();
  if (r.phase.values.rows() != f || r.phase.values.cols() != n) {
    throw InvalidArgument("feature record: magnitude/phase shape mismatch");
  }
  if (f != r.analysis.NumBins()) {
    throw InvalidArgument("feature record: " + std::to_string(f) + " bins, analysis has " +
                          std::to_string(r.analysis.NumBins()));
  }
  std::string b(kMagic, 8);
  PutU64(b, r.analysis.Hash());
  PutU32(b, r.analysis.window_length);
  PutU32(b, r.analysis.hop_length);
  PutU32(b, r.analysis.dft_size);
  PutU32(b, static_cast<uint32_t>(f));
  PutU32(b, static_cast<uint32_t>(n));
  PutU32(b, static_cast<uint32_t>(r.id.size()));
  b += r.id;
  b.reserve(b.size() + 8 * f * n);
  for (Eigen::Index k = 0; k < f; ++k) {
    for (Eigen::Index t = 0; t < n; ++t) {
      PutU32(b, std::bit_cast<uint32_t>(static_cast<float>(r.mag.values(k, t))));
    }
  }
  for (Eigen::Index k = 0; k < f; ++k) {
    for (Eigen::Index t = 0; t < n; ++t) {
      PutU32(b, std::bit_cast<uint32_t>(PhaseToFloat(r.phase.values(k, t))));
    }
  }
  return b;
}

FeatureRecord DecodeFeatures(const std::string &bytes, const std::string &name) {
  Reader in(bytes, name);
  if (in.Str(8) != std::string(kMagic, 8)) throw DataError(name + ": not a feature file");
  FeatureRecord r;
  const uint64_t hash = in.U64();
  r.analysis.window_length = static_cast<int>(in.U32());
  r.analysis.hop_length = static_cast<int>(in.U32());
  r.analysis.dft_size = static_cast<int>(in.U32());
  if (r.analysis.Hash() != hash) throw DataError(name + ": analysis hash mismatch");
  const uint32_t f = in.U32(), n = in.U32();
  if (static_cast<int>(f) != r.analysis.NumBins()) {
    throw DataError(name + ": bin count disagrees with the stored analysis");
  }
  r.id = in.Str(in.U32());
  in.Need(8ull * f * n);
  r.mag.values.resize(f, n);
  r.phase.values.resize(f, n);
  for (uint32_t k = 0; k < f; ++k) {
    for (uint32_t t = 0; t < n; ++t) r.mag.values(k, t) = in.F32();
  }
  for (uint32_t k = 0; k < f; ++k) {
    for (uint32_t t = 0; t < n; ++t) r.phase.values(k, t) = in.F32();
  }
  if (!in.AtEnd()) throw DataError(name + ": trailing bytes");
  try {
    r.mag.Validate();
    r.phase.Validate();
  } catch (const InvalidArgument &e) {
    throw DataError(name + ": " + e.what());
  }
  return r;
}

void WriteFeatures(const std::string &path, const FeatureRecord &record) {
  ad::WriteFileAtomic(path, EncodeFeatures(record));
}

FeatureRecord ReadFeatures(const std::string &path, const dsp::AnalysisConfig *expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  FeatureRecord r = DecodeFeatures(ss.str(), path);
  if (expected != nullptr && !(r.analysis == *expected)) {
    throw DataError(path + ": cached with analysis " + r.analysis.ToString() + ", expected " +
                    expected->ToString());
  }
  return r;
}

FeatureRecord ExtractFeatures(const std::string &id, const dsp::AudioBuffer &audio,
                              const dsp::AnalysisConfig &analysis) {
  FeatureRecord r;
  r.id = id;
  r.analysis = analysis;
  auto [mag, phase] = dsp::Decompose(dsp::Stft(audio, analysis));
  r.mag = std::move(mag);
  r.phase = std::move(phase);
  return r;
}

}  // namespace io
}  // namespace phasevae
