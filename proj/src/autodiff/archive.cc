// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "phasevae/autodiff/archive.h"

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "phasevae/error.h"

namespace phasevae {
namespace ad {
namespace {

constexpr char kMagic[4] = {'P', 'V', 'T', 'A'};

void PutU32(std::string &out, uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

void PutString(std::string &out, const std::string &s) {
  PutU32(out, static_cast<uint32_t>(s.size()));
  out += s;
}

void PutF32(std::string &out, float f) { PutU32(out, std::bit_cast<uint32_t>(f)); }

class Reader {
 public:
  Reader(const std::string &bytes, const std::string &path)
      : bytes_(bytes), path_(path) {}

  void Need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) {
      throw DataError("truncated archive " + path_);
    }
  }
  uint32_t U32() {
    Need(4);
    uint32_t v = 0;
    for (int b = 0; b < 4; ++b) {
      v |= static_cast<uint32_t>(static_cast<unsigned char>(bytes_[pos_ + b]))
           << (8 * b);
    }
    pos_ += 4;
    return v;
  }
  std::string String() {
    const uint32_t n = U32();
    Need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  float F32() { return std::bit_cast<float>(U32()); }
  std::string Raw(std::size_t n) {
    Need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool AtEnd() const { return pos_ == bytes_.size(); }

 private:
  const std::string &bytes_;
  const std::string &path_;
  std::size_t pos_ = 0;
};

}  // namespace

const ArchiveTensor *Archive::Find(const std::string &name) const {
  for (const auto &t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

const std::string &Archive::Meta(const std::string &key) const {
  auto it = metadata.find(key);
  if (it == metadata.end()) throw DataError("archive lacks metadata key " + key);
  return it->second;
}

void WriteFileAtomic(const std::string &path, const std::string &bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

void WriteArchive(const std::string &path, const Archive &archive) {
  std::string out(kMagic, 4);
  PutU32(out, kArchiveVersion);
  PutU32(out, static_cast<uint32_t>(archive.metadata.size()));
  for (const auto &[k, v] : archive.metadata) {
    PutString(out, k);
    PutString(out, v);
  }
  PutU32(out, static_cast<uint32_t>(archive.tensors.size()));
  for (const auto &t : archive.tensors) {
    int64_t n = 1;
    for (int d : t.shape) n *= d;
    if (n != static_cast<int64_t>(t.values.size())) {
      throw InvalidArgument("archive tensor " + t.name + " shape/data mismatch");
    }
    PutString(out, t.name);
    PutU32(out, static_cast<uint32_t>(t.shape.size()));
    for (int d : t.shape) PutU32(out, static_cast<uint32_t>(d));
  }
  for (const auto &t : archive.tensors) {
    for (float v : t.values) PutF32(out, v);
  }
  WriteFileAtomic(path, out);
}

Archive ReadArchive(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open archive " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();
  Reader r(bytes, path);
  if (r.Raw(4) != std::string(kMagic, 4)) {
    throw DataError(path + " is not a parameter archive (bad magic)");
  }
  const uint32_t version = r.U32();
  if (version != kArchiveVersion) {
    throw DataError(path + " has unsupported archive version " +
                    std::to_string(version));
  }
  Archive archive;
  const uint32_t n_meta = r.U32();
  for (uint32_t i = 0; i < n_meta; ++i) {
    std::string k = r.String();
    archive.metadata[k] = r.String();
  }
  const uint32_t n_tensors = r.U32();
  archive.tensors.resize(n_tensors);
  for (auto &t : archive.tensors) {
    t.name = r.String();
    const uint32_t rank = r.U32();
    if (rank > 16) throw DataError("implausible tensor rank in " + path);
    t.shape.resize(rank);
    for (auto &d : t.shape) d = static_cast<int>(r.U32());
  }
  for (auto &t : archive.tensors) {
    int64_t n = 1;
    for (int d : t.shape) n *= d;
    r.Need(static_cast<std::size_t>(n) * 4);
    t.values.resize(n);
    for (auto &v : t.values) v = r.F32();
  }
  if (!r.AtEnd()) throw DataError("trailing bytes in archive " + path);
  return archive;
}

}  // namespace ad
}  // namespace phasevae
