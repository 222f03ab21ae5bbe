// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Flat binary container for named float32 arrays plus string metadata. Used
// for parameter files, checkpoints and optimizer state. All integers are
// little-endian uint32, all values little-endian IEEE-754 binary32:
//
//   magic        4 bytes  "PVTA"
//   version      u32      kArchiveVersion
//   meta_count   u32
//   meta_count x { key_len u32, key bytes, value_len u32, value bytes }
//   tensor_count u32
//   tensor_count x { name_len u32, name bytes, rank u32, dims u32[rank] }
//   data: the tensors' values in table order, row-major, f32 each
//
// Files are written to a temporary sibling and renamed into place.

#ifndef PHASEVAE_AUTODIFF_ARCHIVE_H_
#define PHASEVAE_AUTODIFF_ARCHIVE_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace phasevae {
namespace ad {

inline constexpr uint32_t kArchiveVersion = 1;

struct ArchiveTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<float> values;
};

struct Archive {
  std::map<std::string, std::string> metadata;
  std::vector<ArchiveTensor> tensors;

  const ArchiveTensor *Find(const std::string &name) const;
  // Throws DataError when the key is missing.
  const std::string &Meta(const std::string &key) const;
};

void WriteArchive(const std::string &path, const Archive &archive);
// Throws DataError on a malformed or truncated file, IoError when unreadable.
Archive ReadArchive(const std::string &path);

// Writes `bytes` to `path` through a temporary file and rename.
void WriteFileAtomic(const std::string &path, const std::string &bytes);

}  // namespace ad
}  // namespace phasevae

#endif  // PHASEVAE_AUTODIFF_ARCHIVE_H_
