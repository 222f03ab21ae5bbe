// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Dataset manifests: one "id<TAB>path" record per line. Blank lines and
// lines starting with '#' are skipped; relative paths resolve against the
// manifest's directory. Entries are kept sorted by id.

#ifndef PHASEVAE_IO_MANIFEST_H_
#define PHASEVAE_IO_MANIFEST_H_

#include <string>
#include <vector>

#include "phasevae/dsp.h"
#include "phasevae/io/wav.h"

namespace phasevae {
namespace io {

enum class Split { kTrain, kDev, kTest };

std::string SplitName(Split split);
// "train", "dev", "test"; throws ConfigError otherwise.
Split ParseSplit(const std::string &name);

struct ManifestEntry {
  std::string id;
  std::string path;
  int frames = 0;  // filled by LoadManifestAudio
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  Split split = Split::kTrain;
};

// Throws IoError when unreadable, DataError on malformed lines, duplicate ids
// or missing audio files.
Manifest ParseManifest(const std::string &text, const std::string &base_dir,
                       Split split = Split::kTrain);
Manifest ReadManifest(const std::string &path, Split split = Split::kTrain);
void WriteManifest(const std::string &path, const Manifest &manifest);

// Reads every entry's audio in manifest order and records its frame count
// under `analysis`.
std::vector<dsp::AudioBuffer> LoadManifestAudio(Manifest &manifest,
                                                const dsp::AnalysisConfig &analysis,
                                                const WavReadOptions &options = {});

}  // namespace io
}  // namespace phasevae

#endif  // PHASEVAE_IO_MANIFEST_H_
