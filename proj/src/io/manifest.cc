// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "phasevae/io/manifest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "phasevae/autodiff/archive.h"
#include "phasevae/error.h"

namespace phasevae {
namespace io {

std::string SplitName(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kDev:
      return "dev";
    case Split::kTest:
      return "test";
  }
  return "train";
}

Split ParseSplit(const std::string &name) {
  if (name == "train") return Split::kTrain;
  if (name == "dev") return Split::kDev;
  if (name == "test") return Split::kTest;
  throw ConfigError("unknown split '" + name + "' (train, dev, test)");
}

Manifest ParseManifest(const std::string &text, const std::string &base_dir, Split split) {
  namespace fs = std::filesystem;
  Manifest m;
  m.split = split;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
      throw DataError("manifest line " + std::to_string(line_no) + ": expected id<TAB>path");
    }
    ManifestEntry e;
    e.id = line.substr(0, tab);
    fs::path p = line.substr(tab + 1);
    if (p.is_relative() && !base_dir.empty()) p = fs::path(base_dir) / p;
    e.path = p.string();
    if (!seen.insert(e.id).second) throw DataError("manifest has duplicate id " + e.id);
    if (!fs::is_regular_file(p)) {
      throw DataError("manifest entry " + e.id + ": no such file " + e.path);
    }
    m.entries.push_back(std::move(e));
  }
  std::sort(m.entries.begin(), m.entries.end(),
            [](const ManifestEntry &a, const ManifestEntry &b) { return a.id < b.id; });
  return m;
}

Manifest ReadManifest(const std::string &path, Split split) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParseManifest(ss.str(), std::filesystem::path(path).parent_path().string(), split);
}

void WriteManifest(const std::string &path, const Manifest &manifest) {
  std::string out;
  for (const auto &e : manifest.entries) out += e.id + "\t" + e.path + "\n";
  ad::WriteFileAtomic(path, out);
}

std::vector<dsp::AudioBuffer> LoadManifestAudio(Manifest &manifest,
                                                const dsp::AnalysisConfig &analysis,
                                                const WavReadOptions &options) {
  std::vector<dsp::AudioBuffer> audio;
  audio.reserve(manifest.entries.size());
  for (auto &e : manifest.entries) {
    audio.push_back(ReadWav(e.path, options));
    const std::size_t n = audio.back().samples.size();
    if (n < static_cast<std::size_t>(analysis.window_length)) {
      throw DataError("utterance " + e.id + " is shorter than one analysis window");
    }
    e.frames = analysis.NumFrames(n);
  }
  return audio;
}

}  // namespace io
}  // namespace phasevae
