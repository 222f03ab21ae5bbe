// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Flat "key=value" run configuration. Keys:
//
//   schema                   phasevae-run/1
//   analysis.window_length   analysis.hop_length   analysis.dft_size
//   analysis.window          (hann)
//   model.*                  see ModelConfig::ToString
//   train.*                  see TrainConfig::ToString (includes scheme, seed)
//   paths.<name>             free-form paths recorded by the CLI
//
// Blank lines and '#' comments are ignored.

#ifndef PHASEVAE_IO_RUN_CONFIG_H_
#define PHASEVAE_IO_RUN_CONFIG_H_

#include <map>
#include <string>

#include "phasevae/dsp.h"
#include "phasevae/model/vae.h"
#include "phasevae/train/train.h"

namespace phasevae {
namespace io {

inline constexpr char kRunConfigSchema[] = "phasevae-run/1";
inline constexpr char kRunConfigFile[] = "run_config.txt";

struct RunConfig {
  dsp::AnalysisConfig analysis;
  model::ModelConfig model;
  train::TrainConfig train;
  std::map<std::string, std::string> paths;

  // Sub-config validation plus model.num_bins == analysis bins. Throws
  // ConfigError.
  void Validate() const;

  // Applies one assignment; throws ConfigError for unknown keys or values.
  void Set(const std::string &key, const std::string &value);
  // Applies "key=value".
  void SetAssignment(const std::string &assignment);

  std::string ToString() const;
  // Starts from the paper preset; the text may select another through
  // "preset=toy" on its first non-comment line. Validates the result.
  static RunConfig FromString(const std::string &text);
  static RunConfig Load(const std::string &path);
  void Save(const std::string &path) const;

  // "paper" or "toy"; throws ConfigError otherwise.
  static RunConfig Preset(const std::string &name);
};

}  // namespace io
}  // namespace phasevae

#endif  // PHASEVAE_IO_RUN_CONFIG_H_
