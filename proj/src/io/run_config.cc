// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "phasevae/io/run_config.h"

#include <fstream>
#include <sstream>

#include "phasevae/autodiff/archive.h"
#include "phasevae/error.h"

namespace phasevae {
namespace io {
namespace {

int ParseInt(const std::string &key, const std::string &value) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception &) {
  }
  throw ConfigError(key + " expects an integer, got '" + value + "'");
}

bool StartsWith(const std::string &s, const std::string &prefix) {
  return s.compare(0, prefix.size(), prefix) == 0;
}

}  // namespace

void RunConfig::Validate() const {
  analysis.Validate();
  model.Validate();
  train.Validate();
  if (model.num_bins != analysis.NumBins()) {
    throw ConfigError("model.num_bins=" + std::to_string(model.num_bins) +
                      " does not match the analysis (" + std::to_string(analysis.dft_size) +
                      "-point DFT gives " + std::to_string(analysis.NumBins()) + " bins)");
  }
}

void RunConfig::Set(const std::string &key, const std::string &value) {
  if (key == "schema") {
    if (value != kRunConfigSchema) {
      throw ConfigError("unsupported run config schema '" + value + "', expected " +
                        kRunConfigSchema);
    }
  } else if (key == "analysis.window_length") {
    analysis.window_length = ParseInt(key, value);
  } else if (key == "analysis.hop_length") {
    analysis.hop_length = ParseInt(key, value);
  } else if (key == "analysis.dft_size") {
    analysis.dft_size = ParseInt(key, value);
  } else if (key == "analysis.window") {
    if (value != "hann") throw ConfigError("analysis.window supports only hann, got " + value);
    analysis.window = dsp::WindowKind::kHann;
  } else if (StartsWith(key, "model.")) {
    model.Set(key, value);
  } else if (StartsWith(key, "train.")) {
    train.Set(key, value);
  } else if (StartsWith(key, "paths.") && key.size() > 6) {
    paths[key.substr(6)] = value;
  } else {
    throw ConfigError("unknown run config key " + key);
  }
}

void RunConfig::SetAssignment(const std::string &assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("expected key=value, got '" + assignment + "'");
  }
  Set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

std::string RunConfig::ToString() const {
  std::ostringstream os;
  os << "schema=" << kRunConfigSchema << "\n"
     << "analysis.window_length=" << analysis.window_length << "\n"
     << "analysis.hop_length=" << analysis.hop_length << "\n"
     << "analysis.dft_size=" << analysis.dft_size << "\n"
     << "analysis.window=hann\n"
     << model.ToString() << train.ToString();
  for (const auto &[name, path] : paths) os << "paths." << name << "=" << path << "\n";
  return os.str();
}

RunConfig RunConfig::FromString(const std::string &text) {
  RunConfig c = Preset("paper");
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (first && StartsWith(line, "preset=")) {
      c = Preset(line.substr(7));
    } else {
      c.SetAssignment(line);
    }
    first = false;
  }
  c.Validate();
  return c;
}

RunConfig RunConfig::Load(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open run config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return FromString(ss.str());
}

void RunConfig::Save(const std::string &path) const { ad::WriteFileAtomic(path, ToString()); }

RunConfig RunConfig::Preset(const std::string &name) {
  RunConfig c;
  if (name == "paper") {
    c.analysis = dsp::AnalysisConfig::Paper();
    c.model = model::ModelConfig::Paper();
    c.train = train::TrainConfig::Paper();
  } else if (name == "toy") {
    c.analysis = dsp::AnalysisConfig::Toy();
    c.model = model::ModelConfig::Toy();
    c.train = train::TrainConfig::Toy();
  } else {
    throw ConfigError("unknown preset '" + name + "' (paper, toy)");
  }
  return c;
}

}  // namespace io
}  // namespace phasevae
