// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <sstream>

#include "phasevae/error.h"
#include "phasevae/train/train.h"

namespace phasevae {
namespace train {
namespace {

template <typename V>
V ParseNumber(const std::string &key, const std::string &value) {
  try {
    std::size_t used = 0;
    V v;
    if constexpr (std::is_same_v<V, double>) {
      v = std::stod(value, &used);
    } else if constexpr (std::is_same_v<V, uint64_t>) {
      v = std::stoull(value, &used);
    } else {
      v = std::stoi(value, &used);
    }
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception &) {
    throw ConfigError("train config key " + key + " has invalid value '" + value + "'");
  }
}

bool ParseBool(const std::string &key, const std::string &value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("train config key " + key + " expects true/false, got '" + value + "'");
}

}  // namespace

void TrainConfig::Validate() const {
  auto require = [](bool ok, const std::string &what) {
    if (!ok) throw ConfigError("invalid train config: " + what);
  };
  require(alpha > 0, "alpha must be positive");
  require(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1, "betas must be in [0, 1)");
  require(eps > 0, "eps must be positive");
  require(segment_frames >= 1 && utterances_per_batch >= 1, "batch sizes must be positive");
  require(minibatch_frames == segment_frames * utterances_per_batch,
          "minibatch_frames must equal segment_frames * utterances_per_batch");
  require(clip_threshold > 0, "clip_threshold must be positive");
  require(patience_epochs >= 1, "patience_epochs must be >= 1");
  require(max_epochs >= 0, "max_epochs must be >= 0");
  if (stage == Stage::kOne) {
    require(!scheme.is_joint(), "stage 1 trains with scheme M only, got " + scheme.name());
  } else {
    require(scheme.is_joint(), "stage 2 needs a joint scheme J1..J7, got " + scheme.name());
  }
}

std::string TrainConfig::ToString() const {
  std::ostringstream os;
  os.precision(17);
  os << "train.preset=" << preset << "\n"
     << "train.alpha=" << alpha << "\n"
     << "train.beta1=" << beta1 << "\n"
     << "train.beta2=" << beta2 << "\n"
     << "train.eps=" << eps << "\n"
     << "train.minibatch_frames=" << minibatch_frames << "\n"
     << "train.segment_frames=" << segment_frames << "\n"
     << "train.utterances_per_batch=" << utterances_per_batch << "\n"
     << "train.clip_threshold=" << clip_threshold << "\n"
     << "train.patience_epochs=" << patience_epochs << "\n"
     << "train.max_epochs=" << max_epochs << "\n"
     << "train.augment_phase=" << (augment_phase ? "true" : "false") << "\n"
     << "train.stage=" << static_cast<int>(stage) << "\n"
     << "train.scheme=" << scheme.name() << "\n"
     << "train.seed=" << seed << "\n";
  return os.str();
}

void TrainConfig::Set(const std::string &key, const std::string &value) {
  if (key == "train.preset") {
    preset = value;
  } else if (key == "train.alpha") {
    alpha = ParseNumber<double>(key, value);
  } else if (key == "train.beta1") {
    beta1 = ParseNumber<double>(key, value);
  } else if (key == "train.beta2") {
    beta2 = ParseNumber<double>(key, value);
  } else if (key == "train.eps") {
    eps = ParseNumber<double>(key, value);
  } else if (key == "train.minibatch_frames") {
    minibatch_frames = ParseNumber<int>(key, value);
  } else if (key == "train.segment_frames") {
    segment_frames = ParseNumber<int>(key, value);
  } else if (key == "train.utterances_per_batch") {
    utterances_per_batch = ParseNumber<int>(key, value);
  } else if (key == "train.clip_threshold") {
    clip_threshold = ParseNumber<double>(key, value);
  } else if (key == "train.patience_epochs") {
    patience_epochs = ParseNumber<int>(key, value);
  } else if (key == "train.max_epochs") {
    max_epochs = ParseNumber<int>(key, value);
  } else if (key == "train.augment_phase") {
    augment_phase = ParseBool(key, value);
  } else if (key == "train.stage") {
    const int s = ParseNumber<int>(key, value);
    if (s != 1 && s != 2) throw ConfigError("train.stage must be 1 or 2, got " + value);
    stage = static_cast<Stage>(s);
  } else if (key == "train.scheme") {
    scheme = losses::LossScheme::FromName(value);
  } else if (key == "train.seed") {
    seed = ParseNumber<uint64_t>(key, value);
  } else {
    throw ConfigError("unknown train config key " + key);
  }
}

TrainConfig TrainConfig::FromString(const std::string &text) {
  TrainConfig c;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("malformed train config line: " + line);
    c.Set(line.substr(0, eq), line.substr(eq + 1));
  }
  c.Validate();
  return c;
}

TrainConfig TrainConfig::Paper() { return TrainConfig{}; }

TrainConfig TrainConfig::Toy() {
  TrainConfig c;
  c.preset = "toy";
  c.segment_frames = 32;
  c.utterances_per_batch = 8;
  c.minibatch_frames = 256;
  c.alpha = 3e-3;
  c.max_epochs = 50;
  return c;
}

}  // namespace train
}  // namespace phasevae
