// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Two-stage training: stage one fits the encoder and magnitude decoder with
// scheme M; stage two trains all three networks with a joint scheme J1..J7,
// starting from a stage-one checkpoint.
//
// Every random draw (segment choice, phase offsets, reparameterization noise)
// comes from one std::mt19937_64 seeded by TrainConfig::seed, so a run is a
// function of (seed, dataset, config). The generator state is stored in the
// resume checkpoint.

#ifndef PHASEVAE_TRAIN_TRAIN_H_
#define PHASEVAE_TRAIN_TRAIN_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "phasevae/autodiff/archive.h"
#include "phasevae/autodiff/parameters.h"
#include "phasevae/dsp.h"
#include "phasevae/losses/losses.h"
#include "phasevae/model/vae.h"

namespace phasevae {
namespace train {

enum class Stage { kOne = 1, kTwo = 2 };

struct TrainConfig {
  std::string preset = "paper";
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-6;
  int minibatch_frames = 4096;
  int segment_frames = 256;
  int utterances_per_batch = 16;
  double clip_threshold = 1.0;
  int patience_epochs = 20;
  int max_epochs = 1000;
  bool augment_phase = true;
  Stage stage = Stage::kOne;
  losses::LossScheme scheme = losses::LossScheme::Get(losses::SchemeId::kM);
  uint64_t seed = 0;

  // Throws ConfigError: nonpositive sizes, minibatch_frames !=
  // segment_frames * utterances_per_batch, scheme/stage mismatch.
  void Validate() const;

  // Flat "train.key=value" lines.
  std::string ToString() const;
  static TrainConfig FromString(const std::string &text);
  // Applies one "train.key=value" assignment; throws ConfigError.
  void Set(const std::string &key, const std::string &value);

  static TrainConfig Paper();
  // 8 segments of 32 frames per minibatch, at most 50 epochs.
  static TrainConfig Toy();
};

struct Utterance {
  std::string id;
  dsp::MagnitudeSpectrogram mag;
  dsp::PhaseSpectrogram phase;

  int NumFrames() const { return static_cast<int>(mag.values.cols()); }
};

struct Dataset {
  std::vector<Utterance> utterances;

  // Throws DataError when empty or when bin counts disagree.
  int NumBins() const;
  int64_t TotalFrames() const;

  static Dataset FromAudio(const std::vector<std::string> &ids,
                           const std::vector<dsp::AudioBuffer> &audio,
                           const dsp::AnalysisConfig &analysis);
};

// Harmonic test signals: a gliding fundamental with a few decaying
// harmonics, a smooth amplitude envelope and a faint noise floor. Each
// harmonic has a coherent phase track.
std::vector<dsp::AudioBuffer> MakeHarmonicCorpus(int count, double seconds,
                                                 int sample_rate, uint64_t seed);

// (B, F, S) minibatch stored row-major.
struct Minibatch {
  int batch = 0, bins = 0, frames = 0;
  std::vector<double> mag, phase;
  std::vector<int> utterance;  // dataset index per segment
  std::vector<int> start;      // first frame per segment

  template <typename T>
  ad::Tensor<T> MagTensor() const;
  template <typename T>
  ad::Tensor<T> PhaseTensor() const;
};

// Picks min(utterances_per_batch, dataset size) distinct utterances. Each
// contributes segment_frames frames starting at a uniform random frame in
// [0, frames - segment_frames]; shorter utterances start at frame 0 and are
// repeated cyclically.
Minibatch AssembleMinibatch(const Dataset &dataset, const TrainConfig &config,
                            std::mt19937_64 &rng);

// Adds one N(0, 1) offset per segment to its phases (wrapped). Returns the
// offsets.
std::vector<double> AugmentPhase(Minibatch &batch, std::mt19937_64 &rng);

// Number of minibatches in one epoch: ceil(total frames / minibatch_frames).
int StepsPerEpoch(const Dataset &dataset, const TrainConfig &config);

template <typename T>
struct AdamState {
  int64_t step = 0;
  std::vector<std::vector<T>> m, v;  // one entry per optimized parameter
};

// One bias-corrected Adam update of `params` from their accumulated
// gradients (a missing gradient counts as zero). Throws NumericalError naming
// the first parameter with a non-finite gradient, before any update.
template <typename T>
void AdamStep(const std::vector<ad::Parameter<T> *> &params, AdamState<T> &state,
              const TrainConfig &config);

// Scales all gradients by threshold / norm when the global L2 norm exceeds
// threshold. Returns the norm before clipping.
template <typename T>
double ClipGradientNorm(const std::vector<ad::Parameter<T> *> &params, double threshold);

// Per-utterance composite losses at epsilon = 0 without augmentation,
// averaged over utterances.
template <typename T>
losses::LossReport Validate(const model::VaeModel<T> &model, const Dataset &dataset,
                            const losses::LossScheme &scheme, bool with_phase);

struct EpochRecord {
  int epoch = 0;
  losses::LossReport validation;
  double mean_grad_norm = 0.0;
  bool improved = false;
};

struct TrainResult {
  losses::LossReport initial_validation;
  losses::LossReport best_validation;
  int best_epoch = 0;
  int epochs_run = 0;
  bool early_stopped = false;
  std::vector<EpochRecord> history;
};

struct TrainerOptions {
  // Directory for best.ckpt and state.ckpt; empty disables checkpoints.
  std::string out_dir;
  // JSON-lines log sink; may be null.
  std::ostream *log = nullptr;
  // Adds elapsed seconds to log records (breaks byte-identical logs).
  bool log_wall_time = false;
};

inline constexpr char kBestCheckpoint[] = "best.ckpt";
inline constexpr char kStateCheckpoint[] = "state.ckpt";

template <typename T>
class Trainer {
 public:
  // Stage two requires `model` to hold stage-one weights, which the caller
  // establishes by loading a stage-one checkpoint (see LoadStageOne).
  Trainer(model::VaeModel<T> &model, TrainConfig config, TrainerOptions options);

  // Restores parameters, optimizer moments, counters and the generator from
  // a state.ckpt written by a run with the same model and stage.
  void Resume(const std::string &state_path);

  TrainResult Run(const Dataset &train, const Dataset &validation);

  // Parameters updated in this stage.
  const std::vector<ad::Parameter<T> *> &optimized() const { return optimized_; }

 private:
  void Log(const std::string &line);
  void SaveState(const std::string &path) const;
  void SaveBest(const losses::LossReport &validation) const;

  model::VaeModel<T> &model_;
  TrainConfig config_;
  TrainerOptions options_;
  std::vector<ad::Parameter<T> *> optimized_;
  AdamState<T> adam_;
  std::mt19937_64 rng_;
  int epoch_ = 0;
  int since_improvement_ = 0;
  int best_epoch_ = 0;
  std::optional<losses::LossReport> initial_, best_;
  double start_time_ = 0.0;
};

// Loads a checkpoint written by a stage-one run into `model`. Throws
// ConfigError when the file is missing or was not produced by stage one.
template <typename T>
void LoadStageOne(model::VaeModel<T> &model, const std::string &checkpoint_path);

}  // namespace train
}  // namespace phasevae

#endif  // PHASEVAE_TRAIN_TRAIN_H_
