// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Joint magnitude/phase VAE: encoder q(z | psi, a), magnitude decoder
// p(a | z) and phase decoder p(psi | a, z).
//
// Batched tensors use (B, F, N) for spectrograms and (B, D, N) for latents.
// Inside the networks feature maps are (B, c, d, N) as in nn/blocks.h.
//
// Encoder:      [log1p a, cos psi, sin psi] -> TE -> {DB -> TD(s_i)}_i
//               -> FC -> Temporal -> FC mu, FC softplus sigma
// Mag decoder:  z -> FC -> Temporal -> FC -> reshape (te, d_S)
//               -> {TU(s_i) -> DB}_i reversed -> TF softplus a_hat,
//                  TF softplus sigma
// Phase decoder: same trunk as the magnitude decoder (own weights), its
//               output concatenated with TE(log1p a_hat) -> DB
//               -> TF cos, TF sin -> atan2

#ifndef PHASEVAE_MODEL_VAE_H_
#define PHASEVAE_MODEL_VAE_H_

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "phasevae/autodiff/archive.h"
#include "phasevae/dsp.h"
#include "phasevae/nn/blocks.h"

namespace phasevae {
namespace model {

using ad::ParameterSet;
using ad::Shape;
using ad::Tensor;

inline constexpr char kEncoderPrefix[] = "encoder/";
inline constexpr char kMagnitudeDecoderPrefix[] = "magnitude_decoder/";
inline constexpr char kPhaseDecoderPrefix[] = "phase_decoder/";

struct ModelConfig {
  std::string preset = "paper";
  int num_bins = 513;           // F
  int latent_dim = 32;          // D
  int te_channels = 16;         // TE / TU output channels
  int growth = 8;               // dense block growth rate
  int dense_layers = 4;         // convolutions per dense block
  std::vector<int> strides = {4, 4, 4};  // TD strides, encoder order
  int fc_hidden = 256;
  int temporal_width = 256;
  double leaky_slope = 0.01;

  // Throws ConfigError (D >= F, nonpositive sizes, empty/invalid strides).
  void Validate() const;
  // d_0 = F, d_{i+1} = ceil(d_i / s_i); size strides + 1.
  std::vector<int> StageLengths() const;
  // Channels at the end of the encoder convolution stack.
  int EncoderChannels() const;

  // Flat "key=value" lines; FromString accepts the same format.
  std::string ToString() const;
  static ModelConfig FromString(const std::string &text);
  // Applies one "model.key=value" assignment; throws ConfigError.
  void Set(const std::string &key, const std::string &value);

  bool operator==(const ModelConfig &) const = default;

  static ModelConfig Paper();
  // F = 129 (256-point DFT), D = 8, reduced widths for CPU-scale runs.
  static ModelConfig Toy();
};

// Parameter count from the block formulas alone (no construction).
struct ParameterCount {
  int64_t encoder = 0;
  int64_t magnitude_decoder = 0;
  int64_t phase_decoder = 0;
  int64_t total() const { return encoder + magnitude_decoder + phase_decoder; }
};
ParameterCount AnalyticParameterCount(const ModelConfig &config);

template <typename T>
struct EncoderOutput {
  Tensor<T> mu;     // (B, D, N)
  Tensor<T> sigma;  // (B, D, N), > 0
};

template <typename T>
struct MagnitudeDecoderOutput {
  Tensor<T> a_hat;  // (B, F, N), >= 0
  Tensor<T> sigma;  // (B, F, N), >= 0
};

template <typename T>
struct Reconstruction {
  Tensor<T> a_hat, sigma_mag, psi_hat;  // (B, F, N)
  Tensor<T> mu_q, sigma_q, z;           // (B, D, N)
};

// kappa = a_hat + 1. Throws InvalidArgument when any a_hat < 0.
template <typename T>
Tensor<T> Concentration(const Tensor<T> &a_hat);

template <typename T>
class VaeModel {
 public:
  // Parameters are initialized from `seed` in a fixed construction order.
  VaeModel(const ModelConfig &config, uint64_t seed);
  ~VaeModel();
  VaeModel(const VaeModel &) = delete;
  VaeModel &operator=(const VaeModel &) = delete;

  const ModelConfig &config() const { return config_; }
  ParameterSet<T> &params() { return params_; }
  const ParameterSet<T> &params() const { return params_; }

  // mag, phase: (B, F, N).
  EncoderOutput<T> Encode(const Tensor<T> &mag, const Tensor<T> &phase) const;
  // z: (B, D, N).
  MagnitudeDecoderOutput<T> DecodeMagnitude(const Tensor<T> &z) const;
  // Output in [-pi, pi) for any parameter values.
  Tensor<T> DecodePhase(const Tensor<T> &z, const Tensor<T> &a_hat) const;

  // encode -> z = mu + sigma * epsilon -> decoders. A null epsilon means the
  // posterior mean (epsilon = 0).
  Reconstruction<T> Reconstruct(const Tensor<T> &mag, const Tensor<T> &phase,
                                const Tensor<T> *epsilon = nullptr) const;

  // Single-utterance helpers on dsp types (no gradient recording).
  Reconstruction<T> Reconstruct(const dsp::MagnitudeSpectrogram &mag,
                                const dsp::PhaseSpectrogram &phase) const;
  // z: D x N. Returns recombine(a_hat, psi_hat).
  dsp::ComplexSpectrogram Generate(const Eigen::ArrayXXd &z,
                                   const dsp::AnalysisConfig &analysis,
                                   int sample_rate = 16000) const;

  // Checkpoint = parameter archive with the model config under
  // metadata["model_config"]; extra metadata/tensors may be appended.
  ad::Archive ToArchive() const;
  void Save(const std::string &path) const;
  // Throws DataError when the archive does not match this model's config.
  void LoadArchive(const ad::Archive &archive);
  static std::unique_ptr<VaeModel> Load(const std::string &path);

 private:
  struct Networks;
  ModelConfig config_;
  ParameterSet<T> params_;
  std::unique_ptr<Networks> nets_;
};

// Conversions between F x N arrays and (1, F, N) tensors.
template <typename T>
Tensor<T> ToTensor(const Eigen::ArrayXXd &values, bool requires_grad = false);
// Takes batch element b of a (B, R, N) tensor as an R x N array.
template <typename T>
Eigen::ArrayXXd ToArray(const Tensor<T> &t, int b = 0);

extern template class VaeModel<float>;
extern template class VaeModel<double>;

}  // namespace model
}  // namespace phasevae

#endif  // PHASEVAE_MODEL_VAE_H_
