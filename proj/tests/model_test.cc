// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "phasevae/angles.h"
#include "phasevae/error.h"
#include "phasevae/losses/losses.h"
#include "phasevae/model/vae.h"
#include "test_util.h"

namespace phasevae {
namespace model {
namespace {

using testing::RandomTensor;
using testing::TensorD;

constexpr double kPiD = kPi<double>;

template <typename T>
std::vector<T> Vec(std::span<const T> s) {
  return {s.begin(), s.end()};
}

ModelConfig Tiny() {
  ModelConfig c;
  c.preset = "tiny";
  c.num_bins = 33;
  c.latent_dim = 4;
  c.te_channels = 2;
  c.growth = 2;
  c.dense_layers = 2;
  c.strides = {2, 2};
  c.fc_hidden = 6;
  c.temporal_width = 6;
  return c;
}

struct Batch {
  TensorD mag, phase;
};

Batch RandomBatch(const ModelConfig &c, int b, int n, std::mt19937_64 &rng) {
  return {RandomTensor({b, c.num_bins, n}, rng, 0, 3, false),
          RandomTensor({b, c.num_bins, n}, rng, -kPiD, kPiD, false)};
}

TEST(ModelConfigTest, ValidationAndRoundTrip) {
  EXPECT_NO_THROW(ModelConfig::Paper().Validate());
  EXPECT_NO_THROW(ModelConfig::Toy().Validate());
  ModelConfig bad = Tiny();
  bad.latent_dim = 33;
  EXPECT_THROW(bad.Validate(), ConfigError);
  bad = Tiny();
  bad.strides = {};
  EXPECT_THROW(bad.Validate(), ConfigError);
  bad = Tiny();
  bad.growth = 0;
  EXPECT_THROW(bad.Validate(), ConfigError);
  for (const auto &c : {ModelConfig::Paper(), ModelConfig::Toy(), Tiny()}) {
    EXPECT_EQ(ModelConfig::FromString(c.ToString()), c);
  }
  EXPECT_THROW(ModelConfig::FromString("model.bogus=1\n"), ConfigError);
  EXPECT_EQ(ModelConfig::Paper().StageLengths(), (std::vector<int>{513, 129, 33, 9}));
}

TEST(ModelTest, OutputShapesAndRanges) {
  std::mt19937_64 rng(1);
  for (const auto &config : {Tiny(), ModelConfig::Toy()}) {
    VaeModel<double> model(config, 7);
    for (int n : {1, 5, 17}) {
      const auto batch = RandomBatch(config, 2, n, rng);
      const auto r = model.Reconstruct(batch.mag, batch.phase);
      const Shape fs = {2, config.num_bins, n}, ls = {2, config.latent_dim, n};
      EXPECT_EQ(r.a_hat.shape(), fs);
      EXPECT_EQ(r.sigma_mag.shape(), fs);
      EXPECT_EQ(r.psi_hat.shape(), fs);
      EXPECT_EQ(r.mu_q.shape(), ls);
      EXPECT_EQ(r.sigma_q.shape(), ls);
      for (double v : r.sigma_q.data()) EXPECT_GT(v, 0.0);
      for (double v : r.a_hat.data()) EXPECT_GE(v, 0.0);
      for (double v : r.sigma_mag.data()) EXPECT_GE(v, 0.0);
      for (double v : r.psi_hat.data()) {
        EXPECT_GE(v, -kPiD);
        EXPECT_LT(v, kPiD);
      }
    }
  }
}

TEST(ModelTest, RejectsMismatchedShapes) {
  VaeModel<double> model(Tiny(), 1);
  EXPECT_THROW(model.Encode(TensorD::Zeros({1, 32, 4}), TensorD::Zeros({1, 32, 4})), ShapeError);
  EXPECT_THROW(model.Encode(TensorD::Zeros({1, 33, 4}), TensorD::Zeros({1, 33, 5})), ShapeError);
  EXPECT_THROW(model.DecodeMagnitude(TensorD::Zeros({1, 3, 4})), ShapeError);
  EXPECT_THROW(model.DecodePhase(TensorD::Zeros({1, 4, 4}), TensorD::Zeros({1, 33, 5})),
               ShapeError);
}

TEST(ModelTest, DeterministicForSeed) {
  std::mt19937_64 rng(2);
  const auto batch = RandomBatch(Tiny(), 1, 6, rng);
  VaeModel<double> a(Tiny(), 11), b(Tiny(), 11), c(Tiny(), 12);
  const auto ra = a.Reconstruct(batch.mag, batch.phase);
  const auto rb = b.Reconstruct(batch.mag, batch.phase);
  const auto rc = c.Reconstruct(batch.mag, batch.phase);
  EXPECT_EQ(Vec(ra.a_hat.data()), Vec(rb.a_hat.data()));
  EXPECT_EQ(Vec(ra.psi_hat.data()), Vec(rb.psi_hat.data()));
  EXPECT_NE(Vec(ra.a_hat.data()), Vec(rc.a_hat.data()));
}

TEST(ModelTest, ZeroEpsilonIsPosteriorMean) {
  std::mt19937_64 rng(3);
  VaeModel<double> model(Tiny(), 5);
  const auto batch = RandomBatch(Tiny(), 2, 7, rng);
  const auto zero = TensorD::Zeros({2, 4, 7});
  const auto r0 = model.Reconstruct(batch.mag, batch.phase, &zero);
  const auto rm = model.Reconstruct(batch.mag, batch.phase);
  const auto enc = model.Encode(batch.mag, batch.phase);
  const auto dec = model.DecodeMagnitude(enc.mu);
  EXPECT_EQ(Vec(r0.a_hat.data()), Vec(rm.a_hat.data()));
  EXPECT_EQ(Vec(r0.z.data()), Vec(enc.mu.data()));
  EXPECT_EQ(Vec(r0.a_hat.data()), Vec(dec.a_hat.data()));
  EXPECT_EQ(Vec(r0.psi_hat.data()), Vec(model.DecodePhase(enc.mu, dec.a_hat).data()));
  // A nonzero epsilon moves z by sigma * epsilon.
  const auto eps = RandomTensor({2, 4, 7}, rng, -1, 1, false);
  const auto r1 = model.Reconstruct(batch.mag, batch.phase, &eps);
  for (int64_t i = 0; i < eps.size(); ++i) {
    EXPECT_NEAR(r1.z.data()[i], enc.mu.data()[i] + enc.sigma.data()[i] * eps.data()[i], 1e-12);
  }
}

TEST(ModelTest, PhaseDecoderDependsOnMagnitude) {
  std::mt19937_64 rng(4);
  VaeModel<double> model(Tiny(), 9);
  const auto z = RandomTensor({1, 4, 6}, rng, -1, 1, false);
  const auto a1 = RandomTensor({1, 33, 6}, rng, 0, 2, false);
  const auto a2 = ad::AddScalar(a1, 1.5);
  const auto p1 = model.DecodePhase(z, a1), p2 = model.DecodePhase(z, a2);
  double diff = 0;
  for (int64_t i = 0; i < p1.size(); ++i) diff += std::abs(p1.data()[i] - p2.data()[i]);
  EXPECT_GT(diff, 1e-6);
}

TEST(ModelTest, PhaseRangeUnderExtremeParameters) {
  std::mt19937_64 rng(5);
  VaeModel<double> model(Tiny(), 3);
  std::uniform_real_distribution<double> u(-20, 20);
  for (auto &p : model.params().params()) {
    for (auto &v : p.value.mutable_data()) v = u(rng);
  }
  const auto z = RandomTensor({2, 4, 5}, rng, -50, 50, false);
  const auto a = RandomTensor({2, 33, 5}, rng, 0, 100, false);
  const auto psi = model.DecodePhase(z, a);
  for (double v : psi.data()) {
    ASSERT_TRUE(std::isfinite(v));
    EXPECT_GE(v, -kPiD);
    EXPECT_LT(v, kPiD);
  }
}

TEST(ConcentrationTest, Examples) {
  const auto k = Concentration(TensorD::FromData({1, 1, 3}, {0.0, 2.5, 10.0}));
  EXPECT_EQ(Vec(k.data()), (std::vector<double>{1.0, 3.5, 11.0}));
  EXPECT_THROW(Concentration(TensorD::FromData({1, 1, 1}, {-0.1})), InvalidArgument);
  auto a = TensorD::FromData({1, 1, 2}, {0.5, 1.5}, true);
  ad::SumAll(Concentration(a)).Backward();
  EXPECT_EQ(Vec(a.grad()), (std::vector<double>{1.0, 1.0}));
}

TEST(ParameterCountTest, AnalyticMatchesConstructed) {
  ModelConfig odd = Tiny();
  odd.num_bins = 65;
  odd.strides = {3, 2, 2};
  odd.fc_hidden = 10;
  odd.temporal_width = 7;
  for (const auto &config : {Tiny(), odd, ModelConfig::Toy(), ModelConfig::Paper()}) {
    VaeModel<float> model(config, 1);
    const auto count = AnalyticParameterCount(config);
    EXPECT_EQ(count.encoder, model.params().NumScalars(kEncoderPrefix)) << config.preset;
    EXPECT_EQ(count.magnitude_decoder, model.params().NumScalars(kMagnitudeDecoderPrefix));
    EXPECT_EQ(count.phase_decoder, model.params().NumScalars(kPhaseDecoderPrefix));
    EXPECT_EQ(count.total(), model.params().NumScalars());
  }
}

TEST(ModelTest, GenerateGivesValidSpectrogram) {
  std::mt19937_64 rng(6);
  VaeModel<double> model(ModelConfig::Toy(), 2);
  Eigen::ArrayXXd z(8, 12);
  std::normal_distribution<double> n01;
  for (int i = 0; i < z.size(); ++i) z.data()[i] = n01(rng);
  const auto spec = model.Generate(z, dsp::AnalysisConfig::Toy());
  EXPECT_EQ(spec.NumBins(), 129);
  EXPECT_EQ(spec.NumFrames(), 12);
  const auto audio = dsp::Istft(spec);
  for (double s : audio.samples) ASSERT_TRUE(std::isfinite(s));
  EXPECT_THROW(model.Generate(z, dsp::AnalysisConfig::Paper()), ConfigError);
}

TEST(CheckpointTest, RoundTripAndMismatch) {
  const auto dir = std::filesystem::temp_directory_path() / "phasevae_model_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "tiny.ckpt").string();
  std::mt19937_64 rng(7);
  const auto batch = RandomBatch(Tiny(), 1, 5, rng);
  ad::Tensor<float> mag = ad::Tensor<float>::FromData(
      batch.mag.shape(), std::vector<float>(batch.mag.data().begin(), batch.mag.data().end()));
  ad::Tensor<float> phase = ad::Tensor<float>::FromData(
      batch.phase.shape(),
      std::vector<float>(batch.phase.data().begin(), batch.phase.data().end()));
  VaeModel<float> model(Tiny(), 21);
  model.Save(path);
  const auto loaded = VaeModel<float>::Load(path);
  EXPECT_EQ(loaded->config(), Tiny());
  EXPECT_EQ(Vec(model.Reconstruct(mag, phase).psi_hat.data()),
            Vec(loaded->Reconstruct(mag, phase).psi_hat.data()));
  ModelConfig other = Tiny();
  other.growth = 3;
  VaeModel<float> mismatched(other, 0);
  EXPECT_THROW(mismatched.LoadArchive(model.ToArchive()), DataError);
  std::filesystem::remove_all(dir);
}

// Full pipeline: encoder, reparameterization, both decoders and the J7
// objective, checked against central differences on sampled coordinates of
// every parameter tensor.
TEST(ModelGradientTest, PipelineMatchesFiniteDifferences) {
  const ModelConfig config = Tiny();
  for (uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(100 + seed);
    VaeModel<double> model(config, seed);
    const auto batch = RandomBatch(config, 1, 6, rng);
    const auto eps = RandomTensor({1, 4, 6}, rng, -1, 1, false);
    const auto scheme = losses::LossScheme::Get(losses::SchemeId::kJ7);
    std::vector<TensorD> params;
    for (auto &p : model.params().params()) params.push_back(p.value);
    auto loss = [&](const std::vector<TensorD> &) {
      const auto r = model.Reconstruct(batch.mag, batch.phase, &eps);
      return losses::Composite(scheme, batch.mag, batch.phase, r).total;
    };
    const auto result = testing::CheckGradientsSampled(loss, params, 2, rng, 1e-6);
    EXPECT_LT(result.max_relative_error, 1e-4) << "seed " << seed;
    EXPECT_GT(result.analytic_norm, 0.0);
  }
}

}  // namespace
}  // namespace model
}  // namespace phasevae
