// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <limits>
#include <random>

#include "phasevae/angles.h"
#include "phasevae/dsp.h"
#include "phasevae/error.h"
#include "phasevae/fft.h"

namespace phasevae {
namespace dsp {
namespace {

constexpr double kPiD = kPi<double>;

// Direct O(n^2) DFT of frame n of the centered STFT.
std::vector<std::complex<double>> BruteForceFrame(const std::vector<double> &x,
                                                  const AnalysisConfig &cfg,
                                                  int n) {
  const int pad = cfg.window_length / 2;
  const auto w = MakeWindow(cfg.window, cfg.window_length);
  const int len = static_cast<int>(x.size());
  auto sample = [&](int j) {
    // Reflect padding without repeating the edge sample.
    int t = j - pad;
    if (t < 0) t = -t;
    if (t >= len) t = 2 * (len - 1) - t;
    return x[t];
  };
  std::vector<std::complex<double>> out(cfg.NumBins());
  for (int k = 0; k < cfg.NumBins(); ++k) {
    std::complex<double> acc = 0;
    for (int i = 0; i < cfg.window_length; ++i) {
      const double v = sample(n * cfg.hop_length + i) * w[i];
      acc += v * std::polar(1.0, -2 * kPiD * k * i / cfg.dft_size);
    }
    out[k] = acc;
  }
  return out;
}

std::vector<double> Noise(std::size_t n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> x(n);
  for (auto &v : x) v = g(rng);
  return x;
}

double RelativeError(const std::vector<double> &a, const std::vector<double> &b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += a[i] * a[i];
  }
  return std::sqrt(num / den);
}

TEST(WrapTest, Examples) {
  EXPECT_EQ(Wrap(0.0), 0.0);
  EXPECT_EQ(Wrap(kPiD), -kPiD);
  EXPECT_NEAR(Wrap(1.5 * kPiD), -0.5 * kPiD, 1e-15);
  EXPECT_NEAR(Wrap(-1.5 * kPiD), 0.5 * kPiD, 1e-15);
  EXPECT_EQ(Wrap(-kPiD), -kPiD);
}

TEST(WrapTest, RejectsNonFinite) {
  EXPECT_THROW(Wrap(std::numeric_limits<double>::quiet_NaN()), InvalidArgument);
  EXPECT_THROW(Wrap(std::numeric_limits<double>::infinity()), InvalidArgument);
}

TEST(WrapTest, RangeIdempotenceAndPeriodicity) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-50, 50);
  std::uniform_int_distribution<int> k(-1000000, 1000000);
  for (int i = 0; i < 10000; ++i) {
    const double x = u(rng);
    const double r = Wrap(x);
    ASSERT_GE(r, -kPiD);
    ASSERT_LT(r, kPiD);
    ASSERT_EQ(Wrap(r), r);
    const double shifted = Wrap(x + 2 * kPiD * k(rng));
    // Distance on the circle; absolute error grows with |2 pi k| ulps.
    ASSERT_NEAR(std::abs(Wrap(shifted - r)), 0.0, 1e-8);
  }
}

TEST(AnalysisConfigTest, Validation) {
  EXPECT_NO_THROW(AnalysisConfig::Paper().Validate());
  EXPECT_NO_THROW(AnalysisConfig::Toy().Validate());
  EXPECT_EQ(AnalysisConfig::Paper().NumBins(), 513);
  EXPECT_THROW((AnalysisConfig{512, 0, 1024}).Validate(), ConfigError);
  EXPECT_THROW((AnalysisConfig{512, 600, 1024}).Validate(), ConfigError);
  EXPECT_THROW((AnalysisConfig{512, 128, 256}).Validate(), ConfigError);
  EXPECT_THROW((AnalysisConfig{512, 128, 1023}).Validate(), ConfigError);
  // Hann with hop == window leaves zeros in the overlap-add normalizer.
  EXPECT_THROW((AnalysisConfig{512, 512, 1024}).Validate(), ConfigError);
  EXPECT_NE(AnalysisConfig::Paper().Hash(), AnalysisConfig::Toy().Hash());
}

TEST(FftTest, MatchesDirectDft) {
  const int n = 48;
  RealFft fft(n);
  auto x = Noise(n, 3);
  std::vector<std::complex<double>> out(fft.num_bins());
  fft.Forward(x, out);
  for (int k = 0; k < fft.num_bins(); ++k) {
    std::complex<double> acc = 0;
    for (int t = 0; t < n; ++t) acc += x[t] * std::polar(1.0, -2 * kPiD * k * t / n);
    EXPECT_NEAR(std::abs(out[k] - acc), 0.0, 1e-11);
  }
  std::vector<double> back(n);
  fft.Inverse(out, back);
  EXPECT_LT(RelativeError(x, back), 1e-14);
}

TEST(StftTest, ZeroSignal) {
  AudioBuffer audio{std::vector<double>(16000, 0.0), 16000};
  const auto spec = Stft(audio, AnalysisConfig::Paper());
  EXPECT_EQ(spec.NumBins(), 513);
  EXPECT_EQ(spec.NumFrames(), 1 + 16000 / 128);
  EXPECT_EQ(spec.values.abs().maxCoeff(), 0.0);
}

TEST(StftTest, RejectsShortAudio) {
  AudioBuffer audio{std::vector<double>(100, 0.0), 16000};
  EXPECT_THROW(Stft(audio, AnalysisConfig::Paper()), InvalidArgument);
}

TEST(StftTest, MatchesBruteForceDft) {
  const AnalysisConfig cfg{64, 16, 128, WindowKind::kHann};
  const auto x = Noise(300, 11);
  const auto spec = Stft(AudioBuffer{x, 16000}, cfg);
  for (int n : {0, 1, 7, spec.NumFrames() - 1}) {
    const auto ref = BruteForceFrame(x, cfg, n);
    for (int k = 0; k < cfg.NumBins(); ++k) {
      ASSERT_NEAR(std::abs(spec.values(k, n) - ref[k]), 0.0, 1e-10)
          << "frame " << n << " bin " << k;
    }
  }
}

TEST(StftTest, CosineAtBinFrequency) {
  const AnalysisConfig cfg = AnalysisConfig::Paper();
  const int k = 40;  // frequency k / dft_size cycles per sample
  std::vector<double> x(8000);
  for (std::size_t t = 0; t < x.size(); ++t) {
    x[t] = std::cos(2 * kPiD * k * static_cast<double>(t) / cfg.dft_size);
  }
  const auto spec = Stft(AudioBuffer{x, 16000}, cfg);
  const int n = 20;
  const auto ref = BruteForceFrame(x, cfg, n);
  Eigen::Index peak;
  spec.values.col(n).abs().maxCoeff(&peak);
  EXPECT_EQ(peak, k);
  EXPECT_NEAR(std::abs(spec.values(k, n)), std::abs(ref[k]), 1e-9);
  // Sum of the Hann window / 2 is the analytic peak for an on-bin cosine.
  EXPECT_NEAR(std::abs(spec.values(k, n)), cfg.window_length / 4.0, 1e-6);
}

TEST(StftTest, ImpulseGivesFlatMagnitude) {
  const AnalysisConfig cfg{64, 16, 128, WindowKind::kHann};
  std::vector<double> x(400, 0.0);
  const int n = 10;
  // Frame n starts at padded index n*hop, i.e. signal index n*hop - win/2.
  const int center = n * cfg.hop_length;  // window center in signal coordinates
  x[center] = 1.0;
  const auto spec = Stft(AudioBuffer{x, 16000}, cfg);
  const double w_center = MakeWindow(cfg.window, cfg.window_length)[32];
  for (int k = 0; k < cfg.NumBins(); ++k) {
    EXPECT_NEAR(std::abs(spec.values(k, n)), w_center, 1e-12);
  }
}

TEST(StftTest, Parseval) {
  const AnalysisConfig cfg{64, 16, 128, WindowKind::kHann};
  const auto x = Noise(500, 5);
  const auto spec = Stft(AudioBuffer{x, 16000}, cfg);
  const auto w = MakeWindow(cfg.window, cfg.window_length);
  // Energy of the windowed frame = (1/dft) * (|X0|^2 + 2 sum |Xk|^2 + |XF|^2).
  for (int n : {3, 9, 20}) {
    const int pad = cfg.window_length / 2;
    double energy = 0;
    for (int i = 0; i < cfg.window_length; ++i) {
      const double v = x[n * cfg.hop_length + i - pad] * w[i];
      energy += v * v;
    }
    double spectral = 0;
    for (int k = 0; k < cfg.NumBins(); ++k) {
      const double m = std::norm(spec.values(k, n));
      spectral += (k == 0 || k == cfg.NumBins() - 1) ? m : 2 * m;
    }
    spectral /= cfg.dft_size;
    EXPECT_NEAR(spectral / energy, 1.0, 1e-8);
  }
}

TEST(IstftTest, RoundTripAcrossConfigs) {
  const AnalysisConfig configs[] = {
      AnalysisConfig::Paper(), AnalysisConfig::Toy(), {512, 256, 512},
      {400, 100, 512}, {64, 16, 128}, {256, 64, 256}};
  uint64_t seed = 1;
  for (const auto &cfg : configs) {
    const auto x = Noise(4000, seed++);
    const auto y = Istft(Stft(AudioBuffer{x, 16000}, cfg), x.size());
    EXPECT_LT(RelativeError(x, y.samples), 1e-10) << cfg.ToString();
  }
}

TEST(IstftTest, ZeroSpectrogram) {
  ComplexSpectrogram spec;
  spec.config = AnalysisConfig::Toy();
  spec.values = Eigen::ArrayXXcd::Zero(129, 10);
  const auto y = Istft(spec);
  EXPECT_EQ(y.samples.size(), 9u * 32u);
  for (double v : y.samples) EXPECT_EQ(v, 0.0);
}

TEST(IstftTest, SingleFrameGivesScaledWindow) {
  const AnalysisConfig cfg{64, 16, 128, WindowKind::kHann};
  ComplexSpectrogram spec;
  spec.config = cfg;
  spec.values = Eigen::ArrayXXcd::Zero(cfg.NumBins(), 5);
  spec.values(0, 2) = 1.0;  // unit DC, zero phase: frame = 1/dft everywhere
  const auto y = Istft(spec);
  const auto w = MakeWindow(cfg.window, cfg.window_length);
  // Output at signal index j comes from frame offset i = j + pad - 2*hop.
  // Window energy of every frame is folded back through the reflect padding
  // of a 64-sample signal.
  const int len = 4 * cfg.hop_length;
  ASSERT_EQ(y.samples.size(), static_cast<std::size_t>(len));
  std::vector<double> norm(len, 0.0);
  for (int n = 0; n < 5; ++n) {
    for (int i = 0; i < cfg.window_length; ++i) {
      int j = n * cfg.hop_length + i - 32;
      if (j < 0) j = -j;
      if (j >= len) j = 2 * (len - 1) - j;
      norm[j] += w[i] * w[i];
    }
  }
  for (std::size_t j = 0; j < y.samples.size(); ++j) {
    const int i = static_cast<int>(j) + 32 - 2 * cfg.hop_length;
    const double expected =
        (i >= 0 && i < cfg.window_length) ? w[i] / cfg.dft_size / norm[j] : 0.0;
    EXPECT_NEAR(y.samples[j], expected, 1e-15);
  }
}

TEST(DecomposeTest, Examples) {
  ComplexSpectrogram spec;
  spec.config = AnalysisConfig::Toy();
  spec.values.resize(1, 4);
  spec.values << std::complex<double>(1, 0), std::complex<double>(-2, 0),
      std::complex<double>(0, 3), std::complex<double>(0, 0);
  const auto [mag, phase] = Decompose(spec);
  EXPECT_EQ(mag.values(0, 0), 1.0);
  EXPECT_EQ(phase.values(0, 0), 0.0);
  EXPECT_EQ(mag.values(0, 1), 2.0);
  EXPECT_EQ(phase.values(0, 1), -kPiD);
  EXPECT_EQ(mag.values(0, 2), 3.0);
  EXPECT_NEAR(phase.values(0, 2), kPiD / 2, 1e-15);
  EXPECT_EQ(mag.values(0, 3), 0.0);
  EXPECT_EQ(phase.values(0, 3), 0.0);
}

TEST(DecomposeTest, RoundTripsBothWays) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(-kPiD, kPiD);
  ComplexSpectrogram spec;
  spec.config = AnalysisConfig::Toy();
  spec.values.resize(17, 9);
  for (Eigen::Index i = 0; i < spec.values.size(); ++i) {
    spec.values(i) = {g(rng), g(rng)};
  }
  const auto [mag, phase] = Decompose(spec);
  const auto back = Recombine(mag, phase, spec.config);
  EXPECT_LT((back.values - spec.values).abs().maxCoeff(), 1e-12);

  MagnitudeSpectrogram m2{Eigen::ArrayXXd::Random(5, 6).abs() + 0.1};
  PhaseSpectrogram p2{Eigen::ArrayXXd::NullaryExpr(5, 6, [&] { return u(rng); })};
  const auto [m3, p3] = Decompose(Recombine(m2, p2, spec.config));
  EXPECT_LT((m3.values - m2.values).abs().maxCoeff(), 1e-12);
  EXPECT_LT((p3.values - p2.values).abs().maxCoeff(), 1e-12);
}

TEST(RecombineTest, ExamplesAndShapeMismatch) {
  MagnitudeSpectrogram mag{Eigen::ArrayXXd(1, 2)};
  mag.values << 1, 2;
  PhaseSpectrogram phase{Eigen::ArrayXXd(1, 2)};
  phase.values << 0, -kPiD;
  const auto s = Recombine(mag, phase, AnalysisConfig::Toy());
  EXPECT_NEAR(std::abs(s.values(0, 0) - std::complex<double>(1, 0)), 0, 1e-15);
  EXPECT_NEAR(std::abs(s.values(0, 1) - std::complex<double>(-2, 0)), 0, 1e-15);
  PhaseSpectrogram bad{Eigen::ArrayXXd::Zero(2, 2)};
  EXPECT_THROW(Recombine(mag, bad, AnalysisConfig::Toy()), InvalidArgument);
}

TEST(PhaseDerivativeTest, LinearPhase) {
  PhaseSpectrogram f_ramp{Eigen::ArrayXXd(6, 4)};
  PhaseSpectrogram n_ramp{Eigen::ArrayXXd(6, 4)};
  for (int f = 0; f < 6; ++f) {
    for (int n = 0; n < 4; ++n) {
      f_ramp.values(f, n) = Wrap(0.3 * f);
      n_ramp.values(f, n) = Wrap(0.5 * n);
    }
  }
  const auto grd = GroupDelay(f_ramp);
  ASSERT_EQ(grd.rows(), 5);
  ASSERT_EQ(grd.cols(), 4);
  EXPECT_LT((grd + 0.3).abs().maxCoeff(), 1e-12);
  const auto ifr = InstantaneousFrequency(n_ramp);
  ASSERT_EQ(ifr.rows(), 6);
  ASSERT_EQ(ifr.cols(), 3);
  EXPECT_LT((ifr - 0.5).abs().maxCoeff(), 1e-12);
  PhaseSpectrogram constant{Eigen::ArrayXXd::Constant(3, 3, 1.2)};
  EXPECT_EQ(GroupDelay(constant).abs().maxCoeff(), 0.0);
  EXPECT_EQ(InstantaneousFrequency(constant).abs().maxCoeff(), 0.0);
}

TEST(PhaseDerivativeTest, HandEvaluatedGroupDelay) {
  PhaseSpectrogram phase{Eigen::ArrayXXd(3, 1)};
  phase.values << 0, kPiD - 0.1, -kPiD + 0.1;
  const auto grd = GroupDelay(phase);
  EXPECT_NEAR(grd(0, 0), -(kPiD - 0.1), 1e-12);
  EXPECT_NEAR(grd(1, 0), -0.2, 1e-12);
}

TEST(PhaseDerivativeTest, DegenerateShapes) {
  PhaseSpectrogram one_bin{Eigen::ArrayXXd::Zero(1, 4)};
  PhaseSpectrogram one_frame{Eigen::ArrayXXd::Zero(4, 1)};
  EXPECT_THROW(GroupDelay(one_bin), InvalidArgument);
  EXPECT_THROW(InstantaneousFrequency(one_frame), InvalidArgument);
}

TEST(PhaseDerivativeTest, SinusoidInstantaneousFrequency) {
  const AnalysisConfig cfg = AnalysisConfig::Paper();
  const double f0 = 1000.0, fs = 16000.0;
  std::vector<double> x(16000);
  for (std::size_t t = 0; t < x.size(); ++t) x[t] = std::sin(2 * kPiD * f0 * t / fs);
  const auto [mag, phase] = Decompose(Stft(AudioBuffer{x, 16000}, cfg));
  const auto ifr = InstantaneousFrequency(phase);
  const double expected = Wrap(2 * kPiD * f0 * cfg.hop_length / fs);
  const int bin = static_cast<int>(f0 / fs * cfg.dft_size);  // 64
  for (int f = bin - 2; f <= bin + 2; ++f) {
    for (int n = 10; n < ifr.cols() - 10; ++n) {
      ASSERT_NEAR(Wrap(ifr(f, n) - expected), 0.0, 1e-6) << f << "," << n;
    }
  }
}

TEST(ShiftPhaseTest, OffsetsAndDerivativeInvariance) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-kPiD, kPiD);
  PhaseSpectrogram p{Eigen::ArrayXXd::NullaryExpr(7, 5, [&] { return u(rng); })};
  EXPECT_EQ((ShiftPhase(p, 0.0).values - p.values).abs().maxCoeff(), 0.0);
  const auto full = ShiftPhase(p, 2 * kPiD).values;
  for (Eigen::Index i = 0; i < full.size(); ++i) {
    EXPECT_NEAR(Wrap(full(i) - p.values(i)), 0.0, 1e-12);
  }
  const auto shifted = ShiftPhase(p, 1.7);
  const auto d0 = Derivatives(p), d1 = Derivatives(shifted);
  for (Eigen::Index i = 0; i < d0.grd.size(); ++i) {
    EXPECT_NEAR(Wrap(d0.grd(i) - d1.grd(i)), 0.0, 1e-12);
  }
  for (Eigen::Index i = 0; i < d0.ifr.size(); ++i) {
    EXPECT_NEAR(Wrap(d0.ifr(i) - d1.ifr(i)), 0.0, 1e-12);
  }
}

}  // namespace
}  // namespace dsp
}  // namespace phasevae
