// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>

#include "phasevae/angles.h"
#include "phasevae/autodiff/archive.h"
#include "phasevae/autodiff/bessel.h"
#include "phasevae/autodiff/ops.h"
#include "phasevae/autodiff/parameters.h"
#include "phasevae/error.h"
#include "test_util.h"

namespace phasevae {
namespace ad {
namespace {

using testing::CheckGradients;
using testing::RandomTensor;
using testing::TensorD;
using Inputs = std::vector<TensorD>;

constexpr double kPiD = kPi<double>;

// ln I0 by summing (k^2/4)^m / (m!)^2 in extended precision until the term
// falls below 1e-17 of the partial sum.
double SeriesLogI0(double kappa) {
  long double q = static_cast<long double>(kappa) * kappa / 4.0L;
  long double term = 1.0L, sum = 1.0L;
  for (int m = 1; m < 2000; ++m) {
    term *= q / (static_cast<long double>(m) * m);
    sum += term;
    if (term < 1e-17L * sum) break;
  }
  return static_cast<double>(std::log(sum));
}

TEST(TensorTest, SumOfSquaresGradient) {
  auto x = TensorD::FromData({3}, {1, 2, 3}, true);
  SumAll(Square(x)).Backward();
  EXPECT_EQ(x.grad()[0], 2);
  EXPECT_EQ(x.grad()[1], 4);
  EXPECT_EQ(x.grad()[2], 6);
}

TEST(TensorTest, CosGradientAtZero) {
  auto x = TensorD::Scalar(0.0, true);
  Cos(x).Backward();
  EXPECT_EQ(x.grad()[0], 0.0);
}

TEST(TensorTest, LeafGradientsAccumulateLinearly) {
  std::mt19937_64 rng(1);
  auto x = RandomTensor({4, 3}, rng);
  auto f = [](const TensorD &t) { return SumAll(Sin(t)); };
  auto g = [](const TensorD &t) { return SumAll(Mul(t, Exp(t))); };
  f(x).Backward();
  std::vector<double> gf(x.grad().begin(), x.grad().end());
  x.ZeroGrad();
  g(x).Backward();
  std::vector<double> gg(x.grad().begin(), x.grad().end());
  x.ZeroGrad();
  Add(f(x), g(x)).Backward();
  for (int i = 0; i < 12; ++i) EXPECT_EQ(x.grad()[i], gf[i] + gg[i]);
}

TEST(TensorTest, SharedSubexpressionVisitedOnce) {
  auto x = TensorD::Scalar(1.5, true);
  auto y = Mul(x, x);
  auto z = Add(y, y);  // 2x^2
  z.Backward();
  EXPECT_DOUBLE_EQ(x.grad()[0], 6.0);
}

TEST(TensorTest, NoGradGuardRecordsNothing) {
  auto x = TensorD::Scalar(2.0, true);
  TensorD y;
  {
    NoGradGuard guard;
    y = Mul(x, x);
  }
  EXPECT_FALSE(y.requires_grad());
  EXPECT_EQ(y.item(), 4.0);
}

TEST(TensorTest, ShapeErrors) {
  auto a = TensorD::Zeros({2, 3});
  auto b = TensorD::Zeros({4, 3});
  EXPECT_THROW(Add(a, b), ShapeError);
  EXPECT_THROW(MatMul(a, a), ShapeError);
  EXPECT_THROW(TensorD::FromData({2, 2}, {1, 2, 3}), ShapeError);
  EXPECT_THROW(Reshape(a, {5}), ShapeError);
}

TEST(TensorTest, BroadcastForward) {
  auto a = TensorD::FromData({2, 3}, {1, 2, 3, 4, 5, 6});
  auto b = TensorD::FromData({3}, {10, 20, 30});
  auto c = Add(a, b);
  EXPECT_EQ(c.at({1, 2}), 36);
  auto d = Mul(a, TensorD::FromData({2, 1}, {2, 3}));
  EXPECT_EQ(d.at({1, 0}), 12);
}

TEST(TensorTest, TapeReplayIsBitIdentical) {
  auto run = [] {
    std::mt19937_64 rng(3);
    auto x = RandomTensor({2, 3, 5, 6}, rng);
    auto w = RandomTensor({4, 3, 3, 3}, rng);
    auto y = SumAll(Tanh(Conv2d(x, w, nullptr)));
    y.Backward();
    std::vector<double> out(w.grad().begin(), w.grad().end());
    out.push_back(y.item());
    return out;
  };
  EXPECT_EQ(run(), run());
}

TEST(ActivationTest, Examples) {
  EXPECT_DOUBLE_EQ(LeakyRelu(TensorD::Scalar(-1.0), 0.01).item(), -0.01);
  EXPECT_DOUBLE_EQ(Atan2(TensorD::Scalar(1.0), TensorD::Scalar(0.0)).item(),
                   kPiD / 2);
  EXPECT_DOUBLE_EQ(Softplus(TensorD::Scalar(0.0)).item(), std::log(2.0));
  EXPECT_DOUBLE_EQ(Softplus(TensorD::Scalar(800.0)).item(), 800.0);
  EXPECT_GT(Softplus(TensorD::Scalar(-800.0)).item(), -1e-300);
  // atan2 of (0, -1) is pi, reduced into the half-open range.
  EXPECT_DOUBLE_EQ(Atan2(TensorD::Scalar(0.0), TensorD::Scalar(-1.0)).item(), -kPiD);
  auto y = TensorD::Scalar(0.0, true);
  auto x = TensorD::Scalar(0.0, true);
  auto r = Atan2(y, x);
  EXPECT_EQ(r.item(), 0.0);
  r.Backward();
  EXPECT_EQ(y.grad()[0], 0.0);
  EXPECT_EQ(x.grad()[0], 0.0);
}

TEST(GuardTest, LogAndDivClamp) {
  auto z = TensorD::Scalar(0.0, true);
  const double v = Log(z).item();
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(v, std::log(1e-12), 1e-9);
  auto q = Div(TensorD::Scalar(1.0), TensorD::Scalar(0.0));
  EXPECT_TRUE(std::isfinite(q.item()));
}

// Every primitive against central differences, 20 seeds, 64-bit.
struct PrimitiveCase {
  std::string name;
  std::vector<Shape> shapes;
  double lo, hi;
  std::function<TensorD(const Inputs &)> fn;
};

std::vector<PrimitiveCase> PrimitiveCases() {
  const Shape s43 = {4, 3};
  auto weights = [](const TensorD &y) {
    // Fixed non-uniform weighting so that the loss is not a plain sum.
    std::vector<double> w(y.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.3 + 0.1 * (i % 7);
    return SumAll(Mul(y, TensorD::FromData(y.shape(), w)));
  };
  return {
      {"add", {s43, {3}}, -1, 1, [=](const Inputs &x) { return weights(Add(x[0], x[1])); }},
      {"sub", {s43, {4, 1}}, -1, 1, [=](const Inputs &x) { return weights(Sub(x[0], x[1])); }},
      {"mul", {s43, s43}, -1, 1, [=](const Inputs &x) { return weights(Mul(x[0], x[1])); }},
      {"div", {s43, s43}, 0.5, 2, [=](const Inputs &x) { return weights(Div(x[0], x[1])); }},
      {"add_scalar", {s43}, -1, 1, [=](const Inputs &x) { return weights(AddScalar(x[0], 2.5)); }},
      {"mul_scalar", {s43}, -1, 1, [=](const Inputs &x) { return weights(MulScalar(x[0], -1.5)); }},
      {"neg", {s43}, -1, 1, [=](const Inputs &x) { return weights(Neg(x[0])); }},
      {"exp", {s43}, -1, 1, [=](const Inputs &x) { return weights(Exp(x[0])); }},
      {"log", {s43}, 0.2, 3, [=](const Inputs &x) { return weights(Log(x[0])); }},
      {"cos", {s43}, -3, 3, [=](const Inputs &x) { return weights(Cos(x[0])); }},
      {"sin", {s43}, -3, 3, [=](const Inputs &x) { return weights(Sin(x[0])); }},
      {"square", {s43}, -2, 2, [=](const Inputs &x) { return weights(Square(x[0])); }},
      {"sqrt", {s43}, 0.2, 3, [=](const Inputs &x) { return weights(Sqrt(x[0])); }},
      {"sigmoid", {s43}, -4, 4, [=](const Inputs &x) { return weights(Sigmoid(x[0])); }},
      {"tanh", {s43}, -2, 2, [=](const Inputs &x) { return weights(Tanh(x[0])); }},
      {"softplus", {s43}, -4, 4, [=](const Inputs &x) { return weights(Softplus(x[0])); }},
      {"leaky_relu", {s43}, 0.05, 1, [=](const Inputs &x) {
         // Inputs bounded away from the kink at 0 on both sides.
         return weights(LeakyRelu(Concat<double>({x[0], Neg(x[0])}, 0), 0.01));
       }},
      {"log_bessel_i0", {s43}, 0, 40, [=](const Inputs &x) { return weights(LogBesselI0(x[0])); }},
      {"atan2", {s43, s43}, 0.2, 2, [=](const Inputs &x) {
         return weights(Atan2(x[0], Sub(x[1], TensorD::Scalar(1.0))));
       }},
      {"wrap", {s43}, -1, 1, [=](const Inputs &x) { return weights(Wrap(MulScalar(x[0], 2.0))); }},
      {"sum_axis", {{2, 3, 4}}, -1, 1, [=](const Inputs &x) { return weights(Sum(x[0], {1})); }},
      {"mean_axes", {{2, 3, 4}}, -1, 1, [=](const Inputs &x) {
         return weights(Mean(x[0], {0, 2}, true));
       }},
      {"matmul", {s43, {3, 5}}, -1, 1, [=](const Inputs &x) { return weights(MatMul(x[0], x[1])); }},
      {"reshape_concat_slice", {s43, {4, 2}}, -1, 1, [=](const Inputs &x) {
         auto c = Concat<double>({x[0], x[1]}, 1);
         return weights(Reshape(Slice(c, 1, 1, 3), {2, 6}));
       }},
      {"weight_norm", {{3, 2, 3, 3}, {3}}, 0.2, 1, [=](const Inputs &x) {
         return weights(WeightNorm(x[0], x[1]));
       }},
      {"gated", {s43, s43}, -2, 2, [=](const Inputs &x) { return weights(Gated(x[0], x[1])); }},
      {"reparameterize", {s43, s43}, 0.1, 1, [=](const Inputs &x) {
         auto eps = TensorD::FromData({4, 3}, {0.3, -1, 2, 0.5, 0.1, -0.2, 1, 1, -1, 0, 0.7, -0.4});
         return weights(Reparameterize(x[0], x[1], eps));
       }},
      {"conv2d", {{2, 3, 7, 5}, {4, 3, 3, 3}, {4}}, -1, 1, [=](const Inputs &x) {
         return weights(Conv2d(x[0], x[1], &x[2]));
       }},
      {"conv2d_stride_dilation", {{1, 2, 9, 11}, {3, 2, 3, 3}}, -1, 1, [=](const Inputs &x) {
         return weights(Conv2d(x[0], x[1], nullptr, {2, 2}));
       }},
      {"conv2d_1x1", {{2, 5, 4, 6}, {3, 5, 1, 1}, {3}}, -1, 1, [=](const Inputs &x) {
         return weights(Conv2d(x[0], x[1], &x[2]));
       }},
      {"conv_transpose2d", {{2, 3, 4, 5}, {3, 2, 3, 3}, {2}}, -1, 1, [=](const Inputs &x) {
         return weights(ConvTranspose2d(x[0], x[1], &x[2], 3, 11));
       }},
      {"conv1d_dilated", {{2, 3, 12}, {4, 3, 3}, {4}}, -1, 1, [=](const Inputs &x) {
         return weights(Conv1dDilated(x[0], x[1], &x[2], 4));
       }},
      {"avg_pool", {{2, 3, 9, 4}}, -1, 1, [=](const Inputs &x) { return weights(AvgPool1x1(x[0], 4)); }},
  };
}

TEST(GradientCheckTest, EveryPrimitiveTwentySeeds) {
  for (const auto &c : PrimitiveCases()) {
    for (uint64_t seed = 0; seed < 20; ++seed) {
      std::mt19937_64 rng(1000 + seed);
      Inputs inputs;
      for (const auto &s : c.shapes) inputs.push_back(RandomTensor(s, rng, c.lo, c.hi));
      const auto r = CheckGradients(c.fn, inputs, 1e-3);
      EXPECT_LT(r.max_relative_error, 1e-5) << c.name << " seed " << seed;
    }
  }
}

TEST(ConvTest, IdentityKernelAndShapes) {
  std::mt19937_64 rng(2);
  auto x = RandomTensor({2, 3, 6, 5}, rng);
  std::vector<double> eye(9, 0.0);
  for (int i = 0; i < 3; ++i) eye[i * 3 + i] = 1.0;
  auto w = TensorD::FromData({3, 3, 1, 1}, eye);
  auto y = Conv2d(x, w, nullptr);
  for (int64_t i = 0; i < x.size(); ++i) EXPECT_EQ(y.data()[i], x.data()[i]);
  auto pooled = AvgPool1x1(TensorD::Zeros({1, 1, 8, 3}), 2);
  EXPECT_EQ(pooled.shape(), (Shape{1, 1, 4, 3}));
  EXPECT_EQ(Conv2d(x, TensorD::Zeros({4, 3, 3, 3}), nullptr, {4, 1}).shape(),
            (Shape{2, 4, 2, 5}));
  EXPECT_THROW(ConvTranspose2d(TensorD::Zeros({1, 3, 4, 2}),
                               TensorD::Zeros({3, 2, 3, 3}), nullptr, 2, 11),
               ShapeError);
  EXPECT_THROW(Conv2d(TensorD::Zeros({1, 3, 0, 2}), TensorD::Zeros({2, 3, 3, 3}), nullptr),
               ShapeError);
}

TEST(ConvTest, TransposeIsAdjointOfConv) {
  std::mt19937_64 rng(8);
  auto x = RandomTensor({1, 2, 10, 4}, rng, -1, 1, false);
  auto w = RandomTensor({3, 2, 3, 3}, rng, -1, 1, false);  // (O, C) for Conv2d
  auto y = RandomTensor({1, 3, 4, 4}, rng, -1, 1, false);
  // <conv(x), y> == <x, conv^T(y)> with the transposed op taking (Cin=O, O=C).
  auto cx = Conv2d(x, w, nullptr, {3, 1});
  auto ty = ConvTranspose2d(y, w, nullptr, 3, 10);
  double lhs = 0, rhs = 0;
  for (int64_t i = 0; i < cx.size(); ++i) lhs += cx.data()[i] * y.data()[i];
  for (int64_t i = 0; i < x.size(); ++i) rhs += x.data()[i] * ty.data()[i];
  EXPECT_NEAR(lhs, rhs, 1e-12);
}

TEST(WeightNormTest, Properties) {
  auto v = TensorD::FromData({2, 2}, {0.6, 0.8, 1.0, 0.0});
  auto g = TensorD::FromData({2}, {1.0, 1.0});
  auto w = WeightNorm(v, g);
  for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(w.data()[i], v.data()[i]);
  auto w10 = WeightNorm(MulScalar(v, 10.0), g);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(w10.data()[i], v.data()[i], 1e-15);
  auto zero = TensorD::FromData({2, 2}, {0.0, 0.0, 1.0, 0.0});
  EXPECT_THROW(WeightNorm(zero, g), NumericalError);
}

TEST(GatedTest, Saturation) {
  auto lin = TensorD::FromData({2}, {3.0, -4.0});
  EXPECT_EQ(Gated(lin, TensorD::Zeros({2})).data()[0], 1.5);
  auto big = Gated(lin, TensorD::Full({2}, 1e4));
  EXPECT_EQ(big.data()[1], -4.0);
  EXPECT_THROW(Gated(lin, TensorD::Zeros({3})), ShapeError);
}

TEST(ReparameterizeTest, Identities) {
  auto mu = TensorD::FromData({2}, {1.0, -2.0}, true);
  auto sigma = TensorD::FromData({2}, {0.5, 3.0}, true);
  auto eps = TensorD::FromData({2}, {0.7, -1.1}, true);
  EXPECT_EQ(Reparameterize(mu, sigma, TensorD::Zeros({2})).data()[1], -2.0);
  EXPECT_EQ(Reparameterize(mu, TensorD::Zeros({2}), eps).data()[0], 1.0);
  SumAll(Reparameterize(mu, sigma, eps)).Backward();
  EXPECT_EQ(mu.grad()[0], 1.0);
  EXPECT_EQ(sigma.grad()[1], -1.1);
  EXPECT_TRUE(eps.grad().empty() || eps.grad()[0] == 0.0);
}

TEST(BesselTest, KnownValues) {
  EXPECT_EQ(LogBesselI0(0.0), 0.0);
  EXPECT_NEAR(LogBesselI0(1.0), std::log(1.2660658777520082), 1e-15);
  EXPECT_EQ(BesselI1OverI0(0.0), 0.0);
  EXPECT_THROW(LogBesselI0(-1.0), InvalidArgument);
}

TEST(BesselTest, MatchesSeriesOracleUpTo100) {
  for (int i = 0; i <= 10000; ++i) {
    const double k = i * 0.01;
    const double ref = SeriesLogI0(k);
    const double got = LogBesselI0(k);
    ASSERT_LE(std::abs(got - ref), 1e-10 * std::max(std::abs(ref), 1e-300))
        << "kappa " << k;
  }
}

TEST(BesselTest, BranchesAgreeAt50) {
  const double a = LogBesselI0Series(50.0), b = LogBesselI0Asymptotic(50.0);
  EXPECT_LT(std::abs(a - b) / std::abs(a), 1e-10);
}

TEST(BesselTest, StableForLargeKappa) {
  for (double k : {1e3, 1e4, 1e6}) {
    const double v = LogBesselI0(k);
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_NEAR(v, k - 0.5 * std::log(2 * kPiD * k) + 1.0 / (8 * k), 1e-9 * k);
    EXPECT_LT(BesselI1OverI0(k), 1.0);
  }
}

TEST(BesselTest, MonotoneConvexRatioInUnitInterval) {
  std::vector<double> v;
  for (int i = 0; i <= 1000; ++i) {
    const double k = i * 0.1;
    v.push_back(LogBesselI0(k));
    const double r = BesselI1OverI0(k);
    ASSERT_GE(r, 0.0);
    ASSERT_LT(r, 1.0);
  }
  for (std::size_t i = 1; i < v.size(); ++i) ASSERT_GT(v[i], v[i - 1]);
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    ASSERT_GE(v[i + 1] - 2 * v[i] + v[i - 1], -1e-12) << i;
  }
}

TEST(BesselTest, DerivativeIsRatio) {
  for (double k : {0.5, 3.0, 14.9, 15.1, 60.0}) {
    const double h = 1e-5;
    const double fd = (LogBesselI0(k + h) - LogBesselI0(k - h)) / (2 * h);
    EXPECT_NEAR(BesselI1OverI0(k), fd, 1e-6) << k;
  }
}

TEST(ArchiveTest, RoundTripAndCorruption) {
  const auto path =
      (std::filesystem::temp_directory_path() / "phasevae_archive_test.pvta").string();
  Archive a;
  a.metadata["kind"] = "test";
  a.tensors.push_back({"w", {2, 3}, {1, 2, 3, 4, 5, 6.5f}});
  a.tensors.push_back({"s", {}, {-7}});
  WriteArchive(path, a);
  const Archive b = ReadArchive(path);
  EXPECT_EQ(b.Meta("kind"), "test");
  ASSERT_EQ(b.tensors.size(), 2u);
  EXPECT_EQ(b.Find("w")->values, a.tensors[0].values);
  EXPECT_EQ(b.Find("s")->shape, Shape{});
  EXPECT_THROW(b.Meta("missing"), DataError);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 3);
  EXPECT_THROW(ReadArchive(path), DataError);
  std::filesystem::remove(path);
}

TEST(ParameterSetTest, RegistrationAndLoading) {
  ParameterSet<float> ps;
  ps.Add("enc/a", {2}, {1, 2});
  ps.Add("dec/b", {1}, {3});
  EXPECT_THROW(ps.Add("enc/a", {1}, {0}), InvalidArgument);
  EXPECT_EQ(ps.NumScalars("enc/"), 2);
  EXPECT_EQ(ps.WithPrefix("dec/").size(), 1u);
  auto tensors = ps.ToArchive();
  tensors[0].values = {5, 6};
  ps.LoadFrom(tensors);
  EXPECT_EQ(ps.Get("enc/a").data()[1], 6.0f);
  tensors[1].shape = {2};
  EXPECT_THROW(ps.LoadFrom(tensors), DataError);
}

}  // namespace
}  // namespace ad
}  // namespace phasevae
