// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <random>

#include "phasevae/error.h"
#include "phasevae/nn/blocks.h"
#include "test_util.h"

namespace phasevae {
namespace nn {
namespace {

using testing::CheckGradients;
using testing::RandomTensor;
using testing::TensorD;

void Fill(ParameterSet<double> &ps, const std::string &name, double value) {
  auto data = ps.Get(name).mutable_data();
  std::fill(data.begin(), data.end(), value);
}

// Makes a gated conv at `prefix` pass its linear path: gate -> sigmoid(60) = 1.
void OpenGate(ParameterSet<double> &ps, const std::string &prefix) {
  Fill(ps, prefix + "/gate/g", 0.0);
  Fill(ps, prefix + "/gate/b", 60.0);
}

TEST(DenseBlockTest, ChannelGrowth) {
  std::mt19937_64 rng(1);
  ParameterSet<double> ps;
  DenseBlock<double> a(ps, "a", 16, rng);
  DenseBlock<double> b(ps, "b", 48, rng);
  EXPECT_EQ(a.Forward(TensorD::Zeros({1, 16, 64, 10})).shape(), (Shape{1, 48, 64, 10}));
  EXPECT_EQ(b.Forward(TensorD::Zeros({1, 48, 32, 10})).shape(), (Shape{1, 80, 32, 10}));
  EXPECT_EQ(a.out_channels(), 48);
}

TEST(DenseBlockTest, ZeroNewWeightsPassInputThrough) {
  std::mt19937_64 rng(2);
  ParameterSet<double> ps;
  DenseBlock<double> block(ps, "db", 3, rng);
  for (auto *p : ps.WithPrefix("db/")) {
    if (p->name.ends_with("/g") || p->name.ends_with("/b")) Fill(ps, p->name, 0.0);
  }
  auto x = RandomTensor({2, 3, 5, 4}, rng, -1, 1, false);
  auto y = block.Forward(x);
  ASSERT_EQ(y.shape(), (Shape{2, 35, 5, 4}));
  const int64_t plane = 5 * 4;
  for (int b = 0; b < 2; ++b) {
    for (int c = 0; c < 35; ++c) {
      for (int64_t i = 0; i < plane; ++i) {
        const double got = y.data()[(b * 35 + c) * plane + i];
        const double want = c < 3 ? x.data()[(b * 3 + c) * plane + i] : 0.0;
        ASSERT_EQ(got, want);
      }
    }
  }
}

TEST(TransitionTest, ShapesAndSubsampling) {
  std::mt19937_64 rng(3);
  ParameterSet<double> ps;
  TransitionDown<double> td(ps, "td", 32, 32, 2, rng);
  EXPECT_EQ(td.Forward(TensorD::Zeros({1, 32, 64, 8})).shape(), (Shape{1, 32, 32, 8}));
  TransitionDown<double> td1(ps, "td1", 4, 4, 1, rng);
  EXPECT_EQ(td1.Forward(TensorD::Zeros({1, 4, 7, 3})).shape(), (Shape{1, 4, 7, 3}));

  auto te = MakeTransitionExpand<double>(ps, "te", 1, rng);
  EXPECT_EQ(te.Forward(TensorD::Zeros({1, 1, 513, 2})).shape(), (Shape{1, 16, 513, 2}));
  TransitionUp<double> tu(ps, "tu", 16, 4, rng);
  EXPECT_EQ(tu.Forward(TensorD::Zeros({1, 16, 8, 3}), 32).shape(), (Shape{1, 16, 32, 3}));
  TransitionFinal<double> tf(ps, "tf", 16, rng);
  EXPECT_EQ(tf.Forward(TensorD::Zeros({1, 16, 513, 2})).shape(), (Shape{1, 1, 513, 2}));
  EXPECT_THROW(TransitionDown<double>(ps, "bad", 2, 2, 0, rng), ShapeError);
}

TEST(TransitionTest, IdentityWeightsSubsampleExactly) {
  std::mt19937_64 rng(4);
  ParameterSet<double> ps;
  TransitionDown<double> td(ps, "td", 2, 2, 2, rng);
  auto v = ps.Get("td/conv/lin/v").mutable_data();
  v[0] = 1, v[1] = 0, v[2] = 0, v[3] = 1;
  Fill(ps, "td/conv/lin/g", 1.0);
  OpenGate(ps, "td/conv");
  auto x = RandomTensor({1, 2, 8, 3}, rng, -1, 1, false);
  auto y = td.Forward(x);
  ASSERT_EQ(y.shape(), (Shape{1, 2, 4, 3}));
  for (int c = 0; c < 2; ++c) {
    for (int h = 0; h < 4; ++h) {
      for (int n = 0; n < 3; ++n) {
        EXPECT_EQ(y.at({0, c, h, n}), x.at({0, c, 2 * h, n}));
      }
    }
  }
}

TEST(TemporalBlockTest, ReceptiveFieldAndTimeInvariance) {
  std::mt19937_64 rng(5);
  ParameterSet<double> ps;
  TemporalBlock<double> block(ps, "tb", 3, 3, rng);
  const int n = 80;
  // Impulse response: perturb one frame and measure which outputs change.
  auto base = TensorD::Zeros({1, 3, 2, n});
  auto pulse = TensorD::Zeros({1, 3, 2, n});
  pulse.mutable_data()[40] = 1.0;  // channel 0, row 0, frame 40
  auto y0 = block.Forward(base), y1 = block.Forward(pulse);
  int first = n, last = -1;
  for (int c = 0; c < 3; ++c) {
    for (int t = 0; t < n; ++t) {
      if (y0.at({0, c, 0, t}) != y1.at({0, c, 0, t})) {
        first = std::min(first, t);
        last = std::max(last, t);
      }
    }
  }
  EXPECT_LE(last - first + 1, TemporalBlock<double>::kReceptiveField);
  EXPECT_GE(first, 40 - 15);
  EXPECT_LE(last, 40 + 15);

  // Constant-in-time input: output constant on frames at least 15 from either
  // edge (zero "same" padding breaks invariance only within the border).
  auto c = TensorD::Zeros({1, 3, 2, n});
  auto cd = c.mutable_data();
  for (int64_t i = 0; i < c.size(); ++i) cd[i] = 0.1 * static_cast<double>(i / n) - 0.2;
  auto yc = block.Forward(c);
  for (int ch = 0; ch < 3; ++ch) {
    for (int r = 0; r < 2; ++r) {
      for (int t = 15; t < n - 15; ++t) {
        EXPECT_NEAR(yc.at({0, ch, r, t}), yc.at({0, ch, r, 15}), 1e-14);
      }
    }
  }
}

TEST(TemporalBlockTest, ZeroWeightsGiveBiasOnlyPlusResidual) {
  std::mt19937_64 rng(6);
  ParameterSet<double> ps;
  TemporalBlock<double> block(ps, "tb", 2, 4, rng);
  for (auto *p : ps.WithPrefix("tb/")) {
    if (p->name.ends_with("/g")) Fill(ps, p->name, 0.0);
  }
  Fill(ps, "tb/proj/b", 0.25);
  auto x = RandomTensor({1, 2, 3, 6}, rng, -1, 1, false);
  auto y = block.Forward(x);
  ASSERT_EQ(y.shape(), (Shape{1, 4, 3, 6}));
  // Gated layers output (0 + 0) * sigmoid(0) = 0; projection contributes bias.
  for (int64_t i = 0; i < y.size(); ++i) EXPECT_EQ(y.data()[i], 0.25);
}

TEST(FullyConnectedTest, IdentityAndLeakySlope) {
  std::mt19937_64 rng(7);
  ParameterSet<double> ps;
  FullyConnected<double> out(ps, "out", 3, 3, true, rng);
  FullyConnected<double> hidden(ps, "hid", 3, 3, false, rng);
  for (const std::string p : {"out", "hid"}) {
    auto v = ps.Get(p + "/v").mutable_data();
    std::fill(v.begin(), v.end(), 0.0);
    v[0] = v[4] = v[8] = 1.0;
    Fill(ps, p + "/g", 1.0);
  }
  auto x = TensorD::FromData({1, 3, 1, 2}, {1, -2, 3, -4, -5, 6});
  auto y = out.Forward(x);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(y.data()[i], x.data()[i]);
  auto z = hidden.Forward(x);
  EXPECT_DOUBLE_EQ(z.data()[1], -0.02);
  EXPECT_EQ(z.data()[2], 3.0);
  // (c, d) = (3, 1) flattens to 3 features; a mismatch is a shape error.
  EXPECT_THROW(out.Forward(TensorD::Zeros({1, 2, 2, 2})), ShapeError);
}

TEST(BlockShapeTest, RandomizedGridMatchesShapeFunction) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> ch(1, 5), len(1, 17), frames(1, 6), stride(1, 4);
  for (int trial = 0; trial < 40; ++trial) {
    ParameterSet<double> ps;
    const int c = ch(rng), d = len(rng), n = frames(rng), s = stride(rng);
    const Shape in = {1, c, d, n};
    auto x = RandomTensor(in, rng, -1, 1, false);
    const std::string p = std::to_string(trial);

    DenseBlock<double> db(ps, p + "db", c, rng, 2, 3);
    EXPECT_EQ(db.Forward(x).shape(),
              BlockOutputShape({BlockKind::kDenseBlock, 0, 1, 2, 3}, in));
    TransitionDown<double> td(ps, p + "td", c, c, s, rng);
    EXPECT_EQ(td.Forward(x).shape(), BlockOutputShape({BlockKind::kTransitionDown, c, s}, in));
    auto te = MakeTransitionExpand<double>(ps, p + "te", c, rng, 5, s);
    EXPECT_EQ(te.Forward(x).shape(),
              BlockOutputShape({BlockKind::kTransitionExpand, 5, s}, in));
    TransitionUp<double> tu(ps, p + "tu", c, s, rng, 4);
    const int target = d * s - (s > 1 ? 1 : 0);
    EXPECT_EQ(tu.Forward(x, target).shape(),
              BlockOutputShape({BlockKind::kTransitionUp, 4, s, 8, 4, target}, in));
    TransitionFinal<double> tf(ps, p + "tf", c, rng);
    EXPECT_EQ(tf.Forward(x).shape(), BlockOutputShape({BlockKind::kTransitionFinal}, in));
    TemporalBlock<double> tb(ps, p + "tb", c, 3, rng);
    EXPECT_EQ(tb.Forward(x).shape(), BlockOutputShape({BlockKind::kTemporalBlock, 3}, in));
    FullyConnected<double> fc(ps, p + "fc", c * d, 7, false, rng);
    EXPECT_EQ(fc.Forward(x).shape(), BlockOutputShape({BlockKind::kFullyConnected, 7}, in));
  }
}

TEST(BlockGradientTest, TinyEncoderStack) {
  // TE -> DB -> TD -> FC -> Temporal, gradients w.r.t. input and all params.
  for (uint64_t seed = 0; seed < 3; ++seed) {
    std::mt19937_64 rng(100 + seed);
    ParameterSet<double> ps;
    auto te = MakeTransitionExpand<double>(ps, "te", 2, rng, 3);
    DenseBlock<double> db(ps, "db", 3, rng, 2, 2);
    TransitionDown<double> td(ps, "td", 7, 7, 3, rng);
    FullyConnected<double> fc(ps, "fc", 7 * 3, 4, false, rng);
    TemporalBlock<double> tb(ps, "tb", 4, 4, rng);
    auto x = RandomTensor({1, 2, 7, 5}, rng);
    std::vector<TensorD> inputs{x};
    for (const auto &p : ps.params()) inputs.push_back(p.value);
    auto loss = [&](const std::vector<TensorD> &) {
      auto h = tb.Forward(fc.Forward(td.Forward(db.Forward(te.Forward(x)))));
      return ad::SumAll(ad::Square(h));
    };
    const auto r = CheckGradients(loss, inputs, 1e-5);
    EXPECT_LT(r.max_relative_error, 1e-5) << "seed " << seed;
    EXPECT_GT(r.analytic_norm, 0.0);
  }
}

TEST(BlockGradientTest, SinglePrecisionStack) {
  std::mt19937_64 rng(9);
  ParameterSet<float> ps;
  DenseBlock<float> db(ps, "db", 2, rng, 2, 2);
  TransitionUp<float> tu(ps, "tu", 6, 2, rng, 3);
  std::vector<float> xv(2 * 4 * 3);
  std::uniform_real_distribution<float> u(-1, 1);
  for (auto &v : xv) v = u(rng);
  auto x = ad::Tensor<float>::FromData({1, 2, 4, 3}, xv, true);
  auto f = [&] { return ad::SumAll(ad::Square(tu.Forward(db.Forward(x), 8))); };
  f().Backward();
  // Compare with a float central difference on each input element.
  const float h = 1e-2f;
  double diff = 0, norm = 0;
  auto data = x.mutable_data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const float saved = data[i];
    data[i] = saved + h;
    const double up = f().item();
    data[i] = saved - h;
    const double down = f().item();
    data[i] = saved;
    const double fd = (up - down) / (2 * h);
    diff += (fd - x.grad()[i]) * (fd - x.grad()[i]);
    norm += fd * fd;
  }
  EXPECT_LT(std::sqrt(diff / norm), 1e-3);
}

}  // namespace
}  // namespace nn
}  // namespace phasevae
