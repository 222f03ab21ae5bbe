// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Convolutional building blocks in the fully convolutional DenseNet style.
// Feature maps are (B, c, d, N): channels, per-frame vector length, frames.
// Every convolution is weight-normalized and gated (linear * sigmoid(gate)),
// and padding is zero "same" padding.
//
// Blocks register their parameters in a ParameterSet under a name prefix at
// construction time and keep handles to them; Forward() only reads them.

#ifndef PHASEVAE_NN_BLOCKS_H_
#define PHASEVAE_NN_BLOCKS_H_

#include <random>
#include <string>
#include <vector>

#include "phasevae/autodiff/ops.h"
#include "phasevae/autodiff/parameters.h"

namespace phasevae {
namespace nn {

using ad::ParameterSet;
using ad::Shape;
using ad::Tensor;

inline constexpr double kDefaultLeakySlope = 0.01;

// Weight-normalized kernel: direction "v", per-output scale "g", bias "b".
// Initialization draws v uniformly in +-sqrt(3 / fan_in) and sets g = ||v||,
// so the effective kernel starts equal to v; biases start at zero.
template <typename T>
class WnKernel {
 public:
  WnKernel() = default;
  WnKernel(ParameterSet<T> &params, const std::string &prefix,
           const Shape &shape, int fan_in, std::mt19937_64 &rng);

  Tensor<T> Weight() const { return ad::WeightNorm(direction_, scale_); }
  const Tensor<T> &bias() const { return bias_; }
  int out_channels() const { return direction_.dim(0); }

 private:
  Tensor<T> direction_, scale_, bias_;
};

// Gated convolution: y = conv(x; W_lin) * sigmoid(conv(x; W_gate)).
// kernel_h x kernel_w with stride along d and dilation along N.
template <typename T>
class GatedConv2d {
 public:
  GatedConv2d() = default;
  GatedConv2d(ParameterSet<T> &params, const std::string &prefix, int in_ch,
              int out_ch, int kernel_h, int kernel_w, std::mt19937_64 &rng,
              ad::Conv2dOptions options = {});

  Tensor<T> Forward(const Tensor<T> &x) const;
  int out_channels() const { return out_ch_; }

 private:
  WnKernel<T> linear_, gate_;
  int out_ch_ = 0;
  ad::Conv2dOptions options_;
};

// Gated 3x3 transposed convolution expanding d by `stride`.
template <typename T>
class GatedConvTranspose2d {
 public:
  GatedConvTranspose2d() = default;
  GatedConvTranspose2d(ParameterSet<T> &params, const std::string &prefix,
                       int in_ch, int out_ch, int stride, std::mt19937_64 &rng);

  Tensor<T> Forward(const Tensor<T> &x, int out_d) const;

 private:
  WnKernel<T> linear_, gate_;
  int out_ch_ = 0;
  int stride_ = 1;
};

// 4 gated 3x3 convolutions with growth rate k; layer i sees the block input
// concatenated with the outputs of layers < i. (c, d, N) -> (c + 4k, d, N).
template <typename T>
class DenseBlock {
 public:
  DenseBlock(ParameterSet<T> &params, const std::string &prefix, int in_ch,
             std::mt19937_64 &rng, int growth = 8, int num_layers = 4);

  Tensor<T> Forward(const Tensor<T> &x) const;
  int out_channels() const { return out_ch_; }

 private:
  std::vector<GatedConv2d<T>> layers_;
  int out_ch_;
};

// Gated 1x1 convolution followed by 1x1 average pooling with stride s.
// Transition Down keeps the channel count; Transition Expand uses this class
// with a fixed output count (16 at paper scale).
template <typename T>
class TransitionDown {
 public:
  TransitionDown(ParameterSet<T> &params, const std::string &prefix, int in_ch,
                 int out_ch, int stride, std::mt19937_64 &rng);

  Tensor<T> Forward(const Tensor<T> &x) const;
  int out_channels() const { return conv_.out_channels(); }
  int stride() const { return stride_; }

 private:
  GatedConv2d<T> conv_;
  int stride_;
};

template <typename T>
TransitionDown<T> MakeTransitionExpand(ParameterSet<T> &params,
                                       const std::string &prefix, int in_ch,
                                       std::mt19937_64 &rng, int out_ch = 16,
                                       int stride = 1) {
  return TransitionDown<T>(params, prefix, in_ch, out_ch, stride, rng);
}

// Gated 3x3 transposed convolution; (c, d, N) -> (16, out_d, N) at paper
// scale. The caller passes out_d (ceil(out_d / stride) must equal d).
template <typename T>
class TransitionUp {
 public:
  TransitionUp(ParameterSet<T> &params, const std::string &prefix, int in_ch,
               int stride, std::mt19937_64 &rng, int out_ch = 16);

  Tensor<T> Forward(const Tensor<T> &x, int out_d) const;
  int stride() const { return stride_; }

 private:
  GatedConvTranspose2d<T> conv_;
  int stride_;
};

// Gated 1x1 convolution to a single channel.
template <typename T>
class TransitionFinal {
 public:
  TransitionFinal(ParameterSet<T> &params, const std::string &prefix, int in_ch,
                  std::mt19937_64 &rng);

  Tensor<T> Forward(const Tensor<T> &x) const { return conv_.Forward(x); }

 private:
  GatedConv2d<T> conv_;
};

// 4 gated 1-D dilated convolutions along N (kernel 3, dilations 1, 2, 4, 8),
// (c, d, N) -> (width, d, N), with a residual connection (identity when
// width == c, otherwise a weight-normalized 1x1 projection). Receptive field
// along time is 31 frames.
template <typename T>
class TemporalBlock {
 public:
  TemporalBlock(ParameterSet<T> &params, const std::string &prefix, int in_ch,
                int width, std::mt19937_64 &rng);

  Tensor<T> Forward(const Tensor<T> &x) const;
  int out_channels() const { return width_; }

  static constexpr int kKernel = 3;
  static constexpr int kDilations[4] = {1, 2, 4, 8};
  static constexpr int kReceptiveField = 31;

 private:
  std::vector<GatedConv2d<T>> layers_;
  bool project_;
  WnKernel<T> projection_;
  int width_;
};

// Per-frame affine map of the flattened (c * d) features to out_dim, laid out
// as (B, out_dim, 1, N). Leaky ReLU unless it is an output layer.
template <typename T>
class FullyConnected {
 public:
  FullyConnected(ParameterSet<T> &params, const std::string &prefix, int in_dim,
                 int out_dim, bool output_layer, std::mt19937_64 &rng,
                 T leaky_slope = T(kDefaultLeakySlope));

  Tensor<T> Forward(const Tensor<T> &x) const;

 private:
  WnKernel<T> kernel_;
  int in_dim_;
  bool output_layer_;
  T slope_;
};

enum class BlockKind {
  kDenseBlock,
  kTransitionDown,
  kTransitionExpand,
  kTransitionUp,
  kTransitionFinal,
  kTemporalBlock,
  kFullyConnected,
};

struct BlockSpec {
  BlockKind kind;
  int out_channels = 16;  // TE / TU / TemporalBlock width / FC out_dim
  int stride = 1;         // TD / TE / TU
  int growth = 8;         // DB
  int num_layers = 4;     // DB
  int target_d = 0;       // TU output length; 0 means d * stride
};

// Shape function of each block on (B, c, d, N) inputs.
Shape BlockOutputShape(const BlockSpec &spec, const Shape &input);

extern template class WnKernel<float>;
extern template class WnKernel<double>;
extern template class GatedConv2d<float>;
extern template class GatedConv2d<double>;
extern template class GatedConvTranspose2d<float>;
extern template class GatedConvTranspose2d<double>;
extern template class DenseBlock<float>;
extern template class DenseBlock<double>;
extern template class TransitionDown<float>;
extern template class TransitionDown<double>;
extern template class TransitionUp<float>;
extern template class TransitionUp<double>;
extern template class TransitionFinal<float>;
extern template class TransitionFinal<double>;
extern template class TemporalBlock<float>;
extern template class TemporalBlock<double>;
extern template class FullyConnected<float>;
extern template class FullyConnected<double>;

}  // namespace nn
}  // namespace phasevae

#endif  // PHASEVAE_NN_BLOCKS_H_
