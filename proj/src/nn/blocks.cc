// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "phasevae/nn/blocks.h"

#include <cmath>

#include "phasevae/error.h"

namespace phasevae {
namespace nn {
namespace {

template <typename T>
Tensor<T> ConcatKernels(const Tensor<T> &a, const Tensor<T> &b) {
  return ad::Concat<T>({a, b}, 0);
}

template <typename T>
Tensor<T> SplitGate(const Tensor<T> &y, int out_ch) {
  return ad::Gated(ad::Slice(y, 1, 0, out_ch), ad::Slice(y, 1, out_ch, out_ch));
}

void CheckFeatureMap(const Shape &shape, const char *who) {
  if (shape.size() != 4) {
    throw ShapeError(std::string(who) + " expects a (B, c, d, N) feature map, got " +
                     ad::ShapeToString(shape));
  }
}

}  // namespace

template <typename T>
WnKernel<T>::WnKernel(ParameterSet<T> &params, const std::string &prefix,
                      const Shape &shape, int fan_in, std::mt19937_64 &rng) {
  const int out = shape[0];
  const int64_t n = ad::NumElements(shape);
  const double bound = std::sqrt(3.0 / std::max(fan_in, 1));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<T> v(n);
  for (auto &x : v) x = static_cast<T>(dist(rng));
  const int64_t row = n / out;
  std::vector<T> g(out);
  for (int o = 0; o < out; ++o) {
    double acc = 0.0;
    for (int64_t i = 0; i < row; ++i) acc += double(v[o * row + i]) * v[o * row + i];
    g[o] = static_cast<T>(std::sqrt(acc));
  }
  direction_ = params.Add(prefix + "/v", shape, std::move(v));
  scale_ = params.Add(prefix + "/g", {out}, std::move(g));
  bias_ = params.Add(prefix + "/b", {out}, std::vector<T>(out, T(0)));
}

template <typename T>
GatedConv2d<T>::GatedConv2d(ParameterSet<T> &params, const std::string &prefix,
                            int in_ch, int out_ch, int kernel_h, int kernel_w,
                            std::mt19937_64 &rng, ad::Conv2dOptions options)
    : linear_(params, prefix + "/lin", {out_ch, in_ch, kernel_h, kernel_w},
              in_ch * kernel_h * kernel_w, rng),
      gate_(params, prefix + "/gate", {out_ch, in_ch, kernel_h, kernel_w},
            in_ch * kernel_h * kernel_w, rng),
      out_ch_(out_ch),
      options_(options) {}

template <typename T>
Tensor<T> GatedConv2d<T>::Forward(const Tensor<T> &x) const {
  // One convolution over the stacked [linear; gate] kernels.
  const Tensor<T> w = ConcatKernels(linear_.Weight(), gate_.Weight());
  const Tensor<T> b = ConcatKernels(linear_.bias(), gate_.bias());
  return SplitGate(ad::Conv2d(x, w, &b, options_), out_ch_);
}

template <typename T>
GatedConvTranspose2d<T>::GatedConvTranspose2d(ParameterSet<T> &params,
                                              const std::string &prefix,
                                              int in_ch, int out_ch, int stride,
                                              std::mt19937_64 &rng)
    // Kernels are stored (out, in, 3, 3) so weight norm runs per output
    // channel; Forward transposes the first two axes.
    : linear_(params, prefix + "/lin", {out_ch, in_ch, 3, 3}, in_ch * 9, rng),
      gate_(params, prefix + "/gate", {out_ch, in_ch, 3, 3}, in_ch * 9, rng),
      out_ch_(out_ch),
      stride_(stride) {
  if (stride < 1) throw ShapeError("transposed convolution stride must be >= 1");
}

namespace {

// (O, I, kh, kw) -> (I, O, kh, kw) via reshape/slice/concat so that the
// gradient flows through existing primitives.
template <typename T>
Tensor<T> SwapLeadingAxes(const Tensor<T> &w) {
  const int O = w.dim(0), I = w.dim(1), kh = w.dim(2), kw = w.dim(3);
  std::vector<Tensor<T>> rows;
  rows.reserve(I);
  for (int i = 0; i < I; ++i) {
    rows.push_back(ad::Reshape(ad::Slice(w, 1, i, 1), {1, O, kh, kw}));
  }
  return ad::Concat(rows, 0);
}

}  // namespace

template <typename T>
Tensor<T> GatedConvTranspose2d<T>::Forward(const Tensor<T> &x, int out_d) const {
  const Tensor<T> w = SwapLeadingAxes(
      ConcatKernels(linear_.Weight(), gate_.Weight()));
  const Tensor<T> b = ConcatKernels(linear_.bias(), gate_.bias());
  return SplitGate(ad::ConvTranspose2d(x, w, &b, stride_, out_d), out_ch_);
}

template <typename T>
DenseBlock<T>::DenseBlock(ParameterSet<T> &params, const std::string &prefix,
                          int in_ch, std::mt19937_64 &rng, int growth,
                          int num_layers)
    : out_ch_(in_ch + num_layers * growth) {
  if (in_ch < 1) throw ShapeError("dense block needs at least one input channel");
  for (int i = 0; i < num_layers; ++i) {
    layers_.emplace_back(params, prefix + "/conv" + std::to_string(i),
                         in_ch + i * growth, growth, 3, 3, rng);
  }
}

template <typename T>
Tensor<T> DenseBlock<T>::Forward(const Tensor<T> &x) const {
  CheckFeatureMap(x.shape(), "DenseBlock");
  std::vector<Tensor<T>> features{x};
  for (const auto &layer : layers_) {
    const Tensor<T> input =
        features.size() == 1 ? features[0] : ad::Concat(features, 1);
    features.push_back(layer.Forward(input));
  }
  return ad::Concat(features, 1);
}

template <typename T>
TransitionDown<T>::TransitionDown(ParameterSet<T> &params,
                                  const std::string &prefix, int in_ch,
                                  int out_ch, int stride, std::mt19937_64 &rng)
    : conv_(params, prefix + "/conv", in_ch, out_ch, 1, 1, rng), stride_(stride) {
  if (stride < 1) throw ShapeError("transition stride must be >= 1");
}

template <typename T>
Tensor<T> TransitionDown<T>::Forward(const Tensor<T> &x) const {
  CheckFeatureMap(x.shape(), "TransitionDown");
  const Tensor<T> y = conv_.Forward(x);
  return stride_ == 1 ? y : ad::AvgPool1x1(y, stride_);
}

template <typename T>
TransitionUp<T>::TransitionUp(ParameterSet<T> &params, const std::string &prefix,
                              int in_ch, int stride, std::mt19937_64 &rng,
                              int out_ch)
    : conv_(params, prefix + "/tconv", in_ch, out_ch, stride, rng),
      stride_(stride) {}

template <typename T>
Tensor<T> TransitionUp<T>::Forward(const Tensor<T> &x, int out_d) const {
  CheckFeatureMap(x.shape(), "TransitionUp");
  return conv_.Forward(x, out_d);
}

template <typename T>
TransitionFinal<T>::TransitionFinal(ParameterSet<T> &params,
                                    const std::string &prefix, int in_ch,
                                    std::mt19937_64 &rng)
    : conv_(params, prefix + "/conv", in_ch, 1, 1, 1, rng) {}

template <typename T>
TemporalBlock<T>::TemporalBlock(ParameterSet<T> &params,
                                const std::string &prefix, int in_ch, int width,
                                std::mt19937_64 &rng)
    : project_(in_ch != width), width_(width) {
  int ch = in_ch;
  for (int i = 0; i < 4; ++i) {
    ad::Conv2dOptions opts;
    opts.dilation_w = kDilations[i];
    layers_.emplace_back(params, prefix + "/dconv" + std::to_string(i), ch,
                         width, 1, kKernel, rng, opts);
    ch = width;
  }
  if (project_) {
    projection_ =
        WnKernel<T>(params, prefix + "/proj", {width, in_ch, 1, 1}, in_ch, rng);
  }
}

template <typename T>
Tensor<T> TemporalBlock<T>::Forward(const Tensor<T> &x) const {
  CheckFeatureMap(x.shape(), "TemporalBlock");
  Tensor<T> h = x;
  for (const auto &layer : layers_) h = layer.Forward(h);
  if (!project_) return ad::Add(h, x);
  const Tensor<T> b = projection_.bias();
  return ad::Add(h, ad::Conv2d(x, projection_.Weight(), &b));
}

template <typename T>
FullyConnected<T>::FullyConnected(ParameterSet<T> &params,
                                  const std::string &prefix, int in_dim,
                                  int out_dim, bool output_layer,
                                  std::mt19937_64 &rng, T leaky_slope)
    : kernel_(params, prefix, {out_dim, in_dim, 1, 1}, in_dim, rng),
      in_dim_(in_dim),
      output_layer_(output_layer),
      slope_(leaky_slope) {}

template <typename T>
Tensor<T> FullyConnected<T>::Forward(const Tensor<T> &x) const {
  CheckFeatureMap(x.shape(), "FullyConnected");
  if (x.dim(1) * x.dim(2) != in_dim_) {
    throw ShapeError("FullyConnected expects " + std::to_string(in_dim_) +
                     " features per frame, got " + ad::ShapeToString(x.shape()));
  }
  const Tensor<T> flat = ad::Reshape(x, {x.dim(0), in_dim_, 1, x.dim(3)});
  const Tensor<T> b = kernel_.bias();
  const Tensor<T> y = ad::Conv2d(flat, kernel_.Weight(), &b);
  return output_layer_ ? y : ad::LeakyRelu(y, slope_);
}

Shape BlockOutputShape(const BlockSpec &spec, const Shape &input) {
  CheckFeatureMap(input, "BlockOutputShape");
  const int B = input[0], c = input[1], d = input[2], N = input[3];
  auto ceil_div = [](int a, int s) { return (a + s - 1) / s; };
  switch (spec.kind) {
    case BlockKind::kDenseBlock:
      return {B, c + spec.num_layers * spec.growth, d, N};
    case BlockKind::kTransitionDown:
      return {B, c, ceil_div(d, spec.stride), N};
    case BlockKind::kTransitionExpand:
      return {B, spec.out_channels, ceil_div(d, spec.stride), N};
    case BlockKind::kTransitionUp:
      return {B, spec.out_channels,
              spec.target_d > 0 ? spec.target_d : d * spec.stride, N};
    case BlockKind::kTransitionFinal:
      return {B, 1, d, N};
    case BlockKind::kTemporalBlock:
      return {B, spec.out_channels, d, N};
    case BlockKind::kFullyConnected:
      return {B, spec.out_channels, 1, N};
  }
  throw ShapeError("unknown block kind");
}

template class WnKernel<float>;
template class WnKernel<double>;
template class GatedConv2d<float>;
template class GatedConv2d<double>;
template class GatedConvTranspose2d<float>;
template class GatedConvTranspose2d<double>;
template class DenseBlock<float>;
template class DenseBlock<double>;
template class TransitionDown<float>;
template class TransitionDown<double>;
template class TransitionUp<float>;
template class TransitionUp<double>;
template class TransitionFinal<float>;
template class TransitionFinal<double>;
template class TemporalBlock<float>;
template class TemporalBlock<double>;
template class FullyConnected<float>;
template class FullyConnected<double>;

}  // namespace nn
}  // namespace phasevae
