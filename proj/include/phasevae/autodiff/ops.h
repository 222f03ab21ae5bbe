// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Differentiable primitives. Feature maps use the layout (B, C, H, W) where
// H is the per-frame vector axis (frequency, d) and W the time-frame axis (N).
//
// Guarded domains: Log clamps its argument to >= kLogFloor and Div clamps the
// denominator magnitude to >= kDivFloor (sign kept); the clamped region has
// zero gradient with respect to the clamped operand. Sqrt clamps at 0.

#ifndef PHASEVAE_AUTODIFF_OPS_H_
#define PHASEVAE_AUTODIFF_OPS_H_

#include <type_traits>
#include <vector>

#include "phasevae/autodiff/tensor.h"

namespace phasevae {
namespace ad {

inline constexpr double kLogFloor = 1e-12;
inline constexpr double kDivFloor = 1e-12;

// Elementwise with numpy-style broadcasting (shapes aligned on the right).
template <typename T> Tensor<T> Add(const Tensor<T> &a, const Tensor<T> &b);
template <typename T> Tensor<T> Sub(const Tensor<T> &a, const Tensor<T> &b);
template <typename T> Tensor<T> Mul(const Tensor<T> &a, const Tensor<T> &b);
template <typename T> Tensor<T> Div(const Tensor<T> &a, const Tensor<T> &b);

template <typename T> Tensor<T> AddScalar(const Tensor<T> &x, T c);
template <typename T> Tensor<T> MulScalar(const Tensor<T> &x, T c);

template <typename T> Tensor<T> Neg(const Tensor<T> &x);
template <typename T> Tensor<T> Exp(const Tensor<T> &x);
template <typename T> Tensor<T> Log(const Tensor<T> &x);
template <typename T> Tensor<T> Cos(const Tensor<T> &x);
template <typename T> Tensor<T> Sin(const Tensor<T> &x);
template <typename T> Tensor<T> Square(const Tensor<T> &x);
template <typename T> Tensor<T> Sqrt(const Tensor<T> &x);
template <typename T> Tensor<T> Sigmoid(const Tensor<T> &x);
template <typename T> Tensor<T> Tanh(const Tensor<T> &x);
template <typename T> Tensor<T> Softplus(const Tensor<T> &x);
template <typename T> Tensor<T> LeakyRelu(const Tensor<T> &x, T slope);
// max(x, lo); gradient passes only where x > lo.
template <typename T> Tensor<T> ClampMin(const Tensor<T> &x, T lo);
// Angle reduction into [-pi, pi); derivative 1 almost everywhere.
template <typename T> Tensor<T> Wrap(const Tensor<T> &x);
// ln I0(kappa); kappa must be >= 0. Backward uses I1/I0.
template <typename T> Tensor<T> LogBesselI0(const Tensor<T> &kappa);
// atan2(y, x) reduced into [-pi, pi). At (0, 0): value 0, zero gradient.
template <typename T> Tensor<T> Atan2(const Tensor<T> &y, const Tensor<T> &x);

// Reductions over the listed axes (negative axes count from the end).
template <typename T>
Tensor<T> Sum(const Tensor<T> &x, std::vector<int> axes, bool keepdims = false);
template <typename T>
Tensor<T> Mean(const Tensor<T> &x, std::vector<int> axes, bool keepdims = false);
template <typename T> Tensor<T> SumAll(const Tensor<T> &x);
template <typename T> Tensor<T> MeanAll(const Tensor<T> &x);

// (M, K) x (K, N) -> (M, N).
template <typename T> Tensor<T> MatMul(const Tensor<T> &a, const Tensor<T> &b);

template <typename T> Tensor<T> Reshape(const Tensor<T> &x, const Shape &shape);
template <typename T>
Tensor<T> Concat(const std::vector<Tensor<T>> &parts, int axis);
template <typename T>
Tensor<T> Slice(const Tensor<T> &x, int axis, int start, int length);

struct Conv2dOptions {
  int stride_h = 1;    // along the vector axis H
  int dilation_w = 1;  // along the time axis W
};

// Cross-correlation of x (B, C, H, W) with w (O, C, kh, kw), odd kh/kw, zero
// "same" padding on both axes. Output (B, O, ceil(H / stride_h), W).
template <typename T>
Tensor<T> Conv2d(const Tensor<T> &x, const Tensor<T> &w, const std::type_identity_t<Tensor<T>> *bias,
                 Conv2dOptions options = {});

// Adjoint of Conv2d with the same geometry: x (B, Cin, H, W), w (Cin, O, kh,
// kw). `out_h` selects one of the stride_h lengths that Conv2d maps to H; it
// must satisfy ceil(out_h / stride_h) == H.
template <typename T>
Tensor<T> ConvTranspose2d(const Tensor<T> &x, const Tensor<T> &w,
                          const std::type_identity_t<Tensor<T>> *bias, int stride_h, int out_h);

// 1-D dilated convolution along time: x (B, C, N), w (O, C, k), odd k.
template <typename T>
Tensor<T> Conv1dDilated(const Tensor<T> &x, const Tensor<T> &w,
                        const std::type_identity_t<Tensor<T>> *bias, int dilation);

// Average pooling with a 1x1 window and stride s along H: keeps every s-th
// row starting at 0, so H becomes ceil(H / s).
template <typename T> Tensor<T> AvgPool1x1(const Tensor<T> &x, int stride_h);

// w = g * v / ||v|| with the norm over all axes but the first (output
// channel). v (O, ...), g (O). Throws NumericalError for a zero-norm row.
template <typename T>
Tensor<T> WeightNorm(const Tensor<T> &direction, const Tensor<T> &scale);

// linear * sigmoid(gate).
template <typename T>
Tensor<T> Gated(const Tensor<T> &linear, const Tensor<T> &gate);

// mu + sigma * epsilon; epsilon is treated as a constant.
template <typename T>
Tensor<T> Reparameterize(const Tensor<T> &mu, const Tensor<T> &sigma,
                         const Tensor<T> &epsilon);

template <typename T>
Tensor<T> operator+(const Tensor<T> &a, const Tensor<T> &b) { return Add(a, b); }
template <typename T>
Tensor<T> operator-(const Tensor<T> &a, const Tensor<T> &b) { return Sub(a, b); }
template <typename T>
Tensor<T> operator*(const Tensor<T> &a, const Tensor<T> &b) { return Mul(a, b); }
template <typename T>
Tensor<T> operator/(const Tensor<T> &a, const Tensor<T> &b) { return Div(a, b); }
template <typename T>
Tensor<T> operator-(const Tensor<T> &x) { return Neg(x); }

}  // namespace ad
}  // namespace phasevae

#endif  // PHASEVAE_AUTODIFF_OPS_H_
