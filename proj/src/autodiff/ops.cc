// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "phasevae/autodiff/ops.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "phasevae/angles.h"
#include "phasevae/autodiff/bessel.h"
#include "phasevae/error.h"

namespace phasevae {
namespace ad {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

std::vector<int64_t> ContiguousStrides(const Shape &shape) {
  std::vector<int64_t> strides(shape.size());
  int64_t s = 1;
  for (int i = static_cast<int>(shape.size()) - 1; i >= 0; --i) {
    strides[i] = s;
    s *= shape[i];
  }
  return strides;
}

// Per-output-axis strides into both operands; 0 on broadcast axes.
struct Broadcast {
  Shape out;
  std::vector<int64_t> sa, sb;
};

Broadcast MakeBroadcast(const Shape &a, const Shape &b) {
  const int r = static_cast<int>(std::max(a.size(), b.size()));
  const int oa = r - static_cast<int>(a.size());
  const int ob = r - static_cast<int>(b.size());
  const auto stra = ContiguousStrides(a);
  const auto strb = ContiguousStrides(b);
  Broadcast bc;
  bc.out.resize(r);
  bc.sa.assign(r, 0);
  bc.sb.assign(r, 0);
  for (int i = 0; i < r; ++i) {
    const int da = i >= oa ? a[i - oa] : 1;
    const int db = i >= ob ? b[i - ob] : 1;
    if (da != db && da != 1 && db != 1) {
      throw ShapeError("cannot broadcast " + ShapeToString(a) + " with " +
                       ShapeToString(b));
    }
    bc.out[i] = da == 1 ? db : da;
    if (i >= oa && !(da == 1 && bc.out[i] != 1)) bc.sa[i] = stra[i - oa];
    if (i >= ob && !(db == 1 && bc.out[i] != 1)) bc.sb[i] = strb[i - ob];
  }
  return bc;
}

// Calls fn(out_index, a_index, b_index) over the broadcast output.
template <typename F>
void ForEachBroadcast(const Broadcast &bc, F &&fn) {
  const int64_t n = NumElements(bc.out);
  if (n == 0) return;
  const int r = static_cast<int>(bc.out.size());
  if (r == 0) {
    fn(int64_t{0}, int64_t{0}, int64_t{0});
    return;
  }
  const int last = r - 1;
  const int64_t len = bc.out[last];
  const int64_t sal = bc.sa[last], sbl = bc.sb[last];
  std::vector<int> idx(r, 0);
  int64_t ia = 0, ib = 0;
  for (int64_t i = 0; i < n; i += len) {
    for (int64_t j = 0; j < len; ++j) fn(i + j, ia + j * sal, ib + j * sbl);
    for (int ax = last - 1; ax >= 0; --ax) {
      ++idx[ax];
      ia += bc.sa[ax];
      ib += bc.sb[ax];
      if (idx[ax] < bc.out[ax]) break;
      ia -= bc.sa[ax] * bc.out[ax];
      ib -= bc.sb[ax] * bc.out[ax];
      idx[ax] = 0;
    }
  }
}

template <typename T, typename F, typename DA, typename DB>
Tensor<T> BinaryOp(const Tensor<T> &a, const Tensor<T> &b, F f, DA da, DB db) {
  if (a.shape() == b.shape()) {
    const auto av = a.data();
    const auto bv = b.data();
    Buffer<T> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i], bv[i]);
    return MakeResult<T>(
        a.shape(), std::move(out), {a.node(), b.node()},
        [da, db](Node<T> &self) {
          Node<T> &A = *self.parents[0];
          Node<T> &B = *self.parents[1];
          const std::size_t n = self.value.size();
          if (A.requires_grad) {
            auto &ga = A.EnsureGrad();
            for (std::size_t i = 0; i < n; ++i) {
              ga[i] += self.grad[i] * da(A.value[i], B.value[i], self.value[i]);
            }
          }
          if (B.requires_grad) {
            auto &gb = B.EnsureGrad();
            for (std::size_t i = 0; i < n; ++i) {
              gb[i] += self.grad[i] * db(A.value[i], B.value[i], self.value[i]);
            }
          }
        });
  }
  Broadcast bc = MakeBroadcast(a.shape(), b.shape());
  Buffer<T> out(NumElements(bc.out));
  const auto av = a.data();
  const auto bv = b.data();
  ForEachBroadcast(bc, [&](int64_t i, int64_t ia, int64_t ib) {
    out[i] = f(av[ia], bv[ib]);
  });
  return MakeResult<T>(
      bc.out, std::move(out), {a.node(), b.node()},
      [bc, da, db](Node<T> &self) {
        Node<T> &A = *self.parents[0];
        Node<T> &B = *self.parents[1];
        if (A.requires_grad) {
          auto &ga = A.EnsureGrad();
          ForEachBroadcast(bc, [&](int64_t i, int64_t ia, int64_t ib) {
            ga[ia] += self.grad[i] * da(A.value[ia], B.value[ib], self.value[i]);
          });
        }
        if (B.requires_grad) {
          auto &gb = B.EnsureGrad();
          ForEachBroadcast(bc, [&](int64_t i, int64_t ia, int64_t ib) {
            gb[ib] += self.grad[i] * db(A.value[ia], B.value[ib], self.value[i]);
          });
        }
      });
}

// d(x, y) returns dy/dx given input x and output y.
template <typename T, typename F, typename D>
Tensor<T> UnaryOp(const Tensor<T> &x, F f, D d) {
  const auto xv = x.data();
  Buffer<T> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(xv[i]);
  return MakeResult<T>(x.shape(), std::move(out), {x.node()},
                       [d](Node<T> &self) {
                         Node<T> &X = *self.parents[0];
                         auto &gx = X.EnsureGrad();
                         for (std::size_t i = 0; i < gx.size(); ++i) {
                           gx[i] += self.grad[i] * d(X.value[i], self.value[i]);
                         }
                       });
}

template <typename T>
T GuardDenominator(T b) {
  if (std::abs(b) >= T(kDivFloor)) return b;
  return std::signbit(b) ? T(-kDivFloor) : T(kDivFloor);
}

template <typename T>
T StableSigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

int NormalizeAxis(int axis, int rank) {
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for rank " +
                     std::to_string(rank));
  }
  return axis;
}

// Geometry of a "same"-padded convolution from (C, H, W) to (O, Ho, W).
struct ConvGeom {
  int C, H, W, kh, kw, sh, dw, ph, pw, Ho;
  int64_t K() const { return int64_t{C} * kh * kw; }
  int64_t P() const { return int64_t{Ho} * W; }
};

ConvGeom MakeGeom(int C, int H, int W, int kh, int kw, int sh, int dw) {
  if (kh % 2 == 0 || kw % 2 == 0) {
    throw ShapeError("convolution kernels must have odd extents");
  }
  if (sh < 1 || dw < 1) throw ShapeError("stride and dilation must be >= 1");
  ConvGeom g{C, H, W, kh, kw, sh, dw, (kh - 1) / 2, dw * (kw - 1) / 2, 0};
  g.Ho = H <= 0 ? 0 : (H - 1) / sh + 1;
  if (g.Ho <= 0 || W <= 0) {
    throw ShapeError("convolution would produce an empty output");
  }
  return g;
}

template <typename T>
void Im2Col(const T *src, const ConvGeom &g, T *cols) {
  const int64_t P = g.P();
  for (int c = 0; c < g.C; ++c) {
    for (int i = 0; i < g.kh; ++i) {
      for (int j = 0; j < g.kw; ++j) {
        T *dst = cols + ((int64_t{c} * g.kh + i) * g.kw + j) * P;
        const int shift = j * g.dw - g.pw;
        const int lo = std::max(0, -shift);
        const int hi = std::min(g.W, g.W - shift);
        for (int oh = 0; oh < g.Ho; ++oh) {
          T *drow = dst + int64_t{oh} * g.W;
          const int ih = oh * g.sh - g.ph + i;
          if (ih < 0 || ih >= g.H || lo >= hi) {
            std::fill(drow, drow + g.W, T(0));
            continue;
          }
          const T *srow = src + (int64_t{c} * g.H + ih) * g.W;
          std::fill(drow, drow + lo, T(0));
          for (int ow = lo; ow < hi; ++ow) drow[ow] = srow[ow + shift];
          std::fill(drow + hi, drow + g.W, T(0));
        }
      }
    }
  }
}

// Adjoint of Im2Col; accumulates into dst.
template <typename T>
void Col2Im(const T *cols, const ConvGeom &g, T *dst) {
  const int64_t P = g.P();
  for (int c = 0; c < g.C; ++c) {
    for (int i = 0; i < g.kh; ++i) {
      for (int j = 0; j < g.kw; ++j) {
        const T *src = cols + ((int64_t{c} * g.kh + i) * g.kw + j) * P;
        const int shift = j * g.dw - g.pw;
        const int lo = std::max(0, -shift);
        const int hi = std::min(g.W, g.W - shift);
        for (int oh = 0; oh < g.Ho; ++oh) {
          const int ih = oh * g.sh - g.ph + i;
          if (ih < 0 || ih >= g.H) continue;
          const T *srow = src + int64_t{oh} * g.W;
          T *drow = dst + (int64_t{c} * g.H + ih) * g.W;
          for (int ow = lo; ow < hi; ++ow) drow[ow + shift] += srow[ow];
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> Add(const Tensor<T> &a, const Tensor<T> &b) {
  return BinaryOp(
      a, b, [](T x, T y) { return x + y; }, [](T, T, T) { return T(1); },
      [](T, T, T) { return T(1); });
}

template <typename T>
Tensor<T> Sub(const Tensor<T> &a, const Tensor<T> &b) {
  return BinaryOp(
      a, b, [](T x, T y) { return x - y; }, [](T, T, T) { return T(1); },
      [](T, T, T) { return T(-1); });
}

template <typename T>
Tensor<T> Mul(const Tensor<T> &a, const Tensor<T> &b) {
  return BinaryOp(
      a, b, [](T x, T y) { return x * y; }, [](T, T y, T) { return y; },
      [](T x, T, T) { return x; });
}

template <typename T>
Tensor<T> Div(const Tensor<T> &a, const Tensor<T> &b) {
  return BinaryOp(
      a, b, [](T x, T y) { return x / GuardDenominator(y); },
      [](T, T y, T) { return T(1) / GuardDenominator(y); },
      [](T x, T y, T) {
        return std::abs(y) >= T(kDivFloor) ? -x / (y * y) : T(0);
      });
}

template <typename T>
Tensor<T> AddScalar(const Tensor<T> &x, T c) {
  return UnaryOp(
      x, [c](T v) { return v + c; }, [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> MulScalar(const Tensor<T> &x, T c) {
  return UnaryOp(
      x, [c](T v) { return v * c; }, [c](T, T) { return c; });
}

template <typename T>
Tensor<T> Neg(const Tensor<T> &x) {
  return UnaryOp(
      x, [](T v) { return -v; }, [](T, T) { return T(-1); });
}

template <typename T>
Tensor<T> Exp(const Tensor<T> &x) {
  return UnaryOp(
      x, [](T v) { return std::exp(v); }, [](T, T y) { return y; });
}

template <typename T>
Tensor<T> Log(const Tensor<T> &x) {
  return UnaryOp(
      x, [](T v) { return std::log(std::max(v, T(kLogFloor))); },
      [](T v, T) { return v > T(kLogFloor) ? T(1) / v : T(0); });
}

template <typename T>
Tensor<T> Cos(const Tensor<T> &x) {
  return UnaryOp(
      x, [](T v) { return std::cos(v); }, [](T v, T) { return -std::sin(v); });
}

template <typename T>
Tensor<T> Sin(const Tensor<T> &x) {
  return UnaryOp(
      x, [](T v) { return std::sin(v); }, [](T v, T) { return std::cos(v); });
}

template <typename T>
Tensor<T> Square(const Tensor<T> &x) {
  return UnaryOp(
      x, [](T v) { return v * v; }, [](T v, T) { return T(2) * v; });
}

template <typename T>
Tensor<T> Sqrt(const Tensor<T> &x) {
  return UnaryOp(
      x, [](T v) { return std::sqrt(std::max(v, T(0))); },
      [](T v, T y) { return v > T(0) ? T(0.5) / y : T(0); });
}

template <typename T>
Tensor<T> Sigmoid(const Tensor<T> &x) {
  return UnaryOp(
      x, [](T v) { return StableSigmoid(v); },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> Tanh(const Tensor<T> &x) {
  return UnaryOp(
      x, [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> Softplus(const Tensor<T> &x) {
  return UnaryOp(
      x,
      [](T v) { return std::max(v, T(0)) + std::log1p(std::exp(-std::abs(v))); },
      [](T v, T) { return StableSigmoid(v); });
}

template <typename T>
Tensor<T> LeakyRelu(const Tensor<T> &x, T slope) {
  return UnaryOp(
      x, [slope](T v) { return v > T(0) ? v : slope * v; },
      [slope](T v, T) { return v > T(0) ? T(1) : slope; });
}

template <typename T>
Tensor<T> ClampMin(const Tensor<T> &x, T lo) {
  return UnaryOp(
      x, [lo](T v) { return std::max(v, lo); },
      [lo](T v, T) { return v > lo ? T(1) : T(0); });
}

template <typename T>
Tensor<T> Wrap(const Tensor<T> &x) {
  return UnaryOp(
      x, [](T v) { return WrapAngle(v); }, [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> LogBesselI0(const Tensor<T> &kappa) {
  for (T v : kappa.data()) {
    if (!(v >= T(0))) {
      throw InvalidArgument("LogBesselI0 requires kappa >= 0, got " +
                            std::to_string(static_cast<double>(v)));
    }
  }
  return UnaryOp(
      kappa,
      [](T v) { return static_cast<T>(ad::LogBesselI0(static_cast<double>(v))); },
      [](T v, T) {
        return static_cast<T>(BesselI1OverI0(static_cast<double>(v)));
      });
}

template <typename T>
Tensor<T> Atan2(const Tensor<T> &y, const Tensor<T> &x) {
  return BinaryOp(
      y, x,
      [](T yv, T xv) {
        if (yv == T(0) && xv == T(0)) return T(0);
        return WrapAngle(std::atan2(yv, xv));
      },
      [](T yv, T xv, T) {
        const T r2 = xv * xv + yv * yv;
        return r2 > T(0) ? xv / r2 : T(0);
      },
      [](T yv, T xv, T) {
        const T r2 = xv * xv + yv * yv;
        return r2 > T(0) ? -yv / r2 : T(0);
      });
}

template <typename T>
Tensor<T> Sum(const Tensor<T> &x, std::vector<int> axes, bool keepdims) {
  const int r = x.rank();
  for (int &a : axes) a = NormalizeAxis(a, r);
  std::sort(axes.begin(), axes.end());
  axes.erase(std::unique(axes.begin(), axes.end()), axes.end());
  Shape keep = x.shape();
  for (int a : axes) keep[a] = 1;
  Shape out_shape;
  if (keepdims) {
    out_shape = keep;
  } else {
    for (int i = 0; i < r; ++i) {
      if (!std::binary_search(axes.begin(), axes.end(), i)) {
        out_shape.push_back(x.shape()[i]);
      }
    }
  }
  Broadcast bc = MakeBroadcast(x.shape(), keep);
  Buffer<T> out(NumElements(keep), T(0));
  const auto xv = x.data();
  ForEachBroadcast(bc, [&](int64_t, int64_t ix, int64_t io) { out[io] += xv[ix]; });
  return MakeResult<T>(out_shape, std::move(out), {x.node()},
                       [bc](Node<T> &self) {
                         auto &gx = self.parents[0]->EnsureGrad();
                         ForEachBroadcast(bc, [&](int64_t, int64_t ix, int64_t io) {
                           gx[ix] += self.grad[io];
                         });
                       });
}

template <typename T>
Tensor<T> Mean(const Tensor<T> &x, std::vector<int> axes, bool keepdims) {
  int64_t count = 1;
  for (int a : axes) count *= x.dim(a);
  if (count == 0) throw ShapeError("mean over an empty axis");
  return MulScalar(Sum(x, axes, keepdims), T(1) / static_cast<T>(count));
}

template <typename T>
Tensor<T> SumAll(const Tensor<T> &x) {
  T acc = T(0);
  for (T v : x.data()) acc += v;
  return MakeResult<T>({}, {acc}, {x.node()}, [](Node<T> &self) {
    auto &gx = self.parents[0]->EnsureGrad();
    const T g = self.grad[0];
    for (T &v : gx) v += g;
  });
}

template <typename T>
Tensor<T> MeanAll(const Tensor<T> &x) {
  if (x.size() == 0) throw ShapeError("mean of an empty tensor");
  return MulScalar(SumAll(x), T(1) / static_cast<T>(x.size()));
}

template <typename T>
Tensor<T> MatMul(const Tensor<T> &a, const Tensor<T> &b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("MatMul shape mismatch " + ShapeToString(a.shape()) +
                     " x " + ShapeToString(b.shape()));
  }
  const int M = a.dim(0), K = a.dim(1), N = b.dim(1);
  Buffer<T> out(int64_t{M} * N);
  MapMat<T>(out.data(), M, N).noalias() =
      ConstMapMat<T>(a.data().data(), M, K) * ConstMapMat<T>(b.data().data(), K, N);
  return MakeResult<T>({M, N}, std::move(out), {a.node(), b.node()},
                       [M, K, N](Node<T> &self) {
                         Node<T> &A = *self.parents[0];
                         Node<T> &B = *self.parents[1];
                         ConstMapMat<T> G(self.grad.data(), M, N);
                         if (A.requires_grad) {
                           MapMat<T>(A.EnsureGrad().data(), M, K).noalias() +=
                               G * ConstMapMat<T>(B.value.data(), K, N).transpose();
                         }
                         if (B.requires_grad) {
                           MapMat<T>(B.EnsureGrad().data(), K, N).noalias() +=
                               ConstMapMat<T>(A.value.data(), M, K).transpose() * G;
                         }
                       });
}

template <typename T>
Tensor<T> Reshape(const Tensor<T> &x, const Shape &shape) {
  if (NumElements(shape) != x.size()) {
    throw ShapeError("cannot reshape " + ShapeToString(x.shape()) + " to " +
                     ShapeToString(shape));
  }
  Buffer<T> out(x.data().begin(), x.data().end());
  return MakeResult<T>(shape, std::move(out), {x.node()}, [](Node<T> &self) {
    auto &gx = self.parents[0]->EnsureGrad();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> Concat(const std::vector<Tensor<T>> &parts, int axis) {
  if (parts.empty()) throw ShapeError("Concat of no tensors");
  const int r = parts[0].rank();
  axis = NormalizeAxis(axis, r);
  Shape out_shape = parts[0].shape();
  out_shape[axis] = 0;
  std::vector<int> widths;
  for (const auto &p : parts) {
    if (p.rank() != r) throw ShapeError("Concat rank mismatch");
    for (int i = 0; i < r; ++i) {
      if (i != axis && p.shape()[i] != parts[0].shape()[i]) {
        throw ShapeError("Concat shape mismatch " + ShapeToString(p.shape()) +
                         " vs " + ShapeToString(parts[0].shape()));
      }
    }
    widths.push_back(p.shape()[axis]);
    out_shape[axis] += p.shape()[axis];
  }
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= out_shape[i];
  for (int i = axis + 1; i < r; ++i) inner *= out_shape[i];
  const int64_t row = int64_t{out_shape[axis]} * inner;
  Buffer<T> out(NumElements(out_shape));
  std::vector<std::shared_ptr<Node<T>>> nodes;
  int64_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const int64_t chunk = int64_t{widths[k]} * inner;
    const T *src = parts[k].data().data();
    for (int64_t o = 0; o < outer; ++o) {
      std::copy(src + o * chunk, src + (o + 1) * chunk,
                out.data() + o * row + offset);
    }
    offset += chunk;
    nodes.push_back(parts[k].node());
  }
  return MakeResult<T>(
      out_shape, std::move(out), std::move(nodes),
      [widths, outer, inner, row](Node<T> &self) {
        int64_t offset = 0;
        for (std::size_t k = 0; k < self.parents.size(); ++k) {
          const int64_t chunk = int64_t{widths[k]} * inner;
          Node<T> &P = *self.parents[k];
          if (P.requires_grad) {
            auto &g = P.EnsureGrad();
            for (int64_t o = 0; o < outer; ++o) {
              const T *src = self.grad.data() + o * row + offset;
              T *dst = g.data() + o * chunk;
              for (int64_t i = 0; i < chunk; ++i) dst[i] += src[i];
            }
          }
          offset += chunk;
        }
      });
}

template <typename T>
Tensor<T> Slice(const Tensor<T> &x, int axis, int start, int length) {
  const int r = x.rank();
  axis = NormalizeAxis(axis, r);
  const int extent = x.shape()[axis];
  if (start < 0 || length < 0 || start + length > extent) {
    throw ShapeError("Slice [" + std::to_string(start) + ", " +
                     std::to_string(start + length) + ") out of range for axis " +
                     std::to_string(axis) + " of " + ShapeToString(x.shape()));
  }
  Shape out_shape = x.shape();
  out_shape[axis] = length;
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= out_shape[i];
  for (int i = axis + 1; i < r; ++i) inner *= out_shape[i];
  const int64_t in_row = int64_t{extent} * inner;
  const int64_t chunk = int64_t{length} * inner;
  const int64_t offset = int64_t{start} * inner;
  Buffer<T> out(NumElements(out_shape));
  const T *src = x.data().data();
  for (int64_t o = 0; o < outer; ++o) {
    std::copy(src + o * in_row + offset, src + o * in_row + offset + chunk,
              out.data() + o * chunk);
  }
  return MakeResult<T>(out_shape, std::move(out), {x.node()},
                       [outer, in_row, chunk, offset](Node<T> &self) {
                         auto &g = self.parents[0]->EnsureGrad();
                         for (int64_t o = 0; o < outer; ++o) {
                           const T *s = self.grad.data() + o * chunk;
                           T *d = g.data() + o * in_row + offset;
                           for (int64_t i = 0; i < chunk; ++i) d[i] += s[i];
                         }
                       });
}

template <typename T>
Tensor<T> Conv2d(const Tensor<T> &x, const Tensor<T> &w, const std::type_identity_t<Tensor<T>> *bias,
                 Conv2dOptions options) {
  if (x.rank() != 4 || w.rank() != 4 || x.dim(1) != w.dim(1)) {
    throw ShapeError("Conv2d expects x (B, C, H, W) and w (O, C, kh, kw), got " +
                     ShapeToString(x.shape()) + " and " +
                     ShapeToString(w.shape()));
  }
  const int B = x.dim(0), O = w.dim(0);
  const ConvGeom g = MakeGeom(x.dim(1), x.dim(2), x.dim(3), w.dim(2), w.dim(3),
                              options.stride_h, options.dilation_w);
  if (bias != nullptr && bias->size() != O) {
    throw ShapeError("Conv2d bias must have one entry per output channel");
  }
  const bool pointwise = g.kh == 1 && g.kw == 1 && g.sh == 1;
  const int64_t K = g.K(), P = g.P();
  const int64_t in_stride = int64_t{g.C} * g.H * g.W;
  const int64_t out_stride = int64_t{O} * P;
  Buffer<T> out(B * out_stride);
  Buffer<T> cols(pointwise ? 0 : K * P);
  ConstMapMat<T> Wm(w.data().data(), O, K);
  for (int b = 0; b < B; ++b) {
    const T *xb = x.data().data() + b * in_stride;
    if (!pointwise) Im2Col(xb, g, cols.data());
    const T *cm = pointwise ? xb : cols.data();
    MapMat<T> Om(out.data() + b * out_stride, O, P);
    Om.noalias() = Wm * ConstMapMat<T>(cm, K, P);
    if (bias != nullptr) {
      for (int o = 0; o < O; ++o) Om.row(o).array() += bias->data()[o];
    }
  }
  std::vector<std::shared_ptr<Node<T>>> parents{x.node(), w.node()};
  if (bias != nullptr) parents.push_back(bias->node());
  return MakeResult<T>(
      {B, O, g.Ho, g.W}, std::move(out), std::move(parents),
      [g, B, O, K, P, in_stride, out_stride, pointwise](Node<T> &self) {
        Node<T> &X = *self.parents[0];
        Node<T> &Wn = *self.parents[1];
        Node<T> *Bn = self.parents.size() > 2 ? self.parents[2].get() : nullptr;
        ConstMapMat<T> Wm(Wn.value.data(), O, K);
        Buffer<T> cols(pointwise ? 0 : K * P);
        Buffer<T> dcols(pointwise ? 0 : K * P);
        for (int b = 0; b < B; ++b) {
          ConstMapMat<T> G(self.grad.data() + b * out_stride, O, P);
          if (Wn.requires_grad) {
            const T *xb = X.value.data() + b * in_stride;
            if (!pointwise) Im2Col(xb, g, cols.data());
            const T *cm = pointwise ? xb : cols.data();
            MapMat<T>(Wn.EnsureGrad().data(), O, K).noalias() +=
                G * ConstMapMat<T>(cm, K, P).transpose();
          }
          if (X.requires_grad) {
            T *gx = X.EnsureGrad().data() + b * in_stride;
            if (pointwise) {
              MapMat<T>(gx, K, P).noalias() += Wm.transpose() * G;
            } else {
              MapMat<T>(dcols.data(), K, P).noalias() = Wm.transpose() * G;
              Col2Im(dcols.data(), g, gx);
            }
          }
          if (Bn != nullptr && Bn->requires_grad) {
            auto &gb = Bn->EnsureGrad();
            for (int o = 0; o < O; ++o) gb[o] += G.row(o).sum();
          }
        }
      });
}

template <typename T>
Tensor<T> ConvTranspose2d(const Tensor<T> &x, const Tensor<T> &w,
                          const std::type_identity_t<Tensor<T>> *bias, int stride_h, int out_h) {
  if (x.rank() != 4 || w.rank() != 4 || x.dim(1) != w.dim(0)) {
    throw ShapeError(
        "ConvTranspose2d expects x (B, Cin, H, W) and w (Cin, O, kh, kw), got " +
        ShapeToString(x.shape()) + " and " + ShapeToString(w.shape()));
  }
  const int B = x.dim(0), Cin = x.dim(1), O = w.dim(1);
  const ConvGeom g =
      MakeGeom(O, out_h, x.dim(3), w.dim(2), w.dim(3), stride_h, 1);
  if (g.Ho != x.dim(2)) {
    throw ShapeError("ConvTranspose2d target length " + std::to_string(out_h) +
                     " is not reachable from length " + std::to_string(x.dim(2)) +
                     " with stride " + std::to_string(stride_h));
  }
  if (bias != nullptr && bias->size() != O) {
    throw ShapeError("ConvTranspose2d bias must have one entry per output channel");
  }
  const int64_t K = g.K(), P = g.P();
  const int64_t in_stride = int64_t{Cin} * P;
  const int64_t out_stride = int64_t{O} * g.H * g.W;
  Buffer<T> out(B * out_stride, T(0));
  Buffer<T> cols(K * P);
  ConstMapMat<T> Wm(w.data().data(), Cin, K);
  for (int b = 0; b < B; ++b) {
    MapMat<T>(cols.data(), K, P).noalias() =
        Wm.transpose() * ConstMapMat<T>(x.data().data() + b * in_stride, Cin, P);
    T *ob = out.data() + b * out_stride;
    Col2Im(cols.data(), g, ob);
    if (bias != nullptr) {
      const int64_t plane = int64_t{g.H} * g.W;
      for (int o = 0; o < O; ++o) {
        const T bv = bias->data()[o];
        for (int64_t i = 0; i < plane; ++i) ob[o * plane + i] += bv;
      }
    }
  }
  std::vector<std::shared_ptr<Node<T>>> parents{x.node(), w.node()};
  if (bias != nullptr) parents.push_back(bias->node());
  return MakeResult<T>(
      {B, O, g.H, g.W}, std::move(out), std::move(parents),
      [g, B, Cin, O, K, P, in_stride, out_stride](Node<T> &self) {
        Node<T> &X = *self.parents[0];
        Node<T> &Wn = *self.parents[1];
        Node<T> *Bn = self.parents.size() > 2 ? self.parents[2].get() : nullptr;
        ConstMapMat<T> Wm(Wn.value.data(), Cin, K);
        Buffer<T> dcols(K * P);
        const int64_t plane = int64_t{g.H} * g.W;
        for (int b = 0; b < B; ++b) {
          const T *gb = self.grad.data() + b * out_stride;
          Im2Col(gb, g, dcols.data());
          ConstMapMat<T> D(dcols.data(), K, P);
          if (X.requires_grad) {
            MapMat<T>(X.EnsureGrad().data() + b * in_stride, Cin, P).noalias() +=
                Wm * D;
          }
          if (Wn.requires_grad) {
            MapMat<T>(Wn.EnsureGrad().data(), Cin, K).noalias() +=
                ConstMapMat<T>(X.value.data() + b * in_stride, Cin, P) *
                D.transpose();
          }
          if (Bn != nullptr && Bn->requires_grad) {
            auto &gbias = Bn->EnsureGrad();
            for (int o = 0; o < O; ++o) {
              T acc = T(0);
              for (int64_t i = 0; i < plane; ++i) acc += gb[o * plane + i];
              gbias[o] += acc;
            }
          }
        }
      });
}

template <typename T>
Tensor<T> Conv1dDilated(const Tensor<T> &x, const Tensor<T> &w,
                        const std::type_identity_t<Tensor<T>> *bias, int dilation) {
  if (x.rank() != 3 || w.rank() != 3) {
    throw ShapeError("Conv1dDilated expects x (B, C, N) and w (O, C, k)");
  }
  const Tensor<T> x4 = Reshape(x, {x.dim(0), x.dim(1), 1, x.dim(2)});
  const Tensor<T> w4 = Reshape(w, {w.dim(0), w.dim(1), 1, w.dim(2)});
  Conv2dOptions opts;
  opts.dilation_w = dilation;
  const Tensor<T> y = Conv2d(x4, w4, bias, opts);
  return Reshape(y, {y.dim(0), y.dim(1), y.dim(3)});
}

template <typename T>
Tensor<T> AvgPool1x1(const Tensor<T> &x, int stride_h) {
  if (x.rank() != 4) throw ShapeError("AvgPool1x1 expects (B, C, H, W)");
  if (stride_h < 1) throw ShapeError("pool stride must be >= 1");
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Ho = H == 0 ? 0 : (H - 1) / stride_h + 1;
  if (Ho == 0 || W == 0) throw ShapeError("pooling would produce an empty output");
  Buffer<T> out(int64_t{B} * C * Ho * W);
  const T *src = x.data().data();
  for (int64_t bc = 0; bc < int64_t{B} * C; ++bc) {
    for (int i = 0; i < Ho; ++i) {
      const T *s = src + (bc * H + int64_t{i} * stride_h) * W;
      std::copy(s, s + W, out.data() + (bc * Ho + i) * W);
    }
  }
  return MakeResult<T>({B, C, Ho, W}, std::move(out), {x.node()},
                       [B, C, H, W, Ho, stride_h](Node<T> &self) {
                         auto &g = self.parents[0]->EnsureGrad();
                         for (int64_t bc = 0; bc < int64_t{B} * C; ++bc) {
                           for (int i = 0; i < Ho; ++i) {
                             const T *s = self.grad.data() + (bc * Ho + i) * W;
                             T *d = g.data() + (bc * H + int64_t{i} * stride_h) * W;
                             for (int j = 0; j < W; ++j) d[j] += s[j];
                           }
                         }
                       });
}

template <typename T>
Tensor<T> WeightNorm(const Tensor<T> &direction, const Tensor<T> &scale) {
  if (direction.rank() < 1) throw ShapeError("WeightNorm direction needs rank >= 1");
  const int O = direction.dim(0);
  if (scale.size() != O) {
    throw ShapeError("WeightNorm scale needs one entry per output channel");
  }
  const int64_t row = direction.size() / std::max(O, 1);
  const T *v = direction.data().data();
  Buffer<T> norms(O);
  for (int o = 0; o < O; ++o) {
    T acc = T(0);
    for (int64_t i = 0; i < row; ++i) acc += v[o * row + i] * v[o * row + i];
    norms[o] = std::sqrt(acc);
    if (!(norms[o] > T(0))) {
      throw NumericalError("WeightNorm direction row " + std::to_string(o) +
                           " has zero norm");
    }
  }
  Buffer<T> out(direction.size());
  for (int o = 0; o < O; ++o) {
    const T f = scale.data()[o] / norms[o];
    for (int64_t i = 0; i < row; ++i) out[o * row + i] = f * v[o * row + i];
  }
  return MakeResult<T>(
      direction.shape(), std::move(out), {direction.node(), scale.node()},
      [O, row, norms](Node<T> &self) {
        Node<T> &V = *self.parents[0];
        Node<T> &G = *self.parents[1];
        for (int o = 0; o < O; ++o) {
          const T *vr = V.value.data() + o * row;
          const T *gr = self.grad.data() + o * row;
          const T n = norms[o];
          T proj = T(0);  // v_hat . dw
          for (int64_t i = 0; i < row; ++i) proj += vr[i] * gr[i];
          proj /= n;
          if (G.requires_grad) G.EnsureGrad()[o] += proj;
          if (V.requires_grad) {
            const T f = G.value[o] / n;
            T *dv = V.EnsureGrad().data() + o * row;
            for (int64_t i = 0; i < row; ++i) {
              dv[i] += f * (gr[i] - proj * vr[i] / n);
            }
          }
        }
      });
}

template <typename T>
Tensor<T> Gated(const Tensor<T> &linear, const Tensor<T> &gate) {
  if (linear.shape() != gate.shape()) {
    throw ShapeError("Gated shape mismatch " + ShapeToString(linear.shape()) +
                     " vs " + ShapeToString(gate.shape()));
  }
  return Mul(linear, Sigmoid(gate));
}

template <typename T>
Tensor<T> Reparameterize(const Tensor<T> &mu, const Tensor<T> &sigma,
                         const Tensor<T> &epsilon) {
  if (mu.shape() != sigma.shape() || mu.shape() != epsilon.shape()) {
    throw ShapeError("Reparameterize needs equal shapes");
  }
  return Add(mu, Mul(sigma, epsilon.Detach()));
}

#define PHASEVAE_INSTANTIATE_OPS(T)                                           \
  template Tensor<T> Add(const Tensor<T> &, const Tensor<T> &);              \
  template Tensor<T> Sub(const Tensor<T> &, const Tensor<T> &);              \
  template Tensor<T> Mul(const Tensor<T> &, const Tensor<T> &);              \
  template Tensor<T> Div(const Tensor<T> &, const Tensor<T> &);              \
  template Tensor<T> AddScalar(const Tensor<T> &, T);                        \
  template Tensor<T> MulScalar(const Tensor<T> &, T);                        \
  template Tensor<T> Neg(const Tensor<T> &);                                 \
  template Tensor<T> Exp(const Tensor<T> &);                                 \
  template Tensor<T> Log(const Tensor<T> &);                                 \
  template Tensor<T> Cos(const Tensor<T> &);                                 \
  template Tensor<T> Sin(const Tensor<T> &);                                 \
  template Tensor<T> Square(const Tensor<T> &);                              \
  template Tensor<T> Sqrt(const Tensor<T> &);                                \
  template Tensor<T> Sigmoid(const Tensor<T> &);                             \
  template Tensor<T> Tanh(const Tensor<T> &);                                \
  template Tensor<T> Softplus(const Tensor<T> &);                            \
  template Tensor<T> LeakyRelu(const Tensor<T> &, T);                        \
  template Tensor<T> ClampMin(const Tensor<T> &, T);                         \
  template Tensor<T> Wrap(const Tensor<T> &);                                \
  template Tensor<T> LogBesselI0(const Tensor<T> &);                         \
  template Tensor<T> Atan2(const Tensor<T> &, const Tensor<T> &);            \
  template Tensor<T> Sum(const Tensor<T> &, std::vector<int>, bool);         \
  template Tensor<T> Mean(const Tensor<T> &, std::vector<int>, bool);        \
  template Tensor<T> SumAll(const Tensor<T> &);                              \
  template Tensor<T> MeanAll(const Tensor<T> &);                             \
  template Tensor<T> MatMul(const Tensor<T> &, const Tensor<T> &);           \
  template Tensor<T> Reshape(const Tensor<T> &, const Shape &);              \
  template Tensor<T> Concat(const std::vector<Tensor<T>> &, int);            \
  template Tensor<T> Slice(const Tensor<T> &, int, int, int);                \
  template Tensor<T> Conv2d(const Tensor<T> &, const Tensor<T> &,            \
                            const Tensor<T> *, Conv2dOptions);               \
  template Tensor<T> ConvTranspose2d(const Tensor<T> &, const Tensor<T> &,   \
                                     const Tensor<T> *, int, int);           \
  template Tensor<T> Conv1dDilated(const Tensor<T> &, const Tensor<T> &,     \
                                   const Tensor<T> *, int);                  \
  template Tensor<T> AvgPool1x1(const Tensor<T> &, int);                     \
  template Tensor<T> WeightNorm(const Tensor<T> &, const Tensor<T> &);       \
  template Tensor<T> Gated(const Tensor<T> &, const Tensor<T> &);            \
  template Tensor<T> Reparameterize(const Tensor<T> &, const Tensor<T> &,    \
                                    const Tensor<T> &);

PHASEVAE_INSTANTIATE_OPS(float)
PHASEVAE_INSTANTIATE_OPS(double)

#undef PHASEVAE_INSTANTIATE_OPS

}  // namespace ad
}  // namespace phasevae
