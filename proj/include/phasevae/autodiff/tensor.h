// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Dense tensors with a dynamic reverse-mode gradient tape.
//
// Every op that consumes a tensor requiring gradients records a node holding
// its inputs and a backward closure. Tensor::Backward() linearizes the nodes
// reachable from the root into a tape (reverse topological order) and runs
// each closure exactly once. Leaf gradients accumulate across calls until
// ZeroGrad(); intermediate gradients are reset on every call.
//
// T is float (network default) or double (gradient checks).

#ifndef PHASEVAE_AUTODIFF_TENSOR_H_
#define PHASEVAE_AUTODIFF_TENSOR_H_

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace phasevae {
namespace ad {

using Shape = std::vector<int>;

// Storage aligned to Eigen's widest packet. Vectorized reductions peel an
// unaligned head, so their summation order (and hence the rounding of every
// result) would otherwise depend on where the allocator placed the buffer.
template <typename T>
using Buffer = std::vector<T, Eigen::aligned_allocator<T>>;

int64_t NumElements(const Shape &shape);
std::string ShapeToString(const Shape &shape);

// Graph recording is on by default; a NoGradGuard disables it for the current
// thread (evaluation passes).
bool GradEnabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard &) = delete;
  NoGradGuard &operator=(const NoGradGuard &) = delete;

 private:
  bool previous_;
};

template <typename T>
struct Node {
  Shape shape;
  Buffer<T> value;
  Buffer<T> grad;  // empty until first needed
  bool requires_grad = false;
  bool is_leaf = true;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad and accumulates into the parents' grads.
  std::function<void(Node &)> backward;

  Buffer<T> &EnsureGrad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    return grad;
  }
};

template <typename T>
class Tensor {
 public:
  using NodePtr = std::shared_ptr<Node<T>>;

  Tensor();
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor Zeros(const Shape &shape, bool requires_grad = false);
  static Tensor Full(const Shape &shape, T fill, bool requires_grad = false);
  static Tensor FromData(const Shape &shape, const std::vector<T> &data,
                         bool requires_grad = false);
  static Tensor FromBuffer(const Shape &shape, Buffer<T> data, bool requires_grad = false);
  static Tensor Scalar(T value, bool requires_grad = false);

  const Shape &shape() const { return node_->shape; }
  int dim(int axis) const;
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int64_t size() const { return static_cast<int64_t>(node_->value.size()); }

  std::span<const T> data() const { return node_->value; }
  // Direct mutation is for leaves (parameters, optimizer updates) only.
  std::span<T> mutable_data() { return node_->value; }
  // Empty span when no gradient has been accumulated.
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->EnsureGrad(); }

  T item() const;
  T at(std::initializer_list<int> index) const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool flag) { node_->requires_grad = flag; }
  bool is_leaf() const { return node_->is_leaf; }

  // Seeds d(root)/d(root) = 1; the root must hold a single element.
  void Backward();
  // Seeds with an explicit upstream gradient of the root's shape.
  void Backward(std::span<const T> seed);
  void ZeroGrad();

  // Same values, no history.
  Tensor Detach() const;

  const NodePtr &node() const { return node_; }

 private:
  NodePtr node_;
};

// Creates a result node. When grad recording is enabled and any input
// requires gradients, the node is linked to its inputs and `backward` kept.
template <typename T>
Tensor<T> MakeResult(Shape shape, Buffer<T> value,
                     std::vector<std::shared_ptr<Node<T>>> parents,
                     std::function<void(Node<T> &)> backward);

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace ad
}  // namespace phasevae

#endif  // PHASEVAE_AUTODIFF_TENSOR_H_
