// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "phasevae/autodiff/tensor.h"

#include <sstream>
#include <unordered_set>

#include "phasevae/error.h"

namespace phasevae {
namespace ad {
namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

int64_t NumElements(const Shape &shape) {
  int64_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ShapeError("negative dimension in " + ShapeToString(shape));
    n *= d;
  }
  return n;
}

std::string ShapeToString(const Shape &shape) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

bool GradEnabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) {
  g_grad_enabled = false;
}
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <typename T>
Tensor<T>::Tensor() : node_(std::make_shared<Node<T>>()) {}

template <typename T>
Tensor<T> Tensor<T>::Zeros(const Shape &shape, bool requires_grad) {
  return Full(shape, T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::Full(const Shape &shape, T fill, bool requires_grad) {
  auto node = std::make_shared<Node<T>>();
  node->shape = shape;
  node->value.assign(NumElements(shape), fill);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::FromData(const Shape &shape, const std::vector<T> &data,
                              bool requires_grad) {
  return FromBuffer(shape, Buffer<T>(data.begin(), data.end()), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::FromBuffer(const Shape &shape, Buffer<T> data, bool requires_grad) {
  if (NumElements(shape) != static_cast<int64_t>(data.size())) {
    throw ShapeError("data length " + std::to_string(data.size()) +
                     " does not match shape " + ShapeToString(shape));
  }
  auto node = std::make_shared<Node<T>>();
  node->shape = shape;
  node->value = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::Scalar(T value, bool requires_grad) {
  return FromData({}, {value}, requires_grad);
}

template <typename T>
int Tensor<T>::dim(int axis) const {
  const int r = rank();
  if (axis < 0) axis += r;
  if (axis < 0 || axis >= r) {
    throw ShapeError("axis out of range for shape " + ShapeToString(shape()));
  }
  return node_->shape[axis];
}

template <typename T>
T Tensor<T>::item() const {
  if (size() != 1) {
    throw ShapeError("item() on tensor of shape " + ShapeToString(shape()));
  }
  return node_->value[0];
}

template <typename T>
T Tensor<T>::at(std::initializer_list<int> index) const {
  if (static_cast<int>(index.size()) != rank()) {
    throw ShapeError("index rank mismatch for shape " + ShapeToString(shape()));
  }
  int64_t flat = 0;
  int axis = 0;
  for (int i : index) {
    if (i < 0 || i >= node_->shape[axis]) throw ShapeError("index out of range");
    flat = flat * node_->shape[axis] + i;
    ++axis;
  }
  return node_->value[flat];
}

template <typename T>
void Tensor<T>::Backward() {
  if (size() != 1) {
    throw ShapeError("Backward() without a seed needs a scalar root, got " +
                     ShapeToString(shape()));
  }
  const T one = T(1);
  Backward(std::span<const T>(&one, 1));
}

template <typename T>
void Tensor<T>::Backward(std::span<const T> seed) {
  if (static_cast<int64_t>(seed.size()) != size()) {
    throw ShapeError("backward seed size mismatch");
  }
  if (!node_->requires_grad) return;

  // Post-order DFS gives a topological order; reversing it yields the tape.
  std::vector<Node<T> *> order;
  std::unordered_set<Node<T> *> visited;
  std::vector<std::pair<Node<T> *, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto &[node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T> *parent = node->parents[next++].get();
      if (parent->requires_grad && !visited.count(parent)) {
        visited.insert(parent);
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (Node<T> *node : order) {
    if (!node->is_leaf) node->grad.assign(node->value.size(), T(0));
  }
  Buffer<T> &root_grad = node_->EnsureGrad();
  for (std::size_t i = 0; i < seed.size(); ++i) root_grad[i] += seed[i];
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T> *node = *it;
    if (!node->is_leaf && node->backward) node->backward(*node);
  }
}

template <typename T>
void Tensor<T>::ZeroGrad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::Detach() const {
  return FromBuffer(shape(), node_->value, false);
}

template <typename T>
Tensor<T> MakeResult(Shape shape, Buffer<T> value,
                     std::vector<std::shared_ptr<Node<T>>> parents,
                     std::function<void(Node<T> &)> backward) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool needs = false;
  if (GradEnabled()) {
    for (const auto &p : parents) needs = needs || p->requires_grad;
  }
  if (needs) {
    node->requires_grad = true;
    node->is_leaf = false;
    node->parents = std::move(parents);
    node->backward = std::move(backward);
  }
  return Tensor<T>(std::move(node));
}

template class Tensor<float>;
template class Tensor<double>;
template Tensor<float> MakeResult(Shape, Buffer<float>,
                                  std::vector<std::shared_ptr<Node<float>>>,
                                  std::function<void(Node<float> &)>);
template Tensor<double> MakeResult(Shape, Buffer<double>,
                                   std::vector<std::shared_ptr<Node<double>>>,
                                   std::function<void(Node<double> &)>);

}  // namespace ad
}  // namespace phasevae
