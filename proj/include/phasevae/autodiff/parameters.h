// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef PHASEVAE_AUTODIFF_PARAMETERS_H_
#define PHASEVAE_AUTODIFF_PARAMETERS_H_

#include <map>
#include <string>
#include <vector>

#include "phasevae/autodiff/archive.h"
#include "phasevae/autodiff/tensor.h"

namespace phasevae {
namespace ad {

// A named trainable leaf. Its gradient lives on the tensor node, so it always
// has the value's shape.
template <typename T>
struct Parameter {
  std::string name;  // hierarchical, e.g. "encoder/db0/conv1/v"
  Tensor<T> value;

  std::span<const T> gradient() const { return value.grad(); }
};

// Ordered collection with unique names. Order of insertion is the order used
// by serialization and by the optimizer.
template <typename T>
class ParameterSet {
 public:
  // Registers a new parameter; throws InvalidArgument on duplicate names.
  Tensor<T> Add(const std::string &name, const Shape &shape,
                std::vector<T> init);

  bool Contains(const std::string &name) const;
  const Tensor<T> &Get(const std::string &name) const;
  Tensor<T> &Get(const std::string &name);

  std::vector<Parameter<T>> &params() { return params_; }
  const std::vector<Parameter<T>> &params() const { return params_; }
  std::size_t size() const { return params_.size(); }

  // Parameters whose name starts with `prefix`.
  std::vector<Parameter<T> *> WithPrefix(const std::string &prefix);
  int64_t NumScalars(const std::string &prefix = "") const;

  void ZeroGrad();

  // Values as float32 records, in order.
  std::vector<ArchiveTensor> ToArchive() const;
  // Strict load: every parameter must be present with its exact shape.
  void LoadFrom(const std::vector<ArchiveTensor> &tensors);

 private:
  std::vector<Parameter<T>> params_;
  std::map<std::string, std::size_t> index_;
};

extern template class ParameterSet<float>;
extern template class ParameterSet<double>;

}  // namespace ad
}  // namespace phasevae

#endif  // PHASEVAE_AUTODIFF_PARAMETERS_H_
