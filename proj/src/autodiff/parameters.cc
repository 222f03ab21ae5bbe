// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "phasevae/autodiff/parameters.h"

#include "phasevae/error.h"

namespace phasevae {
namespace ad {

template <typename T>
Tensor<T> ParameterSet<T>::Add(const std::string &name, const Shape &shape,
                               std::vector<T> init) {
  if (index_.count(name)) {
    throw InvalidArgument("duplicate parameter name " + name);
  }
  Tensor<T> t = Tensor<T>::FromData(shape, std::move(init), true);
  index_[name] = params_.size();
  params_.push_back({name, t});
  return t;
}

template <typename T>
bool ParameterSet<T>::Contains(const std::string &name) const {
  return index_.count(name) > 0;
}

template <typename T>
const Tensor<T> &ParameterSet<T>::Get(const std::string &name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw InvalidArgument("unknown parameter " + name);
  return params_[it->second].value;
}

template <typename T>
Tensor<T> &ParameterSet<T>::Get(const std::string &name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw InvalidArgument("unknown parameter " + name);
  return params_[it->second].value;
}

template <typename T>
std::vector<Parameter<T> *> ParameterSet<T>::WithPrefix(
    const std::string &prefix) {
  std::vector<Parameter<T> *> out;
  for (auto &p : params_) {
    if (p.name.compare(0, prefix.size(), prefix) == 0) out.push_back(&p);
  }
  return out;
}

template <typename T>
int64_t ParameterSet<T>::NumScalars(const std::string &prefix) const {
  int64_t n = 0;
  for (const auto &p : params_) {
    if (p.name.compare(0, prefix.size(), prefix) == 0) n += p.value.size();
  }
  return n;
}

template <typename T>
void ParameterSet<T>::ZeroGrad() {
  for (auto &p : params_) p.value.ZeroGrad();
}

template <typename T>
std::vector<ArchiveTensor> ParameterSet<T>::ToArchive() const {
  std::vector<ArchiveTensor> out;
  out.reserve(params_.size());
  for (const auto &p : params_) {
    ArchiveTensor t;
    t.name = p.name;
    t.shape = p.value.shape();
    t.values.assign(p.value.data().begin(), p.value.data().end());
    out.push_back(std::move(t));
  }
  return out;
}

template <typename T>
void ParameterSet<T>::LoadFrom(const std::vector<ArchiveTensor> &tensors) {
  std::map<std::string, const ArchiveTensor *> by_name;
  for (const auto &t : tensors) by_name[t.name] = &t;
  for (auto &p : params_) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) {
      throw DataError("parameter " + p.name + " missing from archive");
    }
    if (it->second->shape != p.value.shape()) {
      throw DataError("parameter " + p.name + " has shape " +
                      ShapeToString(it->second->shape) + " in archive, expected " +
                      ShapeToString(p.value.shape()));
    }
    auto dst = p.value.mutable_data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i] = static_cast<T>(it->second->values[i]);
    }
  }
}

template class ParameterSet<float>;
template class ParameterSet<double>;

}  // namespace ad
}  // namespace phasevae
