// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "phasevae/fft.h"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

#include "phasevae/error.h"

namespace phasevae {
namespace dsp {
namespace {

struct PlanPair {
  fftw_plan forward;
  fftw_plan inverse;
};

// The FFTW planner is not thread safe; execution with the new-array interface
// is. Plans live for the whole process.
PlanPair GetPlans(int size) {
  static std::mutex mu;
  static std::map<int, PlanPair> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(size);
  if (it != cache.end()) return it->second;
  std::vector<double> real(size);
  std::vector<fftw_complex> spec(size / 2 + 1);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PlanPair plans;
  plans.forward =
      fftw_plan_dft_r2c_1d(size, real.data(), spec.data(), flags);
  plans.inverse =
      fftw_plan_dft_c2r_1d(size, spec.data(), real.data(), flags);
  if (plans.forward == nullptr || plans.inverse == nullptr) {
    throw ConfigError("FFTW could not plan a transform of size " +
                      std::to_string(size));
  }
  cache.emplace(size, plans);
  return plans;
}

}  // namespace

RealFft::RealFft(int size) : size_(size) {
  if (size < 2 || size % 2 != 0) {
    throw InvalidArgument("DFT size must be even and >= 2, got " +
                          std::to_string(size));
  }
  PlanPair plans = GetPlans(size);
  forward_plan_ = plans.forward;
  inverse_plan_ = plans.inverse;
}

void RealFft::Forward(std::span<const double> in,
                      std::span<std::complex<double>> out) const {
  if (static_cast<int>(in.size()) != size_ ||
      static_cast<int>(out.size()) != num_bins()) {
    throw ShapeError("RealFft::Forward buffer size mismatch");
  }
  // r2c does not modify its input.
  fftw_execute_dft_r2c(static_cast<fftw_plan>(const_cast<void *>(forward_plan_)),
                       const_cast<double *>(in.data()),
                       reinterpret_cast<fftw_complex *>(out.data()));
}

void RealFft::Inverse(std::span<const std::complex<double>> in,
                      std::span<double> out) const {
  if (static_cast<int>(in.size()) != num_bins() ||
      static_cast<int>(out.size()) != size_) {
    throw ShapeError("RealFft::Inverse buffer size mismatch");
  }
  // c2r overwrites its input.
  std::vector<std::complex<double>> scratch(in.begin(), in.end());
  scratch.front().imag(0.0);
  scratch.back().imag(0.0);
  fftw_execute_dft_c2r(static_cast<fftw_plan>(const_cast<void *>(inverse_plan_)),
                       reinterpret_cast<fftw_complex *>(scratch.data()),
                       out.data());
  const double scale = 1.0 / size_;
  for (double &v : out) v *= scale;
}

}  // namespace dsp
}  // namespace phasevae
