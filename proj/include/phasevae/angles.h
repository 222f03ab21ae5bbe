// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef PHASEVAE_ANGLES_H_
#define PHASEVAE_ANGLES_H_

#include <cmath>
#include <numbers>

namespace phasevae {

template <typename T>
inline constexpr T kPi = std::numbers::pi_v<T>;

template <typename T>
inline constexpr T kTwoPi = T(2) * std::numbers::pi_v<T>;

// Reduces an angle into [-pi, pi). +pi maps to -pi. The caller guarantees a
// finite argument; see dsp::Wrap for the checked entry point.
template <typename T>
inline T WrapAngle(T x) {
  T r = x - kTwoPi<T> * std::floor((x + kPi<T>) / kTwoPi<T>);
  // floor() on a rounded quotient can leave r one ulp outside the interval.
  if (r >= kPi<T>) r -= kTwoPi<T>;
  if (r < -kPi<T>) r = -kPi<T>;
  return r;
}

}  // namespace phasevae

#endif  // PHASEVAE_ANGLES_H_
