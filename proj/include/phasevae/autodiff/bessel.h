// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Logarithm of the modified Bessel function I0 and the ratio I1/I0, the two
// quantities the von Mises normalizer and its derivative need.
//
// Below kBesselAsymptoticThreshold both are summed from the power series
//   I0(k) = sum_m (k^2/4)^m / (m!)^2,  I1(k) = (k/2) sum_m (k^2/4)^m / (m! (m+1)!)
// which has only positive terms. Above it the Hankel expansion
//   I_v(k) ~ e^k / sqrt(2 pi k) * sum_j (-1)^j a_j(v) / k^j
// is used in log form, so values stay finite for very large k.

#ifndef PHASEVAE_AUTODIFF_BESSEL_H_
#define PHASEVAE_AUTODIFF_BESSEL_H_

namespace phasevae {
namespace ad {

inline constexpr double kBesselAsymptoticThreshold = 15.0;

// ln I0(kappa), kappa >= 0. Throws InvalidArgument for negative or NaN input.
double LogBesselI0(double kappa);

// I1(kappa) / I0(kappa) = d/dkappa ln I0(kappa), in [0, 1).
double BesselI1OverI0(double kappa);

// The two branches, exposed for the cross-check tests.
double LogBesselI0Series(double kappa);
double LogBesselI0Asymptotic(double kappa);

}  // namespace ad
}  // namespace phasevae

#endif  // PHASEVAE_AUTODIFF_BESSEL_H_
