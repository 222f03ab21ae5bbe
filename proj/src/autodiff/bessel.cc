// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "phasevae/autodiff/bessel.h"

#include <cmath>
#include <string>

#include "phasevae/angles.h"
#include "phasevae/error.h"

namespace phasevae {
namespace ad {
namespace {

constexpr double kSeriesTol = 1e-17;

void CheckKappa(double kappa) {
  if (!(kappa >= 0.0)) {
    throw InvalidArgument("Bessel I0 argument must be >= 0, got " +
                          std::to_string(kappa));
  }
}

// Returns (sum_{m>=1} q^m/(m!)^2, sum_{m>=0} q^m/(m!(m+1)!)), q = k^2/4.
std::pair<double, double> SeriesSums(double kappa) {
  const double q = 0.25 * kappa * kappa;
  double t0 = 1.0, rest0 = 0.0;
  double t1 = 1.0, s1 = 1.0;
  for (int m = 1; m < 500; ++m) {
    t0 *= q / (static_cast<double>(m) * m);
    t1 *= q / (static_cast<double>(m) * (m + 1));
    rest0 += t0;
    s1 += t1;
    if (t0 < kSeriesTol * (1.0 + rest0) && t1 < kSeriesTol * s1) break;
  }
  return {rest0, s1};
}

// Hankel sums for I0 and I1 (without the e^k / sqrt(2 pi k) prefactor),
// truncated before the terms start to grow.
std::pair<double, double> AsymptoticSums(double kappa) {
  double c = 1.0, sum0 = 1.0;
  double d = 1.0, sum1 = 1.0;
  const double eight_k = 8.0 * kappa;
  for (int j = 1; j < 400; ++j) {
    const double odd_sq = static_cast<double>(2 * j - 1) * (2 * j - 1);
    const double next_c = c * odd_sq / (eight_k * j);
    const double next_d = d * (odd_sq - 4.0) / (eight_k * j);
    if (std::abs(next_c) >= std::abs(c) && j > 1) break;
    c = next_c;
    d = next_d;
    sum0 += c;
    sum1 += d;
    if (std::abs(c) < kSeriesTol * sum0 && std::abs(d) < kSeriesTol * std::abs(sum1)) {
      break;
    }
  }
  return {sum0, sum1};
}

}  // namespace

double LogBesselI0Series(double kappa) {
  CheckKappa(kappa);
  return std::log1p(SeriesSums(kappa).first);
}

double LogBesselI0Asymptotic(double kappa) {
  CheckKappa(kappa);
  if (kappa == 0.0) throw InvalidArgument("asymptotic branch needs kappa > 0");
  const double sum0 = AsymptoticSums(kappa).first;
  return kappa - 0.5 * std::log(kTwoPi<double> * kappa) + std::log(sum0);
}

double LogBesselI0(double kappa) {
  CheckKappa(kappa);
  if (kappa < kBesselAsymptoticThreshold) return LogBesselI0Series(kappa);
  return LogBesselI0Asymptotic(kappa);
}

double BesselI1OverI0(double kappa) {
  CheckKappa(kappa);
  if (kappa < kBesselAsymptoticThreshold) {
    const auto [rest0, s1] = SeriesSums(kappa);
    return 0.5 * kappa * s1 / (1.0 + rest0);
  }
  const auto [sum0, sum1] = AsymptoticSums(kappa);
  return sum1 / sum0;
}

}  // namespace ad
}  // namespace phasevae
