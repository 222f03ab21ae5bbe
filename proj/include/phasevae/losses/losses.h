// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Loss terms of the joint magnitude/phase VAE and the eight composite
// training objectives.
//
// All inputs are batched (B, R, C) tensors: R rows (latent dims or frequency
// bins) by C columns (frames). Every term sums over rows and columns and
// divides by the number of columns times B, i.e. it is a per-frame average:
//
//   reg = 1/(2BN) sum (mu^2 + sigma^2 - ln sigma^2 - 1)
//   mag = 1/(2BN) sum (ln 2 pi s^2 + (a - a_hat)^2 / s^2),  s = max(sigma, 1e-6)
//   var = 1/(BN)  sum sigma^2
//   vm  = 1/(BC)  sum (ln 2 pi I0(kappa) - kappa cos(psi - psi_hat))
//
// The group-delay loss applies vm to wrap(psi[f] - psi[f+1]) over (F-1) x N
// with kappa[f]; the instantaneous-frequency loss applies it to
// wrap(psi[n+1] - psi[n]) over F x (N-1) with kappa[n].

#ifndef PHASEVAE_LOSSES_LOSSES_H_
#define PHASEVAE_LOSSES_LOSSES_H_

#include <array>
#include <optional>
#include <string>

#include "phasevae/autodiff/ops.h"
#include "phasevae/model/vae.h"

namespace phasevae {
namespace losses {

using ad::Tensor;

inline constexpr double kSigmaFloor = 1e-6;

template <typename T>
Tensor<T> KlRegularizer(const Tensor<T> &mu, const Tensor<T> &sigma);
template <typename T>
Tensor<T> MagnitudeNll(const Tensor<T> &a, const Tensor<T> &a_hat,
                       const Tensor<T> &sigma);
template <typename T>
Tensor<T> VarianceReg(const Tensor<T> &sigma);
template <typename T>
Tensor<T> VonMisesNll(const Tensor<T> &psi, const Tensor<T> &psi_hat,
                      const Tensor<T> &kappa);
template <typename T>
Tensor<T> GroupDelayLoss(const Tensor<T> &psi, const Tensor<T> &psi_hat,
                         const Tensor<T> &kappa);
template <typename T>
Tensor<T> InstFrequencyLoss(const Tensor<T> &psi, const Tensor<T> &psi_hat,
                            const Tensor<T> &kappa);

enum class SchemeId { kM, kJ1, kJ2, kJ3, kJ4, kJ5, kJ6, kJ7 };

struct LossScheme {
  SchemeId id = SchemeId::kM;
  double w_pha = 0, w_grd = 0, w_ifr = 0;

  std::string name() const;
  bool is_joint() const { return id != SchemeId::kM; }

  static LossScheme Get(SchemeId id);
  // Accepts "M", "J1" .. "J7" (case-insensitive); throws ConfigError.
  static LossScheme FromName(const std::string &name);
  static std::array<LossScheme, 8> All();
};

struct LossReport {
  double reg = 0, mag = 0, var = 0;
  // Absent when the phase decoder was not evaluated.
  std::optional<double> pha, grd, ifr;
  double total = 0;

  // One JSON object; absent phase terms are written as null.
  std::string ToJson() const;
};

template <typename T>
struct LossResult {
  Tensor<T> total;  // differentiable
  LossReport report;
};

// Total = reg + mag + var + w_pha pha + w_grd grd + w_ifr ifr, with
// kappa = a_hat + 1. When `with_phase` is false the phase terms are neither
// computed nor reported; this requires scheme M.
template <typename T>
LossResult<T> Composite(const LossScheme &scheme, const Tensor<T> &mag,
                        const Tensor<T> &phase, const model::Reconstruction<T> &r,
                        bool with_phase = true);

}  // namespace losses
}  // namespace phasevae

#endif  // PHASEVAE_LOSSES_LOSSES_H_
