// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "phasevae/losses/losses.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <json.hpp>

#include "phasevae/angles.h"
#include "phasevae/error.h"

namespace phasevae {
namespace losses {
namespace {

template <typename T>
void CheckSameShape(const Tensor<T> &a, const Tensor<T> &b, const char *what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + ad::ShapeToString(a.shape()) +
                     " vs " + ad::ShapeToString(b.shape()));
  }
  if (a.rank() != 3) {
    throw ShapeError(std::string(what) + " expects (B, R, C) tensors, got " +
                     ad::ShapeToString(a.shape()));
  }
}

template <typename T>
T FrameCount(const Tensor<T> &t) {
  return static_cast<T>(t.dim(0)) * static_cast<T>(t.dim(2));
}

template <typename T>
void RequireAtLeast(const Tensor<T> &t, T lo, bool strict, const char *what) {
  for (T v : t.data()) {
    if (strict ? !(v > lo) : !(v >= lo)) {
      throw InvalidArgument(std::string(what) + " out of domain: " + std::to_string(v));
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> KlRegularizer(const Tensor<T> &mu, const Tensor<T> &sigma) {
  CheckSameShape(mu, sigma, "KlRegularizer");
  RequireAtLeast(sigma, T(0), true, "posterior sigma");
  const Tensor<T> terms = ad::AddScalar(
      ad::Sub(ad::Add(ad::Square(mu), ad::Square(sigma)), ad::MulScalar(ad::Log(sigma), T(2))),
      T(-1));
  return ad::MulScalar(ad::SumAll(terms), T(0.5) / FrameCount(mu));
}

template <typename T>
Tensor<T> MagnitudeNll(const Tensor<T> &a, const Tensor<T> &a_hat, const Tensor<T> &sigma) {
  CheckSameShape(a, a_hat, "MagnitudeNll");
  CheckSameShape(a, sigma, "MagnitudeNll");
  const Tensor<T> s2 = ad::Square(ad::ClampMin(sigma, static_cast<T>(kSigmaFloor)));
  const Tensor<T> terms =
      ad::Add(ad::Log(ad::MulScalar(s2, static_cast<T>(kTwoPi<double>))),
              ad::Div(ad::Square(ad::Sub(a, a_hat)), s2));
  return ad::MulScalar(ad::SumAll(terms), T(0.5) / FrameCount(a));
}

template <typename T>
Tensor<T> VarianceReg(const Tensor<T> &sigma) {
  if (sigma.rank() != 3) throw ShapeError("VarianceReg expects a (B, F, N) tensor");
  return ad::MulScalar(ad::SumAll(ad::Square(sigma)), T(1) / FrameCount(sigma));
}

template <typename T>
Tensor<T> VonMisesNll(const Tensor<T> &psi, const Tensor<T> &psi_hat, const Tensor<T> &kappa) {
  CheckSameShape(psi, psi_hat, "VonMisesNll");
  CheckSameShape(psi, kappa, "VonMisesNll");
  RequireAtLeast(kappa, T(0), false, "concentration");
  const Tensor<T> terms = ad::Sub(ad::AddScalar(ad::LogBesselI0(kappa),
                                                static_cast<T>(std::log(kTwoPi<double>))),
                                  ad::Mul(kappa, ad::Cos(ad::Sub(psi, psi_hat))));
  return ad::MulScalar(ad::SumAll(terms), T(1) / FrameCount(psi));
}

template <typename T>
Tensor<T> GroupDelayLoss(const Tensor<T> &psi, const Tensor<T> &psi_hat,
                         const Tensor<T> &kappa) {
  CheckSameShape(psi, psi_hat, "GroupDelayLoss");
  CheckSameShape(psi, kappa, "GroupDelayLoss");
  const int f = psi.dim(1);
  if (f < 2) throw InvalidArgument("group delay needs at least 2 frequency bins");
  auto grd = [f](const Tensor<T> &p) {
    return ad::Wrap(ad::Sub(ad::Slice(p, 1, 0, f - 1), ad::Slice(p, 1, 1, f - 1)));
  };
  return VonMisesNll(grd(psi), grd(psi_hat), ad::Slice(kappa, 1, 0, f - 1));
}

template <typename T>
Tensor<T> InstFrequencyLoss(const Tensor<T> &psi, const Tensor<T> &psi_hat,
                            const Tensor<T> &kappa) {
  CheckSameShape(psi, psi_hat, "InstFrequencyLoss");
  CheckSameShape(psi, kappa, "InstFrequencyLoss");
  const int n = psi.dim(2);
  if (n < 2) throw InvalidArgument("instantaneous frequency needs at least 2 frames");
  auto ifr = [n](const Tensor<T> &p) {
    return ad::Wrap(ad::Sub(ad::Slice(p, 2, 1, n - 1), ad::Slice(p, 2, 0, n - 1)));
  };
  return VonMisesNll(ifr(psi), ifr(psi_hat), ad::Slice(kappa, 2, 0, n - 1));
}

std::string LossScheme::name() const {
  static const char *kNames[] = {"M", "J1", "J2", "J3", "J4", "J5", "J6", "J7"};
  return kNames[static_cast<int>(id)];
}

LossScheme LossScheme::Get(SchemeId id) {
  switch (id) {
    case SchemeId::kM: return {id, 0, 0, 0};
    case SchemeId::kJ1: return {id, 1, 0, 0};
    case SchemeId::kJ2: return {id, 0, 1, 0};
    case SchemeId::kJ3: return {id, 0, 0, 1};
    case SchemeId::kJ4: return {id, 0.5, 0.5, 0};
    case SchemeId::kJ5: return {id, 0.5, 0, 0.5};
    case SchemeId::kJ6: return {id, 0, 0.5, 0.5};
    case SchemeId::kJ7: return {id, 1.0 / 3, 1.0 / 3, 1.0 / 3};
  }
  throw ConfigError("unknown loss scheme");
}

LossScheme LossScheme::FromName(const std::string &name) {
  std::string upper = name;
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (const auto &s : All()) {
    if (s.name() == upper) return s;
  }
  throw ConfigError("unknown loss scheme '" + name + "' (expected M or J1..J7)");
}

std::array<LossScheme, 8> LossScheme::All() {
  std::array<LossScheme, 8> out;
  for (int i = 0; i < 8; ++i) out[i] = Get(static_cast<SchemeId>(i));
  return out;
}

std::string LossReport::ToJson() const {
  nlohmann::ordered_json j;
  j["reg"] = reg;
  j["mag"] = mag;
  j["var"] = var;
  auto put = [&j](const char *key, const std::optional<double> &v) {
    if (v) {
      j[key] = *v;
    } else {
      j[key] = nullptr;
    }
  };
  put("pha", pha);
  put("grd", grd);
  put("ifr", ifr);
  j["total"] = total;
  return j.dump();
}

template <typename T>
LossResult<T> Composite(const LossScheme &scheme, const Tensor<T> &mag, const Tensor<T> &phase,
                        const model::Reconstruction<T> &r, bool with_phase) {
  if (!with_phase && scheme.is_joint()) {
    throw ConfigError("scheme " + scheme.name() + " needs the phase decoder output");
  }
  const Tensor<T> reg = KlRegularizer(r.mu_q, r.sigma_q);
  const Tensor<T> lmag = MagnitudeNll(mag, r.a_hat, r.sigma_mag);
  const Tensor<T> var = VarianceReg(r.sigma_mag);
  LossResult<T> out;
  out.total = ad::Add(ad::Add(reg, lmag), var);
  out.report.reg = reg.item();
  out.report.mag = lmag.item();
  out.report.var = var.item();
  if (with_phase) {
    const Tensor<T> kappa = model::Concentration(r.a_hat);
    const Tensor<T> pha = VonMisesNll(phase, r.psi_hat, kappa);
    const Tensor<T> grd = GroupDelayLoss(phase, r.psi_hat, kappa);
    const Tensor<T> ifr = InstFrequencyLoss(phase, r.psi_hat, kappa);
    const std::pair<double, Tensor<T>> terms[] = {
        {scheme.w_pha, pha}, {scheme.w_grd, grd}, {scheme.w_ifr, ifr}};
    for (const auto &[w, term] : terms) {
      if (w != 0.0) out.total = ad::Add(out.total, ad::MulScalar(term, static_cast<T>(w)));
    }
    out.report.pha = pha.item();
    out.report.grd = grd.item();
    out.report.ifr = ifr.item();
  }
  out.report.total = out.total.item();
  return out;
}

#define PHASEVAE_INSTANTIATE_LOSSES(T)                                                   \
  template Tensor<T> KlRegularizer(const Tensor<T> &, const Tensor<T> &);                \
  template Tensor<T> MagnitudeNll(const Tensor<T> &, const Tensor<T> &,                  \
                                  const Tensor<T> &);                                    \
  template Tensor<T> VarianceReg(const Tensor<T> &);                                     \
  template Tensor<T> VonMisesNll(const Tensor<T> &, const Tensor<T> &,                   \
                                 const Tensor<T> &);                                     \
  template Tensor<T> GroupDelayLoss(const Tensor<T> &, const Tensor<T> &,                \
                                    const Tensor<T> &);                                  \
  template Tensor<T> InstFrequencyLoss(const Tensor<T> &, const Tensor<T> &,             \
                                       const Tensor<T> &);                               \
  template LossResult<T> Composite(const LossScheme &, const Tensor<T> &,                \
                                   const Tensor<T> &, const model::Reconstruction<T> &, \
                                   bool);

PHASEVAE_INSTANTIATE_LOSSES(float)
PHASEVAE_INSTANTIATE_LOSSES(double)

#undef PHASEVAE_INSTANTIATE_LOSSES

}  // namespace losses
}  // namespace phasevae
