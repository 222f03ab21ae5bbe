// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "phasevae/eval/evaluation.h"

#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "phasevae/angles.h"
#include "phasevae/error.h"
#include "phasevae/gla/griffin_lim.h"

namespace phasevae {
namespace eval {
namespace {

void RequireSameShape(const Eigen::ArrayXXd &a, const Eigen::ArrayXXd &b, const char *what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidArgument(std::string(what) + ": shape mismatch (" + std::to_string(a.rows()) +
                          "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                          "x" + std::to_string(b.cols()) + ")");
  }
}

uint64_t Fnv1a(const std::string &s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

double Item(const ad::Tensor<double> &t) { return t.item(); }

}  // namespace

std::string UtteranceReport::ToJson() const {
  nlohmann::ordered_json j;
  j["id"] = id;
  j["frames"] = frames;
  for (const auto &name : MetricNames()) {
    const double v = MetricValue(*this, name);
    // JSON has no infinities; an exact resynthesis is written as null.
    if (std::isfinite(v)) {
      j[name] = v;
    } else {
      j[name] = nullptr;
    }
  }
  return j.dump();
}

const std::vector<std::string> &MetricNames() {
  static const std::vector<std::string> names = {
      "ll_mag", "ll_pha", "ll_grd", "ll_ifr", "spectral_convergence", "phase_rmse_wrapped",
      "snr_db", "inconsistency"};
  return names;
}

double MetricValue(const UtteranceReport &r, const std::string &name) {
  if (name == "ll_mag") return r.ll_mag;
  if (name == "ll_pha") return r.ll_pha;
  if (name == "ll_grd") return r.ll_grd;
  if (name == "ll_ifr") return r.ll_ifr;
  if (name == "spectral_convergence") return r.spectral_convergence;
  if (name == "phase_rmse_wrapped") return r.phase_rmse_wrapped;
  if (name == "snr_db") return r.snr_db;
  if (name == "inconsistency") return r.inconsistency;
  throw InvalidArgument("unknown metric " + name);
}

const MetricSummary &AggregateReport::Get(const std::string &name) const {
  for (const auto &[n, s] : metrics) {
    if (n == name) return s;
  }
  throw InvalidArgument("unknown metric " + name);
}

std::string AggregateReport::ToJson() const {
  nlohmann::ordered_json j;
  j["model"] = model_id;
  j["scheme"] = scheme;
  j["count"] = count;
  j["gla_iterations"] = gla_iterations;
  for (const auto &[name, s] : metrics) {
    nlohmann::ordered_json m;
    if (std::isfinite(s.mean)) {
      m["mean"] = s.mean;
    } else {
      m["mean"] = nullptr;
    }
    if (std::isfinite(s.ci95)) {
      m["ci95"] = s.ci95;
    } else {
      m["ci95"] = nullptr;
    }
    j[name] = m;
  }
  return j.dump();
}

AggregateReport AggregateReport::FromJson(const std::string &text) {
  AggregateReport r;
  try {
    const auto j = nlohmann::json::parse(text);
    r.model_id = j.at("model").get<std::string>();
    r.scheme = j.at("scheme").get<std::string>();
    r.count = j.at("count").get<int>();
    r.gla_iterations = j.value("gla_iterations", 0);
    auto number = [](const nlohmann::json &v) {
      return v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>();
    };
    for (const auto &name : MetricNames()) {
      const auto &m = j.at(name);
      r.metrics.emplace_back(name, MetricSummary{number(m.at("mean")), number(m.at("ci95"))});
    }
  } catch (const nlohmann::json::exception &e) {
    throw DataError(std::string("malformed aggregate report: ") + e.what());
  }
  return r;
}

double SpectralConvergence(const Eigen::ArrayXXd &a_true, const Eigen::ArrayXXd &a_est) {
  RequireSameShape(a_true, a_est, "spectral convergence");
  const double ref = std::sqrt(a_true.square().sum());
  if (ref == 0.0) throw DataError("spectral convergence of an all-zero reference");
  return std::sqrt((a_true - a_est).square().sum()) / ref;
}

double PhaseRmseWrapped(const Eigen::ArrayXXd &psi_true, const Eigen::ArrayXXd &psi_est,
                        const Eigen::ArrayXXd *weights) {
  RequireSameShape(psi_true, psi_est, "phase RMSE");
  if (weights != nullptr) RequireSameShape(psi_true, *weights, "phase RMSE weights");
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < psi_true.size(); ++i) {
    const double w = weights ? (*weights)(i) : 1.0;
    const double d = WrapAngle(psi_true(i) - psi_est(i));
    num += w * d * d;
    den += w;
  }
  if (!(den > 0.0)) throw InvalidArgument("phase RMSE needs a positive total weight");
  return std::sqrt(num / den);
}

double SnrDb(const std::vector<double> &reference, const std::vector<double> &estimate) {
  const std::size_t n = std::min(reference.size(), estimate.size());
  double s = 0.0, e = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s += reference[i] * reference[i];
    const double d = reference[i] - estimate[i];
    e += d * d;
  }
  if (s == 0.0) throw DataError("SNR of a silent reference");
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(s / e);
}

UtteranceReport ScoreEstimate(const std::string &id, const dsp::AudioBuffer &audio,
                              const dsp::AnalysisConfig &analysis,
                              const Eigen::ArrayXXd &a_hat, const Eigen::ArrayXXd &sigma_mag,
                              const Eigen::ArrayXXd &psi_hat,
                              const Eigen::ArrayXXd &synthesis_phase, int gla_iterations) {
  const auto [mag, phase] = dsp::Decompose(dsp::Stft(audio, analysis));
  RequireSameShape(mag.values, a_hat, "a_hat");
  RequireSameShape(mag.values, sigma_mag, "sigma_mag");
  RequireSameShape(mag.values, psi_hat, "psi_hat");
  RequireSameShape(mag.values, synthesis_phase, "synthesis phase");
  if (mag.values.cols() < 2) throw DataError("utterance " + id + " has fewer than two frames");

  // The likelihoods go through the loss module so both report the same
  // numbers.
  using model::ToTensor;
  const auto a = ToTensor<double>(mag.values);
  const auto psi = ToTensor<double>(phase.values);
  const auto ah = ToTensor<double>(a_hat);
  const auto ph = ToTensor<double>(psi_hat);
  const auto kappa = model::Concentration(ah);
  UtteranceReport r;
  r.id = id;
  r.frames = static_cast<int>(mag.values.cols());
  r.ll_mag = -Item(losses::MagnitudeNll(a, ah, ToTensor<double>(sigma_mag)));
  r.ll_pha = -Item(losses::VonMisesNll(psi, ph, kappa));
  r.ll_grd = -Item(losses::GroupDelayLoss(psi, ph, kappa));
  r.ll_ifr = -Item(losses::InstFrequencyLoss(psi, ph, kappa));
  r.spectral_convergence = SpectralConvergence(mag.values, a_hat);

  dsp::MagnitudeSpectrogram est_mag{a_hat};
  dsp::PhaseSpectrogram est_phase{synthesis_phase};
  const std::size_t len = audio.samples.size();
  const gla::GlaResult synth =
      gla::Gla(est_mag, est_phase, analysis, gla_iterations, len, audio.sample_rate);
  r.phase_rmse_wrapped = PhaseRmseWrapped(phase.values, synth.phase.values);
  r.snr_db = SnrDb(audio.samples, synth.audio.samples);
  r.inconsistency = gla::Inconsistency(est_mag, synth.phase, analysis, len);
  return r;
}

template <typename T>
UtteranceReport EvaluateUtterance(const model::VaeModel<T> &model, const std::string &id,
                                  const dsp::AudioBuffer &audio,
                                  const dsp::AnalysisConfig &analysis,
                                  const losses::LossScheme &scheme, const EvalOptions &options) {
  if (model.config().num_bins != analysis.NumBins()) {
    throw ConfigError("model expects " + std::to_string(model.config().num_bins) +
                      " bins, analysis gives " + std::to_string(analysis.NumBins()));
  }
  const auto [mag, phase] = dsp::Decompose(dsp::Stft(audio, analysis));
  const auto rec = model.Reconstruct(mag, phase);
  const Eigen::ArrayXXd a_hat = model::ToArray(rec.a_hat);
  const Eigen::ArrayXXd sigma = model::ToArray(rec.sigma_mag);
  Eigen::ArrayXXd psi_hat;
  if (scheme.is_joint()) {
    psi_hat = model::ToArray(rec.psi_hat);
  } else {
    gla::GlaConfig init;
    init.init = gla::PhaseInit::kRandomUniform;
    init.seed = options.seed ^ Fnv1a(id);
    psi_hat = gla::InitialPhase(mag, nullptr, init).values;
  }
  return ScoreEstimate(id, audio, analysis, a_hat, sigma, psi_hat, psi_hat,
                       options.gla_iterations);
}

template UtteranceReport EvaluateUtterance<float>(const model::VaeModel<float> &,
                                                  const std::string &, const dsp::AudioBuffer &,
                                                  const dsp::AnalysisConfig &,
                                                  const losses::LossScheme &, const EvalOptions &);
template UtteranceReport EvaluateUtterance<double>(const model::VaeModel<double> &,
                                                   const std::string &, const dsp::AudioBuffer &,
                                                   const dsp::AnalysisConfig &,
                                                   const losses::LossScheme &, const EvalOptions &);

AggregateReport Aggregate(const std::vector<UtteranceReport> &reports,
                          const std::string &model_id, const std::string &scheme) {
  if (reports.empty()) throw InvalidArgument("cannot aggregate zero reports");
  AggregateReport agg;
  agg.model_id = model_id;
  agg.scheme = scheme;
  agg.count = static_cast<int>(reports.size());
  const double n = static_cast<double>(reports.size());
  for (const auto &name : MetricNames()) {
    MetricSummary s;
    for (const auto &r : reports) s.mean += MetricValue(r, name);
    s.mean /= n;
    if (reports.size() > 1) {
      double ss = 0.0;
      for (const auto &r : reports) {
        const double d = MetricValue(r, name) - s.mean;
        ss += d * d;
      }
      s.ci95 = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    agg.metrics.emplace_back(name, s);
  }
  return agg;
}

std::string LogLikelihoodTable(const std::vector<AggregateReport> &rows) {
  std::string out;
  char line[320];
  std::snprintf(line, sizeof(line), "%-24s %-6s %4s %4s  %-19s %-19s %-19s %-19s %-8s %-8s\n",
                "model", "scheme", "n", "gla", "-L^mag", "-L^pha", "-L^grd", "-L^ifr", "SC",
                "incons");
  out += line;
  for (const auto &row : rows) {
    auto cell = [&](const char *name) {
      const MetricSummary &s = row.Get(name);
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.3f +- %.3f", s.mean, s.ci95);
      return std::string(buf);
    };
    std::snprintf(line, sizeof(line),
                  "%-24s %-6s %4d %4d  %-19s %-19s %-19s %-19s %-8.4f %-8.4f\n",
                  row.model_id.c_str(), row.scheme.c_str(), row.count, row.gla_iterations,
                  cell("ll_mag").c_str(), cell("ll_pha").c_str(), cell("ll_grd").c_str(),
                  cell("ll_ifr").c_str(), row.Get("spectral_convergence").mean,
                  row.Get("inconsistency").mean);
    out += line;
  }
  return out;
}

std::string GlaInconsistencyReport(const std::vector<AggregateReport> &rows) {
  std::string out;
  char line[256];
  for (const auto &base : rows) {
    if (base.gla_iterations != 0) continue;
    for (const auto &post : rows) {
      if (post.gla_iterations == 0 || post.model_id != base.model_id ||
          post.scheme != base.scheme) {
        continue;
      }
      const double before = base.Get("inconsistency").mean;
      const double after = post.Get("inconsistency").mean;
      std::snprintf(line, sizeof(line),
                    "%s (%s): inconsistency %.4f -> %.4f with %d GLA iterations (%s)\n",
                    base.model_id.c_str(), base.scheme.c_str(), before, after,
                    post.gla_iterations, after <= before ? "not increased" : "INCREASED");
      out += line;
    }
  }
  return out;
}

}  // namespace eval
}  // namespace phasevae
