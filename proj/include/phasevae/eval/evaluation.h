// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Per-utterance log-likelihood reports and objective reconstruction metrics
// (spectral convergence, wrapped phase RMSE, SNR), with aggregation into
// means and 95% confidence half-widths.

#ifndef PHASEVAE_EVAL_EVALUATION_H_
#define PHASEVAE_EVAL_EVALUATION_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "phasevae/dsp.h"
#include "phasevae/losses/losses.h"
#include "phasevae/model/vae.h"

namespace phasevae {
namespace eval {

struct UtteranceReport {
  std::string id;
  int frames = 0;
  // Negated per-frame losses with kappa = a_hat + 1.
  double ll_mag = 0, ll_pha = 0, ll_grd = 0, ll_ifr = 0;
  // ||a - a_hat||_F / ||a||_F.
  double spectral_convergence = 0;
  // Unweighted wrapped RMSE between the true and the synthesis phase.
  double phase_rmse_wrapped = 0;
  // Time-domain SNR of the resynthesized signal; +inf for an exact match.
  double snr_db = 0;
  // Inconsistency of the synthesis spectrogram (a_hat, synthesis phase).
  double inconsistency = 0;

  std::string ToJson() const;
};

// Metric names in report order, and the value of one metric by name.
const std::vector<std::string> &MetricNames();
double MetricValue(const UtteranceReport &report, const std::string &name);

struct MetricSummary {
  double mean = 0;
  double ci95 = 0;  // 1.96 * sample std / sqrt(n); 0 when n == 1
};

struct AggregateReport {
  std::string model_id;
  std::string scheme;
  int count = 0;
  int gla_iterations = 0;
  std::vector<std::pair<std::string, MetricSummary>> metrics;  // MetricNames() order

  const MetricSummary &Get(const std::string &name) const;
  std::string ToJson() const;
  // Inverse of ToJson (null values read back as +inf). Throws DataError.
  static AggregateReport FromJson(const std::string &text);
};

// Throws InvalidArgument on shape mismatch, DataError when ||a_true|| = 0.
double SpectralConvergence(const Eigen::ArrayXXd &a_true, const Eigen::ArrayXXd &a_est);

// sqrt(sum w wrap(psi_true - psi_est)^2 / sum w), unweighted when `weights`
// is null. Throws InvalidArgument on shape mismatch or zero total weight.
double PhaseRmseWrapped(const Eigen::ArrayXXd &psi_true, const Eigen::ArrayXXd &psi_est,
                        const Eigen::ArrayXXd *weights = nullptr);

// 10 log10(||ref||^2 / ||ref - est||^2) over the common length. Throws
// DataError for a silent reference.
double SnrDb(const std::vector<double> &reference, const std::vector<double> &estimate);

struct EvalOptions {
  // Seeds the uniform random phase used for scheme M; combined with the
  // utterance id so each utterance gets its own stream.
  uint64_t seed = 0;
  // Griffin-Lim iterations applied to (a_hat, phase) before resynthesis.
  int gla_iterations = 0;
};

// Scores a magnitude/phase estimate of `audio`. `synthesis_phase` is the
// phase used for resynthesis and phase RMSE (psi_hat, or random for M).
UtteranceReport ScoreEstimate(const std::string &id, const dsp::AudioBuffer &audio,
                              const dsp::AnalysisConfig &analysis,
                              const Eigen::ArrayXXd &a_hat, const Eigen::ArrayXXd &sigma_mag,
                              const Eigen::ArrayXXd &psi_hat,
                              const Eigen::ArrayXXd &synthesis_phase, int gla_iterations = 0);

// Deterministic (epsilon = 0) reconstruction of one utterance. For scheme M
// the phase decoder is not used: psi_hat is drawn uniformly from [-pi, pi).
// Throws ConfigError when the model's bin count differs from `analysis`.
template <typename T>
UtteranceReport EvaluateUtterance(const model::VaeModel<T> &model, const std::string &id,
                                  const dsp::AudioBuffer &audio,
                                  const dsp::AnalysisConfig &analysis,
                                  const losses::LossScheme &scheme, const EvalOptions &options);

// Throws InvalidArgument on an empty input.
AggregateReport Aggregate(const std::vector<UtteranceReport> &reports,
                          const std::string &model_id, const std::string &scheme);

// Plain-text table: one row per aggregate, columns -L^mag, -L^pha, -L^grd,
// -L^ifr as "mean +- ci95", followed by GLA iterations, spectral
// convergence and inconsistency.
std::string LogLikelihoodTable(const std::vector<AggregateReport> &rows);

// For every (model, scheme) with rows both without and with GLA, one line
// comparing mean inconsistency before and after post-processing.
std::string GlaInconsistencyReport(const std::vector<AggregateReport> &rows);

}  // namespace eval
}  // namespace phasevae

#endif  // PHASEVAE_EVAL_EVALUATION_H_
