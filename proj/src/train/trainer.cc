// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <chrono>
#include <cmath>
#include <filesystem>
#include <json.hpp>
#include <sstream>

#include "phasevae/error.h"
#include "phasevae/train/train.h"

namespace phasevae {
namespace train {
namespace {

using nlohmann::ordered_json;

double NowSeconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

ordered_json ReportJson(const losses::LossReport &r) { return ordered_json::parse(r.ToJson()); }

// Accumulates component-wise means of loss reports.
struct ReportMean {
  losses::LossReport sum;
  int count = 0;

  void Add(const losses::LossReport &r) {
    sum.reg += r.reg;
    sum.mag += r.mag;
    sum.var += r.var;
    auto acc = [](std::optional<double> &dst, const std::optional<double> &v) {
      if (v) dst = dst.value_or(0.0) + *v;
    };
    acc(sum.pha, r.pha);
    acc(sum.grd, r.grd);
    acc(sum.ifr, r.ifr);
    sum.total += r.total;
    ++count;
  }

  losses::LossReport Mean() const {
    losses::LossReport m = sum;
    const double inv = 1.0 / count;
    m.reg *= inv;
    m.mag *= inv;
    m.var *= inv;
    for (auto *o : {&m.pha, &m.grd, &m.ifr}) {
      if (*o) **o *= inv;
    }
    m.total *= inv;
    return m;
  }
};

std::string ReportMeta(const losses::LossReport &r) { return r.ToJson(); }

losses::LossReport ReportFromMeta(const std::string &text) {
  const auto j = ordered_json::parse(text);
  losses::LossReport r;
  r.reg = j.at("reg");
  r.mag = j.at("mag");
  r.var = j.at("var");
  for (auto [key, dst] : {std::pair{"pha", &r.pha}, {"grd", &r.grd}, {"ifr", &r.ifr}}) {
    if (!j.at(key).is_null()) *dst = j.at(key).get<double>();
  }
  r.total = j.at("total");
  return r;
}

}  // namespace

template <typename T>
void AdamStep(const std::vector<ad::Parameter<T> *> &params, AdamState<T> &state,
              const TrainConfig &config) {
  if (state.m.empty()) {
    for (auto *p : params) {
      state.m.emplace_back(p->value.size(), T(0));
      state.v.emplace_back(p->value.size(), T(0));
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("Adam state does not match parameters");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (static_cast<int64_t>(state.m[k].size()) != params[k]->value.size()) {
      throw ShapeError("Adam moments for " + params[k]->name + " have the wrong size");
    }
    for (T g : params[k]->gradient()) {
      if (!std::isfinite(g)) {
        throw NumericalError("non-finite gradient in parameter " + params[k]->name);
      }
    }
  }
  ++state.step;
  const double b1 = config.beta1, b2 = config.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto grad = params[k]->gradient();
    auto value = params[k]->value.mutable_data();
    auto &m = state.m[k];
    auto &v = state.v[k];
    for (std::size_t i = 0; i < value.size(); ++i) {
      const T g = grad.empty() ? T(0) : grad[i];
      m[i] = static_cast<T>(b1 * m[i] + (1.0 - b1) * g);
      v[i] = static_cast<T>(b2 * v[i] + (1.0 - b2) * g * g);
      const double m_hat = m[i] / c1, v_hat = v[i] / c2;
      value[i] = static_cast<T>(value[i] - config.alpha * m_hat / (std::sqrt(v_hat) + config.eps));
    }
  }
}

template <typename T>
double ClipGradientNorm(const std::vector<ad::Parameter<T> *> &params, double threshold) {
  if (!(threshold > 0)) throw InvalidArgument("clip threshold must be positive");
  double sq = 0.0;
  for (auto *p : params) {
    for (T g : p->gradient()) sq += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > threshold) {
    const double scale = threshold / norm;
    for (auto *p : params) {
      if (p->gradient().empty()) continue;
      for (T &g : p->value.mutable_grad()) g = static_cast<T>(g * scale);
    }
  }
  return norm;
}

template <typename T>
losses::LossReport Validate(const model::VaeModel<T> &model, const Dataset &dataset,
                            const losses::LossScheme &scheme, bool with_phase) {
  if (dataset.utterances.empty()) throw DataError("validation set is empty");
  ad::NoGradGuard guard;
  ReportMean mean;
  for (const auto &u : dataset.utterances) {
    const auto mag = model::ToTensor<T>(u.mag.values);
    const auto phase = model::ToTensor<T>(u.phase.values);
    const auto r = model.Reconstruct(mag, phase);
    mean.Add(losses::Composite(scheme, mag, phase, r, with_phase).report);
  }
  return mean.Mean();
}

template <typename T>
Trainer<T>::Trainer(model::VaeModel<T> &model, TrainConfig config, TrainerOptions options)
    : model_(model), config_(std::move(config)), options_(std::move(options)) {
  config_.Validate();
  if (config_.stage == Stage::kOne) {
    for (const char *prefix : {model::kEncoderPrefix, model::kMagnitudeDecoderPrefix}) {
      for (auto *p : model_.params().WithPrefix(prefix)) optimized_.push_back(p);
    }
  } else {
    for (auto &p : model_.params().params()) optimized_.push_back(&p);
  }
  rng_.seed(config_.seed);
}

template <typename T>
void Trainer<T>::Log(const std::string &line) {
  if (options_.log) *options_.log << line << "\n" << std::flush;
}

template <typename T>
void Trainer<T>::SaveBest(const losses::LossReport &validation) const {
  if (options_.out_dir.empty()) return;
  ad::Archive a = model_.ToArchive();
  a.metadata["stage"] = std::to_string(static_cast<int>(config_.stage));
  a.metadata["epoch"] = std::to_string(epoch_);
  a.metadata["validation"] = ReportMeta(validation);
  a.metadata["train_config"] = config_.ToString();
  ad::WriteArchive((std::filesystem::path(options_.out_dir) / kBestCheckpoint).string(), a);
}

template <typename T>
void Trainer<T>::SaveState(const std::string &path) const {
  ad::Archive a = model_.ToArchive();
  a.metadata["stage"] = std::to_string(static_cast<int>(config_.stage));
  a.metadata["epoch"] = std::to_string(epoch_);
  a.metadata["adam_step"] = std::to_string(adam_.step);
  a.metadata["since_improvement"] = std::to_string(since_improvement_);
  a.metadata["best_epoch"] = std::to_string(best_epoch_);
  a.metadata["initial"] = ReportMeta(*initial_);
  a.metadata["best"] = ReportMeta(*best_);
  a.metadata["train_config"] = config_.ToString();
  std::ostringstream rng;
  rng << rng_;
  a.metadata["rng"] = rng.str();
  for (std::size_t k = 0; k < adam_.m.size(); ++k) {
    const auto &name = optimized_[k]->name;
    const auto &shape = optimized_[k]->value.shape();
    a.tensors.push_back({"adam/m/" + name, shape, {adam_.m[k].begin(), adam_.m[k].end()}});
    a.tensors.push_back({"adam/v/" + name, shape, {adam_.v[k].begin(), adam_.v[k].end()}});
  }
  ad::WriteArchive(path, a);
}

template <typename T>
void Trainer<T>::Resume(const std::string &state_path) {
  const ad::Archive a = ad::ReadArchive(state_path);
  if (a.Meta("stage") != std::to_string(static_cast<int>(config_.stage))) {
    throw ConfigError("resume checkpoint was written by stage " + a.Meta("stage"));
  }
  model_.LoadArchive(a);
  epoch_ = std::stoi(a.Meta("epoch"));
  adam_.step = std::stoll(a.Meta("adam_step"));
  since_improvement_ = std::stoi(a.Meta("since_improvement"));
  best_epoch_ = std::stoi(a.Meta("best_epoch"));
  initial_ = ReportFromMeta(a.Meta("initial"));
  best_ = ReportFromMeta(a.Meta("best"));
  std::istringstream rng(a.Meta("rng"));
  rng >> rng_;
  adam_.m.clear();
  adam_.v.clear();
  if (adam_.step > 0) {
    for (auto *p : optimized_) {
      const auto *m = a.Find("adam/m/" + p->name);
      const auto *v = a.Find("adam/v/" + p->name);
      if (!m || !v) throw DataError("resume checkpoint lacks Adam moments for " + p->name);
      adam_.m.emplace_back(m->values.begin(), m->values.end());
      adam_.v.emplace_back(v->values.begin(), v->values.end());
    }
  }
}

template <typename T>
TrainResult Trainer<T>::Run(const Dataset &train, const Dataset &validation) {
  const int f = model_.config().num_bins;
  if (train.NumBins() != f || validation.NumBins() != f) {
    throw ConfigError("dataset bins do not match the model (" + std::to_string(f) + ")");
  }
  if (!options_.out_dir.empty()) std::filesystem::create_directories(options_.out_dir);
  const bool with_phase = config_.stage == Stage::kTwo;
  const int steps = StepsPerEpoch(train, config_);
  const int latent = model_.config().latent_dim;
  start_time_ = NowSeconds();

  auto stamp = [this](ordered_json &j) {
    if (options_.log_wall_time) j["wall_time"] = NowSeconds() - start_time_;
  };

  TrainResult result;
  if (!initial_) {
    ordered_json start;
    start["event"] = "start";
    start["stage"] = static_cast<int>(config_.stage);
    start["scheme"] = config_.scheme.name();
    start["seed"] = config_.seed;
    start["steps_per_epoch"] = steps;
    start["optimized_scalars"] = [this] {
      int64_t n = 0;
      for (auto *p : optimized_) n += p->value.size();
      return n;
    }();
    Log(start.dump());
    initial_ = Validate(model_, validation, config_.scheme, with_phase);
    best_ = initial_;
    best_epoch_ = 0;
    ordered_json j;
    j["event"] = "validation";
    j["epoch"] = 0;
    j["validation"] = ReportJson(*initial_);
    stamp(j);
    Log(j.dump());
    SaveBest(*initial_);
  }
  result.initial_validation = *initial_;

  bool stopped = since_improvement_ >= config_.patience_epochs;
  while (!stopped && epoch_ < config_.max_epochs) {
    ++epoch_;
    double grad_norm_sum = 0.0;
    for (int s = 0; s < steps; ++s) {
      Minibatch batch = AssembleMinibatch(train, config_, rng_);
      if (config_.augment_phase) AugmentPhase(batch, rng_);
      std::normal_distribution<double> normal(0.0, 1.0);
      std::vector<T> eps(static_cast<std::size_t>(batch.batch) * latent * batch.frames);
      for (auto &e : eps) e = static_cast<T>(normal(rng_));
      const auto noise = ad::Tensor<T>::FromData({batch.batch, latent, batch.frames}, eps);
      const auto mag = batch.MagTensor<T>();
      const auto phase = batch.PhaseTensor<T>();

      model_.params().ZeroGrad();
      const auto r = model_.Reconstruct(mag, phase, &noise);
      auto loss = losses::Composite(config_.scheme, mag, phase, r, with_phase);
      if (!std::isfinite(loss.report.total)) {
        throw NumericalError("training loss diverged at epoch " + std::to_string(epoch_) +
                             ", step " + std::to_string(adam_.step + 1));
      }
      loss.total.Backward();
      const double norm = ClipGradientNorm(optimized_, config_.clip_threshold);
      AdamStep(optimized_, adam_, config_);
      grad_norm_sum += norm;

      ordered_json j;
      j["event"] = "step";
      j["epoch"] = epoch_;
      j["step"] = adam_.step;
      j["loss"] = ReportJson(loss.report);
      j["grad_norm"] = norm;
      stamp(j);
      Log(j.dump());
    }

    EpochRecord record;
    record.epoch = epoch_;
    record.validation = Validate(model_, validation, config_.scheme, with_phase);
    record.mean_grad_norm = grad_norm_sum / steps;
    if (!std::isfinite(record.validation.total)) {
      throw NumericalError("validation loss diverged at epoch " + std::to_string(epoch_));
    }
    record.improved = record.validation.total < best_->total;
    if (record.improved) {
      since_improvement_ = 0;
    } else {
      ++since_improvement_;
    }
    // Ties keep the later model without resetting the patience counter.
    if (record.validation.total <= best_->total) {
      best_ = record.validation;
      best_epoch_ = epoch_;
      SaveBest(record.validation);
    }
    stopped = since_improvement_ >= config_.patience_epochs;

    ordered_json j;
    j["event"] = "epoch";
    j["epoch"] = epoch_;
    j["validation"] = ReportJson(record.validation);
    j["mean_grad_norm"] = record.mean_grad_norm;
    j["improved"] = record.improved;
    j["epochs_since_improvement"] = since_improvement_;
    j["best_epoch"] = best_epoch_;
    j["best_total"] = best_->total;
    stamp(j);
    Log(j.dump());
    result.history.push_back(record);
    if (!options_.out_dir.empty()) {
      SaveState((std::filesystem::path(options_.out_dir) / kStateCheckpoint).string());
    }
  }

  ordered_json j;
  j["event"] = "stop";
  j["reason"] = stopped ? "patience" : "max_epochs";
  j["epochs"] = epoch_;
  j["best_epoch"] = best_epoch_;
  j["best_total"] = best_->total;
  Log(j.dump());

  result.best_validation = *best_;
  result.best_epoch = best_epoch_;
  result.epochs_run = epoch_;
  result.early_stopped = stopped;
  return result;
}

template <typename T>
void LoadStageOne(model::VaeModel<T> &model, const std::string &checkpoint_path) {
  if (checkpoint_path.empty() || !std::filesystem::exists(checkpoint_path)) {
    throw ConfigError("stage 2 needs a stage-1 checkpoint; '" + checkpoint_path +
                      "' does not exist");
  }
  const ad::Archive a = ad::ReadArchive(checkpoint_path);
  const auto it = a.metadata.find("stage");
  if (it == a.metadata.end() || it->second != "1") {
    throw ConfigError("'" + checkpoint_path + "' is not a stage-1 checkpoint");
  }
  model.LoadArchive(a);
}

#define PHASEVAE_INSTANTIATE_TRAIN(T)                                                      \
  template void AdamStep(const std::vector<ad::Parameter<T> *> &, AdamState<T> &,          \
                         const TrainConfig &);                                             \
  template double ClipGradientNorm(const std::vector<ad::Parameter<T> *> &, double);       \
  template losses::LossReport Validate(const model::VaeModel<T> &, const Dataset &,        \
                                       const losses::LossScheme &, bool);                  \
  template class Trainer<T>;                                                               \
  template void LoadStageOne(model::VaeModel<T> &, const std::string &);

PHASEVAE_INSTANTIATE_TRAIN(float)
PHASEVAE_INSTANTIATE_TRAIN(double)

#undef PHASEVAE_INSTANTIATE_TRAIN

}  // namespace train
}  // namespace phasevae
