// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "phasevae/model/vae.h"

#include <optional>
#include <sstream>

#include "phasevae/error.h"

namespace phasevae {
namespace model {
namespace {

using nn::DenseBlock;
using nn::FullyConnected;
using nn::TemporalBlock;
using nn::TransitionDown;
using nn::TransitionFinal;
using nn::TransitionUp;

int CeilDiv(int a, int b) { return (a + b - 1) / b; }

std::string JoinInts(const std::vector<int> &v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

int ParseInt(const std::string &key, const std::string &value) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception &) {
    throw ConfigError("model config key " + key + " expects an integer, got '" +
                      value + "'");
  }
}

// Block parameter formulas.
int64_t Wn(int64_t out, int64_t in, int64_t kh, int64_t kw) {
  return out * in * kh * kw + 2 * out;
}
int64_t Gated(int64_t out, int64_t in, int64_t kh, int64_t kw) {
  return 2 * Wn(out, in, kh, kw);
}
int64_t Dense(const ModelConfig &c, int64_t in) {
  int64_t n = 0;
  for (int j = 0; j < c.dense_layers; ++j) n += Gated(c.growth, in + j * c.growth, 3, 3);
  return n;
}
int64_t Temporal(int64_t in, int64_t width) {
  int64_t n = Gated(width, in, 1, 3) + 3 * Gated(width, width, 1, 3);
  if (in != width) n += Wn(width, in, 1, 1);
  return n;
}
int64_t Trunk(const ModelConfig &c) {
  const auto lengths = c.StageLengths();
  const int grown = c.te_channels + c.dense_layers * c.growth;
  int64_t n = Wn(c.fc_hidden, c.latent_dim, 1, 1) + Temporal(c.fc_hidden, c.temporal_width) +
              Wn(int64_t{c.te_channels} * lengths.back(), c.temporal_width, 1, 1);
  int in = c.te_channels;
  for (std::size_t i = 0; i < c.strides.size(); ++i) {
    n += Gated(c.te_channels, in, 3, 3) + Dense(c, c.te_channels);
    in = grown;
  }
  return n;
}

}  // namespace

void ModelConfig::Validate() const {
  auto require = [](bool ok, const std::string &what) {
    if (!ok) throw ConfigError("invalid model config: " + what);
  };
  require(num_bins >= 2, "num_bins must be >= 2");
  require(latent_dim >= 1, "latent_dim must be >= 1");
  require(latent_dim < num_bins, "latent_dim D must be smaller than num_bins F");
  require(te_channels >= 1 && growth >= 1 && dense_layers >= 1,
          "channel counts must be positive");
  require(fc_hidden >= 1 && temporal_width >= 1, "FC/temporal widths must be positive");
  require(!strides.empty(), "at least one down-sampling stage is required");
  for (int s : strides) require(s >= 1, "strides must be >= 1");
  require(leaky_slope >= 0.0 && leaky_slope < 1.0, "leaky_slope must be in [0, 1)");
}

std::vector<int> ModelConfig::StageLengths() const {
  std::vector<int> lengths{num_bins};
  for (int s : strides) lengths.push_back(CeilDiv(lengths.back(), s));
  return lengths;
}

int ModelConfig::EncoderChannels() const {
  return te_channels + static_cast<int>(strides.size()) * dense_layers * growth;
}

std::string ModelConfig::ToString() const {
  std::ostringstream os;
  os.precision(17);
  os << "model.preset=" << preset << "\n"
     << "model.num_bins=" << num_bins << "\n"
     << "model.latent_dim=" << latent_dim << "\n"
     << "model.te_channels=" << te_channels << "\n"
     << "model.growth=" << growth << "\n"
     << "model.dense_layers=" << dense_layers << "\n"
     << "model.strides=" << JoinInts(strides) << "\n"
     << "model.fc_hidden=" << fc_hidden << "\n"
     << "model.temporal_width=" << temporal_width << "\n"
     << "model.leaky_slope=" << leaky_slope << "\n";
  return os.str();
}

void ModelConfig::Set(const std::string &key, const std::string &value) {
  if (key == "model.preset") {
    preset = value;
  } else if (key == "model.num_bins") {
    num_bins = ParseInt(key, value);
  } else if (key == "model.latent_dim") {
    latent_dim = ParseInt(key, value);
  } else if (key == "model.te_channels") {
    te_channels = ParseInt(key, value);
  } else if (key == "model.growth") {
    growth = ParseInt(key, value);
  } else if (key == "model.dense_layers") {
    dense_layers = ParseInt(key, value);
  } else if (key == "model.strides") {
    strides.clear();
    std::istringstream parts(value);
    std::string part;
    while (std::getline(parts, part, ',')) strides.push_back(ParseInt(key, part));
  } else if (key == "model.fc_hidden") {
    fc_hidden = ParseInt(key, value);
  } else if (key == "model.temporal_width") {
    temporal_width = ParseInt(key, value);
  } else if (key == "model.leaky_slope") {
    try {
      leaky_slope = std::stod(value);
    } catch (const std::exception &) {
      throw ConfigError("model.leaky_slope expects a number, got '" + value + "'");
    }
  } else {
    throw ConfigError("unknown model config key " + key);
  }
}

ModelConfig ModelConfig::FromString(const std::string &text) {
  ModelConfig c;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("malformed model config line: " + line);
    c.Set(line.substr(0, eq), line.substr(eq + 1));
  }
  c.Validate();
  return c;
}

ModelConfig ModelConfig::Paper() { return ModelConfig{}; }

ModelConfig ModelConfig::Toy() {
  ModelConfig c;
  c.preset = "toy";
  c.num_bins = 129;
  c.latent_dim = 8;
  c.te_channels = 8;
  c.growth = 4;
  c.strides = {4, 4};
  c.fc_hidden = 64;
  c.temporal_width = 64;
  return c;
}

ParameterCount AnalyticParameterCount(const ModelConfig &c) {
  c.Validate();
  const auto lengths = c.StageLengths();
  const int grown = c.dense_layers * c.growth;
  ParameterCount count;

  int64_t enc = Gated(c.te_channels, 3, 1, 1);
  int ch = c.te_channels;
  for (std::size_t i = 0; i < c.strides.size(); ++i) {
    enc += Dense(c, ch);
    ch += grown;
    enc += Gated(ch, ch, 1, 1);
  }
  enc += Wn(c.fc_hidden, int64_t{ch} * lengths.back(), 1, 1);
  enc += Temporal(c.fc_hidden, c.temporal_width);
  enc += 2 * Wn(c.latent_dim, c.temporal_width, 1, 1);
  count.encoder = enc;

  const int trunk_out = c.te_channels + grown;
  count.magnitude_decoder = Trunk(c) + 2 * Gated(1, trunk_out, 1, 1);

  const int joined = trunk_out + c.te_channels;
  count.phase_decoder = Trunk(c) + Gated(c.te_channels, 1, 1, 1) + Dense(c, joined) +
                        2 * Gated(1, joined + grown, 1, 1);
  return count;
}

template <typename T>
Tensor<T> Concentration(const Tensor<T> &a_hat) {
  for (T v : a_hat.data()) {
    if (!(v >= T(0))) {
      throw InvalidArgument("concentration requires a_hat >= 0, got " + std::to_string(v));
    }
  }
  return ad::AddScalar(a_hat, T(1));
}

// Decoder trunk: z -> FC -> Temporal -> FC -> reshape -> {TU -> DB}.
template <typename T>
struct DecoderTrunk {
  std::optional<FullyConnected<T>> fc_in, fc_out;
  std::optional<TemporalBlock<T>> temporal;
  std::vector<TransitionUp<T>> ups;
  std::vector<DenseBlock<T>> dense;
  std::vector<int> lengths;
  int te = 0;
  int out_channels = 0;

  DecoderTrunk(const ModelConfig &c, ParameterSet<T> &ps, const std::string &p,
               std::mt19937_64 &rng)
      : lengths(c.StageLengths()), te(c.te_channels) {
    const T slope = static_cast<T>(c.leaky_slope);
    fc_in.emplace(ps, p + "fc_in", c.latent_dim, c.fc_hidden, false, rng, slope);
    temporal.emplace(ps, p + "temporal", c.fc_hidden, c.temporal_width, rng);
    fc_out.emplace(ps, p + "fc_out", c.temporal_width, c.te_channels * lengths.back(),
                   false, rng, slope);
    int in = c.te_channels;
    for (int i = static_cast<int>(c.strides.size()) - 1, j = 0; i >= 0; --i, ++j) {
      ups.emplace_back(ps, p + "tu" + std::to_string(j), in, c.strides[i], rng,
                       c.te_channels);
      dense.emplace_back(ps, p + "db" + std::to_string(j), c.te_channels, rng, c.growth,
                         c.dense_layers);
      in = dense.back().out_channels();
    }
    out_channels = in;
  }

  // z: (B, D, N) -> (B, out_channels, F, N).
  Tensor<T> Forward(const Tensor<T> &z) const {
    const int b = z.dim(0), n = z.dim(2);
    Tensor<T> h = ad::Reshape(z, {b, z.dim(1), 1, n});
    h = fc_out->Forward(temporal->Forward(fc_in->Forward(h)));
    h = ad::Reshape(h, {b, te, lengths.back(), n});
    const int stages = static_cast<int>(ups.size());
    for (int j = 0; j < stages; ++j) {
      h = dense[j].Forward(ups[j].Forward(h, lengths[stages - 1 - j]));
    }
    return h;
  }
};

template <typename T>
struct VaeModel<T>::Networks {
  // Encoder.
  std::optional<TransitionDown<T>> enc_te;
  std::vector<DenseBlock<T>> enc_dense;
  std::vector<TransitionDown<T>> enc_down;
  std::optional<FullyConnected<T>> enc_fc, enc_mu, enc_sigma;
  std::optional<TemporalBlock<T>> enc_temporal;
  // Magnitude decoder.
  std::optional<DecoderTrunk<T>> mag_trunk;
  std::optional<TransitionFinal<T>> mag_mean, mag_sigma;
  // Phase decoder.
  std::optional<DecoderTrunk<T>> pha_trunk;
  std::optional<TransitionDown<T>> pha_te;
  std::optional<DenseBlock<T>> pha_dense;
  std::optional<TransitionFinal<T>> pha_cos, pha_sin;

  Networks(const ModelConfig &c, ParameterSet<T> &ps, std::mt19937_64 &rng) {
    const T slope = static_cast<T>(c.leaky_slope);
    const std::string e = kEncoderPrefix;
    enc_te.emplace(nn::MakeTransitionExpand<T>(ps, e + "te", 3, rng, c.te_channels));
    int ch = c.te_channels;
    for (std::size_t i = 0; i < c.strides.size(); ++i) {
      enc_dense.emplace_back(ps, e + "db" + std::to_string(i), ch, rng, c.growth,
                             c.dense_layers);
      ch = enc_dense.back().out_channels();
      enc_down.emplace_back(ps, e + "td" + std::to_string(i), ch, ch, c.strides[i], rng);
    }
    enc_fc.emplace(ps, e + "fc", ch * c.StageLengths().back(), c.fc_hidden, false, rng,
                   slope);
    enc_temporal.emplace(ps, e + "temporal", c.fc_hidden, c.temporal_width, rng);
    enc_mu.emplace(ps, e + "mu", c.temporal_width, c.latent_dim, true, rng);
    enc_sigma.emplace(ps, e + "sigma", c.temporal_width, c.latent_dim, true, rng);

    const std::string m = kMagnitudeDecoderPrefix;
    mag_trunk.emplace(c, ps, m, rng);
    mag_mean.emplace(ps, m + "tf_mean", mag_trunk->out_channels, rng);
    mag_sigma.emplace(ps, m + "tf_sigma", mag_trunk->out_channels, rng);

    const std::string p = kPhaseDecoderPrefix;
    pha_trunk.emplace(c, ps, p, rng);
    pha_te.emplace(nn::MakeTransitionExpand<T>(ps, p + "te", 1, rng, c.te_channels));
    pha_dense.emplace(ps, p + "db", pha_trunk->out_channels + c.te_channels, rng,
                      c.growth, c.dense_layers);
    pha_cos.emplace(ps, p + "tf_cos", pha_dense->out_channels(), rng);
    pha_sin.emplace(ps, p + "tf_sin", pha_dense->out_channels(), rng);
  }
};

namespace {

template <typename T>
void CheckSpectrogramTensor(const Tensor<T> &t, int num_bins, const char *what) {
  if (t.rank() != 3 || t.dim(1) != num_bins) {
    throw ShapeError(std::string(what) + " must be (B, " + std::to_string(num_bins) +
                     ", N), got " + ad::ShapeToString(t.shape()));
  }
}

// (B, R, N) -> (B, 1, R, N) and back.
template <typename T>
Tensor<T> AsMap(const Tensor<T> &t) {
  return ad::Reshape(t, {t.dim(0), 1, t.dim(1), t.dim(2)});
}
template <typename T>
Tensor<T> FromMap(const Tensor<T> &t) {
  return ad::Reshape(t, {t.dim(0), t.dim(1) * t.dim(2), t.dim(3)});
}

template <typename T>
Tensor<T> Log1p(const Tensor<T> &x) {
  return ad::Log(ad::AddScalar(x, T(1)));
}

}  // namespace

template <typename T>
VaeModel<T>::VaeModel(const ModelConfig &config, uint64_t seed) : config_(config) {
  config_.Validate();
  std::mt19937_64 rng(seed);
  nets_ = std::make_unique<Networks>(config_, params_, rng);
}

template <typename T>
VaeModel<T>::~VaeModel() = default;

template <typename T>
EncoderOutput<T> VaeModel<T>::Encode(const Tensor<T> &mag, const Tensor<T> &phase) const {
  CheckSpectrogramTensor(mag, config_.num_bins, "magnitude");
  CheckSpectrogramTensor(phase, config_.num_bins, "phase");
  if (mag.shape() != phase.shape()) {
    throw ShapeError("magnitude and phase shapes differ: " + ad::ShapeToString(mag.shape()) +
                     " vs " + ad::ShapeToString(phase.shape()));
  }
  const auto &n = *nets_;
  Tensor<T> x = ad::Concat<T>(
      {AsMap(Log1p(mag)), AsMap(ad::Cos(phase)), AsMap(ad::Sin(phase))}, 1);
  Tensor<T> h = n.enc_te->Forward(x);
  for (std::size_t i = 0; i < n.enc_dense.size(); ++i) {
    h = n.enc_down[i].Forward(n.enc_dense[i].Forward(h));
  }
  h = n.enc_temporal->Forward(n.enc_fc->Forward(h));
  return {FromMap(n.enc_mu->Forward(h)), FromMap(ad::Softplus(n.enc_sigma->Forward(h)))};
}

template <typename T>
MagnitudeDecoderOutput<T> VaeModel<T>::DecodeMagnitude(const Tensor<T> &z) const {
  CheckSpectrogramTensor(z, config_.latent_dim, "latent");
  const auto &n = *nets_;
  const Tensor<T> h = n.mag_trunk->Forward(z);
  return {FromMap(ad::Softplus(n.mag_mean->Forward(h))),
          FromMap(ad::Softplus(n.mag_sigma->Forward(h)))};
}

template <typename T>
Tensor<T> VaeModel<T>::DecodePhase(const Tensor<T> &z, const Tensor<T> &a_hat) const {
  CheckSpectrogramTensor(z, config_.latent_dim, "latent");
  CheckSpectrogramTensor(a_hat, config_.num_bins, "a_hat");
  if (z.dim(0) != a_hat.dim(0) || z.dim(2) != a_hat.dim(2)) {
    throw ShapeError("latent and a_hat disagree on batch or frames");
  }
  const auto &n = *nets_;
  const Tensor<T> trunk = n.pha_trunk->Forward(z);
  const Tensor<T> cond = n.pha_te->Forward(AsMap(Log1p(a_hat)));
  const Tensor<T> h = n.pha_dense->Forward(ad::Concat<T>({trunk, cond}, 1));
  return FromMap(ad::Atan2(n.pha_sin->Forward(h), n.pha_cos->Forward(h)));
}

template <typename T>
Reconstruction<T> VaeModel<T>::Reconstruct(const Tensor<T> &mag, const Tensor<T> &phase,
                                           const Tensor<T> *epsilon) const {
  Reconstruction<T> r;
  const EncoderOutput<T> q = Encode(mag, phase);
  r.mu_q = q.mu;
  r.sigma_q = q.sigma;
  r.z = epsilon ? ad::Reparameterize(q.mu, q.sigma, *epsilon) : q.mu;
  const MagnitudeDecoderOutput<T> m = DecodeMagnitude(r.z);
  r.a_hat = m.a_hat;
  r.sigma_mag = m.sigma;
  r.psi_hat = DecodePhase(r.z, r.a_hat);
  return r;
}

template <typename T>
Reconstruction<T> VaeModel<T>::Reconstruct(const dsp::MagnitudeSpectrogram &mag,
                                           const dsp::PhaseSpectrogram &phase) const {
  ad::NoGradGuard guard;
  return Reconstruct(ToTensor<T>(mag.values), ToTensor<T>(phase.values));
}

template <typename T>
dsp::ComplexSpectrogram VaeModel<T>::Generate(const Eigen::ArrayXXd &z,
                                              const dsp::AnalysisConfig &analysis,
                                              int sample_rate) const {
  if (analysis.NumBins() != config_.num_bins) {
    throw ConfigError("analysis config gives " + std::to_string(analysis.NumBins()) +
                      " bins, model expects " + std::to_string(config_.num_bins));
  }
  ad::NoGradGuard guard;
  const Tensor<T> zt = ToTensor<T>(z);
  const auto m = DecodeMagnitude(zt);
  const Tensor<T> psi = DecodePhase(zt, m.a_hat);
  dsp::MagnitudeSpectrogram mag{ToArray(m.a_hat)};
  dsp::PhaseSpectrogram pha{ToArray(psi)};
  return dsp::Recombine(mag, pha, analysis, sample_rate);
}

template <typename T>
ad::Archive VaeModel<T>::ToArchive() const {
  ad::Archive a;
  a.metadata["format"] = "phasevae-model";
  a.metadata["model_config"] = config_.ToString();
  a.tensors = params_.ToArchive();
  return a;
}

template <typename T>
void VaeModel<T>::Save(const std::string &path) const {
  ad::WriteArchive(path, ToArchive());
}

template <typename T>
void VaeModel<T>::LoadArchive(const ad::Archive &archive) {
  const ModelConfig stored = ModelConfig::FromString(archive.Meta("model_config"));
  if (!(stored == config_)) {
    throw DataError("checkpoint model config does not match:\n" + stored.ToString() +
                    "vs\n" + config_.ToString());
  }
  params_.LoadFrom(archive.tensors);
}

template <typename T>
std::unique_ptr<VaeModel<T>> VaeModel<T>::Load(const std::string &path) {
  const ad::Archive archive = ad::ReadArchive(path);
  auto model = std::make_unique<VaeModel<T>>(
      ModelConfig::FromString(archive.Meta("model_config")), 0);
  model->LoadArchive(archive);
  return model;
}

template <typename T>
Tensor<T> ToTensor(const Eigen::ArrayXXd &values, bool requires_grad) {
  const int rows = static_cast<int>(values.rows()), cols = static_cast<int>(values.cols());
  std::vector<T> data(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) data[r * cols + c] = static_cast<T>(values(r, c));
  }
  return Tensor<T>::FromData({1, rows, cols}, std::move(data), requires_grad);
}

template <typename T>
Eigen::ArrayXXd ToArray(const Tensor<T> &t, int b) {
  if (t.rank() != 3 || b < 0 || b >= t.dim(0)) {
    throw ShapeError("ToArray expects a (B, R, N) tensor, got " + ad::ShapeToString(t.shape()));
  }
  const int rows = t.dim(1), cols = t.dim(2);
  Eigen::ArrayXXd out(rows, cols);
  const auto data = t.data();
  const std::size_t base = static_cast<std::size_t>(b) * rows * cols;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) out(r, c) = data[base + r * cols + c];
  }
  return out;
}

template Tensor<float> Concentration(const Tensor<float> &);
template Tensor<double> Concentration(const Tensor<double> &);
template Tensor<float> ToTensor<float>(const Eigen::ArrayXXd &, bool);
template Tensor<double> ToTensor<double>(const Eigen::ArrayXXd &, bool);
template Eigen::ArrayXXd ToArray(const Tensor<float> &, int);
template Eigen::ArrayXXd ToArray(const Tensor<double> &, int);
template class VaeModel<float>;
template class VaeModel<double>;

}  // namespace model
}  // namespace phasevae
