// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Command-line front end: extract, train, reconstruct, gla, evaluate,
// export-spectrograms, ll-table.
//
// Exit codes: 0 success, 2 configuration error, 3 data or I/O error,
// 4 numerical divergence, 1 anything else.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "phasevae/autodiff/archive.h"
#include "phasevae/error.h"
#include "phasevae/eval/evaluation.h"
#include "phasevae/gla/griffin_lim.h"
#include "phasevae/io/export.h"
#include "phasevae/io/features.h"
#include "phasevae/io/manifest.h"
#include "phasevae/io/run_config.h"
#include "phasevae/io/wav.h"
#include "phasevae/train/train.h"

namespace phasevae {
namespace cli {
namespace {

namespace fs = std::filesystem;

constexpr char kFeatureManifest[] = "features.tsv";

// Options shared by every command.
struct Common {
  std::string preset = "paper";
  std::string config_path;
  std::vector<std::string> overrides;
  int channel = -1;
  int sample_rate = 16000;

  void Add(CLI::App *cmd) {
    cmd->add_option("--preset", preset, "Base preset: toy or paper")
        ->check(CLI::IsMember({"toy", "paper"}));
    cmd->add_option("--config", config_path, "Run config file (replaces --preset)");
    cmd->add_option("--set", overrides, "key=value override, repeatable");
    cmd->add_option("--channel", channel, "Channel of multichannel WAV input (default: mono)");
    cmd->add_option("--sample-rate", sample_rate, "Required input rate in Hz, 0 accepts any");
  }

  io::RunConfig Resolve() const {
    io::RunConfig c =
        config_path.empty() ? io::RunConfig::Preset(preset) : io::RunConfig::Load(config_path);
    for (const auto &o : overrides) c.SetAssignment(o);
    return c;
  }

  io::WavReadOptions Wav() const { return {channel, sample_rate}; }
};

// Where utterances come from: a WAV manifest, an extract output directory,
// or the built-in harmonic test corpus.
struct DataSource {
  std::string manifest;
  std::string features;
  int toy_corpus = 0;
  double toy_seconds = 0.5;
  uint64_t toy_seed = 1;

  void Add(CLI::App *cmd, const std::string &prefix = "") {
    cmd->add_option("--" + prefix + "manifest", manifest, "id<TAB>wav manifest");
    cmd->add_option("--" + prefix + "features", features, "Directory written by extract");
    cmd->add_option("--" + prefix + "toy-corpus", toy_corpus,
                    "Use N synthetic harmonic utterances");
    cmd->add_option("--" + prefix + "toy-seconds", toy_seconds, "Length of each toy utterance");
    cmd->add_option("--" + prefix + "toy-seed", toy_seed, "Seed of the toy corpus");
  }

  bool empty() const { return manifest.empty() && features.empty() && toy_corpus == 0; }

  void Record(io::RunConfig &c, const std::string &prefix) const {
    if (!manifest.empty()) c.paths[prefix + "manifest"] = manifest;
    if (!features.empty()) c.paths[prefix + "features"] = features;
    if (toy_corpus > 0) {
      std::ostringstream os;
      os.precision(17);
      os << "toy:" << toy_corpus << ":" << toy_seconds << ":" << toy_seed;
      c.paths[prefix + "corpus"] = os.str();
    }
  }
};

struct Utterances {
  std::vector<std::string> ids;
  std::vector<dsp::AudioBuffer> audio;  // empty when loaded from features
  train::Dataset dataset;
};

Utterances Load(const DataSource &src, const dsp::AnalysisConfig &analysis,
                const io::WavReadOptions &wav) {
  const int given = (!src.manifest.empty()) + (!src.features.empty()) + (src.toy_corpus > 0);
  if (given != 1) {
    throw ConfigError("give exactly one of --manifest, --features, --toy-corpus");
  }
  Utterances u;
  if (src.toy_corpus > 0) {
    u.audio = train::MakeHarmonicCorpus(src.toy_corpus, src.toy_seconds, 16000, src.toy_seed);
    for (int i = 0; i < src.toy_corpus; ++i) u.ids.push_back("toy" + std::to_string(i));
    u.dataset = train::Dataset::FromAudio(u.ids, u.audio, analysis);
  } else if (!src.manifest.empty()) {
    io::Manifest m = io::ReadManifest(src.manifest);
    u.audio = io::LoadManifestAudio(m, analysis, wav);
    for (const auto &e : m.entries) u.ids.push_back(e.id);
    u.dataset = train::Dataset::FromAudio(u.ids, u.audio, analysis);
  } else {
    const io::Manifest m = io::ReadManifest((fs::path(src.features) / kFeatureManifest).string());
    for (const auto &e : m.entries) {
      io::FeatureRecord r = io::ReadFeatures(e.path, &analysis);
      u.ids.push_back(e.id);
      u.dataset.utterances.push_back({e.id, std::move(r.mag), std::move(r.phase)});
    }
  }
  if (u.ids.empty()) throw DataError("no utterances");
  return u;
}

void WriteRunConfig(const io::RunConfig &c, const std::string &path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  c.Save(path);
}

std::string SidecarConfig(const std::string &output_file) {
  return output_file + ".run_config.txt";
}

// ---------------------------------------------------------------- extract

struct ExtractArgs {
  Common common;
  DataSource source;
  std::string out;
};

int Extract(const ExtractArgs &a) {
  io::RunConfig c = a.common.Resolve();
  c.analysis.Validate();
  fs::create_directories(a.out);
  Utterances u;
  if (a.source.toy_corpus > 0) {
    // The toy corpus is also written as audio with a manifest so later
    // commands can read it like any other data.
    u = Load(a.source, c.analysis, a.common.Wav());
    io::Manifest wavs;
    fs::create_directories(fs::path(a.out) / "audio");
    for (std::size_t i = 0; i < u.ids.size(); ++i) {
      const std::string rel = "audio/" + u.ids[i] + ".wav";
      io::WriteWav((fs::path(a.out) / rel).string(), u.audio[i]);
      wavs.entries.push_back({u.ids[i], rel, 0});
    }
    io::WriteManifest((fs::path(a.out) / "manifest.tsv").string(), wavs);
  } else if (!a.source.manifest.empty()) {
    u = Load(a.source, c.analysis, a.common.Wav());
  } else {
    throw ConfigError("extract needs --manifest or --toy-corpus");
  }
  io::Manifest feats;
  for (std::size_t i = 0; i < u.ids.size(); ++i) {
    // Manifest paths are relative to the manifest's directory.
    const std::string rel = u.ids[i] + ".feat";
    io::WriteFeatures((fs::path(a.out) / rel).string(),
                      io::ExtractFeatures(u.ids[i], u.audio[i], c.analysis));
    feats.entries.push_back({u.ids[i], rel, 0});
  }
  io::WriteManifest((fs::path(a.out) / kFeatureManifest).string(), feats);
  a.source.Record(c, "");
  c.paths["out_dir"] = a.out;
  WriteRunConfig(c, (fs::path(a.out) / io::kRunConfigFile).string());
  std::cout << "extracted " << u.ids.size() << " utterances to " << a.out << "\n";
  return 0;
}

// ------------------------------------------------------------------ train

struct TrainArgs {
  Common common;
  DataSource source, validation;
  std::string out;
  std::string stage1_checkpoint;
  bool resume = false;
  bool double_precision = false;
  bool log_wall_time = false;
  // Optional TrainConfig overrides, mirroring every field.
  std::optional<double> alpha, beta1, beta2, eps, clip;
  std::optional<int> minibatch_frames, segment_frames, utterances_per_batch, patience,
      max_epochs, stage;
  std::optional<bool> augment_phase;
  std::optional<std::string> scheme;
  std::optional<uint64_t> seed;
};

void ApplyTrainFlags(const TrainArgs &a, train::TrainConfig &t) {
  if (a.alpha) t.alpha = *a.alpha;
  if (a.beta1) t.beta1 = *a.beta1;
  if (a.beta2) t.beta2 = *a.beta2;
  if (a.eps) t.eps = *a.eps;
  if (a.clip) t.clip_threshold = *a.clip;
  if (a.segment_frames) t.segment_frames = *a.segment_frames;
  if (a.utterances_per_batch) t.utterances_per_batch = *a.utterances_per_batch;
  if (a.segment_frames || a.utterances_per_batch) {
    t.minibatch_frames = t.segment_frames * t.utterances_per_batch;
  }
  if (a.minibatch_frames) t.minibatch_frames = *a.minibatch_frames;
  if (a.patience) t.patience_epochs = *a.patience;
  if (a.max_epochs) t.max_epochs = *a.max_epochs;
  if (a.augment_phase) t.augment_phase = *a.augment_phase;
  if (a.stage) {
    if (*a.stage != 1 && *a.stage != 2) throw ConfigError("--stage must be 1 or 2");
    t.stage = static_cast<train::Stage>(*a.stage);
  }
  if (a.scheme) {
    t.scheme = losses::LossScheme::FromName(*a.scheme);
  } else if (a.stage) {
    // A bare --stage picks the matching default scheme family.
    if (t.stage == train::Stage::kOne) t.scheme = losses::LossScheme::Get(losses::SchemeId::kM);
  }
  if (a.seed) t.seed = *a.seed;
}

template <typename T>
int RunTraining(const TrainArgs &a, io::RunConfig &c) {
  const Utterances train_set = Load(a.source, c.analysis, a.common.Wav());
  const Utterances valid_set =
      a.validation.empty() ? Utterances{} : Load(a.validation, c.analysis, a.common.Wav());
  const train::Dataset &valid = a.validation.empty() ? train_set.dataset : valid_set.dataset;

  model::VaeModel<T> model(c.model, c.train.seed);
  if (c.train.stage == train::Stage::kTwo && !a.resume) {
    if (a.stage1_checkpoint.empty()) {
      throw ConfigError("stage 2 needs a stage-1 checkpoint: pass --stage1-checkpoint");
    }
    train::LoadStageOne(model, a.stage1_checkpoint);
  }
  fs::create_directories(a.out);
  std::ofstream log((fs::path(a.out) / "train_log.jsonl").string(),
                    a.resume ? std::ios::app : std::ios::trunc);
  if (!log) throw IoError("cannot write the training log in " + a.out);
  train::TrainerOptions opts;
  opts.out_dir = a.out;
  opts.log = &log;
  opts.log_wall_time = a.log_wall_time;
  train::Trainer<T> trainer(model, c.train, opts);
  if (a.resume) trainer.Resume((fs::path(a.out) / train::kStateCheckpoint).string());
  const train::TrainResult r = trainer.Run(train_set.dataset, valid);
  std::cout << "stage " << static_cast<int>(c.train.stage) << " (" << c.train.scheme.name()
            << "): " << r.epochs_run << " epochs, best validation " << r.best_validation.total
            << " at epoch " << r.best_epoch << (r.early_stopped ? " (early stop)" : "") << "\n"
            << "checkpoint: " << (fs::path(a.out) / train::kBestCheckpoint).string() << "\n";
  return 0;
}

int Train(const TrainArgs &a) {
  io::RunConfig c = a.common.Resolve();
  ApplyTrainFlags(a, c.train);
  if (c.train.stage == train::Stage::kTwo && !a.resume && a.stage1_checkpoint.empty()) {
    throw ConfigError("stage 2 needs a stage-1 checkpoint: pass --stage1-checkpoint");
  }
  a.source.Record(c, "");
  a.validation.Record(c, "validation_");
  c.paths["out_dir"] = a.out;
  if (!a.stage1_checkpoint.empty()) c.paths["stage1_checkpoint"] = a.stage1_checkpoint;
  c.Validate();
  WriteRunConfig(c, (fs::path(a.out) / io::kRunConfigFile).string());
  return a.double_precision ? RunTraining<double>(a, c) : RunTraining<float>(a, c);
}

// ------------------------------------------------------------ reconstruct

struct ReconstructArgs {
  Common common;
  std::string checkpoint, input, output;
  int gla = 0;
  std::string phase = "model";
  uint64_t seed = 0;
};

std::unique_ptr<model::VaeModel<double>> LoadModel(const std::string &path,
                                                   const dsp::AnalysisConfig &analysis) {
  if (!fs::exists(path)) throw ConfigError("checkpoint " + path + " does not exist");
  auto m = model::VaeModel<double>::Load(path);
  if (m->config().num_bins != analysis.NumBins()) {
    throw ConfigError("checkpoint has F=" + std::to_string(m->config().num_bins) +
                      ", analysis gives " + std::to_string(analysis.NumBins()) +
                      "; pass the matching --preset or --config");
  }
  return m;
}

int Reconstruct(const ReconstructArgs &a) {
  io::RunConfig c = a.common.Resolve();
  c.paths["checkpoint"] = a.checkpoint;
  c.paths["input"] = a.input;
  c.paths["output"] = a.output;
  const auto model = LoadModel(a.checkpoint, c.analysis);
  c.model = model->config();
  c.Validate();
  const dsp::AudioBuffer audio = io::ReadWav(a.input, a.common.Wav());
  const auto [mag, phase] = dsp::Decompose(dsp::Stft(audio, c.analysis));
  const auto rec = model->Reconstruct(mag, phase);
  dsp::MagnitudeSpectrogram a_hat{model::ToArray(rec.a_hat)};
  dsp::PhaseSpectrogram init;
  if (a.phase == "model") {
    init.values = model::ToArray(rec.psi_hat);
  } else {
    gla::GlaConfig g;
    g.init = gla::PhaseInit::kRandomUniform;
    g.seed = a.seed;
    init = gla::InitialPhase(a_hat, nullptr, g);
  }
  const gla::GlaResult out =
      gla::Gla(a_hat, init, c.analysis, a.gla, audio.samples.size(), audio.sample_rate);
  io::WriteWav(a.output, out.audio);
  WriteRunConfig(c, SidecarConfig(a.output));
  std::cout << "wrote " << a.output << " (" << a.gla << " GLA iterations)\n";
  return 0;
}

// -------------------------------------------------------------------- gla

struct GlaArgs {
  Common common;
  std::string input, output, audio_out, init = "given";
  int iterations = 100;
  uint64_t seed = 0;
};

int RunGla(const GlaArgs &a) {
  io::RunConfig c = a.common.Resolve();
  gla::GlaConfig g;
  g.iterations = a.iterations;
  g.init = gla::ParsePhaseInit(a.init);
  g.seed = a.seed;
  g.Validate();
  io::FeatureRecord rec = io::ReadFeatures(a.input);
  c.analysis = rec.analysis;
  c.paths["input"] = a.input;
  c.paths["output"] = a.output;
  if (!a.audio_out.empty()) c.paths["audio_out"] = a.audio_out;
  const double before = gla::Inconsistency(
      rec.mag, gla::InitialPhase(rec.mag, &rec.phase, g), rec.analysis);
  const gla::GlaResult out = gla::Gla(rec.mag, &rec.phase, rec.analysis, g);
  const double after = gla::Inconsistency(rec.mag, out.phase, rec.analysis);
  rec.phase = out.phase;
  io::WriteFeatures(a.output, rec);
  if (!a.audio_out.empty()) io::WriteWav(a.audio_out, out.audio);
  WriteRunConfig(c, SidecarConfig(a.output));
  std::cout << "inconsistency " << before << " -> " << after << " after " << g.iterations
            << " iterations\n";
  return 0;
}

// --------------------------------------------------------------- evaluate

struct EvaluateArgs {
  Common common;
  DataSource source;
  std::string checkpoint, out, scheme = "J4", model_id;
  int gla = 0;
  uint64_t seed = 0;
};

int Evaluate(const EvaluateArgs &a) {
  io::RunConfig c = a.common.Resolve();
  const auto scheme = losses::LossScheme::FromName(a.scheme);
  const auto model = LoadModel(a.checkpoint, c.analysis);
  c.model = model->config();
  c.train.scheme = scheme;
  c.train.stage = scheme.is_joint() ? train::Stage::kTwo : train::Stage::kOne;
  a.source.Record(c, "");
  c.paths["checkpoint"] = a.checkpoint;
  c.paths["out_dir"] = a.out;
  c.Validate();
  if (a.source.toy_corpus == 0 && a.source.manifest.empty()) {
    throw ConfigError("evaluate needs audio: pass --manifest or --toy-corpus");
  }
  const Utterances u = Load(a.source, c.analysis, a.common.Wav());
  eval::EvalOptions opts;
  opts.seed = a.seed;
  opts.gla_iterations = a.gla;
  std::vector<eval::UtteranceReport> reports;
  std::string lines;
  for (std::size_t i = 0; i < u.ids.size(); ++i) {
    reports.push_back(
        eval::EvaluateUtterance(*model, u.ids[i], u.audio[i], c.analysis, scheme, opts));
    lines += reports.back().ToJson() + "\n";
  }
  const std::string id =
      a.model_id.empty() ? fs::path(a.checkpoint).parent_path().filename().string() : a.model_id;
  eval::AggregateReport agg = eval::Aggregate(reports, id, scheme.name());
  agg.gla_iterations = a.gla;
  fs::create_directories(a.out);
  ad::WriteFileAtomic((fs::path(a.out) / "reports.jsonl").string(), lines);
  ad::WriteFileAtomic((fs::path(a.out) / "aggregate.json").string(), agg.ToJson() + "\n");
  const std::string table = eval::LogLikelihoodTable({agg});
  ad::WriteFileAtomic((fs::path(a.out) / "table.txt").string(), table);
  WriteRunConfig(c, (fs::path(a.out) / io::kRunConfigFile).string());
  std::cout << table;
  return 0;
}

// ---------------------------------------------------- export-spectrograms

struct ExportArgs {
  Common common;
  std::string input, features, checkpoint, out;
};

int Export(const ExportArgs &a) {
  io::RunConfig c = a.common.Resolve();
  if (a.input.empty() == a.features.empty()) {
    throw ConfigError("give exactly one of --input (WAV) or --features (feature file)");
  }
  io::FeatureRecord rec;
  if (!a.input.empty()) {
    c.analysis.Validate();
    rec = io::ExtractFeatures(fs::path(a.input).stem().string(),
                              io::ReadWav(a.input, a.common.Wav()), c.analysis);
    c.paths["input"] = a.input;
  } else {
    rec = io::ReadFeatures(a.features);
    c.analysis = rec.analysis;
    c.paths["features"] = a.features;
  }
  auto files = io::ExportPanels(a.out, "true", rec.mag, rec.phase);
  if (!a.checkpoint.empty()) {
    const auto model = LoadModel(a.checkpoint, c.analysis);
    c.model = model->config();
    c.paths["checkpoint"] = a.checkpoint;
    const auto r = model->Reconstruct(rec.mag, rec.phase);
    const auto more = io::ExportPanels(a.out, "reconstructed",
                                       dsp::MagnitudeSpectrogram{model::ToArray(r.a_hat)},
                                       dsp::PhaseSpectrogram{model::ToArray(r.psi_hat)});
    files.insert(files.end(), more.begin(), more.end());
  }
  c.paths["out_dir"] = a.out;
  WriteRunConfig(c, (fs::path(a.out) / io::kRunConfigFile).string());
  for (const auto &f : files) std::cout << f << "\n";
  return 0;
}

// --------------------------------------------------------------- ll-table

struct TableArgs {
  std::vector<std::string> reports;
  std::string out;
};

int LlTable(const TableArgs &a) {
  std::vector<eval::AggregateReport> rows;
  for (const auto &r : a.reports) {
    fs::path p(r);
    if (fs::is_directory(p)) p /= "aggregate.json";
    std::ifstream in(p);
    if (!in) throw IoError("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    rows.push_back(eval::AggregateReport::FromJson(ss.str()));
  }
  std::string text = eval::LogLikelihoodTable(rows);
  const std::string gla = eval::GlaInconsistencyReport(rows);
  if (!gla.empty()) text += "\nGLA post-processing check:\n" + gla;
  if (!a.out.empty()) ad::WriteFileAtomic(a.out, text);
  std::cout << text;
  return 0;
}

int ExitCode(const Error &e) {
  switch (e.kind()) {
    case ErrorKind::kConfig:
      return 2;
    case ErrorKind::kData:
    case ErrorKind::kIo:
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kShape:
      return 3;
    case ErrorKind::kNumerical:
      return 4;
  }
  return 1;
}

}  // namespace

int Main(int argc, char **argv) {
  CLI::App app{"Joint magnitude/phase spectrogram VAE toolkit"};
  app.require_subcommand(1);

  ExtractArgs ex;
  auto *extract = app.add_subcommand("extract", "Cache STFT features of a manifest or toy corpus");
  ex.common.Add(extract);
  ex.source.Add(extract);
  extract->add_option("--out", ex.out, "Output directory")->required();

  TrainArgs tr;
  auto *train = app.add_subcommand("train", "Train stage 1 (scheme M) or stage 2 (J1..J7)");
  tr.common.Add(train);
  tr.source.Add(train);
  tr.validation.Add(train, "validation-");
  train->add_option("--out", tr.out, "Output directory for checkpoints and logs")->required();
  train->add_option("--stage1-checkpoint", tr.stage1_checkpoint, "Stage-1 best.ckpt (stage 2)");
  train->add_flag("--resume", tr.resume, "Continue from <out>/state.ckpt");
  train->add_flag("--double", tr.double_precision, "64-bit arithmetic");
  train->add_flag("--log-wall-time", tr.log_wall_time, "Add elapsed seconds to log records");
  train->add_option("--stage", tr.stage, "1 or 2");
  train->add_option("--scheme", tr.scheme, "M, J1 .. J7");
  train->add_option("--seed", tr.seed, "Seed of initialization and sampling");
  train->add_option("--alpha", tr.alpha, "Adam step size");
  train->add_option("--beta1", tr.beta1, "Adam beta1");
  train->add_option("--beta2", tr.beta2, "Adam beta2");
  train->add_option("--eps", tr.eps, "Adam epsilon");
  train->add_option("--clip", tr.clip, "Gradient norm threshold");
  train->add_option("--minibatch-frames", tr.minibatch_frames, "Frames per minibatch");
  train->add_option("--segment-frames", tr.segment_frames, "Frames per segment");
  train->add_option("--utterances-per-batch", tr.utterances_per_batch, "Segments per minibatch");
  train->add_option("--patience", tr.patience, "Early-stopping patience in epochs");
  train->add_option("--max-epochs", tr.max_epochs, "Epoch limit");
  train->add_option("--augment-phase", tr.augment_phase, "Random phase offsets (true/false)");

  ReconstructArgs rc;
  auto *recon = app.add_subcommand("reconstruct", "Analysis, model and synthesis of one WAV");
  rc.common.Add(recon);
  recon->add_option("--checkpoint", rc.checkpoint, "Model checkpoint")->required();
  recon->add_option("--input", rc.input, "Input WAV")->required();
  recon->add_option("--output", rc.output, "Output WAV")->required();
  recon->add_option("--gla", rc.gla, "Griffin-Lim iterations after decoding")
      ->check(CLI::NonNegativeNumber);
  recon->add_option("--phase", rc.phase, "Phase source: model or random")
      ->check(CLI::IsMember({"model", "random"}));
  recon->add_option("--seed", rc.seed, "Seed for --phase random");

  GlaArgs gl;
  auto *glacmd = app.add_subcommand("gla", "Griffin-Lim on a feature file");
  gl.common.Add(glacmd);
  glacmd->add_option("--input", gl.input, "Input feature file")->required();
  glacmd->add_option("--output", gl.output, "Output feature file")->required();
  glacmd->add_option("--audio-out", gl.audio_out, "Also write the signal as WAV");
  glacmd->add_option("--iterations", gl.iterations, "Iteration count");
  glacmd->add_option("--init", gl.init, "given, random or zero")
      ->check(CLI::IsMember({"given", "random", "zero"}));
  glacmd->add_option("--seed", gl.seed, "Seed for --init random");

  EvaluateArgs ev;
  auto *evaluate = app.add_subcommand("evaluate", "Per-utterance log-likelihood reports");
  ev.common.Add(evaluate);
  ev.source.Add(evaluate);
  evaluate->add_option("--checkpoint", ev.checkpoint, "Model checkpoint")->required();
  evaluate->add_option("--out", ev.out, "Report directory")->required();
  evaluate->add_option("--scheme", ev.scheme, "M (random phase) or J1 .. J7");
  evaluate->add_option("--gla", ev.gla, "Griffin-Lim iterations before resynthesis");
  evaluate->add_option("--seed", ev.seed, "Seed of the random phase for scheme M");
  evaluate->add_option("--model-id", ev.model_id, "Row label (default: checkpoint directory)");

  ExportArgs xp;
  auto *exp = app.add_subcommand("export-spectrograms", "Write PGM/CSV spectrogram panels");
  xp.common.Add(exp);
  exp->add_option("--input", xp.input, "Input WAV");
  exp->add_option("--features", xp.features, "Input feature file");
  exp->add_option("--checkpoint", xp.checkpoint, "Also export the model reconstruction");
  exp->add_option("--out", xp.out, "Output directory")->required();

  TableArgs tb;
  auto *table = app.add_subcommand("ll-table", "Log-likelihood table across evaluate outputs");
  table->add_option("reports", tb.reports, "evaluate output directories or aggregate.json")
      ->required();
  table->add_option("--out", tb.out, "Also write the table to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    if (*extract) return Extract(ex);
    if (*train) return Train(tr);
    if (*recon) return Reconstruct(rc);
    if (*glacmd) return RunGla(gl);
    if (*evaluate) return Evaluate(ev);
    if (*exp) return Export(xp);
    if (*table) return LlTable(tb);
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return ExitCode(e);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace cli
}  // namespace phasevae

int main(int argc, char **argv) { return phasevae::cli::Main(argc, argv); }
