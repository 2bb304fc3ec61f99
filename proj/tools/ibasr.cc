// ibasr/tools/ibasr.cc
//
// Command-line front end: gen-data, train, decode, score, ablate.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "ibasr/config_json.h"
#include "ibasr/datagen/corpus.h"
#include "ibasr/errors.h"
#include "ibasr/harness/evaluate.h"
#include "ibasr/harness/experiment.h"
#include "ibasr/harness/trainer.h"
#include "ibasr/metrics/metrics.h"

namespace fs = std::filesystem;
using namespace ibasr;

namespace {

nlohmann::json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path.string());
  os << text;
}

ExperimentConfig base_config(const std::string& config_path) {
  if (config_path.empty()) return {};
  try {
    return read_json(config_path).get<ExperimentConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(config_path + ": " + e.what());
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string curve_tsv(const std::vector<StepLog>& curve) {
  std::ostringstream os;
  os << "step\tepoch\tlr\ttotal\tctc\tinterctc\tib\ttransducer\n";
  for (const auto& s : curve) {
    os << s.step << '\t' << s.epoch << '\t' << s.lr << '\t' << s.total << '\t' << s.parts.ctc
       << '\t' << s.parts.interctc << '\t' << s.parts.ib << '\t' << s.parts.transducer
       << '\n';
  }
  return os.str();
}

// --- gen-data ---------------------------------------------------------------

struct GenDataArgs {
  std::string out, config;
  std::int64_t seed = -1;
};

int gen_data(const GenDataArgs& a) {
  const ExperimentConfig cfg = base_config(a.config);
  const std::uint64_t seed = a.seed >= 0 ? static_cast<std::uint64_t>(a.seed) : cfg.data_seed;
  const auto t0 = std::chrono::steady_clock::now();
  const SyntheticCorpus corpus = synth_corpus(cfg.data, seed);
  write_corpus(a.out, corpus);
  std::printf("wrote %zu train / %zu test utterances, %zu tokens, %zu rare words to %s "
              "(%.1fs)\n",
              corpus.train.size(), corpus.test.size(), corpus.lexicon.vocab().size(),
              corpus.rare_words.size(), a.out.c_str(), seconds_since(t0));
  return 0;
}

// --- train ------------------------------------------------------------------

struct TrainArgs {
  std::string data, out, config, preset = "ib";
  std::size_t max_steps = 0, epochs = 0;
  bool resume = false, quiet = false;
};

TrainedModel train_run(ExperimentConfig cfg, const SyntheticCorpus& corpus,
                       const fs::path& out, std::size_t max_steps, bool resume, bool quiet) {
  cfg.data = corpus.config;
  cfg.data_seed = corpus.seed;
  fs::create_directories(out);
  Trainer trainer(cfg, corpus.train, corpus.lexicon);
  const fs::path ckpt = out / "model.ckpt";
  if (resume && fs::exists(ckpt)) {
    trainer.restore(load_checkpoint(ckpt));
    std::printf("resumed at step %zu\n", trainer.step_count());
  }
  write_text(out / "config.json", nlohmann::json(trainer.config()).dump(2) + "\n");
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t total = trainer.total_steps();
  const std::size_t log_every = std::max<std::size_t>(1, cfg.log_every);
  trainer.run(
      max_steps == 0 ? SIZE_MAX : max_steps,
      [&](const StepLog& s) {
        if (quiet || (s.step % log_every != 0 && s.step != total)) return;
        std::printf("[%s] step %zu/%zu epoch %zu lr %.2e loss %.4f (ctc %.3f inter %.3f ib "
                    "%.3f tr %.3f) %.0fs\n",
                    cfg.preset.c_str(), s.step, total, s.epoch, s.lr, s.total, s.parts.ctc,
                    s.parts.interctc, s.parts.ib, s.parts.transducer, seconds_since(t0));
        std::fflush(stdout);
      },
      ckpt);
  write_text(out / "curve.tsv", curve_tsv(trainer.curve()));
  return {trainer.config(), trainer.params()};
}

int train(const TrainArgs& a) {
  ExperimentConfig cfg = make_preset(training_preset(a.preset), base_config(a.config));
  if (a.epochs > 0) cfg.optim.epochs = a.epochs;
  const SyntheticCorpus corpus = read_corpus(a.data);
  train_run(cfg, corpus, a.out, a.max_steps, a.resume, a.quiet);
  std::printf("checkpoint: %s\n", (fs::path(a.out) / "model.ckpt").c_str());
  return 0;
}

// --- decode / score -----------------------------------------------------------

struct DecodeArgs {
  std::string run, data, out;
  std::size_t bias_size = 10;
  bool joint = false;
  std::size_t beam = 0;
  double mu_ctc = -1.0;
  std::size_t limit = 0;
};

std::string system_name(const TrainedModel& m, bool joint) {
  const std::string base = m.config.model.biasing ? "ib" : "baseline";
  return joint ? base + "-joint" : base;
}

DecodeConfig decode_config(const TrainedModel& m, bool joint, std::size_t beam,
                           double mu_ctc) {
  DecodeConfig d = m.config.decode;
  if (beam > 0) d.k_beam = beam;
  if (mu_ctc >= 0.0) {
    d.mu_ctc = mu_ctc;
  } else if (joint) {
    d.mu_ctc = d.mu_ctc > 0.0 ? d.mu_ctc : DecodeConfig{}.mu_ctc;
  } else {
    d.mu_ctc = 0.0;
  }
  d.mu_tr = 1.0 - d.mu_ctc;
  return d;
}

struct DecodedFiles {
  fs::path nbest, refs;
};

DecodedFiles decode_to_files(const TrainedModel& m, const SyntheticCorpus& corpus,
                             std::size_t M, const DecodeConfig& d, const std::string& system,
                             const fs::path& dir, std::size_t limit) {
  const auto t0 = std::chrono::steady_clock::now();
  const Evaluation e =
      evaluate(m.params, m.config.model, corpus, M, d, m.config.seed, limit);
  DecodedFiles f{dir / ("nbest." + system + ".M" + std::to_string(M) + ".tsv"),
                 dir / ("refs.M" + std::to_string(M) + ".tsv")};
  std::ostringstream nb, rf;
  write_evaluation_nbest(nb, e, corpus.lexicon);
  write_references(rf, e.utterances);
  write_text(f.nbest, nb.str());
  write_text(f.refs, rf.str());
  std::printf("%s M=%zu: %s over %zu utterances (%.0fs)\n", system.c_str(), M,
              format_report(e.counts).c_str(), e.utterances.size(), seconds_since(t0));
  std::fflush(stdout);
  return f;
}

int decode(const DecodeArgs& a) {
  const TrainedModel m = load_trained_model(fs::path(a.run) / "model.ckpt");
  const SyntheticCorpus corpus = read_corpus(a.data);
  const bool joint = a.joint || a.mu_ctc > 0.0;
  const DecodeConfig d = decode_config(m, joint, a.beam, a.mu_ctc);
  const fs::path dir = a.out.empty() ? fs::path(a.run) / "decode" : fs::path(a.out);
  const auto files =
      decode_to_files(m, corpus, a.bias_size, d, system_name(m, joint), dir, a.limit);
  std::printf("N-best: %s\nreferences: %s\n", files.nbest.c_str(), files.refs.c_str());
  return 0;
}

struct ScoreArgs {
  std::string run, data, nbest, refs;
  std::vector<std::size_t> sizes{0, 10, 50, 100};
  bool joint = false;
  std::size_t limit = 0;
};

ErrorBreakdown score_paths(const fs::path& nbest, const fs::path& refs) {
  std::ifstream n(nbest), r(refs);
  if (!n) throw DataError("cannot open " + nbest.string());
  if (!r) throw DataError("cannot open " + refs.string());
  return score_files(n, r);
}

int score(const ScoreArgs& a) {
  if (!a.nbest.empty() || !a.refs.empty()) {
    if (a.nbest.empty() || a.refs.empty()) {
      throw ConfigError("--nbest and --refs must be given together");
    }
    std::printf("%s\n", format_report(score_paths(a.nbest, a.refs)).c_str());
    return 0;
  }
  if (a.run.empty() || a.data.empty()) throw ConfigError("score needs --run and --data");
  const TrainedModel m = load_trained_model(fs::path(a.run) / "model.ckpt");
  const SyntheticCorpus corpus = read_corpus(a.data);
  const std::string system = system_name(m, a.joint);
  const DecodeConfig d = decode_config(m, a.joint, 0, -1.0);
  const fs::path dir = fs::path(a.run) / "decode";
  std::vector<ScoreRow> rows;
  for (std::size_t M : a.sizes) {
    const auto files = decode_to_files(m, corpus, M, d, system, dir, a.limit);
    rows.push_back({system, M, score_paths(files.nbest, files.refs)});
  }
  std::ostringstream table;
  write_score_table(table, rows);
  write_text(fs::path(a.run) / ("report." + system + ".tsv"), table.str());
  write_text(fs::path(a.run) / ("report." + system + ".json"),
             score_rows_to_json(rows).dump(2) + "\n");
  std::cout << table.str();
  return 0;
}

// --- ablate -------------------------------------------------------------------

struct AblateArgs {
  std::string data, out, config;
  std::size_t bias_size = 100;
  std::size_t limit = 0;
  std::size_t max_steps = 0;
};

int ablate(const AblateArgs& a) {
  const SyntheticCorpus corpus = read_corpus(a.data);
  const ExperimentConfig base = make_preset("ib", base_config(a.config));
  const std::vector<std::vector<std::size_t>> tap_sets{{3}, {2, 4}, {1, 2, 3, 4, 5}};
  std::vector<ScoreRow> rows;
  for (const auto& taps : tap_sets) {
    ExperimentConfig cfg = base;
    cfg.model.taps = taps;
    std::string name = "ib-K";
    for (std::size_t i = 0; i < taps.size(); ++i) name += (i ? "," : "") + std::to_string(taps[i]);
    const fs::path dir = fs::path(a.out) / name;
    const TrainedModel m = train_run(cfg, corpus, dir, a.max_steps, true, true);
    auto files = decode_to_files(m, corpus, a.bias_size, decode_config(m, false, 0, -1.0),
                                 name, dir / "decode", a.limit);
    rows.push_back({name, a.bias_size, score_paths(files.nbest, files.refs)});
    if (taps == std::vector<std::size_t>{2, 4}) {
      files = decode_to_files(m, corpus, a.bias_size, decode_config(m, true, 0, -1.0),
                              name + "-joint", dir / "decode", a.limit);
      rows.push_back({name + "-joint", a.bias_size, score_paths(files.nbest, files.refs)});
    }
  }
  std::ostringstream table;
  write_score_table(table, rows);
  write_text(fs::path(a.out) / "ablation.tsv", table.str());
  write_text(fs::path(a.out) / "ablation.json", score_rows_to_json(rows).dump(2) + "\n");
  std::cout << table.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contextual transducer ASR with intermediate biasing loss"};
  app.require_subcommand(1);

  GenDataArgs gd;
  auto* c_gen = app.add_subcommand("gen-data", "Generate the synthetic corpus");
  c_gen->add_option("--out", gd.out, "Corpus directory")->required();
  c_gen->add_option("--config", gd.config, "Experiment config JSON (uses data, data_seed)")
      ->check(CLI::ExistingFile);
  c_gen->add_option("--seed", gd.seed, "Override the data seed");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train a model");
  c_train->add_option("--data", tr.data, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  c_train->add_option("--out", tr.out, "Run directory")->required();
  c_train->add_option("--preset", tr.preset, "baseline | ib | ib-joint")
      ->check(CLI::IsMember(preset_names()));
  c_train->add_option("--config", tr.config, "Experiment config JSON")->check(CLI::ExistingFile);
  c_train->add_option("--max-steps", tr.max_steps, "Stop after this many updates");
  c_train->add_option("--epochs", tr.epochs, "Override the epoch budget");
  c_train->add_flag("--resume", tr.resume, "Continue from the run's checkpoint");
  c_train->add_flag("--quiet", tr.quiet, "No per-step log");

  DecodeArgs dc;
  auto* c_dec = app.add_subcommand("decode", "Decode the test set to an N-best file");
  c_dec->add_option("--run", dc.run, "Run directory")->required()->check(CLI::ExistingDirectory);
  c_dec->add_option("--data", dc.data, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  c_dec->add_option("--bias-size", dc.bias_size, "Test bias list size M");
  c_dec->add_flag("--joint", dc.joint, "Add the CTC prefix score");
  c_dec->add_option("--beam", dc.beam, "Beam size")->check(CLI::PositiveNumber);
  c_dec->add_option("--mu-ctc", dc.mu_ctc, "CTC weight (transducer weight is 1 - this)")
      ->check(CLI::Range(0.0, 1.0));
  c_dec->add_option("--limit", dc.limit, "Decode only the first N test utterances");
  c_dec->add_option("--out", dc.out, "Output directory (default RUN/decode)");

  ScoreArgs sc;
  auto* c_score = app.add_subcommand("score", "Decode across bias sizes and write the report");
  c_score->add_option("--run", sc.run, "Run directory")->check(CLI::ExistingDirectory);
  c_score->add_option("--data", sc.data, "Corpus directory")->check(CLI::ExistingDirectory);
  c_score->add_option("--sizes", sc.sizes, "Bias sizes")->delimiter(',');
  c_score->add_flag("--joint", sc.joint, "Joint CTC/transducer decoding");
  c_score->add_option("--limit", sc.limit, "Use only the first N test utterances");
  c_score->add_option("--nbest", sc.nbest, "Score an existing N-best file")->check(CLI::ExistingFile);
  c_score->add_option("--refs", sc.refs, "Reference file for --nbest")->check(CLI::ExistingFile);

  AblateArgs ab;
  auto* c_abl = app.add_subcommand("ablate", "Tap-layer and decoder ablations");
  c_abl->add_option("--data", ab.data, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  c_abl->add_option("--out", ab.out, "Output directory")->required();
  c_abl->add_option("--config", ab.config, "Experiment config JSON")->check(CLI::ExistingFile);
  c_abl->add_option("--bias-size", ab.bias_size, "Test bias list size M");
  c_abl->add_option("--limit", ab.limit, "Use only the first N test utterances");
  c_abl->add_option("--max-steps", ab.max_steps, "Cap training updates per variant");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*c_gen) return gen_data(gd);
    if (*c_train) return train(tr);
    if (*c_dec) return decode(dc);
    if (*c_score) return score(sc);
    if (*c_abl) return ablate(ab);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
