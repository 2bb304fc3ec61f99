// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ibasr/biasing/cb_attention.h"
#include "ibasr/context/context_encoder.h"
#include "ibasr/context/ib_target.h"
#include "ibasr/decoding/decoding.h"
#include "ibasr/harness/evaluate.h"
#include "ibasr/harness/experiment.h"
#include "ibasr/harness/trainer.h"
#include "ibasr/losses/ctc.h"
#include "ibasr/losses/objectives.h"
#include "ibasr/losses/rnnt.h"
#include "ibasr/metrics/metrics.h"
#include "ibasr/model/transducer_model.h"
#include "ibasr/numerics/grad_check.h"
#include "ibasr/numerics/ops.h"
#include "support/oracles.h"

namespace ibasr {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const Outcome& o) {
  if (!o.pass) ++failures;
  std::printf("criterion %d [%s] %s: %s\n", id, o.pass ? "PASS" : "FAIL", title.c_str(),
              o.detail.c_str());
  std::fflush(stdout);
}

void run(int id, const std::string& title, const std::function<Outcome()>& body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  report(id, title, o);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

std::vector<int> random_target(std::size_t U, std::size_t V, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(1, static_cast<int>(V) - 1);
  std::vector<int> y(U);
  for (auto& v : y) v = pick(rng);
  return y;
}

Tensor randn(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  return oracle::random_logits(r, c, rng);
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  const auto x = a.values(), y = b.values();
  return std::equal(x.begin(), x.end(), y.begin());
}

// --- 1 ----------------------------------------------------------------------

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::size_t ctc_cases = 0, rnnt_cases = 0;
  double worst = 0.0;
  while (ctc_cases < 150) {
    const std::size_t T = 1 + rng() % 5, V = 2 + rng() % 2, U = rng() % 4;
    const auto y = random_target(U, V, rng);
    if (ctc_min_frames(y) > T) continue;
    const Tensor lp = oracle::log_softmax_rows(randn(T, V, rng));
    worst = std::max(worst, std::abs(-ctc_loss(lp, y).loss - oracle::ctc_log_likelihood(lp, y)));
    ++ctc_cases;
  }
  while (rnnt_cases < 150) {
    const std::size_t T = 1 + rng() % 5, V = 2 + rng() % 2, U = rng() % 4;
    const auto y = random_target(U, V, rng);
    const Tensor logits = randn(T * (U + 1), V, rng);
    const double ll = oracle::rnnt_log_likelihood(oracle::log_softmax_rows(logits), y);
    worst = std::max(worst, std::abs(-rnnt_loss(logits, y).loss - ll));
    ++rnnt_cases;
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-8 && secs < 60.0,
          fmt("%zu CTC + %zu RNN-T cases, max |log-lik diff| %.2e (tol 1e-8), %.2fs (< 60s)",
              ctc_cases, rnnt_cases, worst, secs)};
}

// --- 2 ----------------------------------------------------------------------

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(202);
  double ctc_err = 0, rnnt_err = 0;
  for (int i = 0; i < 5; ++i) {
    const auto y = random_target(1 + rng() % 2, 4, rng);
    const Tensor logits = randn(3 + rng() % 3, 4, rng);
    ctc_err = std::max(ctc_err, grad_check([&](Graph&, Var x) { return ctc_loss(log_softmax(x), y); },
                                           logits, 1e-4));
    const auto z = random_target(rng() % 3, 4, rng);
    const std::size_t T = 1 + rng() % 4;
    const Tensor lat = randn(T * (z.size() + 1), 4, rng).reshaped({T, z.size() + 1, 4});
    rnnt_err = std::max(rnnt_err, grad_check([&](Graph&, Var x) { return rnnt_loss(x, z); },
                                             lat, 1e-4));
  }

  const CBConfig cb{8, 2, true, true};
  ParameterSet pc;
  init_cb(cb, 3, pc, "cb");
  pc["h"] = randn(4, 8, rng);
  pc["ctx"] = randn(3, 8, rng);
  const Tensor probe = randn(4, 8, rng);
  const double cb_err =
      grad_check_params(
          [&](Graph& g, const ParameterSet& ps) {
            const auto a = cb_attend(g.parameter("h", ps), g.parameter("ctx", ps), ps, cb, "cb");
            return sum(mul(tanh(a.fused), g.constant(probe)));
          },
          pc)
          .max_error;

  ContextEncoderConfig ce;
  ce.vocab_size = 9;
  ce.embed_dim = 4;
  ce.hidden = 3;
  ce.layers = 2;
  ce.out_dim = 8;
  ParameterSet pe;
  init_context_encoder(ce, 4, pe);
  BiasList list(4);
  list.add({5, 6}, {});
  list.add({7}, {});
  const Tensor probe2 = randn(3, 8, rng);
  const double ctx_err =
      grad_check_params(
          [&](Graph& g, const ParameterSet& ps) {
            return sum(mul(tanh(encode_bias_list(g, list, ps, ce)), g.constant(probe2)));
          },
          pe)
          .max_error;

  ModelConfig m;
  m.feature_dim = 3;
  m.vocab_size = 8;
  m.width = 8;
  m.layers = 2;
  m.heads = 2;
  m.ffn = 8;
  m.taps = {1};
  m.cb_heads = 2;
  m.ctx_embed = 4;
  m.ctx_hidden = 2;
  m.joiner = 6;
  const ParameterSet pm = init_model(m, 5);
  const Tensor x = randn(4, 3, rng);
  const std::vector<int> y{5, 6}, ib_y{Vocab::kDummy, 6};
  BiasList ml(4);
  ml.add({6}, {});
  ml.add({7, 5}, {});
  ParamCheckOptions opt;
  opt.max_coords_per_tensor = 4;
  const auto model = grad_check_params(
      [&](Graph& g, const ParameterSet& ps) {
        const ForwardOutput f = forward(g, x, y, encode_context(g, ml, ps, m), ps, m);
        return combine_objectives(ctc_loss(f.ctc_logp, y), interctc_loss(f.interctc_logp, y),
                                  ib_loss(f.ib_logp, ib_y), rnnt_loss(f.lattice, y),
                                  LossWeights{});
      },
      pm, opt);

  const double secs = seconds_since(t0);
  const double worst = std::max({ctc_err, rnnt_err, cb_err, ctx_err, model.max_error});
  return {worst < 1e-3 && secs < 300.0,
          fmt("max rel err: CTC %.1e, RNN-T %.1e, CB %.1e, context encoder %.1e, tiny model "
              "(N=2, S=8, %zu coords) %.1e (tol 1e-3); %.1fs (< 300s)",
              ctc_err, rnnt_err, cb_err, ctx_err, model.coords_checked, model.max_error, secs)};
}

// --- 3 ----------------------------------------------------------------------

Outcome ib_target_fidelity() {
  Vocab v;
  const std::vector<std::string> words{"fauchelevent", "thought", "i", "am", "lost"};
  std::vector<int> ids;
  for (const auto& w : words) ids.push_back(v.add(w));
  const std::vector<TokenSpan> covered{{0, 1}};
  std::string out;
  for (int t : ib_target(ids, covered)) {
    if (!out.empty()) out += ' ';
    out += v.surface(t);
  }
  const std::string expected = "fauchelevent # # # #";
  return {out == expected, "\"" + out + "\" (expected \"" + expected + "\")"};
}

// --- 4, 5, 6 ----------------------------------------------------------------

struct PipelineResult {
  double seconds = 0;
  ErrorBreakdown baseline10, ib10, ib100, joint100;
  bool reduction_identical = false;
  std::size_t reduction_checked = 0;
  std::string error;
};

PipelineResult run_pipeline() {
  PipelineResult r;
  const auto t0 = Clock::now();
  const ExperimentConfig base{};
  const SyntheticCorpus corpus = synth_corpus(base.data, base.data_seed);
  auto train = [&](const std::string& preset) {
    Trainer t(make_preset(preset, base), corpus.train, corpus.lexicon);
    const auto ts = Clock::now();
    t.run();
    std::printf("  trained %s: %zu steps, final loss %.3f, %.0fs\n", preset.c_str(),
                t.step_count(), t.curve().back().total, seconds_since(ts));
    std::fflush(stdout);
    return TrainedModel{t.config(), t.params()};
  };
  const TrainedModel baseline = train("baseline");
  const TrainedModel ib = train("ib");
  const ExperimentConfig joint_cfg = make_preset("ib-joint", base);

  auto eval = [&](const TrainedModel& m, std::size_t M, const DecodeConfig& d,
                  const char* name) {
    const auto ts = Clock::now();
    const Evaluation e = evaluate(m.params, m.config.model, corpus, M, d, base.seed);
    std::printf("  %s M=%zu: %s (%.0fs)\n", name, M, format_report(e.counts).c_str(),
                seconds_since(ts));
    std::fflush(stdout);
    return e;
  };
  r.baseline10 = eval(baseline, 10, baseline.config.decode, "baseline").counts;
  r.ib10 = eval(ib, 10, ib.config.decode, "ib").counts;
  const Evaluation ib100 = eval(ib, 100, ib.config.decode, "ib");
  r.ib100 = ib100.counts;
  r.joint100 = eval(ib, 100, joint_cfg.decode, "ib-joint").counts;

  // joint_decode with mu_ctc = 0 against transducer-only search, per utterance.
  DecodeConfig zero = joint_cfg.decode;
  zero.mu_ctc = 0.0;
  zero.mu_tr = 1.0;
  r.reduction_identical = true;
  for (std::size_t i = 0; i < corpus.test.size(); ++i) {
    const BiasList list = test_bias_list(corpus, i, 100, base.seed);
    const auto a = joint_decode(ib.params, ib.config.model, corpus.test[i].features, list, zero);
    const TransducerSession session(ib.params, ib.config.model, corpus.test[i].features, list);
    SessionScorer scorer(session);
    const auto b = rnnt_beam_search(scorer, zero);
    bool same = a.size() == b.size();
    for (std::size_t k = 0; same && k < a.size(); ++k) {
      same = a[k].prefix == b[k].prefix && a[k].tr == b[k].tr && a[k].joint == b[k].joint;
    }
    r.reduction_identical = r.reduction_identical && same;
    ++r.reduction_checked;
  }
  r.seconds = seconds_since(t0);
  return r;
}

std::string rates(const ErrorBreakdown& b) { return format_report(b); }

// --- 7 ----------------------------------------------------------------------

Outcome baseline_reduction() {
  ExperimentConfig cfg = make_preset("ib");
  CorpusConfig data = cfg.data;
  data.train_utterances = 4;
  data.test_utterances = 3;
  const SyntheticCorpus corpus = synth_corpus(data, 5);
  cfg.model.vocab_size = corpus.lexicon.vocab().size();
  ModelConfig plain = cfg.model;
  plain.biasing = false;
  ParameterSet p = init_model(cfg.model, cfg.seed);
  for (const auto& n : cb_value_parameters(cfg.model)) p[n] = Tensor::zeros_like(p[n]);
  const ParameterSet q = init_model(plain, cfg.seed);
  LossWeights w;
  w.ib = 0.0;

  bool forward_same = true, loss_same = true, decode_same = true;
  std::size_t checked = 0;
  for (std::size_t i = 0; i < corpus.test.size(); ++i) {
    const Utterance& u = corpus.test[i];
    const BiasList list = test_bias_list(corpus, i, 10, 3);
    TrainingBias tb;
    tb.list = list;
    tb.covered = {find_covered_spans(u, list, corpus.lexicon)};
    Graph g, h;
    const ForwardOutput a = forward(g, u.features, u.transcript,
                                    encode_context(g, list, p, cfg.model), p, cfg.model);
    const ForwardOutput b = forward(h, u.features, u.transcript, Var{}, q, plain);
    forward_same = forward_same && bit_equal(a.encoder.fused_final.value(),
                                             b.encoder.fused_final.value()) &&
                   bit_equal(a.ctc_logp.value(), b.ctc_logp.value()) &&
                   bit_equal(a.lattice.value(), b.lattice.value());
    for (std::size_t k = 0; k < a.interctc_logp.size(); ++k) {
      forward_same = forward_same && bit_equal(a.interctc_logp[k].value(), b.interctc_logp[k].value());
    }
    Graph g2, h2;
    const std::vector<Utterance> one{u};
    const double la = batch_loss(g2, one, tb, p, cfg.model, w).total.value().item();
    const double lb = batch_loss(h2, one, tb, q, plain, w).total.value().item();
    loss_same = loss_same && la == lb;
    for (const DecodeConfig& d : {DecodeConfig{}, make_preset("ib").decode}) {
      const auto x = joint_decode(p, cfg.model, u.features, list, d);
      const auto y = joint_decode(q, plain, u.features, list, d);
      bool same = x.size() == y.size();
      for (std::size_t k = 0; same && k < x.size(); ++k) {
        same = x[k].prefix == y[k].prefix && x[k].joint == y[k].joint;
      }
      decode_same = decode_same && same;
    }
    ++checked;
  }

  // Short training run: frozen zero CB values and lambda_ib = 0 against the
  // CB-free baseline.
  ExperimentConfig small = cfg;
  small.data = data;
  small.optim.batch_size = 2;
  small.optim.epochs = 2;
  small.optim.warmup = 2;
  ExperimentConfig reduced = make_preset("ib", small);
  reduced.loss.ib = 0.0;
  reduced.freeze_cb_values = true;
  Trainer tr(reduced, corpus.train, corpus.lexicon);
  Trainer tb(make_preset("baseline", small), corpus.train, corpus.lexicon);
  tr.run();
  tb.run();
  bool trajectory_same = tr.curve().size() == tb.curve().size();
  for (std::size_t s = 0; trajectory_same && s < tr.curve().size(); ++s) {
    trajectory_same = tr.curve()[s].total == tb.curve()[s].total;
  }
  for (const auto& [name, t] : tb.params()) {
    trajectory_same = trajectory_same && bit_equal(t, tr.params().at(name));
  }

  return {forward_same && loss_same && decode_same && trajectory_same,
          fmt("%zu utterances, bitwise equal: forward %s, losses %s, decoding %s; "
              "%zu-step training trajectory %s",
              checked, forward_same ? "yes" : "no", loss_same ? "yes" : "no",
              decode_same ? "yes" : "no", tr.curve().size(), trajectory_same ? "yes" : "no")};
}

// --- 8 ----------------------------------------------------------------------

Outcome metric_decomposition() {
  std::mt19937_64 rng(808);
  static const char* kPool[] = {"a", "b", "c", "d", "e"};
  auto draw = [&] {
    std::vector<std::string> w(rng() % 8);
    for (auto& x : w) x = kPool[rng() % 5];
    return w;
  };
  std::size_t bad_sum = 0, bad_empty = 0, empty_cases = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto ref = draw(), hyp = draw();
    WordSet bias;
    for (const char* w : kPool) {
      if (rng() % 3 == 0) bias.insert(w);
    }
    const auto b = wer_breakdown(ref, hyp, bias);
    if (b.errors() != b.bias.total() + b.unbias.total() ||
        b.errors() != oracle::edit_distance(ref, hyp)) {
      ++bad_sum;
    }
    const auto e = wer_breakdown(ref, hyp, WordSet{});
    ++empty_cases;
    if (e.u_wer() != e.wer() || e.b_wer().has_value()) ++bad_empty;
  }
  ErrorBreakdown a1;
  a1.n_bias = 10000;
  a1.bias.sub = 1583;
  a1.n_unbias = 81000;
  a1.unbias.sub = 1766;
  const std::string text = format_report(a1);
  const bool ok = bad_sum == 0 && bad_empty == 0 && text == "3.68 (2.18/15.83)";
  return {ok, fmt("1000 triples: %zu decomposition mismatches, %zu/%zu M=0 cases with U-WER != "
                  "WER; A1 counts format as \"%s\"",
                  bad_sum, bad_empty, empty_cases, text.c_str())};
}

// --- 9 ----------------------------------------------------------------------

Outcome overfit() {
  const auto t0 = Clock::now();
  ExperimentConfig cfg = make_preset("ib");
  const SyntheticCorpus corpus = synth_corpus(cfg.data, cfg.data_seed);
  const std::vector<Utterance> ten(corpus.train.begin(), corpus.train.begin() + 10);
  cfg.optim.batch_size = 10;
  cfg.optim.epochs = 500;
  cfg.optim.warmup = 50;
  Trainer t(cfg, ten, corpus.lexicon);
  t.run();
  const double first = t.curve().front().total, last = t.curve().back().total;
  return {t.curve().size() == 500 && last < 0.2 * first,
          fmt("10-utterance batch, %zu steps: loss %.3f -> %.3f (%.1f%% of initial, need < "
              "20%%), %.0fs",
              t.curve().size(), first, last, 100.0 * last / first, seconds_since(t0))};
}

}  // namespace
}  // namespace ibasr

// Optional arguments select criteria by number; no arguments runs them all.
int main(int argc, char** argv) {
  using namespace ibasr;
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  auto wanted = [&](int id) { return selected.empty() || selected.count(id) > 0; };
  if (wanted(1)) run(1, "oracle equivalence", oracle_equivalence);
  if (wanted(2)) run(2, "gradient suite", gradient_suite);
  if (wanted(3)) run(3, "IB target fidelity", ib_target_fidelity);

  if (wanted(4) || wanted(5) || wanted(6)) {
  std::printf("running the desk-scale pipeline (corpus, baseline and ib training, decoding)\n");
  std::fflush(stdout);
  PipelineResult p;
  try {
    p = run_pipeline();
  } catch (const std::exception& e) {
    p.error = e.what();
  }
  if (!p.error.empty()) {
    for (int id : {4, 5, 6}) report(id, "pipeline", {false, "exception: " + p.error});
  } else {
    const auto bb = p.baseline10.b_wer(), ib = p.ib10.b_wer();
    const bool c4 = bb && ib && *ib <= 0.7 * *bb && *p.ib10.wer() <= *p.baseline10.wer() &&
                    p.seconds < 1800.0;
    report(4, "directional contextualization (M=10)",
           {c4, fmt("baseline %s, ib %s; B-WER %.2f vs 0.7 x %.2f = %.2f, WER %.2f vs %.2f; "
                    "training + eval %.0fs (< 1800s)",
                    rates(p.baseline10).c_str(), rates(p.ib10).c_str(), ib.value_or(NAN),
                    bb.value_or(NAN), 0.7 * bb.value_or(NAN), p.ib10.wer().value_or(NAN),
                    p.baseline10.wer().value_or(NAN), p.seconds)});
    const auto b10 = p.ib10.b_wer(), b100 = p.ib100.b_wer();
    report(5, "distractor degradation trend",
           {b10 && b100 && *b10 <= *b100,
            fmt("ib B-WER at M=10 %.2f <= at M=100 %.2f", b10.value_or(NAN),
                b100.value_or(NAN))});
    const auto uj = p.joint100.u_wer(), ui = p.ib100.u_wer();
    report(6, "joint decoding mitigation (M=100)",
           {uj && ui && *uj <= *ui && p.reduction_identical,
            fmt("ib %s, ib-joint %s; U-WER %.2f <= %.2f; mu_ctc=0 identical to transducer-only "
                "search on %zu/%zu utterances",
                rates(p.ib100).c_str(), rates(p.joint100).c_str(), uj.value_or(NAN),
                ui.value_or(NAN), p.reduction_identical ? p.reduction_checked : 0,
                p.reduction_checked)});
  }
  }

  if (wanted(7)) run(7, "baseline reduction", baseline_reduction);
  if (wanted(8)) run(8, "metric decomposition", metric_decomposition);
  if (wanted(9)) run(9, "overfit sanity", overfit);

  std::printf("%s: %d criteria failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
