#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "ibasr/datagen/vocab.h"
#include "ibasr/errors.h"
#include "ibasr/losses/ctc.h"
#include "ibasr/losses/objectives.h"
#include "ibasr/losses/rnnt.h"
#include "ibasr/model/checkpoint.h"
#include "ibasr/model/transducer_model.h"
#include "ibasr/numerics/grad_check.h"
#include "ibasr/numerics/ops.h"
#include "support/oracles.h"

namespace ibasr {
namespace {

Tensor randn(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Tensor t({r, c});
  for (auto& v : t.values()) v = n(rng);
  return t;
}

ModelConfig small_model(std::size_t V = 12) {
  ModelConfig c;
  c.feature_dim = 5;
  c.vocab_size = V;
  c.width = 16;
  c.layers = 5;
  c.heads = 4;
  c.ffn = 24;
  c.taps = {2, 4};
  c.cb_heads = 4;
  c.ctx_embed = 8;
  c.ctx_hidden = 4;
  c.joiner = 12;
  return c;
}

ModelConfig tiny_model() {
  ModelConfig c;
  c.feature_dim = 3;
  c.vocab_size = 8;
  c.width = 8;
  c.layers = 2;
  c.heads = 2;
  c.ffn = 8;
  c.taps = {1};
  c.cb_heads = 2;
  c.ctx_embed = 4;
  c.ctx_hidden = 2;
  c.ctx_layers = 2;
  c.joiner = 6;
  return c;
}

BiasList make_list(std::vector<std::vector<int>> phrases, std::size_t l_max = 4) {
  BiasList l(l_max);
  for (auto& p : phrases) l.add(p, {});
  return l;
}

double ln_mean(const std::vector<double>& x) {
  double s = 0;
  for (double v : x) s += v;
  return s / x.size();
}

std::vector<double> layer_norm_ref(const std::vector<double>& x) {
  const double m = ln_mean(x);
  double var = 0;
  for (double v : x) var += (v - m) * (v - m);
  var /= x.size();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = (x[i] - m) / std::sqrt(var + 1e-5);
  return y;
}

std::vector<double> vecmat(const std::vector<double>& x, const Tensor& w) {
  std::vector<double> y(w.cols(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < w.cols(); ++j) y[j] += x[i] * w.at(i, j);
  }
  return y;
}

struct Losses {
  Var total;
  LossComponents parts;
};

Losses objective(Graph& g, const ForwardOutput& f, std::span<const int> y,
                 std::span<const int> ib_y, const LossWeights& w) {
  Var ctc = ctc_loss(f.ctc_logp, y);
  Var ic = interctc_loss(f.interctc_logp, y);
  Var ib = f.ib_logp.empty() ? g.constant(Tensor::scalar(0.0)) : ib_loss(f.ib_logp, ib_y);
  Var tr = rnnt_loss(f.lattice, y);
  Losses out;
  out.total = combine_objectives(ctc, ic, ib, tr, w);
  out.parts = {ctc.value().item(), ic.value().item(), ib.value().item(),
               tr.value().item()};
  return out;
}

}  // namespace

TEST_CASE("model config validation") {
  ModelConfig c = small_model();
  CHECK_NOTHROW(c.validate());
  c.taps = {5};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.taps = {};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.taps = {3, 2};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_model();
  c.heads = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("encoder shapes and taps") {
  std::mt19937_64 rng(1);
  ModelConfig c = small_model();
  const ParameterSet p = init_model(c, 1);
  Graph g;
  Var ctx = encode_context(g, make_list({{5, 6}, {7}}), p, c);
  const EncoderOutput out = encode(g, randn(15, 5, rng), ctx, p, c);
  CHECK(out.final_states.shape() == Shape{15, 16});
  CHECK(out.fused_final.shape() == Shape{15, 16});
  REQUIRE(out.tap_states.size() == 2);
  REQUIRE(out.tap_fused.size() == 2);
  for (const auto& a : out.tap_attention) {
    CHECK(a.scores.size() == 4);
    CHECK(a.scores[0].shape() == Shape{15, 3});
  }
  Graph g2;
  CHECK_THROWS_AS(encode(g2, randn(15, 4, rng), ctx, p, c), DimensionError);

  c.subsample = 2;
  const ParameterSet p2 = init_model(c, 1);
  Graph g3;
  Var ctx3 = encode_context(g3, make_list({{5}}), p2, c);
  CHECK(encode(g3, randn(15, 5, rng), ctx3, p2, c).final_states.rows() == 7);
  CHECK_THROWS_AS(subsample_features(randn(1, 5, rng), 2), InfeasibleError);
}

TEST_CASE("zero CB value projections reproduce the CB-free encoder") {
  std::mt19937_64 rng(2);
  ModelConfig c = small_model();
  ParameterSet p = init_model(c, 4);
  for (const auto& name : cb_value_parameters(c)) p[name] = Tensor::zeros_like(p[name]);
  ModelConfig plain = c;
  plain.biasing = false;
  const ParameterSet q = init_model(plain, 4);
  for (const auto& [name, t] : q) CHECK(p.at(name) == t);

  const Tensor x = randn(9, 5, rng);
  Graph g;
  Var ctx = encode_context(g, make_list({{5, 6}, {7}, {8, 9, 10}}), p, c);
  const EncoderOutput a = encode(g, x, ctx, p, c);
  Graph h;
  const EncoderOutput b = encode(h, x, Var{}, q, plain);
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(a.tap_fused[j].value() == a.tap_states[j].value());
    CHECK(a.tap_states[j].value() == b.tap_states[j].value());
  }
  CHECK(a.final_states.value() == b.final_states.value());
  CHECK(a.fused_final.value() == b.fused_final.value());
}

TEST_CASE("single block matches a hand-computed forward pass") {
  ModelConfig c;
  c.feature_dim = 2;
  c.vocab_size = 6;
  c.width = 2;
  c.layers = 2;
  c.heads = 1;
  c.ffn = 2;
  c.taps = {1};
  c.biasing = false;
  c.joiner = 2;
  ParameterSet p = init_model(c, 3);
  // Block 2 reduces to the identity when its output projections vanish.
  p["enc.l2.att.o"] = Tensor::zeros(2, 2);
  p["enc.l2.ffn.w2"] = Tensor::zeros(2, 2);
  p["enc.in.w"] = Tensor::matrix({{0.5, -1.0}, {2.0, 0.25}});
  p["enc.in.b"] = Tensor::row({0.1, 0.2});
  p["enc.l1.ln1.g"] = Tensor::row({1.5, 0.5});
  p["enc.l1.ln1.b"] = Tensor::row({0.0, 0.3});
  p["enc.l1.att.v"] = Tensor::matrix({{1.0, 2.0}, {-1.0, 0.5}});
  p["enc.l1.att.o"] = Tensor::matrix({{0.3, 0.0}, {0.1, -0.2}});
  p["enc.l1.ln2.g"] = Tensor::row({1.0, 2.0});
  p["enc.l1.ln2.b"] = Tensor::row({-0.1, 0.0});
  p["enc.l1.ffn.w1"] = Tensor::matrix({{1.0, -1.0}, {0.5, 0.5}});
  p["enc.l1.ffn.b1"] = Tensor::row({0.0, 0.1});
  p["enc.l1.ffn.w2"] = Tensor::matrix({{0.2, 0.4}, {-0.6, 1.0}});
  p["enc.l1.ffn.b2"] = Tensor::row({0.05, -0.05});

  const std::vector<double> feat{0.7, -0.4};
  std::vector<double> x = vecmat(feat, p["enc.in.w"]);
  x[0] += 0.1 + 0.0;  // bias + sin(0)
  x[1] += 0.2 + 1.0;  // bias + cos(0)
  auto affine_ln = [](std::vector<double> v, const Tensor& g, const Tensor& b) {
    v = layer_norm_ref(v);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = v[i] * g[i] + b[i];
    return v;
  };
  // One frame: attention weight 1 on itself.
  const auto n1 = affine_ln(x, p["enc.l1.ln1.g"], p["enc.l1.ln1.b"]);
  const auto att = vecmat(vecmat(n1, p["enc.l1.att.v"]), p["enc.l1.att.o"]);
  std::vector<double> y{x[0] + att[0], x[1] + att[1]};
  const auto n2 = affine_ln(y, p["enc.l1.ln2.g"], p["enc.l1.ln2.b"]);
  auto hid = vecmat(n2, p["enc.l1.ffn.w1"]);
  for (std::size_t i = 0; i < 2; ++i) hid[i] = std::max(0.0, hid[i] + p["enc.l1.ffn.b1"][i]);
  const auto ff = vecmat(hid, p["enc.l1.ffn.w2"]);
  const std::vector<double> expect{y[0] + ff[0] + 0.05, y[1] + ff[1] - 0.05};

  Graph g;
  const EncoderOutput out = encode(g, Tensor({1, 2}, feat), Var{}, p, c);
  CHECK(std::abs(out.final_states.value().at(0, 0) - expect[0]) < 1e-12);
  CHECK(std::abs(out.final_states.value().at(0, 1) - expect[1]) < 1e-12);
  CHECK(out.tap_states[0].value() == out.final_states.value());
}

TEST_CASE("predictor_step") {
  ModelConfig c;
  c.vocab_size = 6;
  c.width = 1;
  ParameterSet p;
  p["pred.embed"] = Tensor({6, 1}, {0, 0, 0, 0.4, 0, 1.2});
  p["pred.w"] = Tensor({1, 4}, {0.5, -0.3, 0.8, 0.2});
  p["pred.u"] = Tensor({1, 4}, {0.1, 0.4, -0.6, 0.3});
  p["pred.b"] = Tensor({1, 4}, {0.0, 1.0, 0.1, -0.2});

  auto sig = [](double v) { return 1 / (1 + std::exp(-v)); };
  double h = 0, s = 0;
  auto step = [&](double x) {
    const double i = sig(0.5 * x + 0.1 * h), f = sig(-0.3 * x + 0.4 * h + 1.0);
    const double gg = std::tanh(0.8 * x - 0.6 * h + 0.1), o = sig(0.2 * x + 0.3 * h - 0.2);
    s = f * s + i * gg;
    h = o * std::tanh(s);
  };

  Graph g;
  PredictorState st = PredictorState::initial(c), st2, st3;
  const double y1 = predictor_step(g, Vocab::kSos, st, p, c, &st2).value().item();
  step(0.4);
  CHECK(std::abs(y1 - h) < 1e-15);
  const double y2 = predictor_step(g, 5, st2, p, c, &st3).value().item();
  step(1.2);
  CHECK(std::abs(y2 - h) < 1e-15);
  CHECK(st3.last == 5);
  // Same input and state, same output.
  CHECK(predictor_step(g, 5, st2, p, c, nullptr).value().item() == y2);
  CHECK_THROWS_AS(predictor_step(g, Vocab::kBlank, st, p, c, nullptr), ContractError);

  ParameterSet z = p;
  for (auto& [n, t] : z) t = Tensor::zeros_like(t);
  Graph gz;
  CHECK(predictor_step(gz, 5, st, z, c, nullptr).value().item() == 0.0);
}

TEST_CASE("joiner") {
  ModelConfig c;
  c.vocab_size = 3;
  c.width = 2;
  c.joiner = 2;
  ParameterSet p;
  p["join.enc"] = Tensor::matrix({{1.0, 0.0}, {0.5, -1.0}});
  p["join.pred"] = Tensor::matrix({{0.2, 0.3}, {0.0, 1.0}});
  p["join.b"] = Tensor::row({0.1, -0.1});
  p["join.out"] = Tensor::matrix({{1.0, -1.0, 0.5}, {2.0, 0.0, -0.5}});
  p["join.out_b"] = Tensor::row({0.0, 0.1, 0.2});
  Graph g;
  Var e = g.constant(Tensor::row({0.3, -0.2}));
  Var q = g.constant(Tensor::row({1.0, 0.5}));
  const Tensor out = joiner(e, q, p, c).value();
  const double h0 = std::tanh(0.3 * 1.0 + -0.2 * 0.5 + 1.0 * 0.2 + 0.5 * 0.0 + 0.1);
  const double h1 = std::tanh(0.3 * 0.0 + -0.2 * -1.0 + 1.0 * 0.3 + 0.5 * 1.0 - 0.1);
  CHECK(std::abs(out.at(0, 0) - (h0 * 1.0 + h1 * 2.0)) < 1e-14);
  CHECK(std::abs(out.at(0, 1) - (h0 * -1.0 + 0.1)) < 1e-14);
  CHECK(std::abs(out.at(0, 2) - (h0 * 0.5 + h1 * -0.5 + 0.2)) < 1e-14);

  ParameterSet z = p;
  for (auto& [n, t] : z) t = Tensor::zeros_like(t);
  Graph gz;
  const Tensor lp = log_softmax(joiner(gz.constant(e.value()),
                                       gz.constant(q.value()), z, c))
                        .value();
  for (std::size_t v = 0; v < 3; ++v) {
    CHECK(std::abs(lp.at(0, v) + std::log(3.0)) < 1e-15);
  }
  CHECK_THROWS_AS(joiner(g.constant(Tensor::row({1.0})), q, p, c), DimensionError);
}

TEST_CASE("forward: lattice shape, no-bias list, determinism, row order") {
  std::mt19937_64 rng(5);
  const ModelConfig c = small_model(12);
  const ParameterSet p = init_model(c, 6);
  const Tensor x = randn(6, 5, rng);
  const std::vector<int> y{5, 6, 7};

  Graph g;
  Var ctx = encode_context(g, BiasList(4), p, c);
  const ForwardOutput f = forward(g, x, y, ctx, p, c);
  CHECK(f.lattice.shape() == Shape{6, 4, 12});
  CHECK(f.ctc_logp.shape() == Shape{6, 12});
  CHECK(f.interctc_logp.size() == 2);
  CHECK(f.ib_logp.size() == 2);
  for (const auto& a : f.encoder.tap_attention) {
    for (const auto& s : a.scores) {
      for (std::size_t t = 0; t < 6; ++t) CHECK(s.value().at(t, 0) == 1.0);
    }
  }

  Graph g2;
  const ForwardOutput f2 =
      forward(g2, x, y, encode_context(g2, BiasList(4), p, c), p, c);
  CHECK(f2.lattice.value() == f.lattice.value());
  CHECK(rnnt_loss(f2.lattice.value(), y).loss == rnnt_loss(f.lattice.value(), y).loss);

  Graph g3, g4;
  const auto a = encode(g3, x, encode_context(g3, make_list({{5}, {6, 7}, {8}}), p, c), p, c);
  const auto b = encode(g4, x, encode_context(g4, make_list({{8}, {5}, {6, 7}}), p, c), p, c);
  CHECK(max_abs_diff(a.fused_final.value(), b.fused_final.value()) < 1e-12);
}

TEST_CASE("session posteriors agree with the training lattice") {
  std::mt19937_64 rng(7);
  const ModelConfig c = small_model(12);
  const ParameterSet p = init_model(c, 8);
  const Tensor x = randn(5, 5, rng);
  const BiasList list = make_list({{5, 6}, {9}});
  const std::vector<int> y{9, 5};
  Graph g;
  const ForwardOutput f = forward(g, x, y, encode_context(g, list, p, c), p, c);
  const Tensor lp = oracle::log_softmax_rows(f.lattice.value());

  const TransducerSession s(p, c, x, list);
  CHECK(s.frames() == 5);
  CHECK(max_abs_diff(s.ctc_log_probs(), f.ctc_logp.value()) < 1e-12);
  auto out = s.start();
  std::vector<TransducerSession::PredictorOutput> states{out};
  for (int tok : y) states.push_back(s.predict(tok, states.back().state));
  for (std::size_t t = 0; t < 5; ++t) {
    for (std::size_t u = 0; u <= y.size(); ++u) {
      const auto row = s.log_probs(t, states[u].proj);
      for (std::size_t v = 0; v < 12; ++v) {
        CHECK(std::abs(row[v] - lp.at(t * 3 + u, v)) < 1e-12);
      }
    }
  }
}

TEST_CASE("end-to-end gradient on a tiny model") {
  std::mt19937_64 rng(9);
  const ModelConfig c = tiny_model();
  ParameterSet p = init_model(c, 10);
  const Tensor x = randn(4, 3, rng);
  const std::vector<int> y{5, 6};
  const std::vector<int> ib_y{Vocab::kDummy, 6};
  const BiasList list = make_list({{6}, {7, 5}});
  REQUIRE(list.M() == 2);
  ParamCheckOptions opt;
  opt.max_coords_per_tensor = 4;
  const auto r = grad_check_params(
      [&](Graph& g, const ParameterSet& ps) {
        const ForwardOutput f = forward(g, x, y, encode_context(g, list, ps, c), ps, c);
        return objective(g, f, y, ib_y, LossWeights{}).total;
      },
      p, opt);
  CHECK(r.max_error < 1e-3);
  CHECK(r.coords_checked > 150);
}

TEST_CASE("zero CB and lambda_ib = 0 give the non-contextual losses exactly") {
  std::mt19937_64 rng(11);
  ModelConfig c = small_model(12);
  ParameterSet p = init_model(c, 12);
  for (const auto& name : cb_value_parameters(c)) p[name] = Tensor::zeros_like(p[name]);
  ModelConfig plain = c;
  plain.biasing = false;
  const ParameterSet q = init_model(plain, 12);
  const Tensor x = randn(10, 5, rng);
  const std::vector<int> y{5, 7, 9};
  const std::vector<int> ib_y{Vocab::kDummy, 7, Vocab::kDummy};
  LossWeights w;
  w.ib = 0.0;

  Graph g;
  const ForwardOutput a =
      forward(g, x, y, encode_context(g, make_list({{7}, {8, 6}}), p, c), p, c);
  const Losses la = objective(g, a, y, ib_y, w);
  Graph h;
  const ForwardOutput b = forward(h, x, y, Var{}, q, plain);
  const Losses lb = objective(h, b, y, ib_y, w);
  CHECK(a.lattice.value() == b.lattice.value());
  CHECK(la.parts.ctc == lb.parts.ctc);
  CHECK(la.parts.interctc == lb.parts.interctc);
  CHECK(la.parts.transducer == lb.parts.transducer);
  CHECK(la.total.value().item() == lb.total.value().item());
}

TEST_CASE("checkpoint round trip") {
  const ModelConfig c = small_model();
  Checkpoint ck;
  ck.tensors = init_model(c, 13);
  ck.meta = {{"step", 42}};
  const auto path = std::filesystem::temp_directory_path() / "ibasr_ckpt_test.bin";
  save_checkpoint(path, ck);
  const Checkpoint back = load_checkpoint(path);
  CHECK(back.meta["step"] == 42);
  REQUIRE(back.tensors.size() == ck.tensors.size());
  for (const auto& [name, t] : ck.tensors) CHECK(back.tensors.at(name) == t);
  {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os << "garbage";
  }
  CHECK_THROWS_AS(load_checkpoint(path), DataError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path), DataError);
}

}  // namespace ibasr
