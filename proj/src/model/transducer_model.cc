// ibasr/model/transducer_model.cc

#include "ibasr/model/transducer_model.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "ibasr/datagen/vocab.h"
#include "ibasr/errors.h"
#include "ibasr/numerics/layers.h"
#include "ibasr/numerics/ops.h"

namespace ibasr {
namespace {

std::string layer_name(std::size_t i, const char* what) {
  return "enc.l" + std::to_string(i) + "." + what;
}
std::string tap_name(const char* group, std::size_t k) {
  return std::string(group) + ".tap" + std::to_string(k);
}

void put_linear(ParameterSet& p, const std::string& name, std::size_t in,
                std::size_t out, std::uint64_t seed) {
  p[name + ".w"] = glorot_uniform(in, out, seed, name + ".w");
  p[name + ".b"] = Tensor({1, out});
}

Var apply_linear(Graph& g, Var x, const ParameterSet& p, const std::string& name) {
  return linear(x, g.parameter(name + ".w", p), g.parameter(name + ".b", p));
}

Tensor positional_encoding(std::size_t T, std::size_t S) {
  Tensor pe({T, S});
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < S; ++i) {
      const double rate =
          std::pow(10000.0, -static_cast<double>(i - i % 2) / static_cast<double>(S));
      pe.at(t, i) = i % 2 == 0 ? std::sin(t * rate) : std::cos(t * rate);
    }
  }
  return pe;
}

Var self_attention(Graph& g, Var x, const ParameterSet& p, std::size_t layer,
                   std::size_t heads) {
  const std::size_t S = x.cols(), dh = S / heads;
  Var q = matmul(x, g.parameter(layer_name(layer, "att.q"), p));
  Var k = matmul(x, g.parameter(layer_name(layer, "att.k"), p));
  Var v = matmul(x, g.parameter(layer_name(layer, "att.v"), p));
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> outs;
  for (std::size_t j = 0; j < heads; ++j) {
    Var a = softmax(scale(matmul_nt(slice(q, 1, j * dh, dh), slice(k, 1, j * dh, dh)),
                          inv_scale),
                    1);
    outs.push_back(matmul(a, slice(v, 1, j * dh, dh)));
  }
  Var cat = heads == 1 ? outs.front() : concat(outs, 1);
  return matmul(cat, g.parameter(layer_name(layer, "att.o"), p));
}

Var encoder_block(Graph& g, Var x, const ParameterSet& p, std::size_t i,
                  const ModelConfig& cfg) {
  Var n1 = layer_norm(x, g.parameter(layer_name(i, "ln1.g"), p),
                      g.parameter(layer_name(i, "ln1.b"), p));
  Var y = add(x, self_attention(g, n1, p, i, cfg.heads));
  Var n2 = layer_norm(y, g.parameter(layer_name(i, "ln2.g"), p),
                      g.parameter(layer_name(i, "ln2.b"), p));
  Var hidden = relu(linear(n2, g.parameter(layer_name(i, "ffn.w1"), p),
                           g.parameter(layer_name(i, "ffn.b1"), p)));
  return add(y, linear(hidden, g.parameter(layer_name(i, "ffn.w2"), p),
                       g.parameter(layer_name(i, "ffn.b2"), p)));
}

LstmState predictor_cell(Graph& g, int y_prev, const LstmState& state,
                         const ParameterSet& p, const ModelConfig& cfg) {
  if (y_prev == Vocab::kBlank) {
    throw ContractError("predictor_step: the blank symbol is never fed back");
  }
  if (y_prev < 0 || static_cast<std::size_t>(y_prev) >= cfg.vocab_size) {
    throw DataError("predictor input " + std::to_string(y_prev) +
                    " outside the vocabulary");
  }
  const int id[] = {y_prev};
  Var x = gather_rows(g.parameter("pred.embed", p), id);
  return lstm_step(x, state, g.parameter("pred.w", p), g.parameter("pred.u", p),
                   g.parameter("pred.b", p));
}

}  // namespace

void ModelConfig::validate() const {
  if (feature_dim == 0 || vocab_size < 2 || width == 0 || layers == 0 ||
      ffn == 0 || joiner == 0 || subsample == 0) {
    throw ConfigError("model dimensions must be positive");
  }
  if (heads == 0 || width % heads != 0) {
    throw ConfigError("width must be a multiple of heads");
  }
  if (taps.empty()) throw ConfigError("at least one tap layer is required");
  for (std::size_t i = 0; i < taps.size(); ++i) {
    if (taps[i] < 1 || taps[i] >= layers) {
      throw ConfigError("tap layer " + std::to_string(taps[i]) +
                        " outside 1.." + std::to_string(layers - 1));
    }
    if (i > 0 && taps[i] <= taps[i - 1]) {
      throw ConfigError("tap layers must be strictly increasing");
    }
  }
  if (biasing) {
    cb_config().validate();
    context_config().validate();
  }
}

ContextEncoderConfig ModelConfig::context_config() const {
  ContextEncoderConfig c;
  c.vocab_size = vocab_size;
  c.embed_dim = ctx_embed;
  c.hidden = ctx_hidden;
  c.layers = ctx_layers;
  c.out_dim = width;
  c.proj_gain = ctx_proj_gain;
  return c;
}

CBConfig ModelConfig::cb_config() const {
  return CBConfig{width, cb_heads, cb_output_projection, cb_query_norm};
}

ParameterSet init_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ParameterSet p;
  const std::size_t S = cfg.width, V = cfg.vocab_size;
  put_linear(p, "enc.in", cfg.feature_dim * cfg.subsample, S, seed);
  for (std::size_t i = 1; i <= cfg.layers; ++i) {
    for (const char* ln : {"ln1", "ln2"}) {
      p[layer_name(i, ln) + std::string(".g")] = Tensor({1, S}, 1.0);
      p[layer_name(i, ln) + std::string(".b")] = Tensor({1, S});
    }
    for (const char* m : {"att.q", "att.k", "att.v", "att.o"}) {
      p[layer_name(i, m)] = glorot_uniform(S, S, seed, layer_name(i, m));
    }
    p[layer_name(i, "ffn.w1")] = glorot_uniform(S, cfg.ffn, seed, layer_name(i, "ffn.w1"));
    p[layer_name(i, "ffn.b1")] = Tensor({1, cfg.ffn});
    p[layer_name(i, "ffn.w2")] = glorot_uniform(cfg.ffn, S, seed, layer_name(i, "ffn.w2"));
    p[layer_name(i, "ffn.b2")] = Tensor({1, S});
  }
  put_linear(p, "ctc.final", S, V, seed);
  for (std::size_t k : cfg.taps) put_linear(p, tap_name("ctc", k), S, V, seed);

  p["pred.embed"] = normal_init(V, S, 1.0, seed, "pred.embed");
  p["pred.w"] = glorot_uniform(S, 4 * S, seed, "pred.w");
  p["pred.u"] = glorot_uniform(S, 4 * S, seed, "pred.u");
  Tensor pb({1, 4 * S});
  for (std::size_t j = S; j < 2 * S; ++j) pb[j] = 1.0;
  p["pred.b"] = pb;

  p["join.enc"] = glorot_uniform(S, cfg.joiner, seed, "join.enc");
  p["join.pred"] = glorot_uniform(S, cfg.joiner, seed, "join.pred");
  p["join.b"] = Tensor({1, cfg.joiner});
  p["join.out"] = glorot_uniform(cfg.joiner, V, seed, "join.out");
  p["join.out_b"] = Tensor({1, V});

  if (cfg.biasing) {
    init_context_encoder(cfg.context_config(), seed, p, "ctx");
    const CBConfig cb = cfg.cb_config();
    for (std::size_t k : cfg.taps) {
      init_cb(cb, seed, p, tap_name("cb", k));
      put_linear(p, tap_name("ib", k), S, V, seed);
    }
    init_cb(cb, seed, p, "cb.enc");
    init_cb(cb, seed, p, "cb.pred");
  }
  return p;
}

std::vector<std::string> cb_value_parameters(const ModelConfig& cfg) {
  std::vector<std::string> out;
  if (!cfg.biasing) return out;
  for (std::size_t k : cfg.taps) out.push_back(tap_name("cb", k) + ".v");
  out.push_back("cb.enc.v");
  out.push_back("cb.pred.v");
  return out;
}

Var encode_context(Graph& g, const BiasList& list, const ParameterSet& params,
                   const ModelConfig& cfg) {
  if (!cfg.biasing) throw ContractError("encode_context on a model without biasing");
  return encode_bias_list(g, list, params, cfg.context_config(), "ctx");
}

Tensor subsample_features(const Tensor& features, std::size_t factor) {
  if (factor == 0) throw ConfigError("subsample factor must be positive");
  const std::size_t T = features.rows() / factor, D = features.cols();
  if (T == 0) {
    throw InfeasibleError("utterance of " + std::to_string(features.rows()) +
                          " frames is shorter than the subsample factor");
  }
  if (factor == 1) return features.reshaped({features.rows(), D});
  std::vector<double> data(features.values().begin(),
                           features.values().begin() + T * factor * D);
  return Tensor({T, D * factor}, std::move(data));
}

EncoderOutput encode(Graph& g, const Tensor& features, Var ctx,
                     const ParameterSet& params, const ModelConfig& cfg) {
  if (features.cols() != cfg.feature_dim) {
    throw DimensionError("features are " + std::to_string(features.cols()) +
                         " wide, model expects " +
                         std::to_string(cfg.feature_dim));
  }
  const Tensor x_in = subsample_features(features, cfg.subsample);
  const std::size_t T = x_in.rows();
  Var x = apply_linear(g, g.constant(x_in), params, "enc.in");
  x = add(x, g.constant(positional_encoding(T, cfg.width)));

  const CBConfig cb = cfg.cb_config();
  EncoderOutput out;
  for (std::size_t i = 1; i <= cfg.layers; ++i) {
    x = encoder_block(g, x, params, i, cfg);
    if (std::find(cfg.taps.begin(), cfg.taps.end(), i) == cfg.taps.end()) continue;
    out.tap_states.push_back(x);
    if (cfg.biasing) {
      AttentionOutput a = cb_attend(x, ctx, params, cb, tap_name("cb", i));
      out.tap_fused.push_back(a.fused);
      if (cfg.propagate_fused) x = a.fused;
      out.tap_attention.push_back(std::move(a));
    } else {
      // Pass-through node in place of the fused residual.
      x = scale(x, 1.0);
    }
  }
  out.final_states = x;
  out.fused_final =
      cfg.biasing ? cb_attend(x, ctx, params, cb, "cb.enc").fused : x;
  return out;
}

PredictorState PredictorState::initial(const ModelConfig& cfg) {
  return PredictorState{Tensor::zeros(1, cfg.width), Tensor::zeros(1, cfg.width),
                        Vocab::kSos};
}

Var predictor_step(Graph& g, int y_prev, const PredictorState& state,
                   const ParameterSet& params, const ModelConfig& cfg,
                   PredictorState* next) {
  const LstmState s =
      predictor_cell(g, y_prev, {g.constant(state.h), g.constant(state.c)}, params, cfg);
  if (next != nullptr) *next = PredictorState{s.h.value(), s.c.value(), y_prev};
  return s.h;
}

Var predictor_sequence(Graph& g, std::span<const int> targets,
                       const ParameterSet& params, const ModelConfig& cfg) {
  LstmState s{g.constant(Tensor::zeros(1, cfg.width)),
              g.constant(Tensor::zeros(1, cfg.width))};
  std::vector<Var> rows;
  s = predictor_cell(g, Vocab::kSos, s, params, cfg);
  rows.push_back(s.h);
  for (int y : targets) {
    s = predictor_cell(g, y, s, params, cfg);
    rows.push_back(s.h);
  }
  return rows.size() == 1 ? rows.front() : concat(rows, 0);
}

Var joiner(Var h_enc, Var h_pred, const ParameterSet& params,
           const ModelConfig& cfg) {
  if (h_enc.cols() != cfg.width || h_pred.cols() != cfg.width) {
    throw DimensionError("joiner inputs must be " + std::to_string(cfg.width) +
                         " wide");
  }
  Graph& g = *h_enc.graph;
  Var e = matmul(h_enc, g.parameter("join.enc", params));
  Var p = matmul(h_pred, g.parameter("join.pred", params));
  Var hidden = tanh(add(outer_add(e, p), g.parameter("join.b", params)));
  return linear(hidden, g.parameter("join.out", params),
                g.parameter("join.out_b", params));
}

ForwardOutput forward(Graph& g, const Tensor& features,
                      std::span<const int> targets, Var ctx,
                      const ParameterSet& params, const ModelConfig& cfg) {
  ForwardOutput out;
  out.encoder = encode(g, features, ctx, params, cfg);
  out.frames = out.encoder.final_states.rows();
  for (std::size_t j = 0; j < cfg.taps.size(); ++j) {
    const std::size_t k = cfg.taps[j];
    out.interctc_logp.push_back(log_softmax(
        apply_linear(g, out.encoder.tap_states[j], params, tap_name("ctc", k))));
    if (cfg.biasing) {
      out.ib_logp.push_back(log_softmax(
          apply_linear(g, out.encoder.tap_fused[j], params, tap_name("ib", k))));
    }
  }
  out.ctc_logp =
      log_softmax(apply_linear(g, out.encoder.final_states, params, "ctc.final"));

  Var pred = predictor_sequence(g, targets, params, cfg);
  if (cfg.biasing) pred = cb_attend(pred, ctx, params, cfg.cb_config(), "cb.pred").fused;
  Var logits = joiner(out.encoder.fused_final, pred, params, cfg);
  out.lattice = reshape(logits, {out.frames, targets.size() + 1, cfg.vocab_size});
  return out;
}

TransducerSession::TransducerSession(const ParameterSet& params,
                                     const ModelConfig& cfg,
                                     const Tensor& features, const BiasList& list)
    : params_(params), cfg_(cfg) {
  Graph g;
  g.set_grad_enabled(false);
  Var ctx;
  if (cfg.biasing) {
    ctx = encode_context(g, list, params, cfg);
    ctx_ = ctx.value();
  }
  const EncoderOutput enc = encode(g, features, ctx, params, cfg);
  enc_proj_ = matmul(enc.fused_final, g.parameter("join.enc", params)).value();
  ctc_logp_ =
      log_softmax(apply_linear(g, enc.final_states, params, "ctc.final")).value();
}

TransducerSession::PredictorOutput TransducerSession::predict(
    int y_prev, const PredictorState& state) const {
  Graph g;
  g.set_grad_enabled(false);
  PredictorOutput out;
  Var h = predictor_step(g, y_prev, state, params_, cfg_, &out.state);
  if (cfg_.biasing) {
    h = cb_attend(h, g.constant(ctx_), params_, cfg_.cb_config(), "cb.pred").fused;
  }
  out.proj = matmul(h, g.parameter("join.pred", params_)).value();
  return out;
}

TransducerSession::PredictorOutput TransducerSession::start() const {
  return predict(Vocab::kSos, PredictorState::initial(cfg_));
}

std::vector<double> TransducerSession::log_probs(std::size_t t,
                                                 const Tensor& pred_proj) const {
  using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;
  using RowMatrix =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const std::size_t J = cfg_.joiner, V = cfg_.vocab_size;
  const Tensor& b = params_.at("join.b");
  const Tensor& w = params_.at("join.out");
  const Tensor& ob = params_.at("join.out_b");
  RowVec hidden(J);
  for (std::size_t j = 0; j < J; ++j) {
    hidden[j] = std::tanh(enc_proj_.at(t, j) + pred_proj[j] + b[j]);
  }
  const RowVec logits =
      hidden * Eigen::Map<const RowMatrix>(w.data(), J, V) +
      Eigen::Map<const RowVec>(ob.data(), V);
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  std::vector<double> out(V);
  for (std::size_t v = 0; v < V; ++v) out[v] = logits[v] - lse;
  return out;
}

}  // namespace ibasr
