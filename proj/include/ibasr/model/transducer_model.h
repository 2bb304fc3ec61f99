// ibasr/model/transducer_model.h
//
// Contextual InterCTC RNN-transducer.
//
// Audio encoder: optional frame stacking (subsample), input projection,
// sinusoidal positions, then N pre-norm blocks
//     y = x + SelfAttention(LN1(x)),   x' = y + FFN(LN2(y)).
// After block k in `taps`, a CB module attends to the phrase embeddings;
// the fused states feed block k+1 when `propagate_fused` is set. InterCTC
// heads read the raw tap states, IB heads read the fused ones. A further CB
// module fuses the final states for the joiner; the final CTC head reads
// the unfused final states.
//
// Predictor: one LSTM layer over [<sos>, y_1, ..., y_U] followed by its own
// CB module. Joiner: tanh(h_enc W_e + h_pred W_p + b) W_o + b_o.
//
// With `biasing` off the context encoder and every CB module are absent
// (the non-contextual baseline).
//
// Parameter names:
//   enc.in.{w,b}  enc.l<i>.{ln1.g,ln1.b,att.q,att.k,att.v,att.o,ln2.g,ln2.b,
//   ffn.w1,ffn.b1,ffn.w2,ffn.b2}  (i = 1..N)
//   ctc.final.{w,b}  ctc.tap<k>.{w,b}  ib.tap<k>.{w,b}
//   cb.tap<k>.*  cb.enc.*  cb.pred.*  ctx.*
//   pred.{embed,w,u,b}  join.{enc,pred,b,out,out_b}

#ifndef IBASR_MODEL_TRANSDUCER_MODEL_H_
#define IBASR_MODEL_TRANSDUCER_MODEL_H_

#include <cstdint>
#include <span>
#include <vector>

#include "ibasr/biasing/cb_attention.h"
#include "ibasr/context/context_encoder.h"
#include "ibasr/datagen/bias_list.h"
#include "ibasr/numerics/graph.h"

namespace ibasr {

struct ModelConfig {
  std::size_t feature_dim = 16;
  std::size_t vocab_size = 0;  // output classes, blank included
  std::size_t width = 64;      // S
  std::size_t layers = 6;      // N
  std::size_t heads = 4;
  std::size_t ffn = 128;
  std::size_t subsample = 1;
  std::vector<std::size_t> taps{2, 4};
  bool biasing = true;
  bool propagate_fused = true;
  std::size_t cb_heads = 4;
  bool cb_output_projection = true;
  bool cb_query_norm = false;
  std::size_t ctx_embed = 64;
  std::size_t ctx_hidden = 32;  // per direction
  std::size_t ctx_layers = 2;
  double ctx_proj_gain = 1.0;
  std::size_t joiner = 64;

  // Throws ConfigError for inconsistent settings.
  void validate() const;
  ContextEncoderConfig context_config() const;
  CBConfig cb_config() const;
};

ParameterSet init_model(const ModelConfig& cfg, std::uint64_t seed);

// Names of the value projections of every CB module.
std::vector<std::string> cb_value_parameters(const ModelConfig& cfg);

struct EncoderOutput {
  Var final_states;                     // H_N, T' x S
  std::vector<Var> tap_states;          // H_k per tap
  std::vector<Var> tap_fused;           // H'_k per tap (biasing only)
  std::vector<AttentionOutput> tap_attention;
  Var fused_final;                      // H'_N (= H_N without biasing)
};

struct ForwardOutput {
  EncoderOutput encoder;
  std::vector<Var> interctc_logp;  // per tap, T' x V
  std::vector<Var> ib_logp;        // per tap, T' x V (biasing only)
  Var ctc_logp;                    // T' x V
  Var lattice;                     // T' x (U+1) x V joiner logits
  std::size_t frames = 0;          // T'
};

// Phrase embeddings for a bias list; only valid with biasing on.
Var encode_context(Graph& g, const BiasList& list, const ParameterSet& params,
                   const ModelConfig& cfg);

// Frame stacking: T x D -> floor(T / s) x (D s). Throws InfeasibleError if
// no frame survives.
Tensor subsample_features(const Tensor& features, std::size_t factor);

// `ctx` is ignored without biasing. Throws DimensionError if the features
// are not feature_dim wide.
EncoderOutput encode(Graph& g, const Tensor& features, Var ctx,
                     const ParameterSet& params, const ModelConfig& cfg);

struct PredictorState {
  Tensor h;  // 1 x S
  Tensor c;  // 1 x S
  int last = -1;

  static PredictorState initial(const ModelConfig& cfg);
};

// One predictor step on `y_prev` (a token or <sos>). Returns the predictor
// output row and stores the advanced state in `next`. Throws ContractError
// for the blank id.
Var predictor_step(Graph& g, int y_prev, const PredictorState& state,
                   const ParameterSet& params, const ModelConfig& cfg,
                   PredictorState* next);

// Predictor outputs for <sos>, y_1, ..., y_U: (U+1) x S.
Var predictor_sequence(Graph& g, std::span<const int> targets,
                       const ParameterSet& params, const ModelConfig& cfg);

// Joiner logits for every pair (enc row i, pred row j) at row
// i * pred.rows + j. Pass CB-fused inputs for the contextual joiner.
Var joiner(Var h_enc, Var h_pred, const ParameterSet& params,
           const ModelConfig& cfg);

ForwardOutput forward(Graph& g, const Tensor& features,
                      std::span<const int> targets, Var ctx,
                      const ParameterSet& params, const ModelConfig& cfg);

// Inference-time view of one utterance: encoder and final CTC posteriors are
// computed once; predictor steps and joiner evaluations are cheap calls.
class TransducerSession {
 public:
  TransducerSession(const ParameterSet& params, const ModelConfig& cfg,
                    const Tensor& features, const BiasList& list);

  std::size_t frames() const { return enc_proj_.rows(); }
  std::size_t vocab_size() const { return cfg_.vocab_size; }
  const Tensor& ctc_log_probs() const { return ctc_logp_; }

  struct PredictorOutput {
    PredictorState state;
    Tensor proj;  // 1 x J: fused predictor output times W_p
  };
  PredictorOutput predict(int y_prev, const PredictorState& state) const;
  PredictorOutput start() const;

  // Joiner log-posteriors (log_softmax over all classes) at frame t.
  std::vector<double> log_probs(std::size_t t, const Tensor& pred_proj) const;

 private:
  const ParameterSet& params_;
  ModelConfig cfg_;
  Tensor ctx_;       // (M+1) x S, empty without biasing
  Tensor enc_proj_;  // T' x J: fused final states times W_e
  Tensor ctc_logp_;  // T' x V
};

}  // namespace ibasr

#endif  // IBASR_MODEL_TRANSDUCER_MODEL_H_
