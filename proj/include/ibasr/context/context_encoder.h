// ibasr/context/context_encoder.h
//
// Bias-phrase encoder: token embedding, a stack of bidirectional LSTM
// layers run over the full padded phrase, and a linear projection of the
// final states (forward state after the last position, backward state after
// the first) to the model width S. All M+1 phrases are processed as rows of
// one batch per time step.
//
// Parameter names under `prefix` (default "ctx"):
//   embed                        |V| x E
//   l<k>.fw.{w,u,b}, l<k>.bw.{w,u,b}   per layer k = 0..layers-1
//   proj.w (2H x S), proj.b (1 x S)
//
// proj.w starts as a Glorot draw multiplied by proj_gain.

#ifndef IBASR_CONTEXT_CONTEXT_ENCODER_H_
#define IBASR_CONTEXT_CONTEXT_ENCODER_H_

#include <cstdint>
#include <string>

#include "ibasr/datagen/bias_list.h"
#include "ibasr/numerics/graph.h"

namespace ibasr {

struct ContextEncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 32;
  std::size_t hidden = 16;  // per direction
  std::size_t layers = 2;
  std::size_t out_dim = 32;
  double proj_gain = 1.0;

  void validate() const;
};

// Adds freshly initialized encoder parameters to `params`.
void init_context_encoder(const ContextEncoderConfig& cfg, std::uint64_t seed,
                          ParameterSet& params,
                          const std::string& prefix = "ctx");

// (M+1) x S phrase embeddings; row m encodes list.phrases[m]. Throws
// DataError for token ids outside the vocabulary.
Var encode_bias_list(Graph& g, const BiasList& list, const ParameterSet& params,
                     const ContextEncoderConfig& cfg,
                     const std::string& prefix = "ctx");

}  // namespace ibasr

#endif  // IBASR_CONTEXT_CONTEXT_ENCODER_H_
