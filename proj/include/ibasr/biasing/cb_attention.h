// ibasr/biasing/cb_attention.h
//
// Contextual biasing: multi-head cross-attention from hidden states (queries)
// to phrase embeddings (keys and values), with the resulting bias vector
// added back onto the hidden states.
//
//   A_j = softmax(n(h) Wq_j (ctx Wk_j)^T / sqrt(S / n_heads))   per head j
//   e   = concat_j(A_j ctx Wv_j) Wo                          (Wo optional)
//   h'  = h + e
//
// n is a layer norm when query_norm is set and the identity otherwise.
// Parameter names under `prefix`: q, k, v and, with an output projection,
// o; all S x S. The query norm adds qn.g and qn.b (1 x S).

#ifndef IBASR_BIASING_CB_ATTENTION_H_
#define IBASR_BIASING_CB_ATTENTION_H_

#include <cstdint>
#include <string>
#include <vector>

#include "ibasr/numerics/graph.h"

namespace ibasr {

struct CBConfig {
  std::size_t width = 32;
  std::size_t n_heads = 4;
  bool output_projection = true;
  bool query_norm = false;

  void validate() const;
};

struct AttentionOutput {
  std::vector<Var> scores;  // per head, T' x (M+1), rows sum to 1
  Var bias;                 // T' x S
  Var fused;                // T' x S
};

void init_cb(const CBConfig& cfg, std::uint64_t seed, ParameterSet& params,
             const std::string& prefix);

// Throws DimensionError if h or ctx is not S wide, ContractError if ctx has
// no rows.
AttentionOutput cb_attend(Var h, Var ctx, const ParameterSet& params,
                          const CBConfig& cfg, const std::string& prefix);

}  // namespace ibasr

#endif  // IBASR_BIASING_CB_ATTENTION_H_
