// ibasr/losses/rnnt.h
//
// RNN-transducer loss. The joint network produces logits for every
// (frame t, emitted-prefix length u) cell of a T' x (U+1) grid; a path moves
// right by emitting blank (t -> t+1) and up by emitting y_{u+1}
// (u -> u+1). The path ends with a blank from cell (T'-1, U).

#ifndef IBASR_LOSSES_RNNT_H_
#define IBASR_LOSSES_RNNT_H_

#include <span>

#include "ibasr/numerics/graph.h"

namespace ibasr {

struct RnntLattice {
  // alpha(t, u): log mass of reaching cell (t, u).
  Tensor alpha;
  // beta(t, u): log mass of finishing from cell (t, u), including the
  // final blank.
  Tensor beta;
  double log_likelihood_alpha = 0.0;  // alpha(T'-1, U) + final blank
  double log_likelihood_beta = 0.0;   // beta(0, 0)
};

struct RnntResult {
  double loss = 0.0;
  Tensor grad;  // d loss / d logits, same shape as the logits
  RnntLattice lattice;
};

// logits: T' x (U+1) x V (any shape whose rows() equal T'(U+1)). The
// log-softmax over V is applied internally.
// Throws InfeasibleError for T' = 0 and ContractError for blank or
// out-of-range target labels.
RnntResult rnnt_loss(const Tensor& logits, std::span<const int> target,
                     int blank = 0);

// Same, but from already-normalized log-probs (grad is w.r.t. log-probs).
RnntResult rnnt_loss_from_log_probs(const Tensor& log_probs,
                                    std::span<const int> target,
                                    int blank = 0);

Var rnnt_loss(Var logits, std::span<const int> target, int blank = 0);

}  // namespace ibasr

#endif  // IBASR_LOSSES_RNNT_H_
