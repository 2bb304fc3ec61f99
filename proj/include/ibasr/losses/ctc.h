// ibasr/losses/ctc.h
//
// Connectionist temporal classification loss over per-frame log-posteriors,
// computed with log-domain forward/backward recursions over the
// blank-interleaved label sequence.

#ifndef IBASR_LOSSES_CTC_H_
#define IBASR_LOSSES_CTC_H_

#include <span>
#include <vector>

#include "ibasr/numerics/graph.h"

namespace ibasr {

struct CtcLattice {
  // Target with blanks interleaved: [blank, y1, blank, y2, ..., blank].
  std::vector<int> expanded;
  // alpha(t, s): log mass of prefixes ending in state s at frame t,
  // including the emission at t.
  Tensor alpha;
  // beta(t, s): log mass of completing from state s after frame t
  // (emission at t excluded).
  Tensor beta;
  double log_likelihood_alpha = 0.0;
  double log_likelihood_beta = 0.0;
};

struct CtcResult {
  double loss = 0.0;  // -log P(target | logp)
  Tensor grad;        // d loss / d logp, same shape as logp
  CtcLattice lattice;
};

// Minimum frame count needed to emit `target`: one per label plus one blank
// between each pair of identical neighbours.
std::size_t ctc_min_frames(std::span<const int> target);

// logp: T' x V log-posteriors (need not be normalized). Throws
// InfeasibleError when T' < ctc_min_frames(target) and ContractError when
// the target contains the blank id or an id outside [0, V).
CtcResult ctc_loss(const Tensor& logp, std::span<const int> target,
                   int blank = 0);

// Graph node version; the gradient above is wired into the tape.
Var ctc_loss(Var logp, std::span<const int> target, int blank = 0);

}  // namespace ibasr

#endif  // IBASR_LOSSES_CTC_H_
