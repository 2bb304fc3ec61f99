// ibasr/losses/objectives.h
//
// Encoder-side auxiliary losses and the weighted training objective:
//
//   L_AE  = (1 - ic) * L_CTC + ic * L_InterCTC + ib * L_IB
//   L     = ae * L_AE + (1 - ae) * L_Tr
//
// InterCTC and IB both average a CTC loss over the tap layers; they differ
// only in which states feed the heads (raw vs. bias-fused) and in the
// targets (transcript vs. dummy-substituted bias targets).

#ifndef IBASR_LOSSES_OBJECTIVES_H_
#define IBASR_LOSSES_OBJECTIVES_H_

#include <span>

#include "ibasr/numerics/graph.h"

namespace ibasr {

struct LossWeights {
  double ae = 0.3;
  double ic = 0.66;
  double ib = 0.03;

  // Throws ConfigError unless ae, ic in [0, 1] and ib >= 0.
  void validate() const;
};

struct LossComponents {
  double ctc = 0.0;
  double interctc = 0.0;
  double ib = 0.0;
  double transducer = 0.0;
};

// Mean over taps of ctc_loss(tap, target). Throws ContractError for no taps.
Var interctc_loss(std::span<const Var> tap_logp, std::span<const int> target,
                  int blank = 0);
Var ib_loss(std::span<const Var> fused_tap_logp,
            std::span<const int> ib_target, int blank = 0);

double combine_objectives(const LossComponents& c, const LossWeights& w);
Var combine_objectives(Var ctc, Var interctc, Var ib, Var transducer,
                       const LossWeights& w);

}  // namespace ibasr

#endif  // IBASR_LOSSES_OBJECTIVES_H_
