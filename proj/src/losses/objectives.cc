// ibasr/losses/objectives.cc

#include "ibasr/losses/objectives.h"

#include <cmath>
#include <vector>

#include "ibasr/errors.h"
#include "ibasr/losses/ctc.h"
#include "ibasr/numerics/ops.h"

namespace ibasr {

void LossWeights::validate() const {
  auto unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
  if (!unit(ae)) throw ConfigError("lambda_ae must lie in [0, 1]");
  if (!unit(ic)) throw ConfigError("lambda_ic must lie in [0, 1]");
  if (!std::isfinite(ib) || ib < 0.0) {
    throw ConfigError("lambda_ib must be non-negative");
  }
}

namespace {

Var mean_ctc(std::span<const Var> taps, std::span<const int> target,
             int blank, const char* what) {
  if (taps.empty()) {
    throw ContractError(std::string(what) + ": no tap layers");
  }
  Var total = ctc_loss(taps[0], target, blank);
  for (std::size_t k = 1; k < taps.size(); ++k) {
    total = add(total, ctc_loss(taps[k], target, blank));
  }
  return scale(total, 1.0 / static_cast<double>(taps.size()));
}

}  // namespace

Var interctc_loss(std::span<const Var> tap_logp, std::span<const int> target,
                  int blank) {
  return mean_ctc(tap_logp, target, blank, "interctc_loss");
}

Var ib_loss(std::span<const Var> fused_tap_logp,
            std::span<const int> ib_target, int blank) {
  return mean_ctc(fused_tap_logp, ib_target, blank, "ib_loss");
}

double combine_objectives(const LossComponents& c, const LossWeights& w) {
  const double encoder =
      (1.0 - w.ic) * c.ctc + w.ic * c.interctc + w.ib * c.ib;
  return w.ae * encoder + (1.0 - w.ae) * c.transducer;
}

Var combine_objectives(Var ctc, Var interctc, Var ib, Var transducer,
                       const LossWeights& w) {
  Var encoder = add(add(scale(ctc, 1.0 - w.ic), scale(interctc, w.ic)),
                    scale(ib, w.ib));
  return add(scale(encoder, w.ae), scale(transducer, 1.0 - w.ae));
}

}  // namespace ibasr
