// ibasr/harness/optimizer.h
//
// Adam with bias correction and a warmup / inverse-square-root schedule.

#ifndef IBASR_HARNESS_OPTIMIZER_H_
#define IBASR_HARNESS_OPTIMIZER_H_

#include <cstddef>
#include <set>
#include <string>

#include "ibasr/numerics/graph.h"

namespace ibasr {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimState {
  ParameterSet m;  // first moments, shaped like the parameters
  ParameterSet v;  // second moments
  std::size_t step = 0;
};

// base_lr * min(step / warmup, sqrt(warmup / step)); 0 at step 0. Throws
// ConfigError for warmup = 0.
double lr_schedule(std::size_t step, double base_lr, std::size_t warmup);

// One update of every parameter not listed in `frozen`. Parameters missing
// from `grads` are treated as having zero gradient. Throws DimensionError on
// shape mismatch and EvaluationError naming the parameter when a gradient
// is not finite (nothing is updated in that case).
void adam_step(ParameterSet& params, const Gradients& grads, OptimState& state,
               double lr, const AdamConfig& cfg = {},
               const std::set<std::string>& frozen = {});

}  // namespace ibasr

#endif  // IBASR_HARNESS_OPTIMIZER_H_
