// ibasr/harness/optimizer.cc

#include "ibasr/harness/optimizer.h"

#include <algorithm>
#include <cmath>

#include "ibasr/errors.h"

namespace ibasr {

double lr_schedule(std::size_t step, double base_lr, std::size_t warmup) {
  if (warmup == 0) throw ConfigError("warmup must be at least 1 step");
  if (step == 0) return 0.0;
  const double s = static_cast<double>(step), w = static_cast<double>(warmup);
  return base_lr * std::min(s / w, std::sqrt(w / s));
}

void adam_step(ParameterSet& params, const Gradients& grads, OptimState& state,
               double lr, const AdamConfig& cfg, const std::set<std::string>& frozen) {
  for (const auto& [name, g] : grads) {
    auto it = params.find(name);
    if (it == params.end()) throw ContractError("gradient for unknown parameter " + name);
    if (g.shape() != it->second.shape()) {
      throw DimensionError("gradient shape mismatch for " + name);
    }
    for (double x : g.values()) {
      if (!std::isfinite(x)) throw EvaluationError("non-finite gradient in parameter " + name);
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (auto& [name, p] : params) {
    if (frozen.count(name)) continue;
    auto [mit, m_new] = state.m.try_emplace(name, Tensor(p.shape()));
    auto [vit, v_new] = state.v.try_emplace(name, Tensor(p.shape()));
    auto gi = grads.find(name);
    auto m = mit->second.values();
    auto v = vit->second.values();
    auto w = p.values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double g = gi == grads.end() ? 0.0 : gi->second.values()[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.eps);
    }
  }
}

}  // namespace ibasr
