// ibasr/losses/ctc.cc

#include "ibasr/losses/ctc.h"

#include <string>

#include "ibasr/errors.h"
#include "ibasr/losses/log_math.h"

namespace ibasr {

std::size_t ctc_min_frames(std::span<const int> target) {
  std::size_t n = target.size();
  for (std::size_t i = 1; i < target.size(); ++i) {
    if (target[i] == target[i - 1]) ++n;
  }
  return n;
}

CtcResult ctc_loss(const Tensor& logp, std::span<const int> target,
                   int blank) {
  const std::size_t T = logp.rows();
  const std::size_t V = logp.cols();
  for (int y : target) {
    if (y == blank) throw ContractError("ctc_loss: target contains blank");
    if (y < 0 || static_cast<std::size_t>(y) >= V) {
      throw ContractError("ctc_loss: label " + std::to_string(y) +
                          " outside vocabulary of " + std::to_string(V));
    }
  }
  if (logp.empty() || T < ctc_min_frames(target)) {
    throw InfeasibleError("ctc_loss: " + std::to_string(logp.empty() ? 0 : T) +
                          " frames cannot emit a target needing " +
                          std::to_string(ctc_min_frames(target)));
  }

  CtcResult r;
  CtcLattice& lat = r.lattice;
  const std::size_t S = 2 * target.size() + 1;
  lat.expanded.assign(S, blank);
  for (std::size_t u = 0; u < target.size(); ++u) {
    lat.expanded[2 * u + 1] = target[u];
  }
  const auto& l = lat.expanded;
  // A label state may be entered from two states back unless it repeats
  // the label there (or is blank).
  auto can_skip = [&](std::size_t s) {
    return s >= 2 && l[s] != blank && l[s] != l[s - 2];
  };

  lat.alpha = Tensor({T, S}, kLogZero);
  lat.beta = Tensor({T, S}, kLogZero);
  Tensor& alpha = lat.alpha;
  Tensor& beta = lat.beta;

  alpha.at(0, 0) = logp.at(0, l[0]);
  if (S > 1) alpha.at(0, 1) = logp.at(0, l[1]);
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      double a = alpha.at(t - 1, s);
      if (s >= 1) a = log_add(a, alpha.at(t - 1, s - 1));
      if (can_skip(s)) a = log_add(a, alpha.at(t - 1, s - 2));
      if (a != kLogZero) alpha.at(t, s) = a + logp.at(t, l[s]);
    }
  }
  lat.log_likelihood_alpha = alpha.at(T - 1, S - 1);
  if (S > 1) {
    lat.log_likelihood_alpha =
        log_add(lat.log_likelihood_alpha, alpha.at(T - 1, S - 2));
  }

  beta.at(T - 1, S - 1) = 0.0;
  if (S > 1) beta.at(T - 1, S - 2) = 0.0;
  for (std::size_t t = T - 1; t-- > 0;) {
    for (std::size_t s = 0; s < S; ++s) {
      double b = beta.at(t + 1, s) + logp.at(t + 1, l[s]);
      if (s + 1 < S) {
        b = log_add(b, beta.at(t + 1, s + 1) + logp.at(t + 1, l[s + 1]));
      }
      if (s + 2 < S && can_skip(s + 2)) {
        b = log_add(b, beta.at(t + 1, s + 2) + logp.at(t + 1, l[s + 2]));
      }
      beta.at(t, s) = b;
    }
  }
  lat.log_likelihood_beta = beta.at(0, 0) + logp.at(0, l[0]);
  if (S > 1) {
    lat.log_likelihood_beta =
        log_add(lat.log_likelihood_beta, beta.at(0, 1) + logp.at(0, l[1]));
  }

  const double log_p = lat.log_likelihood_alpha;
  if (log_p == kLogZero) {
    throw InfeasibleError("ctc_loss: target has zero probability");
  }
  r.loss = -log_p;
  r.grad = Tensor(logp.shape());
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      const double occ = alpha.at(t, s) + beta.at(t, s);
      if (occ == kLogZero) continue;
      r.grad.at(t, l[s]) -= std::exp(occ - log_p);
    }
  }
  return r;
}

Var ctc_loss(Var logp, std::span<const int> target, int blank) {
  CtcResult r = ctc_loss(logp.value(), target, blank);
  Graph& g = *logp.graph;
  const std::size_t in = logp.id;
  return g.record(Tensor::scalar(r.loss),
                  [in, grad = std::move(r.grad)](Graph& gr, const Tensor& go) {
                    Tensor& gi = gr.grad_buffer(in);
                    for (std::size_t i = 0; i < grad.size(); ++i) {
                      gi[i] += go[0] * grad[i];
                    }
                  });
}

}  // namespace ibasr
