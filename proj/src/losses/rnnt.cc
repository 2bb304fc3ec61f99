// ibasr/losses/rnnt.cc

#include "ibasr/losses/rnnt.h"

#include <string>

#include "ibasr/errors.h"
#include "ibasr/losses/log_math.h"

namespace ibasr {
namespace {

Tensor row_log_softmax(const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row_span(r);
    auto out = y.row_span(r);
    const double m = *std::max_element(in.begin(), in.end());
    double s = 0.0;
    for (double v : in) s += std::exp(v - m);
    const double lse = m + std::log(s);
    for (std::size_t c = 0; c < in.size(); ++c) out[c] = in[c] - lse;
  }
  return y;
}

}  // namespace

RnntResult rnnt_loss_from_log_probs(const Tensor& lp,
                                    std::span<const int> target, int blank) {
  const std::size_t U = target.size();
  const std::size_t V = lp.cols();
  if (lp.empty() || lp.rows() == 0) {
    throw InfeasibleError("rnnt_loss: no frames to emit " +
                          std::to_string(U) + " labels");
  }
  if (lp.rows() % (U + 1) != 0) {
    throw DimensionError("rnnt_loss: lattice rows " +
                         std::to_string(lp.rows()) +
                         " not a multiple of U+1 = " + std::to_string(U + 1));
  }
  for (int y : target) {
    if (y == blank) throw ContractError("rnnt_loss: target contains blank");
    if (y < 0 || static_cast<std::size_t>(y) >= V) {
      throw ContractError("rnnt_loss: label " + std::to_string(y) +
                          " outside vocabulary of " + std::to_string(V));
    }
  }
  const std::size_t T = lp.rows() / (U + 1);
  auto cell = [&](std::size_t t, std::size_t u) { return t * (U + 1) + u; };
  auto blank_lp = [&](std::size_t t, std::size_t u) {
    return lp.at(cell(t, u), blank);
  };
  auto emit_lp = [&](std::size_t t, std::size_t u) {
    return lp.at(cell(t, u), target[u]);
  };

  RnntResult r;
  RnntLattice& lat = r.lattice;
  lat.alpha = Tensor({T, U + 1}, kLogZero);
  lat.beta = Tensor({T, U + 1}, kLogZero);
  Tensor& alpha = lat.alpha;
  Tensor& beta = lat.beta;

  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t u = 0; u <= U; ++u) {
      if (t == 0 && u == 0) {
        alpha.at(0, 0) = 0.0;
        continue;
      }
      double a = kLogZero;
      if (t > 0) a = alpha.at(t - 1, u) + blank_lp(t - 1, u);
      if (u > 0) a = log_add(a, alpha.at(t, u - 1) + emit_lp(t, u - 1));
      alpha.at(t, u) = a;
    }
  }
  lat.log_likelihood_alpha = alpha.at(T - 1, U) + blank_lp(T - 1, U);

  for (std::size_t t = T; t-- > 0;) {
    for (std::size_t u = U + 1; u-- > 0;) {
      if (t == T - 1 && u == U) {
        beta.at(t, u) = blank_lp(t, u);
        continue;
      }
      double b = kLogZero;
      if (t + 1 < T) b = beta.at(t + 1, u) + blank_lp(t, u);
      if (u < U) b = log_add(b, beta.at(t, u + 1) + emit_lp(t, u));
      beta.at(t, u) = b;
    }
  }
  lat.log_likelihood_beta = beta.at(0, 0);

  const double log_p = lat.log_likelihood_alpha;
  r.loss = -log_p;
  r.grad = Tensor(lp.shape());
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t u = 0; u <= U; ++u) {
      const double a = alpha.at(t, u);
      // Blank transition out of (t, u).
      const double after_blank =
          (t + 1 < T) ? beta.at(t + 1, u) : (u == U ? 0.0 : kLogZero);
      if (after_blank != kLogZero) {
        r.grad.at(cell(t, u), blank) -=
            std::exp(a + blank_lp(t, u) + after_blank - log_p);
      }
      if (u < U) {
        r.grad.at(cell(t, u), target[u]) -=
            std::exp(a + emit_lp(t, u) + beta.at(t, u + 1) - log_p);
      }
    }
  }
  return r;
}

RnntResult rnnt_loss(const Tensor& logits, std::span<const int> target,
                     int blank) {
  if (logits.empty()) {
    throw InfeasibleError("rnnt_loss: no frames to emit " +
                          std::to_string(target.size()) + " labels");
  }
  const Tensor lp = row_log_softmax(logits);
  RnntResult r = rnnt_loss_from_log_probs(lp, target, blank);
  // Chain through the log-softmax: dz = g - softmax * sum(g).
  Tensor dz(logits.shape());
  for (std::size_t row = 0; row < lp.rows(); ++row) {
    double s = 0.0;
    for (std::size_t c = 0; c < lp.cols(); ++c) s += r.grad.at(row, c);
    for (std::size_t c = 0; c < lp.cols(); ++c) {
      dz.at(row, c) = r.grad.at(row, c) - std::exp(lp.at(row, c)) * s;
    }
  }
  r.grad = std::move(dz);
  return r;
}

Var rnnt_loss(Var logits, std::span<const int> target, int blank) {
  RnntResult r = rnnt_loss(logits.value(), target, blank);
  Graph& g = *logits.graph;
  const std::size_t in = logits.id;
  return g.record(Tensor::scalar(r.loss),
                  [in, grad = std::move(r.grad)](Graph& gr, const Tensor& go) {
                    Tensor& gi = gr.grad_buffer(in);
                    for (std::size_t i = 0; i < grad.size(); ++i) {
                      gi[i] += go[0] * grad[i];
                    }
                  });
}

}  // namespace ibasr
