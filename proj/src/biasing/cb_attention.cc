// ibasr/biasing/cb_attention.cc

#include "ibasr/biasing/cb_attention.h"

#include <cmath>

#include "ibasr/errors.h"
#include "ibasr/numerics/layers.h"
#include "ibasr/numerics/ops.h"

namespace ibasr {

void CBConfig::validate() const {
  if (width == 0 || n_heads == 0 || width % n_heads != 0) {
    throw ConfigError("CB width " + std::to_string(width) +
                      " must be a positive multiple of n_heads " +
                      std::to_string(n_heads));
  }
}

void init_cb(const CBConfig& cfg, std::uint64_t seed, ParameterSet& params,
             const std::string& prefix) {
  cfg.validate();
  const std::size_t S = cfg.width;
  for (const char* m : {"q", "k", "v"}) {
    params[prefix + "." + m] = glorot_uniform(S, S, seed, prefix + "." + m);
  }
  if (cfg.output_projection) {
    params[prefix + ".o"] = glorot_uniform(S, S, seed, prefix + ".o");
  }
  if (cfg.query_norm) {
    params[prefix + ".qn.g"] = Tensor({1, S}, 1.0);
    params[prefix + ".qn.b"] = Tensor({1, S});
  }
}

AttentionOutput cb_attend(Var h, Var ctx, const ParameterSet& params,
                          const CBConfig& cfg, const std::string& prefix) {
  cfg.validate();
  const std::size_t S = cfg.width;
  if (h.cols() != S || ctx.cols() != S) {
    throw DimensionError("cb_attend: expected width " + std::to_string(S) +
                         ", got hidden " + std::to_string(h.cols()) +
                         " and context " + std::to_string(ctx.cols()));
  }
  if (ctx.rows() == 0) throw ContractError("cb_attend: empty context");
  Graph& g = *h.graph;
  Var qin = cfg.query_norm ? layer_norm(h, g.parameter(prefix + ".qn.g", params),
                                        g.parameter(prefix + ".qn.b", params))
                           : h;
  Var q = matmul(qin, g.parameter(prefix + ".q", params));
  Var k = matmul(ctx, g.parameter(prefix + ".k", params));
  Var v = matmul(ctx, g.parameter(prefix + ".v", params));
  const std::size_t dh = S / cfg.n_heads;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));

  AttentionOutput out;
  std::vector<Var> heads;
  for (std::size_t j = 0; j < cfg.n_heads; ++j) {
    Var logits = scale(matmul_nt(slice(q, 1, j * dh, dh), slice(k, 1, j * dh, dh)),
                       inv_scale);
    Var a = softmax(logits, 1);
    out.scores.push_back(a);
    heads.push_back(matmul(a, slice(v, 1, j * dh, dh)));
  }
  Var e = cfg.n_heads == 1 ? heads.front() : concat(heads, 1);
  if (cfg.output_projection) e = matmul(e, g.parameter(prefix + ".o", params));
  out.bias = e;
  out.fused = add(h, e);
  return out;
}

}  // namespace ibasr
