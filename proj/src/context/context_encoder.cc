// ibasr/context/context_encoder.cc

#include "ibasr/context/context_encoder.h"

#include "ibasr/errors.h"
#include "ibasr/numerics/layers.h"
#include "ibasr/numerics/ops.h"

namespace ibasr {
namespace {

std::string cell_name(const std::string& prefix, std::size_t layer,
                      const char* dir, const char* what) {
  return prefix + ".l" + std::to_string(layer) + "." + dir + "." + what;
}

// Runs one direction of one layer; returns the hidden state at every
// position (in position order).
std::vector<Var> run_direction(Graph& g, const std::vector<Var>& inputs,
                               bool reverse, const ParameterSet& params,
                               const std::string& prefix, std::size_t layer,
                               std::size_t hidden) {
  const char* dir = reverse ? "bw" : "fw";
  Var w = g.parameter(cell_name(prefix, layer, dir, "w"), params);
  Var u = g.parameter(cell_name(prefix, layer, dir, "u"), params);
  Var b = g.parameter(cell_name(prefix, layer, dir, "b"), params);
  const std::size_t rows = inputs.front().rows();
  LstmState state{g.constant(Tensor::zeros(rows, hidden)),
                  g.constant(Tensor::zeros(rows, hidden))};
  std::vector<Var> out(inputs.size());
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const std::size_t t = reverse ? inputs.size() - 1 - k : k;
    state = lstm_step(inputs[t], state, w, u, b);
    out[t] = state.h;
  }
  return out;
}

}  // namespace

void ContextEncoderConfig::validate() const {
  if (vocab_size == 0 || embed_dim == 0 || hidden == 0 || layers == 0 ||
      out_dim == 0 || !(proj_gain > 0.0)) {
    throw ConfigError("context encoder dimensions must be positive");
  }
}

void init_context_encoder(const ContextEncoderConfig& cfg, std::uint64_t seed,
                          ParameterSet& params, const std::string& prefix) {
  cfg.validate();
  const std::size_t H = cfg.hidden;
  params[prefix + ".embed"] =
      normal_init(cfg.vocab_size, cfg.embed_dim, 1.0, seed, prefix + ".embed");
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const std::size_t in = l == 0 ? cfg.embed_dim : 2 * H;
    for (const char* dir : {"fw", "bw"}) {
      const auto w = cell_name(prefix, l, dir, "w");
      const auto u = cell_name(prefix, l, dir, "u");
      params[w] = glorot_uniform(in, 4 * H, seed, w);
      params[u] = glorot_uniform(H, 4 * H, seed, u);
      Tensor b({1, 4 * H});
      for (std::size_t j = H; j < 2 * H; ++j) b[j] = 1.0;  // forget gate
      params[cell_name(prefix, l, dir, "b")] = b;
    }
  }
  Tensor proj = glorot_uniform(2 * H, cfg.out_dim, seed, prefix + ".proj.w");
  for (double& v : proj.values()) v *= cfg.proj_gain;
  params[prefix + ".proj.w"] = std::move(proj);
  params[prefix + ".proj.b"] = Tensor({1, cfg.out_dim});
}

Var encode_bias_list(Graph& g, const BiasList& list, const ParameterSet& params,
                     const ContextEncoderConfig& cfg,
                     const std::string& prefix) {
  const auto padded = list.padded();
  const std::size_t rows = padded.size();
  const std::size_t L = list.l_max;
  for (const auto& p : padded) {
    for (int t : p) {
      if (t < 0 || static_cast<std::size_t>(t) >= cfg.vocab_size) {
        throw DataError("bias phrase token " + std::to_string(t) +
                        " outside a vocabulary of " +
                        std::to_string(cfg.vocab_size));
      }
    }
  }
  Var embed = g.parameter(prefix + ".embed", params);
  std::vector<Var> inputs(L);
  std::vector<int> ids(rows);
  for (std::size_t t = 0; t < L; ++t) {
    for (std::size_t m = 0; m < rows; ++m) ids[m] = padded[m][t];
    inputs[t] = gather_rows(embed, ids);
  }
  std::vector<Var> fw, bw;
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    fw = run_direction(g, inputs, false, params, prefix, l, cfg.hidden);
    bw = run_direction(g, inputs, true, params, prefix, l, cfg.hidden);
    if (l + 1 < cfg.layers) {
      for (std::size_t t = 0; t < L; ++t) {
        const Var both[] = {fw[t], bw[t]};
        inputs[t] = concat(both, 1);
      }
    }
  }
  const Var final_state[] = {fw.back(), bw.front()};
  return linear(concat(final_state, 1), g.parameter(prefix + ".proj.w", params),
                g.parameter(prefix + ".proj.b", params));
}

}  // namespace ibasr
