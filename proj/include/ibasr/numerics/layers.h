// ibasr/numerics/layers.h
//
// Small building blocks shared by the model components, plus seeded
// parameter initialization.

#ifndef IBASR_NUMERICS_LAYERS_H_
#define IBASR_NUMERICS_LAYERS_H_

#include <cstdint>
#include <string>

#include "ibasr/numerics/graph.h"

namespace ibasr {

// x W + b, with b a single row.
Var linear(Var x, Var w, Var b);

struct LstmState {
  Var h;
  Var c;
};

// One LSTM step for every row of x. w: in x 4H, u: H x 4H, b: 1 x 4H, with
// gate blocks ordered input, forget, cell, output.
LstmState lstm_step(Var x, const LstmState& prev, Var w, Var u, Var b);

// Deterministic initialization: each tensor draws from its own generator
// seeded by (seed, name), so adding or removing a parameter never shifts
// the values of the others.
std::uint64_t parameter_seed(std::uint64_t seed, const std::string& name);

// Uniform in [-limit, limit] with limit = sqrt(6 / (rows + cols)).
Tensor glorot_uniform(std::size_t rows, std::size_t cols, std::uint64_t seed,
                      const std::string& name);
// Standard normal scaled by `stddev`.
Tensor normal_init(std::size_t rows, std::size_t cols, double stddev,
                   std::uint64_t seed, const std::string& name);

}  // namespace ibasr

#endif  // IBASR_NUMERICS_LAYERS_H_
