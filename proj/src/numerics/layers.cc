// ibasr/numerics/layers.cc

#include "ibasr/numerics/layers.h"

#include <cmath>
#include <random>

#include "ibasr/errors.h"
#include "ibasr/numerics/ops.h"

namespace ibasr {

Var linear(Var x, Var w, Var b) { return add(matmul(x, w), b); }

LstmState lstm_step(Var x, const LstmState& prev, Var w, Var u, Var b) {
  const std::size_t H = u.rows();
  if (u.cols() != 4 * H || w.cols() != 4 * H || b.cols() != 4 * H) {
    throw DimensionError("lstm_step: gate weights must have 4H columns");
  }
  Var gates = add(add(matmul(x, w), matmul(prev.h, u)), b);
  Var i = sigmoid(slice(gates, 1, 0, H));
  Var f = sigmoid(slice(gates, 1, H, H));
  Var g = tanh(slice(gates, 1, 2 * H, H));
  Var o = sigmoid(slice(gates, 1, 3 * H, H));
  Var c = add(mul(f, prev.c), mul(i, g));
  return {mul(o, tanh(c)), c};
}

std::uint64_t parameter_seed(std::uint64_t seed, const std::string& name) {
  // FNV-1a over the name, mixed with the run seed.
  std::uint64_t h = 1469598103934665603ULL ^ seed;
  for (unsigned char ch : name) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

Tensor glorot_uniform(std::size_t rows, std::size_t cols, std::uint64_t seed,
                      const std::string& name) {
  std::mt19937_64 rng(parameter_seed(seed, name));
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor t({rows, cols});
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

Tensor normal_init(std::size_t rows, std::size_t cols, double stddev,
                   std::uint64_t seed, const std::string& name) {
  std::mt19937_64 rng(parameter_seed(seed, name));
  std::normal_distribution<double> dist(0.0, stddev);
  Tensor t({rows, cols});
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

}  // namespace ibasr
