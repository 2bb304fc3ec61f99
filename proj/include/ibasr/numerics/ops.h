// ibasr/numerics/ops.h
//
// Differentiable operators on Graph nodes. All operators treat their inputs
// as rank-2 (rows x cols, see Tensor::rows/cols). Shape violations throw
// DimensionError.

#ifndef IBASR_NUMERICS_OPS_H_
#define IBASR_NUMERICS_OPS_H_

#include <span>
#include <vector>

#include "ibasr/numerics/graph.h"

namespace ibasr {

// a[m x k] * b[k x n]
Var matmul(Var a, Var b);
// a[m x k] * b[n x k]^T
Var matmul_nt(Var a, Var b);
Var transpose(Var a);

// Elementwise sum. `b` may have the same shape as `a`, be a single row
// (broadcast over rows of `a`), or be 1x1 (broadcast everywhere).
Var add(Var a, Var b);
Var sub(Var a, Var b);
// Elementwise product, same shapes.
Var mul(Var a, Var b);
Var scale(Var a, double factor);

Var tanh(Var a);
Var sigmoid(Var a);
Var relu(Var a);
Var exp(Var a);

// axis = 1: normalize each row; axis = 0: normalize each column.
Var log_softmax(Var a, int axis = 1);
Var softmax(Var a, int axis = 1);

// axis = 1 joins columns (all parts share a row count); axis = 0 stacks rows.
Var concat(std::span<const Var> parts, int axis);
Var slice(Var a, int axis, std::size_t start, std::size_t length);
// Elementwise multiplication by a constant 0/1 (or any constant) tensor.
Var mask(Var a, const Tensor& keep);

// Per-row layer normalization with learned gain and bias rows (1 x cols).
Var layer_norm(Var a, Var gain, Var bias, double eps = 1e-5);

// Embedding lookup: output row i = table row ids[i].
Var gather_rows(Var table, std::span<const int> ids);
// Repeats a single row `n` times.
Var repeat_rows(Var row, std::size_t n);

// out[i * b.rows + j] = a[i] + b[j]; used to build the transducer joint
// lattice from encoder frames and predictor positions.
Var outer_add(Var a, Var b);

Var reshape(Var a, Shape shape);
Var sum(Var a);
Var mean(Var a);

}  // namespace ibasr

#endif  // IBASR_NUMERICS_OPS_H_
