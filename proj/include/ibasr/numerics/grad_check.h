// ibasr/numerics/grad_check.h
//
// Central finite-difference verification of analytic gradients.
//
// The reported error for one coordinate is
//     |analytic - numeric| / max(1e-8, |numeric|)
// and grad_check returns the maximum over all checked coordinates.

#ifndef IBASR_NUMERICS_GRAD_CHECK_H_
#define IBASR_NUMERICS_GRAD_CHECK_H_

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ibasr/numerics/graph.h"

namespace ibasr {

// Builds a scalar from one input node.
using ScalarFn = std::function<Var(Graph&, Var)>;
// Builds a scalar from a set of named parameters registered on the graph.
using ParamScalarFn = std::function<Var(Graph&, const ParameterSet&)>;

double relative_error(double analytic, double numeric);

// Gradient of f at x from the tape (one backward pass).
Tensor analytic_gradient(const ScalarFn& f, const Tensor& x);

double grad_check(const ScalarFn& f, const Tensor& x, double eps = 1e-5);

struct ParamCheckOptions {
  double eps = 1e-5;
  // Check at most this many randomly chosen coordinates per tensor
  // (all coordinates when unset).
  std::optional<std::size_t> max_coords_per_tensor;
  std::uint64_t seed = 7;
  // Restrict the check to these parameter names (all when empty).
  std::vector<std::string> only;
};

struct ParamCheckResult {
  double max_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t coords_checked = 0;
};

ParamCheckResult grad_check_params(const ParamScalarFn& f,
                                   const ParameterSet& params,
                                   const ParamCheckOptions& options = {});

}  // namespace ibasr

#endif  // IBASR_NUMERICS_GRAD_CHECK_H_
