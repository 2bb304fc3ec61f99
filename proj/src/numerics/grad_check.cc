// ibasr/numerics/grad_check.cc

#include "ibasr/numerics/grad_check.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ibasr/errors.h"

namespace ibasr {
namespace {

double evaluate(const ScalarFn& f, const Tensor& x) {
  Graph g;
  g.set_grad_enabled(false);
  const double v = f(g, g.constant(x)).value().item();
  if (!std::isfinite(v)) throw EvaluationError("grad_check: f is not finite");
  return v;
}

double evaluate(const ParamScalarFn& f, const ParameterSet& params) {
  Graph g;
  g.set_grad_enabled(false);
  const double v = f(g, params).value().item();
  if (!std::isfinite(v)) throw EvaluationError("grad_check: f is not finite");
  return v;
}

}  // namespace

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(numeric));
}

Tensor analytic_gradient(const ScalarFn& f, const Tensor& x) {
  Graph g;
  Var xv = g.parameter("x", x);
  Var y = f(g, xv);
  if (!std::isfinite(y.value().item())) {
    throw EvaluationError("grad_check: f(x) is not finite");
  }
  g.backward(y);
  return g.gradient(xv);
}

double grad_check(const ScalarFn& f, const Tensor& x, double eps) {
  const Tensor analytic = analytic_gradient(f, x);
  double worst = 0.0;
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const double up = evaluate(f, probe);
    probe[i] = x[i] - eps;
    const double down = evaluate(f, probe);
    probe[i] = x[i];
    worst = std::max(worst, relative_error(analytic[i], (up - down) / (2 * eps)));
  }
  return worst;
}

ParamCheckResult grad_check_params(const ParamScalarFn& f,
                                   const ParameterSet& params,
                                   const ParamCheckOptions& options) {
  Gradients analytic;
  {
    Graph g;
    Var y = f(g, params);
    if (!std::isfinite(y.value().item())) {
      throw EvaluationError("grad_check: f(params) is not finite");
    }
    g.backward(y);
    analytic = g.parameter_gradients(params);
  }

  std::mt19937_64 rng(options.seed);
  ParameterSet probe = params;
  ParamCheckResult result;
  for (const auto& [name, value] : params) {
    if (!options.only.empty() &&
        std::find(options.only.begin(), options.only.end(), name) ==
            options.only.end()) {
      continue;
    }
    std::vector<std::size_t> coords(value.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (options.max_coords_per_tensor &&
        coords.size() > *options.max_coords_per_tensor) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(*options.max_coords_per_tensor);
    }
    Tensor& p = probe.at(name);
    for (std::size_t i : coords) {
      const double orig = p[i];
      p[i] = orig + options.eps;
      const double up = evaluate(f, probe);
      p[i] = orig - options.eps;
      const double down = evaluate(f, probe);
      p[i] = orig;
      const double err = relative_error(analytic.at(name)[i],
                                        (up - down) / (2 * options.eps));
      ++result.coords_checked;
      if (err > result.max_error) {
        result.max_error = err;
        result.worst_parameter = name;
        result.worst_index = i;
      }
    }
  }
  return result;
}

}  // namespace ibasr
