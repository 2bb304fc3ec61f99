// ibasr/numerics/graph.h
//
// Define-by-run reverse-mode tape. A Graph is built fresh for every forward
// pass; nodes are appended in evaluation order, so the node list is already
// topologically sorted and backward() is a single reverse sweep.
//
// Parameters are named leaves. Registering the same name twice in one graph
// returns the same node, so fan-out gradients accumulate on one leaf.

#ifndef IBASR_NUMERICS_GRAPH_H_
#define IBASR_NUMERICS_GRAPH_H_

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "ibasr/numerics/tensor.h"

namespace ibasr {

// Named parameter tensors. std::map keeps iteration order deterministic.
using ParameterSet = std::map<std::string, Tensor>;
using Gradients = std::map<std::string, Tensor>;

class Graph;

// Handle to a node of a Graph. Cheap to copy; only valid while the graph
// that produced it is alive.
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

class Graph {
 public:
  // Called during the reverse sweep with the node's accumulated output
  // gradient; must add its contribution into the inputs' gradients via
  // accumulate().
  using BackwardFn = std::function<void(Graph&, const Tensor& out_grad)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // With gradients disabled the graph only keeps values (inference mode).
  void set_grad_enabled(bool enabled) { grad_enabled_ = enabled; }
  bool grad_enabled() const { return grad_enabled_; }

  Var constant(Tensor value);
  Var parameter(const std::string& name, const Tensor& value);
  Var parameter(const std::string& name, const ParameterSet& params);

  // Appends an op node. `backward` may be empty for ops with no
  // differentiable inputs.
  Var record(Tensor value, BackwardFn backward);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  std::size_t size() const { return nodes_.size(); }

  // Adds `g` into the gradient buffer of node `id`.
  void accumulate(std::size_t id, const Tensor& g);
  // Same, for callers that compute the gradient in place.
  Tensor& grad_buffer(std::size_t id);

  // Runs the reverse sweep from a scalar node. Throws ContractError if the
  // node is not 1x1 or if gradients are disabled.
  void backward(Var loss);

  // Gradient of any node after backward(); zeros if unreached.
  Tensor gradient(Var v) const;

  // Gradients of all registered parameters (zeros where unreached).
  Gradients parameter_gradients() const;
  // Gradients for every entry of `params`, including parameters that were
  // never registered in this graph (those get zeros).
  Gradients parameter_gradients(const ParameterSet& params) const;

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // empty until something accumulates into it
    BackwardFn backward;
  };

  std::deque<Node> nodes_;  // deque: references stay valid on append
  std::unordered_map<std::string, std::size_t> param_ids_;
  std::vector<std::string> param_names_;
  bool grad_enabled_ = true;
  bool backward_done_ = false;
};

}  // namespace ibasr

#endif  // IBASR_NUMERICS_GRAPH_H_
