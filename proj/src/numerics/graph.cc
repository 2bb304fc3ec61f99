// ibasr/numerics/graph.cc

#include "ibasr/numerics/graph.h"

#include "ibasr/errors.h"

namespace ibasr {

const Tensor& Var::value() const { return graph->value(id); }

Var Graph::constant(Tensor value) { return record(std::move(value), {}); }

Var Graph::parameter(const std::string& name, const Tensor& value) {
  auto it = param_ids_.find(name);
  if (it != param_ids_.end()) return Var{this, it->second};
  Var v = record(value, {});
  param_ids_.emplace(name, v.id);
  param_names_.push_back(name);
  return v;
}

Var Graph::parameter(const std::string& name, const ParameterSet& params) {
  auto it = params.find(name);
  if (it == params.end()) {
    throw ContractError("unknown parameter '" + name + "'");
  }
  return parameter(name, it->second);
}

Var Graph::record(Tensor value, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  if (grad_enabled_) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Tensor& Graph::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty()) n.grad = Tensor::zeros_like(n.value);
  return n.grad;
}

void Graph::accumulate(std::size_t id, const Tensor& g) {
  grad_buffer(id) += g;
}

void Graph::backward(Var loss) {
  if (loss.graph != this) throw ContractError("loss belongs to another graph");
  if (!grad_enabled_) throw ContractError("backward() with gradients disabled");
  if (backward_done_) throw ContractError("backward() called twice");
  if (nodes_[loss.id].value.size() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " +
                        shape_string(nodes_[loss.id].value.shape()));
  }
  backward_done_ = true;
  grad_buffer(loss.id)[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty() || !n.backward) continue;
    // No nodes are appended during the sweep, so references stay valid.
    n.backward(*this, n.grad);
  }
}

Tensor Graph::gradient(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.grad.empty()) return Tensor::zeros_like(n.value);
  return n.grad;
}

Gradients Graph::parameter_gradients() const {
  Gradients out;
  for (const auto& name : param_names_) {
    out.emplace(name, gradient(Var{const_cast<Graph*>(this),
                                   param_ids_.at(name)}));
  }
  return out;
}

Gradients Graph::parameter_gradients(const ParameterSet& params) const {
  Gradients out;
  for (const auto& [name, value] : params) {
    auto it = param_ids_.find(name);
    if (it == param_ids_.end()) {
      out.emplace(name, Tensor::zeros_like(value));
    } else {
      out.emplace(name, gradient(Var{const_cast<Graph*>(this), it->second}));
    }
  }
  return out;
}

}  // namespace ibasr
