/* Copyright 2026 The Retina Report Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "retina/tape.hpp"

#include "retina/error.hpp"

namespace retina::nn {

const Tensor& Var::value() const {
  if (!tape_) throw Error("use of an unbound Var");
  return tape_->value(*this);
}

const Tape::Node& Tape::node(Var v) const {
  if (v.tape_ != this || v.id_ >= nodes_.size()) throw Error("Var does not belong to this tape");
  return nodes_[v.id_];
}

Tape::Node& Tape::node(Var v) {
  if (v.tape_ != this || v.id_ >= nodes_.size()) throw Error("Var does not belong to this tape");
  return nodes_[v.id_];
}

const Tensor& Tape::value(Var v) const {
  const Node& n = node(v);
  return n.borrowed ? *n.borrowed : n.owned;
}

bool Tape::needs_grad(Var v) const { return node(v).needs_grad; }

Var Tape::constant(Tensor value) {
  Node n;
  n.owned = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant_ref(const Tensor& value) {
  Node n;
  n.borrowed = &value;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Tensor& param) {
  Node n;
  n.borrowed = &param;
  if (record_) {
    n.param = &param;
    n.needs_grad = true;
    if (!param.has_grad()) param.zero_grad();
  }
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, BackwardFn fn) {
  Node n;
  n.owned = std::move(value);
  if (record_) {
    for (const Var& in : inputs) {
      if (node(in).needs_grad) n.needs_grad = true;
    }
    if (n.needs_grad) n.backward = std::move(fn);
  } else {
    for (const Var& in : inputs) node(in);  // ownership check only
  }
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

double* Tape::grad_buffer(Var v) {
  Node& n = node(v);
  if (!n.needs_grad) return nullptr;
  if (n.grad.empty()) n.grad.assign(value(v).size(), 0.0);
  return n.grad.data();
}

void Tape::backward(Var loss) {
  if (!record_) throw Error("backward on a tape that does not record");
  if (swept_) throw Error("backward already ran on this tape");
  Node& root = node(loss);
  if (value(loss).size() != 1) {
    throw ShapeError("backward needs a scalar loss, got shape " + shape_string(value(loss).shape()));
  }
  swept_ = true;
  if (!root.needs_grad) return;
  root.grad.assign(1, 1.0);
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty()) continue;
    if (n.param) {
      auto g = n.param->grad();
      for (std::size_t k = 0; k < g.size(); ++k) g[k] += n.grad[k];
    } else if (n.backward) {
      n.backward(*this, n.owned, n.grad);
      n.backward = nullptr;
    }
    std::vector<double>().swap(n.grad);
  }
}

}  // namespace retina::nn
