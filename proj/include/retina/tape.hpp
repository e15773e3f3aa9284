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

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <vector>

#include "retina/tensor.hpp"

namespace retina::nn {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape
/// lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Records executed operations in execution order, which is a topological
/// order by construction. A tape built with record=false only evaluates
/// values and cannot run backward.
///
/// Not thread-safe; one tape per worker.
class Tape {
 public:
  /// Receives the node's output value and the gradient of the loss w.r.t.
  /// it, and pushes contributions into the inputs via Tape::grad_buffer.
  using BackwardFn =
      std::function<void(Tape&, const Tensor& out, std::span<const double> out_grad)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  Var constant(Tensor value);
  /// Borrowed, no copy. The tensor must outlive the tape.
  Var constant_ref(const Tensor& value);
  /// Borrowed leaf whose gradient is accumulated into param.grad() by
  /// backward(). Allocates the gradient buffer if absent.
  Var parameter(Tensor& param);

  /// Reverse sweep from a scalar loss. Each recorded op is visited at most
  /// once; a tape can be swept only once.
  void backward(Var loss);

  const Tensor& value(Var v) const;
  bool needs_grad(Var v) const;

  /// Op implementation API.
  Var record(Tensor value, const std::vector<Var>& inputs, BackwardFn fn);
  /// Gradient accumulator for an input, or nullptr when it needs none.
  double* grad_buffer(Var v);

 private:
  struct Node {
    Tensor owned;
    const Tensor* borrowed = nullptr;
    Tensor* param = nullptr;
    bool needs_grad = false;
    std::vector<double> grad;
    BackwardFn backward;
  };

  const Node& node(Var v) const;
  Node& node(Var v);

  bool record_;
  bool swept_ = false;
  std::deque<Node> nodes_;
};

}  // namespace retina::nn
