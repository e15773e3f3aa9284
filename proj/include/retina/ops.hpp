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
#include <span>
#include <vector>

#include "retina/tape.hpp"

namespace retina::nn {

// Differentiable operations. All inputs must live on the same tape; shape
// violations throw ShapeError.

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
/// Elementwise (a + b) / 2.
Var average(Var a, Var b);
/// Sum of all elements, as a scalar.
Var sum(Var a);
/// Mean of a non-empty list of scalars.
Var mean(std::span<const Var> scalars);

Var relu(Var x);
Var sigmoid(Var x);
Var tanh(Var x);

/// weight (M x D) times input (D).
Var matvec(Var weight, Var input);
/// weight (M x D) times input (D) plus bias (M).
Var linear(Var input, Var weight, Var bias);
/// Contiguous [offset, offset + length) of a 1-D tensor.
Var slice(Var x, std::size_t offset, std::size_t length);
/// Row `index` of a matrix as a 1-D tensor (embedding lookup).
Var row(Var matrix, std::size_t index);

/// input C x H x W, kernels K x C x kh x kw, bias K. Zero padding.
Var conv2d(Var input, Var kernels, Var bias, std::size_t stride, std::size_t pad);
/// Max over window x window patches; gradient routed to the first maximum in
/// scan order.
Var maxpool2d(Var input, std::size_t window, std::size_t stride);
/// K x H x W -> K, per-channel spatial mean.
Var global_avg_pool(Var input);

/// -log softmax(logits)[target] with max-subtraction.
Var softmax_cross_entropy(Var logits, std::size_t target);

struct LstmWeights {
  Var w_ih;  // 4H x D, gate rows ordered input, forget, cell, output
  Var w_hh;  // 4H x H
  Var bias;  // 4H
};

struct LstmState {
  Var h;
  Var c;
};

LstmState lstm_step(Var x, LstmState state, const LstmWeights& weights);

// Non-differentiable helpers shared by inference paths.

std::vector<double> softmax(std::span<const double> logits);
std::vector<double> log_softmax(std::span<const double> logits);

}  // namespace retina::nn
