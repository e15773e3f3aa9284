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

#include "retina/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "retina/error.hpp"

namespace retina::nn {
namespace {

Tape& tape_of(std::initializer_list<Var> vars) {
  Tape* tape = nullptr;
  for (const Var& v : vars) {
    if (!v.valid()) throw Error("use of an unbound Var");
    if (tape && v.tape() != tape) throw Error("operands live on different tapes");
    tape = v.tape();
  }
  return *tape;
}

void require_same_shape(const char* op, Var a, Var b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

void require_rank(const char* op, const char* what, Var v, std::size_t rank) {
  if (v.value().rank() != rank) {
    throw ShapeError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) +
                     ", got " + shape_string(v.shape()));
  }
}

// deriv(x, y) is dy/dx given input x and output y.
template <typename Fwd, typename Deriv>
Var elementwise(Var x, Fwd fwd, Deriv deriv) {
  Tape& tape = tape_of({x});
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = fwd(in[i]);
  return tape.record(std::move(out), {x},
                     [x, deriv](Tape& t, const Tensor& y, std::span<const double> g) {
                       double* gx = t.grad_buffer(x);
                       if (!gx) return;
                       const Tensor& xv = x.value();
                       for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * deriv(xv[i], y[i]);
                     });
}

}  // namespace

Var add(Var a, Var b) {
  Tape& tape = tape_of({a, b});
  require_same_shape("add", a, b);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  return tape.record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor&, std::span<const double> g) {
    if (double* ga = t.grad_buffer(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (double* gb = t.grad_buffer(b)) {
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
    }
  });
}

Var sub(Var a, Var b) {
  Tape& tape = tape_of({a, b});
  require_same_shape("sub", a, b);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
  return tape.record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor&, std::span<const double> g) {
    if (double* ga = t.grad_buffer(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (double* gb = t.grad_buffer(b)) {
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  Tape& tape = tape_of({a, b});
  require_same_shape("mul", a, b);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  return tape.record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor&, std::span<const double> g) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (double* ga = t.grad_buffer(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (double* gb = t.grad_buffer(b)) {
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(Var a, double factor) {
  return elementwise(
      a, [factor](double x) { return x * factor; }, [factor](double, double) { return factor; });
}

Var average(Var a, Var b) {
  require_same_shape("average", a, b);
  return scale(add(a, b), 0.5);
}

Var sum(Var a) {
  Tape& tape = tape_of({a});
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  return tape.record(Tensor::scalar(total), {a}, [a](Tape& t, const Tensor&, std::span<const double> g) {
    if (double* ga = t.grad_buffer(a)) {
      for (std::size_t i = 0; i < a.size(); ++i) ga[i] += g[0];
    }
  });
}

Var mean(std::span<const Var> scalars) {
  if (scalars.empty()) throw ShapeError("mean: empty operand list");
  Tape& tape = tape_of({scalars.front()});
  double total = 0.0;
  for (const Var& s : scalars) {
    if (s.tape() != &tape) throw Error("operands live on different tapes");
    if (s.size() != 1) throw ShapeError("mean: operands must be scalars, got " + shape_string(s.shape()));
    total += s.value()[0];
  }
  const double n = static_cast<double>(scalars.size());
  std::vector<Var> inputs(scalars.begin(), scalars.end());
  return tape.record(Tensor::scalar(total / n), inputs,
                     [inputs, n](Tape& t, const Tensor&, std::span<const double> g) {
                       for (const Var& s : inputs) {
                         if (double* gs = t.grad_buffer(s)) gs[0] += g[0] / n;
                       }
                     });
}

Var relu(Var x) {
  return elementwise(
      x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var x) {
  return elementwise(
      x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var x) {
  return elementwise(
      x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Var matvec(Var weight, Var input) {
  Tape& tape = tape_of({weight, input});
  require_rank("matvec", "weight", weight, 2);
  require_rank("matvec", "input", input, 1);
  const Tensor& w = weight.value();
  const Tensor& x = input.value();
  const std::size_t m = w.dim(0), d = w.dim(1);
  if (x.dim(0) != d) {
    throw ShapeError("matvec: weight " + shape_string(w.shape()) + " cannot multiply input " +
                     shape_string(x.shape()));
  }
  Tensor out({m});
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    const double* wr = w.data().data() + i * d;
    for (std::size_t j = 0; j < d; ++j) acc += wr[j] * x[j];
    out[i] = acc;
  }
  return tape.record(std::move(out), {weight, input},
                     [weight, input, m, d](Tape& t, const Tensor&, std::span<const double> g) {
                       const Tensor& w = weight.value();
                       const Tensor& x = input.value();
                       if (double* gw = t.grad_buffer(weight)) {
                         for (std::size_t i = 0; i < m; ++i) {
                           if (g[i] == 0.0) continue;
                           for (std::size_t j = 0; j < d; ++j) gw[i * d + j] += g[i] * x[j];
                         }
                       }
                       if (double* gx = t.grad_buffer(input)) {
                         for (std::size_t i = 0; i < m; ++i) {
                           const double* wr = w.data().data() + i * d;
                           for (std::size_t j = 0; j < d; ++j) gx[j] += g[i] * wr[j];
                         }
                       }
                     });
}

Var linear(Var input, Var weight, Var bias) {
  require_rank("linear", "bias", bias, 1);
  if (weight.value().rank() == 2 && bias.size() != weight.value().dim(0)) {
    throw ShapeError("linear: bias " + shape_string(bias.shape()) + " does not match weight " +
                     shape_string(weight.shape()));
  }
  return add(matvec(weight, input), bias);
}

Var slice(Var x, std::size_t offset, std::size_t length) {
  Tape& tape = tape_of({x});
  require_rank("slice", "input", x, 1);
  if (length == 0 || offset + length > x.size()) {
    throw ShapeError("slice: range [" + std::to_string(offset) + ", " + std::to_string(offset + length) +
                     ") outside " + shape_string(x.shape()));
  }
  const auto src = x.value().data();
  Tensor out({length}, std::vector<double>(src.begin() + offset, src.begin() + offset + length));
  return tape.record(std::move(out), {x}, [x, offset](Tape& t, const Tensor&, std::span<const double> g) {
    if (double* gx = t.grad_buffer(x)) {
      for (std::size_t i = 0; i < g.size(); ++i) gx[offset + i] += g[i];
    }
  });
}

Var row(Var matrix, std::size_t index) {
  Tape& tape = tape_of({matrix});
  require_rank("row", "matrix", matrix, 2);
  const Tensor& m = matrix.value();
  if (index >= m.dim(0)) {
    throw ShapeError("row: index " + std::to_string(index) + " outside " + shape_string(m.shape()));
  }
  const std::size_t d = m.dim(1);
  const auto src = m.data();
  Tensor out({d}, std::vector<double>(src.begin() + index * d, src.begin() + (index + 1) * d));
  return tape.record(std::move(out), {matrix},
                     [matrix, index, d](Tape& t, const Tensor&, std::span<const double> g) {
                       if (double* gm = t.grad_buffer(matrix)) {
                         for (std::size_t j = 0; j < d; ++j) gm[index * d + j] += g[j];
                       }
                     });
}

Var conv2d(Var input, Var kernels, Var bias, std::size_t stride, std::size_t pad) {
  Tape& tape = tape_of({input, kernels, bias});
  require_rank("conv2d", "input", input, 3);
  require_rank("conv2d", "kernels", kernels, 4);
  require_rank("conv2d", "bias", bias, 1);
  if (stride < 1) throw ShapeError("conv2d: stride must be >= 1");
  const Tensor& x = input.value();
  const Tensor& k = kernels.value();
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const std::size_t K = k.dim(0), kh = k.dim(2), kw = k.dim(3);
  if (k.dim(1) != C) {
    throw ShapeError("conv2d: kernels " + shape_string(k.shape()) + " expect " + std::to_string(k.dim(1)) +
                     " input channels, input is " + shape_string(x.shape()));
  }
  if (bias.size() != K) {
    throw ShapeError("conv2d: bias " + shape_string(bias.shape()) + " does not match " +
                     std::to_string(K) + " kernels");
  }
  if (kh > H + 2 * pad || kw > W + 2 * pad) {
    throw ShapeError("conv2d: kernel " + shape_string(k.shape()) + " larger than padded input " +
                     shape_string(x.shape()));
  }
  const std::size_t Ho = (H + 2 * pad - kh) / stride + 1;
  const std::size_t Wo = (W + 2 * pad - kw) / stride + 1;
  Tensor out({K, Ho, Wo});
  const auto ip = static_cast<std::ptrdiff_t>(pad);
  for (std::size_t o = 0; o < K; ++o) {
    for (std::size_t oy = 0; oy < Ho; ++oy) {
      for (std::size_t ox = 0; ox < Wo; ++ox) {
        double acc = bias.value()[o];
        for (std::size_t c = 0; c < C; ++c) {
          for (std::size_t dy = 0; dy < kh; ++dy) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + dy) - ip;
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
            for (std::size_t dx = 0; dx < kw; ++dx) {
              const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + dx) - ip;
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
              acc += k[((o * C + c) * kh + dy) * kw + dx] * x.at(c, iy, ix);
            }
          }
        }
        out.at(o, oy, ox) = acc;
      }
    }
  }
  return tape.record(
      std::move(out), {input, kernels, bias},
      [=](Tape& t, const Tensor&, std::span<const double> g) {
        const Tensor& x = input.value();
        const Tensor& k = kernels.value();
        double* gx = t.grad_buffer(input);
        double* gk = t.grad_buffer(kernels);
        double* gb = t.grad_buffer(bias);
        for (std::size_t o = 0; o < K; ++o) {
          for (std::size_t oy = 0; oy < Ho; ++oy) {
            for (std::size_t ox = 0; ox < Wo; ++ox) {
              const double go = g[(o * Ho + oy) * Wo + ox];
              if (go == 0.0) continue;
              if (gb) gb[o] += go;
              for (std::size_t c = 0; c < C; ++c) {
                for (std::size_t dy = 0; dy < kh; ++dy) {
                  const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + dy) - ip;
                  if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
                  for (std::size_t dx = 0; dx < kw; ++dx) {
                    const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + dx) - ip;
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
                    const std::size_t ki = ((o * C + c) * kh + dy) * kw + dx;
                    const std::size_t xi = (c * H + iy) * W + ix;
                    if (gk) gk[ki] += go * x[xi];
                    if (gx) gx[xi] += go * k[ki];
                  }
                }
              }
            }
          }
        }
      });
}

Var maxpool2d(Var input, std::size_t window, std::size_t stride) {
  Tape& tape = tape_of({input});
  require_rank("maxpool2d", "input", input, 3);
  const Tensor& x = input.value();
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  if (window < 1 || stride < 1) throw ShapeError("maxpool2d: window and stride must be >= 1");
  if (window > H || window > W) {
    throw ShapeError("maxpool2d: window " + std::to_string(window) + " exceeds spatial extent of " +
                     shape_string(x.shape()));
  }
  const std::size_t Ho = (H - window) / stride + 1;
  const std::size_t Wo = (W - window) / stride + 1;
  Tensor out({C, Ho, Wo});
  std::vector<std::size_t> argmax(out.size());
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t oy = 0; oy < Ho; ++oy) {
      for (std::size_t ox = 0; ox < Wo; ++ox) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_i = 0;
        for (std::size_t dy = 0; dy < window; ++dy) {
          for (std::size_t dx = 0; dx < window; ++dx) {
            const std::size_t xi = (c * H + oy * stride + dy) * W + ox * stride + dx;
            if (x[xi] > best) {
              best = x[xi];
              best_i = xi;
            }
          }
        }
        const std::size_t oi = (c * Ho + oy) * Wo + ox;
        out[oi] = best;
        argmax[oi] = best_i;
      }
    }
  }
  return tape.record(std::move(out), {input},
                     [input, argmax = std::move(argmax)](Tape& t, const Tensor&, std::span<const double> g) {
                       if (double* gx = t.grad_buffer(input)) {
                         for (std::size_t i = 0; i < g.size(); ++i) gx[argmax[i]] += g[i];
                       }
                     });
}

Var global_avg_pool(Var input) {
  Tape& tape = tape_of({input});
  require_rank("global_avg_pool", "input", input, 3);
  const Tensor& x = input.value();
  const std::size_t K = x.dim(0), area = x.dim(1) * x.dim(2);
  Tensor out({K});
  for (std::size_t k = 0; k < K; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < area; ++i) acc += x[k * area + i];
    out[k] = acc / static_cast<double>(area);
  }
  return tape.record(std::move(out), {input}, [input, K, area](Tape& t, const Tensor&, std::span<const double> g) {
    if (double* gx = t.grad_buffer(input)) {
      const double inv = 1.0 / static_cast<double>(area);
      for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t i = 0; i < area; ++i) gx[k * area + i] += g[k] * inv;
      }
    }
  });
}

Var softmax_cross_entropy(Var logits, std::size_t target) {
  Tape& tape = tape_of({logits});
  require_rank("softmax_cross_entropy", "logits", logits, 1);
  const Tensor& z = logits.value();
  if (target >= z.size()) {
    throw ShapeError("softmax_cross_entropy: target " + std::to_string(target) + " outside " +
                     std::to_string(z.size()) + " classes");
  }
  const auto logp = log_softmax(z.data());
  return tape.record(Tensor::scalar(-logp[target]), {logits},
                     [logits, target, logp](Tape& t, const Tensor&, std::span<const double> g) {
                       if (double* gz = t.grad_buffer(logits)) {
                         for (std::size_t i = 0; i < logp.size(); ++i) {
                           gz[i] += g[0] * (std::exp(logp[i]) - (i == target ? 1.0 : 0.0));
                         }
                       }
                     });
}

LstmState lstm_step(Var x, LstmState state, const LstmWeights& weights) {
  const Tensor& wih = weights.w_ih.value();
  const Tensor& whh = weights.w_hh.value();
  if (wih.rank() != 2 || whh.rank() != 2 || weights.bias.value().rank() != 1) {
    throw ShapeError("lstm_step: weights must be matrices and bias a vector");
  }
  const std::size_t hidden = state.h.size();
  if (wih.dim(0) != 4 * hidden || whh.dim(0) != 4 * hidden || whh.dim(1) != hidden ||
      weights.bias.size() != 4 * hidden || state.c.size() != hidden || wih.dim(1) != x.size()) {
    throw ShapeError("lstm_step: inconsistent shapes (x " + shape_string(x.shape()) + ", h " +
                     shape_string(state.h.shape()) + ", c " + shape_string(state.c.shape()) + ", w_ih " +
                     shape_string(wih.shape()) + ", w_hh " + shape_string(whh.shape()) + ", bias " +
                     shape_string(weights.bias.shape()) + ")");
  }
  Var gates = add(add(matvec(weights.w_ih, x), matvec(weights.w_hh, state.h)), weights.bias);
  Var in_gate = sigmoid(slice(gates, 0, hidden));
  Var forget_gate = sigmoid(slice(gates, hidden, hidden));
  Var candidate = tanh(slice(gates, 2 * hidden, hidden));
  Var out_gate = sigmoid(slice(gates, 3 * hidden, hidden));
  Var c_next = add(mul(forget_gate, state.c), mul(in_gate, candidate));
  Var h_next = mul(out_gate, tanh(c_next));
  return {h_next, c_next};
}

std::vector<double> log_softmax(std::span<const double> logits) {
  if (logits.empty()) throw ShapeError("log_softmax: empty input");
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double v : logits) total += std::exp(v - peak);
  const double log_total = std::log(total) + peak;
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - log_total;
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw ShapeError("softmax: empty input");
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

}  // namespace retina::nn
