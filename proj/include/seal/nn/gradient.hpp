// Copyright 2026 The seal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "seal/nn/network.hpp"

namespace seal::nn {

/// Matrix-to-scalar reduction of a detector activation map: either the value
/// at one position (a, b) or the spatial mean.
struct Reduction {
  enum class Kind { position, mean };
  Kind kind = Kind::position;
  std::size_t a = 0, b = 0;

  static Reduction at(std::size_t a, std::size_t b) { return {Kind::position, a, b}; }
  static Reduction mean() { return {Kind::mean, 0, 0}; }

  /// Reduces a [H,W] map (stored in `map` at row stride `w`).
  template <typename T>
  double apply(std::span<const T> map, std::size_t h, std::size_t w) const {
    if (kind == Kind::position) {
      if (a >= h || b >= w) {
        throw PreconditionError("reduction position (" + std::to_string(a) + "," +
                                std::to_string(b) + ") outside " +
                                std::to_string(h) + "x" + std::to_string(w) + " map");
      }
      return map[a * w + b];
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < h * w; ++i) acc += map[i];
    return acc / static_cast<double>(h * w);
  }

  /// Gradient of apply() with respect to the map.
  template <typename T>
  void gradient(std::span<T> grad, std::size_t h, std::size_t w) const {
    std::fill(grad.begin(), grad.end(), T{0});
    if (kind == Kind::position) {
      grad[a * w + b] = T{1};
    } else {
      const T v = T{1} / static_cast<T>(h * w);
      for (auto& g : grad) g = v;
    }
  }
};

/// A differentiable scalar read from activation `at` of a network.
/// `eval` returns the value and, when `grad` is non-null, writes the gradient
/// with respect to that activation (already shaped like it).
template <typename T>
struct Readout {
  std::size_t at = 0;
  std::function<double(const BasicTensor<T>& act, BasicTensor<T>* grad)> eval;
};

template <typename T>
Readout<T> constant_readout(std::size_t at, double value) {
  return {at, [value](const BasicTensor<T>& act, BasicTensor<T>* grad) {
            if (grad) *grad = BasicTensor<T>(act.shape());
            return value;
          }};
}

/// v . activation (v flattened; sizes must agree).
template <typename T>
Readout<T> linear_readout(std::size_t at, BasicTensor<T> v) {
  return {at, [v = std::move(v)](const BasicTensor<T>& act, BasicTensor<T>* grad) {
            const double value = dot(v, act);
            if (grad) *grad = v.reshaped(act.shape());
            return value;
          }};
}

template <typename T>
Readout<T> element_readout(std::size_t at, std::size_t index) {
  return {at, [index](const BasicTensor<T>& act, BasicTensor<T>* grad) {
            if (index >= act.size()) throw ShapeError("element_readout: index out of range");
            if (grad) {
              *grad = BasicTensor<T>(act.shape());
              (*grad)[index] = T{1};
            }
            return static_cast<double>(act[index]);
          }};
}

/// r(v * activation) for a single detector kernel v [C,K,K] applied with the
/// given stride and padding.
template <typename T>
Readout<T> conv_readout(std::size_t at, BasicTensor<T> kernel, std::size_t stride,
                        std::size_t pad, Reduction reduction) {
  if (kernel.rank() != 3) throw ShapeError("conv_readout: kernel must be [C,K,K]");
  auto w = kernel.reshaped({1, kernel.dim(0), kernel.dim(1), kernel.dim(2)});
  return {at, [w = std::move(w), stride, pad, reduction](const BasicTensor<T>& act,
                                                          BasicTensor<T>* grad) {
            const BasicTensor<T> zero_bias({1});
            const auto map = conv2d(act, w, zero_bias, stride, pad);
            const auto h = map.dim(1), wd = map.dim(2);
            const double value = reduction.apply<T>(map.data(), h, wd);
            if (grad) {
              BasicTensor<T> gmap(map.shape());
              reduction.gradient<T>(gmap.data(), h, wd);
              *grad = conv2d_backward(act, w, gmap, stride, pad).input;
            }
            return value;
          }};
}

template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& logits) {
  double mx = -INFINITY;
  for (auto z : logits.data()) mx = std::max(mx, static_cast<double>(z));
  std::vector<double> e(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    e[i] = std::exp(static_cast<double>(logits[i]) - mx);
    total += e[i];
  }
  BasicTensor<T> p(logits.shape());
  for (std::size_t i = 0; i < e.size(); ++i) p[i] = static_cast<T>(e[i] / total);
  return p;
}

/// Cross-entropy of the softmax of activation `at` against `target`.
template <typename T>
Readout<T> cross_entropy_readout(std::size_t at, std::size_t target) {
  return {at, [target](const BasicTensor<T>& logits, BasicTensor<T>* grad) {
            if (logits.rank() != 1 || target >= logits.size()) {
              throw ShapeError("cross_entropy_readout: logits must be a vector "
                               "containing the target class");
            }
            double mx = -INFINITY;
            for (auto z : logits.data()) mx = std::max(mx, static_cast<double>(z));
            double total = 0.0;
            for (auto z : logits.data()) total += std::exp(static_cast<double>(z) - mx);
            const double lse = mx + std::log(total);
            if (grad) {
              *grad = BasicTensor<T>(logits.shape());
              for (std::size_t i = 0; i < logits.size(); ++i) {
                (*grad)[i] = static_cast<T>(std::exp(static_cast<double>(logits[i]) - lse) -
                                            (i == target ? 1.0 : 0.0));
              }
            }
            return lse - static_cast<double>(logits[target]);
          }};
}

template <typename T>
struct Gradients {
  double value = 0.0;
  BasicTensor<T> input;
  /// params[j][p]: gradient for parameter p of layer j (empty for j >= at).
  std::vector<std::vector<BasicTensor<T>>> params;
};

/// Reverse-mode gradient of `readout` with respect to the input and,
/// optionally, every parameter of the layers it depends on.
template <typename T>
Gradients<T> gradients(const BasicNetwork<T>& net, const BasicTensor<T>& x,
                       const Readout<T>& readout, bool want_params = true) {
  if (readout.at > net.size()) throw PreconditionError("readout position out of range");
  const auto acts = net.activations(x, readout.at);
  Gradients<T> g;
  BasicTensor<T> up;
  g.value = readout.eval(acts.back(), &up);
  if (!std::isfinite(g.value)) throw NumericError("objective is not finite");
  if (up.shape() != acts.back().shape()) {
    throw ShapeError("readout gradient shape " + to_string(up.shape()) +
                     " differs from activation " + to_string(acts.back().shape()));
  }
  g.params.resize(net.size());
  for (std::size_t j = readout.at; j-- > 0;) {
    auto lg = backprop(net[j].layer, acts[j], up, want_params);
    if (want_params) {
      g.params[j] = std::move(lg.params);
    }
    up = std::move(lg.input);
  }
  if (want_params) {
    for (std::size_t j = 0; j < net.size(); ++j) {
      if (g.params[j].empty()) {
        for (const auto* p : parameters(net[j].layer)) g.params[j].emplace_back(p->shape());
      }
    }
  }
  g.input = std::move(up);
  return g;
}

template <typename T>
BasicTensor<T> input_gradient(const BasicNetwork<T>& net, const BasicTensor<T>& x,
                              const Readout<T>& readout) {
  return gradients(net, x, readout, false).input;
}

template <typename T>
std::vector<std::vector<BasicTensor<T>>> param_gradient(const BasicNetwork<T>& net,
                                                        const BasicTensor<T>& x,
                                                        const Readout<T>& readout) {
  return gradients(net, x, readout, true).params;
}

}  // namespace seal::nn
