// Copyright 2026 The seal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Weight-level helpers shared by staining, locking and pruning.

#include <span>
#include <utility>

#include "seal/nn/network.hpp"

namespace seal::nn {

/// Row k of a Dense weight, or kernel k of a Conv2d weight, as a flat view.
template <typename T>
std::span<T> neuron_weights(BasicTensor<T>& weight, std::size_t k) {
  const auto n = weight.size() / weight.dim(0);
  return weight.data().subspan(k * n, n);
}

template <typename T>
std::span<const T> neuron_weights(const BasicTensor<T>& weight, std::size_t k) {
  const auto n = weight.size() / weight.dim(0);
  return weight.data().subspan(k * n, n);
}

template <typename T>
const BasicTensor<T>& neuron_weight_tensor(const BasicNetwork<T>& net, std::size_t j) {
  if (net.template is<Dense<T>>(j)) return net.template get<Dense<T>>(j).weight;
  if (net.template is<Conv2d<T>>(j)) return net.template get<Conv2d<T>>(j).weight;
  throw PreconditionError("layer " + std::to_string(j) + " is neither dense nor conv2d");
}

/// Index of the output neuron (dense row / conv kernel) of layer j whose
/// weight vector has the least l1 norm. Ties go to the smallest index.
template <typename T>
std::size_t min_l1_neuron(const BasicNetwork<T>& net, std::size_t j) {
  const auto& w = neuron_weight_tensor(net, j);
  std::size_t best = 0;
  double best_norm = INFINITY;
  for (std::size_t k = 0; k < w.dim(0); ++k) {
    const double n = l1_norm<T>(neuron_weights(w, k));
    if (n < best_norm) {
      best_norm = n;
      best = k;
    }
  }
  return best;
}

namespace detail {

template <typename T>
void swap_entries(BasicTensor<T>& t, std::size_t c1, std::size_t c2) {
  std::swap(t[c1], t[c2]);
}

/// Swaps slices c1, c2 along axis `axis` of a row-major tensor.
template <typename T>
void swap_axis(BasicTensor<T>& t, std::size_t axis, std::size_t c1, std::size_t c2) {
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= t.dim(i);
  for (std::size_t i = axis + 1; i < t.rank(); ++i) inner *= t.dim(i);
  const auto n = t.dim(axis);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      std::swap(t[(o * n + c1) * inner + i], t[(o * n + c2) * inner + i]);
    }
  }
}

}  // namespace detail

/// Relabels output channels c1 and c2 of the Conv2d at layer j, adjusting
/// every downstream consumer so the network computes the same function.
template <typename T>
void swap_channels(BasicNetwork<T>& net, std::size_t j, std::size_t c1, std::size_t c2) {
  auto& conv = net.template get<Conv2d<T>>(j);
  if (c1 >= conv.out_channels() || c2 >= conv.out_channels()) {
    throw PreconditionError("swap_channels: channel index out of range");
  }
  if (c1 == c2) return;
  detail::swap_axis(conv.weight, 0, c1, c2);
  detail::swap_entries(conv.bias, c1, c2);
  for (std::size_t i = j + 1; i < net.size(); ++i) {
    auto& layer = net[i].layer;
    if (auto* bn = std::get_if<BatchNorm2d<T>>(&layer)) {
      for (auto* p : bn->params()) detail::swap_entries(*p, c1, c2);
    } else if (auto* sq = std::get_if<SqEx<T>>(&layer)) {
      detail::swap_axis(sq->s1, 1, c1, c2);
      detail::swap_axis(sq->s2, 0, c1, c2);
      detail::swap_entries(sq->tau2, c1, c2);
    } else if (auto* next = std::get_if<Conv2d<T>>(&layer)) {
      detail::swap_axis(next->weight, 1, c1, c2);
      return;
    } else if (std::holds_alternative<GlobalAvgPool>(layer)) {
      for (std::size_t d = i + 1; d < net.size(); ++d) {
        if (auto* dense = std::get_if<Dense<T>>(&net[d].layer)) {
          detail::swap_axis(dense->weight, 1, c1, c2);
          return;
        }
        if (!is_pointwise(net[d].layer)) break;
      }
      throw PreconditionError("swap_channels: pooled features do not feed a dense layer");
    } else if (std::holds_alternative<Flatten>(layer)) {
      const auto s = net.shape_at(i);
      const auto hw = s[1] * s[2];
      for (std::size_t d = i + 1; d < net.size(); ++d) {
        if (auto* dense = std::get_if<Dense<T>>(&net[d].layer)) {
          for (std::size_t q = 0; q < hw; ++q) {
            detail::swap_axis(dense->weight, 1, c1 * hw + q, c2 * hw + q);
          }
          return;
        }
        if (!is_pointwise(net[d].layer)) break;
      }
      throw PreconditionError("swap_channels: flattened features do not feed a dense layer");
    } else if (!is_pointwise(layer)) {
      throw PreconditionError("swap_channels: unsupported consumer '" + net[i].name + "'");
    }
  }
}

}  // namespace seal::nn
