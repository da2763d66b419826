// Copyright 2026 The seal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// L1 magnitude pruning, applied layer by layer to every conv and dense weight.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "seal/stain.hpp"

namespace seal::harness {

namespace detail {

inline std::size_t prune_count(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

/// Indices sorted by ascending key; ties keep index order.
inline std::vector<std::size_t> ascending(const std::vector<double>& key) {
  std::vector<std::size_t> idx(key.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return key[a] < key[b]; });
  return idx;
}

inline void prune_weight(Tensor& w, double fraction, bool structured) {
  if (!structured) {
    std::vector<double> mag(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) mag[i] = std::abs(w[i]);
    const auto idx = ascending(mag);
    const auto n = prune_count(fraction, w.size());
    for (std::size_t i = 0; i < n; ++i) w[idx[i]] = 0.0f;
    return;
  }
  const auto rows = w.dim(0);
  std::vector<double> l1(rows);
  for (std::size_t r = 0; r < rows; ++r) l1[r] = l1_norm<float>(nn::neuron_weights(w, r));
  const auto idx = ascending(l1);
  const auto n = prune_count(fraction, rows);
  for (std::size_t i = 0; i < n; ++i)
    for (auto& v : nn::neuron_weights(w, idx[i])) v = 0.0f;
}

}  // namespace detail

/// Unstructured: zero the `fraction` of smallest-|w| entries of each conv and
/// dense weight tensor. Structured: zero whole kernels (conv) or rows (dense)
/// with the smallest L1 norm. Biases are kept.
inline nn::Network prune_l1(nn::Network net, double fraction, bool structured) {
  if (!(fraction >= 0 && fraction <= 1)) throw ConfigError("pruning fraction must be in [0, 1]");
  for (std::size_t j = 0; j < net.size(); ++j) {
    if (auto* c = std::get_if<nn::Conv2d<float>>(&net[j].layer)) {
      detail::prune_weight(c->weight, fraction, structured);
    } else if (auto* d = std::get_if<nn::Dense<float>>(&net[j].layer)) {
      detail::prune_weight(d->weight, fraction, structured);
    }
  }
  return net;
}

/// Relative change of the detector readout on the trigger,
/// |after - before| / |before|.
inline double detector_survival(const nn::Network& before, const nn::Network& after,
                                 const StainRecord& rec) {
  const double r0 = detector_readout(before, rec, rec.trigger);
  const double r1 = detector_readout(after, rec, rec.trigger);
  if (r0 == 0.0) throw NumericError("detector readout on the trigger is zero");
  return std::abs(r1 - r0) / std::abs(r0);
}

}  // namespace seal::harness
