// Copyright 2026 The seal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "oracles.hpp"
#include "seal/nn/gradient.hpp"
#include "seal/nn/network.hpp"
#include "seal/nn/receptive_field.hpp"

namespace seal::test {

using namespace seal::nn;

/// Signs of every ReLU input and hard-sigmoid region: gradient checks are only
/// meaningful where this pattern does not change between the two probes.
std::vector<int> kink_pattern(const BasicNetwork<double>& net, const BasicTensor<double>& x) {
  std::vector<int> pat;
  auto acts = net.activations(x, net.size());
  for (std::size_t j = 0; j < net.size(); ++j) {
    const auto& layer = net[j].layer;
    if (std::holds_alternative<ReLU>(layer)) {
      for (double v : acts[j].data()) pat.push_back(v > 0);
    } else if (const auto* se = std::get_if<SqEx<double>>(&layer)) {
      auto tr = sqex_trace(*se, acts[j]);
      for (double v : tr.pre.data()) pat.push_back(v > 0);
      if (se->gate == Gate::hard_sigmoid) {
        for (double v : tr.logit.data()) pat.push_back(v <= -3 ? 0 : v >= 3 ? 2 : 1);
      }
    }
  }
  return pat;
}

/// Bounding box of input pixels whose perturbation changes channel 0 at (a, b)
/// of layer j's output. Built from forward passes only.
std::optional<ReceptiveField> sensitivity_box(const Network& net, std::size_t j,
                                              std::size_t a, std::size_t b, Rng& rng) {
  const auto in = net.input_shape();
  const auto prefix = net.slice(0, j + 1);
  const auto x = random_tensor(rng, in, 0.2, 0.8);
  const auto base = prefix.forward(x);
  const auto w = base.dim(2);
  const std::size_t idx = a * w + b;
  std::ptrdiff_t t = 1 << 20, l = 1 << 20, bo = -1, r = -1;
  for (std::size_t c = 0; c < in[0]; ++c)
    for (std::size_t y = 0; y < in[1]; ++y)
      for (std::size_t z = 0; z < in[2]; ++z) {
        auto xp = x;
        xp.at(c, y, z) += 0.5f;
        if (prefix.forward(xp)[idx] != base[idx]) {
          t = std::min<std::ptrdiff_t>(t, y);
          l = std::min<std::ptrdiff_t>(l, z);
          bo = std::max<std::ptrdiff_t>(bo, y);
          r = std::max<std::ptrdiff_t>(r, z);
        }
      }
  if (bo < 0) return std::nullopt;
  return ReceptiveField{t, l, static_cast<std::size_t>(bo - t + 1),
                        static_cast<std::size_t>(r - l + 1)};
}

}  // namespace seal::test
