// Copyright 2026 The seal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Random network builders for tests.

#include "oracles.hpp"
#include "seal/nn/network.hpp"

namespace seal::test {

using namespace seal::nn;

inline Conv2d<float> random_conv(Rng& rng, std::size_t in, std::size_t out,
                                 std::size_t k, std::size_t stride, std::size_t pad,
                                 double scale = 0.5) {
  return {random_tensor(rng, {out, in, k, k}, -scale, scale),
          random_tensor(rng, {out}, -0.1, 0.1), stride, pad};
}

inline Dense<float> random_dense(Rng& rng, std::size_t in, std::size_t out,
                                 double scale = 0.5) {
  return {random_tensor(rng, {out, in}, -scale, scale), random_tensor(rng, {out}, -0.1, 0.1)};
}

inline BatchNorm2d<float> random_bn(Rng& rng, std::size_t c) {
  return {random_tensor(rng, {c}, -0.2, 0.2), random_tensor(rng, {c}, 0.5, 2.0),
          random_tensor(rng, {c}, 0.5, 1.5), random_tensor(rng, {c}, -0.2, 0.2), 1e-5};
}

inline SqEx<float> random_sqex(Rng& rng, std::size_t c, std::size_t d, Gate gate) {
  return {random_tensor(rng, {d, c}), random_tensor(rng, {d}, -0.1, 0.1),
          random_tensor(rng, {c, d}), random_tensor(rng, {c}, -0.1, 0.1), gate};
}

/// conv stack with a mix of every layer kind, ending in dense logits.
inline Network random_mixed_net(Rng& rng, std::size_t classes = 3) {
  const std::size_t c0 = 1 + rng.below(2), h = 6 + rng.below(3);
  Network net({c0, h, h});
  const std::size_t c1 = 2 + rng.below(3), c2 = 2 + rng.below(3);
  net.add("conv0", random_conv(rng, c0, c1, 3, 1, 1));
  if (rng.below(2)) net.add("bn0", random_bn(rng, c1));
  net.add("act0", rng.below(2) ? Layer<float>(ReLU{}) : Layer<float>(Sigmoid{}));
  if (rng.below(2)) {
    net.add("se0", random_sqex(rng, c1, 2, rng.below(2) ? Gate::sigmoid : Gate::hard_sigmoid));
  }
  net.add("conv1", random_conv(rng, c1, c2, 3, 2, 1));
  net.add("act1", ReLU{});
  if (rng.below(2)) {
    net.add("pool", GlobalAvgPool{});
    net.add("fc", random_dense(rng, c2, classes));
  } else {
    const auto s = net.output_shape();
    net.add("flat", Flatten{});
    net.add("fc", random_dense(rng, shape_size(s), classes, 0.3));
  }
  return net;
}

/// Small classifier used across stain/lock tests:
/// conv(3x3,s1,p1)-relu-conv(3x3,s2,p1)-relu-conv(3x3,s2,p1)-relu-gap-dense.
inline Network toy_cnn(Rng& rng, std::size_t channels, std::size_t size,
                       std::size_t classes, bool batch_norm = false) {
  Network net({channels, size, size});
  net.add("conv0", random_conv(rng, channels, 8, 3, 1, 1));
  if (batch_norm) net.add("bn0", random_bn(rng, 8));
  net.add("relu0", ReLU{});
  net.add("conv1", random_conv(rng, 8, 16, 3, 2, 1, 0.3));
  if (batch_norm) net.add("bn1", random_bn(rng, 16));
  net.add("relu1", ReLU{});
  net.add("conv2", random_conv(rng, 16, 16, 3, 2, 1, 0.3));
  net.add("relu2", ReLU{});
  net.add("pool", GlobalAvgPool{});
  net.add("fc", random_dense(rng, 16, classes));
  return net;
}

inline Network toy_mlp(Rng& rng, std::size_t in, std::size_t hidden, std::size_t classes) {
  Network net({in});
  net.add("fc0", random_dense(rng, in, hidden));
  net.add("relu0", ReLU{});
  net.add("fc1", random_dense(rng, hidden, classes));
  return net;
}

}  // namespace seal::test
