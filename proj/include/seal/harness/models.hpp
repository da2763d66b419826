// Copyright 2026 The seal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Small He-initialised architectures for the shapes task.

#include <cmath>
#include <string>

#include "seal/io.hpp"
#include "seal/nn/network.hpp"
#include "seal/rng.hpp"

namespace seal::harness {

struct ModelSpec {
  std::string arch = "cnn";  // "cnn" or "mlp"
  std::size_t channels = 1;
  std::size_t size = 16;
  std::size_t classes = 5;
  std::size_t width = 16;    // cnn: channels of conv1/conv2 (conv0 gets width/2); mlp: hidden units
  bool batch_norm = false;   // cnn only: identity-initialised BatchNorm after conv0/conv1
  std::uint64_t seed = 0;
};

namespace detail {

inline Tensor he_tensor(Rng& rng, Shape shape, std::size_t fan_in) {
  Tensor t(std::move(shape));
  const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (auto& v : t.data()) v = static_cast<float>(sd * rng.normal());
  return t;
}

inline nn::Conv2d<float> he_conv(Rng& rng, std::size_t in, std::size_t out, std::size_t stride) {
  return {he_tensor(rng, {out, in, 3, 3}, in * 9), Tensor({out}), stride, 1};
}

inline nn::Dense<float> he_dense(Rng& rng, std::size_t in, std::size_t out) {
  return {he_tensor(rng, {out, in}, in), Tensor({out})};
}

inline nn::BatchNorm2d<float> identity_bn(std::size_t c) {
  return {Tensor({c}), Tensor({c}, 1.0f), Tensor({c}, 1.0f), Tensor({c}), 1e-5};
}

}  // namespace detail

/// cnn: conv(3x3,s1)-relu-conv(3x3,s2)-relu-conv(3x3,s2)-relu-gap-dense.
/// mlp: dense-relu-dense on flattened images.
inline nn::Network make_model(const ModelSpec& spec) {
  if (spec.classes < 2) throw ConfigError("model needs at least 2 classes");
  if (spec.width < 2) throw ConfigError("model width must be at least 2");
  Rng rng(spec.seed);
  using namespace nn;
  if (spec.arch == "cnn") {
    const std::size_t w0 = std::max<std::size_t>(2, spec.width / 2), w = spec.width;
    Network net({spec.channels, spec.size, spec.size});
    net.add("conv0", detail::he_conv(rng, spec.channels, w0, 1));
    if (spec.batch_norm) net.add("bn0", detail::identity_bn(w0));
    net.add("relu0", ReLU{});
    net.add("conv1", detail::he_conv(rng, w0, w, 2));
    if (spec.batch_norm) net.add("bn1", detail::identity_bn(w));
    net.add("relu1", ReLU{});
    net.add("conv2", detail::he_conv(rng, w, w, 2));
    net.add("relu2", ReLU{});
    net.add("pool", GlobalAvgPool{});
    net.add("fc", detail::he_dense(rng, w, spec.classes));
    return net;
  }
  if (spec.arch == "mlp") {
    const std::size_t in = spec.channels * spec.size * spec.size;
    Network net({in});
    net.add("fc0", detail::he_dense(rng, in, spec.width));
    net.add("relu0", ReLU{});
    net.add("fc1", detail::he_dense(rng, spec.width, spec.classes));
    return net;
  }
  throw ConfigError("unknown architecture '" + spec.arch + "' (expected cnn or mlp)");
}

}  // namespace seal::harness
