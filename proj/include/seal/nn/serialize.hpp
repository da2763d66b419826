// Copyright 2026 The seal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Model file: "SEALNET1" container whose manifest lists the layers in order;
// tensor blocks follow in manifest order, parameters of each layer in the
// order given by parameter_names().

#include <string>
#include <string_view>

#include "seal/io.hpp"
#include "seal/nn/network.hpp"
#include "seal/rng.hpp"

namespace seal::nn {

inline constexpr std::string_view kNetMagic = "SEALNET1";
inline constexpr int kNetFormatVersion = 1;

inline json network_manifest(const Network& net) {
  json layers = json::array();
  for (const auto& nl : net.layers()) {
    json e{{"name", nl.name}, {"kind", kind_name(nl.layer)}};
    std::visit(overloaded{[&](const Conv2d<float>& l) {
                            e["stride"] = l.stride;
                            e["pad"] = l.pad;
                          },
                          [&](const BatchNorm2d<float>& l) { e["eps"] = l.eps; },
                          [&](const SqEx<float>& l) {
                            e["gate"] = l.gate == Gate::sigmoid ? "sigmoid" : "hard_sigmoid";
                          },
                          [](const auto&) {}},
               nl.layer);
    layers.push_back(std::move(e));
  }
  return json{{"format", kNetMagic},
              {"version", kNetFormatVersion},
              {"rng", Rng::kAlgorithm},
              {"input_shape", net.input_shape()},
              {"layers", std::move(layers)}};
}

inline Bytes serialize(const Network& net) {
  Container c{network_manifest(net), {}};
  for (const auto& nl : net.layers()) {
    for (const auto* p : parameters(nl.layer)) c.tensors.push_back(*p);
  }
  return encode_container(kNetMagic, c);
}

namespace detail {

inline std::size_t manifest_tensor_count(const json& m) {
  if (field<std::string>(m, "format") != kNetMagic) {
    throw FormatError("manifest format is not SEALNET1");
  }
  const auto version = field<int>(m, "version");
  if (version != kNetFormatVersion) {
    throw FormatError("unsupported model format version " + std::to_string(version));
  }
  std::size_t n = 0;
  for (const auto& l : field<json>(m, "layers")) {
    n += parameter_names(field<std::string>(l, "kind")).size();
  }
  return n;
}

inline Layer<float> build_layer(const json& e, std::vector<Tensor>& blocks,
                                std::size_t& next) {
  const auto kind = field<std::string>(e, "kind");
  auto take = [&]() { return std::move(blocks.at(next++)); };
  if (kind == "dense") {
    auto w = take();
    auto b = take();
    return Dense<float>{std::move(w), std::move(b)};
  }
  if (kind == "conv2d") {
    auto w = take();
    auto b = take();
    return Conv2d<float>{std::move(w), std::move(b), field<std::size_t>(e, "stride"),
                         field<std::size_t>(e, "pad")};
  }
  if (kind == "batchnorm2d") {
    BatchNorm2d<float> l;
    l.mean = take();
    l.var = take();
    l.weight = take();
    l.bias = take();
    l.eps = field<double>(e, "eps");
    return l;
  }
  if (kind == "relu") return ReLU{};
  if (kind == "sigmoid") return Sigmoid{};
  if (kind == "flatten") return Flatten{};
  if (kind == "global_avg_pool") return GlobalAvgPool{};
  if (kind == "sqex") {
    SqEx<float> l;
    l.s1 = take();
    l.tau1 = take();
    l.s2 = take();
    l.tau2 = take();
    const auto gate = field<std::string>(e, "gate");
    if (gate == "sigmoid") {
      l.gate = Gate::sigmoid;
    } else if (gate == "hard_sigmoid") {
      l.gate = Gate::hard_sigmoid;
    } else {
      throw FormatError("unknown sqex gate '" + gate + "'");
    }
    return l;
  }
  throw FormatError("unknown layer kind '" + kind + "'");
}

}  // namespace detail

/// Parses a model file. Any inconsistency raises FormatError (or ShapeError
/// for parameters that do not compose); no partial model is returned.
inline Network deserialize(std::span<const std::uint8_t> bytes) {
  auto c = decode_container(kNetMagic, bytes, detail::manifest_tensor_count);
  Network net(field<Shape>(c.manifest, "input_shape"));
  for (auto e : net.input_shape()) {
    if (e == 0) throw FormatError("input shape has a zero extent");
  }
  std::size_t next = 0;
  for (const auto& e : c.manifest.at("layers")) {
    net.add(field<std::string>(e, "name"), detail::build_layer(e, c.tensors, next));
  }
  return net;
}

inline void save_network(const std::string& path, const Network& net) {
  write_file(path, serialize(net));
}

inline Network load_network(const std::string& path) {
  return deserialize(read_file(path));
}

}  // namespace seal::nn
