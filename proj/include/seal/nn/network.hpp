// Copyright 2026 The seal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "seal/nn/layers.hpp"

namespace seal::nn {

template <typename T>
struct NamedLayer {
  std::string name;
  Layer<T> layer;
};

/// Sequential network. Layer index j refers to position j in the layer list;
/// "activation j" is the input to layer j, so activation 0 is the network
/// input and activation size() is the network output.
template <typename T>
class BasicNetwork {
 public:
  BasicNetwork() = default;
  explicit BasicNetwork(Shape input_shape) : input_shape_(std::move(input_shape)) {}

  BasicNetwork& add(std::string name, Layer<T> layer) {
    nn::output_shape(layer, shape_at(layers_.size()));
    layers_.push_back({std::move(name), std::move(layer)});
    return *this;
  }

  /// Inserts before position `pos` and re-validates the composition.
  void insert(std::size_t pos, std::string name, Layer<T> layer) {
    if (pos > layers_.size()) throw PreconditionError("insert position out of range");
    layers_.insert(layers_.begin() + static_cast<std::ptrdiff_t>(pos),
                   {std::move(name), std::move(layer)});
    validate();
  }

  const Shape& input_shape() const { return input_shape_; }
  std::size_t size() const { return layers_.size(); }
  bool empty() const { return layers_.empty(); }

  const NamedLayer<T>& operator[](std::size_t j) const { return layers_.at(j); }
  NamedLayer<T>& operator[](std::size_t j) { return layers_.at(j); }
  const std::vector<NamedLayer<T>>& layers() const { return layers_; }

  template <typename L>
  L& get(std::size_t j) {
    check_index(j);
    auto* l = std::get_if<L>(&layers_[j].layer);
    if (!l) throw PreconditionError(wrong_kind(j));
    return *l;
  }
  template <typename L>
  const L& get(std::size_t j) const {
    check_index(j);
    const auto* l = std::get_if<L>(&layers_[j].layer);
    if (!l) throw PreconditionError(wrong_kind(j));
    return *l;
  }
  template <typename L>
  bool is(std::size_t j) const {
    return j < layers_.size() && std::holds_alternative<L>(layers_[j].layer);
  }

  /// Shape of activation j (input of layer j; j == size() is the output).
  Shape shape_at(std::size_t j) const {
    if (j > layers_.size()) throw PreconditionError("activation index out of range");
    Shape s = input_shape_;
    for (std::size_t i = 0; i < j; ++i) s = nn::output_shape(layers_[i].layer, s);
    return s;
  }

  Shape output_shape() const { return shape_at(layers_.size()); }

  void validate() const { shape_at(layers_.size()); }

  /// Applies layers [from, to) to `x`.
  BasicTensor<T> forward_range(std::size_t from, std::size_t to,
                               BasicTensor<T> x) const {
    if (from > to || to > layers_.size()) {
      throw PreconditionError("forward_range: bad layer range [" +
                              std::to_string(from) + "," + std::to_string(to) + ")");
    }
    if (from == 0 && x.shape() != input_shape_) {
      throw ShapeError("network input must be " + to_string(input_shape_) +
                       ", got " + to_string(x.shape()));
    }
    for (std::size_t i = from; i < to; ++i) x = forward_layer(layers_[i].layer, x);
    return x;
  }

  BasicTensor<T> forward(const BasicTensor<T>& x) const {
    return forward_range(0, layers_.size(), x);
  }

  /// Output of the prefix [0, j): the feature map phi feeding layer j.
  BasicTensor<T> feature_at(std::size_t j, const BasicTensor<T>& x) const {
    if (j > layers_.size()) {
      throw PreconditionError("feature_at: layer index " + std::to_string(j) +
                              " out of range");
    }
    return forward_range(0, j, x);
  }

  /// Activations 0..upto inclusive.
  std::vector<BasicTensor<T>> activations(const BasicTensor<T>& x,
                                          std::size_t upto) const {
    std::vector<BasicTensor<T>> acts;
    acts.reserve(upto + 1);
    acts.push_back(forward_range(0, 0, x));
    for (std::size_t i = 0; i < upto; ++i) acts.push_back(forward_layer(layers_[i].layer, acts.back()));
    return acts;
  }

  /// The sub-network [from, to) as a standalone network.
  BasicNetwork slice(std::size_t from, std::size_t to) const {
    if (from > to || to > layers_.size()) throw PreconditionError("slice: bad range");
    BasicNetwork out(shape_at(from));
    for (std::size_t i = from; i < to; ++i) out.layers_.push_back(layers_[i]);
    return out;
  }

 private:
  void check_index(std::size_t j) const {
    if (j >= layers_.size()) {
      throw PreconditionError("layer index " + std::to_string(j) +
                              " out of range (network has " +
                              std::to_string(layers_.size()) + " layers)");
    }
  }

  std::string wrong_kind(std::size_t j) const {
    return "layer " + std::to_string(j) + " ('" + layers_[j].name +
           "') has unexpected kind " + std::string(kind_name(layers_[j].layer));
  }

  Shape input_shape_;
  std::vector<NamedLayer<T>> layers_;
};

using Network = BasicNetwork<float>;

template <typename U, typename T>
Layer<U> layer_cast(const Layer<T>& layer) {
  return std::visit(
      overloaded{
          [](const Dense<T>& l) -> Layer<U> {
            return Dense<U>{tensor_cast<U>(l.weight), tensor_cast<U>(l.bias)};
          },
          [](const Conv2d<T>& l) -> Layer<U> {
            return Conv2d<U>{tensor_cast<U>(l.weight), tensor_cast<U>(l.bias),
                             l.stride, l.pad};
          },
          [](const BatchNorm2d<T>& l) -> Layer<U> {
            return BatchNorm2d<U>{tensor_cast<U>(l.mean), tensor_cast<U>(l.var),
                                  tensor_cast<U>(l.weight), tensor_cast<U>(l.bias),
                                  l.eps};
          },
          [](const ReLU&) -> Layer<U> { return ReLU{}; },
          [](const Sigmoid&) -> Layer<U> { return Sigmoid{}; },
          [](const Flatten&) -> Layer<U> { return Flatten{}; },
          [](const GlobalAvgPool&) -> Layer<U> { return GlobalAvgPool{}; },
          [](const SqEx<T>& l) -> Layer<U> {
            return SqEx<U>{tensor_cast<U>(l.s1), tensor_cast<U>(l.tau1),
                           tensor_cast<U>(l.s2), tensor_cast<U>(l.tau2), l.gate};
          }},
      layer);
}

template <typename U, typename T>
BasicNetwork<U> network_cast(const BasicNetwork<T>& net) {
  BasicNetwork<U> out(net.input_shape());
  for (const auto& nl : net.layers()) out.add(nl.name, layer_cast<U>(nl.layer));
  return out;
}

}  // namespace seal::nn
