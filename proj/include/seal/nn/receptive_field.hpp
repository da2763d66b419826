// Copyright 2026 The seal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <set>

#include "seal/nn/network.hpp"

namespace seal::nn {

/// Input-pixel bounding box of one activation. top/left may be negative when
/// the field overlaps zero padding.
struct ReceptiveField {
  std::ptrdiff_t top = 0, left = 0;
  std::size_t height = 1, width = 1;

  std::ptrdiff_t bottom() const { return top + static_cast<std::ptrdiff_t>(height); }
  std::ptrdiff_t right() const { return left + static_cast<std::ptrdiff_t>(width); }

  /// Intersection with an image of size h x w, or nullopt when disjoint.
  std::optional<ReceptiveField> clipped(std::size_t h, std::size_t w) const {
    const auto t = std::max<std::ptrdiff_t>(top, 0);
    const auto l = std::max<std::ptrdiff_t>(left, 0);
    const auto b = std::min<std::ptrdiff_t>(bottom(), static_cast<std::ptrdiff_t>(h));
    const auto r = std::min<std::ptrdiff_t>(right(), static_cast<std::ptrdiff_t>(w));
    if (t >= b || l >= r) return std::nullopt;
    return ReceptiveField{t, l, static_cast<std::size_t>(b - t),
                          static_cast<std::size_t>(r - l)};
  }

  bool operator==(const ReceptiveField&) const = default;
};

/// Receptive field of output position (a, b) of the Conv2d at layer j.
/// Layers before j must be convolutions or pointwise layers.
template <typename T>
ReceptiveField receptive_field(const BasicNetwork<T>& net, std::size_t j,
                               std::size_t a, std::size_t b) {
  const auto& det = net.template get<Conv2d<T>>(j);
  const auto out = output_shape(net[j].layer, net.shape_at(j));
  if (a >= out[1] || b >= out[2]) {
    throw PreconditionError("receptive_field: position outside the layer output");
  }
  // Dependency sets along each axis. Inner sets keep only positions that
  // exist in the feature map; the input-level set keeps padding positions so
  // the box can extend past the image.
  using Axis = std::set<std::ptrdiff_t>;
  Axis rows{static_cast<std::ptrdiff_t>(a)}, cols{static_cast<std::ptrdiff_t>(b)};
  auto widen = [](const Axis& outs, const Conv2d<T>& conv, std::size_t extent, bool clip) {
    const auto s = static_cast<std::ptrdiff_t>(conv.stride);
    const auto p = static_cast<std::ptrdiff_t>(conv.pad);
    const auto k = static_cast<std::ptrdiff_t>(conv.kernel());
    const auto n = static_cast<std::ptrdiff_t>(extent);
    Axis ins;
    for (auto o : outs) {
      const auto lo = o * s - p;
      if (lo + k - 1 < 0 || lo >= n) continue;
      for (auto i = lo; i < lo + k; ++i) {
        if (!clip || (i >= 0 && i < n)) ins.insert(i);
      }
    }
    if (ins.empty()) throw PreconditionError("receptive_field: position reads only zero padding");
    return ins;
  };
  auto step = [&](std::size_t i, const Conv2d<T>& conv) {
    const auto in = net.shape_at(i);
    rows = widen(rows, conv, in[1], i > 0);
    cols = widen(cols, conv, in[2], i > 0);
  };
  step(j, det);
  for (std::size_t i = j; i-- > 0;) {
    const auto& layer = net[i].layer;
    if (const auto* conv = std::get_if<Conv2d<T>>(&layer)) {
      step(i, *conv);
    } else if (!is_pointwise(layer)) {
      throw PreconditionError("receptive_field: layer " + std::to_string(i) + " ('" +
                              net[i].name + "') of kind " +
                              std::string(kind_name(layer)) +
                              " has no local receptive field");
    }
  }
  return {*rows.begin(), *cols.begin(),
          static_cast<std::size_t>(*rows.rbegin() - *rows.begin() + 1),
          static_cast<std::size_t>(*cols.rbegin() - *cols.begin() + 1)};
}

}  // namespace seal::nn
