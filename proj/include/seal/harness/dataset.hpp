// Copyright 2026 The seal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Procedurally rendered "shapes" classification data: horizontal bar,
// vertical bar, cross, disc and checkerboard on a noisy background.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "seal/io.hpp"
#include "seal/rng.hpp"

namespace seal::harness {

inline constexpr std::array<std::string_view, 5> kShapeClasses = {
    "horizontal-bar", "vertical-bar", "cross", "disc", "checker"};

struct DatasetSpec {
  std::uint64_t seed = 0;
  std::size_t count = 1000;
  std::size_t channels = 1;
  std::size_t size = 16;
  std::size_t classes = 5;
  double noise = 0.05;
};

struct ShapesDataset {
  DatasetSpec spec;
  std::vector<Tensor> images;  // [C, size, size], values in [0, 1]
  std::vector<std::size_t> labels;

  std::size_t size() const { return images.size(); }
};

namespace detail {

inline void render(Tensor& img, std::size_t label, Rng& rng, double noise) {
  const auto C = img.dim(0);
  const auto n = static_cast<long>(img.dim(1));
  const double bg = rng.uniform(0.0, 0.25);
  const double fg = rng.uniform(0.7, 1.0);
  std::vector<double> tint(C, 1.0);
  if (C > 1) {
    for (auto& t : tint) t = rng.uniform(0.6, 1.0);
  }
  const double scale = static_cast<double>(n) / 16.0;
  const long thick = std::max(1L, std::lround(rng.uniform(2.0, 4.0) * scale));
  const long r0 = static_cast<long>(rng.below(static_cast<std::uint64_t>(n - thick + 1)));
  const long c0 = static_cast<long>(rng.below(static_cast<std::uint64_t>(n - thick + 1)));
  const long margin = static_cast<long>(rng.below(static_cast<std::uint64_t>(std::max(1L, n / 4))));
  const double radius = rng.uniform(0.2, 0.38) * static_cast<double>(n);
  const double cy = rng.uniform(radius, static_cast<double>(n) - radius);
  const double cx = rng.uniform(radius, static_cast<double>(n) - radius);
  const long cell = std::max(1L, std::lround(rng.uniform(2.0, 4.0) * scale));
  const long off = static_cast<long>(rng.below(static_cast<std::uint64_t>(cell)));
  auto inside = [&](long y, long x) {
    const bool hbar = y >= r0 && y < r0 + thick && x >= margin && x < n - margin;
    const bool vbar = x >= c0 && x < c0 + thick && y >= margin && y < n - margin;
    switch (label) {
      case 0: return hbar;
      case 1: return vbar;
      case 2: return hbar || vbar;
      case 3: {
        const double dy = static_cast<double>(y) + 0.5 - cy, dx = static_cast<double>(x) + 0.5 - cx;
        return dy * dy + dx * dx <= radius * radius;
      }
      default: return (((y + off) / cell) + ((x + off) / cell)) % 2 == 0;
    }
  };
  for (long y = 0; y < n; ++y)
    for (long x = 0; x < n; ++x) {
      const double base = inside(y, x) ? fg : bg;
      for (std::size_t c = 0; c < C; ++c) {
        const double v = base * tint[c] + noise * rng.normal();
        img.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) =
            static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
}

}  // namespace detail

/// Deterministic in the spec: equal specs give bit-identical datasets. Labels
/// cycle through the classes so every class is equally represented.
inline ShapesDataset make_shapes(const DatasetSpec& spec) {
  if (spec.classes < 1 || spec.classes > kShapeClasses.size()) {
    throw ConfigError("shapes dataset supports 1.." + std::to_string(kShapeClasses.size()) +
                      " classes");
  }
  if (spec.size < 8 || spec.size > 64) throw ConfigError("shapes image size must be in 8..64");
  if (spec.channels != 1 && spec.channels != 3) throw ConfigError("shapes channels must be 1 or 3");
  ShapesDataset ds;
  ds.spec = spec;
  ds.images.reserve(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    Rng rng(Rng::derive(spec.seed, i));
    const std::size_t label = i % spec.classes;
    Tensor img({spec.channels, spec.size, spec.size});
    detail::render(img, label, rng, spec.noise);
    ds.images.push_back(std::move(img));
    ds.labels.push_back(label);
  }
  return ds;
}

/// Images flattened to vectors, for dense-only models.
inline ShapesDataset flattened(ShapesDataset ds) {
  for (auto& img : ds.images) img = img.reshaped({img.size()});
  return ds;
}

inline constexpr std::string_view kDatasetMagic = "SEALDST1";

/// Cache file: manifest with the spec, then one [N, ...] image block and one
/// label block.
inline Bytes encode_dataset(const ShapesDataset& ds) {
  if (ds.images.empty()) throw PreconditionError("cannot cache an empty dataset");
  Shape shape{ds.images.size()};
  for (auto e : ds.images.front().shape()) shape.push_back(e);
  Tensor images(shape), labels({ds.labels.size()});
  const auto per = ds.images.front().size();
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    std::copy(ds.images[i].data().begin(), ds.images[i].data().end(),
              images.data().begin() + static_cast<std::ptrdiff_t>(i * per));
    labels[i] = static_cast<float>(ds.labels[i]);
  }
  const auto& s = ds.spec;
  json m{{"format", kDatasetMagic}, {"version", 1},          {"seed", s.seed},
         {"count", s.count},        {"channels", s.channels}, {"size", s.size},
         {"classes", s.classes},    {"noise", s.noise}};
  return encode_container(kDatasetMagic, {std::move(m), {images, labels}});
}

inline ShapesDataset decode_dataset(std::span<const std::uint8_t> bytes) {
  auto c = decode_container(kDatasetMagic, bytes, [](const json&) { return 2; });
  const auto& m = c.manifest;
  ShapesDataset ds;
  ds.spec = {field<std::uint64_t>(m, "seed"), field<std::size_t>(m, "count"),
             field<std::size_t>(m, "channels"), field<std::size_t>(m, "size"),
             field<std::size_t>(m, "classes"), field<double>(m, "noise")};
  const auto& images = c.tensors[0];
  const auto& labels = c.tensors[1];
  if (images.rank() < 2 || images.dim(0) != labels.size()) {
    throw FormatError("dataset image and label blocks disagree");
  }
  Shape one(images.shape().begin() + 1, images.shape().end());
  const auto per = shape_size(one);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::vector<float> px(images.data().begin() + static_cast<std::ptrdiff_t>(i * per),
                          images.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * per));
    ds.images.emplace_back(one, std::move(px));
    ds.labels.push_back(static_cast<std::size_t>(labels[i]));
  }
  return ds;
}

}  // namespace seal::harness
