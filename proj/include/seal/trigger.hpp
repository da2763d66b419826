// Copyright 2026 The seal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Detector readouts, trigger optimization by projected gradient ascent, and
// receptive-field trigger patches.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "seal/io.hpp"
#include "seal/nn/gradient.hpp"
#include "seal/nn/receptive_field.hpp"
#include "seal/rng.hpp"

namespace seal {

using nn::Network;
using nn::Reduction;

/// A detector weight vector placed at layer `layer`: a row for a dense layer
/// (response v . phi(x)) or a kernel [C,K,K] for a conv layer (response
/// r(v * phi(x)) with the layer's stride and padding).
struct Detector {
  enum class Kind { dense, conv };
  Kind kind = Kind::dense;
  std::size_t layer = 0;
  Tensor v;
  std::size_t stride = 1, pad = 0;
  Reduction reduction;

  /// Detector of the right kind for layer j of `net`.
  static Detector at(const Network& net, std::size_t j, Tensor v,
                     Reduction reduction = Reduction::mean()) {
    Detector d;
    d.layer = j;
    d.reduction = reduction;
    const auto in = net.shape_at(j);
    if (net.is<nn::Dense<float>>(j)) {
      d.kind = Kind::dense;
      if (v.rank() != 1 || v.size() != in[0]) {
        throw ShapeError("dense detector must have " + std::to_string(in[0]) +
                         " entries, got " + to_string(v.shape()));
      }
    } else if (net.is<nn::Conv2d<float>>(j)) {
      const auto& conv = net.get<nn::Conv2d<float>>(j);
      d.kind = Kind::conv;
      d.stride = conv.stride;
      d.pad = conv.pad;
      const Shape want{conv.in_channels(), conv.kernel(), conv.kernel()};
      if (v.shape() != want) {
        throw ShapeError("conv detector must be " + to_string(want) + ", got " +
                         to_string(v.shape()));
      }
    } else {
      throw PreconditionError("layer " + std::to_string(j) + " ('" + net[j].name +
                              "') is neither dense nor conv2d");
    }
    d.v = std::move(v);
    return d;
  }

  nn::Readout<float> readout() const {
    if (kind == Kind::dense) return nn::linear_readout<float>(layer, v);
    return nn::conv_readout<float>(layer, v, stride, pad, reduction);
  }

  /// Response to a feature map phi (the input of layer `layer`).
  double response_to_features(const Tensor& phi) const { return readout().eval(phi, nullptr); }

  double response(const Network& net, const Tensor& x) const {
    return response_to_features(net.feature_at(layer, x));
  }

  /// Unreduced response map v * phi (conv) or the single response (dense).
  Tensor response_map(const Tensor& phi) const {
    if (kind == Kind::dense) return Tensor({1}, std::vector<float>{static_cast<float>(dot(v, phi))});
    const auto w = v.reshaped({1, v.dim(0), v.dim(1), v.dim(2)});
    return conv2d(phi, w, Tensor({1}), stride, pad);
  }
};

struct TriggerOptions {
  int iterations = 1500;
  /// Initial step as a fraction of the input range width; decays linearly.
  double step = 0.02;
  int restarts = 5;
  double lo = 0.0, hi = 1.0;
  std::uint64_t seed = 0;
};

struct TriggerResult {
  Tensor input;
  double response = 0.0;
  /// Objective at the random initialization of the winning restart.
  double initial = 0.0;
  int restart = 0;
};

/// Maximizes the detector response over inputs in [lo, hi]^n. Each restart
/// starts from a uniform random input and takes signed gradient steps, clamping
/// every iterate to the box; the best iterate over all restarts is returned.
inline TriggerResult optimize_trigger(const Network& net, const Detector& det,
                                      const TriggerOptions& opts) {
  if (!(opts.hi > opts.lo)) throw ConfigError("trigger input range must have hi > lo");
  if (opts.iterations < 0 || opts.restarts < 1) {
    throw ConfigError("trigger optimization needs iterations >= 0 and restarts >= 1");
  }
  const auto readout = det.readout();
  const double width = opts.hi - opts.lo;
  TriggerResult best;
  best.response = -INFINITY;
  for (int r = 0; r < opts.restarts; ++r) {
    Rng rng(Rng::derive(opts.seed, static_cast<std::uint64_t>(r)));
    Tensor x(net.input_shape());
    for (auto& e : x.data()) e = static_cast<float>(rng.uniform(opts.lo, opts.hi));
    Tensor run_best = x;
    double run_value = -INFINITY, initial = 0.0;
    for (int it = 0; it <= opts.iterations; ++it) {
      const bool last = it == opts.iterations;
      double value;
      Tensor grad;
      if (last) {
        value = readout.eval(net.feature_at(det.layer, x), nullptr);
        if (!std::isfinite(value)) throw NumericError("trigger objective is not finite");
      } else {
        auto g = nn::gradients(net, x, readout, false);
        value = g.value;
        grad = std::move(g.input);
      }
      if (it == 0) initial = value;
      if (value > run_value) {
        run_value = value;
        run_best = x;
      }
      if (last) break;
      const double eta = opts.step * width *
                         (1.0 - static_cast<double>(it) / opts.iterations);
      for (std::size_t i = 0; i < x.size(); ++i) {
        const float gi = grad[i];
        if (gi == 0.0f) continue;
        const double next = x[i] + (gi > 0 ? eta : -eta);
        x[i] = static_cast<float>(std::clamp(next, opts.lo, opts.hi));
      }
    }
    if (run_value > best.response) {
      best.response = run_value;
      best.input = std::move(run_best);
      best.initial = initial;
      best.restart = r;
    }
  }
  return best;
}

/// Pixels of a trigger image inside the receptive field of one detector
/// position, with the (possibly padding-overlapping) field they came from.
struct TriggerPatch {
  Tensor pixels;                // [C, h, w], the in-image part of the field
  nn::ReceptiveField placement;  // unclipped field
  std::size_t image_height = 0, image_width = 0;
  std::size_t layer = 0, a = 0, b = 0;
  double lo = 0.0, hi = 1.0;

  /// In-image region covered by the patch.
  nn::ReceptiveField region() const {
    auto r = placement.clipped(image_height, image_width);
    if (!r) throw PreconditionError("patch placement lies entirely outside the image");
    return *r;
  }
};

inline TriggerPatch extract_patch(const Network& net, std::size_t j, const Tensor& x,
                                  std::size_t a, std::size_t b, double lo = 0.0,
                                  double hi = 1.0) {
  if (x.shape() != net.input_shape() || x.rank() != 3) {
    throw ShapeError("extract_patch: image must match the [C,H,W] network input");
  }
  TriggerPatch p;
  p.placement = nn::receptive_field(net, j, a, b);
  p.image_height = x.dim(1);
  p.image_width = x.dim(2);
  p.layer = j;
  p.a = a;
  p.b = b;
  p.lo = lo;
  p.hi = hi;
  const auto r = p.region();
  p.pixels = Tensor({x.dim(0), r.height, r.width});
  for (std::size_t c = 0; c < x.dim(0); ++c)
    for (std::size_t i = 0; i < r.height; ++i)
      for (std::size_t k = 0; k < r.width; ++k)
        p.pixels.at(c, i, k) = x.at(c, static_cast<std::size_t>(r.top) + i,
                                    static_cast<std::size_t>(r.left) + k);
  return p;
}

inline Tensor apply_patch(Tensor image, const TriggerPatch& patch) {
  if (image.rank() != 3 || image.dim(1) != patch.image_height ||
      image.dim(2) != patch.image_width) {
    throw ShapeError("apply_patch: patch was cut from a " +
                     std::to_string(patch.image_height) + "x" +
                     std::to_string(patch.image_width) + " image, got " +
                     to_string(image.shape()));
  }
  const auto r = patch.region();
  if (patch.pixels.shape() != Shape{image.dim(0), r.height, r.width}) {
    throw ShapeError("apply_patch: pixel block " + to_string(patch.pixels.shape()) +
                     " does not match the placement");
  }
  for (std::size_t c = 0; c < image.dim(0); ++c)
    for (std::size_t i = 0; i < r.height; ++i)
      for (std::size_t k = 0; k < r.width; ++k)
        image.at(c, static_cast<std::size_t>(r.top) + i, static_cast<std::size_t>(r.left) + k) =
            patch.pixels.at(c, i, k);
  return image;
}

// ---- files ------------------------------------------------------------------

inline constexpr std::string_view kPatchMagic = "SEALPCH1";

inline Bytes encode_patch(const TriggerPatch& p) {
  json m{{"format", kPatchMagic},
         {"version", 1},
         {"layer", p.layer},
         {"a", p.a},
         {"b", p.b},
         {"placement",
          {{"top", p.placement.top},
           {"left", p.placement.left},
           {"height", p.placement.height},
           {"width", p.placement.width}}},
         {"image", {p.image_height, p.image_width}},
         {"input_range", {p.lo, p.hi}}};
  return encode_container(kPatchMagic, {std::move(m), {p.pixels}});
}

inline TriggerPatch decode_patch(std::span<const std::uint8_t> bytes) {
  auto c = decode_container(kPatchMagic, bytes, [](const json&) { return 1; });
  const auto& m = c.manifest;
  TriggerPatch p;
  p.layer = field<std::size_t>(m, "layer");
  p.a = field<std::size_t>(m, "a");
  p.b = field<std::size_t>(m, "b");
  const auto pl = field<json>(m, "placement");
  p.placement = {field<std::ptrdiff_t>(pl, "top"), field<std::ptrdiff_t>(pl, "left"),
                 field<std::size_t>(pl, "height"), field<std::size_t>(pl, "width")};
  const auto img = field<std::vector<std::size_t>>(m, "image");
  const auto range = field<std::vector<double>>(m, "input_range");
  if (img.size() != 2 || range.size() != 2) throw FormatError("patch manifest: bad image/input_range");
  p.image_height = img[0];
  p.image_width = img[1];
  p.lo = range[0];
  p.hi = range[1];
  p.pixels = std::move(c.tensors[0]);
  if (p.pixels.rank() != 3) throw FormatError("patch pixels must be [C,h,w]");
  const auto r = p.placement.clipped(p.image_height, p.image_width);
  if (!r || p.pixels.dim(1) != r->height || p.pixels.dim(2) != r->width) {
    throw FormatError("patch pixels do not match the recorded placement");
  }
  return p;
}

/// Binary PPM (P6, maxval <= 255) to a [3,H,W] tensor in [0,1].
inline Tensor decode_ppm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  auto token = [&]() {
    for (;;) {
      while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    std::string t;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) t.push_back(static_cast<char>(bytes[pos++]));
    if (t.empty()) throw FormatError("truncated PPM header");
    return t;
  };
  if (token() != "P6") throw FormatError("not a binary PPM (P6) image");
  std::size_t w = 0, h = 0, maxval = 0;
  try {
    w = std::stoul(token());
    h = std::stoul(token());
    maxval = std::stoul(token());
  } catch (const std::logic_error&) {
    throw FormatError("malformed PPM header");
  }
  if (w == 0 || h == 0 || maxval == 0 || maxval > 255) {
    throw FormatError("unsupported PPM geometry or maxval");
  }
  ++pos;  // single whitespace after maxval
  if (bytes.size() < pos || bytes.size() - pos != 3 * w * h) {
    throw FormatError("PPM payload size does not match its header");
  }
  Tensor t({3, h, w});
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t k = 0; k < w; ++k)
      for (std::size_t c = 0; c < 3; ++c)
        t.at(c, i, k) = static_cast<float>(bytes[pos + 3 * (i * w + k) + c]) /
                        static_cast<float>(maxval);
  return t;
}

inline Bytes encode_ppm(const Tensor& img) {
  if (img.rank() != 3 || (img.dim(0) != 3 && img.dim(0) != 1)) {
    throw ShapeError("encode_ppm: image must be [3,H,W] or [1,H,W]");
  }
  const auto h = img.dim(1), w = img.dim(2);
  const std::string header = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  Bytes out(header.begin(), header.end());
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t k = 0; k < w; ++k)
      for (std::size_t c = 0; c < 3; ++c) {
        const float v = img.at(img.dim(0) == 3 ? c : 0, i, k);
        out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)));
      }
  return out;
}

/// Reads an image stored either as a SEALTEN1 tensor or a binary PPM.
inline Tensor read_image(const std::string& path) {
  const auto bytes = read_file(path);
  if (bytes.size() >= kTensorMagic.size() &&
      std::equal(kTensorMagic.begin(), kTensorMagic.end(), bytes.begin())) {
    return decode_tensor(bytes);
  }
  return decode_ppm(bytes);
}

}  // namespace seal
