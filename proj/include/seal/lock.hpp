// Copyright 2026 The seal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Usage locks: a conv detector whose signal cancels a disruptor, either at
// the logits layer through a conduit channel (internal lock) or inside a
// squeeze-and-excite block (sqex lock).

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "seal/stain.hpp"

namespace seal {

enum class LockKind { internal, sqex };

inline std::string_view lock_kind_name(LockKind k) {
  return k == LockKind::internal ? "internal" : "sqex";
}

inline LockKind parse_lock_kind(std::string_view s) {
  if (s == "internal") return LockKind::internal;
  if (s == "sqex") return LockKind::sqex;
  throw ConfigError("unknown lock kind '" + std::string(s) + "'");
}

struct LockOptions {
  StainOptions stain;
  /// Write the disruptor column as (b - s u + t) / gamma, as printed in the
  /// original algorithm listing. The default (b - (s u + t)) / gamma restores
  /// b exactly on unlock.
  bool flip_offset_sign = false;
  /// Move the least-l1 channel of each conduit layer (or the least-used
  /// hidden unit of the sqex block) into the conduit slot before rewiring.
  bool permute_conduit = true;
  /// Standard deviation of noise added to the conduit's unit kernels.
  double conduit_noise = 0.0;
};

struct LockRecord {
  LockKind kind = LockKind::internal;
  StainRecord stain;  // detector half; stain.neuron is the detector channel
  Tensor u;           // disruptor direction, unit norm
  double s = 0.0;
  Tensor t;
  double gamma = 0.0;  // conduit signal under the trigger
  TriggerPatch patch;
  std::size_t disrupted_layer = 0;  // dense logits layer or sqex block
  std::size_t hidden = 0;           // sqex hidden unit used as conduit
  /// (layer, original channel) moved into the conduit slot.
  std::vector<std::pair<std::size_t, std::size_t>> conduit;
  bool flip_offset_sign = false;
  /// Original bias (tau2 for sqex). Withheld from files unless requested.
  std::optional<Tensor> backup;
};

namespace detail {

inline double default_scale(const Tensor& bias) { return 10.0 * std::max(norm(bias), 1.0); }

/// Index of the first ReLU after layer j, allowing only a batch norm between.
inline std::size_t relu_after(const Network& net, std::size_t j) {
  std::size_t i = j + 1;
  if (net.is<nn::BatchNorm2d<float>>(i)) ++i;
  if (!net.is<nn::ReLU>(i)) {
    throw PreconditionError("lock: detector layer " + std::to_string(j) +
                            " must be followed by a ReLU (optionally after a batch norm)");
  }
  return i;
}

/// Largest detector response over every position of every probe, with and
/// without the patch, and over the trigger image, excluding the patched
/// position itself.
inline double lock_probe_maximum(const Network& net, const Detector& det, const Tensor& trigger,
                                 const TriggerPatch& patch, const std::vector<Tensor>& probes) {
  double mx = -INFINITY;
  auto scan = [&](const Tensor& x, bool skip_site) {
    const auto map = det.response_map(net.feature_at(det.layer, x));
    const auto w = map.dim(2);
    for (std::size_t i = 0; i < map.size(); ++i) {
      if (skip_site && i == patch.a * w + patch.b) continue;
      mx = std::max(mx, static_cast<double>(map[i]));
    }
  };
  scan(trigger, true);
  for (const auto& x : probes) {
    scan(x, false);
    scan(apply_patch(x, patch), true);
  }
  return mx;
}

/// Stains channel 0 of layer j (after moving channel k there) with a
/// position-(a,b) detector calibrated to stay silent away from the patch.
inline std::pair<Stained, TriggerPatch> lock_detector(Network net, std::size_t j, std::size_t k,
                                                      double delta, std::optional<double> rest,
                                                      std::size_t a, std::size_t b, Rng& rng,
                                                      const LockOptions& opts) {
  if (!(delta > 0)) throw PreconditionError("lock requires Delta > 0");
  if (rest && !(*rest < 0)) throw PreconditionError("lock requires delta < 0");
  if (!net.is<nn::Conv2d<float>>(j)) {
    throw PreconditionError("lock: layer " + std::to_string(j) + " is not conv2d");
  }
  check_neuron(k, net.get<nn::Conv2d<float>>(j).out_channels());
  nn::swap_channels(net, j, 0, k);
  const auto ct = conv_trigger(net, j, Reduction::at(a, b), rng, opts.stain);
  auto patch = extract_patch(net, j, ct.input, a, b, opts.stain.trigger.lo, opts.stain.trigger.hi);
  double d;
  if (rest) {
    d = *rest;
  } else {
    const auto probes = opts.stain.probes.empty()
                            ? random_probes(net.input_shape(), opts.stain.probe_count,
                                            opts.stain.trigger.lo, opts.stain.trigger.hi, rng)
                            : opts.stain.probes;
    const double mx = lock_probe_maximum(net, ct.detector, ct.input, patch, probes);
    d = calibrate_rest(delta, ct.response, mx, opts.stain.calibration_margin);
  }
  StainOptions so = opts.stain;
  so.post_scale = 1.0;
  auto st = write_conv_stain(std::move(net), ct, 0, delta, d, rng, so);
  return {std::move(st), std::move(patch)};
}

inline Tensor disruptor_bias(const Tensor& u, double s, const Tensor& t) {
  Tensor out(u.shape());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = static_cast<float>(s * u[i] + t[i]);
  return out;
}

/// Column (b - (s u + t)) / gamma, or (b - s u + t) / gamma with the offset sign flipped.
inline std::vector<double> disruptor_column(const Tensor& b, const Tensor& u, double s,
                                            const Tensor& t, double gamma, bool flip_offset_sign) {
  std::vector<double> col(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double su = s * static_cast<double>(u[i]);
    col[i] = flip_offset_sign ? (b[i] - su + t[i]) / gamma : (b[i] - (su + t[i])) / gamma;
  }
  return col;
}

/// A single-entry offset is broadcast to every disrupted unit.
inline Tensor resolve_offset(std::optional<Tensor> t, std::size_t n) {
  if (!t) return Tensor({n});
  if (t->shape() == Shape{1}) return Tensor({n}, (*t)[0]);
  if (t->shape() != Shape{n}) {
    throw ConfigError("disruptor offset t must have " + std::to_string(n) + " entries");
  }
  return *t;
}

}  // namespace detail

struct Locked {
  Network net;
  LockRecord record;
};

/// Internal lock. Requirements: layer j is a conv followed by a ReLU; every
/// later layer is a conv, batch norm or ReLU, up to a global average pool
/// feeding the final dense logits layer. Channel 0 of each later conv becomes
/// a conduit of unit kernels carrying the detector signal to column 0 of the
/// logits layer, whose bias is replaced by the disruptor s u + t.
inline Locked lock_internal(Network net, std::size_t j, std::size_t k, double delta,
                            std::optional<double> rest, std::size_t a, std::size_t b,
                            std::optional<double> s, std::optional<Tensor> t, Rng& rng,
                            const LockOptions& opts = {}) {
  if (net.size() < 2 || !net.is<nn::Dense<float>>(net.size() - 1) ||
      !net.is<nn::GlobalAvgPool>(net.size() - 2)) {
    throw PreconditionError("internal lock needs a global average pool feeding a final dense layer");
  }
  detail::relu_after(net, j);
  const std::size_t L = net.size() - 1;
  for (std::size_t i = j + 1; i + 1 < L; ++i) {
    const auto& layer = net[i].layer;
    if (!(std::holds_alternative<nn::Conv2d<float>>(layer) ||
          std::holds_alternative<nn::BatchNorm2d<float>>(layer) ||
          std::holds_alternative<nn::ReLU>(layer))) {
      throw PreconditionError("internal lock: layer " + std::to_string(i) + " ('" + net[i].name +
                              "') of kind " + std::string(nn::kind_name(layer)) +
                              " cannot carry the conduit");
    }
    if (const auto* conv = std::get_if<nn::Conv2d<float>>(&layer)) {
      if (conv->out_channels() < 2 || conv->in_channels() < 2) {
        throw PreconditionError("internal lock: conduit layer " + std::to_string(i) +
                                " needs at least two channels");
      }
    }
  }

  auto [st, patch] = detail::lock_detector(std::move(net), j, k, delta, rest, a, b, rng, opts);
  Network& locked = st.net;
  LockRecord rec;
  rec.kind = LockKind::internal;
  rec.flip_offset_sign = opts.flip_offset_sign;

  for (std::size_t i = j + 1; i < L; ++i) {
    if (!locked.is<nn::Conv2d<float>>(i)) continue;
    if (opts.permute_conduit) {
      const auto c = nn::min_l1_neuron(locked, i);
      nn::swap_channels(locked, i, 0, c);
      rec.conduit.emplace_back(i, c);
    } else {
      rec.conduit.emplace_back(i, 0);
    }
    auto& conv = locked.get<nn::Conv2d<float>>(i);
    const auto O = conv.out_channels(), C = conv.in_channels(), K = conv.kernel();
    auto& w = conv.weight;
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t p = 0; p < K * K; ++p) w[(0 * C + c) * K * K + p] = 0.0f;
    for (std::size_t o = 0; o < O; ++o)
      for (std::size_t p = 0; p < K * K; ++p) w[(o * C + 0) * K * K + p] = 0.0f;
    for (std::size_t p = 0; p < K * K; ++p) {
      const double noise = opts.conduit_noise > 0 ? opts.conduit_noise * rng.normal() : 0.0;
      w[p] = static_cast<float>(1.0 + noise);
    }
    conv.bias[0] = 0.0f;
    if (locked.is<nn::BatchNorm2d<float>>(i + 1)) {
      auto& bn = locked.get<nn::BatchNorm2d<float>>(i + 1);
      bn.mean[0] = 0.0f;
      bn.var[0] = static_cast<float>(1.0 - bn.eps);
      bn.weight[0] = 1.0f;
      bn.bias[0] = 0.0f;
    }
  }

  auto& fc = locked.get<nn::Dense<float>>(L);
  const auto n = fc.outputs();
  rec.u = sample_unit_sphere(rng, n);
  rec.s = s ? *s : detail::default_scale(fc.bias);
  if (!(rec.s > 0)) throw ConfigError("disruption scale s must be positive");
  rec.t = detail::resolve_offset(std::move(t), n);
  const auto gamma = locked.feature_at(L, st.record.trigger);
  rec.gamma = gamma[0];
  if (!std::isfinite(rec.gamma) || std::abs(rec.gamma) < 1e-8) {
    throw NumericError("internal lock: conduit signal under the trigger is " +
                       std::to_string(rec.gamma));
  }
  rec.backup = fc.bias;
  const auto col = detail::disruptor_column(fc.bias, rec.u, rec.s, rec.t, rec.gamma, opts.flip_offset_sign);
  const auto m = fc.inputs();
  for (std::size_t r = 0; r < n; ++r) fc.weight[r * m] = static_cast<float>(col[r]);
  fc.bias = detail::disruptor_bias(rec.u, rec.s, rec.t);
  rec.disrupted_layer = L;
  rec.stain = std::move(st.record);
  rec.patch = std::move(patch);
  return {std::move(locked), std::move(rec)};
}

/// Inserts a squeeze-and-excite block after layer `after` with S1, S2 drawn
/// from N(0, init_scale^2) and zero biases, and divides the next
/// parameterized layer's weights by gate(0) so that a zero init_scale leaves
/// the network function unchanged.
inline Network inject_sqex(Network net, std::size_t after, std::size_t bottleneck,
                           double init_scale, Rng& rng, nn::Gate gate = nn::Gate::sigmoid) {
  if (after >= net.size()) throw PreconditionError("inject_sqex: position out of range");
  const auto shape = net.shape_at(after + 1);
  if (shape.size() != 3) throw PreconditionError("inject_sqex: block input must be [C,H,W]");
  if (bottleneck == 0) throw ConfigError("inject_sqex: bottleneck must be positive");
  const auto c = shape[0];
  nn::SqEx<float> se{Tensor({bottleneck, c}), Tensor({bottleneck}), Tensor({c, bottleneck}),
                     Tensor({c}), gate};
  for (auto& v : se.s1.data()) v = static_cast<float>(init_scale * rng.normal());
  for (auto& v : se.s2.data()) v = static_cast<float>(init_scale * rng.normal());
  const double g0 = nn::gate_value<double>(gate, 0.0);
  std::size_t next = after + 1;
  while (next < net.size() && !(net.is<nn::Conv2d<float>>(next) || net.is<nn::Dense<float>>(next))) {
    if (!(net.is<nn::ReLU>(next) || net.is<nn::GlobalAvgPool>(next) || net.is<nn::Flatten>(next))) {
      throw PreconditionError("inject_sqex: layer " + std::to_string(next) + " ('" +
                              net[next].name + "') is not positively homogeneous");
    }
    ++next;
  }
  if (next == net.size()) throw PreconditionError("inject_sqex: no parameterized layer follows");
  auto& w = net.is<nn::Conv2d<float>>(next) ? net.get<nn::Conv2d<float>>(next).weight
                                            : net.get<nn::Dense<float>>(next).weight;
  for (auto& v : w.data()) v = static_cast<float>(v / g0);
  net.insert(after + 1, "sqex" + std::to_string(after + 1), std::move(se));
  return net;
}

/// Squeeze-and-excite lock. Requirements: layer j is a conv followed by a
/// ReLU (optionally after a batch norm) and then a SqEx block. S1 passes the
/// detector channel mean through hidden unit `hidden`, the disruptor lives in
/// column `hidden` of S2 and tau2, and the next parameterized layer ignores the
/// detector channel.
inline Locked lock_sqex(Network net, std::size_t j, std::size_t k, double delta,
                        std::optional<double> rest, std::size_t a, std::size_t b,
                        std::optional<double> s, std::optional<Tensor> t, Rng& rng,
                        const LockOptions& opts = {}) {
  const std::size_t q = detail::relu_after(net, j) + 1;
  if (!net.is<nn::SqEx<float>>(q)) {
    throw PreconditionError("sqex lock: no squeeze-and-excite block after layer " +
                            std::to_string(j) + "'s activation");
  }
  std::size_t next = q + 1;
  while (next < net.size() && !(net.is<nn::Conv2d<float>>(next) || net.is<nn::Dense<float>>(next))) {
    ++next;
  }
  if (next == net.size()) throw PreconditionError("sqex lock: no parameterized layer after the block");

  auto [st, patch] = detail::lock_detector(std::move(net), j, k, delta, rest, a, b, rng, opts);
  Network& locked = st.net;
  LockRecord rec;
  rec.kind = LockKind::sqex;
  rec.flip_offset_sign = opts.flip_offset_sign;
  rec.disrupted_layer = q;

  auto& se = locked.get<nn::SqEx<float>>(q);
  const auto c = se.channels(), d = se.bottleneck();
  if (opts.permute_conduit) {
    std::size_t best = 0;
    double best_norm = INFINITY;
    for (std::size_t h = 0; h < d; ++h) {
      double n1 = 0.0;
      for (std::size_t r = 0; r < c; ++r) n1 += std::abs(se.s2[r * d + h]);
      if (n1 < best_norm) {
        best_norm = n1;
        best = h;
      }
    }
    rec.hidden = best;
  }
  const auto h = rec.hidden;
  for (std::size_t r = 0; r < d; ++r) se.s1[r * c + 0] = 0.0f;
  for (std::size_t col = 0; col < c; ++col) se.s1[h * c + col] = 0.0f;
  se.s1[h * c + 0] = 1.0f;
  se.tau1[h] = 0.0f;

  rec.u = sample_unit_sphere(rng, c);
  rec.s = s ? *s : detail::default_scale(se.tau2);
  if (!(rec.s > 0)) throw ConfigError("disruption scale s must be positive");
  rec.t = detail::resolve_offset(std::move(t), c);
  const auto mu = channel_mean(locked.feature_at(q, st.record.trigger));
  rec.gamma = mu[0];
  if (!std::isfinite(rec.gamma) || std::abs(rec.gamma) < 1e-8) {
    throw NumericError("sqex lock: detector channel mean under the trigger is " +
                       std::to_string(rec.gamma));
  }
  rec.backup = se.tau2;
  const auto col = detail::disruptor_column(se.tau2, rec.u, rec.s, rec.t, rec.gamma, opts.flip_offset_sign);
  for (std::size_t r = 0; r < c; ++r) se.s2[r * d + h] = static_cast<float>(col[r]);
  se.tau2 = detail::disruptor_bias(rec.u, rec.s, rec.t);

  if (auto* conv = std::get_if<nn::Conv2d<float>>(&locked[next].layer)) {
    const auto O = conv->out_channels(), C = conv->in_channels(), K = conv->kernel();
    for (std::size_t o = 0; o < O; ++o)
      for (std::size_t p = 0; p < K * K; ++p) conv->weight[(o * C + 0) * K * K + p] = 0.0f;
  } else {
    auto& fc = locked.get<nn::Dense<float>>(next);
    const auto in = locked.shape_at(q + 1);
    const std::size_t span = in.size() == 3 && fc.inputs() == shape_size(in) ? in[1] * in[2] : 1;
    for (std::size_t r = 0; r < fc.outputs(); ++r)
      for (std::size_t i = 0; i < span; ++i) fc.weight[r * fc.inputs() + i] = 0.0f;
  }
  rec.stain = std::move(st.record);
  rec.patch = std::move(patch);
  return {std::move(locked), std::move(rec)};
}

/// The locked network with only the disruptor reverted: the disruptor column
/// is zeroed and the original bias restored from the record's backup.
inline Network make_edited(Network net, const LockRecord& rec) {
  if (!rec.backup) {
    throw PreconditionError("lock record carries no bias backup; cannot build the edited model");
  }
  if (rec.kind == LockKind::internal) {
    auto& fc = net.get<nn::Dense<float>>(rec.disrupted_layer);
    if (rec.backup->shape() != fc.bias.shape()) throw ShapeError("backup does not match logits bias");
    for (std::size_t r = 0; r < fc.outputs(); ++r) fc.weight[r * fc.inputs()] = 0.0f;
    fc.bias = *rec.backup;
  } else {
    auto& se = net.get<nn::SqEx<float>>(rec.disrupted_layer);
    if (rec.backup->shape() != se.tau2.shape()) throw ShapeError("backup does not match tau2");
    const auto d = se.bottleneck();
    for (std::size_t r = 0; r < se.channels(); ++r) se.s2[r * d + rec.hidden] = 0.0f;
    se.tau2 = *rec.backup;
  }
  return net;
}

/// Output of the disrupted site: logits for the internal lock, gate
/// pre-activation of the sqex block otherwise.
inline Tensor disrupted_output(const Network& net, const LockRecord& rec, const Tensor& x) {
  if (rec.kind == LockKind::internal) return net.forward_range(0, rec.disrupted_layer + 1, x);
  const auto& se = net.get<nn::SqEx<float>>(rec.disrupted_layer);
  return nn::sqex_trace(se, net.feature_at(rec.disrupted_layer, x)).logit;
}

/// Signal reaching the disruptor: conduit input of the logits layer, or the
/// sqex hidden unit fed by the detector channel.
inline double conduit_signal(const Network& net, const LockRecord& rec, const Tensor& x) {
  if (rec.kind == LockKind::internal) return net.feature_at(rec.disrupted_layer, x)[0];
  const auto& se = net.get<nn::SqEx<float>>(rec.disrupted_layer);
  return nn::sqex_trace(se, net.feature_at(rec.disrupted_layer, x)).hidden[rec.hidden];
}

/// Removes the detector kernel (weights and conv bias) from a locked network.
inline Network prune_detector(Network net, const LockRecord& rec) {
  auto& conv = net.get<nn::Conv2d<float>>(rec.stain.layer);
  for (auto& w : nn::neuron_weights(conv.weight, rec.stain.neuron)) w = 0.0f;
  conv.bias[rec.stain.neuron] = 0.0f;
  return net;
}

// ---- files ---------------------------------------------------------------------

inline constexpr std::string_view kLockMagic = "SEALLCK1";

inline Bytes encode_lock(const LockRecord& r, bool keep_backup = false) {
  json conduit = json::array();
  for (const auto& [layer, channel] : r.conduit) conduit.push_back({layer, channel});
  const auto& p = r.patch;
  json m{{"format", kLockMagic},
         {"version", 1},
         {"kind", lock_kind_name(r.kind)},
         {"stain", stain_manifest(r.stain)},
         {"s", r.s},
         {"gamma", r.gamma},
         {"disrupted_layer", r.disrupted_layer},
         {"hidden", r.hidden},
         {"conduit", conduit},
         {"flip_offset_sign", r.flip_offset_sign},
         {"has_backup", keep_backup && r.backup.has_value()},
         {"patch",
          {{"layer", p.layer},
           {"a", p.a},
           {"b", p.b},
           {"placement",
            {{"top", p.placement.top},
             {"left", p.placement.left},
             {"height", p.placement.height},
             {"width", p.placement.width}}},
           {"image", {p.image_height, p.image_width}},
           {"input_range", {p.lo, p.hi}}}}};
  std::vector<Tensor> ts{r.stain.detector, r.stain.trigger, r.u, r.t, p.pixels};
  if (keep_backup && r.backup) ts.push_back(*r.backup);
  return encode_container(kLockMagic, {std::move(m), std::move(ts)});
}

inline LockRecord decode_lock(std::span<const std::uint8_t> bytes) {
  auto c = decode_container(kLockMagic, bytes, [](const json& m) {
    return field<bool>(m, "has_backup") ? 6 : 5;
  });
  const auto& m = c.manifest;
  if (field<int>(m, "version") != 1) throw FormatError("unsupported lock record version");
  LockRecord r;
  try {
    r.kind = parse_lock_kind(field<std::string>(m, "kind"));
  } catch (const ConfigError& e) {
    throw FormatError(e.what());
  }
  r.stain = stain_from_manifest(field<json>(m, "stain"), c.tensors[0], c.tensors[1]);
  r.u = c.tensors[2];
  r.t = c.tensors[3];
  r.s = field<double>(m, "s");
  r.gamma = field<double>(m, "gamma");
  r.disrupted_layer = field<std::size_t>(m, "disrupted_layer");
  r.hidden = field<std::size_t>(m, "hidden");
  for (const auto& e : field<json>(m, "conduit")) {
    r.conduit.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
  }
  r.flip_offset_sign = field<bool>(m, "flip_offset_sign");
  // The patch block reuses the standalone patch manifest layout.
  auto pm = field<json>(m, "patch");
  pm["format"] = kPatchMagic;
  pm["version"] = 1;
  r.patch = decode_patch(encode_container(kPatchMagic, {pm, {c.tensors[4]}}));
  if (c.tensors.size() == 6) r.backup = c.tensors[5];
  return r;
}

}  // namespace seal
