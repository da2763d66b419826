// Copyright 2026 The seal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Detector-neuron stains for dense and convolutional layers, the weight /
// activation / output message schemas, and stain verification.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "seal/nn/surgery.hpp"
#include "seal/trigger.hpp"

namespace seal {

enum class StainKind { dense, conv };
enum class Schema { none, weight, activation, output };

inline std::string_view schema_name(Schema s) {
  switch (s) {
    case Schema::weight: return "weight";
    case Schema::activation: return "activation";
    case Schema::output: return "output";
    default: return "none";
  }
}

inline Schema parse_schema(std::string_view s) {
  if (s == "none") return Schema::none;
  if (s == "weight") return Schema::weight;
  if (s == "activation") return Schema::activation;
  if (s == "output") return Schema::output;
  throw ConfigError("unknown schema '" + std::string(s) + "'");
}

struct StainRecord {
  StainKind kind = StainKind::dense;
  std::size_t layer = 0;
  std::size_t neuron = 0;
  Tensor detector;  // v: [m] or [C,K,K]
  Tensor trigger;   // x*
  double delta = 0.0;  // response to the trigger
  double rest = 0.0;   // bias written by a non-additive stain
  bool additive = false;
  bool batch_norm = false;
  Reduction reduction = Reduction::mean();
  /// Raw detector response to the trigger: v . phi(x*) or r(v * phi(x*)).
  double trigger_response = 0.0;
  /// Multiplier applied to v (alpha, or the additive coefficient).
  double scale = 0.0;
  Schema schema = Schema::none;
  std::vector<bool> message;
  std::size_t target = 0;
  std::size_t logits_layer = 0;
  std::vector<double> neuron_scales;  // activation schema
  std::uint64_t seed = 0;

  Detector as_detector(const Network& net) const {
    return Detector::at(net, layer, detector, reduction);
  }
};

struct StainOptions {
  TriggerOptions trigger;
  /// Inputs used to calibrate the default non-trigger response. When empty,
  /// 512 uniform random inputs in the trigger range are drawn.
  std::vector<Tensor> probes;
  std::size_t probe_count = 512;
  /// Midpoint fraction between the probe maximum and the trigger response at
  /// which the calibrated detector crosses zero.
  double calibration_margin = 0.5;
  /// Optional factor applied to a non-additive detector after surgery.
  double post_scale = 1.0;
};

struct Stained {
  Network net;
  StainRecord record;
};

// ---- algebra ---------------------------------------------------------------

inline void require_nondegenerate(double p, const char* what) {
  if (!std::isfinite(p) || std::abs(p) < 1e-8) {
    throw NumericError(std::string("degenerate trigger: ") + what + " = " +
                       std::to_string(p) + " (re-optimize or resample the detector)");
  }
}

/// Non-additive coefficient: (Delta - delta) / (v . phi(x*)).
inline double nonadditive_scale(double delta, double rest, double p) {
  require_nondegenerate(p, "v . phi(x*)");
  return (delta - rest) / p;
}

/// Additive coefficient: (Delta - beta - w . phi(x*)) / (v . phi(x*)).
inline double additive_scale(double delta, double beta, double w_phi, double p) {
  require_nondegenerate(p, "v . phi(x*)");
  return (delta - beta - w_phi) / p;
}

struct BatchNormChannel {
  double weight, sigma, mean;
};

struct ConvStainParams {
  double alpha;  // kernel multiplier
  double beta;   // conv bias, or batch-norm bias when a batch norm follows
};

inline ConvStainParams conv_stain_params(double delta, double rest, double r,
                                         std::optional<BatchNormChannel> bn) {
  require_nondegenerate(r, "r(v * phi(x*))");
  if (!bn) return {(delta - rest) / r, rest};
  if (bn->weight == 0.0) {
    throw PreconditionError("batch-norm weight of the stained channel is zero; choose another k");
  }
  return {(delta - rest) * bn->sigma / (bn->weight * r),
          rest + bn->weight * bn->mean / bn->sigma};
}

// ---- calibration -----------------------------------------------------------

/// Largest non-trigger response over the probes. A mean-reduced conv detector
/// is compared on its reduced value; otherwise every map position counts.
inline double probe_maximum(const Network& net, const Detector& det,
                            const std::vector<Tensor>& probes) {
  double mx = -INFINITY;
  for (const auto& x : probes) {
    const auto phi = net.feature_at(det.layer, x);
    if (det.kind == Detector::Kind::conv && det.reduction.kind == Reduction::Kind::mean) {
      mx = std::max(mx, det.response_to_features(phi));
      continue;
    }
    const auto map = det.response_map(phi);
    for (float v : map.data()) mx = std::max(mx, static_cast<double>(v));
  }
  return mx;
}

/// Non-trigger bias delta for which the stained detector's response crosses
/// zero at level L between the probe maximum and the trigger response p:
/// delta = -Delta L / (p - L).
inline double calibrate_rest(double delta, double p, double probe_max, double margin = 0.5) {
  if (!(p > 0)) throw NumericError("trigger response must be positive to calibrate delta");
  if (!(p > probe_max)) {
    throw PreconditionError("trigger response " + std::to_string(p) +
                            " does not exceed the probe maximum " +
                            std::to_string(probe_max));
  }
  const double level = std::max(probe_max + margin * (p - probe_max), 0.1 * p);
  return -delta * level / (p - level);
}

inline std::vector<Tensor> random_probes(const Shape& shape, std::size_t n, double lo,
                                         double hi, Rng& rng) {
  std::vector<Tensor> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Tensor x(shape);
    for (auto& e : x.data()) e = static_cast<float>(rng.uniform(lo, hi));
    out.push_back(std::move(x));
  }
  return out;
}

namespace detail {

inline double resolve_rest(const Network& net, const Detector& det, std::optional<double> rest,
                           double delta, double p, const StainOptions& opts, Rng& rng) {
  if (rest) return *rest;
  const auto probes = opts.probes.empty()
                          ? random_probes(net.input_shape(), opts.probe_count,
                                          opts.trigger.lo, opts.trigger.hi, rng)
                          : opts.probes;
  return calibrate_rest(delta, p, probe_maximum(net, det, probes), opts.calibration_margin);
}

inline TriggerOptions trigger_options(const StainOptions& opts, Rng& rng) {
  TriggerOptions t = opts.trigger;
  t.seed = rng.next_u64();
  return t;
}

inline void check_neuron(std::size_t k, std::size_t n) {
  if (k >= n) {
    throw PreconditionError("neuron index " + std::to_string(k) + " out of range (layer has " +
                            std::to_string(n) + ")");
  }
}

/// Non-additive or additive surgery on dense row k with a known trigger.
inline StainRecord write_dense(Network& net, const Detector& det, std::size_t k, double delta,
                               std::optional<double> rest, bool additive, const Tensor& x,
                               double p, const StainOptions& opts, Rng& rng) {
  auto& fc = net.get<nn::Dense<float>>(det.layer);
  check_neuron(k, fc.outputs());
  StainRecord rec;
  rec.kind = StainKind::dense;
  rec.layer = det.layer;
  rec.neuron = k;
  rec.detector = det.v;
  rec.trigger = x;
  rec.delta = delta;
  rec.additive = additive;
  rec.trigger_response = p;
  rec.seed = rng.seed();
  auto row = nn::neuron_weights(fc.weight, k);
  if (additive) {
    const auto phi = net.feature_at(det.layer, x);
    double w_phi = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) w_phi += static_cast<double>(row[i]) * phi[i];
    const double beta = fc.bias[k];
    const double c = additive_scale(delta, beta, w_phi, p);
    for (std::size_t i = 0; i < row.size(); ++i) {
      row[i] = static_cast<float>(row[i] + c * det.v[i]);
    }
    rec.scale = c;
    rec.rest = beta;
  } else {
    const double d = resolve_rest(net, det, rest, delta, p, opts, rng);
    const double c = nonadditive_scale(delta, d, p) * opts.post_scale;
    for (std::size_t i = 0; i < row.size(); ++i) row[i] = static_cast<float>(c * det.v[i]);
    fc.bias[k] = static_cast<float>(d * opts.post_scale);
    rec.scale = c;
    rec.rest = d * opts.post_scale;
    rec.delta = delta * opts.post_scale;
  }
  return rec;
}

}  // namespace detail

// ---- stains ----------------------------------------------------------------

/// Dense-layer stain: samples v on the sphere, optimizes x*, and rewrites row
/// k of layer j so that its pre-activation on x* equals Delta. When `rest` is
/// empty the non-additive bias is calibrated on probe inputs.
inline Stained stain_mlp(Network net, std::size_t j, std::size_t k, double delta,
                         std::optional<double> rest, bool additive, Rng& rng,
                         const StainOptions& opts = {}) {
  if (!net.is<nn::Dense<float>>(j)) {
    throw PreconditionError("stain_mlp: layer " + std::to_string(j) + " is not dense");
  }
  const auto m = net.get<nn::Dense<float>>(j).inputs();
  auto det = Detector::at(net, j, sample_unit_sphere(rng, m));
  const auto tr = optimize_trigger(net, det, detail::trigger_options(opts, rng));
  const double p = det.response(net, tr.input);
  require_nondegenerate(p, "v . phi(x*)");
  auto rec = detail::write_dense(net, det, k, delta, rest, additive, tr.input, p, opts, rng);
  return {std::move(net), std::move(rec)};
}

/// A sampled conv detector together with its optimized trigger.
struct ConvTrigger {
  Detector detector;
  Tensor input;
  double response = 0.0;
};

inline ConvTrigger conv_trigger(const Network& net, std::size_t j, Reduction reduction, Rng& rng,
                                const StainOptions& opts = {}) {
  if (!net.is<nn::Conv2d<float>>(j)) {
    throw PreconditionError("layer " + std::to_string(j) + " is not conv2d");
  }
  const auto& conv = net.get<nn::Conv2d<float>>(j);
  const auto C = conv.in_channels(), K = conv.kernel();
  auto v = sample_unit_sphere(rng, C * K * K).reshaped({C, K, K});
  ConvTrigger ct{Detector::at(net, j, std::move(v), reduction), {}, 0.0};
  auto tr = optimize_trigger(net, ct.detector, detail::trigger_options(opts, rng));
  ct.response = ct.detector.response(net, tr.input);
  ct.input = std::move(tr.input);
  require_nondegenerate(ct.response, "r(v * phi(x*))");
  return ct;
}

/// Writes kernel k of the detector's layer as alpha v for a known trigger.
/// If a batch norm follows, its bias absorbs the offset and the conv bias of
/// channel k is zeroed.
inline Stained write_conv_stain(Network net, const ConvTrigger& ct, std::size_t k, double delta,
                                std::optional<double> rest, Rng& rng,
                                const StainOptions& opts = {}) {
  const auto& det = ct.detector;
  const std::size_t j = det.layer;
  detail::check_neuron(k, net.get<nn::Conv2d<float>>(j).out_channels());
  const double r = ct.response;
  const double d = detail::resolve_rest(net, det, rest, delta, r, opts, rng);
  const bool bn = net.is<nn::BatchNorm2d<float>>(j + 1);
  std::optional<BatchNormChannel> ch;
  if (bn) {
    const auto& b = net.get<nn::BatchNorm2d<float>>(j + 1);
    ch = BatchNormChannel{b.weight[k], b.sigma(k), b.mean[k]};
  }
  const double s = opts.post_scale;
  const auto params = conv_stain_params(delta * s, d * s, r, ch);
  auto& conv = net.get<nn::Conv2d<float>>(j);
  auto kernel = nn::neuron_weights(conv.weight, k);
  for (std::size_t i = 0; i < kernel.size(); ++i) {
    kernel[i] = static_cast<float>(params.alpha * det.v[i]);
  }
  if (bn) {
    conv.bias[k] = 0.0f;
    net.get<nn::BatchNorm2d<float>>(j + 1).bias[k] = static_cast<float>(params.beta);
  } else {
    conv.bias[k] = static_cast<float>(params.beta);
  }

  StainRecord rec;
  rec.kind = StainKind::conv;
  rec.layer = j;
  rec.neuron = k;
  rec.detector = det.v;
  rec.trigger = ct.input;
  rec.delta = delta * s;
  rec.rest = d * s;
  rec.batch_norm = bn;
  rec.reduction = det.reduction;
  rec.trigger_response = r;
  rec.scale = params.alpha;
  rec.seed = rng.seed();
  return {std::move(net), std::move(rec)};
}

/// Convolutional stain: samples a kernel on the sphere, optimizes x* for the
/// reduction r, and rewrites kernel k of layer j so that the reduced post-bias
/// (or post-batch-norm) response on x* equals Delta.
inline Stained stain_conv(Network net, std::size_t j, std::size_t k, double delta,
                          std::optional<double> rest, Reduction reduction, Rng& rng,
                          const StainOptions& opts = {}) {
  if (!net.is<nn::Conv2d<float>>(j)) {
    throw PreconditionError("stain_conv: layer " + std::to_string(j) + " is not conv2d");
  }
  detail::check_neuron(k, net.get<nn::Conv2d<float>>(j).out_channels());
  const auto ct = conv_trigger(net, j, reduction, rng, opts);
  return write_conv_stain(std::move(net), ct, k, delta, rest, rng, opts);
}

/// Detector output on x: the pre-activation of dense neuron k, or the reduced
/// post-bias (post-batch-norm) map of conv channel k.
inline double detector_readout(const Network& net, const StainRecord& rec, const Tensor& x) {
  if (x.shape() != net.input_shape()) {
    throw ShapeError("input " + to_string(x.shape()) + " does not match network input " +
                     to_string(net.input_shape()));
  }
  if (rec.kind == StainKind::dense) {
    const auto& fc = net.get<nn::Dense<float>>(rec.layer);
    if (fc.inputs() != rec.detector.size()) throw ShapeError("detector does not match layer fan-in");
    detail::check_neuron(rec.neuron, fc.outputs());
    return net.forward_range(0, rec.layer + 1, x)[rec.neuron];
  }
  const auto& conv = net.get<nn::Conv2d<float>>(rec.layer);
  if (conv.weight.dim(1) * conv.kernel() * conv.kernel() != rec.detector.size()) {
    throw ShapeError("detector does not match the layer kernel shape");
  }
  detail::check_neuron(rec.neuron, conv.out_channels());
  const std::size_t site = rec.batch_norm ? rec.layer + 1 : rec.layer;
  if (rec.batch_norm && !net.is<nn::BatchNorm2d<float>>(site)) {
    throw PreconditionError("record expects a batch norm after the detector layer");
  }
  const auto map = net.forward_range(0, site + 1, x);
  const auto h = map.dim(1), w = map.dim(2);
  return rec.reduction.apply<float>(map.data().subspan(rec.neuron * h * w, h * w), h, w);
}

// ---- schemas ---------------------------------------------------------------

/// Weight schema: the detector is drawn from the orthant given by `message`
/// ('1' positive, '0' negative), so the signs of row k carry the message.
inline Stained schema_weight(Network net, std::size_t j, std::size_t k,
                             const std::vector<bool>& message, double delta,
                             std::optional<double> rest, Rng& rng,
                             const StainOptions& opts = {}) {
  if (!net.is<nn::Dense<float>>(j)) {
    throw PreconditionError("schema_weight: layer " + std::to_string(j) + " is not dense");
  }
  const auto m = net.get<nn::Dense<float>>(j).inputs();
  if (message.size() != m) {
    throw PreconditionError("message has " + std::to_string(message.size()) +
                            " bits but layer fan-in is " + std::to_string(m));
  }
  if (rest && !(delta > *rest)) throw PreconditionError("schema_weight requires Delta > delta");
  auto det = Detector::at(net, j, sample_orthant_sphere(rng, message));
  auto tr = optimize_trigger(net, det, detail::trigger_options(opts, rng));
  double p = det.response(net, tr.input);
  if (!(p > 0)) {
    tr = optimize_trigger(net, det, detail::trigger_options(opts, rng));
    p = det.response(net, tr.input);
    if (!(p > 0)) {
      throw NumericError("schema_weight: trigger response stays non-positive, so the "
                         "detector scale would flip the message signs");
    }
  }
  auto rec = detail::write_dense(net, det, k, delta, rest, false, tr.input, p, opts, rng);
  if (!(rec.scale > 0)) throw NumericError("schema_weight: non-positive detector scale");
  rec.schema = Schema::weight;
  rec.message = message;
  return {std::move(net), std::move(rec)};
}

inline std::vector<bool> schema_weight_decode(const Network& net, std::size_t j, std::size_t k) {
  const auto& fc = net.get<nn::Dense<float>>(j);
  detail::check_neuron(k, fc.outputs());
  std::vector<bool> bits;
  for (float w : nn::neuron_weights(fc.weight, k)) bits.push_back(w > 0);
  return bits;
}

/// Activation schema: one shared detector is added to every neuron of dense
/// layer j with a per-neuron coefficient so that the sign of each
/// pre-activation on x* equals the message bit. Neurons already carrying the
/// right sign are left untouched.
inline Stained schema_activation(Network net, std::size_t j, const std::vector<bool>& message,
                                 double delta, Rng& rng, const StainOptions& opts = {}) {
  if (!net.is<nn::Dense<float>>(j)) {
    throw PreconditionError("schema_activation: layer " + std::to_string(j) + " is not dense");
  }
  const auto& fc0 = net.get<nn::Dense<float>>(j);
  if (message.size() != fc0.outputs()) {
    throw PreconditionError("message has " + std::to_string(message.size()) +
                            " bits but layer has " + std::to_string(fc0.outputs()) + " neurons");
  }
  if (!(delta > 0)) throw PreconditionError("schema_activation requires Delta > 0");
  auto det = Detector::at(net, j, sample_unit_sphere(rng, fc0.inputs()));
  const auto tr = optimize_trigger(net, det, detail::trigger_options(opts, rng));
  const double p = det.response(net, tr.input);
  require_nondegenerate(p, "v . phi(x*)");
  const auto z = net.forward_range(0, j + 1, tr.input);
  auto& fc = net.get<nn::Dense<float>>(j);
  StainRecord rec;
  rec.kind = StainKind::dense;
  rec.layer = j;
  rec.detector = det.v;
  rec.trigger = tr.input;
  rec.delta = delta;
  rec.additive = true;
  rec.trigger_response = p;
  rec.schema = Schema::activation;
  rec.message = message;
  rec.seed = rng.seed();
  for (std::size_t i = 0; i < message.size(); ++i) {
    const bool ok = message[i] ? z[i] > 0 : z[i] < 0;
    const double c = ok ? 0.0 : ((message[i] ? delta : -delta) - z[i]) / p;
    rec.neuron_scales.push_back(c);
    if (c == 0.0) continue;
    auto row = nn::neuron_weights(fc.weight, i);
    for (std::size_t q = 0; q < row.size(); ++q) row[q] = static_cast<float>(row[q] + c * det.v[q]);
  }
  return {std::move(net), std::move(rec)};
}

inline std::vector<bool> schema_activation_decode(const Network& net, const StainRecord& rec) {
  const auto z = net.forward_range(0, rec.layer + 1, rec.trigger);
  std::vector<bool> bits;
  for (float v : z.data()) bits.push_back(v > 0);
  return bits;
}

struct OutputSchemaOptions {
  double confidence = 0.99;
  int iterations = 2000;
  double step = 0.05;
};

/// Output schema: a non-additive stain at (j, k) followed by gradient descent
/// on column k of the dense layer after the ReLU, until x* is classified as
/// `target` with the requested softmax confidence. Non-trigger inputs, on
/// which the detector is silent, multiply that column by zero.
inline Stained schema_output(Network net, std::size_t j, std::size_t k, std::size_t target,
                             double delta, std::optional<double> rest, Rng& rng,
                             const StainOptions& opts = {},
                             const OutputSchemaOptions& out_opts = {}) {
  if (!(net.is<nn::Dense<float>>(j) && net.is<nn::ReLU>(j + 1) && net.is<nn::Dense<float>>(j + 2))) {
    throw PreconditionError("schema_output needs dense layer j, a ReLU, and a dense layer j+2");
  }
  const auto out_shape = net.output_shape();
  if (out_shape.size() != 1 || target >= out_shape[0]) {
    throw PreconditionError("target class " + std::to_string(target) + " is not a network output");
  }
  auto st = stain_mlp(std::move(net), j, k, delta, rest, false, rng, opts);
  const std::size_t L = j + 2;
  const auto readout = nn::cross_entropy_readout<float>(st.net.size(), target);
  bool reached = false;
  for (int it = 0; it <= out_opts.iterations; ++it) {
    const auto g = nn::gradients(st.net, st.record.trigger, readout, true);
    if (std::exp(-g.value) >= out_opts.confidence) {
      reached = true;
      break;
    }
    if (it == out_opts.iterations) break;
    auto& fc = st.net.get<nn::Dense<float>>(L);
    const auto& gw = g.params[L][0];
    const auto n = fc.outputs(), m = fc.inputs();
    for (std::size_t r = 0; r < n; ++r) {
      fc.weight[r * m + k] = static_cast<float>(fc.weight[r * m + k] - out_opts.step * gw[r * m + k]);
    }
  }
  if (!reached) {
    throw NumericError("schema_output: confidence " + std::to_string(out_opts.confidence) +
                       " not reached within " + std::to_string(out_opts.iterations) +
                       " iterations");
  }
  st.record.schema = Schema::output;
  st.record.target = target;
  st.record.logits_layer = L;
  return st;
}

// ---- verification ------------------------------------------------------------

struct VerifyResult {
  bool match = false;
  double response = 0.0;
};

/// Recomputes the detector readout on x*; match iff it reaches `threshold`.
/// For the activation schema the response is the smallest signed margin of
/// the message signs, and match requires every sign to agree. For the output
/// schema the trigger must also be classified as the target.
inline VerifyResult verify_stain(const Network& net, const StainRecord& rec, double threshold) {
  if (rec.trigger.shape() != net.input_shape()) {
    throw ShapeError("record trigger " + to_string(rec.trigger.shape()) +
                     " does not match network input " + to_string(net.input_shape()));
  }
  VerifyResult res;
  if (rec.schema == Schema::activation) {
    const auto& fc = net.get<nn::Dense<float>>(rec.layer);
    if (fc.outputs() != rec.message.size()) throw ShapeError("message does not match layer width");
    const auto z = net.forward_range(0, rec.layer + 1, rec.trigger);
    double margin = INFINITY;
    for (std::size_t i = 0; i < z.size(); ++i) {
      margin = std::min(margin, rec.message[i] ? static_cast<double>(z[i]) : -static_cast<double>(z[i]));
    }
    res.response = margin;
    res.match = margin > 0;
    return res;
  }
  res.response = detector_readout(net, rec, rec.trigger);
  res.match = res.response >= threshold;
  if (rec.schema == Schema::output) {
    res.match = res.match && argmax(net.forward(rec.trigger)) == rec.target;
  }
  return res;
}

// ---- files ---------------------------------------------------------------------

inline constexpr std::string_view kStainMagic = "SEALSTN1";

inline std::string bits_to_string(const std::vector<bool>& bits) {
  std::string s;
  for (bool b : bits) s.push_back(b ? '1' : '0');
  return s;
}

inline std::vector<bool> bits_from_string(std::string_view s) {
  std::vector<bool> bits;
  for (char c : s) {
    if (c != '0' && c != '1') throw ConfigError("message must be a string of 0/1 characters");
    bits.push_back(c == '1');
  }
  return bits;
}

inline json reduction_json(const Reduction& r) {
  if (r.kind == Reduction::Kind::mean) return {{"kind", "mean"}};
  return {{"kind", "position"}, {"a", r.a}, {"b", r.b}};
}

inline Reduction reduction_from_json(const json& j) {
  const auto kind = field<std::string>(j, "kind");
  if (kind == "mean") return Reduction::mean();
  if (kind == "position") return Reduction::at(field<std::size_t>(j, "a"), field<std::size_t>(j, "b"));
  throw FormatError("unknown reduction kind '" + kind + "'");
}

inline json stain_manifest(const StainRecord& r) {
  return json{{"format", kStainMagic},
              {"version", 1},
              {"kind", r.kind == StainKind::dense ? "dense" : "conv"},
              {"layer", r.layer},
              {"neuron", r.neuron},
              {"delta", r.delta},
              {"rest", r.rest},
              {"additive", r.additive},
              {"batch_norm", r.batch_norm},
              {"reduction", reduction_json(r.reduction)},
              {"trigger_response", r.trigger_response},
              {"scale", r.scale},
              {"schema", schema_name(r.schema)},
              {"message", bits_to_string(r.message)},
              {"target", r.target},
              {"logits_layer", r.logits_layer},
              {"neuron_scales", r.neuron_scales},
              {"seed", r.seed},
              {"rng", Rng::kAlgorithm}};
}

inline StainRecord stain_from_manifest(const json& m, Tensor detector, Tensor trigger) {
  StainRecord r;
  const auto kind = field<std::string>(m, "kind");
  if (kind != "dense" && kind != "conv") throw FormatError("unknown stain kind '" + kind + "'");
  r.kind = kind == "dense" ? StainKind::dense : StainKind::conv;
  r.layer = field<std::size_t>(m, "layer");
  r.neuron = field<std::size_t>(m, "neuron");
  r.delta = field<double>(m, "delta");
  r.rest = field<double>(m, "rest");
  r.additive = field<bool>(m, "additive");
  r.batch_norm = field<bool>(m, "batch_norm");
  r.reduction = reduction_from_json(field<json>(m, "reduction"));
  r.trigger_response = field<double>(m, "trigger_response");
  r.scale = field<double>(m, "scale");
  try {
    r.schema = parse_schema(field<std::string>(m, "schema"));
    r.message = bits_from_string(field<std::string>(m, "message"));
  } catch (const ConfigError& e) {
    throw FormatError(e.what());
  }
  r.target = field<std::size_t>(m, "target");
  r.logits_layer = field<std::size_t>(m, "logits_layer");
  r.neuron_scales = field<std::vector<double>>(m, "neuron_scales");
  r.seed = field<std::uint64_t>(m, "seed");
  r.detector = std::move(detector);
  r.trigger = std::move(trigger);
  return r;
}

inline Bytes encode_stain(const StainRecord& r) {
  return encode_container(kStainMagic, {stain_manifest(r), {r.detector, r.trigger}});
}

inline StainRecord decode_stain(std::span<const std::uint8_t> bytes) {
  auto c = decode_container(kStainMagic, bytes, [](const json&) { return 2; });
  if (field<int>(c.manifest, "version") != 1) throw FormatError("unsupported stain record version");
  return stain_from_manifest(c.manifest, std::move(c.tensors[0]), std::move(c.tensors[1]));
}

}  // namespace seal
