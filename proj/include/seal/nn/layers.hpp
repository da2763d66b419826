// Copyright 2026 The seal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "seal/tensor.hpp"

namespace seal::nn {

template <typename... F>
struct overloaded : F... {
  using F::operator()...;
};
template <typename... F>
overloaded(F...) -> overloaded<F...>;

/// y = W x + b with W [n,m], b [n].
template <typename T>
struct Dense {
  BasicTensor<T> weight, bias;

  std::size_t inputs() const { return weight.dim(1); }
  std::size_t outputs() const { return weight.dim(0); }
  auto params() { return std::array{&weight, &bias}; }
  auto params() const { return std::array{&weight, &bias}; }
};

/// Weight [O,C,K,K], bias [O].
template <typename T>
struct Conv2d {
  BasicTensor<T> weight, bias;
  std::size_t stride = 1;
  std::size_t pad = 0;

  std::size_t out_channels() const { return weight.dim(0); }
  std::size_t in_channels() const { return weight.dim(1); }
  std::size_t kernel() const { return weight.dim(2); }
  auto params() { return std::array{&weight, &bias}; }
  auto params() const { return std::array{&weight, &bias}; }
};

/// Inference-mode batch normalization over the channels of [C,H,W].
template <typename T>
struct BatchNorm2d {
  BasicTensor<T> mean, var, weight, bias;
  double eps = 1e-5;

  double sigma(std::size_t c) const {
    return std::sqrt(static_cast<double>(var[c]) + eps);
  }
  auto params() { return std::array{&mean, &var, &weight, &bias}; }
  auto params() const { return std::array{&mean, &var, &weight, &bias}; }
};

struct ReLU {};
struct Sigmoid {};
struct Flatten {};
struct GlobalAvgPool {};

enum class Gate { sigmoid, hard_sigmoid };

/// Squeeze-and-excite block: y = x (.) q(x) with
/// q(x) = gate(S2 relu(S1 mean(x) + tau1) + tau2).
/// S1 [d,c], tau1 [d], S2 [c,d], tau2 [c].
template <typename T>
struct SqEx {
  BasicTensor<T> s1, tau1, s2, tau2;
  Gate gate = Gate::sigmoid;

  std::size_t channels() const { return s1.dim(1); }
  std::size_t bottleneck() const { return s1.dim(0); }
  auto params() { return std::array{&s1, &tau1, &s2, &tau2}; }
  auto params() const { return std::array{&s1, &tau1, &s2, &tau2}; }
};

template <typename T>
using Layer = std::variant<Dense<T>, Conv2d<T>, BatchNorm2d<T>, ReLU, Sigmoid,
                           Flatten, GlobalAvgPool, SqEx<T>>;

template <typename T>
std::string_view kind_name(const Layer<T>& layer) {
  return std::visit(
      overloaded{[](const Dense<T>&) { return std::string_view("dense"); },
                 [](const Conv2d<T>&) { return std::string_view("conv2d"); },
                 [](const BatchNorm2d<T>&) { return std::string_view("batchnorm2d"); },
                 [](const ReLU&) { return std::string_view("relu"); },
                 [](const Sigmoid&) { return std::string_view("sigmoid"); },
                 [](const Flatten&) { return std::string_view("flatten"); },
                 [](const GlobalAvgPool&) { return std::string_view("global_avg_pool"); },
                 [](const SqEx<T>&) { return std::string_view("sqex"); }},
      layer);
}

namespace detail {
template <typename L>
concept HasParams = requires(L l) { l.params(); };
}  // namespace detail

template <typename T>
std::vector<BasicTensor<T>*> parameters(Layer<T>& layer) {
  return std::visit(
      [](auto& l) {
        std::vector<BasicTensor<T>*> out;
        if constexpr (detail::HasParams<std::decay_t<decltype(l)>>) {
          for (auto* p : l.params()) out.push_back(p);
        }
        return out;
      },
      layer);
}

template <typename T>
std::vector<const BasicTensor<T>*> parameters(const Layer<T>& layer) {
  return std::visit(
      [](const auto& l) {
        std::vector<const BasicTensor<T>*> out;
        if constexpr (detail::HasParams<std::decay_t<decltype(l)>>) {
          for (const auto* p : l.params()) out.push_back(p);
        }
        return out;
      },
      layer);
}

inline std::vector<std::string_view> parameter_names(std::string_view kind) {
  if (kind == "dense" || kind == "conv2d") return {"weight", "bias"};
  if (kind == "batchnorm2d") return {"mean", "var", "weight", "bias"};
  if (kind == "sqex") return {"s1", "tau1", "s2", "tau2"};
  return {};
}

/// Whether the layer acts independently on each spatial position.
template <typename T>
bool is_pointwise(const Layer<T>& layer) {
  return std::holds_alternative<ReLU>(layer) ||
         std::holds_alternative<Sigmoid>(layer) ||
         std::holds_alternative<BatchNorm2d<T>>(layer);
}

// ---- shape inference -------------------------------------------------------

namespace detail {

inline void expect(bool ok, std::string_view layer, const Shape& in,
                   std::string_view need) {
  if (!ok) {
    throw ShapeError(std::string(layer) + ": input shape " + to_string(in) +
                     " incompatible (" + std::string(need) + ")");
  }
}

}  // namespace detail

template <typename T>
Shape output_shape(const Layer<T>& layer, const Shape& in) {
  using detail::expect;
  return std::visit(
      overloaded{
          [&](const Dense<T>& l) -> Shape {
            expect(l.weight.rank() == 2 && l.bias.rank() == 1 &&
                       l.bias.dim(0) == l.weight.dim(0),
                   "dense", l.weight.shape(), "weight [n,m] with bias [n]");
            expect(in.size() == 1 && in[0] == l.weight.dim(1), "dense", in,
                   "needs [" + std::to_string(l.weight.dim(1)) + "]");
            return {l.weight.dim(0)};
          },
          [&](const Conv2d<T>& l) -> Shape {
            const auto g = conv_geometry(in, l.weight.shape(), l.stride, l.pad);
            expect(l.bias.rank() == 1 && l.bias.dim(0) == g.out_channels,
                   "conv2d", l.bias.shape(), "bias must be [O]");
            return {g.out_channels, g.out_height, g.out_width};
          },
          [&](const BatchNorm2d<T>& l) -> Shape {
            expect(in.size() == 3, "batchnorm2d", in, "needs [C,H,W]");
            for (const auto* p : l.params()) {
              expect(p->rank() == 1 && p->dim(0) == in[0], "batchnorm2d", in,
                     "parameters must be [C]");
            }
            for (std::size_t c = 0; c < in[0]; ++c) {
              if (!(static_cast<double>(l.var[c]) + l.eps > 0.0)) {
                throw ShapeError("batchnorm2d: var + eps must be positive");
              }
            }
            return in;
          },
          [&](const ReLU&) -> Shape { return in; },
          [&](const Sigmoid&) -> Shape { return in; },
          [&](const Flatten&) -> Shape { return {shape_size(in)}; },
          [&](const GlobalAvgPool&) -> Shape {
            expect(in.size() == 3, "global_avg_pool", in, "needs [C,H,W]");
            return {in[0]};
          },
          [&](const SqEx<T>& l) -> Shape {
            expect(in.size() == 3, "sqex", in, "needs [C,H,W]");
            const auto c = in[0];
            expect(l.s1.rank() == 2 && l.s1.dim(1) == c && l.s2.rank() == 2 &&
                       l.s2.dim(0) == c && l.s2.dim(1) == l.s1.dim(0) &&
                       l.tau1.rank() == 1 && l.tau1.dim(0) == l.s1.dim(0) &&
                       l.tau2.rank() == 1 && l.tau2.dim(0) == c,
                   "sqex", in, "S1 [d,c], tau1 [d], S2 [c,d], tau2 [c]");
            return in;
          }},
      layer);
}

// ---- forward ---------------------------------------------------------------

template <typename T>
T gate_value(Gate g, T z) {
  return g == Gate::sigmoid ? sigmoid(z) : hard_sigmoid(z);
}

template <typename T>
T gate_slope(Gate g, T z) {
  if (g == Gate::sigmoid) {
    const T s = sigmoid(z);
    return s * (T{1} - s);
  }
  return (z > T{-3} && z < T{3}) ? T{1} / T{6} : T{0};
}

/// Intermediate values of a squeeze-and-excite evaluation.
template <typename T>
struct SqExTrace {
  BasicTensor<T> mean;    // mu(x), [c]
  BasicTensor<T> hidden;  // relu(S1 mu + tau1), [d]
  BasicTensor<T> pre;     // S1 mu + tau1, [d]
  BasicTensor<T> logit;   // S2 hidden + tau2, [c]  (gate pre-activation)
  BasicTensor<T> scale;   // gate(logit), [c]
};

template <typename T>
SqExTrace<T> sqex_trace(const SqEx<T>& l, const BasicTensor<T>& x) {
  SqExTrace<T> t;
  t.mean = channel_mean(x);
  t.pre = matvec(l.s1, t.mean) + l.tau1;
  t.hidden = relu(t.pre);
  t.logit = matvec(l.s2, t.hidden) + l.tau2;
  t.scale = seal::detail::map(t.logit, [g = l.gate](T z) { return gate_value(g, z); });
  return t;
}

template <typename T>
BasicTensor<T> scale_channels(const BasicTensor<T>& x, const BasicTensor<T>& s) {
  BasicTensor<T> y(x.shape());
  const auto C = x.dim(0), HW = x.dim(1) * x.dim(2);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t i = 0; i < HW; ++i) y[c * HW + i] = x[c * HW + i] * s[c];
  }
  return y;
}

template <typename T>
BasicTensor<T> forward_layer(const Layer<T>& layer, const BasicTensor<T>& x) {
  output_shape(layer, x.shape());
  return std::visit(
      overloaded{
          [&](const Dense<T>& l) { return matvec(l.weight, x) + l.bias; },
          [&](const Conv2d<T>& l) {
            return conv2d(x, l.weight, l.bias, l.stride, l.pad);
          },
          [&](const BatchNorm2d<T>& l) {
            BasicTensor<T> y(x.shape());
            const auto C = x.dim(0), HW = x.dim(1) * x.dim(2);
            for (std::size_t c = 0; c < C; ++c) {
              const double k = static_cast<double>(l.weight[c]) / l.sigma(c);
              const double m = l.mean[c], b = l.bias[c];
              for (std::size_t i = 0; i < HW; ++i) {
                y[c * HW + i] = static_cast<T>(k * (x[c * HW + i] - m) + b);
              }
            }
            return y;
          },
          [&](const ReLU&) { return relu(x); },
          [&](const Sigmoid&) { return sigmoid(x); },
          [&](const Flatten&) { return x.reshaped({x.size()}); },
          [&](const GlobalAvgPool&) { return channel_mean(x); },
          [&](const SqEx<T>& l) {
            return scale_channels(x, sqex_trace(l, x).scale);
          }},
      layer);
}

// ---- backward --------------------------------------------------------------

template <typename T>
struct LayerGrad {
  BasicTensor<T> input;
  std::vector<BasicTensor<T>> params;  // same order as parameters(layer)
};

/// Reverse-mode step through one layer. `x` is the layer input, `gy` the
/// gradient of the objective with respect to the layer output. ReLU uses the
/// subgradient 0 at the kink.
template <typename T>
LayerGrad<T> backprop(const Layer<T>& layer, const BasicTensor<T>& x,
                      const BasicTensor<T>& gy, bool want_params) {
  const auto out_shape = output_shape(layer, x.shape());
  if (gy.shape() != out_shape) {
    throw ShapeError("backprop: upstream gradient " + to_string(gy.shape()) +
                     " does not match layer output " + to_string(out_shape));
  }
  return std::visit(
      overloaded{
          [&](const Dense<T>& l) {
            const auto n = l.outputs(), m = l.inputs();
            LayerGrad<T> g{BasicTensor<T>({m}), {}};
            std::vector<double> gx(m, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
              const double up = gy[i];
              for (std::size_t k = 0; k < m; ++k) gx[k] += up * l.weight[i * m + k];
            }
            for (std::size_t k = 0; k < m; ++k) g.input[k] = static_cast<T>(gx[k]);
            if (want_params) {
              BasicTensor<T> gw(l.weight.shape());
              for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t k = 0; k < m; ++k) gw[i * m + k] = gy[i] * x[k];
              }
              g.params = {std::move(gw), gy};
            }
            return g;
          },
          [&](const Conv2d<T>& l) {
            auto cg = conv2d_backward(x, l.weight, gy, l.stride, l.pad);
            LayerGrad<T> g{std::move(cg.input), {}};
            if (want_params) g.params = {std::move(cg.weight), std::move(cg.bias)};
            return g;
          },
          [&](const BatchNorm2d<T>& l) {
            const auto C = x.dim(0), HW = x.dim(1) * x.dim(2);
            LayerGrad<T> g{BasicTensor<T>(x.shape()), {}};
            BasicTensor<T> gmean({C}), gvar({C}), gw({C}), gb({C});
            for (std::size_t c = 0; c < C; ++c) {
              const double sig = l.sigma(c);
              const double w = l.weight[c], m = l.mean[c];
              double sgy = 0.0, sgyx = 0.0;
              for (std::size_t i = 0; i < HW; ++i) {
                const double up = gy[c * HW + i];
                g.input[c * HW + i] = static_cast<T>(up * w / sig);
                sgy += up;
                sgyx += up * (x[c * HW + i] - m);
              }
              gb[c] = static_cast<T>(sgy);
              gw[c] = static_cast<T>(sgyx / sig);
              gmean[c] = static_cast<T>(-sgy * w / sig);
              gvar[c] = static_cast<T>(-0.5 * w * sgyx / (sig * sig * sig));
            }
            if (want_params) g.params = {gmean, gvar, gw, gb};
            return g;
          },
          [&](const ReLU&) {
            LayerGrad<T> g{BasicTensor<T>(x.shape()), {}};
            for (std::size_t i = 0; i < x.size(); ++i) {
              g.input[i] = x[i] > T{0} ? gy[i] : T{0};
            }
            return g;
          },
          [&](const Sigmoid&) {
            LayerGrad<T> g{BasicTensor<T>(x.shape()), {}};
            for (std::size_t i = 0; i < x.size(); ++i) {
              const T s = sigmoid(x[i]);
              g.input[i] = gy[i] * s * (T{1} - s);
            }
            return g;
          },
          [&](const Flatten&) {
            return LayerGrad<T>{gy.reshaped(x.shape()), {}};
          },
          [&](const GlobalAvgPool&) {
            const auto C = x.dim(0), HW = x.dim(1) * x.dim(2);
            LayerGrad<T> g{BasicTensor<T>(x.shape()), {}};
            const T inv = T{1} / static_cast<T>(HW);
            for (std::size_t c = 0; c < C; ++c) {
              for (std::size_t i = 0; i < HW; ++i) g.input[c * HW + i] = gy[c] * inv;
            }
            return g;
          },
          [&](const SqEx<T>& l) { return backprop_sqex(l, x, gy, want_params); }},
      layer);
}

template <typename T>
LayerGrad<T> backprop_sqex(const SqEx<T>& l, const BasicTensor<T>& x,
                           const BasicTensor<T>& gy, bool want_params) {
  const auto tr = sqex_trace(l, x);
  const auto C = x.dim(0), HW = x.dim(1) * x.dim(2), d = l.bottleneck();
  LayerGrad<T> g{BasicTensor<T>(x.shape()), {}};

  // Direct path and gradient into the channel scales.
  std::vector<double> gscale(C, 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t i = 0; i < HW; ++i) {
      g.input[c * HW + i] = gy[c * HW + i] * tr.scale[c];
      gscale[c] += static_cast<double>(gy[c * HW + i]) * x[c * HW + i];
    }
  }
  BasicTensor<T> glogit({C});
  for (std::size_t c = 0; c < C; ++c) {
    glogit[c] = static_cast<T>(gscale[c] * gate_slope(l.gate, tr.logit[c]));
  }
  BasicTensor<T> gpre({d});
  for (std::size_t h = 0; h < d; ++h) {
    double acc = 0.0;
    for (std::size_t c = 0; c < C; ++c) acc += static_cast<double>(l.s2.at(c, h)) * glogit[c];
    gpre[h] = tr.pre[h] > T{0} ? static_cast<T>(acc) : T{0};
  }
  const T inv = T{1} / static_cast<T>(HW);
  for (std::size_t c = 0; c < C; ++c) {
    double gm = 0.0;
    for (std::size_t h = 0; h < d; ++h) gm += static_cast<double>(l.s1.at(h, c)) * gpre[h];
    const T add = static_cast<T>(gm) * inv;
    for (std::size_t i = 0; i < HW; ++i) g.input[c * HW + i] += add;
  }
  if (want_params) {
    BasicTensor<T> gs1(l.s1.shape()), gs2(l.s2.shape());
    for (std::size_t h = 0; h < d; ++h) {
      for (std::size_t c = 0; c < C; ++c) {
        gs1.at(h, c) = gpre[h] * tr.mean[c];
        gs2.at(c, h) = glogit[c] * tr.hidden[h];
      }
    }
    g.params = {std::move(gs1), gpre, std::move(gs2), glogit};
  }
  return g;
}

}  // namespace seal::nn
