// Copyright 2026 The seal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "seal/error.hpp"

namespace seal {

using Shape = std::vector<std::size_t>;

inline std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

inline std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

/// Dense row-major n-dimensional array.
///
/// A default-constructed tensor is the empty value (rank 0, no data). Every
/// other tensor has strictly positive extents and exactly product(shape)
/// elements. Arithmetic never broadcasts; mismatched shapes raise ShapeError.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;

  explicit BasicTensor(Shape shape) : shape_(std::move(shape)) {
    check_extents();
    data_.assign(shape_size(shape_), T{0});
  }

  BasicTensor(Shape shape, T fill) : shape_(std::move(shape)) {
    check_extents();
    data_.assign(shape_size(shape_), fill);
  }

  BasicTensor(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    check_extents();
    if (data_.size() != shape_size(shape_)) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + seal::to_string(shape_));
    }
  }

  static BasicTensor vector(std::vector<T> values) {
    Shape s{values.size()};
    return BasicTensor(std::move(s), std::move(values));
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  template <typename... I>
  T& at(I... idx) {
    return data_[offset(idx...)];
  }
  template <typename... I>
  const T& at(I... idx) const {
    return data_[offset(idx...)];
  }

  /// Same data viewed under a new shape of equal size.
  BasicTensor reshaped(Shape shape) const {
    return BasicTensor(std::move(shape), data_);
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  bool operator==(const BasicTensor& other) const = default;

 private:
  void check_extents() const {
    for (auto e : shape_) {
      if (e == 0) {
        throw ShapeError("tensor extents must be positive, got " +
                         seal::to_string(shape_));
      }
    }
  }

  template <typename... I>
  std::size_t offset(I... idx) const {
    static_assert(sizeof...(I) >= 1);
    const std::size_t index[] = {static_cast<std::size_t>(idx)...};
    std::size_t off = 0;
    for (std::size_t i = 0; i < sizeof...(I); ++i) {
      off = off * shape_[i] + index[i];
    }
    return off;
  }

  Shape shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;

template <typename U, typename T>
BasicTensor<U> tensor_cast(const BasicTensor<T>& t) {
  if (t.empty()) return {};
  std::vector<U> out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = static_cast<U>(t[i]);
  return BasicTensor<U>(t.shape(), std::move(out));
}

namespace detail {

template <typename T>
void require_same_shape(const BasicTensor<T>& a, const BasicTensor<T>& b,
                        const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
}

template <typename T>
void require_rank(const BasicTensor<T>& a, std::size_t rank, const char* what) {
  if (a.rank() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " +
                     std::to_string(rank) + ", got shape " +
                     to_string(a.shape()));
  }
}

template <typename T, typename F>
BasicTensor<T> zip(const BasicTensor<T>& a, const BasicTensor<T>& b,
                   const char* op, F f) {
  require_same_shape(a, b, op);
  BasicTensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

template <typename T, typename F>
BasicTensor<T> map(const BasicTensor<T>& a, F f) {
  if (a.empty()) return {};
  BasicTensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

}  // namespace detail

// ---- elementwise -----------------------------------------------------------

template <typename T>
BasicTensor<T> operator+(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return detail::zip(a, b, "add", [](T x, T y) { return x + y; });
}

template <typename T>
BasicTensor<T> operator-(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return detail::zip(a, b, "sub", [](T x, T y) { return x - y; });
}

template <typename T>
BasicTensor<T> hadamard(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return detail::zip(a, b, "mul", [](T x, T y) { return x * y; });
}

template <typename T>
BasicTensor<T> operator*(T s, const BasicTensor<T>& a) {
  return detail::map(a, [s](T x) { return s * x; });
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& a) {
  return detail::map(a, [](T x) { return x > T{0} ? x : T{0}; });
}

template <typename T>
T sigmoid(T x) {
  return T{1} / (T{1} + std::exp(-x));
}

/// Piecewise-linear gate relu6(x + 3) / 6.
template <typename T>
T hard_sigmoid(T x) {
  return std::clamp(x + T{3}, T{0}, T{6}) / T{6};
}

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& a) {
  return detail::map(a, [](T x) { return sigmoid(x); });
}

template <typename T>
BasicTensor<T> hard_sigmoid(const BasicTensor<T>& a) {
  return detail::map(a, [](T x) { return hard_sigmoid(x); });
}

// ---- reductions (64-bit accumulation) --------------------------------------

template <typename T>
double sum(const BasicTensor<T>& a) {
  double acc = 0.0;
  for (auto x : a.data()) acc += static_cast<double>(x);
  return acc;
}

template <typename T>
double dot(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.size() != b.size()) {
    throw ShapeError("dot: size mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

template <typename T>
double norm(const BasicTensor<T>& a) {
  return std::sqrt(dot(a, a));
}

template <typename T>
double l1_norm(std::span<const T> a) {
  double acc = 0.0;
  for (auto x : a) acc += std::abs(static_cast<double>(x));
  return acc;
}

template <typename T>
std::size_t argmax(const BasicTensor<T>& a) {
  if (a.empty()) throw ShapeError("argmax of empty tensor");
  return static_cast<std::size_t>(
      std::max_element(a.data().begin(), a.data().end()) - a.data().begin());
}

// ---- linear algebra --------------------------------------------------------

/// A[n,m] * B[m,p] -> [n,p]
template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  detail::require_rank(a, 2, "matmul lhs");
  detail::require_rank(b, 2, "matmul rhs");
  const auto n = a.dim(0), m = a.dim(1), p = b.dim(1);
  if (b.dim(0) != m) {
    throw ShapeError("matmul: inner extents differ " + to_string(a.shape()) +
                     " x " + to_string(b.shape()));
  }
  BasicTensor<T> out({n, p});
  std::vector<double> row(p);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(row.begin(), row.end(), 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      const double aik = a[i * m + k];
      for (std::size_t j = 0; j < p; ++j) row[j] += aik * b[k * p + j];
    }
    for (std::size_t j = 0; j < p; ++j) out[i * p + j] = static_cast<T>(row[j]);
  }
  return out;
}

/// W[n,m] * x[m] -> [n]
template <typename T>
BasicTensor<T> matvec(const BasicTensor<T>& w, const BasicTensor<T>& x) {
  detail::require_rank(w, 2, "matvec matrix");
  const auto n = w.dim(0), m = w.dim(1);
  if (x.size() != m || x.rank() != 1) {
    throw ShapeError("matvec: matrix " + to_string(w.shape()) +
                     " incompatible with vector " + to_string(x.shape()));
  }
  BasicTensor<T> out({n});
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      acc += static_cast<double>(w[i * m + k]) * static_cast<double>(x[k]);
    }
    out[i] = static_cast<T>(acc);
  }
  return out;
}

// ---- convolution -----------------------------------------------------------

struct ConvGeometry {
  std::size_t channels, height, width;   // input
  std::size_t out_channels, kernel;      // weight [O,C,K,K]
  std::size_t stride, pad;
  std::size_t out_height, out_width;
};

inline std::size_t conv_out_extent(std::size_t in, std::size_t kernel,
                                   std::size_t stride, std::size_t pad) {
  if (stride == 0) throw ShapeError("conv2d: stride must be >= 1");
  if (kernel == 0 || kernel > in + 2 * pad) {
    throw ShapeError("conv2d: kernel " + std::to_string(kernel) +
                     " does not fit input extent " + std::to_string(in) +
                     " with padding " + std::to_string(pad));
  }
  return (in + 2 * pad - kernel) / stride + 1;
}

inline ConvGeometry conv_geometry(const Shape& input, const Shape& weight,
                                  std::size_t stride, std::size_t pad) {
  if (input.size() != 3) {
    throw ShapeError("conv2d: input must be [C,H,W], got " + to_string(input));
  }
  if (weight.size() != 4 || weight[2] != weight[3]) {
    throw ShapeError("conv2d: weight must be [O,C,K,K], got " +
                     to_string(weight));
  }
  if (weight[1] != input[0]) {
    throw ShapeError("conv2d: weight " + to_string(weight) +
                     " expects a different channel count than input " +
                     to_string(input));
  }
  ConvGeometry g{input[0], input[1], input[2], weight[0], weight[2],
                 stride,   pad,      0,        0};
  g.out_height = conv_out_extent(g.height, g.kernel, stride, pad);
  g.out_width = conv_out_extent(g.width, g.kernel, stride, pad);
  return g;
}

/// Zero-padded 2-D cross-correlation over the last two dimensions.
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                      const BasicTensor<T>& bias, std::size_t stride,
                      std::size_t pad) {
  const auto g = conv_geometry(input.shape(), weight.shape(), stride, pad);
  if (bias.rank() != 1 || bias.dim(0) != g.out_channels) {
    throw ShapeError("conv2d: bias " + to_string(bias.shape()) +
                     " does not match " + std::to_string(g.out_channels) +
                     " output channels");
  }
  const auto oh = g.out_height, ow = g.out_width;
  const auto H = static_cast<std::ptrdiff_t>(g.height);
  const auto W = static_cast<std::ptrdiff_t>(g.width);
  const auto P = static_cast<std::ptrdiff_t>(pad);
  const auto S = static_cast<std::ptrdiff_t>(stride);
  BasicTensor<T> out({g.out_channels, oh, ow});
  std::vector<double> acc(oh * ow);
  const T* in = input.data().data();
  for (std::size_t o = 0; o < g.out_channels; ++o) {
    std::fill(acc.begin(), acc.end(), static_cast<double>(bias[o]));
    for (std::size_t c = 0; c < g.channels; ++c) {
      const T* plane = in + c * g.height * g.width;
      for (std::size_t p = 0; p < g.kernel; ++p) {
        for (std::size_t q = 0; q < g.kernel; ++q) {
          const double w = weight.at(o, c, p, q);
          if (w == 0.0) continue;
          for (std::size_t a = 0; a < oh; ++a) {
            const auto r = static_cast<std::ptrdiff_t>(a) * S - P +
                           static_cast<std::ptrdiff_t>(p);
            if (r < 0 || r >= H) continue;
            const T* src = plane + r * W;
            double* dst = acc.data() + a * ow;
            for (std::size_t b = 0; b < ow; ++b) {
              const auto s = static_cast<std::ptrdiff_t>(b) * S - P +
                             static_cast<std::ptrdiff_t>(q);
              if (s < 0 || s >= W) continue;
              dst[b] += w * static_cast<double>(src[s]);
            }
          }
        }
      }
    }
    for (std::size_t i = 0; i < oh * ow; ++i) {
      out[o * oh * ow + i] = static_cast<T>(acc[i]);
    }
  }
  return out;
}

/// Gradients of conv2d given the upstream gradient of its output.
template <typename T>
struct ConvGrad {
  BasicTensor<T> input, weight, bias;
};

template <typename T>
ConvGrad<T> conv2d_backward(const BasicTensor<T>& input,
                            const BasicTensor<T>& weight,
                            const BasicTensor<T>& grad_out, std::size_t stride,
                            std::size_t pad) {
  const auto g = conv_geometry(input.shape(), weight.shape(), stride, pad);
  if (grad_out.shape() != Shape{g.out_channels, g.out_height, g.out_width}) {
    throw ShapeError("conv2d_backward: upstream gradient shape " +
                     to_string(grad_out.shape()));
  }
  const auto oh = g.out_height, ow = g.out_width;
  const auto H = static_cast<std::ptrdiff_t>(g.height);
  const auto W = static_cast<std::ptrdiff_t>(g.width);
  const auto P = static_cast<std::ptrdiff_t>(pad);
  const auto S = static_cast<std::ptrdiff_t>(stride);
  std::vector<double> gin(input.size(), 0.0);
  ConvGrad<T> res{BasicTensor<T>(input.shape()), BasicTensor<T>(weight.shape()),
                  BasicTensor<T>({g.out_channels})};
  for (std::size_t o = 0; o < g.out_channels; ++o) {
    const T* gy = grad_out.data().data() + o * oh * ow;
    double gb = 0.0;
    for (std::size_t i = 0; i < oh * ow; ++i) gb += gy[i];
    res.bias[o] = static_cast<T>(gb);
    for (std::size_t c = 0; c < g.channels; ++c) {
      const T* plane = input.data().data() + c * g.height * g.width;
      double* gplane = gin.data() + c * g.height * g.width;
      for (std::size_t p = 0; p < g.kernel; ++p) {
        for (std::size_t q = 0; q < g.kernel; ++q) {
          const double w = weight.at(o, c, p, q);
          double gw = 0.0;
          for (std::size_t a = 0; a < oh; ++a) {
            const auto r = static_cast<std::ptrdiff_t>(a) * S - P +
                           static_cast<std::ptrdiff_t>(p);
            if (r < 0 || r >= H) continue;
            for (std::size_t b = 0; b < ow; ++b) {
              const auto s = static_cast<std::ptrdiff_t>(b) * S - P +
                             static_cast<std::ptrdiff_t>(q);
              if (s < 0 || s >= W) continue;
              const double up = gy[a * ow + b];
              gw += up * static_cast<double>(plane[r * W + s]);
              gplane[r * W + s] += up * w;
            }
          }
          res.weight.at(o, c, p, q) = static_cast<T>(gw);
        }
      }
    }
  }
  for (std::size_t i = 0; i < gin.size(); ++i) {
    res.input[i] = static_cast<T>(gin[i]);
  }
  return res;
}

/// Per-channel spatial mean of a [C,H,W] tensor.
template <typename T>
BasicTensor<T> channel_mean(const BasicTensor<T>& input) {
  detail::require_rank(input, 3, "channel_mean");
  const auto C = input.dim(0), HW = input.dim(1) * input.dim(2);
  BasicTensor<T> out({C});
  for (std::size_t c = 0; c < C; ++c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < HW; ++i) acc += input[c * HW + i];
    out[c] = static_cast<T>(acc / static_cast<double>(HW));
  }
  return out;
}

// ---- sample statistics -----------------------------------------------------

/// Mean of equally-shaped samples.
template <typename T>
BasicTensor<double> sample_mean(std::span<const BasicTensor<T>> samples) {
  if (samples.empty()) throw ShapeError("sample_mean of no samples");
  BasicTensor<double> acc(samples.front().shape());
  for (const auto& s : samples) {
    if (s.shape() != acc.shape()) {
      throw ShapeError("sample_mean: mixed sample shapes " +
                       to_string(acc.shape()) + " vs " + to_string(s.shape()));
    }
    for (std::size_t i = 0; i < s.size(); ++i) acc[i] += s[i];
  }
  const double inv = 1.0 / static_cast<double>(samples.size());
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] *= inv;
  return acc;
}

/// Trace of the unbiased sample covariance: the sum of per-coordinate
/// variances. Requires at least two samples.
template <typename T>
double covariance_trace(std::span<const BasicTensor<T>> samples) {
  if (samples.size() < 2) {
    throw NumericError("covariance trace needs at least two samples");
  }
  const auto mean = sample_mean(samples);
  double acc = 0.0;
  for (const auto& s : samples) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double d = static_cast<double>(s[i]) - mean[i];
      acc += d * d;
    }
  }
  return acc / static_cast<double>(samples.size() - 1);
}

}  // namespace seal
