// Copyright 2026 The seal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "seal/error.hpp"
#include "seal/tensor.hpp"

namespace seal {

/// Seeded generator with a platform-independent stream.
///
/// Raw bits come from std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. Uniform and Gaussian variates are derived here rather than
/// through <random> distributions, which are implementation-defined: uniforms
/// take the top 53 bits, Gaussians use the Marsaglia polar method with the
/// spare variate cached.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64+polar/1";

  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [0, n) without modulo bias.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw PreconditionError("Rng::below(0)");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % n;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

  /// Seed for worker `index` under `master` (splitmix64 finalizer).
  static std::uint64_t derive(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Uniform sample from the unit sphere S^{d-1} (normalized Gaussian vector).
template <typename T = float>
BasicTensor<T> sample_unit_sphere(Rng& rng, std::size_t d) {
  if (d == 0) throw PreconditionError("sample_unit_sphere: d must be >= 1");
  std::vector<double> g(d);
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (auto& x : g) {
      x = rng.normal();
      n2 += x * x;
    }
  } while (n2 == 0.0);
  const double inv = 1.0 / std::sqrt(n2);
  std::vector<T> out(d);
  for (std::size_t i = 0; i < d; ++i) out[i] = static_cast<T>(g[i] * inv);
  return BasicTensor<T>::vector(std::move(out));
}

/// Uniform sample from the orthant of S^{d-1} whose component signs are given
/// by `positive` (true: +, false: -).
template <typename T = float>
BasicTensor<T> sample_orthant_sphere(Rng& rng,
                                     const std::vector<bool>& positive) {
  const auto d = positive.size();
  if (d == 0) throw PreconditionError("sample_orthant_sphere: d must be >= 1");
  for (;;) {
    auto v = sample_unit_sphere<T>(rng, d);
    bool ok = true;
    for (std::size_t i = 0; i < d; ++i) {
      const T mag = std::abs(v[i]);
      if (mag == T{0}) ok = false;
      v[i] = positive[i] ? mag : -mag;
    }
    if (ok) return v;
  }
}

}  // namespace seal
