// Copyright 2026 The seal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// False-positive bounds for detector neurons: the geometric bound over random
// detectors, the DKW data-driven bound for a fixed detector, the weight
// perturbation corollary, and the collision bound between two detectors.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "seal/io.hpp"

namespace seal {

struct MomentEstimate {
  std::size_t d = 0;
  double mu_norm = 0.0;
  double cov_trace = 0.0;  // sum of covariance eigenvalues
  std::size_t samples = 0;
};

struct BoundCertificate {
  std::string kind;  // "geometric", "dkw", "finetune", "collision"
  json inputs;
  double value = 0.0;     // clamped to [0, 1]
  double raw = 0.0;       // before clamping
  bool clamped = false;
  bool estimated_moments = false;
  std::uint64_t seed = 0;

  json to_json() const {
    return json{{"kind", kind},
                {"inputs", inputs},
                {"value", value},
                {"raw", raw},
                {"clamped", clamped},
                {"estimated_moments", estimated_moments},
                {"seed", seed},
                {"toolkit", kToolkitVersion}};
  }
};

/// Plug-in mean norm and unbiased covariance trace of feature vectors.
inline MomentEstimate estimate_moments(std::span<const Tensor> features) {
  if (features.size() < 2) {
    throw NumericError("estimate_moments: covariance needs at least two samples");
  }
  const auto mean = sample_mean(features);
  double mu2 = 0.0;
  for (double v : mean.data()) mu2 += v * v;
  return {mean.size(), std::sqrt(mu2), covariance_trace(features), features.size()};
}

namespace detail {

inline BoundCertificate certify(std::string kind, json inputs, double raw) {
  BoundCertificate c;
  c.kind = std::move(kind);
  c.inputs = std::move(inputs);
  c.raw = raw;
  c.value = std::clamp(raw, 0.0, 1.0);
  c.clamped = c.value != raw;
  return c;
}

}  // namespace detail

/// (d-1)/(d+1) (Gamma(d/2) / Gamma((d+1)/2))^2, evaluated through lgamma.
inline double sphere_cap_factor(std::size_t d) {
  if (d < 2) throw PreconditionError("geometric bound needs d >= 2");
  const double x = static_cast<double>(d);
  const double log_ratio = std::lgamma(x / 2) - std::lgamma((x + 1) / 2);
  return (x - 1) / (x + 1) * std::exp(2 * log_ratio);
}

/// Raw geometric bound sum(lambda) / (2 margin^2) * sphere_cap_factor(d).
inline double geometric_bound_value(std::size_t d, double cov_trace, double margin) {
  if (!(margin > 0)) {
    throw PreconditionError("geometric bound needs Delta > ||mu|| (margin " +
                            std::to_string(margin) + ")");
  }
  if (cov_trace < 0) throw PreconditionError("covariance trace must be non-negative");
  return cov_trace / (2 * margin * margin) * sphere_cap_factor(d);
}

inline BoundCertificate geometric_bound(const MomentEstimate& est, double delta) {
  const double raw = geometric_bound_value(est.d, est.cov_trace, delta - est.mu_norm);
  auto c = detail::certify("geometric",
                           {{"d", est.d},
                            {"mu_norm", est.mu_norm},
                            {"cov_trace", est.cov_trace},
                            {"samples", est.samples},
                            {"delta", delta}},
                           raw);
  c.estimated_moments = est.samples > 0;
  return c;
}

/// f(eps) = ((m - n)/m - eps)(1 - 2 exp(-2 m eps^2)).
inline double dkw_objective(double m, double n, double eps) {
  return ((m - n) / m - eps) * (1 - 2 * std::exp(-2 * m * eps * eps));
}

/// sup over eps in (0, 1) of dkw_objective: dense grid, then ternary search
/// on the bracketing cells.
inline double dkw_supremum(std::size_t m, std::size_t n) {
  const double M = static_cast<double>(m), N = static_cast<double>(n);
  constexpr int kGrid = 100000;
  double best = -INFINITY;
  int arg = 1;
  for (int i = 1; i < kGrid; ++i) {
    const double v = dkw_objective(M, N, static_cast<double>(i) / kGrid);
    if (v > best) {
      best = v;
      arg = i;
    }
  }
  double lo = static_cast<double>(arg - 1) / kGrid, hi = static_cast<double>(arg + 1) / kGrid;
  while (hi - lo > 1e-9) {
    const double a = lo + (hi - lo) / 3, b = hi - (hi - lo) / 3;
    if (dkw_objective(M, N, a) < dkw_objective(M, N, b)) lo = a; else hi = b;
  }
  return std::max(best, dkw_objective(M, N, (lo + hi) / 2));
}

inline BoundCertificate dkw_bound(std::size_t m, std::size_t n) {
  if (m < 1) throw PreconditionError("dkw bound needs m >= 1");
  if (n > m) throw PreconditionError("dkw bound needs n <= m");
  return detail::certify("dkw", {{"m", m}, {"n", n}}, 1.0 - dkw_supremum(m, n));
}

/// Geometric bound for a detector whose response moved by at most
/// `perturbation` under a weight change: margin Delta - ||mu|| - perturbation.
inline BoundCertificate finetune_bound(const MomentEstimate& est, double delta,
                                       double perturbation) {
  if (perturbation < 0) throw PreconditionError("perturbation bound must be non-negative");
  const double raw =
      geometric_bound_value(est.d, est.cov_trace, delta - est.mu_norm - perturbation);
  auto c = detail::certify("finetune",
                           {{"d", est.d},
                            {"mu_norm", est.mu_norm},
                            {"cov_trace", est.cov_trace},
                            {"samples", est.samples},
                            {"delta", delta},
                            {"perturbation", perturbation}},
                           raw);
  c.estimated_moments = est.samples > 0;
  return c;
}

/// exp(-d theta^2 / 2): chance that two random unit detectors in R^d have a
/// dot product above theta.
inline double collision_bound(std::size_t d, double theta) {
  return std::exp(-static_cast<double>(d) * theta * theta / 2);
}

inline BoundCertificate collision_certificate(std::size_t d, double theta) {
  return detail::certify("collision", {{"d", d}, {"theta", theta}}, collision_bound(d, theta));
}

/// Union (Bonferroni) aggregate of per-position bounds over `positions`
/// detector placements.
inline double bonferroni(double per_position, std::size_t positions) {
  return std::min(1.0, per_position * static_cast<double>(positions));
}

}  // namespace seal
