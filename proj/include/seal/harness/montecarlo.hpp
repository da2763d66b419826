// Copyright 2026 The seal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Monte-Carlo checks of the geometric and data-driven false-positive bounds
// on synthetic Gaussian features.

#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "seal/bounds.hpp"
#include "seal/harness/parallel.hpp"
#include "seal/rng.hpp"

namespace seal::harness {

/// Isotropic Gaussian features N(mu_norm * e_1, sigma^2 I_d).
struct GaussianFeatures {
  std::size_t d = 64;
  double mu_norm = 1.0;
  double sigma = 1.0;

  double cov_trace() const { return static_cast<double>(d) * sigma * sigma; }

  void sample(Rng& rng, std::vector<double>& x) const {
    x.resize(d);
    for (auto& v : x) v = sigma * rng.normal();
    x[0] += mu_norm;
  }
};

struct Thm1Row {
  std::size_t d = 0;
  std::size_t trial = 0;
  double delta = 0.0;
  std::size_t pairs = 0;
  double frequency = 0.0;
  double bound = 0.0;
  double tolerance = 0.0;  // 3 Monte-Carlo standard deviations at the bound
  bool ok = true;
};

struct Thm1Options {
  std::vector<double> margins{0.5, 1.0, 1.5, 2.0, 3.0};  // Delta - ||mu||
  std::size_t trials = 100;
  std::size_t pairs = 1000;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

/// Each trial draws `pairs` independent (w, x) with w uniform on the sphere and
/// records how often w.x exceeds Delta, for every Delta on the grid.
inline std::vector<Thm1Row> thm1_montecarlo(const GaussianFeatures& dist, const Thm1Options& opts) {
  if (opts.pairs == 0 || opts.trials == 0) throw ConfigError("thm1 needs trials and pairs > 0");
  std::vector<double> bounds;
  for (double m : opts.margins) {
    bounds.push_back(std::min(1.0, geometric_bound_value(dist.d, dist.cov_trace(), m)));
  }
  const std::size_t G = opts.margins.size();
  std::vector<Thm1Row> rows(opts.trials * G);
  parallel_for(opts.trials, opts.jobs, [&](std::size_t trial) {
    Rng rng(Rng::derive(opts.seed, trial));
    std::vector<std::size_t> hits(G, 0);
    std::vector<double> x;
    for (std::size_t p = 0; p < opts.pairs; ++p) {
      const auto w = sample_unit_sphere<double>(rng, dist.d);
      dist.sample(rng, x);
      double r = 0.0;
      for (std::size_t i = 0; i < dist.d; ++i) r += w[i] * x[i];
      for (std::size_t g = 0; g < G; ++g) hits[g] += r > dist.mu_norm + opts.margins[g];
    }
    for (std::size_t g = 0; g < G; ++g) {
      auto& row = rows[trial * G + g];
      row.d = dist.d;
      row.trial = trial;
      row.delta = dist.mu_norm + opts.margins[g];
      row.pairs = opts.pairs;
      row.frequency = static_cast<double>(hits[g]) / static_cast<double>(opts.pairs);
      row.bound = bounds[g];
      row.tolerance = 3 * std::sqrt(bounds[g] * (1 - bounds[g]) / static_cast<double>(opts.pairs));
      row.ok = row.frequency <= row.bound + row.tolerance;
    }
  });
  return rows;
}

/// A trial passes when every Delta on its grid is within bound + tolerance.
inline std::size_t thm1_trials_passed(const std::vector<Thm1Row>& rows) {
  std::map<std::pair<std::size_t, std::size_t>, bool> ok;
  for (const auto& r : rows) {
    auto [it, fresh] = ok.try_emplace({r.d, r.trial}, true);
    it->second = it->second && r.ok;
  }
  std::size_t n = 0;
  for (const auto& [key, pass] : ok) n += pass;
  return n;
}

struct Thm2Row {
  std::size_t repeat = 0;
  std::size_t n = 0;
  double bound = 0.0;
  double empirical = 0.0;
  bool violated = false;
};

struct Thm2Options {
  std::size_t d = 16;
  double delta = 2.0537489;  // P(N(0,1) > delta) = 0.02
  std::size_t m = 2000;
  std::size_t test = 10000;
  std::size_t repeats = 1000;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

struct Thm2Result {
  std::vector<Thm2Row> rows;
  double violation_rate = 0.0;
};

/// Fixes one detector w, then per repetition counts n exceedances among m
/// calibration features, certifies dkw_bound(m, n) and compares it with the
/// exceedance rate on fresh features.
inline Thm2Result thm2_montecarlo(const Thm2Options& opts) {
  if (opts.m == 0 || opts.test == 0 || opts.repeats == 0) {
    throw ConfigError("thm2 needs m, test and repeats > 0");
  }
  Rng wrng(Rng::derive(opts.seed, 0));
  const auto w = sample_unit_sphere<double>(wrng, opts.d);
  const GaussianFeatures dist{opts.d, 0.0, 1.0};
  std::map<std::size_t, double> memo;
  std::mutex memo_mutex;
  auto bound_for = [&](std::size_t n) {
    {
      std::lock_guard lock(memo_mutex);
      if (auto it = memo.find(n); it != memo.end()) return it->second;
    }
    const double b = dkw_bound(opts.m, n).value;
    std::lock_guard lock(memo_mutex);
    memo[n] = b;
    return b;
  };
  Thm2Result res;
  res.rows.resize(opts.repeats);
  parallel_for(opts.repeats, opts.jobs, [&](std::size_t rep) {
    Rng rng(Rng::derive(opts.seed, rep + 1));
    std::vector<double> x;
    auto exceed = [&](std::size_t count) {
      std::size_t hits = 0;
      for (std::size_t i = 0; i < count; ++i) {
        dist.sample(rng, x);
        double r = 0.0;
        for (std::size_t k = 0; k < opts.d; ++k) r += w[k] * x[k];
        hits += r > opts.delta;
      }
      return hits;
    };
    auto& row = res.rows[rep];
    row.repeat = rep;
    row.n = exceed(opts.m);
    row.bound = bound_for(row.n);
    row.empirical = static_cast<double>(exceed(opts.test)) / static_cast<double>(opts.test);
    row.violated = row.empirical > row.bound;
  });
  std::size_t v = 0;
  for (const auto& r : res.rows) v += r.violated;
  res.violation_rate = static_cast<double>(v) / static_cast<double>(opts.repeats);
  return res;
}

inline std::string thm1_csv(const std::vector<Thm1Row>& rows) {
  std::ostringstream os;
  os.precision(17);
  os << "d,trial,delta,pairs,frequency,bound,tolerance,ok\n";
  for (const auto& r : rows) {
    os << r.d << ',' << r.trial << ',' << r.delta << ',' << r.pairs << ',' << r.frequency << ','
       << r.bound << ',' << r.tolerance << ',' << (r.ok ? 1 : 0) << '\n';
  }
  return os.str();
}

inline std::string thm2_csv(const Thm2Result& res) {
  std::ostringstream os;
  os.precision(17);
  os << "repeat,n,bound,empirical,violated\n";
  for (const auto& r : res.rows) {
    os << r.repeat << ',' << r.n << ',' << r.bound << ',' << r.empirical << ','
       << (r.violated ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace seal::harness
