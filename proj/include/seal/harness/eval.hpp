// Copyright 2026 The seal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// False-positive measurement for detector neurons and the six-setting lock
// evaluation (original, edited, locked; each with and without the patch).

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "seal/harness/dataset.hpp"
#include "seal/harness/parallel.hpp"
#include "seal/harness/train.hpp"
#include "seal/lock.hpp"
#include "seal/stain.hpp"

namespace seal::harness {

inline constexpr std::size_t kHistogramBins = 101;

struct Histogram {
  std::vector<double> edges;  // bins + 1 entries
  std::vector<std::size_t> counts;
};

/// Uniform bins spanning [min, max] of the values; the maximum lands in the
/// last bin. A constant sample gets a unit-wide range around its value.
inline Histogram make_histogram(const std::vector<double>& values, std::size_t bins = kHistogramBins) {
  Histogram h;
  h.counts.assign(bins, 0);
  if (values.empty()) return h;
  auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  double lo = *mn, hi = *mx;
  if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  for (std::size_t i = 0; i <= bins; ++i) {
    h.edges.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins));
  }
  for (double v : values) {
    auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
    ++h.counts[std::min(b, bins - 1)];
  }
  return h;
}

struct EvalReport {
  std::string setting;
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  Histogram histogram;
  std::size_t fp = 0;
  std::size_t positions = 0;
  double threshold = 0.0;
  double max_response = -std::numeric_limits<double>::infinity();
};

/// Detector responses at non-overlapping positions of one feature map: the
/// kernel is slid with stride equal to its size and no padding, giving
/// floor(H/k) * floor(W/k) responses. Dense detectors give a single response.
inline std::vector<double> nonoverlapping_responses(const Detector& det, const Tensor& phi) {
  if (det.kind == Detector::Kind::dense) return {dot(det.v, phi)};
  const auto K = det.v.dim(1);
  const auto w = det.v.reshaped({1, det.v.dim(0), K, det.v.dim(2)});
  const auto map = conv2d(phi, w, Tensor({1}), K, 0);
  return {map.data().begin(), map.data().end()};
}

/// Counts responses strictly above `threshold` over every image. The
/// responses are the raw detector dot products on layer-j features of `net`.
inline EvalReport eval_fpr(const nn::Network& net, const StainRecord& rec,
                           const std::vector<Tensor>& images, double threshold,
                           std::size_t jobs = 1) {
  const auto det = rec.as_detector(net);
  if (rec.kind == StainKind::conv) {
    const auto shape = net.shape_at(det.layer);
    const auto K = det.v.dim(1);
    if (shape[1] < K || shape[2] < K) {
      throw PreconditionError("layer " + std::to_string(det.layer) +
                              " feature map is smaller than the detector kernel");
    }
  }
  std::vector<std::vector<double>> per(images.size());
  parallel_for(images.size(), jobs, [&](std::size_t i) {
    per[i] = nonoverlapping_responses(det, net.feature_at(det.layer, images[i]));
  });
  std::vector<double> all;
  for (auto& r : per) all.insert(all.end(), r.begin(), r.end());
  EvalReport rep;
  rep.setting = "fpr";
  rep.threshold = threshold;
  rep.positions = all.size();
  for (double v : all) {
    rep.fp += v > threshold;
    rep.max_response = std::max(rep.max_response, v);
  }
  rep.histogram = make_histogram(all);
  return rep;
}

inline EvalReport eval_fpr(const nn::Network& net, const StainRecord& rec, const ShapesDataset& ds,
                           double threshold, std::size_t jobs = 1) {
  return eval_fpr(net, rec, ds.images, threshold, jobs);
}

struct LockEvaluation {
  std::array<EvalReport, 6> reports;  // original, edited, locked x unpatched, patched
  /// Largest |locked - edited| at the disrupted site over the patched images.
  double unlock_gap = 0.0;
  /// Largest |locked - edited| at the disrupted site over the unpatched images.
  double lock_gap = 0.0;

  const EvalReport& get(std::string_view setting) const {
    for (const auto& r : reports)
      if (r.setting == setting) return r;
    throw PreconditionError("no lock setting '" + std::string(setting) + "'");
  }
};

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  }
  return m;
}

/// Accuracy of the three models on the same images, clean and with the patch
/// pasted at the record's placement, plus the locked/edited discrepancy at
/// the disrupted site. Histograms hold the locked model's detector response.
inline LockEvaluation eval_lock(const nn::Network& original, const nn::Network& edited,
                                const nn::Network& locked, const LockRecord& rec,
                                const ShapesDataset& ds, std::size_t jobs = 1) {
  if (ds.size() == 0) throw PreconditionError("lock evaluation needs images");
  const std::size_t n = ds.size();
  struct Row {
    std::array<std::size_t, 6> pred;
    double response[2];
    double gap[2];
  };
  std::vector<Row> rows(n);
  const std::array<const nn::Network*, 3> nets{&original, &edited, &locked};
  parallel_for(n, jobs, [&](std::size_t i) {
    const std::array<Tensor, 2> x{ds.images[i], apply_patch(ds.images[i], rec.patch)};
    auto& row = rows[i];
    for (std::size_t p = 0; p < 2; ++p) {
      for (std::size_t m = 0; m < 3; ++m) row.pred[m * 2 + p] = argmax(nets[m]->forward(x[p]));
      row.response[p] = detector_readout(locked, rec.stain, x[p]);
      row.gap[p] = max_abs_diff(disrupted_output(locked, rec, x[p]), disrupted_output(edited, rec, x[p]));
    }
  });
  LockEvaluation ev;
  const char* names[3] = {"original", "edited", "locked"};
  for (std::size_t m = 0; m < 3; ++m)
    for (std::size_t p = 0; p < 2; ++p) {
      auto& rep = ev.reports[m * 2 + p];
      rep.setting = std::string(names[m]) + (p ? "/patched" : "/unpatched");
      std::size_t hits = 0;
      std::vector<double> resp;
      for (std::size_t i = 0; i < n; ++i) {
        hits += rows[i].pred[m * 2 + p] == ds.labels[i];
        resp.push_back(rows[i].response[p]);
      }
      rep.accuracy = static_cast<double>(hits) / static_cast<double>(n);
      rep.positions = n;
      rep.threshold = rec.stain.delta;
      for (double v : resp) {
        rep.fp += p == 0 && v > 0.0;
        rep.max_response = std::max(rep.max_response, v);
      }
      rep.histogram = make_histogram(resp);
    }
  for (const auto& row : rows) {
    ev.lock_gap = std::max(ev.lock_gap, row.gap[0]);
    ev.unlock_gap = std::max(ev.unlock_gap, row.gap[1]);
  }
  return ev;
}

// ---- reports -------------------------------------------------------------------

inline json report_json(const EvalReport& r) {
  json j{{"setting", r.setting},
         {"positions", r.positions},
         {"fp", r.fp},
         {"threshold", r.threshold},
         {"max_response", r.max_response}};
  j["accuracy"] = std::isnan(r.accuracy) ? json(nullptr) : json(r.accuracy);
  return j;
}

/// One summary row per report, then one row per histogram bin.
inline std::string reports_csv(std::span<const EvalReport> reports) {
  std::ostringstream os;
  os.precision(17);
  os << "setting,row,accuracy,fp,positions,threshold,bin_lo,bin_hi,count\n";
  for (const auto& r : reports) {
    os << r.setting << ",summary,";
    if (!std::isnan(r.accuracy)) os << r.accuracy;
    os << ',' << r.fp << ',' << r.positions << ',' << r.threshold << ",,,\n";
    for (std::size_t b = 0; b < r.histogram.counts.size() && !r.histogram.edges.empty(); ++b) {
      os << r.setting << ",bin,,,,," << r.histogram.edges[b] << ',' << r.histogram.edges[b + 1]
         << ',' << r.histogram.counts[b] << '\n';
    }
  }
  return os.str();
}

}  // namespace seal::harness
