// Copyright 2026 The seal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Mini-batch SGD with momentum on the cross-entropy loss.

#include <cmath>
#include <numeric>
#include <vector>

#include "seal/harness/dataset.hpp"
#include "seal/harness/parallel.hpp"
#include "seal/nn/gradient.hpp"

namespace seal::harness {

struct TrainOptions {
  std::size_t epochs = 10;
  double lr = 0.05;
  double momentum = 0.9;
  std::size_t batch = 16;
  std::uint64_t seed = 0;
};

struct TrainResult {
  nn::Network net;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::vector<double> epoch_loss;
};

inline std::vector<std::size_t> predict(const nn::Network& net, const std::vector<Tensor>& images,
                                        std::size_t jobs = 1) {
  std::vector<std::size_t> out(images.size());
  parallel_for(images.size(), jobs, [&](std::size_t i) { out[i] = argmax(net.forward(images[i])); });
  return out;
}

inline double accuracy(const nn::Network& net, const ShapesDataset& ds, std::size_t jobs = 1) {
  if (ds.size() == 0) throw PreconditionError("accuracy of an empty dataset");
  const auto pred = predict(net, ds.images, jobs);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == ds.labels[i];
  return static_cast<double>(hits) / static_cast<double>(ds.size());
}

/// Deterministic in (net, data, options). Returns the final parameters.
inline TrainResult train_small(nn::Network net, const ShapesDataset& train,
                               const ShapesDataset& test, const TrainOptions& opts) {
  if (train.size() == 0) throw PreconditionError("training set is empty");
  if (opts.batch == 0) throw ConfigError("batch size must be positive");
  if (!(opts.lr >= 0) || !(opts.momentum >= 0 && opts.momentum < 1)) {
    throw ConfigError("need lr >= 0 and momentum in [0, 1)");
  }
  Rng rng(opts.seed);
  std::vector<std::vector<Tensor>> velocity(net.size());
  for (std::size_t j = 0; j < net.size(); ++j) {
    for (const auto* p : nn::parameters(net[j].layer)) velocity[j].emplace_back(p->shape());
  }
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  TrainResult result;
  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    rng.shuffle(order);
    double loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += opts.batch) {
      const std::size_t end = std::min(order.size(), start + opts.batch);
      std::vector<std::vector<Tensor>> grad;
      for (std::size_t b = start; b < end; ++b) {
        const auto i = order[b];
        auto g = nn::gradients(net, train.images[i],
                               nn::cross_entropy_readout<float>(net.size(), train.labels[i]));
        loss += g.value;
        if (grad.empty()) {
          grad = std::move(g.params);
        } else {
          for (std::size_t j = 0; j < grad.size(); ++j)
            for (std::size_t p = 0; p < grad[j].size(); ++p) grad[j][p] = grad[j][p] + g.params[j][p];
        }
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      for (std::size_t j = 0; j < net.size(); ++j) {
        auto params = nn::parameters(net[j].layer);
        for (std::size_t p = 0; p < params.size(); ++p) {
          auto v = velocity[j][p].data();
          auto w = params[p]->data();
          const auto g = grad[j][p].data();
          for (std::size_t e = 0; e < v.size(); ++e) {
            v[e] = static_cast<float>(opts.momentum * v[e] + scale * g[e]);
            w[e] = static_cast<float>(w[e] - opts.lr * v[e]);
          }
        }
      }
    }
    const double mean_loss = loss / static_cast<double>(order.size());
    if (!std::isfinite(mean_loss)) throw NumericError("training diverged (loss is not finite)");
    result.epoch_loss.push_back(mean_loss);
  }
  result.train_accuracy = accuracy(net, train);
  result.test_accuracy = test.size() ? accuracy(net, test) : 0.0;
  result.net = std::move(net);
  return result;
}

}  // namespace seal::harness
