// Copyright 2026 The seal Authors
// SPDX-License-Identifier: Apache-2.0

// Trains the toy shapes CNN, stains one detector neuron, verifies it, then
// locks the model and compares accuracy with and without the patch.

#include <cstdio>

#include "seal/seal.hpp"

using namespace seal;
using namespace seal::harness;

int main() {
  try {
    DatasetSpec spec;
    spec.seed = 1;
    const auto train = make_shapes(spec);
    spec.seed = 2;
    spec.count = 500;
    const auto test = make_shapes(spec);

    ModelSpec model;
    model.seed = 3;
    TrainOptions topts;
    topts.seed = 4;
    const auto trained = train_small(make_model(model), train, test, topts);
    std::printf("trained: test accuracy %.3f\n", trained.test_accuracy);

    Rng rng(5);
    const auto stained =
        stain_conv(trained.net, 2, 7, 10.0, std::nullopt, nn::Reduction::at(4, 4), rng);
    const double threshold = stained.record.delta - 1e-3;
    const auto own = verify_stain(stained.net, stained.record, threshold);
    const auto other = verify_stain(trained.net, stained.record, threshold);
    std::printf("stain: response %.4f on stained model (match %d), %.4f on original (match %d)\n",
                own.response, own.match, other.response, other.match);
    std::printf("stain: accuracy after staining %.3f\n", accuracy(stained.net, test));

    const auto fpr = eval_fpr(stained.net, stained.record, test, threshold);
    std::printf("stain: %zu false positives over %zu positions\n", fpr.fp, fpr.positions);

    LockOptions lopts;
    lopts.stain.probes.assign(train.images.begin(), train.images.begin() + 200);
    const auto locked = lock_internal(trained.net, 2, 1, 10.0, std::nullopt, 1, 1, 100.0,
                                      std::nullopt, rng, lopts);
    const auto edited = make_edited(locked.net, locked.record);
    const auto ev = eval_lock(trained.net, edited, locked.net, locked.record, test);
    for (const auto& r : ev.reports) std::printf("lock: %-20s accuracy %.3f\n", r.setting.c_str(), r.accuracy);
    std::printf("lock: unlock gap %.2e\n", ev.unlock_gap);
    return 0;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e.kind());
  }
}
