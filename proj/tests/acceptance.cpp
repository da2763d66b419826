// Copyright 2026 The seal Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//   acceptance [--jobs N] [criterion ...]

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <numbers>
#include <set>
#include <sstream>

#include "engine_oracles.hpp"
#include "nets.hpp"
#include "oracles.hpp"
#include "seal/seal.hpp"

namespace {

using namespace seal;
using namespace seal::harness;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
  double budget = 0.0;  // seconds; 0 means no runtime limit
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

StainOptions quick_options() {
  StainOptions o;
  o.trigger.iterations = 150;
  o.trigger.restarts = 2;
  o.probe_count = 64;
  return o;
}

std::vector<bool> random_bits(Rng& rng, std::size_t n) {
  std::vector<bool> bits(n);
  for (std::size_t i = 0; i < n; ++i) bits[i] = rng.below(2) == 1;
  return bits;
}

// ---- shared toy task ----------------------------------------------------------

struct ToyTask {
  ShapesDataset train, test;
  TrainResult trained;
  double seconds = 0.0;
};

std::size_t g_jobs = 1;

/// Shape classifier trained once and shared by the model-level criteria. The
/// training time is charged to every criterion that uses it.
const ToyTask& toy_task() {
  static std::unique_ptr<ToyTask> task;
  if (!task) {
    const auto t0 = Clock::now();
    task = std::make_unique<ToyTask>();
    DatasetSpec spec;
    spec.seed = 1;
    task->train = make_shapes(spec);
    spec.seed = 2;
    spec.count = 500;
    task->test = make_shapes(spec);
    ModelSpec model;
    model.seed = 3;
    TrainOptions opts;
    opts.seed = 4;
    task->trained = train_small(make_model(model), task->train, task->test, opts);
    task->seconds = seconds_since(t0);
  }
  return *task;
}

LockOptions lock_options(const ToyTask& task) {
  LockOptions o;
  o.stain.probes.assign(task.train.images.begin(), task.train.images.begin() + 200);
  return o;
}

constexpr std::size_t kLockLayer = 2;
constexpr double kLockDelta = 10.0;
constexpr double kLockScale = 100.0;

struct LockRun {
  Network original, edited;
  Locked locked;
};

LockRun internal_lock(const ToyTask& task) {
  Rng rng(5);
  auto locked = lock_internal(task.trained.net, kLockLayer, 1, kLockDelta, std::nullopt, 1, 1,
                              kLockScale, std::nullopt, rng, lock_options(task));
  auto edited = make_edited(locked.net, locked.record);
  return {task.trained.net, std::move(edited), std::move(locked)};
}

/// SqEx block injected after the ReLU that follows the detector layer, locked
/// with offset t = -(s / sqrt(c)) on every channel.
LockRun sqex_lock(const ToyTask& task) {
  Rng rng(6);
  const auto after = seal::detail::relu_after(task.trained.net, kLockLayer);
  auto injected = inject_sqex(task.trained.net, after, 4, 0.01, rng);
  const auto c = injected.shape_at(after + 1)[0];
  const Tensor t({c}, static_cast<float>(-kLockScale / std::sqrt(static_cast<double>(c))));
  auto locked = lock_sqex(injected, kLockLayer, 1, kLockDelta, std::nullopt, 1, 1, kLockScale, t,
                          rng, lock_options(task));
  auto edited = make_edited(locked.net, locked.record);
  return {std::move(injected), std::move(edited), std::move(locked)};
}

// ---- criteria -------------------------------------------------------------------

Outcome stain_identity() {
  const int per_kind = 100;
  const char* kinds[4] = {"dense additive", "dense non-additive", "conv bn", "conv plain"};
  double worst = 0.0;
  int failed = 0, skipped = 0;
  for (int kind = 0; kind < 4; ++kind) {
    int done = 0;
    for (std::uint64_t seed = 0; done < per_kind; ++seed) {
      if (seed > 1000) return {false, fmt("%s: too many degenerate models", kinds[kind]), 60};
      Rng rng(Rng::derive(1000 + kind, seed));
      const double delta = 1.0 + 20.0 * rng.uniform();
      Stained st;
      try {
        if (kind < 2) {
          const auto net = test::toy_mlp(rng, 4 + rng.below(12), 4 + rng.below(8), 3);
          const std::size_t j = rng.below(2) ? 0 : 2;
          const auto k = rng.below(net.get<nn::Dense<float>>(j).outputs());
          const bool additive = kind == 0;
          st = stain_mlp(net, j, k, delta, additive ? std::nullopt : std::optional(-delta / 2),
                         additive, rng, quick_options());
        } else {
          const bool bn = kind == 2;
          const auto net = test::toy_cnn(rng, 1 + rng.below(3), 8 + 2 * rng.below(3), 3, bn);
          const std::size_t layers[3] = {0, bn ? 3u : 2u, bn ? 6u : 4u};
          const auto j = layers[rng.below(3)];
          const auto k = rng.below(net.get<nn::Conv2d<float>>(j).out_channels());
          const auto red = rng.below(2) ? nn::Reduction::mean() : nn::Reduction::at(1, 1);
          st = stain_conv(net, j, k, delta, std::nullopt, red, rng, quick_options());
        }
      } catch (const NumericError&) {
        ++skipped;  // every feature of the random model is dead on the input box
        continue;
      }
      const double err = std::abs(detector_readout(st.net, st.record, st.record.trigger) - delta) /
                         std::max(1.0, delta);
      worst = std::max(worst, err);
      failed += err > 1e-4;
      ++done;
    }
  }
  return {failed == 0,
          fmt("4x%d stains, %d outside tolerance, worst |r-D|/max(1,D) = %.2e, %d degenerate models "
              "skipped",
              per_kind, failed, worst, skipped),
          60};
}

Outcome zero_false_positives() {
  const auto t0 = Clock::now();
  const auto& task = toy_task();
  DatasetSpec spec;
  spec.seed = 7;
  spec.count = 4000;
  const auto eval = make_shapes(spec);
  std::size_t total_fp = 0, min_positions = SIZE_MAX;
  double worst_ratio = -INFINITY;
  for (int i = 0; i < 20; ++i) {
    Rng rng(100 + i);
    const auto st = stain_conv(task.trained.net, 2, i % 16, 10.0, std::nullopt,
                               nn::Reduction::at(4, 4), rng);
    const auto rep = eval_fpr(st.net, st.record, eval, st.record.trigger_response, g_jobs);
    total_fp += rep.fp;
    min_positions = std::min(min_positions, rep.positions);
    worst_ratio = std::max(worst_ratio, rep.max_response / st.record.trigger_response);
  }
  const double elapsed = seconds_since(t0) + task.seconds;
  return {total_fp == 0 && min_positions >= 100000 && elapsed <= 120,
          fmt("20 stains, %zu false positives, >= %zu positions each, max non-trigger/trigger "
              "response %.3f, %.1fs incl. training",
              total_fp, min_positions, worst_ratio, elapsed),
          120};
}

Outcome bound_values() {
  MomentEstimate est{3, 0.0, 1.0, 0};
  const double geo = geometric_bound(est, 1.0).value;
  const double dkw = dkw_bound(2000, 0).value;
  const double oracle = 1.0 - test::dkw_sup_oracle(2000, 0);
  const double col = collision_bound(100, 0.5);
  const double e_geo = std::abs(geo - std::numbers::pi / 16);
  const double e_dkw = std::abs(dkw - oracle);
  const double e_col = std::abs(col - std::exp(-12.5));
  return {e_geo <= 1e-9 && e_dkw <= 1e-3 && e_col <= 1e-12,
          fmt("geometric %.12f (err %.1e), dkw %.6f vs oracle %.6f (err %.1e), collision %.6e "
              "(err %.1e)",
              geo, e_geo, dkw, oracle, e_dkw, col, e_col),
          0};
}

Outcome theorem_montecarlo() {
  const auto t0 = Clock::now();
  std::ostringstream detail;
  bool ok = true;
  for (std::size_t d : {16, 64, 256}) {
    Thm1Options opts;
    opts.seed = 40 + d;
    opts.jobs = g_jobs;
    const GaussianFeatures dist{d, 1.0, 2.0 / std::sqrt(static_cast<double>(d))};
    const auto passed = thm1_trials_passed(thm1_montecarlo(dist, opts));
    ok = ok && passed == opts.trials;
    detail << "thm1 d=" << d << " " << passed << "/" << opts.trials << ", ";
  }
  Thm2Options opts;
  opts.seed = 41;
  opts.jobs = g_jobs;
  const auto thm2 = thm2_montecarlo(opts);
  ok = ok && thm2.violation_rate <= 0.01;
  const double elapsed = seconds_since(t0);
  detail << fmt("thm2 violation rate %.4f over %zu repeats, %.1fs", thm2.violation_rate,
                opts.repeats, elapsed);
  return {ok && elapsed <= 300, detail.str(), 300};
}

Outcome lock_correctness() {
  const auto t0 = Clock::now();
  const auto& task = toy_task();
  bool ok = task.trained.test_accuracy >= 0.90;
  std::string detail = fmt("base acc %.3f; ", task.trained.test_accuracy);
  for (int kind = 0; kind < 2; ++kind) {
    const auto run = kind == 0 ? internal_lock(task) : sqex_lock(task);
    const auto ev = eval_lock(run.original, run.edited, run.locked.net, run.locked.record,
                              task.test, g_jobs);
    const double orig = ev.get("original/unpatched").accuracy;
    const double locked = ev.get("locked/unpatched").accuracy;
    const double unlocked = ev.get("locked/patched").accuracy;
    const double edited = ev.get("edited/patched").accuracy;
    const bool a = ev.unlock_gap <= 1e-4;
    const bool b = locked <= orig - 0.30;
    const bool c = std::abs(unlocked - edited) <= 0.01;
    ok = ok && a && b && c;
    detail += fmt("%s: unlock gap %.1e, locked %.3f vs original %.3f, unlocked %.3f vs edited "
                  "%.3f; ",
                  kind == 0 ? "internal" : "sqex", ev.unlock_gap, locked, orig, unlocked, edited);
  }
  const double elapsed = seconds_since(t0) + task.seconds;
  detail += fmt("%.1fs incl. training", elapsed);
  return {ok && elapsed <= 300, detail, 300};
}

Outcome sqex_neutrality() {
  const auto& task = toy_task();
  const auto& net = task.trained.net;
  const auto after = seal::detail::relu_after(net, kLockLayer);
  Rng rng(8);
  const auto zero = inject_sqex(net, after, 4, 0.0, rng);
  double diff = 0.0;
  for (const auto& x : task.test.images) diff = std::max(diff, max_abs_diff(net.forward(x), zero.forward(x)));
  const auto small = inject_sqex(net, after, 4, 0.01, rng);
  const double base = accuracy(net, task.test, g_jobs);
  const double injected = accuracy(small, task.test, g_jobs);
  return {diff <= 1e-6 && std::abs(base - injected) <= 0.01,
          fmt("init 0: max output diff %.1e; init 0.01: accuracy %.3f -> %.3f", diff, base,
              injected),
          0};
}

Outcome engine_verification() {
  using test::random_tensor;
  Rng rng(70);
  double conv_err = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto c = 1 + rng.below(8), h = 1 + rng.below(8), w = 1 + rng.below(8);
    const auto o = 1 + rng.below(8), k = 1 + rng.below(std::min(h, w));
    const auto stride = 1 + rng.below(3), pad = rng.below(3);
    const auto x = random_tensor(rng, {c, h, w});
    const auto wt = random_tensor(rng, {o, c, k, k});
    const auto b = random_tensor(rng, {o});
    conv_err = std::max(conv_err, max_abs_diff(conv2d(x, wt, b, stride, pad),
                                                test::conv2d_reference(x, wt, b, stride, pad)));
    const auto a = random_tensor(rng, {h, w});
    const auto m = random_tensor(rng, {w, c});
    conv_err = std::max(conv_err, max_abs_diff(matmul(a, m), test::matmul_reference(a, m)));
  }

  double grad_err = 0.0;
  std::size_t grad_checks = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto net = nn::network_cast<double>(test::random_mixed_net(rng, 3));
    const auto x = tensor_cast<double>(random_tensor(rng, net.input_shape(), 0.0, 1.0));
    const auto readout = nn::cross_entropy_readout<double>(net.size(), rng.below(3));
    const auto g = nn::gradients(net, x, readout);
    auto f = [&](const BasicTensor<double>& z) { return readout.eval(net.forward(z), nullptr); };
    const double h = 1e-3;
    for (int s = 0; s < 100; ++s) {
      const auto i = rng.below(x.size());
      auto xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      if (test::kink_pattern(net, xp) != test::kink_pattern(net, xm)) continue;
      grad_err = std::max(grad_err, test::relative_error(test::central_difference(f, x, i, h), g.input[i]));
      ++grad_checks;
    }
    for (int s = 0; s < 50; ++s) {
      const auto j = rng.below(net.size());
      auto params = nn::parameters(net[j].layer);
      if (params.empty()) continue;
      const auto p = rng.below(params.size());
      const auto i = rng.below(params[p]->size());
      auto plus = net, minus = net;
      (*nn::parameters(plus[j].layer)[p])[i] += h;
      (*nn::parameters(minus[j].layer)[p])[i] -= h;
      if (test::kink_pattern(plus, x) != test::kink_pattern(minus, x)) continue;
      const double fd =
          (readout.eval(plus.forward(x), nullptr) - readout.eval(minus.forward(x), nullptr)) / (2 * h);
      grad_err = std::max(grad_err, test::relative_error(fd, g.params[j][p][i]));
      ++grad_checks;
    }
  }

  std::size_t serial_bad = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto net = test::random_mixed_net(rng);
    const auto bytes = nn::serialize(net);
    const auto back = nn::deserialize(bytes);
    const auto x = random_tensor(rng, net.input_shape());
    serial_bad += nn::serialize(back) != bytes || back.forward(x) != net.forward(x);
  }

  std::size_t rf_bad = 0, rf_checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t size = 9 + rng.below(6);
    nn::Network net({1, size, size});
    const auto depth = 1 + rng.below(4);
    std::size_t ch = 1;
    for (std::size_t d = 0; d < depth; ++d) {
      const auto s = net.output_shape();
      const std::size_t k = 1 + 2 * rng.below(2);
      const std::size_t stride = 1 + rng.below(2), pad = rng.below(2);
      if (k > std::min(s[1], s[2]) + 2 * pad) break;
      const std::size_t out = 1 + rng.below(3);
      net.add("c" + std::to_string(d), test::random_conv(rng, ch, out, k, stride, pad));
      ch = out;
      if (d + 1 < depth) net.add("s" + std::to_string(d), nn::Sigmoid{});
    }
    std::size_t j = net.size() - 1;
    if (!net.is<nn::Conv2d<float>>(j)) --j;
    const auto out = net.shape_at(j + 1);
    const auto a = rng.below(out[1]), b = rng.below(out[2]);
    const auto box = test::sensitivity_box(net, j, a, b, rng);
    ++rf_checked;
    if (!box) {
      try {
        (void)nn::receptive_field(net, j, a, b);
        ++rf_bad;
      } catch (const PreconditionError&) {
      }
      continue;
    }
    rf_bad += !(box == nn::receptive_field(net, j, a, b).clipped(size, size));
  }

  return {conv_err <= 1e-6 && grad_err <= 1e-4 && grad_checks > 0 && serial_bad == 0 && rf_bad == 0,
          fmt("conv/matmul max err %.1e over 1000 cases; gradient max rel err %.1e over %zu checks "
              "on 20 nets; %zu/20 serialization mismatches; %zu/%zu receptive-field mismatches",
              conv_err, grad_err, grad_checks, serial_bad, rf_bad, rf_checked),
          0};
}

Outcome schema_round_trips() {
  Rng rng(80);
  std::size_t weight_bad = 0;
  const auto wnet = test::toy_mlp(rng, 64, 8, 3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto msg = random_bits(rng, 64);
    const auto k = rng.below(8);
    const auto st = schema_weight(wnet, 0, k, msg, 10.0, -3.0, rng, quick_options());
    weight_bad += schema_weight_decode(st.net, 0, k) != msg;
  }

  const auto anet = test::toy_mlp(rng, 20, 16, 4);
  const auto amsg = random_bits(rng, 16);
  const auto ast = schema_activation(anet, 0, amsg, 2.0, rng, quick_options());
  const auto decoded = schema_activation_decode(ast.net, ast.record);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < 16; ++i) agree += decoded[i] == amsg[i];

  DatasetSpec spec;
  spec.seed = 1;
  spec.classes = 4;
  const auto train = flattened(make_shapes(spec));
  spec.seed = 2;
  const auto test = flattened(make_shapes(spec));
  ModelSpec model;
  model.arch = "mlp";
  model.classes = 4;
  model.width = 32;
  model.seed = 3;
  TrainOptions opts;
  opts.seed = 4;
  const auto mlp = train_small(make_model(model), train, test, opts).net;
  const auto before = predict(mlp, test.images, g_jobs);
  StainOptions so;
  so.probes.assign(train.images.begin(), train.images.begin() + 200);
  const auto k = nn::min_l1_neuron(mlp, 0);
  std::size_t forced = 0, changed = 0;
  for (std::size_t target = 0; target < 4; ++target) {
    Rng trng(90 + target);
    const auto st = schema_output(mlp, 0, k, target, 10.0, std::nullopt, trng, so);
    forced += argmax(st.net.forward(st.record.trigger)) == target;
    const auto after = predict(st.net, test.images, g_jobs);
    for (std::size_t i = 0; i < after.size(); ++i) changed += after[i] != before[i];
  }
  return {weight_bad == 0 && agree == 16 && forced == 4 && changed == 0,
          fmt("weight schema %zu/100 round trips; activation signs %zu/16; output schema forced "
              "%zu/4 targets, %zu of 4x%zu non-trigger predictions changed",
              100 - weight_bad, agree, forced, changed, test.size()),
          0};
}

Outcome pruning_attack() {
  const auto& task = toy_task();
  const auto& net = task.trained.net;
  double worst = 0.0;
  for (int i = 0; i < 5; ++i) {
    Rng rng(200 + i);
    const auto st = stain_conv(net, 0, i, 10.0, std::nullopt, nn::Reduction::at(8, 8), rng);
    worst = std::max(worst, detector_survival(st.net, prune_l1(st.net, 0.3, false), st.record));
  }
  double deep = 0.0;
  for (int i = 0; i < 5; ++i) {
    Rng rng(200 + i);
    const auto st = stain_conv(net, 2, i, 10.0, std::nullopt, nn::Reduction::at(4, 4), rng);
    deep = std::max(deep, detector_survival(st.net, prune_l1(st.net, 0.3, false), st.record));
  }
  std::printf("info: 30%% pruning, stains at layer 2: max relative response change %.3f\n", deep);

  double min_gap = INFINITY;
  for (int kind = 0; kind < 2; ++kind) {
    const auto run = kind == 0 ? internal_lock(task) : sqex_lock(task);
    const auto pruned = prune_detector(run.locked.net, run.locked.record);
    min_gap = std::min(min_gap, accuracy(run.edited, task.test, g_jobs) - accuracy(pruned, task.test, g_jobs));
  }
  return {worst <= 0.20 && min_gap >= 0.20,
          fmt("first-layer stains: max relative trigger response change %.3f over 5 stains; "
              "detector-pruned locks stay %.3f below edited accuracy",
              worst, min_gap),
          0};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"seal acceptance run"};
  std::vector<int> selected;
  app.add_option("--jobs", g_jobs, "worker threads for evaluation")->check(CLI::PositiveNumber);
  app.add_option("criteria", selected, "criteria to run (default: all)")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"exact stain identity", stain_identity},
      {"zero false positives", zero_false_positives},
      {"bound values", bound_values},
      {"theorem monte carlo", theorem_montecarlo},
      {"lock correctness", lock_correctness},
      {"sqex neutrality", sqex_neutrality},
      {"engine verification", engine_verification},
      {"schema round trips", schema_round_trips},
      {"pruning attack", pruning_attack},
  };
  const std::set<int> want(selected.begin(), selected.end());
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!want.empty() && !want.count(id)) continue;
    const auto t0 = Clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what()};
    }
    const double elapsed = seconds_since(t0);
    if (out.budget > 0 && elapsed > out.budget) out.pass = false;
    failures += !out.pass;
    std::printf("criterion %d %s: %s (%s; %.1fs)\n", id, criteria[i].first,
                out.pass ? "PASS" : "FAIL", out.detail.c_str(), elapsed);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
