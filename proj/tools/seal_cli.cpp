// Copyright 2026 The seal Authors
// SPDX-License-Identifier: Apache-2.0

// seal: batch front end.
//
//   seal <command> [--config FILE] [--set key=value ...] [--out DIR] [--jobs N] [--key value ...]
//
// Every run writes <out>/manifest.json echoing the resolved configuration.
// Exit codes: 0 ok, 2 config or file format, 3 precondition, 4 numeric.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>

#include "run_config.hpp"
#include "seal/seal.hpp"

namespace seal::cli {
namespace {

namespace fs = std::filesystem;
using harness::DatasetSpec;
using harness::ShapesDataset;

struct Run {
  std::string command;
  fs::path out;
  std::size_t jobs = 1;
  RunConfig cfg;
  json summary = json::object();
  std::vector<std::string> outputs;

  std::string path(const std::string& name) {
    outputs.push_back(name);
    return (out / name).string();
  }
  void write(const std::string& name, std::span<const std::uint8_t> bytes) { write_file(path(name), bytes); }
  void write_text(const std::string& name, std::string_view text) { seal::write_text(path(name), text); }
  void write_json(const std::string& name, const json& j) { write_text(name, j.dump(2) + "\n"); }
};

// ---- shared config readers -------------------------------------------------------

std::size_t neuron_index(Run& run, const Network& net, std::size_t j, const std::string& key = "neuron") {
  const auto v = run.cfg.str(key, "min-l1");
  if (v == "min-l1") return nn::min_l1_neuron(net, j);
  return run.cfg.count(key);
}

Reduction reduction(Run& run) {
  const auto v = run.cfg.str("reduction", "mean");
  if (v == "mean") return Reduction::mean();
  const auto ab = run.cfg.counts("reduction", {});
  if (ab.size() != 2) throw ConfigError("reduction must be 'mean' or 'a,b'");
  return Reduction::at(ab[0], ab[1]);
}

DatasetSpec dataset_spec(Run& run, const Network& net, const std::string& seed_key,
                         const std::string& count_key, std::size_t default_count) {
  DatasetSpec s;
  s.seed = run.cfg.seed(seed_key);
  s.count = run.cfg.count(count_key, default_count);
  const auto in = net.input_shape();
  if (in.size() == 3) {
    s.channels = in[0];
    s.size = in[1];
  } else if (in.size() == 1) {
    s.channels = run.cfg.count("channels", 1);
    s.size = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(in[0] / std::max<std::size_t>(s.channels, 1)))));
    if (s.channels * s.size * s.size != in[0]) {
      throw ConfigError("cannot infer an image size for flat model input " + std::to_string(in[0]));
    }
  } else {
    throw PreconditionError("model input " + to_string(in) + " is not an image or a flat vector");
  }
  const auto out = net.output_shape();
  s.classes = run.cfg.count("classes", std::min<std::size_t>(out.empty() ? 0 : out[0], harness::kShapeClasses.size()));
  s.noise = run.cfg.real("noise", s.noise);
  return s;
}

ShapesDataset as_model_input(ShapesDataset ds, const Network& net) {
  if (net.input_shape().size() == 1) ds = harness::flattened(std::move(ds));
  return ds;
}

/// Evaluation images: a SEALDST1 cache given by `dataset`, or a generated set.
ShapesDataset dataset(Run& run, const Network& net, std::size_t default_count = 1000) {
  if (auto file = run.cfg.optional_str("dataset")) return as_model_input(harness::decode_dataset(read_file(*file)), net);
  return as_model_input(harness::make_shapes(dataset_spec(run, net, "dataset_seed", "count", default_count)), net);
}

StainOptions stain_options(Run& run, const Network& net) {
  StainOptions o;
  o.trigger.iterations = static_cast<int>(run.cfg.count("trigger_iterations", 1500));
  o.trigger.restarts = static_cast<int>(run.cfg.count("trigger_restarts", 5));
  o.trigger.step = run.cfg.real("trigger_step", 0.02);
  o.trigger.lo = run.cfg.real("lo", 0.0);
  o.trigger.hi = run.cfg.real("hi", 1.0);
  o.calibration_margin = run.cfg.real("calibration_margin", 0.5);
  o.post_scale = run.cfg.real("post_scale", 1.0);
  o.probe_count = run.cfg.count("probe_count", 512);
  const auto probes = run.cfg.str("probes", "random");
  if (probes == "dataset") {
    o.probes = as_model_input(harness::make_shapes(dataset_spec(run, net, "probe_seed", "probe_count", 512)), net).images;
  } else if (probes != "random") {
    throw ConfigError("probes must be 'random' or 'dataset'");
  }
  return o;
}

std::optional<Tensor> offset(Run& run) {
  if (!run.cfg.has("t")) return std::nullopt;
  const auto values = run.cfg.reals("t", {});
  Tensor t({values.size()});
  for (std::size_t i = 0; i < values.size(); ++i) t[i] = static_cast<float>(values[i]);
  return t;
}

void write_image(Run& run, const std::string& stem, const Tensor& x) {
  run.write(stem + ".ten", encode_tensor(x));
  if (x.rank() == 3 && (x.dim(0) == 1 || x.dim(0) == 3)) run.write(stem + ".ppm", encode_ppm(x));
}

json accuracy_json(const harness::TrainResult& r) {
  return {{"train_accuracy", r.train_accuracy}, {"test_accuracy", r.test_accuracy}, {"epoch_loss", r.epoch_loss}};
}

// ---- commands --------------------------------------------------------------------

void gen_model(Run& run) {
  harness::ModelSpec s;
  s.arch = run.cfg.str("arch", s.arch);
  s.channels = run.cfg.count("channels", s.channels);
  s.size = run.cfg.count("size", s.size);
  s.classes = run.cfg.count("classes", s.classes);
  s.width = run.cfg.count("width", s.width);
  s.batch_norm = run.cfg.flag("batch_norm", s.batch_norm);
  s.seed = run.cfg.seed();
  const auto net = harness::make_model(s);
  run.write("model.seal", nn::serialize(net));
  run.summary = {{"layers", net.size()}, {"input", net.input_shape()}, {"output", net.output_shape()}};
}

void train(Run& run) {
  const auto net = nn::load_network(run.cfg.str("model"));
  harness::TrainOptions o;
  o.epochs = run.cfg.count("epochs", o.epochs);
  o.lr = run.cfg.real("lr", o.lr);
  o.momentum = run.cfg.real("momentum", o.momentum);
  o.batch = run.cfg.count("batch", o.batch);
  o.seed = run.cfg.seed();
  const auto train_set = harness::make_shapes(dataset_spec(run, net, "train_seed", "train_count", 1000));
  const auto test_set = harness::make_shapes(dataset_spec(run, net, "test_seed", "test_count", 500));
  if (run.cfg.flag("cache_datasets", false)) {
    run.write("train.sealdst", harness::encode_dataset(train_set));
    run.write("test.sealdst", harness::encode_dataset(test_set));
  }
  const auto res = harness::train_small(net, as_model_input(train_set, net), as_model_input(test_set, net), o);
  run.write("model.seal", nn::serialize(res.net));
  run.summary = accuracy_json(res);
  run.write_json("train.json", run.summary);
}

void stain(Run& run) {
  const auto net = nn::load_network(run.cfg.str("model"));
  const auto j = run.cfg.count("layer");
  const auto delta = run.cfg.real("delta");
  const auto rest = run.cfg.optional_real("rest");
  const auto schema = parse_schema(run.cfg.str("schema", "none"));
  Rng rng(run.cfg.seed());
  Stained st;
  if (schema == Schema::activation) {
    st = schema_activation(net, j, bits_from_string(run.cfg.str("message")), delta, rng, stain_options(run, net));
  } else {
    const auto k = neuron_index(run, net, j);
    switch (schema) {
      case Schema::weight:
        st = schema_weight(net, j, k, bits_from_string(run.cfg.str("message")), delta, rest, rng,
                           stain_options(run, net));
        break;
      case Schema::output: {
        OutputSchemaOptions oo;
        oo.confidence = run.cfg.real("confidence", oo.confidence);
        oo.iterations = static_cast<int>(run.cfg.count("output_iterations", oo.iterations));
        oo.step = run.cfg.real("output_step", oo.step);
        st = schema_output(net, j, k, run.cfg.count("target"), delta, rest, rng, stain_options(run, net), oo);
        break;
      }
      default:
        if (net.is<nn::Conv2d<float>>(j)) {
          const auto red = reduction(run);
          st = stain_conv(net, j, k, delta, rest, red, rng, stain_options(run, net));
        } else {
          const bool additive = run.cfg.flag("additive", false);
          st = stain_mlp(net, j, k, delta, rest, additive, rng, stain_options(run, net));
        }
    }
  }
  run.write("model.seal", nn::serialize(st.net));
  run.write("stain.rec", encode_stain(st.record));
  write_image(run, "trigger", st.record.trigger);
  const auto v = verify_stain(st.net, st.record, st.record.delta - 1e-4 * std::max(1.0, std::abs(st.record.delta)));
  run.summary = {{"layer", st.record.layer},       {"neuron", st.record.neuron},
                 {"schema", schema_name(schema)},  {"delta", st.record.delta},
                 {"rest", st.record.rest},         {"trigger_response", st.record.trigger_response},
                 {"readout", v.response},          {"match", v.match}};
}

void lock(Run& run) {
  auto net = nn::load_network(run.cfg.str("model"));
  const auto kind = parse_lock_kind(run.cfg.str("kind", "internal"));
  const auto j = run.cfg.count("layer");
  const auto delta = run.cfg.real("delta");
  const auto rest = run.cfg.optional_real("rest");
  const auto a = run.cfg.count("a"), b = run.cfg.count("b");
  const auto s = run.cfg.optional_real("s");
  LockOptions o;
  o.flip_offset_sign = run.cfg.flag("flip_offset_sign", false);
  o.permute_conduit = run.cfg.flag("permute_conduit", true);
  Rng rng(run.cfg.seed());
  if (kind == LockKind::sqex && run.cfg.flag("inject", false)) {
    const auto gate = run.cfg.str("gate", "sigmoid");
    if (gate != "sigmoid" && gate != "hard_sigmoid") throw ConfigError("gate must be sigmoid or hard_sigmoid");
    net = inject_sqex(net, seal::detail::relu_after(net, j), run.cfg.count("bottleneck", 4),
                      run.cfg.real("init_scale", 0.01), rng,
                      gate == "sigmoid" ? nn::Gate::sigmoid : nn::Gate::hard_sigmoid);
  }
  o.stain = stain_options(run, net);
  const auto k = neuron_index(run, net, j);
  const auto t = offset(run);
  const auto locked = kind == LockKind::internal ? lock_internal(net, j, k, delta, rest, a, b, s, t, rng, o)
                                                 : lock_sqex(net, j, k, delta, rest, a, b, s, t, rng, o);
  run.write("original.seal", nn::serialize(net));
  run.write("model.seal", nn::serialize(locked.net));
  run.write("lock.rec", encode_lock(locked.record, run.cfg.flag("keep_backup", true)));
  run.write("patch.pch", encode_patch(locked.record.patch));
  write_image(run, "trigger", locked.record.stain.trigger);
  run.summary = {{"kind", lock_kind_name(kind)},
                 {"detector", {{"layer", j}, {"neuron", locked.record.stain.neuron}}},
                 {"disrupted_layer", locked.record.disrupted_layer},
                 {"s", locked.record.s},
                 {"gamma", locked.record.gamma},
                 {"patch", {{"top", locked.record.patch.placement.top},
                            {"left", locked.record.patch.placement.left},
                            {"height", locked.record.patch.placement.height},
                            {"width", locked.record.patch.placement.width}}}};
}

void edited(Run& run) {
  const auto net = nn::load_network(run.cfg.str("model"));
  const auto rec = decode_lock(read_file(run.cfg.str("lock")));
  run.write("edited.seal", nn::serialize(make_edited(net, rec)));
}

void trigger(Run& run) {
  const auto net = nn::load_network(run.cfg.str("model"));
  Detector det;
  if (auto rec = run.cfg.optional_str("record")) {
    det = decode_stain(read_file(*rec)).as_detector(net);
  } else {
    const auto j = run.cfg.count("layer");
    Rng rng(Rng::derive(run.cfg.seed(), 0));
    const auto shape = net.shape_at(j);
    const auto red = reduction(run);
    Tensor v = shape.size() == 3 ? sample_unit_sphere(rng, shape[0] * 9).reshaped({shape[0], 3, 3})
                                 : sample_unit_sphere(rng, shape_size(shape));
    det = Detector::at(net, j, std::move(v), red);
  }
  TriggerOptions o;
  o.iterations = static_cast<int>(run.cfg.count("trigger_iterations", o.iterations));
  o.restarts = static_cast<int>(run.cfg.count("trigger_restarts", o.restarts));
  o.step = run.cfg.real("trigger_step", o.step);
  o.lo = run.cfg.real("lo", o.lo);
  o.hi = run.cfg.real("hi", o.hi);
  o.seed = Rng::derive(run.cfg.seed(), 1);
  const auto res = optimize_trigger(net, det, o);
  write_image(run, "trigger", res.input);
  run.summary = {{"layer", det.layer}, {"response", res.response}, {"initial", res.initial}, {"restart", res.restart}};
  if (run.cfg.has("patch_a") || run.cfg.has("patch_b")) {
    const auto p = extract_patch(net, det.layer, res.input, run.cfg.count("patch_a"), run.cfg.count("patch_b"), o.lo, o.hi);
    run.write("patch.pch", encode_patch(p));
  }
}

void patch_apply(Run& run) {
  const auto patch = decode_patch(read_file(run.cfg.str("patch")));
  auto image = read_image(run.cfg.str("image"));
  if (image.rank() == 3 && image.dim(0) == 3 && patch.pixels.dim(0) == 1) {
    Tensor grey({1, image.dim(1), image.dim(2)});
    for (std::size_t i = 0; i < grey.size(); ++i) grey[i] = image[i];
    image = std::move(grey);
  }
  write_image(run, "patched", apply_patch(std::move(image), patch));
}

void verify(Run& run) {
  const auto net = nn::load_network(run.cfg.str("model"));
  const auto rec = decode_stain(read_file(run.cfg.str("record")));
  const double threshold = run.cfg.real("threshold", rec.delta - 1e-4 * std::max(1.0, std::abs(rec.delta)));
  const auto v = verify_stain(net, rec, threshold);
  run.summary = {{"match", v.match}, {"response", v.response}, {"threshold", threshold}};
  run.write_json("verify.json", run.summary);
}

/// Feature vectors at layer j: the activation itself for flat layers, or every
/// non-overlapping kernel x kernel window for image-shaped layers.
std::vector<Tensor> feature_samples(const Network& net, std::size_t j, const std::vector<Tensor>& images,
                                    std::size_t kernel) {
  std::vector<Tensor> out;
  for (const auto& x : images) {
    const auto phi = net.feature_at(j, x);
    if (phi.rank() != 3) {
      out.push_back(phi.reshaped({phi.size()}));
      continue;
    }
    const auto C = phi.dim(0);
    for (std::size_t a = 0; a + kernel <= phi.dim(1); a += kernel)
      for (std::size_t b = 0; b + kernel <= phi.dim(2); b += kernel) {
        Tensor w({C * kernel * kernel});
        std::size_t i = 0;
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t p = 0; p < kernel; ++p)
            for (std::size_t q = 0; q < kernel; ++q) w[i++] = phi.at(c, a + p, b + q);
        out.push_back(std::move(w));
      }
  }
  return out;
}

MomentEstimate moments(Run& run) {
  if (!run.cfg.has("model")) {
    const auto d = run.cfg.count("d");
    return {d, run.cfg.real("mu_norm", 0.0), run.cfg.real("cov_trace"), 0};
  }
  const auto net = nn::load_network(run.cfg.str("model"));
  const auto j = run.cfg.count("layer");
  const auto ds = dataset(run, net);
  return estimate_moments(feature_samples(net, j, ds.images, run.cfg.count("kernel", 3)));
}

void certify(Run& run) {
  const auto thm = run.cfg.str("thm");
  BoundCertificate c;
  if (thm == "1" || thm == "geometric") {
    const auto est = moments(run);
    c = geometric_bound(est, run.cfg.real("delta"));
  } else if (thm == "2" || thm == "dkw") {
    c = dkw_bound(run.cfg.count("m"), run.cfg.count("n"));
  } else if (thm == "finetune") {
    const auto est = moments(run);
    c = finetune_bound(est, run.cfg.real("delta"), run.cfg.real("perturbation"));
  } else if (thm == "collision") {
    c = collision_certificate(run.cfg.count("d"), run.cfg.real("theta"));
  } else {
    throw ConfigError("thm must be 1, 2, finetune or collision");
  }
  c.seed = run.cfg.count("seed", 0);
  auto j = c.to_json();
  if (run.cfg.has("positions")) {
    const auto positions = run.cfg.count("positions");
    j["union_over_positions"] = {{"positions", positions}, {"value", bonferroni(c.value, positions)}};
  }
  run.summary = j;
  run.write_json("certificate.json", j);
}

void write_reports(Run& run, const std::string& stem, std::span<const harness::EvalReport> reports) {
  json all = json::array();
  for (const auto& r : reports) all.push_back(harness::report_json(r));
  run.write_json(stem + ".json", all);
  run.write_text(stem + ".csv", harness::reports_csv(reports));
}

void eval_fpr(Run& run) {
  const auto net = nn::load_network(run.cfg.str("model"));
  const auto ds = dataset(run, net);
  if (auto record = run.cfg.optional_str("record")) {
    const auto rec = decode_stain(read_file(*record));
    const auto rep = harness::eval_fpr(net, rec, ds, run.cfg.real("threshold", rec.trigger_response), run.jobs);
    write_reports(run, "fpr", std::span(&rep, 1));
    run.summary = {{"fp", rep.fp}, {"positions", rep.positions}, {"threshold", rep.threshold}, {"max_response", rep.max_response}};
    return;
  }
  // No record: stain the model `repeats` times with independent detectors.
  const auto j = run.cfg.count("layer");
  const auto delta = run.cfg.real("delta", 10.0);
  const auto repeats = run.cfg.count("repeats", 50);
  const auto seed = run.cfg.seed();
  const auto red = net.is<nn::Conv2d<float>>(j) ? reduction(run) : Reduction::mean();
  const auto opts = stain_options(run, net);
  const auto width = net.is<nn::Conv2d<float>>(j) ? net.get<nn::Conv2d<float>>(j).out_channels()
                                                  : net.get<nn::Dense<float>>(j).outputs();
  std::vector<harness::EvalReport> reports;
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t r = 0; r < repeats; ++r) {
    Rng rng(Rng::derive(seed, r));
    const auto k = r % width;
    const auto st = net.is<nn::Conv2d<float>>(j) ? stain_conv(net, j, k, delta, std::nullopt, red, rng, opts)
                                                 : stain_mlp(net, j, k, delta, std::nullopt, false, rng, opts);
    auto rep = harness::eval_fpr(st.net, st.record, ds, st.record.trigger_response, run.jobs);
    rep.setting = "repeat" + std::to_string(r);
    const double rate = static_cast<double>(rep.fp) / static_cast<double>(rep.positions);
    sum += rate;
    sum2 += rate * rate;
    reports.push_back(std::move(rep));
  }
  write_reports(run, "fpr", reports);
  const double n = static_cast<double>(repeats);
  const double mean = sum / n;
  std::size_t fp = 0;
  for (const auto& r : reports) fp += r.fp;
  run.summary = {{"repeats", repeats},
                 {"fp", fp},
                 {"mean_fp_rate", mean},
                 {"std_fp_rate", repeats > 1 ? std::sqrt(std::max(0.0, (sum2 - n * mean * mean) / (n - 1))) : 0.0}};
}

void eval_lock(Run& run) {
  const auto original = nn::load_network(run.cfg.str("original"));
  const auto locked = nn::load_network(run.cfg.str("model"));
  const auto rec = decode_lock(read_file(run.cfg.str("lock")));
  const auto edited_net = run.cfg.has("edited") ? nn::load_network(run.cfg.str("edited")) : make_edited(locked, rec);
  const auto ds = dataset(run, original, 500);
  const auto ev = harness::eval_lock(original, edited_net, locked, rec, ds, run.jobs);
  write_reports(run, "lock_eval", ev.reports);
  json acc = json::object();
  for (const auto& r : ev.reports) acc[r.setting] = r.accuracy;
  run.summary = {{"accuracy", acc}, {"unlock_gap", ev.unlock_gap}, {"lock_gap", ev.lock_gap}};
}

void prune_attack(Run& run) {
  const auto net = nn::load_network(run.cfg.str("model"));
  const auto fraction = run.cfg.real("fraction", 0.3);
  const auto structured = run.cfg.flag("structured", false);
  const auto ds = dataset(run, net, 500);
  const auto pruned = harness::prune_l1(net, fraction, structured);
  run.write("pruned.seal", nn::serialize(pruned));
  run.summary = {{"fraction", fraction},
                 {"structured", structured},
                 {"accuracy_before", harness::accuracy(net, ds, run.jobs)},
                 {"accuracy_after", harness::accuracy(pruned, ds, run.jobs)}};
  if (auto record = run.cfg.optional_str("record")) {
    const auto rec = decode_stain(read_file(*record));
    run.summary["trigger_response_change"] = harness::detector_survival(net, pruned, rec);
  }
  if (auto lock_file = run.cfg.optional_str("lock")) {
    const auto rec = decode_lock(read_file(*lock_file));
    const auto no_detector = prune_detector(net, rec);
    run.write("detector_pruned.seal", nn::serialize(no_detector));
    run.summary["detector_pruned_accuracy"] = harness::accuracy(no_detector, ds, run.jobs);
    if (rec.backup) run.summary["edited_accuracy"] = harness::accuracy(make_edited(net, rec), ds, run.jobs);
  }
  run.write_json("prune.json", run.summary);
}

void validate_bounds(Run& run) {
  const auto thm = run.cfg.str("thm");
  const auto seed = run.cfg.seed();
  if (thm == "1") {
    harness::Thm1Options o;
    o.margins = run.cfg.reals("margins", o.margins);
    o.trials = run.cfg.count("trials", o.trials);
    o.pairs = run.cfg.count("pairs", o.pairs);
    o.jobs = run.jobs;
    const auto mu = run.cfg.real("mu_norm", 1.0);
    const auto sigma = run.cfg.real("sigma", 1.0);
    std::vector<harness::Thm1Row> rows;
    json per_d = json::array();
    for (auto d : run.cfg.counts("d", {16, 64, 256})) {
      o.seed = Rng::derive(seed, d);
      auto r = harness::thm1_montecarlo({d, mu, sigma}, o);
      per_d.push_back({{"d", d}, {"trials", o.trials}, {"passed", harness::thm1_trials_passed(r)}});
      rows.insert(rows.end(), r.begin(), r.end());
    }
    run.write_text("thm1.csv", harness::thm1_csv(rows));
    run.summary = {{"thm", 1}, {"results", per_d}};
  } else if (thm == "2") {
    harness::Thm2Options o;
    o.d = run.cfg.count("d", o.d);
    o.delta = run.cfg.real("delta", o.delta);
    o.m = run.cfg.count("m", o.m);
    o.test = run.cfg.count("test", o.test);
    o.repeats = run.cfg.count("repeats", o.repeats);
    o.seed = seed;
    o.jobs = run.jobs;
    const auto res = harness::thm2_montecarlo(o);
    run.write_text("thm2.csv", harness::thm2_csv(res));
    run.summary = {{"thm", 2}, {"repeats", o.repeats}, {"violation_rate", res.violation_rate}};
  } else {
    throw ConfigError("thm must be 1 or 2");
  }
  run.write_json("validation.json", run.summary);
}

const std::map<std::string, std::pair<std::string, std::function<void(Run&)>>>& commands() {
  static const std::map<std::string, std::pair<std::string, std::function<void(Run&)>>> table = {
      {"gen-model", {"create an untrained toy model", gen_model}},
      {"train", {"train a model on the synthetic shapes task", train}},
      {"stain", {"stain a neuron and write the model, record and trigger", stain}},
      {"lock", {"lock a model behind a trigger patch", lock}},
      {"edited", {"rebuild the edited model from a locked model and its record", edited}},
      {"trigger", {"optimize a trigger for a detector", trigger}},
      {"patch-apply", {"paste a trigger patch into an image", patch_apply}},
      {"verify", {"check a model against a stain record", verify}},
      {"certify", {"compute a false-positive bound certificate", certify}},
      {"eval-fpr", {"count false positives at non-overlapping detector positions", eval_fpr}},
      {"eval-lock", {"evaluate original, edited and locked models with and without the patch", eval_lock}},
      {"prune-attack", {"prune a stained or locked model and measure what survives", prune_attack}},
      {"validate-bounds", {"Monte-Carlo validation of the bounds", validate_bounds}},
  };
  return table;
}

/// Turns trailing "--key value" / "--key=value" flags into config entries.
void absorb_flags(RunConfig& cfg, const std::vector<std::string>& extras) {
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const auto& arg = extras[i];
    if (arg.rfind("--", 0) != 0 || arg.size() == 2) throw ConfigError("unexpected argument '" + arg + "'");
    const auto body = arg.substr(2);
    if (const auto eq = body.find('='); eq != std::string::npos) {
      cfg.set(body.substr(0, eq), body.substr(eq + 1));
    } else if (i + 1 < extras.size()) {
      cfg.set(body, extras[++i]);
    } else {
      throw ConfigError("flag '" + arg + "' needs a value");
    }
  }
}

int run_command(const std::string& name, Run& run) {
  const auto& [help, fn] = commands().at(name);
  json manifest = {{"command", name}, {"toolkit", kToolkitVersion}};
  int code = 0;
  try {
    fs::create_directories(run.out);
    fn(run);
    run.cfg.reject_unused();
    manifest["status"] = "ok";
  } catch (const Error& e) {
    code = exit_code(e.kind());
    manifest["status"] = "error";
    manifest["error"] = e.what();
    std::cerr << "seal " << name << ": " << e.what() << "\n";
  } catch (const fs::filesystem_error& e) {
    code = 2;
    manifest["status"] = "error";
    manifest["error"] = e.what();
    std::cerr << "seal " << name << ": " << e.what() << "\n";
  }
  manifest["exit_code"] = code;
  manifest["config"] = run.cfg.resolved();
  manifest["jobs"] = run.jobs;
  manifest["outputs"] = run.outputs;
  manifest["summary"] = run.summary;
  std::error_code ec;
  if (fs::is_directory(run.out, ec)) seal::write_text((run.out / "manifest.json").string(), manifest.dump(2) + "\n");
  if (code == 0) std::cout << run.summary.dump() << "\n";
  return code;
}

}  // namespace
}  // namespace seal::cli

int main(int argc, char** argv) {
  using namespace seal::cli;
  CLI::App app{"seal: stain, lock and certify neural networks"};
  app.require_subcommand(1);
  std::string config_file, out_dir = "seal-out";
  std::vector<std::string> assignments;
  std::size_t jobs = 1;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, entry] : commands()) {
    auto* sub = app.add_subcommand(name, entry.first);
    sub->allow_extras();
    sub->add_option("--config", config_file, "flat key = value config file");
    sub->add_option("--set", assignments, "override one config entry (key=value)");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--jobs", jobs, "worker threads for evaluation")->check(CLI::PositiveNumber);
    subs[name] = sub;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  for (const auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    Run run;
    run.command = name;
    run.out = out_dir;
    run.jobs = jobs;
    try {
      if (!config_file.empty()) {
        const auto bytes = seal::read_file(config_file);
        run.cfg.merge_text(std::string(bytes.begin(), bytes.end()), config_file);
      }
      for (const auto& a : assignments) run.cfg.set_assignment(a);
      absorb_flags(run.cfg, sub->remaining());
    } catch (const seal::Error& e) {
      std::cerr << "seal " << name << ": " << e.what() << "\n";
      return seal::exit_code(e.kind());
    }
    return run_command(name, run);
  }
  return 2;
}
