// Copyright 2026 The seal Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>

#include "engine_oracles.hpp"
#include "nets.hpp"
#include "seal/nn/gradient.hpp"
#include "seal/nn/receptive_field.hpp"
#include "seal/nn/serialize.hpp"
#include "seal/nn/surgery.hpp"

namespace seal::nn {
namespace {

using test::kink_pattern;
using test::random_tensor;
using test::sensitivity_box;

TEST(ForwardTest, EmptyNetworkIsIdentity) {
  Rng rng(1);
  Network net({2, 3, 3});
  auto x = random_tensor(rng, {2, 3, 3});
  EXPECT_EQ(net.forward(x), x);
  EXPECT_THROW(net.forward(Tensor({3, 3, 3})), ShapeError);
}

TEST(ForwardTest, SqExWithZeroS2ScalesChannelsBySigmoidOfTau2) {
  Rng rng(2);
  auto se = test::random_sqex(rng, 3, 2, Gate::sigmoid);
  se.s2.fill(0.0f);
  Network net({3, 4, 4});
  net.add("se", se);
  auto x = random_tensor(rng, {3, 4, 4});
  auto y = net.forward(x);
  for (std::size_t c = 0; c < 3; ++c) {
    const float q = sigmoid(se.tau2[c]);
    for (std::size_t i = 0; i < 16; ++i) {
      EXPECT_NEAR(y[c * 16 + i], x[c * 16 + i] * q, 1e-7);
    }
  }
}

TEST(ForwardTest, TwoLayerConvNetMatchesStraightLineReference) {
  Rng rng(3);
  auto c0 = test::random_conv(rng, 2, 3, 3, 1, 1);
  auto c1 = test::random_conv(rng, 3, 2, 3, 2, 0);
  Network net({2, 7, 7});
  net.add("c0", c0).add("r0", ReLU{}).add("c1", c1);
  auto x = random_tensor(rng, {2, 7, 7});
  auto h = test::conv2d_reference(x, c0.weight, c0.bias, 1, 1);
  for (auto& v : h.data()) v = std::max(v, 0.0f);
  auto ref = test::conv2d_reference(h, c1.weight, c1.bias, 2, 0);
  auto y = net.forward(x);
  ASSERT_EQ(y.shape(), ref.shape());
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-5);
}

TEST(ForwardTest, AddRejectsNonComposingLayers) {
  Network net({4});
  Rng rng(4);
  EXPECT_THROW(net.add("fc", test::random_dense(rng, 5, 2)), ShapeError);
  EXPECT_THROW(net.add("conv", test::random_conv(rng, 1, 1, 3, 1, 0)), ShapeError);
}

TEST(FeatureTest, PrefixAndSuffixCompose) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto net = test::random_mixed_net(rng);
    auto x = random_tensor(rng, net.input_shape(), 0.0, 1.0);
    EXPECT_EQ(net.feature_at(0, x), x);
    EXPECT_EQ(net.feature_at(net.size(), x), net.forward(x));
    for (std::size_t j = 0; j <= net.size(); ++j) {
      auto phi = net.feature_at(j, x);
      EXPECT_EQ(net.slice(0, j).forward(x), phi);
      EXPECT_EQ(net.slice(j, net.size()).forward(phi), net.forward(x));
    }
  }
  Network net({3});
  EXPECT_THROW(net.feature_at(1, Tensor({3})), PreconditionError);
}

// ---- gradients ---------------------------------------------------------------


TEST(GradientTest, ConstantObjectiveHasZeroGradient) {
  Rng rng(6);
  auto net = test::random_mixed_net(rng);
  auto x = random_tensor(rng, net.input_shape());
  auto g = gradients(net, x, constant_readout<float>(net.size(), 3.0));
  EXPECT_EQ(g.value, 3.0);
  for (float v : g.input.data()) EXPECT_EQ(v, 0.0f);
  for (const auto& layer : g.params)
    for (const auto& p : layer)
      for (float v : p.data()) EXPECT_EQ(v, 0.0f);
}

TEST(GradientTest, DenseLayerGradientIsWeightRow) {
  Rng rng(7);
  Network net({5});
  auto fc = test::random_dense(rng, 5, 3);
  net.add("fc", fc);
  auto x = random_tensor(rng, {5});
  auto g = gradients(net, x, element_readout<float>(1, 2));
  for (std::size_t i = 0; i < 5; ++i) EXPECT_FLOAT_EQ(g.input[i], fc.weight.at(2, i));
  EXPECT_EQ(g.params[0][1], Tensor::vector({0, 0, 1}));
  for (std::size_t i = 0; i < 5; ++i) EXPECT_FLOAT_EQ(g.params[0][0].at(2, i), x[i]);
}

TEST(GradientTest, InputAndParamGradientsMatchFiniteDifferences) {
  Rng rng(8);
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto net = network_cast<double>(test::random_mixed_net(rng, 3));
    const auto x = tensor_cast<double>(random_tensor(rng, net.input_shape(), 0.0, 1.0));
    const std::size_t target = rng.below(3);
    const auto readout = cross_entropy_readout<double>(net.size(), target);
    const auto g = gradients(net, x, readout);
    auto f = [&](const BasicTensor<double>& z) { return readout.eval(net.forward(z), nullptr); };
    const double h = 1e-3;
    for (int s = 0; s < 100; ++s) {
      const auto i = rng.below(x.size());
      auto xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      if (kink_pattern(net, xp) != kink_pattern(net, xm)) continue;
      const double fd = test::central_difference(f, x, i, h);
      ASSERT_LE(test::relative_error(fd, g.input[i]), 1e-4)
          << "trial " << trial << " coordinate " << i;
      ++checked;
    }
    // Parameters: perturb through a mutable copy of the network.
    for (int s = 0; s < 50; ++s) {
      const auto j = rng.below(net.size());
      auto params = parameters(net[j].layer);
      if (params.empty()) continue;
      const auto p = rng.below(params.size());
      const auto i = rng.below(params[p]->size());
      auto plus = net, minus = net;
      (*parameters(plus[j].layer)[p])[i] += h;
      (*parameters(minus[j].layer)[p])[i] -= h;
      if (kink_pattern(plus, x) != kink_pattern(minus, x)) continue;
      const double fd = (readout.eval(plus.forward(x), nullptr) -
                         readout.eval(minus.forward(x), nullptr)) / (2 * h);
      ASSERT_LE(test::relative_error(fd, g.params[j][p][i]), 1e-4)
          << "trial " << trial << " layer " << j << " param " << p;
      ++checked;
    }
  }
  EXPECT_GT(checked, 2000);
}

TEST(GradientTest, ConvReadoutGradientMatchesFiniteDifferences) {
  Rng rng(9);
  const auto net = network_cast<double>(test::random_mixed_net(rng));
  const auto x = tensor_cast<double>(random_tensor(rng, net.input_shape(), 0.0, 1.0));
  const auto s = net.shape_at(2);
  auto v = tensor_cast<double>(random_tensor(rng, {s[0], 3, 3}));
  for (auto red : {Reduction::at(1, 2), Reduction::mean()}) {
    const auto readout = conv_readout<double>(2, v, 1, 1, red);
    const auto g = input_gradient(net, x, readout);
    auto f = [&](const BasicTensor<double>& z) { return readout.eval(net.feature_at(2, z), nullptr); };
    for (std::size_t i = 0; i < x.size(); ++i) {
      auto xp = x, xm = x;
      xp[i] += 1e-3;
      xm[i] -= 1e-3;
      if (kink_pattern(net.slice(0, 2), xp) != kink_pattern(net.slice(0, 2), xm)) continue;
      EXPECT_LE(test::relative_error(test::central_difference(f, x, i, 1e-3), g[i]), 1e-4);
    }
  }
}

TEST(GradientTest, RejectsMismatchedReadout) {
  Network net({3});
  Readout<float> bad{0, [](const Tensor&, Tensor* g) {
                       if (g) *g = Tensor({4});
                       return 0.0;
                     }};
  EXPECT_THROW(gradients(net, Tensor({3}), bad), ShapeError);
}

// ---- receptive fields ----------------------------------------------------------

TEST(ReceptiveFieldTest, SingleKernelAtOrigin) {
  Rng rng(10);
  Network net({1, 8, 8});
  net.add("c", test::random_conv(rng, 1, 2, 3, 1, 1));
  EXPECT_EQ(receptive_field(net, 0, 0, 0), (ReceptiveField{-1, -1, 3, 3}));
}


TEST(ReceptiveFieldTest, TwoStackedConvsGiveFiveByFive) {
  Rng rng(11);
  Network net({1, 8, 8});
  net.add("c0", test::random_conv(rng, 1, 2, 3, 1, 1)).add("s", Sigmoid{});
  net.add("c1", test::random_conv(rng, 2, 2, 3, 1, 1));
  const auto rf = receptive_field(net, 2, 2, 2);
  EXPECT_EQ(rf, (ReceptiveField{0, 0, 5, 5}));
  EXPECT_EQ(sensitivity_box(net, 2, 2, 2, rng), rf.clipped(8, 8));
}

TEST(ReceptiveFieldTest, StrideDoublesTheJump) {
  Rng rng(12);
  Network net({1, 12, 12});
  net.add("c0", test::random_conv(rng, 1, 2, 3, 2, 1)).add("s", Sigmoid{});
  net.add("c1", test::random_conv(rng, 2, 2, 3, 1, 1));
  const auto rf = receptive_field(net, 2, 2, 3);
  // output (2,3) of c1 reads c0 rows 1..3, cols 2..4 -> input rows 1..7, cols 3..9
  EXPECT_EQ(rf, (ReceptiveField{1, 3, 7, 7}));
  EXPECT_EQ(sensitivity_box(net, 2, 2, 3, rng), rf.clipped(12, 12));
}

TEST(ReceptiveFieldTest, AgreesWithPixelSensitivityOnRandomArchitectures) {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t size = 9 + rng.below(6);
    Network net({1, size, size});
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
      if (d + 1 < depth) net.add("s" + std::to_string(d), Sigmoid{});
    }
    std::size_t j = net.size() - 1;
    if (!net.is<Conv2d<float>>(j)) --j;
    const auto out = net.shape_at(j + 1);
    const auto a = rng.below(out[1]), b = rng.below(out[2]);
    const auto box = sensitivity_box(net, j, a, b, rng);
    if (!box) {
      EXPECT_THROW(receptive_field(net, j, a, b), PreconditionError) << "trial " << trial;
      continue;
    }
    EXPECT_EQ(box, receptive_field(net, j, a, b).clipped(size, size)) << "trial " << trial;
  }
}

TEST(ReceptiveFieldTest, RejectsNonLocalPrefix) {
  Rng rng(14);
  Network net({2, 6, 6});
  net.add("se", test::random_sqex(rng, 2, 1, Gate::sigmoid));
  net.add("c", test::random_conv(rng, 2, 2, 3, 1, 1));
  EXPECT_THROW(receptive_field(net, 1, 0, 0), PreconditionError);
}

// ---- serialization ----------------------------------------------------------

TEST(SerializeTest, EveryLayerKindRoundTripsBitExactly) {
  Rng rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    auto net = test::random_mixed_net(rng);
    auto bytes = serialize(net);
    auto back = deserialize(bytes);
    EXPECT_EQ(serialize(back), bytes);
    auto x = random_tensor(rng, net.input_shape());
    EXPECT_EQ(back.forward(x), net.forward(x));
  }
  Network bn({3, 4, 4});
  bn.add("bn", test::random_bn(rng, 3)).add("se", test::random_sqex(rng, 3, 2, Gate::hard_sigmoid));
  auto bytes = serialize(bn);
  EXPECT_EQ(serialize(deserialize(bytes)), bytes);
}

TEST(SerializeTest, HandBuiltSingleLayerFile) {
  const std::string manifest =
      R"({"format":"SEALNET1","version":1,"rng":"x","input_shape":[2],)"
      R"("layers":[{"name":"fc","kind":"dense"}]})";
  Bytes bytes{'S', 'E', 'A', 'L', 'N', 'E', 'T', '1'};
  for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(manifest.size() >> (8 * i)));
  bytes.insert(bytes.end(), manifest.begin(), manifest.end());
  write_tensor(bytes, Tensor({3, 2}, 1.0f));
  write_tensor(bytes, Tensor({3}, 0.5f));
  auto net = deserialize(bytes);
  ASSERT_EQ(net.size(), 1u);
  const auto& fc = net.get<Dense<float>>(0);
  EXPECT_EQ(fc.weight.shape(), (Shape{3, 2}));
  EXPECT_EQ(net.forward(Tensor({2}, 1.0f)), Tensor({3}, 2.5f));
}

TEST(SerializeTest, CorruptFilesAreRejected) {
  Rng rng(16);
  auto bytes = serialize(test::random_mixed_net(rng));
  auto bad_len = bytes;
  bad_len[8] = 0xff;
  bad_len[12] = 0x7f;
  EXPECT_THROW(deserialize(bad_len), FormatError);
  auto short_len = bytes;
  short_len[8] = static_cast<std::uint8_t>(short_len[8] - 3);
  EXPECT_THROW(deserialize(short_len), FormatError);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 10);
  EXPECT_THROW(deserialize(truncated), FormatError);
  auto magic = bytes;
  magic[3] = 'X';
  EXPECT_THROW(deserialize(magic), FormatError);

  Network fc({2});
  fc.add("fc", test::random_dense(rng, 2, 2));
  auto c = decode_container(kNetMagic, serialize(fc), [](const json&) { return 2; });
  c.manifest["version"] = 99;
  EXPECT_THROW(deserialize(encode_container(kNetMagic, c)), FormatError);
  c.manifest["version"] = 1;
  c.tensors[1] = Tensor({5});
  EXPECT_THROW(deserialize(encode_container(kNetMagic, c)), ShapeError);
}

// ---- least-l1 neuron --------------------------------------------------------

TEST(MinL1Test, ZeroRowWinsAndTiesGoLow) {
  Network net({3});
  Dense<float> fc{Tensor({4, 3}, std::vector<float>{1, 1, 1, 0.5f, -0.5f, 0, 0, 0, 0, 1, 0, 0}),
                  Tensor({4})};
  net.add("fc", fc);
  EXPECT_EQ(min_l1_neuron(net, 0), 2u);
  fc.weight.at(2, 0) = 1.0f;
  net[0].layer = fc;
  EXPECT_EQ(min_l1_neuron(net, 0), 1u);  // rows 1, 2, 3 all have norm 1
}

TEST(MinL1Test, MatchesExhaustiveScan) {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    Network net({3, 6, 6});
    net.add("c", test::random_conv(rng, 3, 2 + rng.below(10), 3, 1, 1));
    const auto& w = net.get<Conv2d<float>>(0).weight;
    std::size_t best = 0;
    double best_norm = 1e300;
    for (std::size_t k = 0; k < w.dim(0); ++k) {
      double s = 0;
      for (std::size_t i = 0; i < 27; ++i) s += std::abs(w[k * 27 + i]);
      if (s < best_norm) best_norm = s, best = k;
    }
    EXPECT_EQ(min_l1_neuron(net, 0), best);
  }
  Network relu({3});
  relu.add("r", ReLU{});
  EXPECT_THROW(min_l1_neuron(relu, 0), PreconditionError);
}

TEST(SurgeryTest, SwapChannelsPreservesFunction) {
  Rng rng(18);
  for (int trial = 0; trial < 20; ++trial) {
    auto net = test::random_mixed_net(rng);
    auto x = random_tensor(rng, net.input_shape());
    const auto before = net.forward(x);
    const auto c = net.get<Conv2d<float>>(0).out_channels();
    swap_channels(net, 0, 0, c - 1);
    std::size_t j = 1;
    while (!net.is<Conv2d<float>>(j)) ++j;
    swap_channels(net, j, 0, 1);
    const auto after = net.forward(x);
    for (std::size_t i = 0; i < before.size(); ++i) EXPECT_NEAR(after[i], before[i], 1e-5);
  }
}

}  // namespace
}  // namespace seal::nn
