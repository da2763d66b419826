// Copyright 2026 The seal Authors
// SPDX-License-Identifier: Apache-2.0

#include "seal/bounds.hpp"

#include <gtest/gtest.h>

#include <numbers>

#include "oracles.hpp"

namespace seal {
namespace {

using test::dkw_sup_oracle;

MomentEstimate moments(std::size_t d, double cov_trace, double mu_norm = 0.0) {
  return {d, mu_norm, cov_trace, 0};
}

TEST(GeometricBoundTest, ThreeDimensionalClosedForm) {
  const auto c = geometric_bound(moments(3, 1.0), 1.0);
  EXPECT_NEAR(c.value, std::numbers::pi / 16, 1e-9);
  EXPECT_NEAR(c.value, 0.19634954084936207, 1e-12);
  EXPECT_FALSE(c.clamped);
}

TEST(GeometricBoundTest, TwoDimensionalClosedForm) {
  EXPECT_NEAR(geometric_bound(moments(2, 1.0, 0.5), 1.5).value, 0.2122065907891938, 1e-12);
}

TEST(GeometricBoundTest, GammaRatioSatisfiesTheRecurrence) {
  // r(d) = Gamma(d/2) / Gamma((d+1)/2) obeys r(d) r(d+1) = 2 / d.
  auto r = [](double d) {
    return std::sqrt(sphere_cap_factor(static_cast<std::size_t>(d)) * (d + 1) / (d - 1));
  };
  for (double d : {2.0, 3.0, 10.0, 257.0, 4096.0, 1e5, 1e6}) {
    EXPECT_NEAR(r(d) * r(d + 1) * d / 2, 1.0, 1e-9) << "d " << d;
  }
}

TEST(GeometricBoundTest, DecreasesInDeltaAndDimension) {
  double prev = 2.0;
  for (double delta = 1.0; delta < 200.0; delta *= 1.5) {
    const double b = geometric_bound(moments(16, 4.0), delta).raw;
    EXPECT_LT(b, prev);
    prev = b;
  }
  prev = 2.0;
  for (std::size_t d : {2, 4, 8, 64, 512, 4096}) {
    const double b = geometric_bound(moments(d, 4.0), 3.0).raw;
    EXPECT_LT(b, prev);
    prev = b;
  }
}

TEST(GeometricBoundTest, VacuousValuesAreClamped) {
  const auto c = geometric_bound(moments(4, 100.0), 1.0);
  EXPECT_EQ(c.value, 1.0);
  EXPECT_GT(c.raw, 1.0);
  EXPECT_TRUE(c.clamped);
}

TEST(GeometricBoundTest, HypothesisViolationsAreRejected) {
  EXPECT_THROW(geometric_bound(moments(3, 1.0, 2.0), 2.0), PreconditionError);
  EXPECT_THROW(geometric_bound(moments(1, 1.0), 2.0), PreconditionError);
  EXPECT_THROW(geometric_bound(moments(3, -1.0), 2.0), PreconditionError);
}

TEST(DkwBoundTest, MatchesGridOracle) {
  const auto c = dkw_bound(2000, 0);
  EXPECT_NEAR(c.value, 0.04318921881845428, 1e-6);
  EXPECT_NEAR(c.value, 1 - dkw_sup_oracle(2000, 0), 1e-3);
  EXPECT_NEAR(dkw_bound(2000, 40).value, 0.06312371334674727, 1e-6);
  EXPECT_NEAR(dkw_bound(100, 0).value, 0.16868629354274733, 1e-6);
}

TEST(DkwBoundTest, AllExceedancesGiveNearOne) {
  const auto c = dkw_bound(50, 50);
  EXPECT_NEAR(c.value, 0.9714878188405827, 1e-6);
  EXPECT_LE(c.value, 1.0);
}

TEST(DkwBoundTest, DecreasesInSampleCount) {
  const double frozen[] = {0.16868629354274733, 0.05945580757112634, 0.020430100008203667,
                           0.006922900064134985};
  double prev = 1.0;
  std::size_t m = 100;
  for (double f : frozen) {
    const double b = dkw_bound(m, 0).value;
    EXPECT_NEAR(b, f, 1e-6) << "m " << m;
    EXPECT_LT(b, prev);
    prev = b;
    m *= 10;
  }
}

TEST(DkwBoundTest, MonotoneInExceedancesAndRate) {
  double prev = 0.0;
  for (std::size_t n = 0; n <= 200; n += 20) {
    const double b = dkw_bound(1000, n).value;
    EXPECT_GE(b, prev);
    prev = b;
  }
  EXPECT_LE(dkw_bound(4000, 40).value, dkw_bound(1000, 10).value);
}

TEST(DkwBoundTest, RejectsBadCounts) {
  EXPECT_THROW(dkw_bound(10, 11), PreconditionError);
  EXPECT_THROW(dkw_bound(0, 0), PreconditionError);
}

TEST(FinetuneBoundTest, ReducesToGeometricBound) {
  const auto est = moments(3, 1.0);
  EXPECT_EQ(finetune_bound(est, 1.0, 0.0).value, geometric_bound(est, 1.0).value);
  EXPECT_NEAR(finetune_bound(est, 2.0, 1.0).value, std::numbers::pi / 16, 1e-12);
  EXPECT_LT(finetune_bound(est, 5.0, 0.5).raw, finetune_bound(est, 5.0, 1.0).raw);
  EXPECT_THROW(finetune_bound(est, 2.0, 2.0), PreconditionError);
  EXPECT_THROW(finetune_bound(est, 2.0, -0.1), PreconditionError);
}

TEST(CollisionBoundTest, ClosedForm) {
  EXPECT_EQ(collision_bound(100, 0.0), 1.0);
  EXPECT_NEAR(collision_bound(100, 0.5), 3.726653172078671e-06, 1e-12);
  EXPECT_NEAR(collision_bound(100, 0.5), std::exp(-12.5), 1e-12);
}

TEST(CollisionBoundTest, SpherePairsRespectTheBound) {
  Rng rng(1);
  const double theta = 0.2, bound = collision_bound(100, theta);
  int hits = 0;
  const int pairs = 10000;
  for (int i = 0; i < pairs; ++i) {
    const auto a = sample_unit_sphere<double>(rng, 100);
    const auto b = sample_unit_sphere<double>(rng, 100);
    hits += dot(a, b) > theta;
  }
  EXPECT_LE(static_cast<double>(hits) / pairs, bound);
  int far = 0;
  for (int i = 0; i < pairs; ++i) {
    far += dot(sample_unit_sphere<double>(rng, 100), sample_unit_sphere<double>(rng, 100)) > 0.5;
  }
  EXPECT_EQ(far, 0);
}

TEST(MomentTest, IdenticalSamplesHaveZeroSpread) {
  const Tensor x = Tensor::vector({3.0f, 4.0f});
  const std::vector<Tensor> xs(10, x);
  const auto est = estimate_moments(xs);
  EXPECT_EQ(est.cov_trace, 0.0);
  EXPECT_NEAR(est.mu_norm, 5.0, 1e-12);
  EXPECT_EQ(est.d, 2u);
  EXPECT_EQ(est.samples, 10u);
}

TEST(MomentTest, StandardGaussianTrace) {
  Rng rng(2);
  std::vector<Tensor> xs;
  for (int i = 0; i < 100000; ++i) {
    Tensor x({50});
    for (auto& e : x.data()) e = static_cast<float>(rng.normal());
    xs.push_back(std::move(x));
  }
  const auto est = estimate_moments(xs);
  EXPECT_NEAR(est.cov_trace, 50.0, 1.0);
  EXPECT_LE(est.mu_norm, 0.05);
  EXPECT_TRUE(geometric_bound(est, 10.0).estimated_moments);
}

TEST(MomentTest, SingleSampleIsAnError) {
  const std::vector<Tensor> xs{Tensor({3})};
  EXPECT_THROW(estimate_moments(xs), NumericError);
}

TEST(CertificateTest, JsonCarriesInputsAndProvenance) {
  auto c = dkw_bound(2000, 3);
  c.seed = 17;
  const auto j = c.to_json();
  EXPECT_EQ(j.at("kind"), "dkw");
  EXPECT_EQ(j.at("inputs").at("m"), 2000);
  EXPECT_EQ(j.at("inputs").at("n"), 3);
  EXPECT_EQ(j.at("seed"), 17);
  EXPECT_EQ(j.at("clamped"), false);
  EXPECT_EQ(j.at("toolkit"), kToolkitVersion);
}

TEST(BonferroniTest, ScalesAndClamps) {
  EXPECT_DOUBLE_EQ(bonferroni(1e-6, 1000), 1e-3);
  EXPECT_EQ(bonferroni(0.1, 100), 1.0);
}

}  // namespace
}  // namespace seal
