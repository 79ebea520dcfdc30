#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "sats/network.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

namespace sats {
namespace {

constexpr double kEps = 1e-4;
constexpr double kTolerance = 1e-4;

struct GradCase {
  bool expanded;
  bool weighted;
};

class GradientCheck : public ::testing::TestWithParam<GradCase> {};

TEST_P(GradientCheck, AnalyticMatchesCentralDifference) {
  const GradCase gc = GetParam();
  const int known = 3;
  const NetworkParams params = testing::random_network(17, known, gc.expanded);
  Rng rng(23);
  const RgbImage image = testing::random_rgb(rng, 6, 5);
  const LabelMap label = testing::random_labels(rng, 6, 5, params.num_classes(), 0.2);
  const double q = 0.7;

  auto loss = [&](const NetworkParams& p) {
    return gc.weighted ? weighted_target_loss_and_grad(p, image, label, q).loss
                       : supervised_loss_and_grad(p, image, label).loss;
  };
  const LossAndGrad lg = gc.weighted ? weighted_target_loss_and_grad(params, image, label, q)
                                     : supervised_loss_and_grad(params, image, label);
  ASSERT_TRUE(lg.grads.same_layout(params));
  ASSERT_GE(params.parameter_count(), 100u);

  double worst = 0.0;
  for (std::size_t i = 0; i < params.parameter_count(); ++i) {
    const double numeric = oracle::central_difference(params, i, kEps, loss);
    const double err = oracle::relative_error(lg.grads.flat(i), numeric);
    worst = std::max(worst, err);
    EXPECT_LT(err, kTolerance) << "parameter " << i << " analytic " << lg.grads.flat(i) << " numeric " << numeric;
  }
  RecordProperty("worst_relative_error", std::to_string(worst));
}

INSTANTIATE_TEST_SUITE_P(Heads, GradientCheck,
                         ::testing::Values(GradCase{false, false}, GradCase{true, false}, GradCase{true, true}),
                         [](const auto& info) {
                           return std::string(info.param.expanded ? "KPlus1" : "K") +
                                  (info.param.weighted ? "Weighted" : "Supervised");
                         });

TEST(Forward, ProbabilitiesAreNormalized) {
  Rng rng(1);
  const NetworkParams p = testing::random_network(3, 3, true);
  const ProbMap probs = forward(p, testing::random_rgb(rng, 9, 7));
  EXPECT_EQ(probs.channels(), 4);
  EXPECT_EQ(probs.width(), 9);
  EXPECT_LT(probs.normalization_error(), 1e-12);
}

TEST(Forward, ZeroHeadGivesUniformOutput) {
  NetworkParams p = NetworkParams::initialize({}, 3, 5);
  p = expand_head(p);
  for (auto idx : {NetworkParams::kHeadWeight, NetworkParams::kHeadBias}) {
    for (auto& v : p.tensor(idx).values) v = 0.0;
  }
  Rng rng(2);
  const ProbMap probs = forward(p, testing::random_rgb(rng, 8, 8));
  for (double v : probs.values()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Forward, DeterministicAndFullyConvolutional) {
  Rng rng(3);
  const NetworkParams p = testing::random_network(4, 3, false);
  const RgbImage img = testing::random_rgb(rng, 12, 10);
  EXPECT_EQ(forward(p, img), forward(p, img));
  EXPECT_EQ(forward(p, RgbImage(1, 1)).num_pixels(), 1u);
}

TEST(Forward, NonFiniteWeightNamesLayer) {
  NetworkParams p = NetworkParams::initialize({}, 3, 5);
  p.tensor(NetworkParams::kConv2Weight).values[0] = std::numeric_limits<double>::infinity();
  Rng rng(4);
  try {
    forward(p, testing::random_rgb(rng, 4, 4));
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("conv2"), std::string::npos) << e.what();
  }
}

TEST(Loss, AllIgnoreIsZero) {
  Rng rng(5);
  const NetworkParams p = testing::random_network(6, 3, true);
  const LossAndGrad lg = supervised_loss_and_grad(p, testing::random_rgb(rng, 5, 5), LabelMap(5, 5, kIgnoreIndex));
  EXPECT_EQ(lg.loss, 0.0);
  EXPECT_EQ(lg.counted_pixels, 0u);
  EXPECT_EQ(lg.grads, NetworkParams::zeros_like(p));
}

TEST(Loss, ZeroWeightIsZero) {
  Rng rng(6);
  const NetworkParams p = testing::random_network(6, 3, true);
  const LossAndGrad lg =
      weighted_target_loss_and_grad(p, testing::random_rgb(rng, 5, 5), testing::random_labels(rng, 5, 5, 4), 0.0);
  EXPECT_EQ(lg.loss, 0.0);
  EXPECT_EQ(lg.grads, NetworkParams::zeros_like(p));
}

TEST(Loss, WeightScalesLinearly) {
  Rng rng(7);
  const NetworkParams p = testing::random_network(6, 3, true);
  const RgbImage img = testing::random_rgb(rng, 5, 5);
  const LabelMap lbl = testing::random_labels(rng, 5, 5, 4);
  const double full = supervised_loss_and_grad(p, img, lbl).loss;
  EXPECT_NEAR(weighted_target_loss_and_grad(p, img, lbl, 0.25).loss, 0.25 * full, 1e-12);
}

TEST(Loss, UniformPredictionGivesLogC) {
  NetworkParams p = expand_head(NetworkParams::initialize({}, 3, 8));
  for (auto idx : {NetworkParams::kHeadWeight, NetworkParams::kHeadBias}) {
    for (auto& v : p.tensor(idx).values) v = 0.0;
  }
  Rng rng(8);
  const auto lg = supervised_loss_and_grad(p, testing::random_rgb(rng, 4, 4), testing::random_labels(rng, 4, 4, 4));
  EXPECT_NEAR(lg.loss, std::log(4.0), 1e-12);
}

TEST(Loss, LabelOutsideHeadThrows) {
  const NetworkParams p = NetworkParams::initialize({}, 3, 9);  // K outputs only
  EXPECT_THROW(supervised_loss_and_grad(p, RgbImage(2, 2), LabelMap(2, 2, 3)), ValidationError);
}

TEST(Initialize, DeterministicPerSeed) {
  EXPECT_EQ(NetworkParams::initialize({}, 3, 1), NetworkParams::initialize({}, 3, 1));
  EXPECT_NE(NetworkParams::initialize({}, 3, 1), NetworkParams::initialize({}, 3, 2));
}

TEST(ExpandHead, PreservesKnownRowsAndDrawsUnknownRow) {
  const NetworkParams p = testing::random_network(10, 3, false);
  const NetworkParams e = expand_head(p, 77);
  EXPECT_TRUE(e.expanded());
  EXPECT_EQ(e.num_classes(), 4);
  const int f = p.shape().features;
  const auto& w0 = p.tensor(NetworkParams::kHeadWeight).values;
  const auto& w1 = e.tensor(NetworkParams::kHeadWeight).values;
  for (int i = 0; i < 3 * f; ++i) EXPECT_EQ(w0[i], w1[i]);
  double sq = 0.0;
  for (int i = 3 * f; i < 4 * f; ++i) sq += w1[i] * w1[i];
  EXPECT_GT(sq, 0.0);
  EXPECT_EQ(e.tensor(NetworkParams::kHeadBias).values[3], 0.0);
  EXPECT_EQ(expand_head(p, 77), e);
  EXPECT_NE(expand_head(p, 78), e);
  for (auto idx : {NetworkParams::kConv1Weight, NetworkParams::kConv1Bias, NetworkParams::kConv2Weight,
                   NetworkParams::kConv2Bias, NetworkParams::kConv3Weight, NetworkParams::kConv3Bias}) {
    EXPECT_EQ(e.tensor(idx), p.tensor(idx));
  }
  EXPECT_THROW(expand_head(e), ValidationError);
}

TEST(ExpandHead, KnownLogitsUnchanged) {
  Rng rng(11);
  const NetworkParams p = testing::random_network(12, 3, false);
  const RgbImage img = testing::random_rgb(rng, 6, 6);
  const Logits a = forward_logits(p, img);
  const Logits b = forward_logits(expand_head(p), img);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < 6; ++y) {
      for (int x = 0; x < 6; ++x) EXPECT_EQ(a.at(c, x, y), b.at(c, x, y));
    }
  }
}

TEST(EmaUpdate, Cases) {
  const NetworkParams teacher = testing::random_network(13, 3, true);
  const NetworkParams student = testing::random_network(14, 3, true);
  EXPECT_EQ(ema_update(teacher, student, 1.0), teacher);
  EXPECT_EQ(ema_update(teacher, student, 0.0), student);
  const NetworkParams same = ema_update(teacher, teacher, 0.3);
  for (std::size_t i = 0; i < teacher.parameter_count(); ++i) EXPECT_NEAR(same.flat(i), teacher.flat(i), 1e-15);
  const NetworkParams mid = ema_update(teacher, student, 0.999);
  for (std::size_t i = 0; i < teacher.parameter_count(); ++i) {
    EXPECT_DOUBLE_EQ(mid.flat(i), 0.999 * teacher.flat(i) + 0.001 * student.flat(i));
  }
  EXPECT_THROW(ema_update(teacher, student, 1.5), ValidationError);
  EXPECT_THROW(ema_update(teacher, testing::random_network(14, 3, false), 0.5), ValidationError);
}

TEST(EmaUpdate, StaysInsideInterval) {
  Rng rng(15);
  const NetworkParams t = testing::random_network(16, 3, true);
  const NetworkParams s = testing::random_network(17, 3, true);
  for (int trial = 0; trial < 50; ++trial) {
    const double alpha = uniform_real(rng, 0.0, 1.0);
    const NetworkParams out = ema_update(t, s, alpha);
    for (std::size_t i = 0; i < t.parameter_count(); ++i) {
      EXPECT_GE(out.flat(i), std::min(t.flat(i), s.flat(i)) - 1e-15);
      EXPECT_LE(out.flat(i), std::max(t.flat(i), s.flat(i)) + 1e-15);
    }
  }
}

}  // namespace
}  // namespace sats
