#include <gtest/gtest.h>

#include <cmath>

#include "locallearn/channel.hpp"

using namespace locallearn;

namespace {

ChannelAlgorithm algo(ChannelKind k, int K = 1) {
  ChannelAlgorithm a;
  a.kind = k;
  a.K = K;
  return a;
}

}  // namespace

TEST(Channel, NamesRoundTrip) {
  for (auto k : channel_kinds()) EXPECT_EQ(channel_kind_from_string(to_string(k)), k);
  EXPECT_THROW(channel_kind_from_string("SGD"), Error);
  EXPECT_EQ(channel_kinds().size(), 7u);
}

TEST(Channel, BenchNetHasRequestedSize) {
  EXPECT_EQ(bench_net(64, 1).parameter_count(), 64);
  EXPECT_EQ(bench_net(65, 1).parameter_count(), 65);
  EXPECT_EQ(bench_net(64, 1).sizes(), (std::vector<int>{7, 7, 1}));
}

TEST(Channel, BackpropStepIsSteepestDescent) {
  const LayeredNet net = bench_net(64, 2);
  const ChannelExample ex = bench_example(net, 3);
  const ChannelReport r = run(algo(ChannelKind::BP), net, ex, 4);
  EXPECT_NEAR(r.O_emp, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(r.I_W, 64.0);
  EXPECT_NEAR(r.step.norm(), 1.0, 1e-12);
}

TEST(Channel, ChannelGradientMatchesFiniteDifferences) {
  const LayeredNet net = bench_net(36, 5);
  const ChannelExample ex = bench_example(net, 6);
  const Vec g = channel_gradient(net, ex);
  const Vec fd = finite_difference_gradient(net, ex.input, ex.targets);
  EXPECT_LT(max_relative_error(g, fd), 1e-6);
}

TEST(Channel, LocalRegressionRecoversGradient) {
  const LayeredNet net = bench_net(36, 7);
  const ChannelExample ex = bench_example(net, 8);
  EXPECT_NEAR(run(algo(ChannelKind::PWLR), net, ex, 1).O_emp, 1.0, 1e-5);
  EXPECT_NEAR(run(algo(ChannelKind::PALR), net, ex, 1).O_emp, 1.0, 1e-5);
}

TEST(Channel, LocalBinaryStepUsesGradientSigns) {
  const LayeredNet net = bench_net(36, 9);
  const ChannelExample ex = bench_example(net, 10);
  const ChannelReport r = run(algo(ChannelKind::PWLB), net, ex, 1);
  const Vec g = channel_gradient(net, ex);
  for (Eigen::Index i = 0; i < g.size(); ++i)
    if (std::abs(g(i)) > 1e-8) EXPECT_LE(r.step(i) * g(i), 0.0) << i;
  EXPECT_GT(r.O_emp, 0.0);
}

TEST(Channel, GlobalPerturbationImprovesOnAverage) {
  const LayeredNet net = bench_net(100, 11);
  const ChannelExample ex = bench_example(net, 12);
  double mean_abs = 0;
  const int trials = 400;
  for (int t = 0; t < trials; ++t) {
    const ChannelReport r = run(algo(ChannelKind::PWGB), net, ex, 100 + t);
    EXPECT_GE(r.O_emp, -1e-9);
    mean_abs += std::abs(r.O_emp) / trials;
  }
  EXPECT_NEAR(mean_abs, pwgb_constant / std::sqrt(100.0), 0.015);
}

TEST(Channel, RepeatedPerturbationsBeatSingleOnes) {
  const LayeredNet net = bench_net(100, 13);
  const ChannelExample ex = bench_example(net, 14);
  double one = 0, many = 0;
  for (int t = 0; t < 200; ++t) {
    one += run(algo(ChannelKind::PWGBK, 1), net, ex, t).O_emp;
    many += run(algo(ChannelKind::PWGBK, 16), net, ex, t).O_emp;
  }
  EXPECT_GT(many, 1.5 * one);
}

TEST(Channel, RunsAreSeeded) {
  const LayeredNet net = bench_net(49, 15);
  const ChannelExample ex = bench_example(net, 16);
  for (auto k : channel_kinds()) {
    const auto a = run(algo(k, 4), net, ex, 9);
    const auto b = run(algo(k, 4), net, ex, 9);
    EXPECT_EQ(a.O_emp, b.O_emp) << to_string(k);
    EXPECT_EQ(a.ops.total(), b.ops.total()) << to_string(k);
  }
}

TEST(Channel, TableFormulas) {
  const double W = 1e4, N = 100, K = 16;
  const int D = 64;
  for (const auto& r : table8(W, N, K, D)) {
    if (r.algorithm == "BP") {
      EXPECT_EQ(r.R, D);
      EXPECT_EQ(r.O, 1.0);
    }
    if (r.algorithm == "PWGB") {
      EXPECT_DOUBLE_EQ(r.R, 1 / W);
      EXPECT_DOUBLE_EQ(r.O, pwgb_constant / 100);
    }
    if (r.algorithm == "PWLR") EXPECT_DOUBLE_EQ(r.R, D / W);
    if (r.algorithm == "PALR") EXPECT_DOUBLE_EQ(r.R, D / N);
    if (r.algorithm == "PWGRK") EXPECT_DOUBLE_EQ(r.O, std::sqrt(K / W));
    EXPECT_LE(r.R, D) << r.algorithm;
    EXPECT_LE(r.O, 1.0) << r.algorithm;
  }
  EXPECT_TRUE(dominance_check({16, 1e4}, {4, 100}, {1, 16}, {8, 64}).empty());
  EXPECT_NE(table8_markdown(table8(W, N, K)).find("| PWGB |"), std::string::npos);
}

TEST(Channel, FitLineExact) {
  const LinearFit f = fit_line({1, 2, 3, 4}, {3, 5, 7, 9});
  EXPECT_DOUBLE_EQ(f.slope, 2.0);
  EXPECT_DOUBLE_EQ(f.intercept, 1.0);
  EXPECT_DOUBLE_EQ(f.r2, 1.0);
  EXPECT_THROW(fit_line({1, 1}, {2, 3}), Error);
}

TEST(Channel, ScalingSlopeNearMinusHalf) {
  ScalingSpec s;
  s.algorithm = algo(ChannelKind::PWGB);
  s.sizes = {64, 256, 1024};
  s.trials = 300;
  s.seed = 3;
  const ScalingResult r = scaling_study(s);
  EXPECT_EQ(r.points.size(), 3u);
  EXPECT_EQ(r.trials.size(), 900u);
  EXPECT_NEAR(r.fit.slope, -0.5, 0.1);
}

TEST(Channel, UnfoldedNetSharesWeights) {
  Mat R(3, 3);
  R << 0, 0.2, -0.1, 0.3, 0, 0.4, -0.2, 0.1, 0;
  const LayeredNet net = unfold(R, 4);
  EXPECT_EQ(net.parameter_count(), 6);
  EXPECT_TRUE(recurrent_weights(net).isApprox(R));
  R(0, 0) = 1;
  EXPECT_THROW(unfold(R, 2), Error);
}

TEST(Channel, InvalidAlgorithmRejected) {
  EXPECT_THROW(algo(ChannelKind::PWGBK, 0).validate(), Error);
  ChannelAlgorithm a;
  a.epsilon = 0;
  EXPECT_THROW(a.validate(), Error);
}
