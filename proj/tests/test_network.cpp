#include <gtest/gtest.h>

#include "locallearn/channel.hpp"
#include "locallearn/network.hpp"

using namespace locallearn;

namespace {

LayeredNet random_net(std::vector<int> sizes, std::vector<TransferFunction> f, std::uint64_t seed) {
  LayeredNet net(std::move(sizes), std::move(f));
  Rng rng = make_rng(seed);
  net.randomize_normal(rng, 0.5);
  return net;
}

}  // namespace

TEST(Network, ForwardShapesAndBias) {
  LayeredNet net({2, 1}, {linear_transfer()});
  net.weights(1) << 0.5, 2.0, -1.0;
  const Activations a = forward(net, Vec::Ones(2));
  ASSERT_EQ(a.O.size(), 2u);
  EXPECT_DOUBLE_EQ(a.output()(0), 1.5);
}

TEST(Network, ParametersRoundTrip) {
  LayeredNet net = random_net({3, 4, 2}, {tanh_transfer()}, 1);
  const Vec p = net.parameters();
  EXPECT_EQ(p.size(), net.parameter_count());
  EXPECT_EQ(p.size(), 4 * 4 + 2 * 5);
  LayeredNet copy = net;
  copy.set_parameters(Vec::Zero(p.size()));
  copy.set_parameters(p);
  EXPECT_TRUE(copy.parameters().isApprox(p));
}

TEST(Network, BackpropMatchesFiniteDifferences) {
  const LayeredNet net = random_net({4, 5, 3, 2}, {tanh_transfer(), logistic_transfer(), linear_transfer()}, 2);
  const Vec x = Vec::LinSpaced(4, -1, 1);
  const Vec t = Vec::LinSpaced(2, 0.2, 0.7);
  const Vec g = backprop_gradient(net, x, t);
  const Vec fd = finite_difference_gradient(net, x, t);
  EXPECT_LT(max_relative_error(g, fd), 1e-6);
}

TEST(Network, CrossEntropyGradient) {
  const LayeredNet net = random_net({3, 4, 2}, {tanh_transfer(), logistic_transfer()}, 3);
  const Vec x = Vec::LinSpaced(3, -0.5, 0.5);
  const Vec t = (Vec(2) << 1.0, 0.0).finished();
  const Vec g = backprop_gradient(net, x, t, Loss::cross_entropy);
  const Vec fd = finite_difference_gradient(net, x, t, 1e-5, Loss::cross_entropy);
  EXPECT_LT(max_relative_error(g, fd), 1e-6);
}

TEST(Network, HiddenLayerTargetsAddToGradient) {
  const LayeredNet net = random_net({3, 4, 2}, {tanh_transfer()}, 4);
  const Vec x = Vec::LinSpaced(3, -1, 1);
  LayerTargets targets(3);
  targets[1] = Vec::Constant(4, 0.3);
  targets[2] = Vec::Constant(2, -0.1);
  const Vec g = backprop_gradient(net, x, targets);
  const Vec fd = finite_difference_gradient(net, x, targets);
  EXPECT_LT(max_relative_error(g, fd), 1e-6);
}

TEST(Network, SharedWeightsCollapseGradients) {
  Mat R = Mat::Random(3, 3) * 0.4;
  R.diagonal().setZero();
  const LayeredNet net = unfold(R, 3);
  EXPECT_EQ(recurrent_weights(net).rows(), 3);
  const Vec x = Vec::LinSpaced(3, -0.5, 0.5);
  LayerTargets targets(4);
  targets[2] = Vec::Constant(3, 0.2);
  targets[3] = Vec::Constant(3, -0.2);
  const Vec g = backprop_gradient(net, x, targets);
  const Vec fd = finite_difference_gradient(net, x, targets);
  EXPECT_EQ(g.size(), net.parameter_count());
  EXPECT_LT(max_relative_error(g, fd), 1e-6);
}

TEST(Network, OpCounterCountsForwardWork) {
  const LayeredNet net = random_net({3, 2}, {tanh_transfer()}, 5);
  OpCounter ops;
  forward(net, Vec::Ones(3), &ops);
  EXPECT_EQ(ops.multiply_add, 8);
  EXPECT_EQ(ops.transfer, 2);
}

TEST(Network, RejectsBadShapes) {
  EXPECT_THROW(LayeredNet({3}, {linear_transfer()}), Error);
  EXPECT_THROW(LayeredNet({3, 0}, {linear_transfer()}), Error);
  const LayeredNet net({3, 2}, {linear_transfer()});
  EXPECT_THROW(forward(net, Vec::Ones(2)), Error);
}
