#include <gtest/gtest.h>

#include "locallearn/hopfield.hpp"

using namespace locallearn;

TEST(Hopfield, StatesAndSpins) {
  const State s = state_from_spins({1, -1, -1, 1});
  EXPECT_EQ(s, 0b1001u);
  EXPECT_EQ(spins(s, 4), (std::vector<int>{1, -1, -1, 1}));
  EXPECT_EQ(state_string(s, 4), "+--+");
  EXPECT_EQ(hamming(0b1001u, 0b0011u), 2);
}

TEST(Hopfield, HebbStorageIsSymmetricWithZeroDiagonal) {
  const HopfieldNet net = store(std::vector<std::vector<int>>{{1, 1, -1, -1}, {1, -1, 1, -1}});
  EXPECT_EQ(net.weights, net.weights.transpose());
  EXPECT_TRUE((net.weights.diagonal().array() == 0).all());
  EXPECT_EQ(net.weights(0, 3), -2);
  EXPECT_EQ(net.weights(0, 1), 0);
}

TEST(Hopfield, MemoriesAreEnergyMinima) {
  const std::vector<State> mem{0b0011, 0b0101};
  const HopfieldNet net = store(mem, 4);
  const HypercubeOrientation o = orientation(net);
  EXPECT_EQ(o.edge_count(), 32u);
  EXPECT_TRUE(acyclic(o));
  for (State m : mem) EXPECT_TRUE(is_sink(o, m));
}

TEST(Hopfield, DescentReachesSink) {
  const HopfieldNet net = store(std::vector<std::vector<int>>{{1, 1, 1, -1, -1, -1}});
  const HypercubeOrientation o = orientation(net);
  Rng rng = make_rng(4);
  for (State s = 0; s < 64; ++s) {
    const State end = descend(net, s, rng);
    EXPECT_TRUE(is_sink(o, end)) << s;
    EXPECT_LE(energy(net, end), energy(net, s));
  }
}

TEST(Hopfield, OrientationBetweenIsAntisymmetric) {
  const HopfieldNet net = store(std::vector<State>{0b101}, 3);
  const HypercubeOrientation o = orientation(net);
  EXPECT_EQ(o.between(0b000, 0b001), -o.between(0b001, 0b000));
  EXPECT_THROW(o.between(0b000, 0b011), Error);
}

TEST(Hopfield, IsometryCountsAndValidation) {
  EXPECT_EQ(all_isometries(3).size(), 48u);
  Isometry h = Isometry::identity(3);
  EXPECT_EQ(h.apply(0b101), 0b101u);
  h.flips = {-1, 1, 1};
  EXPECT_EQ(h.apply(0b101), 0b100u);
  h.perm = {0, 0, 1};
  EXPECT_THROW(h.validate(), Error);
}

TEST(Hopfield, IsometriesPreserveDistance) {
  Rng rng = make_rng(5);
  for (int t = 0; t < 50; ++t) {
    const Isometry h = random_isometry(6, rng);
    const State a = static_cast<State>(rng() & 63u), b = static_cast<State>(rng() & 63u);
    EXPECT_EQ(hamming(h.apply(a), h.apply(b)), hamming(a, b));
  }
}

TEST(Hopfield, HebbCommutesWithIsometries) {
  const auto s = exhaustive_commutation(3, {}, 2);
  EXPECT_EQ(s.violations, 0);
  EXPECT_EQ(s.pairs, 255 * 48);
  EXPECT_EQ(random_commutation(7, 200, 3).violations, 0);
}

TEST(Hopfield, OtherSymmetricRulesBreakCommutation) {
  for (const SymmetricRule rule : {SymmetricRule{1, 1, 0}, SymmetricRule{1, 0, 1}, SymmetricRule{0, 0, 1}}) {
    const auto ce = uniqueness_search(4, rule, 200, 7);
    ASSERT_TRUE(ce.has_value());
    EXPECT_FALSE(commutes(ce->memories, ce->isometry, rule));
    EXPECT_NE(ce->direction_transported, ce->direction_stored);
  }
  EXPECT_FALSE(uniqueness_search(4, {2, 0, 0}, 200, 7).has_value());
}

TEST(Hopfield, CapsAreEnforced) {
  const HopfieldNet big{16, IMat::Zero(16, 16)};
  EXPECT_THROW(orientation(big), Error);
  EXPECT_THROW(exhaustive_commutation(5), Error);
}
