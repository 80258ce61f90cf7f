#include <gtest/gtest.h>

#include "locallearn/boolean.hpp"

using namespace locallearn;

TEST(Boolean, EnumerationSizes) {
  EXPECT_EQ(enumerate_functions(2, false).size(), 16u);
  EXPECT_EQ(enumerate_functions(3, false).size(), 256u);
  EXPECT_EQ(enumerate_functions(2, true).size(), 6u);
  EXPECT_EQ(enumerate_functions(3, true).size(), 20u);
  EXPECT_EQ(enumerate_functions(4, true).size(), 168u);
  EXPECT_THROW(enumerate_functions(4, false), Error);
}

TEST(Boolean, MonotoneTablesAreMonotone) {
  for (const auto& f : enumerate_functions(3, true)) EXPECT_TRUE(is_monotone(f));
  EXPECT_FALSE(is_monotone({2, 0b0110}));
}

TEST(Boolean, SeparableCounts) {
  auto count = [](int n, bool mono) {
    int c = 0;
    for (const auto& f : enumerate_functions(n, mono)) c += linearly_separable(f);
    return c;
  };
  EXPECT_EQ(count(2, false), 14);
  EXPECT_EQ(count(3, false), 104);
  EXPECT_EQ(count(3, true), 20);
  EXPECT_EQ(count(4, true), 150);
}

TEST(Boolean, SeparabilityAgreesWithPerceptron) {
  for (const auto& f : enumerate_functions(3, false)) EXPECT_EQ(linearly_separable(f), perceptron_separable(f)) << f.table;
}

TEST(Boolean, XorIsNotSeparable) {
  EXPECT_FALSE(linearly_separable({2, 0b0110}));
  EXPECT_TRUE(linearly_separable({2, 0b1000}));
}

TEST(Boolean, CensusIsThreadIndependent) {
  CensusConfig cfg;
  cfg.restarts = 32;
  cfg.seed = 5;
  cfg.threads = 1;
  const auto a = census(2, false, census_rules(), cfg);
  cfg.threads = 3;
  const auto b = census(2, false, census_rules(), cfg);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].shallow, b[i].shallow);
    EXPECT_EQ(a[i].deep, b[i].deep);
  }
}

TEST(Boolean, ShallowLearningStaysWithinSeparable) {
  CensusConfig cfg;
  cfg.restarts = 64;
  const auto rows = census(2, false, census_rules(), cfg);
  const auto fns = enumerate_functions(2, false);
  for (const auto& r : rows) {
    EXPECT_EQ(r.total, 16);
    EXPECT_LE(r.shallow_count, r.separable_count);
    for (std::size_t i = 0; i < fns.size(); ++i)
      if (r.shallow[i]) EXPECT_TRUE(linearly_separable(fns[i])) << r.rule_name << " " << fns[i].table;
  }
}
