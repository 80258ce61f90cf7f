#include <gtest/gtest.h>

#include "locallearn/json_io.hpp"
#include "locallearn/rules.hpp"

using namespace locallearn;

TEST(Rules, CatalogDegrees) {
  EXPECT_EQ(rules::simple_hebb().degrees(), (Degrees{2, 1}));
  EXPECT_EQ(rules::oja().degrees(), (Degrees{3, 3}));
  EXPECT_EQ(rules::clamped_hebb().degrees(), (Degrees{2, 0}));
  EXPECT_EQ(rules::bounded_hebb().degrees(), (Degrees{4, 3}));
  EXPECT_EQ(rules::riccati().degrees(), (Degrees{3, 2}));
  for (const auto& r : catalog()) EXPECT_FALSE(r.empty()) << r.name();
}

TEST(Rules, SupervisedFlag) {
  EXPECT_FALSE(rules::simple_hebb().supervised());
  EXPECT_TRUE(rules::clamped_hebb().supervised());
  EXPECT_TRUE(rules::delta().supervised());
  EXPECT_THROW(rules::delta().update(0.5, 1.0, 0.0, std::nullopt, 0.1), Error);
}

TEST(Rules, UpdateEvaluatesMonomials) {
  const LearningRule oja = rules::oja();
  EXPECT_DOUBLE_EQ(oja.update(0.5, 2.0, 0.3, std::nullopt, 0.1), 0.1 * (0.5 * 2.0 - 0.25 * 0.3));
  const LearningRule delta = rules::delta();
  EXPECT_DOUBLE_EQ(delta.update(0.25, 2.0, 0.0, 1.0, 0.5), 0.5 * 0.75 * 2.0);
}

TEST(Rules, NormalizedMergesLikeTerms) {
  const LearningRule r("dup", {rules::term(1, 0, 1, 1, 0), rules::term(2, 0, 1, 1, 0), rules::term(1, 0, 0, 1, 1),
                               rules::term(-1, 0, 0, 1, 1)});
  const auto n = r.normalized();
  ASSERT_EQ(n.terms().size(), 1u);
  EXPECT_DOUBLE_EQ(n.terms()[0].coefficient, 3.0);
}

TEST(Rules, TargetModeFoldsIntoTarget) {
  const LearningRule r("t", {rules::term(1, 0, 1, 1, 0, PostMode::target)});
  const auto n = r.normalized();
  EXPECT_EQ(n.terms()[0].exp_target, 1);
  EXPECT_EQ(n.terms()[0].exp_post, 0);
  EXPECT_EQ(n.degrees(), (Degrees{2, 0}));
}

TEST(Rules, RangeTransformRoundTrip) {
  const QuadraticCoefficients q{0.7, -0.2, 1.3, 0.4};
  for (Range from : {Range::unit, Range::symmetric}) {
    const Range to = from == Range::unit ? Range::symmetric : Range::unit;
    const auto back = range_transform(range_transform(q, from), to);
    EXPECT_NEAR(back.alpha, q.alpha, 1e-14);
    EXPECT_NEAR(back.beta, q.beta, 1e-14);
    EXPECT_NEAR(back.gamma, q.gamma, 1e-14);
    EXPECT_NEAR(back.delta, q.delta, 1e-14);
  }
}

TEST(Rules, RangeTransformOfHebb) {
  const auto t = range_transform(quadratic_part(rules::simple_hebb()), Range::unit);
  EXPECT_EQ(t, (QuadraticCoefficients{4, -2, -2, 1}));
}

TEST(Rules, SubstituteRangeIsPolynomialIdentity) {
  const QuadraticCoefficients q{1.5, 0.5, -0.25, 2.0};
  const auto s = substitute_range(q, Range::symmetric);
  for (double x : {0.0, 0.3, 1.0})
    for (double y : {0.0, 0.6, 1.0}) EXPECT_NEAR(s(x, y), q(2 * x - 1, 2 * y - 1), 1e-12);
}

TEST(Rules, QuadraticPartRejectsHigherDegree) {
  EXPECT_THROW(quadratic_part(rules::oja()), Error);
  const auto q = quadratic_part(rules::simple_hebb());
  EXPECT_EQ(q, (QuadraticCoefficients{1, 0, 0, 0}));
  EXPECT_EQ(quadratic_rule(q, "h").normalized().terms(), rules::simple_hebb().normalized().terms());
}

TEST(Rules, LookupByName) {
  EXPECT_EQ(rule_by_name("hebb").name(), "simple_hebb");
  EXPECT_EQ(rule_by_name("new").name(), "bounded_hebb");
  EXPECT_DOUBLE_EQ(rule_by_name("fixed_decay(0.5)").terms()[1].coefficient, -0.5);
  EXPECT_THROW(rule_by_name("nope"), Error);
  EXPECT_THROW(rule_by_name("oja(2)"), Error);
  EXPECT_THROW(rule_by_name("fixed_decay(x)"), Error);
}

TEST(Rules, InvalidTermsRejected) {
  EXPECT_THROW(LearningRule("bad", {rules::term(1, 0, -1, 1, 0)}), Error);
  EXPECT_THROW(LearningRule("bad", {rules::term(1, 2, 2, 2, 0)}), Error);
  EXPECT_THROW(LearningRule("bad", {rules::term(std::nan(""), 0, 1, 1, 0)}), Error);
}

TEST(RulesJson, RoundTrip) {
  for (const auto& r : catalog()) {
    const LearningRule back = rule_from_json(to_json(r));
    EXPECT_EQ(back.name(), r.name());
    EXPECT_EQ(back.terms(), r.terms());
  }
}

TEST(RulesJson, RejectsUnknownKeys) {
  json j = to_json(rules::oja());
  j["terms"][0]["extra"] = 1;
  EXPECT_THROW(rule_from_json(j), Error);
  json k = to_json(rules::oja());
  k["colour"] = "red";
  EXPECT_THROW(rule_from_json(k), Error);
}

TEST(RulesJson, TermFields) {
  const json t = json::parse(R"({"coeff":-0.5,"nT":1,"nPost":0,"nPre":1,"nW":0,"postMode":"error"})");
  const RuleTerm term = term_from_json(t);
  EXPECT_DOUBLE_EQ(term.coefficient, -0.5);
  EXPECT_EQ(term.exp_target, 1);
  EXPECT_EQ(term.post_mode, PostMode::error);
  EXPECT_THROW(term_from_json(json::parse(R"({"coeff":1,"postMode":"sideways"})")), Error);
}
