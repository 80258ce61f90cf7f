#include <gtest/gtest.h>

#include "locallearn/acceptance.hpp"
#include "locallearn/moments.hpp"

using namespace locallearn;

namespace {

TrainingSet small_set() {
  TrainingSet ts;
  ts.inputs.resize(4, 2);
  ts.inputs << 1, 0, 0, 1, 1, 1, -1, 2;
  ts.targets = Mat(4, 1);
  *ts.targets << 1, -1, 2, 0;
  return ts;
}

}  // namespace

TEST(Moments, FirstAndSecondOrder) {
  const DataMoments mo = compute_moments(small_set());
  EXPECT_EQ(mo.n_samples, 4);
  EXPECT_DOUBLE_EQ(mo.mu(0), 0.25);
  EXPECT_DOUBLE_EQ(mo.mu(1), 1.0);
  EXPECT_DOUBLE_EQ(mo.sigma_II(0, 1), 0.25 * (0 + 0 + 1 - 2));
  EXPECT_DOUBLE_EQ(mo.sigma_IT(0), 0.25 * (1 + 0 + 2 + 0));
  EXPECT_DOUBLE_EQ(mo.mu_T, 0.5);
  EXPECT_DOUBLE_EQ(mo.m2_T, 1.5);
  EXPECT_TRUE(is_symmetric(mo.sigma_II));
}

TEST(Moments, HebbExpectationIsCovarianceProduct) {
  const DataMoments mo = compute_moments(small_set());
  const Vec w = Vec::LinSpaced(2, 0.5, -1.0);
  EXPECT_TRUE(rule_expectation(rules::simple_hebb(), mo, w).isApprox(mo.sigma_II * w));
  EXPECT_TRUE(rule_expectation(rules::clamped_hebb(), mo, w).isApprox(mo.sigma_IT));
}

TEST(Moments, RecurrenceClosedFormMatchesIteration) {
  const DataMoments mo = compute_moments(small_set());
  const Vec w0 = Vec::Constant(2, 0.1);
  for (const auto& rule : {rules::simple_hebb(), rules::clamped_hebb(), rules::delta(), rules::fixed_decay(0.5)}) {
    const auto rec = rule_recurrence(rule, mo, 0.05, w0);
    ASSERT_TRUE(std::holds_alternative<RecurrenceSpec>(rec)) << rule.name();
    const auto& spec = std::get<RecurrenceSpec>(rec);
    const Vec a = solve_recurrence(spec, 40);
    const Vec b = solve_recurrence(spec, 40, true);
    EXPECT_LT((a - b).norm(), 1e-9 * std::max(1.0, b.norm())) << rule.name();
  }
}

TEST(Moments, NonlinearRulesAreFlagged) {
  const DataMoments mo = compute_moments(small_set());
  const auto oja = rule_recurrence(rules::oja(), mo, 0.1, Vec::Ones(2));
  ASSERT_TRUE(std::holds_alternative<NonlinearFlag>(oja));
  EXPECT_EQ(std::get<NonlinearFlag>(oja).weight_degree, 3);
  const auto ric = rule_recurrence(rules::riccati(), mo, 0.1, Vec::Ones(2));
  ASSERT_TRUE(std::holds_alternative<NonlinearFlag>(ric));
  EXPECT_TRUE(std::get<NonlinearFlag>(ric).riccati);
}

TEST(Moments, RiccatiSolutionSolvesOde) {
  const double eta = 0.01, mu = 0.4, w0 = 0.2, t = 37, h = 1e-4;
  const double w = riccati_solution(eta, mu, w0, t);
  const double dw = (riccati_solution(eta, mu, w0, t + h) - riccati_solution(eta, mu, w0, t - h)) / (2 * h);
  EXPECT_NEAR(dw, eta * mu * (1 - w * w), 1e-9);
  EXPECT_DOUBLE_EQ(riccati_solution(eta, mu, w0, 0), w0);
}

TEST(Moments, PredictionTracksOnlineSimulation) {
  const auto rows = dynamics_check(3, 1e-3, 20);
  ASSERT_FALSE(rows.empty());
  int checked = 0;
  for (const auto& r : rows) {
    if (r.status.rfind("skipped", 0) == 0) continue;
    EXPECT_LT(r.deviation, 0.05) << r.rule;
    ++checked;
  }
  EXPECT_GT(checked, 10);
}
