#include <gtest/gtest.h>

#include "locallearn/acceptance.hpp"
#include "locallearn/netsim.hpp"

using namespace locallearn;

TEST(Netsim, EtaScheduleDecaysLinearly) {
  const EtaSchedule s{0.2, true};
  EXPECT_DOUBLE_EQ(s.at(0, 10), 0.2);
  EXPECT_DOUBLE_EQ(s.at(5, 10), 0.1);
  EXPECT_DOUBLE_EQ((EtaSchedule{0.2, false}).at(5, 10), 0.2);
}

TEST(Netsim, TrainUnitRecordsEveryEpoch) {
  const TrainingSet ts = dynamics_dataset(1, 4, 40);
  UnitTrainOptions o;
  o.epochs = 6;
  o.eta = {1e-3, false};
  o.seed = 9;
  const UnitTrajectory tr = train_unit(rules::oja(), ts, linear_transfer(), o);
  EXPECT_EQ(tr.weights.rows(), 7);
  EXPECT_EQ(tr.weights.cols(), 4);
  EXPECT_EQ(tr.norms.size(), 7);
  EXPECT_NEAR(tr.norms(3), tr.weights.row(3).norm(), 1e-12);
}

TEST(Netsim, TrainingIsDeterministicPerSeed) {
  const TrainingSet ts = dynamics_dataset(2, 5, 30);
  UnitTrainOptions o;
  o.epochs = 3;
  o.eta = {1e-2, true};
  o.seed = 4;
  const auto a = train_unit(rules::delta(), ts, tanh_transfer(), o);
  const auto b = train_unit(rules::delta(), ts, tanh_transfer(), o);
  EXPECT_EQ(a.weights, b.weights);
  o.seed = 5;
  EXPECT_NE(a.weights, train_unit(rules::delta(), ts, tanh_transfer(), o).weights);
}

TEST(Netsim, OjaConvergesToUnitNorm) {
  GaussianSpec g;
  g.n = 3;
  g.m = 400;
  g.cov = Mat::Identity(3, 3);
  g.cov(0, 0) = 4.0;
  const TrainingSet ts = gaussian(g, 11);
  UnitTrainOptions o;
  o.epochs = 60;
  o.eta = {5e-3, false};
  o.seed = 1;
  o.init_sd = 0.3;
  const auto tr = train_unit(rules::oja(), ts, linear_transfer(), o);
  const Vec w = tr.final_weights();
  EXPECT_NEAR(w.norm(), 1.0, 0.05);
  EXPECT_GT(std::abs(w(0)), 0.95);
}

TEST(Netsim, DeltaRuleLearnsLinearTeacher) {
  GaussianSpec g;
  g.n = 3;
  g.m = 200;
  g.teacher = (Vec(3) << 0.5, -1.0, 0.25).finished();
  const TrainingSet ts = gaussian(g, 12);
  UnitTrainOptions o;
  o.epochs = 50;
  o.eta = {0.01, false};
  o.seed = 2;
  const Vec w = train_unit(rules::delta(), ts, linear_transfer(), o).final_weights();
  EXPECT_LT((w - g.teacher).norm(), 1e-3);
}

TEST(Netsim, RangeInvarianceOfGradientLearning) {
  GaussianSpec g;
  g.n = 4;
  g.m = 100;
  g.teacher = Vec::LinSpaced(4, -0.5, 0.5);
  TrainingSet ts = gaussian(g, 13);
  ts.targets = Mat((ts.targets->array() > 0).cast<double>());
  EXPECT_LT(range_invariance_deviation(ts, Vec::Constant(4, 0.1), 0.05, 5, 3), 1e-10);
}

TEST(Netsim, HebbAlignsWithCentroidAndGrows) {
  GaussianSpec g;
  g.n = 5;
  g.m = 200;
  g.mean = Vec::LinSpaced(5, 0.5, 1.5);
  g.cov = 0.05 * Mat::Identity(5, 5);
  const TrainingSet ts = gaussian(g, 21);
  UnitTrainOptions o;
  o.epochs = 30;
  o.eta = {1e-3, false};
  o.seed = 6;
  o.init_sd = 0.1;
  const auto tr = train_unit(rules::simple_hebb(), ts, logistic_transfer(), o);
  for (Eigen::Index k = 6; k < tr.angles.size(); ++k) {
    EXPECT_LE(tr.angles(k), tr.angles(k - 1) + 1e-12) << k;
    EXPECT_GT(tr.norms(k), tr.norms(k - 1)) << k;
  }
  EXPECT_LT(tr.angles(tr.angles.size() - 1), 0.05);
}

TEST(Netsim, HalvingEtaAndDoublingEpochsAgrees) {
  const TrainingSet ts = dynamics_dataset(4, 6, 100);
  const double eta = 1e-3;
  UnitTrainOptions a;
  a.epochs = 30;
  a.eta = {eta, false};
  a.w0 = Vec::Constant(6, 0.1);
  a.shuffle = false;
  UnitTrainOptions b = a;
  b.epochs = 60;
  b.eta = {eta / 2, false};
  const auto ta = train_unit(rules::delta(), ts, linear_transfer(), a);
  const auto tb = train_unit(rules::delta(), ts, linear_transfer(), b);
  for (int k : {10, 20, 30}) EXPECT_LT((ta.weights.row(k) - tb.weights.row(2 * k)).cwiseAbs().maxCoeff(), 10 * eta) << k;
}

TEST(Netsim, DeepLocalRejectsSupervisedHiddenRule) {
  const LayeredNet net({2, 2, 1}, {threshold_transfer()});
  const TrainingSet ts = boolean_table(2, 0b0110);
  EXPECT_THROW(train_deep_local(net, rules::clamped_hebb(), rules::clamped_hebb(), ts, {}), Error);
}

TEST(Netsim, DeepLocalLearnsXorWithSomeRestart) {
  const TrainingSet ts = boolean_table(2, 0b0110);
  DeepLocalConfig cfg;
  bool learnt = false;
  for (std::uint64_t r = 0; r < 4096 && !learnt; ++r) {
    cfg.seed = r;
    const LayeredNet net = train_deep_local(LayeredNet({2, 4, 1}, {threshold_transfer()}), rules::simple_hebb(),
                                            rules::clamped_hebb(), ts, cfg);
    learnt = tie_free(net, ts.inputs) && forward_batch(net, ts.inputs).isApprox(*ts.targets);
  }
  EXPECT_TRUE(learnt);
}

TEST(Netsim, TopLayerLearnsSeparableData) {
  const TrainingSet ts = linsep_random(5, 30, 8);
  UnitTrainOptions o;
  o.epochs = 200;
  o.eta = {0.1, false};
  o.seed = 1;
  const TrainingSet b = with_bias(ts);
  const Vec w = train_unit(rules::perceptron(), b, threshold_transfer(), o).final_weights();
  const Vec out = (b.inputs * w).unaryExpr([](double s) { return s > 0 ? 1.0 : -1.0; });
  EXPECT_TRUE(out.isApprox(ts.targets->col(0)));
}
