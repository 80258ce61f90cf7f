#include <gtest/gtest.h>

#include "locallearn/ssh.hpp"

using namespace locallearn;

namespace {

TrainingSet set_of(std::initializer_list<std::initializer_list<double>> rows, std::initializer_list<double> t) {
  TrainingSet ts;
  ts.inputs.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) ts.inputs(r, c++) = v;
    ++r;
  }
  ts.targets = Mat(ts.inputs.rows(), 1);
  r = 0;
  for (double v : t) (*ts.targets)(r++, 0) = v;
  return ts;
}

}  // namespace

TEST(Ssh, OrthogonalVectorsAreLearnable) {
  const auto ts = set_of({{1, 1, 1, 1}, {1, -1, 1, -1}, {1, 1, -1, -1}}, {1, -1, 1});
  const SshResult r = predict_and_verify(ts, false);
  EXPECT_TRUE(r.report.flags.mutually_orthogonal);
  EXPECT_EQ(r.predicted, Verdict::yes);
  EXPECT_TRUE(r.empirical);
}

TEST(Ssh, CommonOrthantIsLearnable) {
  const auto ts = set_of({{1, 0, -1}, {1, 1, -1}, {0, 1, -1}}, {1, 1, 1});
  const SshResult r = predict_and_verify(ts, false);
  EXPECT_TRUE(r.report.flags.common_orthant);
  EXPECT_EQ(r.predicted, Verdict::yes);
  EXPECT_TRUE(r.empirical);
}

TEST(Ssh, OppositeCanonicalVectorsAreRejected) {
  const auto ts = set_of({{1, 1, 1}, {-1, -1, -1}, {1, -1, 1}}, {1, 1, -1});
  EXPECT_THROW(predict_and_verify(ts, false), Error);
}

TEST(Ssh, CosineMatrixIsSymmetricWithUnitDiagonal) {
  Rng rng = make_rng(3);
  const TrainingSet ts = random_binary_set(6, 5, true, rng);
  const CosineReport rep = criteria(canonicalize(ts, true));
  EXPECT_TRUE(rep.cos_matrix.isApprox(rep.cos_matrix.transpose()));
  for (Eigen::Index i = 0; i < rep.cos_matrix.rows(); ++i) EXPECT_NEAR(rep.cos_matrix(i, i), 1.0, 1e-12);
  EXPECT_TRUE(rep.row_sums.isApprox(rep.cos_matrix.rowwise().sum()));
}

TEST(Ssh, PredictionsAgreeWithTraining) {
  Rng rng = make_rng(17);
  int decided = 0;
  for (int k = 0; k < 100; ++k) {
    const int n = 2 + k % 7;
    const int m = 1 + k % 6;
    const bool bias = k % 2;
    const TrainingSet ts = random_binary_set(n, m, bias, rng);
    SshRunOptions o;
    o.epochs = 5;
    const SshResult r = predict_and_verify(ts, bias, o);
    if (r.predicted == Verdict::unknown) continue;
    ++decided;
    EXPECT_EQ(r.predicted == Verdict::yes, r.empirical) << "dataset " << k;
  }
  EXPECT_GT(decided, 30);
}

TEST(Ssh, AccuracyTrajectoryStartsAtInitialWeights) {
  const auto ts = set_of({{1, 1}, {1, -1}}, {1, -1});
  SshRunOptions o;
  o.epochs = 3;
  const Mat w = ssh_train(ts, false, o);
  EXPECT_EQ(w.rows(), 4);
  EXPECT_TRUE(w.row(0).isZero());
  EXPECT_DOUBLE_EQ(ssh_accuracy(ts, false, w.row(1).transpose()), 1.0);
}
