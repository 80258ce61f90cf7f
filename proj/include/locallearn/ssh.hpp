#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "locallearn/dataset.hpp"
#include "locallearn/error.hpp"
#include "locallearn/random.hpp"

namespace locallearn {

/// Training vectors multiplied by their +-1 targets (bias component prepended first when with_bias).
struct CanonicalSet {
  Mat vectors;
  bool with_bias = false;
};

namespace detail {

inline Mat biased_inputs(const TrainingSet& data, bool with_bias) {
  if (!with_bias) return data.inputs;
  Mat x(data.size(), data.input_dim() + 1);
  x.col(0).setOnes();
  x.rightCols(data.input_dim()) = data.inputs;
  return x;
}

inline bool has_opposite_pair(const Mat& v) {
  for (Eigen::Index a = 0; a < v.rows(); ++a)
    for (Eigen::Index b = a + 1; b < v.rows(); ++b)
      if ((v.row(a) + v.row(b)).cwiseAbs().maxCoeff() == 0.0) return true;
  return false;
}

}  // namespace detail

inline CanonicalSet canonicalize(const TrainingSet& data, bool with_bias) {
  require(data.targets.has_value(), "canonical form needs targets");
  data.validate();
  const Mat x = detail::biased_inputs(data, with_bias);
  CanonicalSet c;
  c.with_bias = with_bias;
  c.vectors.resize(x.rows(), x.cols());
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    const double y = (*data.targets)(t, 0);
    require(y == 1.0 || y == -1.0, "targets must be -1 or +1");
    require(x.row(t).cwiseAbs().maxCoeff() > 0, "zero input vector");
    c.vectors.row(t) = y * x.row(t);
  }
  // x and -x canonical vectors come from the same point with opposite labels (or x and -x with equal labels)
  require(!detail::has_opposite_pair(c.vectors), "not consistent");
  return c;
}

struct CosineFlags {
  bool consistent = true;
  bool common_orthant = false;
  bool mutually_orthogonal = false;
  bool equal_lengths = false;
  bool all_row_sums_positive = false;
  bool degenerate = false;  // some row sum within tolerance of zero
};

struct CosineReport {
  Mat cos_matrix;
  Vec row_sums;
  CosineFlags flags;
};

inline constexpr double ssh_tolerance = 1e-9;

inline CosineReport criteria(const CanonicalSet& c, double tol = ssh_tolerance) {
  const Mat& v = c.vectors;
  const Eigen::Index m = v.rows();
  CosineReport r;
  const Vec norms = v.rowwise().norm();
  r.cos_matrix = (v * v.transpose()).array() / (norms * norms.transpose()).array();
  for (Eigen::Index i = 0; i < m; ++i) r.cos_matrix(i, i) = 1.0;
  r.cos_matrix = r.cos_matrix.cwiseMax(-1.0).cwiseMin(1.0);
  r.row_sums = r.cos_matrix.rowwise().sum();
  auto& f = r.flags;
  f.consistent = !detail::has_opposite_pair(v);
  f.common_orthant = true;
  for (Eigen::Index j = 0; j < v.cols(); ++j)
    if (v.col(j).maxCoeff() > 0 && v.col(j).minCoeff() < 0) f.common_orthant = false;
  f.mutually_orthogonal = true;
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b)
      if (a != b && std::abs(r.cos_matrix(a, b)) > tol) f.mutually_orthogonal = false;
  f.equal_lengths = m == 0 || (norms.maxCoeff() - norms.minCoeff()) <= tol * std::max(1.0, norms.maxCoeff());
  f.all_row_sums_positive = m == 0 || r.row_sums.minCoeff() > tol;
  f.degenerate = m > 0 && r.row_sums.cwiseAbs().minCoeff() <= tol;
  return r;
}

enum class Verdict { yes, no, unknown };

inline std::string to_string(Verdict v) {
  return v == Verdict::yes ? "true" : v == Verdict::no ? "false" : "unknown";
}

/// Verdict from the theorem conditions: a sufficient condition gives yes; equal lengths with a
/// non-positive row sum gives no; anything else is unknown.
inline Verdict predict(const CosineReport& r) {
  const auto& f = r.flags;
  if (f.common_orthant || f.mutually_orthogonal) return Verdict::yes;
  if (f.equal_lengths) return f.all_row_sums_positive ? Verdict::yes : Verdict::no;
  return Verdict::unknown;
}

struct SshRunOptions {
  int epochs = 1;
  double eta = 1.0;
  std::optional<Vec> w0;  // zero when empty
};

/// Clamped Hebb dW = eta * T * I' on the original set; returns the weights after each epoch (row 0 initial).
inline Mat ssh_train(const TrainingSet& data, bool with_bias, const SshRunOptions& opts) {
  require(data.targets.has_value(), "training needs targets");
  const Mat x = detail::biased_inputs(data, with_bias);
  Vec w = opts.w0 ? *opts.w0 : Vec::Zero(x.cols());
  require(w.size() == x.cols(), "initial weights have the wrong length");
  Mat out(opts.epochs + 1, x.cols());
  out.row(0) = w.transpose();
  for (int e = 1; e <= opts.epochs; ++e) {
    for (Eigen::Index t = 0; t < x.rows(); ++t) w += opts.eta * (*data.targets)(t, 0) * x.row(t).transpose();
    out.row(e) = w.transpose();
  }
  return out;
}

/// Fraction of examples with T * (w . I') strictly positive (ties count as errors).
inline double ssh_accuracy(const TrainingSet& data, bool with_bias, const Vec& w, double tol = ssh_tolerance) {
  const Mat x = detail::biased_inputs(data, with_bias);
  int ok = 0;
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    const double s = (*data.targets)(t, 0) * x.row(t).dot(w);
    if (s > tol * std::max(1.0, w.norm() * x.row(t).norm())) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(x.rows());
}

struct SshResult {
  Verdict predicted = Verdict::unknown;
  bool empirical = false;
  CosineReport report;
  Vec accuracy;  // per epoch, entry 0 at the initial weights
};

inline SshResult predict_and_verify(const TrainingSet& data, bool with_bias, const SshRunOptions& opts = {}) {
  SshResult r;
  r.report = criteria(canonicalize(data, with_bias));
  r.predicted = predict(r.report);
  const Mat traj = ssh_train(data, with_bias, opts);
  r.accuracy.resize(traj.rows());
  for (Eigen::Index e = 0; e < traj.rows(); ++e) r.accuracy(e) = ssh_accuracy(data, with_bias, traj.row(e).transpose());
  r.empirical = r.accuracy(r.accuracy.size() - 1) == 1.0;
  return r;
}

/// Epoch count after which the initial-condition transient is dominated.
inline int ssh_sufficient_epochs(const CanonicalSet& c, const Vec& w0, double eta) {
  const Vec s = c.vectors.colwise().sum().transpose();
  double min_margin = INFINITY;
  for (Eigen::Index u = 0; u < c.vectors.rows(); ++u) {
    const double m = c.vectors.row(u).dot(s);
    if (m > 0) min_margin = std::min(min_margin, m);
  }
  if (!std::isfinite(min_margin)) return 1;
  const double maxnorm = c.vectors.rowwise().norm().maxCoeff();
  return std::max(1, static_cast<int>(std::ceil(10.0 * w0.norm() * maxnorm / (eta * min_margin))));
}

/// Random consistent +-1 dataset of m distinct-up-to-sign vectors in n dimensions with random labels.
inline TrainingSet random_binary_set(int n, int m, bool with_bias, Rng& rng) {
  require(n >= 1 && m >= 1, "sizes must be positive");
  for (int attempt = 0; attempt < 10000; ++attempt) {
    TrainingSet ts;
    ts.inputs.resize(m, n);
    Mat t(m, 1);
    for (int r = 0; r < m; ++r) {
      for (int k = 0; k < n; ++k) ts.inputs(r, k) = coin(rng) ? 1.0 : -1.0;
      t(r, 0) = coin(rng) ? 1.0 : -1.0;
    }
    ts.targets = t;
    ts.descriptor = "random_binary";
    try {
      canonicalize(ts, with_bias);
      return ts;
    } catch (const Error&) {
    }
  }
  throw Error("could not draw a consistent set");
}

}  // namespace locallearn
