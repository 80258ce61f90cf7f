#pragma once

#include <algorithm>
#include <cmath>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "locallearn/dataset.hpp"
#include "locallearn/error.hpp"
#include "locallearn/rules.hpp"
#include "locallearn/transfer.hpp"

namespace locallearn {

/// First and second order statistics of a training set (sample moments, divided by M).
struct DataMoments {
  Vec mu;
  Mat sigma_II;
  Vec sigma_IT;
  double mu_T = 0;
  double m2_T = 0;
  Eigen::Index n_samples = 0;
  bool has_target = false;

  Eigen::Index dim() const { return mu.size(); }
  Mat covariance() const { return sigma_II - mu * mu.transpose(); }
};

/// Moments of the inputs and of target column `target_col` (when targets exist).
inline DataMoments compute_moments(const TrainingSet& data, Eigen::Index target_col = 0) {
  require(data.size() > 0, "empty dataset");
  data.validate();
  const double m = static_cast<double>(data.size());
  DataMoments mo;
  mo.n_samples = data.size();
  mo.mu = data.inputs.colwise().sum().transpose() / m;
  mo.sigma_II = data.inputs.transpose() * data.inputs / m;
  mo.sigma_IT = Vec::Zero(data.input_dim());
  if (data.targets) {
    require(target_col < data.targets->cols(), "target column out of range");
    const Vec t = data.targets->col(target_col);
    mo.has_target = true;
    mo.mu_T = t.mean();
    mo.m2_T = t.squaredNorm() / m;
    mo.sigma_IT = data.inputs.transpose() * t / m;
  }
  return mo;
}

namespace detail {

inline double binomial(int n, int k) {
  double r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// c * T^a * O^b * I_i^c * w_i^e for a linear unit O = w.I, averaged over the data.
inline Vec data_monomial_expectation(int a, int b, int c, int e, const DataMoments& mo, const Vec& w) {
  const Eigen::Index n = mo.dim();
  if (a + b + c > 2) throw Error("higher-order moments required");
  if (a > 0) require(mo.has_target, "term uses the target but the moments have none");
  Vec out(n);
  const double eo = w.dot(mo.mu);
  const double eoo = w.dot(mo.sigma_II * w);
  const Vec sig_w = mo.sigma_II * w;
  for (Eigen::Index i = 0; i < n; ++i) {
    double v = 1;
    if (a == 0 && b == 0 && c == 0) v = 1;
    else if (a == 1 && b == 0 && c == 0) v = mo.mu_T;
    else if (a == 2) v = mo.m2_T;
    else if (a == 0 && b == 1 && c == 0) v = eo;
    else if (b == 2) v = eoo;
    else if (a == 0 && b == 0 && c == 1) v = mo.mu(i);
    else if (c == 2) v = mo.sigma_II(i, i);
    else if (a == 1 && b == 1) v = w.dot(mo.sigma_IT);
    else if (a == 1 && c == 1) v = mo.sigma_IT(i);
    else if (b == 1 && c == 1) v = sig_w(i);
    out(i) = v * std::pow(w(i), e);
  }
  return out;
}

}  // namespace detail

/// Expected per-weight update (without eta) of one term on a linear unit, averaged over the data.
/// Error factors (T - O)^k are expanded binomially.
inline Vec term_expectation(const RuleTerm& term, const DataMoments& mo, const Vec& w) {
  require(w.size() == mo.dim(), "weight vector does not match the moments");
  Vec out = Vec::Zero(mo.dim());
  int a = term.exp_target;
  if (term.post_mode == PostMode::target) a += term.exp_post;
  if (term.post_mode != PostMode::error) {
    const int b = term.post_mode == PostMode::output ? term.exp_post : 0;
    return term.coefficient * detail::data_monomial_expectation(a, b, term.exp_pre, term.exp_weight, mo, w);
  }
  const int k = term.exp_post;
  if (a + k + term.exp_pre > 2) throw Error("higher-order moments required");
  for (int j = 0; j <= k; ++j) {
    // C(k, j) T^(k-j) (-O)^j
    const double s = detail::binomial(k, j) * (j % 2 ? -1.0 : 1.0);
    out += s * detail::data_monomial_expectation(a + k - j, j, term.exp_pre, term.exp_weight, mo, w);
  }
  return term.coefficient * out;
}

inline Vec rule_expectation(const LearningRule& rule, const DataMoments& mo, const Vec& w) {
  Vec out = Vec::Zero(mo.dim());
  for (const auto& t : rule.terms()) out += term_expectation(t, mo, w);
  return out;
}

/// w(k+1) = A w(k) + b
struct RecurrenceSpec {
  Mat A;
  Vec b;
  Vec w0;
};

/// Marks a rule whose averaged update is not affine in w.
struct NonlinearFlag {
  int weight_degree = 0;
  bool riccati = false;
};

/// Assembles the epoch recurrence for a d <= 1 rule; eta is the per-epoch rate.
inline std::variant<RecurrenceSpec, NonlinearFlag> rule_recurrence(const LearningRule& rule, const DataMoments& mo,
                                                                    double eta, const Vec& w0 = Vec()) {
  const LearningRule r = rule.normalized();
  for (const auto& t : r.terms()) term_expectation(t, mo, Vec::Zero(mo.dim()));  // rejects unsupported terms
  if (r.empty()) {
    const Eigen::Index n = mo.dim();
    return RecurrenceSpec{Mat::Identity(n, n), Vec::Zero(n), w0.size() ? w0 : Vec::Zero(n)};
  }
  const int d = r.degrees().d;
  if (d > 1) {
    bool ric = r == rules::riccati();
    return NonlinearFlag{d, ric};
  }
  const Eigen::Index n = mo.dim();
  RecurrenceSpec spec;
  const Vec f0 = rule_expectation(r, mo, Vec::Zero(n));
  spec.b = eta * f0;
  spec.A = Mat::Identity(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    Vec e = Vec::Zero(n);
    e(k) = 1;
    spec.A.col(k) += eta * (rule_expectation(r, mo, e) - f0);
  }
  spec.w0 = w0.size() ? w0 : Vec::Zero(n);
  require(spec.w0.size() == n, "initial weights do not match the moments");
  return spec;
}

inline bool is_symmetric(const Mat& a, double tol = 1e-12) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

/// w(k) = A^k w0 + (I + A + ... + A^(k-1)) b
inline Vec solve_recurrence(const RecurrenceSpec& spec, long k, bool force_iteration = false) {
  require(k >= 0, "k must be non-negative");
  require(spec.A.rows() == spec.A.cols() && spec.A.rows() == spec.b.size() && spec.b.size() == spec.w0.size(),
          "recurrence dimensions disagree");
  if (force_iteration || !is_symmetric(spec.A)) {
    Vec w = spec.w0;
    for (long i = 0; i < k; ++i) w = spec.A * w + spec.b;
    return w;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(spec.A);
  const Mat& q = es.eigenvectors();
  const Vec& lam = es.eigenvalues();
  Vec c0 = q.transpose() * spec.w0;
  Vec cb = q.transpose() * spec.b;
  Vec out(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    const double l = lam(i);
    const double lk = std::pow(l, static_cast<double>(k));
    double xi;
    if (std::abs(l - 1.0) < 1e-12)
      xi = static_cast<double>(k);
    else
      xi = (lk - 1.0) / (l - 1.0);
    out(i) = lk * c0(i) + xi * cb(i);
  }
  return q * out;
}

/// Rows are w(0), ..., w(k).
inline Mat recurrence_trajectory(const RecurrenceSpec& spec, long k) {
  Mat out(k + 1, spec.w0.size());
  for (long i = 0; i <= k; ++i) out.row(i) = solve_recurrence(spec, i).transpose();
  return out;
}

/// Solution of dw/dt = eta*mu*(1 - w^2).
inline double riccati_solution(double eta, double mu, double w0, double t) {
  if (w0 == -1.0) return -1.0;
  const double c = (1 - w0) / (2 * (1 + w0));
  const double e = 2 * c * std::exp(-2 * eta * mu * t);
  return (1 - e) / (1 + e);
}

struct DropoutEstimate {
  double estimate = 0;
  double bound = 0;
};

inline double dropout_bound_logistic(double e) { return 2 * e * (1 - e) * std::abs(1 - 2 * e); }

/// E(f(S)) ~ f(E(S)) for a sigmoidal unit fed by data with mean mu.
inline DropoutEstimate dropout_mean(const DataMoments& mo, const Vec& w, TransferKind kind) {
  require(w.size() == mo.dim(), "weight vector does not match the moments");
  const double s = w.dot(mo.mu);
  if (kind == TransferKind::logistic01) {
    const double e = logistic(s);
    return {e, dropout_bound_logistic(e)};
  }
  require(kind == TransferKind::tanh11, "dropout_mean needs a logistic or tanh transfer");
  const double e2 = logistic(2 * s);
  return {2 * e2 - 1, 2 * dropout_bound_logistic(e2)};
}

/// Small-weight estimate of E(O I_i) for centered data: f'(0) w_i Var(I_i). Diagnostic only.
inline Vec nonlinear_hebb_estimate(const DataMoments& mo, const Vec& w, const TransferFunction& f) {
  const double d0 = f.differentiable() ? f.derivative(0.0) : 0.0;
  const Vec var = mo.covariance().diagonal();
  return d0 * w.cwiseProduct(var);
}

}  // namespace locallearn
