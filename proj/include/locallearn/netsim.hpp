#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "locallearn/dataset.hpp"
#include "locallearn/error.hpp"
#include "locallearn/network.hpp"
#include "locallearn/random.hpp"
#include "locallearn/rules.hpp"
#include "locallearn/transfer.hpp"

namespace locallearn {

/// eta_k = eta0 * (1 - k / total_steps) when decaying, eta0 otherwise.
struct EtaSchedule {
  double eta0 = 0.1;
  bool linear_decay = false;

  double at(long step, long total_steps) const {
    if (!linear_decay || total_steps <= 0) return eta0;
    return eta0 * (1.0 - static_cast<double>(step) / static_cast<double>(total_steps));
  }
};

struct LayerTrainOptions {
  int epochs = 1;
  EtaSchedule eta;
  bool shuffle = true;
};

/// On-line training of one layer. x holds the presynaptic rows (bias column first), w is units x cols.
/// Each presentation updates every weight of every unit from the same forward pass.
/// on_epoch(k) runs after every epoch k = 1..epochs.
template <typename Callback>
void train_layer(const LearningRule& rule, const Mat& x, const Mat* targets, const TransferFunction& f, Mat& w,
                 const LayerTrainOptions& opts, Rng& rng, Callback&& on_epoch, const Mat* mask = nullptr) {
  const Eigen::Index m = x.rows();
  require(w.cols() == x.cols(), "weight matrix does not match the inputs");
  if (rule.supervised()) {
    require(targets != nullptr, "supervised rule without targets");
    require(targets->rows() == m && targets->cols() == w.rows(), "targets do not match the layer");
  }
  const LearningRule r = rule.normalized();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const long total = static_cast<long>(opts.epochs) * m;
  long step = 0;
  Vec s(w.rows());
  for (int e = 1; e <= opts.epochs; ++e) {
    if (opts.shuffle) std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index t : order) {
      const double eta = opts.eta.at(step++, total);
      s.noalias() = w * x.row(t).transpose();
      for (Eigen::Index k = 0; k < w.rows(); ++k) {
        const double o = f(s(k));
        const double tk = targets ? (*targets)(t, k) : 0.0;
        for (Eigen::Index i = 0; i < w.cols(); ++i) {
          if (mask && (*mask)(k, i) == 0) continue;
          w(k, i) += eta * r.raw(o, x(t, i), w(k, i), tk);
        }
      }
    }
    on_epoch(e);
  }
}

struct UnitTrainOptions {
  int epochs = 10;
  EtaSchedule eta;
  double init_sd = 0.01;
  std::optional<Vec> w0;
  bool shuffle = true;
  std::uint64_t seed = 0;
  Eigen::Index target_col = 0;
};

/// Per-epoch snapshots, row k = after epoch k (row 0 = initial weights).
struct UnitTrajectory {
  Mat weights;
  Vec norms;
  Vec angles;  // radians between w and the input centroid

  Vec final_weights() const { return weights.row(weights.rows() - 1).transpose(); }
};

inline double angle_between(const Vec& a, const Vec& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0 || nb == 0) return 0.0;
  return std::acos(std::clamp(a.dot(b) / (na * nb), -1.0, 1.0));
}

/// Trains a single unit O = f(w . I) on-line. Inputs are used as given (add a bias column beforehand if wanted).
inline UnitTrajectory train_unit(const LearningRule& rule, const TrainingSet& data, const TransferFunction& f,
                                 const UnitTrainOptions& opts) {
  require(data.size() > 0, "empty dataset");
  require(opts.epochs >= 0, "epochs must be non-negative");
  data.validate();
  if (rule.supervised()) require(data.targets.has_value(), "supervised rule without targets");
  Rng rng = make_rng(opts.seed, 10);
  const Eigen::Index n = data.input_dim();
  Mat w(1, n);
  if (opts.w0) {
    require(opts.w0->size() == n, "initial weights have the wrong length");
    w.row(0) = opts.w0->transpose();
  } else {
    for (Eigen::Index i = 0; i < n; ++i) w(0, i) = normal(rng, 0, opts.init_sd);
  }
  std::optional<Mat> tcol;
  if (data.targets) tcol = data.targets->col(opts.target_col);
  const Vec centroid = data.inputs.colwise().mean().transpose();
  UnitTrajectory tr;
  tr.weights.resize(opts.epochs + 1, n);
  tr.norms.resize(opts.epochs + 1);
  tr.angles.resize(opts.epochs + 1);
  auto record = [&](int k) {
    tr.weights.row(k) = w.row(0);
    tr.norms(k) = w.row(0).norm();
    tr.angles(k) = angle_between(w.row(0).transpose(), centroid);
  };
  record(0);
  LayerTrainOptions lo{opts.epochs, opts.eta, opts.shuffle};
  train_layer(rule, data.inputs, tcol ? &*tcol : nullptr, f, w, lo, rng, record);
  return tr;
}

inline Mat add_bias_column(const Mat& x) {
  Mat out(x.rows(), x.cols() + 1);
  out.col(0).setOnes();
  out.rightCols(x.cols()) = x;
  return out;
}

struct DeepLocalConfig {
  int hidden_epochs = 5;
  EtaSchedule hidden_eta{0.01, true};
  double hidden_init_sd = 0.5;
  int top_epochs = 5;
  EtaSchedule top_eta{0.01, true};
  double top_init_sd = 0.05;
  bool initialize = true;
  std::uint64_t seed = 0;
};

/// Layer-by-layer local training: unsupervised rule on hidden layers bottom-up, then the top rule with targets.
inline LayeredNet train_deep_local(LayeredNet net, const LearningRule& hidden_rule, const LearningRule& top_rule,
                                   const TrainingSet& data, const DeepLocalConfig& cfg) {
  require(!hidden_rule.supervised(), "hidden rule must be unsupervised in deep local learning");
  if (top_rule.supervised()) require(data.targets.has_value(), "supervised top rule without targets");
  require(data.input_dim() == net.size(0), "data does not match the input layer");
  Rng rng = make_rng(cfg.seed, 11);
  const int L = net.depth();
  Mat act = data.inputs;
  for (int h = 1; h <= L; ++h) {
    const bool top = h == L;
    if (cfg.initialize)
      for (Eigen::Index i = 0; i < net.weights(h).rows(); ++i)
        for (Eigen::Index j = 0; j < net.weights(h).cols(); ++j)
          net.weights(h)(i, j) = normal(rng, 0, top ? cfg.top_init_sd : cfg.hidden_init_sd);
    const Mat x = add_bias_column(act);
    LayerTrainOptions lo{top ? cfg.top_epochs : cfg.hidden_epochs, top ? cfg.top_eta : cfg.hidden_eta, true};
    const LearningRule& rule = top ? top_rule : hidden_rule;
    const Mat* tg = top && data.targets ? &*data.targets : nullptr;
    train_layer(rule, x, tg, net.transfer(h), net.weights(h), lo, rng, [](int) {}, &net.mask(h));
    act = forward_batch(net, act, h - 1, h);
  }
  return net;
}

/// Pre-activations S of layer h for every row of the batch.
inline Mat preactivations(const LayeredNet& net, const Mat& x, int h) {
  const Mat below = forward_batch(net, x, 0, h - 1);
  const Mat& w = net.weights(h);
  Mat s = below * w.rightCols(w.cols() - 1).transpose();
  s.rowwise() += w.col(0).transpose();
  return s;
}

/// True when every pre-activation of every threshold layer is non-zero on the data.
inline bool tie_free(const LayeredNet& net, const Mat& x) {
  for (int h = 1; h <= net.depth(); ++h)
    if (net.transfer(h).threshold() && (preactivations(net, x, h).array() == 0.0).any()) return false;
  return true;
}

/// Deviation between a logistic [0,1] unit trained with eta (T - O) I and a tanh [-1,1] unit
/// trained with eta/4 (T' - O') I on targets T' = 2T - 1, started from w' = w/2.
/// Inputs are shared; the [-1,1] weights are compared after doubling.
inline double range_invariance_deviation(const TrainingSet& data, const Vec& w0, double eta, int epochs,
                                         std::uint64_t seed) {
  require(data.targets.has_value(), "range invariance check needs targets");
  UnitTrainOptions a;
  a.epochs = epochs;
  a.eta = {eta, false};
  a.w0 = w0;
  a.seed = seed;
  UnitTrainOptions b = a;
  b.eta = {eta / 4, false};
  b.w0 = w0 / 2;
  TrainingSet mapped = data;
  mapped.targets = (2.0 * data.targets->array() - 1.0).matrix();
  const UnitTrajectory ta = train_unit(rules::gradient(), data, logistic_transfer(), a);
  const UnitTrajectory tb = train_unit(rules::gradient(), mapped, tanh_transfer(), b);
  return (ta.weights - 2.0 * tb.weights).cwiseAbs().maxCoeff();
}

}  // namespace locallearn
