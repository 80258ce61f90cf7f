#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "locallearn/dataset.hpp"
#include "locallearn/error.hpp"
#include "locallearn/random.hpp"
#include "locallearn/transfer.hpp"

namespace locallearn {

/// Elementary operation tally, unit cost per operation.
struct OpCounter {
  std::int64_t multiply_add = 0;
  std::int64_t transfer = 0;
  std::int64_t derivative = 0;
  std::int64_t comparison = 0;

  std::int64_t total() const { return multiply_add + transfer + derivative + comparison; }
  OpCounter& operator+=(const OpCounter& o) {
    multiply_add += o.multiply_add;
    transfer += o.transfer;
    derivative += o.derivative;
    comparison += o.comparison;
    return *this;
  }
};

/// Address of one weight: layer h (1-based), row i, column j (column 0 is the bias).
struct WeightRef {
  int layer = 1;
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  bool operator==(const WeightRef&) const = default;
};

/// Feedforward net; weights[h-1] has shape N_h x (N_{h-1} + 1) with the bias in column 0.
class LayeredNet {
 public:
  LayeredNet() = default;

  LayeredNet(std::vector<int> sizes, std::vector<TransferFunction> transfers) : sizes_(std::move(sizes)) {
    require(sizes_.size() >= 2, "a net needs at least an input and an output layer");
    for (int s : sizes_) require(s > 0, "layer sizes must be positive");
    if (transfers.size() == 1) transfers.assign(sizes_.size() - 1, transfers[0]);
    require(transfers.size() == sizes_.size() - 1, "one transfer function per non-input layer");
    transfers_ = std::move(transfers);
    for (std::size_t h = 1; h < sizes_.size(); ++h) {
      weights_.push_back(Mat::Zero(sizes_[h], sizes_[h - 1] + 1));
      mask_.push_back(Mat::Ones(sizes_[h], sizes_[h - 1] + 1));
    }
  }

  int depth() const { return static_cast<int>(weights_.size()); }
  const std::vector<int>& sizes() const { return sizes_; }
  int size(int h) const { return sizes_.at(h); }

  Mat& weights(int h) { return weights_.at(h - 1); }
  const Mat& weights(int h) const { return weights_.at(h - 1); }
  const TransferFunction& transfer(int h) const { return transfers_.at(h - 1); }
  void set_transfer(int h, TransferFunction f) { transfers_.at(h - 1) = f; }

  /// Entries with mask 0 are held fixed by training and excluded from parameters().
  Mat& mask(int h) { return mask_.at(h - 1); }
  const Mat& mask(int h) const { return mask_.at(h - 1); }

  const std::vector<std::vector<WeightRef>>& shared_groups() const { return groups_; }

  /// Ties the listed entries together; their current values are replaced by the value of the first entry.
  void add_shared_group(std::vector<WeightRef> group) {
    require(!group.empty(), "empty shared group");
    for (const auto& r : group) check_ref(r);
    const double v = at(group[0]);
    for (const auto& r : group) at(r) = v;
    groups_.push_back(std::move(group));
  }

  double& at(const WeightRef& r) { return weights_[r.layer - 1](r.row, r.col); }
  double at(const WeightRef& r) const { return weights_[r.layer - 1](r.row, r.col); }

  /// Total entries including biases.
  Eigen::Index weight_count() const {
    Eigen::Index n = 0;
    for (const auto& w : weights_) n += w.size();
    return n;
  }

  /// Free parameters: trainable entries outside shared groups, then one entry per group.
  Vec parameters() const {
    Vec p(parameter_count());
    Eigen::Index k = 0;
    for_each_free([&](int h, Eigen::Index i, Eigen::Index j) { p(k++) = weights_[h - 1](i, j); });
    for (const auto& g : groups_) p(k++) = at(g[0]);
    return p;
  }

  void set_parameters(const Vec& p) {
    require(p.size() == parameter_count(), "parameter vector has the wrong length");
    Eigen::Index k = 0;
    for_each_free([&](int h, Eigen::Index i, Eigen::Index j) { weights_[h - 1](i, j) = p(k++); });
    for (const auto& g : groups_) {
      for (const auto& r : g) at(r) = p(k);
      ++k;
    }
  }

  /// Per-entry gradients collapsed onto the free parameters; a shared group gets the sum over its copies.
  Vec collapse(const std::vector<Mat>& per_entry) const {
    Vec g(parameter_count());
    Eigen::Index k = 0;
    for_each_free([&](int h, Eigen::Index i, Eigen::Index j) { g(k++) = per_entry[h - 1](i, j); });
    for (const auto& grp : groups_) {
      double s = 0;
      for (const auto& r : grp) s += per_entry[r.layer - 1](r.row, r.col);
      g(k++) = s;
    }
    return g;
  }

  Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    for_each_free([&](int, Eigen::Index, Eigen::Index) { ++n; });
    return n + static_cast<Eigen::Index>(groups_.size());
  }

  /// Adds per-entry updates, summing each shared group once and applying the sum to all copies.
  void apply_update(const std::vector<Mat>& delta) {
    require(delta.size() == weights_.size(), "update has the wrong number of layers");
    set_parameters(parameters() + collapse(delta));
  }

  void randomize_normal(Rng& rng, double sd) {
    for (int h = 1; h <= depth(); ++h)
      for (Eigen::Index i = 0; i < weights(h).rows(); ++i)
        for (Eigen::Index j = 0; j < weights(h).cols(); ++j)
          if (mask(h)(i, j) != 0) weights(h)(i, j) = normal(rng, 0, sd);
    resync_groups();
  }

  void randomize_uniform(Rng& rng, double half_width, bool zero_bias = false) {
    for (int h = 1; h <= depth(); ++h)
      for (Eigen::Index i = 0; i < weights(h).rows(); ++i)
        for (Eigen::Index j = 0; j < weights(h).cols(); ++j)
          if (mask(h)(i, j) != 0) weights(h)(i, j) = (zero_bias && j == 0) ? 0.0 : uniform(rng, -half_width, half_width);
    resync_groups();
  }

  void resync_groups() {
    for (const auto& g : groups_) {
      const double v = at(g[0]);
      for (const auto& r : g) at(r) = v;
    }
  }

 private:
  template <typename F>
  void for_each_free(F&& f) const {
    std::vector<Mat> in_group;
    for (const auto& w : weights_) in_group.push_back(Mat::Zero(w.rows(), w.cols()));
    for (const auto& g : groups_)
      for (const auto& r : g) in_group[r.layer - 1](r.row, r.col) = 1;
    for (int h = 1; h <= depth(); ++h)
      for (Eigen::Index j = 0; j < weights_[h - 1].cols(); ++j)
        for (Eigen::Index i = 0; i < weights_[h - 1].rows(); ++i)
          if (mask_[h - 1](i, j) != 0 && in_group[h - 1](i, j) == 0) f(h, i, j);
  }

  void check_ref(const WeightRef& r) const {
    require(r.layer >= 1 && r.layer <= depth(), "shared group refers to a missing layer");
    require(r.row >= 0 && r.row < weights_[r.layer - 1].rows() && r.col >= 0 && r.col < weights_[r.layer - 1].cols(),
            "shared group refers to a missing weight");
  }

  std::vector<int> sizes_;
  std::vector<TransferFunction> transfers_;
  std::vector<Mat> weights_;
  std::vector<Mat> mask_;
  std::vector<std::vector<WeightRef>> groups_;
};

/// Activities per layer; O[0] is the input, S[0] is unused.
struct Activations {
  std::vector<Vec> S;
  std::vector<Vec> O;
  const Vec& output() const { return O.back(); }
};

inline Activations forward(const LayeredNet& net, const Vec& input, OpCounter* ops = nullptr) {
  require(input.size() == net.size(0), "input has the wrong dimension");
  Activations a;
  a.S.push_back(Vec());
  a.O.push_back(input);
  for (int h = 1; h <= net.depth(); ++h) {
    const Mat& w = net.weights(h);
    Vec s = w.col(0) + w.rightCols(w.cols() - 1) * a.O.back();
    const auto& f = net.transfer(h);
    Vec o(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) o(i) = f(s(i));
    if (ops) {
      ops->multiply_add += w.size();
      ops->transfer += s.size();
    }
    a.S.push_back(std::move(s));
    a.O.push_back(std::move(o));
  }
  return a;
}

/// Rows of X propagated through layers from+1..to; returns the activity at layer `to`.
inline Mat forward_batch(const LayeredNet& net, const Mat& x, int from = 0, int to = -1) {
  if (to < 0) to = net.depth();
  require(x.cols() == net.size(from), "batch has the wrong dimension");
  Mat o = x;
  for (int h = from + 1; h <= to; ++h) {
    const Mat& w = net.weights(h);
    Mat s = o * w.rightCols(w.cols() - 1).transpose();
    s.rowwise() += w.col(0).transpose();
    const auto& f = net.transfer(h);
    o = s.unaryExpr([&](double v) { return f(v); });
  }
  return o;
}

enum class Loss { squared, cross_entropy };

inline double loss_value(const Vec& out, const Vec& target, Loss loss) {
  require(out.size() == target.size(), "target has the wrong dimension");
  if (loss == Loss::squared) return 0.5 * (target - out).squaredNorm();
  double e = 0;
  for (Eigen::Index i = 0; i < out.size(); ++i)
    e -= target(i) * std::log(out(i)) + (1 - target(i)) * std::log(1 - out(i));
  return e;
}

inline double error_of(const LayeredNet& net, const Vec& input, const Vec& target, Loss loss = Loss::squared,
                       OpCounter* ops = nullptr) {
  Activations a = forward(net, input, ops);
  if (ops) ops->multiply_add += a.output().size();
  return loss_value(a.output(), target, loss);
}

struct Backprop {
  std::vector<Mat> gradient;  // dE/dw per entry, one matrix per layer
  std::vector<Vec> delta;     // dE/dS per layer (index 0 unused)
  double error = 0;
};

/// Squared-error targets attached to layers; index h targets layer h (entry 0 unused).
using LayerTargets = std::vector<std::optional<Vec>>;

inline LayerTargets output_target(const LayeredNet& net, const Vec& target) {
  LayerTargets t(static_cast<std::size_t>(net.depth() + 1));
  t.back() = target;
  return t;
}

/// Sum over targeted layers of the loss; cross entropy applies to the output layer only.
inline double layered_error(const LayeredNet& net, const Activations& a, const LayerTargets& targets,
                            Loss loss = Loss::squared) {
  require(targets.size() == static_cast<std::size_t>(net.depth() + 1), "one target slot per layer");
  double e = 0;
  for (int h = 1; h <= net.depth(); ++h)
    if (targets[h]) e += loss_value(a.O[h], *targets[h], h == net.depth() ? loss : Loss::squared);
  return e;
}

/// Exact dE/dw for every entry; masked entries get zero.
inline Backprop backprop(const LayeredNet& net, const Activations& a, const LayerTargets& targets,
                         Loss loss = Loss::squared, OpCounter* ops = nullptr) {
  const int L = net.depth();
  for (int h = 1; h <= L; ++h)
    if (!net.transfer(h).differentiable())
      throw Error("non-differentiable; use PALR/PWLR or steep-sigmoid surrogate");
  Backprop bp;
  bp.error = layered_error(net, a, targets, loss);
  bp.delta.assign(L + 1, Vec());
  bp.gradient.assign(L, Mat());
  Vec back = Vec::Zero(net.size(L));  // dE/dO arriving from the layer above
  for (int h = L; h >= 1; --h) {
    Vec dEdO = back;
    if (targets[h]) {
      const Vec& out = a.O[h];
      if (h == L && loss == Loss::cross_entropy) {
        require(net.transfer(L).kind == TransferKind::logistic01, "cross entropy needs a logistic output layer");
        dEdO += (out - *targets[h]).cwiseQuotient(out.cwiseProduct(Vec::Ones(out.size()) - out));
      } else {
        dEdO += out - *targets[h];
      }
      if (ops) ops->multiply_add += out.size();
    }
    const auto& f = net.transfer(h);
    Vec d(dEdO.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = dEdO(i) * f.derivative(a.S[h](i));
    if (ops) {
      ops->multiply_add += d.size();
      ops->derivative += d.size();
    }
    bp.delta[h] = d;
    const Mat& w = net.weights(h);
    Mat g(w.rows(), w.cols());
    g.col(0) = d;
    g.rightCols(w.cols() - 1) = d * a.O[h - 1].transpose();
    bp.gradient[h - 1] = g.cwiseProduct(net.mask(h));
    if (ops) ops->multiply_add += w.size();
    if (h > 1) {
      back = w.rightCols(w.cols() - 1).transpose() * d;
      if (ops) ops->multiply_add += w.size() - w.rows();
    }
  }
  return bp;
}

inline Backprop backprop(const LayeredNet& net, const Activations& a, const Vec& target, Loss loss = Loss::squared,
                         OpCounter* ops = nullptr) {
  return backprop(net, a, output_target(net, target), loss, ops);
}

/// Gradient with respect to the free parameters (shared groups summed).
inline Vec backprop_gradient(const LayeredNet& net, const Vec& input, const Vec& target, Loss loss = Loss::squared,
                             OpCounter* ops = nullptr) {
  Activations a = forward(net, input, ops);
  return net.collapse(backprop(net, a, target, loss, ops).gradient);
}

inline Vec backprop_gradient(const LayeredNet& net, const Vec& input, const LayerTargets& targets,
                             Loss loss = Loss::squared, OpCounter* ops = nullptr) {
  Activations a = forward(net, input, ops);
  return net.collapse(backprop(net, a, targets, loss, ops).gradient);
}

/// Central finite differences on the free parameters.
inline Vec finite_difference_gradient(const LayeredNet& net, const Vec& input, const LayerTargets& targets,
                                      double eps = 1e-5, Loss loss = Loss::squared) {
  LayeredNet probe = net;
  const Vec p = net.parameters();
  Vec g(p.size());
  auto err = [&] { return layered_error(probe, forward(probe, input), targets, loss); };
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    Vec q = p;
    q(k) = p(k) + eps;
    probe.set_parameters(q);
    const double ep = err();
    q(k) = p(k) - eps;
    probe.set_parameters(q);
    const double em = err();
    g(k) = (ep - em) / (2 * eps);
  }
  return g;
}

inline Vec finite_difference_gradient(const LayeredNet& net, const Vec& input, const Vec& target, double eps = 1e-5,
                                      Loss loss = Loss::squared) {
  return finite_difference_gradient(net, input, output_target(net, target), eps, loss);
}

/// Max over components of |a - b| / max(|a|, |b|, floor), floor = 1e-3 * max|a|.
inline double max_relative_error(const Vec& a, const Vec& b) {
  require(a.size() == b.size(), "vectors differ in length");
  const double floor = std::max(1e-3 * a.cwiseAbs().maxCoeff(), 1e-12);
  double worst = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double den = std::max({std::abs(a(i)), std::abs(b(i)), floor});
    worst = std::max(worst, std::abs(a(i) - b(i)) / den);
  }
  return worst;
}

}  // namespace locallearn
