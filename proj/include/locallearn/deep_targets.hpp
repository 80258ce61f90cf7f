#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "locallearn/dataset.hpp"
#include "locallearn/error.hpp"
#include "locallearn/network.hpp"
#include "locallearn/random.hpp"

namespace locallearn {

enum class TieBreak { closest_to_current, random };

/// How candidate activity vectors for a layer are generated.
struct SamplerSpec {
  bool training_activities = true;  // current activities of the training examples
  int perturbation_radius = 0;      // >0 adds one copy of each activity with that many flipped bits
  int random_count = 1000;          // fair-coin (or biased) random vectors
  double random_p = 0.5;            // probability of +1 per component
  int exhaustive_cap = 12;          // widths up to this may be enumerated
  int exhaustive_width = 10;        // layers this narrow are enumerated instead of sampled
  bool force_exhaustive = false;
  TieBreak tie_break = TieBreak::closest_to_current;
};

enum class ScheduleOrder { bottom_up, top_down, alternating, custom };

struct ScheduleSpec {
  ScheduleOrder order = ScheduleOrder::bottom_up;
  std::vector<int> custom;  // layer visits per epoch when order == custom
  int epochs = 100;

  std::vector<int> visits(int epoch, int depth) const {
    std::vector<int> v;
    if (order == ScheduleOrder::custom) {
      v = custom;
    } else {
      for (int h = 1; h <= depth; ++h) v.push_back(h);
      const bool down = order == ScheduleOrder::top_down || (order == ScheduleOrder::alternating && epoch % 2 == 0);
      if (down) std::reverse(v.begin(), v.end());
    }
    for (int h = 1; h <= depth; ++h)
      require(std::find(v.begin(), v.end(), h) != v.end(), "schedule must visit every layer each epoch");
    for (int h : v) require(h >= 1 && h <= depth, "schedule refers to a missing layer");
    return v;
  }
};

enum class ThetaKind { perceptron, delta_rule };
enum class Distortion { hamming, squared_error };

/// Per-layer optimizer: batch updates rate * mean_t (T - y) x, y = O (perceptron) or S (delta rule).
struct LayerOptimizer {
  ThetaKind kind = ThetaKind::perceptron;
  int iterations = 10;
  double rate = 1.0;
  Distortion distortion = Distortion::hamming;
};

/// Target that makes a target-based rule eta (T - O) o_pre reproduce the update F.
inline double rule_to_target(double f_value, double o_post, double o_pre, double eta) {
  require(o_pre != 0.0, "presynaptic activity is zero");
  require(eta != 0.0, "learning rate is zero");
  return f_value / (eta * o_pre) + o_post;
}

namespace detail {

/// Pairwise distortion between rows of a and rows of b.
inline Mat pairwise_distortion(const Mat& a, const Mat& b, Distortion d) {
  Mat sq = (-2.0 * a * b.transpose()).colwise() + a.rowwise().squaredNorm();
  sq.rowwise() += b.rowwise().squaredNorm().transpose();
  sq = sq.cwiseMax(0.0);
  if (d == Distortion::hamming) return (sq / 4.0).array().round().matrix();
  return sq;
}

}  // namespace detail

/// Candidate set S^h for layer h given the current activities at that layer.
inline Mat sample_candidates(int width, const Mat& current, const SamplerSpec& sp, Rng& rng) {
  const bool exhaustive = sp.force_exhaustive || width <= sp.exhaustive_width;
  if (exhaustive) {
    require(width <= sp.exhaustive_cap, "layer too wide for exhaustive sampling");
    const Eigen::Index k = Eigen::Index{1} << width;
    Mat s(k, width);
    for (Eigen::Index m = 0; m < k; ++m)
      for (int i = 0; i < width; ++i) s(m, i) = (m >> i) & 1 ? 1.0 : -1.0;
    return s;
  }
  std::vector<Eigen::RowVectorXd> rows;
  if (sp.training_activities)
    for (Eigen::Index t = 0; t < current.rows(); ++t) rows.push_back(current.row(t));
  if (sp.perturbation_radius > 0)
    for (Eigen::Index t = 0; t < current.rows(); ++t) {
      Eigen::RowVectorXd v = current.row(t);
      std::uniform_int_distribution<int> pick(0, width - 1);
      for (int f = 0; f < sp.perturbation_radius; ++f) {
        const int i = pick(rng);
        v(i) = -v(i);
      }
      rows.push_back(v);
    }
  for (int r = 0; r < sp.random_count; ++r) {
    Eigen::RowVectorXd v(width);
    for (int i = 0; i < width; ++i) v(i) = coin(rng, sp.random_p) ? 1.0 : -1.0;
    rows.push_back(v);
  }
  require(!rows.empty(), "empty sample set");
  Mat s(static_cast<Eigen::Index>(rows.size()), width);
  for (std::size_t i = 0; i < rows.size(); ++i) s.row(static_cast<Eigen::Index>(i)) = rows[i];
  return s;
}

/// Targets for layer h for all examples. below: activities at h-1 (used to group examples that share
/// an activity vector), current: activities at h, finals: final targets.
inline Mat select_targets(const LayeredNet& net, int h, const Mat& candidates, const Mat& below, const Mat& current,
                          const Mat& finals, const SamplerSpec& sp, Distortion dist, Rng& rng,
                          bool group_shared = true) {
  const Mat out = forward_batch(net, candidates, h, net.depth());
  Mat d = detail::pairwise_distortion(out, finals, dist);          // candidates x examples
  const Mat near = detail::pairwise_distortion(candidates, current, dist);
  const Eigen::Index m = finals.rows();
  std::vector<Eigen::Index> group(static_cast<std::size_t>(m));
  for (Eigen::Index t = 0; t < m; ++t) group[t] = t;
  if (group_shared) {
    std::map<std::vector<double>, Eigen::Index> first;
    for (Eigen::Index t = 0; t < m; ++t) {
      std::vector<double> key(static_cast<std::size_t>(below.cols()));
      for (Eigen::Index j = 0; j < below.cols(); ++j) key[j] = below(t, j);
      auto [it, fresh] = first.emplace(std::move(key), t);
      group[t] = it->second;
    }
    Mat summed = Mat::Zero(d.rows(), d.cols());
    for (Eigen::Index t = 0; t < m; ++t) summed.col(group[t]) += d.col(t);
    for (Eigen::Index t = 0; t < m; ++t) d.col(t) = summed.col(group[t]);
  }
  Mat targets(m, candidates.cols());
  for (Eigen::Index t = 0; t < m; ++t) {
    if (group[t] != t) {
      targets.row(t) = targets.row(group[t]);
      continue;
    }
    const double best = d.col(t).minCoeff();
    std::vector<Eigen::Index> argmin;
    for (Eigen::Index s = 0; s < d.rows(); ++s)
      if (d(s, t) == best) argmin.push_back(s);
    Eigen::Index pick = argmin[0];
    if (sp.tie_break == TieBreak::random) {
      pick = argmin[std::uniform_int_distribution<std::size_t>(0, argmin.size() - 1)(rng)];
    } else {
      for (Eigen::Index s : argmin)
        if (near(s, t) < near(pick, t)) pick = s;
    }
    targets.row(t) = candidates.row(pick);
  }
  return targets;
}

/// Target for a single example at layer h (1 <= h <= L).
inline Vec sample_target(const LayeredNet& net, int h, const Vec& input, const Vec& final_target,
                         const SamplerSpec& sp, std::uint64_t seed, Distortion dist = Distortion::hamming) {
  require(h >= 1 && h <= net.depth(), "layer out of range");
  if (h == net.depth()) return final_target;
  Rng rng = make_rng(seed, 30);
  const Mat x = input.transpose();
  const Mat below = forward_batch(net, x, 0, h - 1);
  const Mat current = forward_batch(net, below, h - 1, h);
  const Mat cand = sample_candidates(net.size(h), current, sp, rng);
  return select_targets(net, h, cand, below, current, final_target.transpose(), sp, dist, rng).row(0).transpose();
}

/// Runs Theta on layer h with the other layers fixed. x: activities at h-1, targets: desired activities at h.
inline void optimize_layer(LayeredNet& net, int h, const Mat& x, const Mat& targets, const LayerOptimizer& theta) {
  require(theta.iterations >= 1, "iterations must be at least 1");
  require(targets.cols() == net.size(h) && targets.rows() == x.rows(), "targets do not match the layer");
  Mat& w = net.weights(h);
  const Mat xb = [&] {
    Mat o(x.rows(), x.cols() + 1);
    o.col(0).setOnes();
    o.rightCols(x.cols()) = x;
    return o;
  }();
  const double scale = theta.rate / static_cast<double>(x.rows());
  for (int it = 0; it < theta.iterations; ++it) {
    const Mat s = xb * w.transpose();
    Mat y;
    if (theta.kind == ThetaKind::perceptron) {
      const auto& f = net.transfer(h);
      y = s.unaryExpr([&](double v) { return f(v); });
    } else {
      y = s;
    }
    w += (scale * (targets - y).transpose() * xb).cwiseProduct(net.mask(h));
  }
}

struct DeepTargetsResult {
  std::vector<double> train_error;  // index 0 is the initial error
  std::vector<double> test_error;
};

/// Mean per-component, per-example distortion of the net output against the targets.
inline double mean_distortion(const LayeredNet& net, const Mat& inputs, const Mat& targets, Distortion d) {
  if (inputs.rows() == 0) return 0.0;
  const Mat out = forward_batch(net, inputs);
  const double sq = (out - targets).squaredNorm();
  const double per = d == Distortion::hamming ? sq / 4.0 : sq;
  return per / static_cast<double>(targets.size());
}

struct DeepTargetsConfig {
  ScheduleSpec schedule;
  SamplerSpec sampler;
  LayerOptimizer theta;
  bool group_shared_inputs = true;
  std::uint64_t seed = 0;
};

/// Outer loop over epochs and scheduled layers; inner loop samples targets for every example, then runs Theta.
/// Activities are recomputed at every layer visit.
template <typename Callback>
DeepTargetsResult train_deep_targets(LayeredNet& net, const TrainingSet& train, const TrainingSet* test,
                                     const DeepTargetsConfig& cfg, Callback&& on_epoch) {
  require(train.targets.has_value(), "deep targets training needs targets");
  require(train.input_dim() == net.size(0) && train.targets->cols() == net.size(net.depth()),
          "data does not match the net");
  Rng rng = make_rng(cfg.seed, 31);
  const Mat& x = train.inputs;
  const Mat& finals = *train.targets;
  DeepTargetsResult res;
  auto record = [&] {
    res.train_error.push_back(mean_distortion(net, x, finals, cfg.theta.distortion));
    res.test_error.push_back(test && test->size() ? mean_distortion(net, test->inputs, *test->targets, cfg.theta.distortion)
                                                  : 0.0);
  };
  record();
  on_epoch(0, res);
  const int L = net.depth();
  for (int e = 1; e <= cfg.schedule.epochs; ++e) {
    for (int h : cfg.schedule.visits(e, L)) {
      const Mat below = forward_batch(net, x, 0, h - 1);
      Mat targets;
      if (h == L) {
        targets = finals;
      } else {
        const Mat current = forward_batch(net, below, h - 1, h);
        const Mat cand = sample_candidates(net.size(h), current, cfg.sampler, rng);
        targets = select_targets(net, h, cand, below, current, finals, cfg.sampler, cfg.theta.distortion, rng,
                                 cfg.group_shared_inputs);
      }
      optimize_layer(net, h, below, targets, cfg.theta);
    }
    record();
    on_epoch(e, res);
  }
  return res;
}

inline DeepTargetsResult train_deep_targets(LayeredNet& net, const TrainingSet& train, const TrainingSet* test,
                                            const DeepTargetsConfig& cfg) {
  return train_deep_targets(net, train, test, cfg, [](int, const DeepTargetsResult&) {});
}

/// Threshold-gate net with weights uniform in +-1/sqrt(fan-in) and zero biases.
inline LayeredNet threshold_net(const std::vector<int>& sizes, std::uint64_t seed) {
  LayeredNet net(sizes, {threshold_transfer()});
  Rng rng = make_rng(seed, 32);
  for (int h = 1; h <= net.depth(); ++h) {
    const double a = 1.0 / std::sqrt(static_cast<double>(sizes[h - 1]));
    Mat& w = net.weights(h);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      w(i, 0) = 0.0;
      for (Eigen::Index j = 1; j < w.cols(); ++j) w(i, j) = uniform(rng, -a, a);
    }
  }
  return net;
}

struct AutoencoderSpec {
  std::vector<int> sizes{100, 30, 10, 30, 100};
  ClusteredSpec data{10, 100, 100, 0.05, 100};
  int epochs = 100;
  std::uint64_t seed = 1;
};

struct AutoencoderRun {
  LayeredNet net;
  DeepTargetsResult result;
  double best_train_reduction = 0;  // 1 - min_epoch error / initial error
  double best_test_reduction = 0;
};

template <typename Callback>
AutoencoderRun run_autoencoder(const AutoencoderSpec& spec, Callback&& on_epoch) {
  const ClusteredData data = clustered_binary(spec.data, spec.seed);
  AutoencoderRun run;
  run.net = threshold_net(spec.sizes, derive_seed(spec.seed, 1));
  DeepTargetsConfig cfg;
  cfg.schedule.order = ScheduleOrder::custom;
  for (int h = 1; h < static_cast<int>(spec.sizes.size()); ++h) cfg.schedule.custom.push_back(h);
  cfg.schedule.epochs = spec.epochs;
  cfg.seed = derive_seed(spec.seed, 2);
  run.result = train_deep_targets(run.net, data.train, &data.test, cfg, on_epoch);
  const auto& tr = run.result.train_error;
  const auto& te = run.result.test_error;
  if (tr[0] > 0) run.best_train_reduction = 1.0 - *std::min_element(tr.begin(), tr.end()) / tr[0];
  if (te[0] > 0) run.best_test_reduction = 1.0 - *std::min_element(te.begin(), te.end()) / te[0];
  return run;
}

}  // namespace locallearn
