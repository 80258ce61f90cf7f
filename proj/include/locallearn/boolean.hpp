#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "locallearn/dataset.hpp"
#include "locallearn/error.hpp"
#include "locallearn/netsim.hpp"
#include "locallearn/parallel.hpp"
#include "locallearn/random.hpp"
#include "locallearn/rules.hpp"

namespace locallearn {

/// Truth table over {-1,+1}^n: bit r of `table` is 1 when f(row r) = +1.
/// Row r sets input k to +1 when bit k of r is set.
struct BooleanFunction {
  int n = 0;
  std::uint64_t table = 0;

  int rows() const { return 1 << n; }
  int value(int row) const { return (table >> row) & 1 ? 1 : -1; }
  TrainingSet training_set() const { return boolean_table(n, table); }
  bool operator==(const BooleanFunction&) const = default;
};

inline constexpr int max_inputs_all = 3;
inline constexpr int max_inputs_monotone = 4;

inline bool is_monotone(const BooleanFunction& f) {
  for (int r = 0; r < f.rows(); ++r)
    for (int k = 0; k < f.n; ++k)
      if (!((r >> k) & 1) && f.value(r) > f.value(r | (1 << k))) return false;
  return true;
}

namespace detail {

inline std::vector<std::uint64_t> monotone_tables(int n) {
  if (n == 0) return {0, 1};
  const auto sub = monotone_tables(n - 1);
  const int half = 1 << (n - 1);
  std::vector<std::uint64_t> out;
  // f(x, x_top) = x_top ? f1(x) : f0(x) with f0 <= f1
  for (auto f0 : sub)
    for (auto f1 : sub)
      if ((f0 & ~f1) == 0) out.push_back(f0 | (f1 << half));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

/// All functions of n inputs, or the monotone ones built recursively from pairs f0 <= f1 on n-1 inputs.
inline std::vector<BooleanFunction> enumerate_functions(int n, bool monotone_only, int cap_all = max_inputs_all,
                                                        int cap_monotone = max_inputs_monotone) {
  require(n >= 1, "n must be at least 1");
  require(n <= (monotone_only ? cap_monotone : cap_all), "n above the enumeration cap");
  std::vector<BooleanFunction> out;
  if (monotone_only) {
    for (auto t : detail::monotone_tables(n)) out.push_back({n, t});
    return out;
  }
  const std::uint64_t count = std::uint64_t{1} << (1 << n);
  out.reserve(count);
  for (std::uint64_t t = 0; t < count; ++t) out.push_back({n, t});
  return out;
}

/// Exact separability by search over integer weights in [-bound, bound]; bound 4 suffices for n <= 4
/// (every threshold function of four variables has an integer realization with weights up to 3).
inline bool linearly_separable(const BooleanFunction& f, int bound = 4) {
  require(f.n <= 5, "separability search supports n <= 5");
  std::vector<int> w(f.n, -bound);
  for (;;) {
    long lo_neg = -1000000, hi_pos = 1000000;  // max over negatives, min over positives
    for (int r = 0; r < f.rows(); ++r) {
      long s = 0;
      for (int k = 0; k < f.n; ++k) s += (r >> k) & 1 ? w[k] : -w[k];
      if (f.value(r) > 0)
        hi_pos = std::min(hi_pos, s);
      else
        lo_neg = std::max(lo_neg, s);
    }
    if (lo_neg < hi_pos) return true;
    int k = 0;
    while (k < f.n && w[k] == bound) w[k++] = -bound;
    if (k == f.n) return false;
    ++w[k];
  }
}

/// Independent check: batch perceptron on the +-1 table with bias, bounded iterations.
inline bool perceptron_separable(const BooleanFunction& f, int max_epochs = 10000) {
  const TrainingSet ts = f.training_set();
  const Mat x = add_bias_column(ts.inputs);
  Vec w = Vec::Zero(x.cols());
  for (int e = 0; e < max_epochs; ++e) {
    bool clean = true;
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
      const double y = (*ts.targets)(t, 0);
      if (y * x.row(t).dot(w) <= 0) {
        w += y * x.row(t).transpose();
        clean = false;
      }
    }
    if (clean) return true;
  }
  return false;
}

enum class Depth { shallow, two_layer };

struct CensusConfig {
  int restarts = 4096;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  int hidden_width = 0;  // 0 means 2^n
  int shallow_epochs = 5;
  EtaSchedule shallow_eta{0.01, true};
  double shallow_init_sd = 0.05;
  DeepLocalConfig deep;
};

/// Exact truth-table match on the deterministic forward pass; any S = 0 counts as a failure.
inline bool reproduces(const LayeredNet& net, const TrainingSet& ts) {
  if (!tie_free(net, ts.inputs)) return false;
  const Mat out = forward_batch(net, ts.inputs);
  return (out.col(0) - ts.targets->col(0)).cwiseAbs().maxCoeff() == 0.0;
}

/// One training run from a fresh random initialization.
inline bool train_once(const BooleanFunction& f, const LearningRule& rule, Depth depth, std::uint64_t seed,
                       const CensusConfig& cfg = {}) {
  const TrainingSet ts = f.training_set();
  const LearningRule top = rule.supervised() ? rule : clamped_variant(rule);
  if (depth == Depth::shallow) {
    LayeredNet net({f.n, 1}, {threshold_transfer()});
    Rng rng = make_rng(seed, 20);
    for (Eigen::Index j = 0; j < net.weights(1).cols(); ++j) net.weights(1)(0, j) = normal(rng, 0, cfg.shallow_init_sd);
    const Mat x = add_bias_column(ts.inputs);
    LayerTrainOptions lo{cfg.shallow_epochs, cfg.shallow_eta, true};
    train_layer(top, x, &*ts.targets, net.transfer(1), net.weights(1), lo, rng, [](int) {});
    return reproduces(net, ts);
  }
  require(!rule.supervised(), "two-layer census needs an unsupervised hidden rule");
  const int width = cfg.hidden_width > 0 ? cfg.hidden_width : (1 << f.n);
  LayeredNet net({f.n, width, 1}, {threshold_transfer()});
  DeepLocalConfig dc = cfg.deep;
  dc.seed = seed;
  dc.initialize = true;
  return reproduces(train_deep_local(net, rule, top, ts, dc), ts);
}

/// Learnt in at least one of `restarts` runs; stops at the first success.
inline bool learnable(const BooleanFunction& f, const LearningRule& rule, Depth depth, int restarts,
                      std::uint64_t seed, const CensusConfig& cfg = {}) {
  require(restarts >= 1, "restarts must be at least 1");
  for (int r = 0; r < restarts; ++r)
    if (train_once(f, rule, depth, derive_seed(seed, static_cast<std::uint64_t>(r)), cfg)) return true;
  return false;
}

struct CensusRow {
  int fan_in = 0;
  bool monotone = false;
  std::string rule_name;
  int shallow_count = 0;
  int deep_count = 0;
  int total = 0;
  int separable_count = 0;
  int restarts = 0;
  std::uint64_t seed = 0;
  std::vector<bool> shallow;  // per enumerated function
  std::vector<bool> deep;
};

/// Counts shallow and two-layer learnable functions per rule. Seeds derive from (seed, rule, function, restart),
/// so results do not depend on the thread count.
inline std::vector<CensusRow> census(int n, bool monotone_only, const std::vector<LearningRule>& rule_list,
                                     const CensusConfig& cfg) {
  const auto fns = enumerate_functions(n, monotone_only);
  std::vector<char> sep(fns.size());
  parallel_for(fns.size(), cfg.threads, [&](std::size_t i) { sep[i] = linearly_separable(fns[i]); });
  const int sep_count = static_cast<int>(std::count(sep.begin(), sep.end(), 1));
  std::vector<CensusRow> rows;
  for (std::size_t ri = 0; ri < rule_list.size(); ++ri) {
    const LearningRule& rule = rule_list[ri];
    std::vector<char> sh(fns.size()), dp(fns.size());
    parallel_for(fns.size(), cfg.threads, [&](std::size_t i) {
      const std::uint64_t base = derive_seed(cfg.seed, (ri << 20) + fns[i].table);
      sh[i] = learnable(fns[i], rule, Depth::shallow, cfg.restarts, derive_seed(base, 1), cfg);
      dp[i] = learnable(fns[i], rule, Depth::two_layer, cfg.restarts, derive_seed(base, 2), cfg);
    });
    CensusRow row;
    row.fan_in = n;
    row.monotone = monotone_only;
    row.rule_name = rule.name();
    row.total = static_cast<int>(fns.size());
    row.separable_count = sep_count;
    row.restarts = cfg.restarts;
    row.seed = cfg.seed;
    for (std::size_t i = 0; i < fns.size(); ++i) {
      row.shallow.push_back(sh[i]);
      row.deep.push_back(dp[i]);
      row.shallow_count += sh[i];
      row.deep_count += dp[i];
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

/// The three rules of the census tables.
inline std::vector<LearningRule> census_rules() { return {rules::simple_hebb(), rules::oja(), rules::bounded_hebb()}; }

}  // namespace locallearn
