#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "locallearn/boolean.hpp"
#include "locallearn/channel.hpp"
#include "locallearn/deep_targets.hpp"
#include "locallearn/hopfield.hpp"
#include "locallearn/moments.hpp"
#include "locallearn/netsim.hpp"
#include "locallearn/rules.hpp"
#include "locallearn/ssh.hpp"

namespace locallearn {

enum class Budget { quick, full };

inline Budget budget_from_string(const std::string& s) {
  if (s == "quick") return Budget::quick;
  if (s == "full") return Budget::full;
  throw Error("unknown budget '" + s + "' (expected quick or full)");
}

inline std::string to_string(Budget b) { return b == Budget::quick ? "quick" : "full"; }

struct AcceptanceOptions {
  Budget budget = Budget::quick;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;
  double seconds = 0;
  double limit_seconds = 0;
};

namespace detail {

class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (!first_) out_ << "; ";
    first_ = false;
    out_ << what << (ok ? "" : " [FAIL]");
    pass_ = pass_ && ok;
  }
  bool pass() const { return pass_; }
  std::string detail() const { return out_.str(); }

 private:
  std::ostringstream out_;
  bool pass_ = true;
  bool first_ = true;
};

inline std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

template <typename F>
CriterionResult timed(int id, std::string title, double limit, F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Checks c;
  body(c);
  CriterionResult r;
  r.id = id;
  r.title = std::move(title);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.limit_seconds = limit;
  c.expect(r.seconds <= limit, "runtime " + fmt(r.seconds, 3) + "s <= " + fmt(limit, 3) + "s");
  r.pass = c.pass();
  r.detail = c.detail();
  return r;
}

}  // namespace detail

/// Census counts for fan-in n (all functions or monotone ones) against the expected table entries.
inline void census_checks(detail::Checks& c, int n, bool monotone, int shallow, int deep, int total,
                          const AcceptanceOptions& o) {
  CensusConfig cfg;
  cfg.seed = o.seed;
  cfg.threads = o.threads;
  const auto fns = enumerate_functions(n, monotone);
  for (const auto& row : census(n, monotone, census_rules(), cfg)) {
    const std::string tag = (monotone ? "monotone n=" : "n=") + std::to_string(n) + " " + row.rule_name;
    c.expect(row.total == total, tag + " total " + std::to_string(row.total) + "/" + std::to_string(total));
    c.expect(row.shallow_count == shallow,
             tag + " shallow " + std::to_string(row.shallow_count) + "/" + std::to_string(shallow));
    c.expect(row.deep_count == deep, tag + " deep " + std::to_string(row.deep_count) + "/" + std::to_string(deep));
    bool same = row.shallow_count == row.separable_count;
    for (std::size_t i = 0; i < fns.size(); ++i) same = same && row.shallow[i] == linearly_separable(fns[i]);
    c.expect(same, tag + " shallow == separability oracle (" + std::to_string(row.separable_count) + ")");
  }
}

inline CriterionResult ac1_boolean_census(const AcceptanceOptions& o) {
  return detail::timed(1, "Boolean census n=2,3", 300, [&](detail::Checks& c) {
    census_checks(c, 2, false, 14, 16, 16, o);
    census_checks(c, 3, false, 104, 256, 256, o);
  });
}

inline CriterionResult ac2_monotone_census(const AcceptanceOptions& o) {
  return detail::timed(2, "Monotone census n=2,3,4", 900, [&](detail::Checks& c) {
    census_checks(c, 2, true, 6, 6, 6, o);
    census_checks(c, 3, true, 20, 20, 20, o);
    census_checks(c, 4, true, 150, 168, 168, o);
  });
}

/// Table entries recomputed from the closed forms, independently of table8_row.
inline bool table8_matches_formulas(double W, double N, double K, int D) {
  const double lk = std::log2(K);
  struct Expect {
    const char* name;
    const char* info;
    const char* comp;
    const char* rate;
    const char* impr;
    double i, c, r;
  };
  const std::vector<Expect> expect{
      {"PWGB", "1/W", "1", "1/W", "C/sqrt(W)", 1 / W, 1, 1 / W},
      {"PWLR", "D", "W", "D/W", "1", double(D), W, D / W},
      {"PWLB", "1", "W", "1/W", "(sqrt(3/W)/2) sum_i |g_i|", 1, W, 1 / W},
      {"PALR", "D", "N", "D/N", "1", double(D), N, D / N},
      {"PWGBK", "log K/W", "K", "(log K/W)/K", "C sqrt(log K)/sqrt(W)", lk / W, K, lk / W / K},
      {"PWGRK", "KD/W", "K", "D/W", "C sqrt(K)/sqrt(W)", K * D / W, K, D / W},
      {"BP", "D", "1", "D", "1", double(D), 1, double(D)},
  };
  const auto rows = table8(W, N, K, D);
  if (rows.size() != expect.size()) return false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const auto& e = expect[i];
    if (r.algorithm != e.name || r.information != e.info || r.computation != e.comp || r.rate != e.rate ||
        r.improvement != e.impr || r.I_W != e.i || r.C_W != e.c || r.R != e.r)
      return false;
    if (r.improvement == "1" ? r.O != 1.0 : !(r.O > 0 || K == 1) || r.O > 1.0) return false;
  }
  return true;
}

inline CriterionResult ac3_table8(const AcceptanceOptions& o) {
  return detail::timed(3, "Learning-channel table and scaling fits", 1200, [&](detail::Checks& c) {
    const int trials = o.budget == Budget::full ? 4000 : 1000;
    bool exact = true;
    for (double W : {100.0, 1e4, 1e6})
      for (double K : {1.0, 16.0, 1000.0}) exact = exact && table8_matches_formulas(W, 50, K, 64);
    c.expect(exact, "theoretical table matches closed forms");

    ScalingSpec s;
    s.seed = derive_seed(o.seed, 3);
    s.trials = trials;
    s.threads = o.threads;
    s.algorithm.kind = ChannelKind::PWGB;
    s.sizes = {64, 256, 1024};
    const auto pwgb = scaling_study(s);
    c.expect(std::abs(pwgb.fit.slope + 0.5) <= 0.1, "PWGB slope vs W " + detail::fmt(pwgb.fit.slope));

    s.algorithm.kind = ChannelKind::PWGRK;
    s.axis = ScalingAxis::K;
    s.sizes = {4, 16, 64};
    s.fixed_W = 4096;
    const auto pwgrk = scaling_study(s);
    c.expect(std::abs(pwgrk.fit.slope - 0.5) <= 0.1, "PWGRK slope vs K " + detail::fmt(pwgrk.fit.slope));

    s.algorithm.kind = ChannelKind::PWGBK;
    s.sizes = {2, 4, 8, 16, 32, 64, 128, 256};
    s.fixed_W = 256;
    s.regressor = ScalingRegressor::sqrt_log;
    const auto pwgbk = scaling_study(s);
    c.expect(pwgbk.fit.r2 >= 0.9, "PWGBK mean O on sqrt(log K) R^2 " + detail::fmt(pwgbk.fit.r2));

    const LayeredNet net = bench_net(64, derive_seed(o.seed, 4));
    const ChannelExample ex = bench_example(net, derive_seed(o.seed, 5));
    const ChannelReport bp = run({ChannelKind::BP}, net, ex, o.seed);
    c.expect(bp.O_emp == 1.0, "BP O_emp " + detail::fmt(bp.O_emp, 17));
    ChannelAlgorithm lr{ChannelKind::PWLR};
    lr.epsilon = 1e-6;
    const ChannelReport pwlr = run(lr, net, ex, o.seed);
    const double gap = (pwlr.step - bp.step).norm();
    c.expect(gap <= 1e-4, "PWLR vs BP direction " + detail::fmt(gap));
  });
}

inline CriterionResult ac4_optimality(const AcceptanceOptions&) {
  return detail::timed(4, "Rate and improvement dominance of BP", 60, [&](detail::Checks& c) {
    const auto v = dominance_check({1e2, 1e3, 1e4, 1e5, 1e6}, {10, 100, 1000}, {1, 10, 100, 1000}, {16, 32, 64});
    c.expect(v.empty(), std::to_string(v.size()) + " violations over 5x3x4x3 grid");
  });
}

struct DynamicsRow {
  std::string rule;
  std::string status;  // "linear", "riccati", "skipped: ..."
  double deviation = 0;  // relative for linear rules, absolute for the Riccati rule
};

/// Gaussian inputs (N=10, M=500, mean U(-0.25,0.25), sd 0.5) with a noisy linear teacher.
inline TrainingSet dynamics_dataset(std::uint64_t seed, int n = 10, int m = 500) {
  Rng rng = make_rng(seed, 50);
  GaussianSpec gs;
  gs.n = n;
  gs.m = m;
  gs.mean = Vec(n);
  for (int i = 0; i < n; ++i) gs.mean(i) = uniform(rng, -0.25, 0.25);
  gs.cov = 0.25 * Mat::Identity(n, n);
  gs.teacher = Vec(n);
  for (int i = 0; i < n; ++i) gs.teacher(i) = normal(rng, 0, 1 / std::sqrt(double(n)));
  gs.target_noise = 0.1;
  return gaussian(gs, derive_seed(seed, 51));
}

/// Simulated on-line weights of a linear unit against the per-presentation recurrence evaluated at k*M steps.
inline std::vector<DynamicsRow> dynamics_check(std::uint64_t seed, double eta = 1e-3, int epochs = 50) {
  const TrainingSet data = dynamics_dataset(seed);
  const DataMoments mo = compute_moments(data);
  const Eigen::Index n = data.input_dim();
  const long m = static_cast<long>(data.size());
  Rng rng = make_rng(seed, 52);
  Vec w0(n);
  for (Eigen::Index i = 0; i < n; ++i) w0(i) = normal(rng, 0, 0.1);
  std::vector<DynamicsRow> rows;
  for (const auto& rule : catalog()) {
    DynamicsRow row{rule.name(), "", 0};
    std::variant<RecurrenceSpec, NonlinearFlag> rec;
    try {
      rec = rule_recurrence(rule, mo, eta, w0);
    } catch (const Error& e) {
      row.status = std::string("skipped: ") + e.what();
      rows.push_back(row);
      continue;
    }
    const auto* flag = std::get_if<NonlinearFlag>(&rec);
    if (flag && !flag->riccati) continue;  // d > 1 without a closed form
    UnitTrainOptions uo;
    uo.epochs = epochs;
    uo.eta = {eta, false};
    uo.w0 = w0;
    uo.seed = derive_seed(seed, 53);
    const UnitTrajectory tr = train_unit(rule, data, linear_transfer(), uo);
    if (flag) {
      row.status = "riccati";
      for (int k = 0; k <= epochs; ++k)
        for (Eigen::Index i = 0; i < n; ++i)
          row.deviation = std::max(row.deviation, std::abs(tr.weights(k, i) - riccati_solution(eta, mo.mu(i), w0(i),
                                                                                                  double(k) * m)));
    } else {
      row.status = "linear";
      const auto& spec = std::get<RecurrenceSpec>(rec);
      for (int k = 1; k <= epochs; ++k) {
        const Vec a = solve_recurrence(spec, k * m);
        const Vec s = tr.weights.row(k).transpose();
        row.deviation = std::max(row.deviation, (a - s).norm() / a.norm());
      }
    }
    rows.push_back(row);
  }
  return rows;
}

inline CriterionResult ac5_dynamics(const AcceptanceOptions& o) {
  return detail::timed(5, "Analytic vs simulated dynamics", 300, [&](detail::Checks& c) {
    int linear = 0, skipped = 0;
    for (const auto& r : dynamics_check(derive_seed(o.seed, 5))) {
      if (r.status == "linear") {
        ++linear;
        if (r.deviation > 0.05) c.expect(false, r.rule + " relative " + detail::fmt(r.deviation));
      } else if (r.status == "riccati") {
        c.expect(r.deviation <= 0.05, "riccati max deviation " + detail::fmt(r.deviation));
      } else {
        ++skipped;
      }
    }
    c.expect(linear > 0, std::to_string(linear) + " d<=1 rules within 5%, " + std::to_string(skipped) +
                             " need moments above second order");
  });
}

inline CriterionResult ac6_gradients(const AcceptanceOptions& o) {
  return detail::timed(6, "Backprop and BPTT against finite differences", 120, [&](detail::Checks& c) {
    Rng rng = make_rng(o.seed, 60);
    double worst = 0;
    for (int hidden = 0; hidden <= 3; ++hidden)
      for (int rep = 0; rep < 5; ++rep) {
        std::vector<int> sizes{3 + rep};
        for (int h = 0; h < hidden; ++h) sizes.push_back(2 + (rep + h) % 4);
        sizes.push_back(2);
        std::vector<TransferFunction> fs;
        for (std::size_t h = 1; h < sizes.size(); ++h) fs.push_back((h + rep) % 2 ? tanh_transfer() : logistic_transfer());
        LayeredNet net(sizes, fs);
        net.randomize_normal(rng, 0.8);
        Vec x(sizes[0]), t(2);
        for (auto& v : x) v = normal(rng);
        for (auto& v : t) v = uniform(rng, -0.9, 0.9);
        worst = std::max(worst, max_relative_error(backprop_gradient(net, x, t), finite_difference_gradient(net, x, t)));
      }
    c.expect(worst <= 1e-5, "feedforward max relative error " + detail::fmt(worst));
    double bptt = 0;
    for (int L = 1; L <= 10; ++L) {
      Mat R(3, 3);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) R(i, j) = i == j ? 0.0 : normal(rng, 0, 0.7);
      const LayeredNet net = unfold(R, L);
      LayerTargets tg(static_cast<std::size_t>(L + 1));
      for (int step : {2, L})
        if (step <= L) {
          Vec t(3);
          for (auto& v : t) v = uniform(rng, -0.9, 0.9);
          tg[step] = t;
        }
      Vec x(3);
      for (auto& v : x) v = normal(rng);
      bptt = std::max(bptt, max_relative_error(backprop_gradient(net, x, tg), finite_difference_gradient(net, x, tg)));
    }
    c.expect(bptt <= 1e-5, "BPTT (3 units, W=6, L<=10) max relative error " + detail::fmt(bptt));
  });
}

inline CriterionResult ac7_ssh(const AcceptanceOptions& o) {
  return detail::timed(7, "SSH verdicts on equal-length binary sets", 300, [&](detail::Checks& c) {
    Rng rng = make_rng(o.seed, 70);
    const int sets = o.budget == Budget::full ? 2000 : 200;
    int agree = 0, yes = 0;
    for (int s = 0; s < sets; ++s) {
      const int n = std::uniform_int_distribution<int>(2, 10)(rng);
      const int m = std::uniform_int_distribution<int>(1, std::min(20, 1 << (n - 1)))(rng);
      const bool bias = coin(rng);
      const TrainingSet ts = random_binary_set(n, m, bias, rng);
      const SshResult r = predict_and_verify(ts, bias);
      const bool predicted = r.predicted == Verdict::yes;
      if (r.predicted != Verdict::unknown && predicted == r.empirical) ++agree;
      yes += predicted;
    }
    c.expect(agree == sets, "verdict agreement " + std::to_string(agree) + "/" + std::to_string(sets) + " (" +
                                std::to_string(yes) + " separable)");
    // sufficient-condition branches: orthogonal rows of a Hadamard matrix and common-orthant {0,1} sets
    int branch = 0, false_pos = 0;
    for (int s = 0; s < 100; ++s) {
      TrainingSet ts;
      const int n = 8;
      Mat h = Mat::Ones(1, 1);
      while (h.rows() < n) {
        Mat g(2 * h.rows(), 2 * h.cols());
        g << h, h, h, -h;
        h = g;
      }
      const int m = std::uniform_int_distribution<int>(1, n)(rng);
      ts.inputs = h.topRows(m);
      Mat t(m, 1);
      for (int r = 0; r < m; ++r) t(r, 0) = coin(rng) ? 1.0 : -1.0;
      ts.targets = t;
      SshResult r = predict_and_verify(ts, false);
      if (r.report.flags.mutually_orthogonal) {
        ++branch;
        false_pos += !r.empirical;
      }
      TrainingSet pos;
      const int k = std::uniform_int_distribution<int>(1, 12)(rng);
      pos.inputs = Mat::Zero(k, 6);
      Mat tp(k, 1);
      for (int r = 0; r < k; ++r) {
        for (int j = 0; j < 6; ++j) pos.inputs(r, j) = coin(rng) ? 1.0 : 0.0;
        pos.inputs(r, r % 6) = 1.0;
        tp(r, 0) = 1.0;
      }
      pos.targets = tp;
      r = predict_and_verify(pos, false);
      if (r.report.flags.common_orthant) {
        ++branch;
        false_pos += !r.empirical;
      }
    }
    c.expect(false_pos == 0 && branch > 0, "sufficient-condition false positives " + std::to_string(false_pos) + "/" +
                                               std::to_string(branch));
  });
}

inline CriterionResult ac8_autoencoder(const AcceptanceOptions& o) {
  return detail::timed(8, "Deep-targets autoencoder 100-30-10-30-100", 1800, [&](detail::Checks& c) {
    AutoencoderSpec spec;
    spec.seed = o.seed;
    const AutoencoderRun r = run_autoencoder(spec, [](int, const DeepTargetsResult&) {});
    const double e0 = r.result.train_error.front();
    c.expect(std::abs(e0 - 0.5) <= 0.1, "initial train error " + detail::fmt(e0));
    c.expect(r.best_train_reduction >= 0.8, "train reduction " + detail::fmt(r.best_train_reduction));
    c.expect(r.best_test_reduction >= 0.6, "test reduction " + detail::fmt(r.best_test_reduction));
  });
}

inline CriterionResult ac9_hopfield(const AcceptanceOptions& o) {
  return detail::timed(9, "Hopfield isometry invariance", 600, [&](detail::Checks& c) {
    const auto ex = exhaustive_commutation(4, {}, o.threads);
    c.expect(ex.violations == 0, "n=4 exhaustive " + std::to_string(ex.violations) + " violations over " +
                                     std::to_string(ex.pairs) + " pairs");
    const auto rnd = random_commutation(8, 1000, derive_seed(o.seed, 9));
    c.expect(rnd.violations == 0, "n=8 random " + std::to_string(rnd.violations) + " violations over 1000 pairs");
    for (auto [rule, expect_found] : {std::pair{SymmetricRule{1, 1, 0}, true}, std::pair{SymmetricRule{1, 0, 1}, true},
                                      std::pair{SymmetricRule{1, 0, 0}, false}}) {
      bool found = false;
      for (int n = 2; n <= 4 && !found; ++n) found = uniqueness_search(n, rule, 1000, o.seed).has_value();
      c.expect(found == expect_found, "(" + std::to_string(rule.alpha) + "," + std::to_string(rule.beta) + "," +
                                          std::to_string(rule.gamma) + ") " + (found ? "violation found" : "none"));
    }
  });
}

inline CriterionResult ac10_rule_algebra(const AcceptanceOptions& o) {
  return detail::timed(10, "Range transform and rule algebra", 60, [&](detail::Checks& c) {
    Rng rng = make_rng(o.seed, 100);
    double round = 0, subst = 0;
    for (int t = 0; t < 1000; ++t) {
      const QuadraticCoefficients q{normal(rng), normal(rng), normal(rng), normal(rng)};
      for (Range from : {Range::unit, Range::symmetric}) {
        const Range back = from == Range::unit ? Range::symmetric : Range::unit;
        const auto rt = range_transform(range_transform(q, from), back);
        for (int k = 0; k < 4; ++k) round = std::max(round, std::abs(rt.as_array()[k] - q.as_array()[k]));
      }
      // a rule in [-1,1] variables equals its substitute evaluated on x' = 2x - 1
      const auto s = substitute_range(q, Range::symmetric);
      const double x = uniform(rng), y = uniform(rng);
      subst = std::max(subst, std::abs(s(x, y) - q(2 * x - 1, 2 * y - 1)));
    }
    c.expect(round <= 1e-12, "round trip " + detail::fmt(round));
    c.expect(subst <= 1e-12, "substitution " + detail::fmt(subst));
    const std::vector<std::pair<LearningRule, Degrees>> stated{
        {rules::simple_hebb(), {2, 1}}, {rules::clamped_hebb(), {2, 0}}, {rules::anti_hebb(), {2, 1}},
        {rules::gradient(), {2, 1}},    {rules::riccati(), {3, 2}},      {rules::oja(), {3, 3}},
        {rules::bounded_hebb(), {4, 3}}};
    int ok = 0;
    for (const auto& [rule, d] : stated) {
      const Degrees got = rule.degrees();
      ok += got.n == d.n && got.d == d.d;
    }
    c.expect(ok == static_cast<int>(stated.size()),
             "degree labels " + std::to_string(ok) + "/" + std::to_string(stated.size()));
    TrainingSet data = dynamics_dataset(derive_seed(o.seed, 10), 5, 40);
    data.targets = data.targets->unaryExpr([](double v) { return v > 0 ? 1.0 : 0.0; });
    Vec w0(5);
    for (auto& v : w0) v = normal(rng, 0, 0.3);
    const double dev = range_invariance_deviation(data, w0, 0.1, 20, o.seed);
    c.expect(dev <= 1e-10, "[0,1] vs [-1,1] trajectory deviation " + detail::fmt(dev));
  });
}

inline const std::vector<std::function<CriterionResult(const AcceptanceOptions&)>>& criteria_list() {
  static const std::vector<std::function<CriterionResult(const AcceptanceOptions&)>> all{
      ac1_boolean_census, ac2_monotone_census, ac3_table8,      ac4_optimality,  ac5_dynamics,
      ac6_gradients,      ac7_ssh,             ac8_autoencoder, ac9_hopfield,    ac10_rule_algebra};
  return all;
}

/// Runs the selected criteria (1-based ids; empty means all), reporting each as it finishes.
template <typename Callback>
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& o, const std::vector<int>& ids,
                                            Callback&& on_result) {
  std::vector<int> which = ids;
  if (which.empty())
    for (int i = 1; i <= static_cast<int>(criteria_list().size()); ++i) which.push_back(i);
  std::vector<CriterionResult> out;
  for (int id : which) {
    require(id >= 1 && id <= static_cast<int>(criteria_list().size()), "unknown criterion " + std::to_string(id));
    CriterionResult r;
    try {
      r = criteria_list()[id - 1](o);
    } catch (const std::exception& e) {
      r.id = id;
      r.title = "error";
      r.detail = e.what();
    }
    on_result(r);
    out.push_back(std::move(r));
  }
  return out;
}

inline std::string result_line(const CriterionResult& r) {
  return "AC" + std::to_string(r.id) + " " + (r.pass ? "PASS" : "FAIL") + " " + r.title + ": " + r.detail;
}

}  // namespace locallearn
