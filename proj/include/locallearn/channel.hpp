#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "locallearn/error.hpp"
#include "locallearn/network.hpp"
#include "locallearn/parallel.hpp"
#include "locallearn/random.hpp"
#include "locallearn/transfer.hpp"

namespace locallearn {

enum class ChannelKind { BP, PWGB, PWLR, PWLB, PALR, PWGBK, PWGRK };

inline std::string to_string(ChannelKind k) {
  switch (k) {
    case ChannelKind::BP: return "BP";
    case ChannelKind::PWGB: return "PWGB";
    case ChannelKind::PWLR: return "PWLR";
    case ChannelKind::PWLB: return "PWLB";
    case ChannelKind::PALR: return "PALR";
    case ChannelKind::PWGBK: return "PWGBK";
    case ChannelKind::PWGRK: return "PWGRK";
  }
  return "?";
}

inline ChannelKind channel_kind_from_string(const std::string& s) {
  for (auto k : {ChannelKind::BP, ChannelKind::PWGB, ChannelKind::PWLR, ChannelKind::PWLB, ChannelKind::PALR,
                 ChannelKind::PWGBK, ChannelKind::PWGRK})
    if (to_string(k) == s) return k;
  throw Error("unknown channel algorithm: " + s);
}

inline const std::vector<ChannelKind>& channel_kinds() {
  static const std::vector<ChannelKind> all{ChannelKind::PWGB,  ChannelKind::PWLR,  ChannelKind::PWLB, ChannelKind::PALR,
                                            ChannelKind::PWGBK, ChannelKind::PWGRK, ChannelKind::BP};
  return all;
}

struct ChannelAlgorithm {
  ChannelKind kind = ChannelKind::BP;
  double epsilon = 1e-6;             // local perturbation for PWLR, PWLB, PALR
  int K = 1;                         // repeats for PWGBK, PWGRK
  double perturbation_scale = 1e-5;  // length of global perturbations

  void validate() const {
    require(K >= 1, "K must be at least 1");
    require(epsilon > 0, "epsilon must be positive");
    require(perturbation_scale > 0, "perturbation scale must be positive");
  }
};

/// One training example; targets may sit on any layer (unfolded recurrent nets use several).
struct ChannelExample {
  Vec input;
  LayerTargets targets;
  Loss loss = Loss::squared;
};

inline ChannelExample output_example(const LayeredNet& net, Vec input, const Vec& target, Loss loss = Loss::squared) {
  return {std::move(input), output_target(net, target), loss};
}

struct ChannelReport {
  std::string algorithm;
  Eigen::Index W = 0;
  int N = 0;
  int K = 1;
  int D = 64;
  double I_W = 0;
  double C_W = 0;
  double R = 0;
  double O_emp = 0;  // cosine between the step and the steepest descent direction
  double O_raw = 0;  // step (unnormalized) dotted with the unit descent direction
  double O_theory = 0;
  double grad_norm = 0;
  double bits = 0;
  Vec step;  // unit vector
  OpCounter ops;
};

/// Number of non-input units.
inline int unit_count(const LayeredNet& net) {
  int n = 0;
  for (int h = 1; h <= net.depth(); ++h) n += net.size(h);
  return n;
}

namespace detail {

inline std::int64_t loss_ops(const LayeredNet& net, const LayerTargets& t) {
  std::int64_t n = 0;
  for (int h = 1; h <= net.depth(); ++h)
    if (t[h]) n += net.size(h);
  return n;
}

/// Error as a function of the free parameters, counting every forward pass.
class Evaluator {
 public:
  Evaluator(const LayeredNet& net, const ChannelExample& ex) : probe_(net), ex_(ex) {}

  double operator()(const Vec& p) {
    probe_.set_parameters(p);
    return current();
  }

  double current() {
    const Activations a = forward(probe_, ex_.input, &ops);
    ops.multiply_add += loss_ops(probe_, ex_.targets);
    return layered_error(probe_, a, ex_.targets, ex_.loss);
  }

  /// Error with pre-activation S of unit (h, i) shifted by eps.
  double nudged(int h, Eigen::Index i, double eps) {
    Activations a;
    a.S.push_back(Vec());
    a.O.push_back(ex_.input);
    for (int k = 1; k <= probe_.depth(); ++k) {
      const Mat& w = probe_.weights(k);
      Vec s = w.col(0) + w.rightCols(w.cols() - 1) * a.O.back();
      if (k == h) s(i) += eps;
      const auto& f = probe_.transfer(k);
      Vec o = s.unaryExpr([&](double v) { return f(v); });
      ops.multiply_add += w.size();
      ops.transfer += s.size();
      a.S.push_back(std::move(s));
      a.O.push_back(std::move(o));
    }
    ops.multiply_add += loss_ops(probe_, ex_.targets);
    return layered_error(probe_, a, ex_.targets, ex_.loss);
  }

  const LayeredNet& net() const { return probe_; }
  OpCounter ops;

 private:
  LayeredNet probe_;
  const ChannelExample& ex_;
};

inline Vec gaussian_direction(Eigen::Index w, Rng& rng) {
  Vec u(w);
  std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(w)));
  for (Eigen::Index i = 0; i < w; ++i) u(i) = dist(rng);
  return u;
}

inline bool all_differentiable(const LayeredNet& net) {
  for (int h = 1; h <= net.depth(); ++h)
    if (!net.transfer(h).differentiable()) return false;
  return true;
}

}  // namespace detail

/// dE/dparameter by backpropagation (through time when the net has shared groups).
inline Vec channel_gradient(const LayeredNet& net, const ChannelExample& ex, OpCounter* ops = nullptr) {
  const Activations a = forward(net, ex.input, ops);
  if (ops) ops->multiply_add += detail::loss_ops(net, ex.targets);
  const Backprop bp = backprop(net, a, ex.targets, ex.loss, ops);
  return net.collapse(bp.gradient);
}

struct Table8Row {
  std::string algorithm;
  std::string information;
  std::string computation;
  std::string rate;
  std::string improvement;
  double I_W = 0;
  double C_W = 0;
  double R = 0;
  double O = 0;
};

/// Constants used where the table leaves C unspecified: mean |N(0,1)| for PWGB, the extreme-value
/// growth sqrt(2 ln K) for PWGBK, 1 for PWGRK, and sqrt(3/(2 pi)) as the typical PWLB value.
inline constexpr double pwgb_constant = 0.7978845608028654;  // sqrt(2/pi)
inline constexpr double pwlb_typical = 0.690988298942671;    // sqrt(3/(2 pi))
inline constexpr double pwlb_bound = 0.8660254037844386;     // sqrt(3)/2

inline Table8Row table8_row(ChannelKind k, double W, double N, double K, int D) {
  require(W > 0 && N > 0 && K >= 1 && D >= 1, "table entries need positive W, N, K, D");
  const double rw = std::sqrt(W);
  const double log2k = std::log2(K);
  switch (k) {
    case ChannelKind::PWGB: return {"PWGB", "1/W", "1", "1/W", "C/sqrt(W)", 1 / W, 1, 1 / W, std::min(1.0, pwgb_constant / rw)};
    case ChannelKind::PWLR: return {"PWLR", "D", "W", "D/W", "1", double(D), W, D / W, 1};
    case ChannelKind::PWLB:
      return {"PWLB", "1", "W", "1/W", "(sqrt(3/W)/2) sum_i |g_i|", 1, W, 1 / W, pwlb_typical};
    case ChannelKind::PALR: return {"PALR", "D", "N", "D/N", "1", double(D), N, D / N, 1};
    case ChannelKind::PWGBK:
      return {"PWGBK", "log K/W", "K",     "(log K/W)/K", "C sqrt(log K)/sqrt(W)", log2k / W, K, log2k / W / K,
              std::min(1.0, std::sqrt(2 * std::log(K) / W))};
    case ChannelKind::PWGRK:
      return {"PWGRK", "KD/W", "K", "D/W", "C sqrt(K)/sqrt(W)", K * D / W, K, D / W, std::min(1.0, std::sqrt(K / W))};
    case ChannelKind::BP: return {"BP", "D", "1", "D", "1", double(D), 1, double(D), 1};
  }
  throw Error("unknown channel algorithm");
}

inline std::vector<Table8Row> table8(double W, double N, double K, int D = 64) {
  std::vector<Table8Row> rows;
  for (auto k : channel_kinds()) rows.push_back(table8_row(k, W, N, K, D));
  return rows;
}

inline std::string table8_markdown(const std::vector<Table8Row>& rows) {
  std::string s = "| Algorithm | Information I_W | Computation C_W | Rate R | Improvement O |\n|---|---|---|---|---|\n";
  for (const auto& r : rows)
    s += "| " + r.algorithm + " | " + r.information + " | " + r.computation + " | " + r.rate + " | " + r.improvement +
         " |\n";
  return s;
}

/// Runs one step-direction computation of `alg` on (net, example).
inline ChannelReport run(const ChannelAlgorithm& alg, const LayeredNet& net, const ChannelExample& ex,
                         std::uint64_t seed, int D = 64) {
  alg.validate();
  require(D >= 1, "precision D must be at least 1");
  require(ex.targets.size() == static_cast<std::size_t>(net.depth() + 1), "one target slot per layer");
  Rng rng = make_rng(seed, 30);
  const Eigen::Index W = net.parameter_count();
  require(W > 0, "net has no free parameters");
  const Vec p = net.parameters();
  const double w = static_cast<double>(W);

  ChannelReport r;
  r.algorithm = to_string(alg.kind);
  r.W = W;
  r.N = unit_count(net);
  r.K = alg.K;
  r.D = D;

  Vec ref;  // reference gradient, not charged to the algorithm
  if (detail::all_differentiable(net)) ref = channel_gradient(net, ex);

  detail::Evaluator E(net, ex);
  Vec u;
  switch (alg.kind) {
    case ChannelKind::BP: {
      const Vec g = channel_gradient(net, ex, &E.ops);
      u = -g;
      r.I_W = D;
      break;
    }
    case ChannelKind::PWGB: {
      const double e0 = E(p);
      u = detail::gaussian_direction(W, rng);
      const double e1 = E(p + alg.perturbation_scale * u);
      ++E.ops.comparison;
      if (e1 > e0) u = -u;
      r.I_W = 1 / w;
      break;
    }
    case ChannelKind::PWLR: {
      const double e0 = E(p);
      Vec g(W);
      for (Eigen::Index i = 0; i < W; ++i) {
        Vec q = p;
        q(i) += alg.epsilon;
        g(i) = (E(q) - e0) / alg.epsilon;
      }
      u = -g;
      r.I_W = D;
      break;
    }
    case ChannelKind::PWLB: {
      const double e0 = E(p);
      u.resize(W);
      const double top = std::sqrt(3.0 / w);
      for (Eigen::Index i = 0; i < W; ++i) {
        Vec q = p;
        q(i) += alg.epsilon;
        const double de = E(q) - e0;
        ++E.ops.comparison;
        double sign = de > 0 ? -1.0 : de < 0 ? 1.0 : (coin(rng) ? 1.0 : -1.0);
        u(i) = sign * uniform(rng, 0, top);
      }
      r.I_W = 1;
      break;
    }
    case ChannelKind::PALR: {
      const double e0 = E(p);
      const Activations a = forward(net, ex.input, &E.ops);
      std::vector<Mat> per_entry;
      for (int h = 1; h <= net.depth(); ++h) {
        Vec delta(net.size(h));
        for (Eigen::Index i = 0; i < delta.size(); ++i) delta(i) = (E.nudged(h, i, alg.epsilon) - e0) / alg.epsilon;
        const Mat& wm = net.weights(h);
        Mat g(wm.rows(), wm.cols());
        g.col(0) = delta;
        g.rightCols(wm.cols() - 1) = delta * a.O[h - 1].transpose();
        E.ops.multiply_add += wm.size();
        per_entry.push_back(g.cwiseProduct(net.mask(h)));
      }
      u = -net.collapse(per_entry);
      r.I_W = D;
      break;
    }
    case ChannelKind::PWGBK: {
      const double e0 = E(p);
      double best = 0;
      u = Vec::Zero(W);
      for (int k = 0; k < alg.K; ++k) {
        Vec v = detail::gaussian_direction(W, rng);
        const double de = E(p + alg.perturbation_scale * v) - e0;
        ++E.ops.comparison;
        // an ascending perturbation is inverted into a descending one
        if (k == 0 || std::abs(de) > best) {
          best = std::abs(de);
          u = de > 0 ? Vec(-v) : v;
        }
      }
      r.I_W = std::log2(static_cast<double>(alg.K)) / w;
      break;
    }
    case ChannelKind::PWGRK: {
      const double e0 = E(p);
      u = Vec::Zero(W);
      for (int k = 0; k < alg.K; ++k) {
        const Vec v = detail::gaussian_direction(W, rng);
        const double slope = (E(p + alg.perturbation_scale * v) - e0) / alg.perturbation_scale;
        u -= slope * v;
        E.ops.multiply_add += W;
      }
      r.I_W = static_cast<double>(alg.K) * D / w;
      break;
    }
  }

  r.ops = E.ops;
  r.C_W = static_cast<double>(r.ops.total()) / w;
  r.R = r.I_W / r.C_W;
  r.bits = r.I_W * w;
  const double un = std::sqrt(u.dot(u));
  r.step = un > 0 ? Vec(u / un) : u;
  const Table8Row row = table8_row(alg.kind, w, r.N, alg.K, D);
  r.O_theory = row.O;
  if (ref.size() == W) {
    const Vec d = -ref;
    const double dd = d.dot(d);
    r.grad_norm = std::sqrt(dd);
    if (dd > 0 && un > 0) {
      r.O_emp = u.dot(d) / std::sqrt(u.dot(u) * dd);
      r.O_raw = u.dot(d) / std::sqrt(dd);
    }
    if (alg.kind == ChannelKind::PWLB && dd > 0) r.O_theory = std::sqrt(3.0 / w) / 2 * (d.cwiseAbs().sum() / std::sqrt(dd));
  } else {
    r.O_emp = r.O_raw = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

/// Least-squares line y = intercept + slope x.
struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
  double slope_se = 0;  // standard error of the slope
};

inline LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "fit needs at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  require(sxx > 0, "fit needs distinct x values");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  const double sse = std::max(0.0, syy - f.slope * sxy);
  f.r2 = syy > 0 ? 1 - sse / syy : 1;
  f.slope_se = x.size() > 2 ? std::sqrt(sse / (n - 2) / sxx) : 0;
  return f;
}

/// Differentiable benchmark net with exactly W free parameters: n-n-1 tanh when W = (n+1)^2, else (W-1)-1.
inline LayeredNet bench_net(Eigen::Index W, std::uint64_t seed) {
  require(W >= 2, "benchmark net needs W >= 2");
  const auto n = static_cast<int>(std::llround(std::sqrt(static_cast<double>(W)))) - 1;
  std::vector<int> sizes = (n >= 1 && Eigen::Index(n + 1) * (n + 1) == W) ? std::vector<int>{n, n, 1}
                                                                           : std::vector<int>{int(W - 1), 1};
  LayeredNet net(sizes, {tanh_transfer()});
  Rng rng = make_rng(seed, 31);
  for (int h = 1; h <= net.depth(); ++h) {
    const double sd = 1.0 / std::sqrt(static_cast<double>(net.size(h - 1) + 1));
    for (Eigen::Index i = 0; i < net.weights(h).rows(); ++i)
      for (Eigen::Index j = 0; j < net.weights(h).cols(); ++j) net.weights(h)(i, j) = normal(rng, 0, sd);
  }
  return net;
}

inline ChannelExample bench_example(const LayeredNet& net, std::uint64_t seed) {
  Rng rng = make_rng(seed, 32);
  Vec x(net.size(0)), t(net.size(net.depth()));
  for (auto& v : x) v = normal(rng);
  for (auto& v : t) v = coin(rng) ? 0.5 : -0.5;
  return output_example(net, x, t);
}

enum class ScalingAxis { W, K };
enum class ScalingRegressor { log_log, sqrt_log };

struct ScalingPoint {
  double size = 0;
  Eigen::Index W = 0;
  int K = 1;
  double mean_abs_O = 0;
  double sd_abs_O = 0;
  int trials = 0;
};

struct TrialRow {
  std::string algorithm;
  Eigen::Index W = 0;
  int N = 0;
  int K = 1;
  int trial = 0;
  double O_emp = 0;
  std::int64_t ops = 0;
  double bits = 0;
};

struct ScalingResult {
  std::string algorithm;
  ScalingAxis axis = ScalingAxis::W;
  ScalingRegressor regressor = ScalingRegressor::log_log;
  std::vector<ScalingPoint> points;
  std::vector<TrialRow> trials;
  LinearFit fit;
  double slope_ci95 = 0;
};

struct ScalingSpec {
  ChannelAlgorithm algorithm;
  ScalingAxis axis = ScalingAxis::W;
  std::vector<double> sizes;
  Eigen::Index fixed_W = 4096;  // used when scanning K
  int trials = 1000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  ScalingRegressor regressor = ScalingRegressor::log_log;
};

/// Mean |O_emp| per size and its fit: log-log slope, or linear in sqrt(ln K).
inline ScalingResult scaling_study(const ScalingSpec& spec) {
  require(spec.sizes.size() >= 3, "scaling study needs at least three sizes");
  require(spec.trials >= 1, "trials must be positive");
  ScalingResult res;
  res.algorithm = to_string(spec.algorithm.kind);
  res.axis = spec.axis;
  res.regressor = spec.regressor;
  std::vector<double> xs, ys;
  for (std::size_t si = 0; si < spec.sizes.size(); ++si) {
    const double size = spec.sizes[si];
    ChannelAlgorithm alg = spec.algorithm;
    Eigen::Index W = spec.fixed_W;
    if (spec.axis == ScalingAxis::W)
      W = static_cast<Eigen::Index>(std::llround(size));
    else
      alg.K = static_cast<int>(std::llround(size));
    const std::uint64_t base = derive_seed(spec.seed, si);
    const LayeredNet net = bench_net(W, derive_seed(base, 1));
    const ChannelExample ex = bench_example(net, derive_seed(base, 2));
    std::vector<ChannelReport> reps(static_cast<std::size_t>(spec.trials));
    parallel_for(reps.size(), spec.threads,
                 [&](std::size_t t) { reps[t] = run(alg, net, ex, derive_seed(base, 100 + t)); });
    ScalingPoint pt;
    pt.size = size;
    pt.W = W;
    pt.K = alg.K;
    pt.trials = spec.trials;
    double s1 = 0, s2 = 0;
    for (std::size_t t = 0; t < reps.size(); ++t) {
      const double o = std::abs(reps[t].O_emp);
      s1 += o;
      s2 += o * o;
      res.trials.push_back({res.algorithm, W, reps[t].N, alg.K, int(t), reps[t].O_emp, reps[t].ops.total(), reps[t].bits});
    }
    pt.mean_abs_O = s1 / spec.trials;
    pt.sd_abs_O = std::sqrt(std::max(0.0, s2 / spec.trials - pt.mean_abs_O * pt.mean_abs_O));
    res.points.push_back(pt);
    if (spec.regressor == ScalingRegressor::log_log) {
      xs.push_back(std::log(size));
      ys.push_back(std::log(pt.mean_abs_O));
    } else {
      xs.push_back(std::sqrt(std::log(size)));
      ys.push_back(pt.mean_abs_O);
    }
  }
  res.fit = fit_line(xs, ys);
  res.slope_ci95 = 1.96 * res.fit.slope_se;
  return res;
}

/// Recurrent net with N x N weights R (zero diagonal) unrolled over L steps. Every layer copies R;
/// entry (i, j) of R sits at column j + 1 of each layer and all copies form one shared group.
/// Biases and self-connections are masked to zero.
inline LayeredNet unfold(const Mat& R, int L, TransferFunction f = tanh_transfer()) {
  require(L >= 1, "L must be at least 1");
  require(R.rows() == R.cols() && R.rows() >= 1, "recurrent weights must be square");
  for (Eigen::Index i = 0; i < R.rows(); ++i) require(R(i, i) == 0, "recurrent weights need a zero diagonal");
  const int n = static_cast<int>(R.rows());
  LayeredNet net(std::vector<int>(static_cast<std::size_t>(L + 1), n), {f});
  for (int h = 1; h <= L; ++h) {
    net.weights(h).setZero();
    net.weights(h).rightCols(n) = R;
    net.mask(h).col(0).setZero();
    for (int i = 0; i < n; ++i) net.mask(h)(i, i + 1) = 0;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      std::vector<WeightRef> g;
      for (int h = 1; h <= L; ++h) g.push_back({h, i, j + 1});
      net.add_shared_group(std::move(g));
    }
  return net;
}

/// Recurrent matrix currently stored in an unfolded net.
inline Mat recurrent_weights(const LayeredNet& unfolded) {
  const Mat& w = unfolded.weights(1);
  return w.rightCols(w.cols() - 1);
}

/// Dominance checks over a grid: R(alg) <= D and O(alg) <= 1 for every alternative. Returns violations.
struct DominanceViolation {
  std::string algorithm;
  double W, N, K;
  int D;
  double R, O;
};

inline std::vector<DominanceViolation> dominance_check(const std::vector<double>& Ws, const std::vector<double>& Ns,
                                                       const std::vector<double>& Ks, const std::vector<int>& Ds) {
  std::vector<DominanceViolation> out;
  for (double W : Ws)
    for (double N : Ns)
      for (double K : Ks)
        for (int D : Ds) {
          const Table8Row bp = table8_row(ChannelKind::BP, W, N, K, D);
          for (auto k : channel_kinds()) {
            const Table8Row r = table8_row(k, W, N, K, D);
            if (r.R > bp.R || r.O > bp.O || bp.R != D || bp.O != 1) out.push_back({r.algorithm, W, N, K, D, r.R, r.O});
          }
        }
  return out;
}

}  // namespace locallearn
