#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "locallearn/error.hpp"

namespace locallearn {

/// Interpretation of the postsynaptic factor of a term.
enum class PostMode { output, target, error };

/// Activity coding of a network: [0,1] or [-1,1].
enum class Range { unit, symmetric };

inline std::string to_string(PostMode m) {
  switch (m) {
    case PostMode::output: return "output";
    case PostMode::target: return "target";
    case PostMode::error: return "error";
  }
  return "output";
}

inline PostMode post_mode_from_string(const std::string& s) {
  if (s == "output" || s == "O") return PostMode::output;
  if (s == "target" || s == "T") return PostMode::target;
  if (s == "error" || s == "T-O") return PostMode::error;
  throw Error("unknown post mode '" + s + "'");
}

inline std::string to_string(Range r) { return r == Range::unit ? "[0,1]" : "[-1,1]"; }

inline Range range_from_string(const std::string& s) {
  if (s == "[0,1]" || s == "unit" || s == "01") return Range::unit;
  if (s == "[-1,1]" || s == "symmetric" || s == "11") return Range::symmetric;
  throw Error("unknown range convention '" + s + "'");
}

inline constexpr int default_max_degree = 5;

inline double ipow(double x, int k) {
  double r = 1.0;
  for (; k > 0; --k) r *= x;
  return r;
}

/// coefficient * T^nT * P^nPost * I^nPre * w^nW, P chosen by post_mode.
struct RuleTerm {
  double coefficient = 1.0;
  int exp_target = 0;
  int exp_post = 0;
  int exp_pre = 0;
  int exp_weight = 0;
  PostMode post_mode = PostMode::output;

  int degree() const { return exp_target + exp_post + exp_pre + exp_weight; }

  // target factors are data, so they never add to the weight degree
  int weight_degree() const {
    return (post_mode == PostMode::target ? 0 : exp_post) + exp_weight;
  }

  bool uses_target() const {
    return exp_target > 0 || (exp_post > 0 && post_mode != PostMode::output);
  }

  auto key() const {
    return std::make_tuple(exp_target, exp_post, exp_pre, exp_weight, static_cast<int>(post_mode));
  }

  double monomial(double o_post, double o_pre, double w, double t) const {
    double p = o_post;
    if (post_mode == PostMode::target) p = t;
    if (post_mode == PostMode::error) p = t - o_post;
    return ipow(t, exp_target) * ipow(p, exp_post) * ipow(o_pre, exp_pre) * ipow(w, exp_weight);
  }

  bool operator==(const RuleTerm&) const = default;
};

struct Degrees {
  int n = 0;
  int d = 0;
  bool operator==(const Degrees&) const = default;
};

/// A polynomial local learning rule: a sum of monomials in T, O_post, O_pre and w.
class LearningRule {
 public:
  LearningRule() = default;
  LearningRule(std::string name, std::vector<RuleTerm> terms, Range range = Range::symmetric,
               int max_degree = default_max_degree)
      : name_(std::move(name)), terms_(std::move(terms)), range_(range) {
    for (const auto& t : terms_) {
      require(std::isfinite(t.coefficient), "non-finite coefficient in rule " + name_);
      require(t.exp_target >= 0 && t.exp_post >= 0 && t.exp_pre >= 0 && t.exp_weight >= 0,
              "negative exponent in rule " + name_);
      require(t.degree() <= max_degree, "term degree exceeds max degree in rule " + name_);
    }
  }

  const std::string& name() const { return name_; }
  const std::vector<RuleTerm>& terms() const { return terms_; }
  Range range() const { return range_; }
  bool empty() const { return terms_.empty(); }

  /// Canonical form: target-mode post factors folded into T, like monomials merged, zeros dropped.
  LearningRule normalized() const {
    std::vector<RuleTerm> out;
    for (RuleTerm t : terms_) {
      if (t.post_mode == PostMode::target) {
        t.exp_target += t.exp_post;
        t.exp_post = 0;
      }
      if (t.exp_post == 0) t.post_mode = PostMode::output;
      auto it = std::find_if(out.begin(), out.end(), [&](const RuleTerm& u) { return u.key() == t.key(); });
      if (it == out.end())
        out.push_back(t);
      else
        it->coefficient += t.coefficient;
    }
    std::erase_if(out, [](const RuleTerm& t) { return t.coefficient == 0.0; });
    std::sort(out.begin(), out.end(), [](const RuleTerm& a, const RuleTerm& b) { return a.key() < b.key(); });
    LearningRule r;
    r.name_ = name_;
    r.terms_ = std::move(out);
    r.range_ = range_;
    return r;
  }

  bool supervised() const {
    return std::any_of(terms_.begin(), terms_.end(), [](const RuleTerm& t) { return t.uses_target(); });
  }

  /// Weight degree d of the rule, ignoring coefficients that cancel.
  int weight_degree() const { return degrees().d; }

  Degrees degrees() const {
    require(!terms_.empty(), "degenerate rule");
    Degrees g;
    for (const auto& t : terms_) {
      g.n = std::max(g.n, t.degree());
      g.d = std::max(g.d, t.weight_degree());
    }
    return g;
  }

  /// eta * F(T, O_post, O_pre, w).
  double update(double o_post, double o_pre, double w, std::optional<double> target, double eta) const {
    if (supervised() && !target) throw Error("rule '" + name_ + "' needs a target");
    return eta * raw(o_post, o_pre, w, target.value_or(0.0));
  }

  /// F without eta and without the target check.
  double raw(double o_post, double o_pre, double w, double t) const {
    double s = 0.0;
    for (const auto& term : terms_) s += term.coefficient * term.monomial(o_post, o_pre, w, t);
    return s;
  }

  /// Same rule with every coefficient multiplied by s.
  LearningRule scaled(double s) const {
    LearningRule r = *this;
    for (auto& t : r.terms_) t.coefficient *= s;
    return r;
  }

  bool operator==(const LearningRule& other) const {
    return normalized().terms_ == other.normalized().terms_;
  }

 private:
  std::string name_;
  std::vector<RuleTerm> terms_;
  Range range_ = Range::symmetric;
};

inline Degrees classify_degrees(const LearningRule& rule) { return rule.degrees(); }

/// alpha*Oi*Oj + beta*Oi + gamma*Oj + delta
struct QuadraticCoefficients {
  double alpha = 0, beta = 0, gamma = 0, delta = 0;

  std::array<double, 4> as_array() const { return {alpha, beta, gamma, delta}; }
  double operator()(double oi, double oj) const { return alpha * oi * oj + beta * oi + gamma * oj + delta; }
  bool operator==(const QuadraticCoefficients&) const = default;
};

/// The homogeneous coefficient system for moving a quadratic rule between range conventions.
/// from == unit applies (4a, 2b-2a, 2g-2a, d+a-b-g); from == symmetric applies its inverse.
inline QuadraticCoefficients range_transform(const QuadraticCoefficients& c, Range from) {
  if (from == Range::unit)
    return {4 * c.alpha, 2 * c.beta - 2 * c.alpha, 2 * c.gamma - 2 * c.alpha,
            c.delta + c.alpha - c.beta - c.gamma};
  const double a = c.alpha / 4;
  const double b = (c.beta + 2 * a) / 2;
  const double g = (c.gamma + 2 * a) / 2;
  return {a, b, g, c.delta - a + b + g};
}

/// Coefficients of the same polynomial after substituting the other range's variables.
/// A rule in [-1,1] variables x', y' re-expressed in [0,1] variables uses x' = 2x-1.
inline QuadraticCoefficients substitute_range(const QuadraticCoefficients& c, Range from) {
  if (from == Range::symmetric) return range_transform(c, Range::unit);
  return range_transform(c, Range::symmetric);
}

inline QuadraticCoefficients quadratic_part(const LearningRule& rule) {
  QuadraticCoefficients q;
  const LearningRule norm = rule.normalized();
  for (const auto& t : norm.terms()) {
    require(t.exp_target == 0 && t.exp_weight == 0 && t.post_mode == PostMode::output && t.exp_post <= 1 &&
                t.exp_pre <= 1,
            "rule is not an unsupervised quadratic in the activities");
    if (t.exp_post == 1 && t.exp_pre == 1) q.alpha += t.coefficient;
    else if (t.exp_post == 1) q.beta += t.coefficient;
    else if (t.exp_pre == 1) q.gamma += t.coefficient;
    else q.delta += t.coefficient;
  }
  return q;
}

inline LearningRule quadratic_rule(const QuadraticCoefficients& q, std::string name = "quadratic",
                                   Range range = Range::symmetric) {
  return LearningRule(std::move(name),
                      {{q.alpha, 0, 1, 1, 0, PostMode::output},
                       {q.beta, 0, 1, 0, 0, PostMode::output},
                       {q.gamma, 0, 0, 1, 0, PostMode::output},
                       {q.delta, 0, 0, 0, 0, PostMode::output}},
                      range)
      .normalized();
}

namespace rules {

inline RuleTerm term(double c, int nT, int nPost, int nPre, int nW, PostMode m = PostMode::output) {
  return {c, nT, nPost, nPre, nW, m};
}

inline LearningRule simple_hebb() { return {"simple_hebb", {term(1, 0, 1, 1, 0)}}; }
inline LearningRule anti_hebb() { return {"anti_hebb", {term(-1, 0, 1, 1, 0)}}; }
inline LearningRule oja() { return {"oja", {term(1, 0, 1, 1, 0), term(-1, 0, 2, 0, 1)}}; }
inline LearningRule clamped_hebb() { return {"clamped_hebb", {term(1, 1, 0, 1, 0)}}; }
inline LearningRule clamped_oja() { return {"clamped_oja", {term(1, 1, 0, 1, 0), term(-1, 2, 0, 0, 1)}}; }
inline LearningRule perceptron() { return {"perceptron", {term(1, 0, 1, 1, 0, PostMode::error)}}; }
// linear-unit form, f'(S) = 1
inline LearningRule delta() { return {"delta", {term(1, 0, 1, 1, 0, PostMode::error)}}; }
inline LearningRule gradient() { return {"gradient", {term(1, 0, 1, 1, 0, PostMode::error)}}; }

inline LearningRule bounded_hebb() { return {"bounded_hebb", {term(1, 0, 1, 1, 0), term(-1, 0, 1, 1, 2)}}; }
inline LearningRule bounded_clamped() {
  return {"bounded_clamped", {term(1, 1, 0, 1, 0), term(-1, 1, 0, 1, 2)}};
}
inline LearningRule bounded_gradient() {
  return {"bounded_gradient", {term(1, 0, 1, 1, 0, PostMode::error), term(-1, 0, 1, 1, 2, PostMode::error)}};
}
/// (1 - w^2) O_pre, the single-unit rule with a closed-form Riccati solution.
inline LearningRule riccati() { return {"riccati", {term(1, 0, 0, 1, 0), term(-1, 0, 0, 1, 2)}}; }

inline LearningRule fixed_decay(double c) {
  return {"fixed_decay", {term(1, 0, 1, 1, 0), term(-c, 0, 0, 0, 1)}};
}
inline LearningRule fixed_decay_clamped(double c) {
  return {"fixed_decay_clamped", {term(1, 1, 0, 1, 0), term(-c, 0, 0, 0, 1)}};
}
inline LearningRule fixed_decay_gradient(double c) {
  return {"fixed_decay_gradient", {term(1, 0, 1, 1, 0, PostMode::error), term(-c, 0, 0, 0, 1)}};
}

inline LearningRule pre_decay() { return {"pre_decay", {term(1, 0, 1, 1, 0), term(-1, 0, 0, 2, 1)}}; }
inline LearningRule pre_decay_clamped() {
  return {"pre_decay_clamped", {term(1, 1, 0, 1, 0), term(-1, 0, 0, 2, 1)}};
}
inline LearningRule pre_decay_gradient() {
  return {"pre_decay_gradient", {term(1, 0, 1, 1, 0, PostMode::error), term(-1, 0, 0, 2, 1)}};
}

inline LearningRule post_decay_clamped() {
  return {"post_decay_clamped", {term(1, 1, 0, 1, 0), term(-1, 0, 2, 0, 1)}};
}
inline LearningRule post_decay_clamped_target() {
  return {"post_decay_clamped_target", {term(1, 1, 0, 1, 0), term(-1, 2, 0, 0, 1)}};
}
inline LearningRule post_decay_gradient() {
  return {"post_decay_gradient", {term(1, 0, 1, 1, 0, PostMode::error), term(-1, 0, 2, 0, 1)}};
}
inline LearningRule post_decay_gradient_error() {
  return {"post_decay_gradient_error",
          {term(1, 0, 1, 1, 0, PostMode::error), term(-1, 0, 2, 0, 1, PostMode::error)}};
}

inline LearningRule hebb_decay() { return {"hebb_decay", {term(1, 0, 1, 1, 0), term(-1, 0, 2, 2, 1)}}; }
inline LearningRule hebb_decay_clamped() {
  return {"hebb_decay_clamped", {term(1, 1, 0, 1, 0), term(-1, 0, 2, 2, 1)}};
}
inline LearningRule hebb_decay_clamped_target() {
  return {"hebb_decay_clamped_target", {term(1, 1, 0, 1, 0), term(-1, 2, 0, 2, 1)}};
}
inline LearningRule hebb_decay_gradient() {
  return {"hebb_decay_gradient", {term(1, 0, 1, 1, 0, PostMode::error), term(-1, 0, 2, 2, 1)}};
}
inline LearningRule hebb_decay_gradient_error() {
  return {"hebb_decay_gradient_error",
          {term(1, 0, 1, 1, 0, PostMode::error), term(-1, 0, 2, 2, 1, PostMode::error)}};
}

inline LearningRule bounded(double c) {
  return {"bounded", {term(c, 0, 1, 1, 0), term(-1, 0, 1, 1, 2)}};
}
inline LearningRule bounded_clamped_c(double c) {
  return {"bounded_clamped_c", {term(c, 1, 0, 1, 0), term(-1, 1, 0, 1, 2)}};
}
inline LearningRule bounded_gradient_c(double c) {
  return {"bounded_gradient_c", {term(c, 0, 1, 1, 0, PostMode::error), term(-1, 0, 1, 1, 2, PostMode::error)}};
}

}  // namespace rules

/// Every named rule, with decay and bound constants set to 1.
inline std::vector<LearningRule> catalog() {
  using namespace rules;
  return {simple_hebb(),
          anti_hebb(),
          oja(),
          clamped_hebb(),
          clamped_oja(),
          perceptron(),
          delta(),
          gradient(),
          bounded_hebb(),
          bounded_clamped(),
          bounded_gradient(),
          riccati(),
          fixed_decay(1),
          fixed_decay_clamped(1),
          fixed_decay_gradient(1),
          pre_decay(),
          pre_decay_clamped(),
          pre_decay_gradient(),
          post_decay_clamped(),
          post_decay_clamped_target(),
          post_decay_gradient(),
          post_decay_gradient_error(),
          hebb_decay(),
          hebb_decay_clamped(),
          hebb_decay_clamped_target(),
          hebb_decay_gradient(),
          hebb_decay_gradient_error(),
          bounded(1),
          bounded_clamped_c(1),
          bounded_gradient_c(1)};
}

/// Looks up a rule by name. Parametrized rules accept "name(C)", e.g. "fixed_decay(0.5)".
inline LearningRule rule_by_name(const std::string& spec) {
  std::string name = spec;
  std::optional<double> param;
  if (auto open = spec.find('('); open != std::string::npos) {
    require(spec.back() == ')', "malformed rule name '" + spec + "'");
    name = spec.substr(0, open);
    try {
      param = std::stod(spec.substr(open + 1, spec.size() - open - 2));
    } catch (const std::exception&) {
      throw Error("malformed rule parameter in '" + spec + "'");
    }
  }
  const double c = param.value_or(1.0);
  using namespace rules;
  if (name == "fixed_decay") return fixed_decay(c);
  if (name == "fixed_decay_clamped") return fixed_decay_clamped(c);
  if (name == "fixed_decay_gradient") return fixed_decay_gradient(c);
  if (name == "bounded") return bounded(c);
  if (name == "bounded_clamped_c") return bounded_clamped_c(c);
  if (name == "bounded_gradient_c") return bounded_gradient_c(c);
  require(!param, "rule '" + name + "' takes no parameter");
  // short aliases used on the command line
  if (name == "hebb") return simple_hebb();
  if (name == "new") return bounded_hebb();
  for (auto& r : catalog())
    if (r.name() == name) return r;
  throw Error("unknown rule '" + spec + "'");
}

/// Supervised counterpart used when a rule trains a unit whose target is clamped.
inline LearningRule clamped_variant(const LearningRule& rule) {
  std::vector<RuleTerm> terms;
  for (RuleTerm t : rule.terms()) {
    if (t.post_mode == PostMode::output && t.exp_post > 0) {
      t.exp_target += t.exp_post;
      t.exp_post = 0;
    }
    terms.push_back(t);
  }
  return LearningRule(rule.name() + "_clamped", std::move(terms), rule.range());
}

}  // namespace locallearn
