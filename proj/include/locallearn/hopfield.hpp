#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "locallearn/error.hpp"
#include "locallearn/parallel.hpp"
#include "locallearn/random.hpp"

namespace locallearn {

using IMat = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// A state of {-1,+1}^n packed in a bitmask: bit k set means component k is +1.
using State = std::uint32_t;

inline constexpr int hopfield_orientation_cap = 14;
inline constexpr int hopfield_exhaustive_cap = 4;

inline int spin(State s, int k) { return (s >> k) & 1U ? 1 : -1; }

inline State state_from_spins(const std::vector<int>& v) {
  require(v.size() <= 31, "state too long");
  State s = 0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    require(v[k] == 1 || v[k] == -1, "memories must have entries -1 or +1");
    if (v[k] == 1) s |= State{1} << k;
  }
  return s;
}

inline std::vector<int> spins(State s, int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) v[k] = spin(s, k);
  return v;
}

inline std::string state_string(State s, int n) {
  std::string out;
  for (int k = 0; k < n; ++k) out += spin(s, k) > 0 ? '+' : '-';
  return out;
}

/// Symmetric d=0 rule F = alpha O_i O_j + beta (O_i + O_j) + gamma; simple Hebb is (1, 0, 0).
struct SymmetricRule {
  std::int64_t alpha = 1;
  std::int64_t beta = 0;
  std::int64_t gamma = 0;

  std::int64_t operator()(int oi, int oj) const { return alpha * oi * oj + beta * (oi + oj) + gamma; }
};

struct HopfieldNet {
  int n = 0;
  IMat weights;  // symmetric, zero diagonal
};

/// One batch pass of the rule over the memories; the diagonal stays zero.
inline HopfieldNet store(const std::vector<State>& memories, int n, const SymmetricRule& rule = {}) {
  require(n >= 1 && n <= 31, "n must be in [1, 31]");
  HopfieldNet net{n, IMat::Zero(n, n)};
  for (State m : memories)
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const std::int64_t d = rule(spin(m, i), spin(m, j));
        net.weights(i, j) += d;
        net.weights(j, i) += d;
      }
  return net;
}

inline HopfieldNet store(const std::vector<std::vector<int>>& memories, const SymmetricRule& rule = {}) {
  require(!memories.empty(), "no memories");
  const int n = static_cast<int>(memories[0].size());
  std::vector<State> packed;
  for (const auto& m : memories) {
    require(static_cast<int>(m.size()) == n, "memories differ in length");
    packed.push_back(state_from_spins(m));
  }
  return store(packed, n, rule);
}

/// E = -sum_{i<j} w_ij s_i s_j (integer).
inline std::int64_t energy(const HopfieldNet& net, State s) {
  std::int64_t e = 0;
  for (int i = 0; i < net.n; ++i)
    for (int j = i + 1; j < net.n; ++j) e -= net.weights(i, j) * spin(s, i) * spin(s, j);
  return e;
}

/// Direction of each edge (x, x with bit k set) for x with bit k clear:
/// +1 when it points toward the set bit (E(x) > E(y)), -1 the other way, 0 for a tie.
struct HypercubeOrientation {
  int n = 0;
  std::vector<std::int8_t> dir;  // index x * n + k

  std::int8_t at(State x, int k) const { return dir[static_cast<std::size_t>(x) * n + k]; }

  /// Direction from a to b along their edge: +1 a -> b, -1 b -> a, 0 tie.
  int between(State a, State b) const {
    const State diff = a ^ b;
    require(diff != 0 && (diff & (diff - 1)) == 0, "states are not adjacent");
    const int k = std::countr_zero(diff);
    const int d = at(a & ~diff, k);
    return (a & diff) ? -d : d;
  }

  std::size_t edge_count() const { return static_cast<std::size_t>(n) << (n - 1); }
};

inline std::vector<std::int64_t> energies(const HopfieldNet& net) {
  std::vector<std::int64_t> e(std::size_t{1} << net.n);
  for (State s = 0; s < e.size(); ++s) e[s] = energy(net, s);
  return e;
}

inline HypercubeOrientation orientation_from_energies(const std::vector<std::int64_t>& e, int n) {
  HypercubeOrientation o{n, std::vector<std::int8_t>(e.size() * static_cast<std::size_t>(n), 0)};
  for (State x = 0; x < e.size(); ++x)
    for (int k = 0; k < n; ++k) {
      if ((x >> k) & 1U) continue;
      const State y = x | (State{1} << k);
      o.dir[static_cast<std::size_t>(x) * n + k] = e[x] > e[y] ? 1 : e[x] < e[y] ? -1 : 0;
    }
  return o;
}

inline HypercubeOrientation orientation(const HopfieldNet& net, int cap = hopfield_orientation_cap) {
  require(net.n <= cap, "n above the orientation cap");
  return orientation_from_energies(energies(net), net.n);
}

/// Kahn's algorithm on the non-tie digraph.
inline bool acyclic(const HypercubeOrientation& o) {
  const std::size_t count = std::size_t{1} << o.n;
  std::vector<int> indeg(count, 0);
  for (State x = 0; x < count; ++x)
    for (int k = 0; k < o.n; ++k) {
      const State y = x ^ (State{1} << k);
      if (o.between(y, x) == 1) ++indeg[x];
    }
  std::vector<State> queue;
  for (State x = 0; x < count; ++x)
    if (indeg[x] == 0) queue.push_back(x);
  std::size_t seen = 0;
  while (seen < queue.size()) {
    const State x = queue[seen++];
    for (int k = 0; k < o.n; ++k) {
      const State y = x ^ (State{1} << k);
      if (o.between(x, y) == 1 && --indeg[y] == 0) queue.push_back(y);
    }
  }
  return seen == count;
}

/// Every incident edge points into x.
inline bool is_sink(const HypercubeOrientation& o, State x) {
  for (int k = 0; k < o.n; ++k)
    if (o.between(x ^ (State{1} << k), x) != 1) return false;
  return true;
}

/// Asynchronous dynamics: flip a randomly chosen energy-lowering unit until none remains.
inline State descend(const HopfieldNet& net, State s, Rng& rng) {
  for (;;) {
    std::vector<int> downhill;
    const std::int64_t e = energy(net, s);
    for (int k = 0; k < net.n; ++k)
      if (energy(net, s ^ (State{1} << k)) < e) downhill.push_back(k);
    if (downhill.empty()) return s;
    const auto pick = std::uniform_int_distribution<std::size_t>(0, downhill.size() - 1)(rng);
    s ^= State{1} << downhill[pick];
  }
}

/// Hypercube isometry: component i of s moves to position perm[i], then position j is multiplied by flips[j].
struct Isometry {
  std::vector<int> perm;
  std::vector<int> flips;

  static Isometry identity(int n) {
    Isometry h;
    h.perm.resize(static_cast<std::size_t>(n));
    std::iota(h.perm.begin(), h.perm.end(), 0);
    h.flips.assign(static_cast<std::size_t>(n), 1);
    return h;
  }

  int n() const { return static_cast<int>(perm.size()); }

  void validate() const {
    require(perm.size() == flips.size(), "permutation and flips differ in length");
    std::vector<int> p = perm;
    std::sort(p.begin(), p.end());
    for (int i = 0; i < n(); ++i) require(p[i] == i, "not a permutation");
    for (int f : flips) require(f == 1 || f == -1, "flips must be -1 or +1");
  }

  State apply(State s) const {
    State out = 0;
    for (int i = 0; i < n(); ++i)
      if (spin(s, i) * flips[perm[i]] > 0) out |= State{1} << perm[i];
    return out;
  }

  std::string to_string() const {
    std::string s = "perm=";
    for (int i = 0; i < n(); ++i) s += (i ? "," : "") + std::to_string(perm[i]);
    s += " flips=";
    for (int i = 0; i < n(); ++i) s += flips[i] > 0 ? '+' : '-';
    return s;
  }
};

inline std::vector<Isometry> all_isometries(int n) {
  require(n >= 1 && n <= 8, "isometry enumeration supports n <= 8");
  std::vector<Isometry> out;
  Isometry h = Isometry::identity(n);
  do {
    for (State f = 0; f < (State{1} << n); ++f) {
      for (int k = 0; k < n; ++k) h.flips[k] = spin(f, k);
      out.push_back(h);
    }
  } while (std::next_permutation(h.perm.begin(), h.perm.end()));
  return out;
}

inline Isometry random_isometry(int n, Rng& rng) {
  Isometry h = Isometry::identity(n);
  std::shuffle(h.perm.begin(), h.perm.end(), rng);
  for (auto& f : h.flips) f = coin(rng) ? 1 : -1;
  return h;
}

inline int hamming(State a, State b) { return std::popcount(a ^ b); }

/// A pair (S, h) where h(O(S)) and O(h(S)) disagree on the edge from x along axis k.
struct Counterexample {
  std::vector<State> memories;
  Isometry isometry;
  State x = 0;
  int k = 0;
  int direction_transported = 0;
  int direction_stored = 0;
};

namespace detail {

/// First edge where the transported orientation of e_s differs from that of e_hs, as (x, k).
inline std::optional<std::pair<State, int>> first_mismatch(const std::vector<std::int64_t>& e_s,
                                                           const std::vector<std::int64_t>& e_hs, const Isometry& h,
                                                           const std::vector<State>& image) {
  const int n = h.n();
  for (State x = 0; x < e_s.size(); ++x)
    for (int k = 0; k < n; ++k) {
      if ((x >> k) & 1U) continue;
      const State y = x | (State{1} << k);
      const std::int64_t a = e_s[x], b = e_s[y];
      const std::int64_t c = e_hs[image[x]], d = e_hs[image[y]];
      if ((a > b) != (c > d) || (a < b) != (c < d)) return std::make_pair(x, k);
    }
  return std::nullopt;
}

inline std::vector<State> image_table(const Isometry& h) {
  std::vector<State> img(std::size_t{1} << h.n());
  for (State x = 0; x < img.size(); ++x) img[x] = h.apply(x);
  return img;
}

inline std::optional<Counterexample> check_pair(const std::vector<State>& S, const Isometry& h, const SymmetricRule& rule) {
  const int n = h.n();
  const std::vector<State> img = image_table(h);
  std::vector<State> hs;
  for (State m : S) hs.push_back(img[m]);
  const auto e_s = energies(store(S, n, rule));
  const auto e_hs = energies(store(hs, n, rule));
  const auto mm = first_mismatch(e_s, e_hs, h, img);
  if (!mm) return std::nullopt;
  Counterexample c{S, h, mm->first, mm->second, 0, 0};
  const State y = mm->first | (State{1} << mm->second);
  const auto dir = [](std::int64_t a, std::int64_t b) { return a > b ? 1 : a < b ? -1 : 0; };
  c.direction_transported = dir(e_s[mm->first], e_s[y]);
  c.direction_stored = dir(e_hs[img[mm->first]], e_hs[img[y]]);
  return c;
}

}  // namespace detail

/// h(O(S)) == O(h(S)) edge by edge, ties included.
inline bool commutes(const std::vector<State>& S, const Isometry& h, const SymmetricRule& rule = {},
                     int cap = hopfield_orientation_cap) {
  h.validate();
  require(h.n() <= cap, "n above the orientation cap");
  return !detail::check_pair(S, h, rule).has_value();
}

struct CommutationSummary {
  std::int64_t pairs = 0;
  std::int64_t violations = 0;
  std::optional<Counterexample> first;
};

/// Every non-empty memory subset of the 2^n states against every isometry. Weights are kept per subset
/// in Gray-code order so each step adds or removes one memory.
inline CommutationSummary exhaustive_commutation(int n, const SymmetricRule& rule = {}, unsigned threads = 1,
                                                 int cap = hopfield_exhaustive_cap) {
  require(n >= 1 && n <= cap, "n above the exhaustive cap");
  const auto isos = all_isometries(n);
  const std::size_t states = std::size_t{1} << n;
  const std::uint64_t subsets = std::uint64_t{1} << states;
  // per-memory energy tables: energy is additive over memories
  std::vector<std::vector<std::int64_t>> table(states);
  for (State m = 0; m < states; ++m) table[m] = energies(store(std::vector<State>{m}, n, rule));
  std::vector<std::int64_t> viol(isos.size(), 0);
  std::vector<std::optional<std::uint64_t>> first_subset(isos.size());
  parallel_for(isos.size(), threads, [&](std::size_t hi) {
    const Isometry& h = isos[hi];
    const auto img = detail::image_table(h);
    std::vector<std::int64_t> e_s(states, 0), e_hs(states, 0);
    std::uint64_t gray = 0;
    for (std::uint64_t i = 1; i < subsets; ++i) {
      const std::uint64_t next = i ^ (i >> 1);
      const std::uint64_t changed = next ^ gray;
      const State m = static_cast<State>(std::countr_zero(changed));
      const std::int64_t sign = (next & changed) ? 1 : -1;
      for (std::size_t x = 0; x < states; ++x) {
        e_s[x] += sign * table[m][x];
        e_hs[x] += sign * table[img[m]][x];
      }
      gray = next;
      if (detail::first_mismatch(e_s, e_hs, h, img)) {
        ++viol[hi];
        if (!first_subset[hi]) first_subset[hi] = gray;
      }
    }
  });
  CommutationSummary out;
  out.pairs = static_cast<std::int64_t>(isos.size()) * static_cast<std::int64_t>(subsets - 1);
  for (std::size_t hi = 0; hi < isos.size(); ++hi) {
    out.violations += viol[hi];
    if (!out.first && first_subset[hi]) {
      std::vector<State> S;
      for (State m = 0; m < states; ++m)
        if ((*first_subset[hi] >> m) & 1U) S.push_back(m);
      out.first = detail::check_pair(S, isos[hi], rule);
    }
  }
  return out;
}

/// Random memory sets (1..max_memories distinct states) and random isometries.
inline CommutationSummary random_commutation(int n, int trials, std::uint64_t seed, const SymmetricRule& rule = {},
                                             int max_memories = 8) {
  require(n >= 1 && n <= hopfield_orientation_cap, "n above the orientation cap");
  require(trials >= 0 && max_memories >= 1, "bad trial counts");
  CommutationSummary out;
  Rng rng = make_rng(seed, 40);
  std::uniform_int_distribution<State> pick(0, (State{1} << n) - 1);
  std::uniform_int_distribution<int> size(1, max_memories);
  for (int t = 0; t < trials; ++t) {
    std::vector<State> S;
    const int m = size(rng);
    while (static_cast<int>(S.size()) < m) {
      const State s = pick(rng);
      if (std::find(S.begin(), S.end(), s) == S.end()) S.push_back(s);
      if (S.size() == (std::size_t{1} << n)) break;
    }
    const Isometry h = random_isometry(n, rng);
    ++out.pairs;
    if (auto c = detail::check_pair(S, h, rule)) {
      ++out.violations;
      if (!out.first) out.first = c;
    }
  }
  return out;
}

/// Searches single memories against all isometries (n <= 4), then random memory sets; returns the first violation.
inline std::optional<Counterexample> uniqueness_search(int n, const SymmetricRule& rule, int trials,
                                                       std::uint64_t seed) {
  require(n >= 1 && n <= 6, "uniqueness search supports n <= 6");
  if (n <= hopfield_exhaustive_cap)
    for (const auto& h : all_isometries(n))
      for (State m = 0; m < (State{1} << n); ++m)
        if (auto c = detail::check_pair({m}, h, rule)) return c;
  const auto r = random_commutation(n, trials, seed, rule);
  return r.first;
}

/// True when every edge is a tie.
inline bool all_ties(const HypercubeOrientation& o) {
  for (State x = 0; x < (State{1} << o.n); ++x)
    for (int k = 0; k < o.n; ++k)
      if (!((x >> k) & 1U) && o.at(x, k) != 0) return false;
  return true;
}

}  // namespace locallearn
