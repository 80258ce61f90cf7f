#pragma once

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include <json.hpp>

#include "locallearn/error.hpp"
#include "locallearn/rules.hpp"

namespace locallearn {

using json = nlohmann::json;

/// Rejects any key of obj outside allowed.
inline void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  require(obj.is_object(), where + ": expected an object");
  for (const auto& [k, v] : obj.items()) {
    bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; });
    require(ok, where + ": unknown key '" + k + "'");
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw Error(std::string("bad value for '") + key + "': " + e.what());
  }
}

inline json to_json(const RuleTerm& t) {
  return {{"coeff", t.coefficient}, {"nT", t.exp_target}, {"nPost", t.exp_post},
          {"nPre", t.exp_pre},      {"nW", t.exp_weight}, {"postMode", to_string(t.post_mode)}};
}

inline RuleTerm term_from_json(const json& j) {
  check_keys(j, {"coeff", "nT", "nPost", "nPre", "nW", "postMode"}, "rule term");
  require(j.contains("coeff"), "rule term: missing 'coeff'");
  RuleTerm t;
  t.coefficient = get_or<double>(j, "coeff", 0.0);
  t.exp_target = get_or<int>(j, "nT", 0);
  t.exp_post = get_or<int>(j, "nPost", 0);
  t.exp_pre = get_or<int>(j, "nPre", 0);
  t.exp_weight = get_or<int>(j, "nW", 0);
  t.post_mode = post_mode_from_string(get_or<std::string>(j, "postMode", "output"));
  return t;
}

inline json to_json(const LearningRule& r) {
  json terms = json::array();
  for (const auto& t : r.terms()) terms.push_back(to_json(t));
  return {{"name", r.name()}, {"range", to_string(r.range())}, {"terms", terms}};
}

/// Accepts a bare term list or an object {name, range, terms}.
inline LearningRule rule_from_json(const json& j, int max_degree = default_max_degree) {
  const json* terms = &j;
  std::string name = "custom";
  Range range = Range::symmetric;
  if (j.is_object()) {
    check_keys(j, {"name", "range", "terms"}, "rule");
    require(j.contains("terms"), "rule: missing 'terms'");
    name = get_or<std::string>(j, "name", name);
    range = range_from_string(get_or<std::string>(j, "range", "[-1,1]"));
    terms = &j.at("terms");
  }
  require(terms->is_array(), "rule: terms must be an array");
  std::vector<RuleTerm> out;
  for (const auto& t : *terms) out.push_back(term_from_json(t));
  return LearningRule(name, std::move(out), range, max_degree);
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(path + ": " + e.what());
  }
}

}  // namespace locallearn
