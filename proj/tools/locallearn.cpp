#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "locallearn.hpp"

namespace fs = std::filesystem;
using namespace locallearn;

namespace {

constexpr int exit_invalid_config = 2;
constexpr int exit_runtime_failure = 1;

class ConfigError : public Error {
 public:
  using Error::Error;
};

template <typename F>
auto as_config(F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string flag_name(const std::string& key) {
  std::string s = key;
  for (auto& c : s)
    if (c == '_') c = '-';
  return s;
}

std::vector<std::string> split(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

/// Converts command-line text to the JSON type of the default value.
json parse_as(const json& like, const std::string& key, const std::string& text) {
  try {
    if (like.is_boolean()) {
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      throw ConfigError("--" + flag_name(key) + " expects true or false");
    }
    if (like.is_number_integer()) {
      std::size_t pos = 0;
      const long long v = std::stoll(text, &pos);
      if (pos != text.size()) throw ConfigError("--" + flag_name(key) + " expects an integer");
      return v;
    }
    if (like.is_number()) {
      std::size_t pos = 0;
      const double v = std::stod(text, &pos);
      if (pos != text.size()) throw ConfigError("--" + flag_name(key) + " expects a number");
      return v;
    }
    if (like.is_array()) {
      json arr = json::array();
      const json elem = like.empty() ? json(0) : like[0];
      for (const auto& part : split(text)) arr.push_back(parse_as(elem, key, part));
      return arr;
    }
  } catch (const std::invalid_argument&) {
    throw ConfigError("--" + flag_name(key) + ": cannot parse '" + text + "'");
  } catch (const std::out_of_range&) {
    throw ConfigError("--" + flag_name(key) + ": value out of range '" + text + "'");
  }
  return text;
}

bool same_kind(const json& like, const json& v, const std::string& key) {
  if (key == "rule") return v.is_string() || v.is_array() || v.is_object();
  if (like.is_boolean()) return v.is_boolean();
  if (like.is_number_integer()) return v.is_number_integer();
  if (like.is_number()) return v.is_number();
  if (like.is_array()) {
    if (!v.is_array()) return false;
    if (like.empty()) return true;
    for (const auto& e : v)
      if (!same_kind(like[0], e, key + "[]")) return false;
    return true;
  }
  return v.is_string();
}

struct Context {
  std::string command;
  json params;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  Budget budget = Budget::quick;
  fs::path out;
  std::vector<std::string> outputs;

  template <typename T>
  T get(const char* key) const {
    return params.at(key).get<T>();
  }

  std::ofstream file(const std::string& name) {
    outputs.push_back(name);
    return open_output((out / name).string());
  }

  void write_json(const std::string& name, const json& j) {
    auto f = file(name);
    f << j.dump(2) << "\n";
  }
};

struct Command {
  std::string path;  // e.g. "boolean census"
  std::string help;
  json defaults;
  std::function<int(Context&)> run;
};

// ---- shared parameter blocks ----

json data_defaults() {
  return {{"data", "gaussian"}, {"n", 10},     {"m", 500},      {"images", ""}, {"labels", ""},
          {"subset", 1000},     {"digit", 0},  {"file", ""},    {"has_target", true}};
}

json merge(json a, const json& b) {
  for (const auto& [k, v] : b.items()) a[k] = v;
  return a;
}

/// Numeric CSV, optional header; last column is the target when has_target.
TrainingSet read_csv_dataset(const std::string& path, bool has_target) {
  std::ifstream in(path);
  require(in.good(), "cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> r;
    bool numeric = true;
    for (const auto& f : split(line)) {
      try {
        std::size_t pos = 0;
        r.push_back(std::stod(f, &pos));
        numeric = numeric && pos == f.size();
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      require(rows.empty(), path + ": non-numeric row after the header");
      continue;
    }
    require(rows.empty() || r.size() == rows[0].size(), path + ": ragged rows");
    rows.push_back(std::move(r));
  }
  require(!rows.empty(), path + ": no data rows");
  const int cols = static_cast<int>(rows[0].size());
  const int n = has_target ? cols - 1 : cols;
  require(n >= 1, path + ": no input columns");
  TrainingSet ts;
  ts.inputs.resize(static_cast<Eigen::Index>(rows.size()), n);
  Mat t(static_cast<Eigen::Index>(rows.size()), 1);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (int k = 0; k < n; ++k) ts.inputs(r, k) = rows[r][k];
    if (has_target) t(r, 0) = rows[r][n];
  }
  if (has_target) ts.targets = t;
  ts.descriptor = "csv:" + path;
  return ts;
}

TrainingSet load_data(const Context& c) {
  const auto kind = c.get<std::string>("data");
  if (kind == "gaussian") return dynamics_dataset(c.seed, c.get<int>("n"), c.get<int>("m"));
  if (kind == "idx") {
    TrainingSet ts = idx_dataset(c.get<std::string>("images"), c.get<std::string>("labels"),
                                 c.get<std::size_t>("subset"));
    const int digit = c.get<int>("digit");
    require(ts.targets && digit >= 0 && digit < ts.targets->cols(), "digit out of range");
    ts.targets = Mat(ts.targets->col(digit));
    return ts;
  }
  if (kind == "csv") return read_csv_dataset(c.get<std::string>("file"), c.get<bool>("has_target"));
  throw ConfigError("unknown data source '" + kind + "' (gaussian, idx, csv)");
}

LearningRule load_rule(const Context& c) {
  return as_config([&] {
    const json& r = c.params.at("rule");
    if (!r.is_string()) return rule_from_json(r);
    const auto s = r.get<std::string>();
    if (s.size() > 5 && s.substr(s.size() - 5) == ".json") return rule_from_json(read_json_file(s));
    return rule_by_name(s);
  });
}

std::vector<std::string> weight_header(const std::string& first, Eigen::Index n, std::vector<std::string> extra = {},
                                       Eigen::Index from = 1) {
  std::vector<std::string> h{first};
  for (auto& e : extra) h.push_back(e);
  for (Eigen::Index i = 0; i < n; ++i) h.push_back("w_" + std::to_string(i + from));
  return h;
}

std::vector<std::string> numbers(const Vec& v) {
  std::vector<std::string> out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(format_number(v(i)));
  return out;
}

// ---- rules ----

json rule_row(const LearningRule& r) {
  const Degrees d = r.degrees();
  return {{"name", r.name()}, {"n", d.n}, {"d", d.d}, {"supervised", r.supervised()}};
}

int cmd_rules_list(Context& c) {
  auto f = c.file("rules.csv");
  CsvWriter w(f);
  w.row("name", "n", "d", "supervised", "terms");
  for (const auto& r : catalog()) {
    const Degrees d = r.degrees();
    w.row(r.name(), d.n, d.d, r.supervised(), to_json(r)["terms"].dump());
    std::cout << r.name() << " n=" << d.n << " d=" << d.d << (r.supervised() ? " supervised" : "") << "\n";
  }
  return 0;
}

int cmd_rules_classify(Context& c) {
  const LearningRule r = load_rule(c);
  const json j = rule_row(r);
  c.write_json("classification.json", j);
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_rules_transform(Context& c) {
  const LearningRule r = load_rule(c);
  const Range from = as_config([&] { return range_from_string(c.get<std::string>("from")); });
  const QuadraticCoefficients q = as_config([&] { return quadratic_part(r); });
  const QuadraticCoefficients t = range_transform(q, from);
  const Range to = from == Range::unit ? Range::symmetric : Range::unit;
  const json j = {{"from", to_string(from)},
                  {"to", to_string(to)},
                  {"input", {q.alpha, q.beta, q.gamma, q.delta}},
                  {"output", {t.alpha, t.beta, t.gamma, t.delta}},
                  {"rule", to_json(quadratic_rule(t, r.name() + "_transformed", to))}};
  c.write_json("transform.json", j);
  std::cout << j.dump() << "\n";
  return 0;
}

// ---- moments ----

json moments_json(const DataMoments& mo) {
  auto vec = [](const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  json rows = json::array();
  for (Eigen::Index i = 0; i < mo.sigma_II.rows(); ++i) rows.push_back(vec(mo.sigma_II.row(i).transpose()));
  return {{"n_samples", mo.n_samples}, {"mu", vec(mo.mu)},     {"sigma_II", rows}, {"has_target", mo.has_target},
          {"sigma_IT", vec(mo.sigma_IT)}, {"mu_T", mo.mu_T}, {"m2_T", mo.m2_T}};
}

int cmd_moments_compute(Context& c) {
  const DataMoments mo = compute_moments(load_data(c));
  c.write_json("moments.json", moments_json(mo));
  std::cout << "moments of " << mo.n_samples << " samples in " << mo.dim() << " dimensions\n";
  return 0;
}

Vec initial_weights(const Context& c, Eigen::Index n) {
  Rng rng = make_rng(c.seed, 52);
  Vec w0(n);
  for (auto& v : w0) v = normal(rng, 0, c.get<double>("w0_sd"));
  return w0;
}

int cmd_moments_predict(Context& c) {
  const LearningRule rule = load_rule(c);
  const TrainingSet data = load_data(c);
  const DataMoments mo = compute_moments(data);
  const double eta = c.get<double>("eta");
  const int epochs = c.get<int>("epochs");
  require(epochs >= 0, "epochs must be non-negative");
  const Vec w0 = initial_weights(c, mo.dim());
  const long m = static_cast<long>(data.size());
  const auto rec = rule_recurrence(rule, mo, eta, w0);
  auto f = c.file("trajectory.csv");
  CsvWriter w(f);
  w.row(weight_header("epoch", mo.dim()));
  if (const auto* flag = std::get_if<NonlinearFlag>(&rec)) {
    require(flag->riccati, "no closed-form trajectory for a rule with d = " + std::to_string(flag->weight_degree));
    for (int k = 0; k <= epochs; ++k) {
      Vec wk(mo.dim());
      for (Eigen::Index i = 0; i < wk.size(); ++i) wk(i) = riccati_solution(eta, mo.mu(i), w0(i), double(k) * m);
      auto row = numbers(wk);
      row.insert(row.begin(), std::to_string(k));
      w.row(row);
    }
  } else {
    const auto& spec = std::get<RecurrenceSpec>(rec);
    for (int k = 0; k <= epochs; ++k) {
      auto row = numbers(solve_recurrence(spec, k * m));
      row.insert(row.begin(), std::to_string(k));
      w.row(row);
    }
  }
  std::cout << "analytic trajectory of " << rule.name() << " over " << epochs << " epochs\n";
  return 0;
}

// ---- simulate ----

int cmd_simulate(Context& c) {
  const LearningRule rule = load_rule(c);
  TrainingSet data = load_data(c);
  if (c.get<bool>("bias")) data = with_bias(data);
  const TransferFunction f{as_config([&] { return transfer_from_string(c.get<std::string>("transfer")); }), 1.0};
  UnitTrainOptions o;
  o.epochs = c.get<int>("epochs");
  o.eta = {c.get<double>("eta"), c.get<bool>("decay")};
  o.w0 = initial_weights(c, data.input_dim());
  o.seed = c.seed;
  const UnitTrajectory tr = train_unit(rule, data, f, o);
  auto file = c.file("simulation.csv");
  CsvWriter w(file);
  w.row(weight_header("epoch", data.input_dim(), {"norm", "angle_to_centroid"}, 0));
  for (Eigen::Index k = 0; k < tr.weights.rows(); ++k) {
    auto row = numbers(tr.weights.row(k).transpose());
    row.insert(row.begin(), {std::to_string(k), format_number(tr.norms(k)), format_number(tr.angles(k))});
    w.row(row);
  }
  std::cout << "final norm " << format_number(tr.norms(tr.norms.size() - 1)) << "\n";
  return 0;
}

// ---- boolean ----

std::vector<LearningRule> rule_list(const std::string& names) {
  std::vector<LearningRule> out;
  for (const auto& n : split(names)) out.push_back(as_config([&] { return rule_by_name(n); }));
  if (out.empty()) throw ConfigError("no rules given");
  return out;
}

void write_census(Context& c, const std::vector<CensusRow>& rows, int n, bool monotone, const std::string& prefix) {
  auto f = c.file(prefix + ".csv");
  CsvWriter w(f);
  w.row("fan_in", "monotone", "rule", "shallow", "deep", "total", "separable", "restarts", "seed");
  for (const auto& r : rows) {
    w.row(r.fan_in, r.monotone, r.rule_name, r.shallow_count, r.deep_count, r.total, r.separable_count, r.restarts,
          r.seed);
    std::cout << r.rule_name << ": shallow " << r.shallow_count << "/" << r.total << ", deep " << r.deep_count << "/"
              << r.total << " (separable " << r.separable_count << ")\n";
  }
  auto g = c.file(prefix + "_functions.csv");
  CsvWriter wf(g);
  wf.row("rule", "table", "separable", "shallow", "deep");
  const auto fns = enumerate_functions(n, monotone);
  for (const auto& r : rows)
    for (std::size_t i = 0; i < fns.size(); ++i)
      wf.row(r.rule_name, fns[i].table, linearly_separable(fns[i]), bool(r.shallow[i]), bool(r.deep[i]));
}

int cmd_boolean_census(Context& c) {
  CensusConfig cfg;
  cfg.restarts = c.get<int>("restarts");
  cfg.seed = c.seed;
  cfg.threads = c.threads;
  cfg.hidden_width = c.get<int>("hidden_width");
  const int n = c.get<int>("n");
  const bool mono = c.get<bool>("monotone");
  const auto rows = census(n, mono, rule_list(c.get<std::string>("rules")), cfg);
  write_census(c, rows, n, mono, "census");
  return 0;
}

// ---- ssh ----

json report_json(const SshResult& r) {
  json cos = json::array();
  for (Eigen::Index i = 0; i < r.report.cos_matrix.rows(); ++i) {
    const Vec row = r.report.cos_matrix.row(i).transpose();
    cos.push_back(std::vector<double>(row.data(), row.data() + row.size()));
  }
  const auto& f = r.report.flags;
  return {{"cos_matrix", cos},
          {"row_sums", std::vector<double>(r.report.row_sums.data(), r.report.row_sums.data() + r.report.row_sums.size())},
          {"flags",
           {{"consistent", f.consistent},
            {"common_orthant", f.common_orthant},
            {"mutually_orthogonal", f.mutually_orthogonal},
            {"equal_lengths", f.equal_lengths},
            {"all_row_sums_positive", f.all_row_sums_positive},
            {"degenerate", f.degenerate}}},
          {"predicted", to_string(r.predicted)},
          {"empirical", r.empirical}};
}

TrainingSet ssh_data(const Context& c, Rng& rng, int n, int m, bool bias) {
  const auto family = c.get<std::string>("family");
  if (family == "random") return random_binary_set(n, m, bias, rng);
  if (family == "linsep") return linsep_random(n, m, derive_seed(c.seed, static_cast<std::uint64_t>(rng())));
  if (family == "csv") return read_csv_dataset(c.get<std::string>("file"), true);
  throw ConfigError("unknown dataset family '" + family + "' (random, linsep, csv)");
}

int cmd_ssh_analyze(Context& c) {
  Rng rng = make_rng(c.seed, 80);
  const bool bias = c.get<bool>("bias");
  const TrainingSet ts = ssh_data(c, rng, c.get<int>("n"), c.get<int>("m"), bias);
  SshRunOptions o;
  o.epochs = c.get<int>("epochs");
  const SshResult r = predict_and_verify(ts, bias, o);
  c.write_json("report.json", report_json(r));
  std::cout << "predicted " << to_string(r.predicted) << ", empirical " << (r.empirical ? "true" : "false") << "\n";
  return 0;
}

int cmd_ssh_verify(Context& c) {
  Rng rng = make_rng(c.seed, 81);
  const int count = c.get<int>("datasets");
  const int n_max = c.get<int>("n_max"), m_max = c.get<int>("m_max");
  require(count >= 1 && n_max >= 2 && m_max >= 1, "need datasets >= 1, n_max >= 2, m_max >= 1");
  SshRunOptions o;
  o.epochs = c.get<int>("epochs");
  auto fv = c.file("verdicts.csv");
  auto ft = c.file("trajectories.csv");
  CsvWriter wv(fv), wt(ft);
  wv.row("dataset", "n", "m", "bias", "predicted", "empirical", "agree");
  wt.row("dataset", "epoch", "training_accuracy");
  int agree = 0, decided = 0;
  for (int d = 0; d < count; ++d) {
    const int n = std::uniform_int_distribution<int>(2, n_max)(rng);
    const int m = std::uniform_int_distribution<int>(1, std::min(m_max, 1 << std::min(n - 1, 20)))(rng);
    const bool bias = coin(rng);
    const TrainingSet ts = ssh_data(c, rng, n, m, bias);
    const SshResult r = predict_and_verify(ts, bias, o);
    const bool ok = r.predicted != Verdict::unknown && (r.predicted == Verdict::yes) == r.empirical;
    decided += r.predicted != Verdict::unknown;
    agree += ok;
    wv.row(d, n, m, bias, to_string(r.predicted), r.empirical, ok);
    for (Eigen::Index e = 0; e < r.accuracy.size(); ++e) wt.row(d, static_cast<long>(e), r.accuracy(e));
  }
  std::cout << "agreement " << agree << "/" << decided << " decided of " << count << "\n";
  return 0;
}

// ---- deep targets ----

json net_json(const LayeredNet& net) {
  json layers = json::array();
  for (int h = 1; h <= net.depth(); ++h) {
    json rows = json::array();
    const Mat& w = net.weights(h);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      const Vec r = w.row(i).transpose();
      rows.push_back(std::vector<double>(r.data(), r.data() + r.size()));
    }
    layers.push_back({{"transfer", to_string(net.transfer(h).kind)}, {"weights", rows}});
  }
  return {{"sizes", net.sizes()}, {"layers", layers}};
}

int cmd_deep_targets_train(Context& c) {
  AutoencoderSpec spec;
  spec.sizes = c.get<std::vector<int>>("sizes");
  require(spec.sizes.size() >= 2, "sizes needs at least two layers");
  spec.epochs = c.get<int>("epochs");
  spec.seed = c.seed;
  spec.data.n_clusters = c.get<int>("clusters");
  spec.data.per_cluster = c.get<int>("per_cluster");
  spec.data.n_bits = c.get<int>("bits");
  spec.data.flip_prob = c.get<double>("flip");
  spec.data.test_per_cluster = c.get<int>("test_per_cluster");
  require(spec.sizes.front() == spec.data.n_bits && spec.sizes.back() == spec.data.n_bits,
          "autoencoder input and output widths must equal bits");
  auto f = c.file("curve.csv");
  CsvWriter w(f);
  w.row("epoch", "train_error", "test_error");
  const AutoencoderRun run = run_autoencoder(spec, [&](int e, const DeepTargetsResult& r) {
    w.row(e, r.train_error.back(), r.test_error.back());
  });
  json ck = net_json(run.net);
  ck["epoch"] = spec.epochs;
  ck["seed"] = spec.seed;
  ck["train_error"] = run.result.train_error.back();
  ck["test_error"] = run.result.test_error.back();
  c.write_json(c.get<std::string>("checkpoint"), ck);
  std::cout << "train error " << format_number(run.result.train_error.front()) << " -> "
            << format_number(run.result.train_error.back()) << ", best reduction train "
            << format_number(run.best_train_reduction) << " test " << format_number(run.best_test_reduction) << "\n";
  return 0;
}

// ---- channel ----

ChannelAlgorithm channel_algorithm(const Context& c) {
  ChannelAlgorithm a;
  a.kind = as_config([&] { return channel_kind_from_string(c.get<std::string>("alg")); });
  a.K = c.get<int>("K");
  a.epsilon = c.get<double>("epsilon");
  a.perturbation_scale = c.get<double>("scale");
  as_config([&] {
    a.validate();
    return 0;
  });
  return a;
}

void write_trials(Context& c, const std::vector<TrialRow>& rows) {
  auto f = c.file("trials.csv");
  CsvWriter w(f);
  w.row("alg", "W", "N", "K", "trial", "O_emp", "ops", "bits");
  for (const auto& r : rows) w.row(r.algorithm, static_cast<long>(r.W), r.N, r.K, r.trial, r.O_emp, r.ops, r.bits);
}

int cmd_channel_run(Context& c) {
  const ChannelAlgorithm alg = channel_algorithm(c);
  const int trials = c.get<int>("trials");
  const int D = c.get<int>("D");
  require(trials >= 1, "trials must be positive");
  const LayeredNet net = bench_net(c.get<long>("W"), derive_seed(c.seed, 1));
  const ChannelExample ex = bench_example(net, derive_seed(c.seed, 2));
  std::vector<ChannelReport> reps(static_cast<std::size_t>(trials));
  parallel_for(reps.size(), c.threads, [&](std::size_t t) { reps[t] = run(alg, net, ex, derive_seed(c.seed, 100 + t), D); });
  std::vector<TrialRow> rows;
  double mean = 0;
  for (std::size_t t = 0; t < reps.size(); ++t) {
    const auto& r = reps[t];
    rows.push_back({r.algorithm, r.W, r.N, r.K, int(t), r.O_emp, r.ops.total(), r.bits});
    mean += std::abs(r.O_emp) / trials;
  }
  write_trials(c, rows);
  const auto& r0 = reps[0];
  const json j = {{"alg", r0.algorithm}, {"W", r0.W},   {"N", r0.N},         {"K", r0.K},
                  {"D", r0.D},           {"I_W", r0.I_W}, {"C_W", r0.C_W},   {"R", r0.R},
                  {"O_theory", r0.O_theory}, {"mean_abs_O_emp", mean}, {"trials", trials}};
  c.write_json("summary.json", j);
  std::cout << j.dump() << "\n";
  return 0;
}

json fit_json(const ScalingResult& r) {
  return {{"alg", r.algorithm},
          {"axis", r.axis == ScalingAxis::W ? "W" : "K"},
          {"regressor", r.regressor == ScalingRegressor::log_log ? "log_log" : "sqrt_log"},
          {"slope", r.fit.slope},
          {"slope_ci95", r.slope_ci95},
          {"intercept", r.fit.intercept},
          {"r2", r.fit.r2}};
}

void write_points(Context& c, const ScalingResult& r, const std::string& name) {
  auto f = c.file(name);
  CsvWriter w(f);
  w.row("alg", "size", "W", "K", "mean_abs_O", "sd_abs_O", "trials");
  for (const auto& p : r.points) w.row(r.algorithm, p.size, static_cast<long>(p.W), p.K, p.mean_abs_O, p.sd_abs_O, p.trials);
}

int cmd_channel_scale(Context& c) {
  ScalingSpec s;
  s.algorithm = channel_algorithm(c);
  const auto axis = c.get<std::string>("axis");
  if (axis != "W" && axis != "K") throw ConfigError("axis must be W or K");
  s.axis = axis == "W" ? ScalingAxis::W : ScalingAxis::K;
  s.sizes = c.get<std::vector<double>>("sizes");
  s.fixed_W = c.get<long>("fixed_W");
  s.trials = c.get<int>("trials");
  s.seed = c.seed;
  s.threads = c.threads;
  const auto reg = c.get<std::string>("regressor");
  if (reg != "log_log" && reg != "sqrt_log") throw ConfigError("regressor must be log_log or sqrt_log");
  s.regressor = reg == "log_log" ? ScalingRegressor::log_log : ScalingRegressor::sqrt_log;
  const ScalingResult r = scaling_study(s);
  write_trials(c, r.trials);
  write_points(c, r, "points.csv");
  c.write_json("fit.json", fit_json(r));
  std::cout << fit_json(r).dump() << "\n";
  return 0;
}

void write_table8(Context& c, const std::vector<Table8Row>& rows) {
  auto f = c.file("table8.csv");
  CsvWriter w(f);
  w.row("algorithm", "information", "computation", "rate", "improvement", "I_W", "C_W", "R", "O");
  for (const auto& r : rows) w.row(r.algorithm, r.information, r.computation, r.rate, r.improvement, r.I_W, r.C_W, r.R, r.O);
  auto md = c.file("table8.md");
  md << table8_markdown(rows);
}

int cmd_channel_table8(Context& c) {
  const auto rows = table8(c.get<double>("W"), c.get<double>("N"), c.get<double>("K"), c.get<int>("D"));
  write_table8(c, rows);
  std::cout << table8_markdown(rows);
  return 0;
}

// ---- hopfield ----

std::vector<State> parse_memories(const std::string& text, int& n) {
  std::vector<State> out;
  n = 0;
  for (const auto& m : split(text)) {
    if (n == 0) n = static_cast<int>(m.size());
    if (static_cast<int>(m.size()) != n) throw ConfigError("memories differ in length");
    std::vector<int> v;
    for (char ch : m) {
      if (ch != '+' && ch != '-') throw ConfigError("memories are strings of + and -");
      v.push_back(ch == '+' ? 1 : -1);
    }
    out.push_back(state_from_spins(v));
  }
  if (out.empty()) throw ConfigError("no memories given");
  return out;
}

SymmetricRule symmetric_rule(const Context& c) {
  return {c.get<std::int64_t>("alpha"), c.get<std::int64_t>("beta"), c.get<std::int64_t>("gamma")};
}

int cmd_hopfield_store(Context& c) {
  int n = 0;
  const auto mem = parse_memories(c.get<std::string>("memories"), n);
  const HopfieldNet net = store(mem, n, symmetric_rule(c));
  auto f = c.file("weights.csv");
  CsvWriter w(f);
  for (int i = 0; i < n; ++i) {
    std::vector<std::string> row;
    for (int j = 0; j < n; ++j) row.push_back(std::to_string(net.weights(i, j)));
    w.row(row);
    for (const auto& s : row) std::cout << s << ' ';
    std::cout << "\n";
  }
  return 0;
}

int cmd_hopfield_orient(Context& c) {
  int n = 0;
  const auto mem = parse_memories(c.get<std::string>("memories"), n);
  const HopfieldNet net = store(mem, n, symmetric_rule(c));
  const HypercubeOrientation o = orientation(net);
  const auto e = energies(net);
  if (n <= 8) {
    auto f = c.file("edges.csv");
    CsvWriter w(f);
    w.row("from", "to", "direction", "energy_from", "energy_to");
    for (State x = 0; x < (State{1} << n); ++x)
      for (int k = 0; k < n; ++k) {
        if ((x >> k) & 1U) continue;
        const State y = x | (State{1} << k);
        const int d = o.at(x, k);
        w.row(state_string(x, n), state_string(y, n), d == 0 ? "tie" : d > 0 ? "forward" : "backward", e[x], e[y]);
      }
  }
  json sinks = json::array();
  int ties = 0;
  for (State x = 0; x < (State{1} << n); ++x) {
    if (is_sink(o, x)) sinks.push_back(state_string(x, n));
    for (int k = 0; k < n; ++k) ties += !((x >> k) & 1U) && o.at(x, k) == 0;
  }
  const json j = {{"n", n}, {"edges", o.edge_count()}, {"ties", ties}, {"acyclic", acyclic(o)}, {"sinks", sinks}};
  c.write_json("orientation.json", j);
  std::cout << j.dump() << "\n";
  return 0;
}

json counterexample_json(const Counterexample& ce, int n) {
  json mem = json::array();
  for (State m : ce.memories) mem.push_back(state_string(m, n));
  return {{"memories", mem},
          {"isometry", ce.isometry.to_string()},
          {"edge_from", state_string(ce.x, n)},
          {"edge_to", state_string(ce.x | (State{1} << ce.k), n)},
          {"direction_transported", ce.direction_transported},
          {"direction_stored", ce.direction_stored}};
}

int cmd_hopfield_commute(Context& c) {
  const SymmetricRule rule = symmetric_rule(c);
  json j;
  const int ex_n = c.get<int>("exhaustive_n");
  const auto mems = c.get<std::string>("memories");
  if (ex_n > 0) {
    const auto s = as_config([&] { return exhaustive_commutation(ex_n, rule, c.threads); });
    j = {{"mode", "exhaustive"}, {"n", ex_n}, {"pairs", s.pairs}, {"violations", s.violations}};
    if (s.first) j["first"] = counterexample_json(*s.first, ex_n);
  } else if (!mems.empty()) {
    int n = 0;
    const auto mem = parse_memories(mems, n);
    Isometry h = Isometry::identity(n);
    if (const auto p = c.get<std::vector<int>>("perm"); !p.empty()) h.perm = p;
    if (const auto f = c.get<std::vector<int>>("flips"); !f.empty()) h.flips = f;
    as_config([&] {
      h.validate();
      require(h.n() == n, "isometry length differs from the memories");
      return 0;
    });
    j = {{"mode", "pair"}, {"n", n}, {"isometry", h.to_string()}, {"commutes", commutes(mem, h, rule)}};
  } else {
    const int n = c.get<int>("random_n");
    const auto s = random_commutation(n, c.get<int>("trials"), c.seed, rule);
    j = {{"mode", "random"}, {"n", n}, {"pairs", s.pairs}, {"violations", s.violations}};
    if (s.first) j["first"] = counterexample_json(*s.first, n);
  }
  c.write_json("commutation.json", j);
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_hopfield_uniqueness(Context& c) {
  const int n = c.get<int>("n");
  const auto ce = uniqueness_search(n, symmetric_rule(c), c.get<int>("trials"), c.seed);
  json j = {{"n", n}, {"found", ce.has_value()}};
  if (ce) j["counterexample"] = counterexample_json(*ce, n);
  c.write_json("uniqueness.json", j);
  std::cout << j.dump() << "\n";
  return 0;
}

// ---- reproduce ----

int cmd_reproduce(Context& c) {
  const auto target = c.get<std::string>("target");
  AcceptanceOptions o{c.budget, c.seed, c.threads};
  if (target == "table6" || target == "table7") {
    const bool mono = target == "table7";
    CensusConfig cfg;
    cfg.seed = c.seed;
    cfg.threads = c.threads;
    for (int n : mono ? std::vector<int>{2, 3, 4} : std::vector<int>{2, 3})
      write_census(c, census(n, mono, census_rules(), cfg), n, mono, target + "_n" + std::to_string(n));
    return 0;
  }
  if (target == "table8") {
    write_table8(c, table8(1e4, 100, 16, 64));
    ScalingSpec s;
    s.seed = c.seed;
    s.threads = c.threads;
    s.trials = c.budget == Budget::full ? 4000 : 1000;
    s.algorithm.kind = ChannelKind::PWGB;
    s.sizes = {64, 256, 1024};
    json fits = json::array();
    const auto a = scaling_study(s);
    write_points(c, a, "scaling_pwgb.csv");
    fits.push_back(fit_json(a));
    s.algorithm.kind = ChannelKind::PWGRK;
    s.axis = ScalingAxis::K;
    s.sizes = {4, 16, 64};
    const auto b = scaling_study(s);
    write_points(c, b, "scaling_pwgrk.csv");
    fits.push_back(fit_json(b));
    s.algorithm.kind = ChannelKind::PWGBK;
    s.sizes = {2, 4, 8, 16, 32, 64, 128, 256};
    s.fixed_W = 256;
    s.regressor = ScalingRegressor::sqrt_log;
    const auto k = scaling_study(s);
    write_points(c, k, "scaling_pwgbk.csv");
    fits.push_back(fit_json(k));
    c.write_json("scaling_fits.json", fits);
    std::cout << fits.dump(2) << "\n";
    return 0;
  }
  if (target == "fig11") {
    AutoencoderSpec spec;
    spec.seed = c.seed;
    auto f = c.file("fig11.csv");
    CsvWriter w(f);
    w.row("epoch", "train_error", "test_error");
    const auto run = run_autoencoder(spec, [&](int e, const DeepTargetsResult& r) {
      w.row(e, r.train_error.back(), r.test_error.back());
    });
    std::cout << "best reduction train " << format_number(run.best_train_reduction) << " test "
              << format_number(run.best_test_reduction) << "\n";
    return 0;
  }
  std::vector<int> ids;
  if (target.rfind("ac", 0) == 0) {
    try {
      ids.push_back(std::stoi(target.substr(2)));
    } catch (const std::exception&) {
      throw ConfigError("unknown reproduce target '" + target + "'");
    }
    if (ids[0] < 1 || ids[0] > static_cast<int>(criteria_list().size()))
      throw ConfigError("unknown reproduce target '" + target + "'");
  } else if (target != "all") {
    throw ConfigError("unknown reproduce target '" + target + "' (all, table6, table7, table8, fig11, ac1..ac10)");
  }
  const auto results = run_acceptance(o, ids, [](const CriterionResult& r) {
    std::cout << result_line(r) << std::endl;
  });
  auto f = c.file("acceptance.csv");
  CsvWriter w(f);
  w.row("criterion", "title", "pass", "detail");
  bool all = true;
  for (const auto& r : results) {
    w.row("AC" + std::to_string(r.id), r.title, r.pass, r.detail);
    all = all && r.pass;
  }
  return all ? 0 : exit_runtime_failure;
}

std::vector<Command> commands() {
  const json channel_common = {{"alg", "PWGB"}, {"K", 1}, {"epsilon", 1e-6}, {"scale", 1e-5}};
  const json hop_rule = {{"alpha", 1}, {"beta", 0}, {"gamma", 0}};
  return {
      {"rules list", "List the rule catalog with degrees", json::object(), cmd_rules_list},
      {"rules classify", "Degrees (n, d) of a rule", {{"rule", "simple_hebb"}}, cmd_rules_classify},
      {"rules transform", "Move a quadratic rule between [0,1] and [-1,1]", {{"rule", "simple_hebb"}, {"from", "[0,1]"}},
       cmd_rules_transform},
      {"moments compute", "First and second data moments", data_defaults(), cmd_moments_compute},
      {"moments predict", "Analytic weight trajectory of a linear unit",
       merge(data_defaults(), {{"rule", "simple_hebb"}, {"eta", 1e-3}, {"epochs", 50}, {"w0_sd", 0.1}}),
       cmd_moments_predict},
      {"simulate", "On-line training of a single unit",
       merge(data_defaults(), {{"rule", "simple_hebb"},
                               {"transfer", "linear"},
                               {"eta", 1e-3},
                               {"decay", false},
                               {"epochs", 50},
                               {"w0_sd", 0.1},
                               {"bias", false}}),
       cmd_simulate},
      {"boolean census", "Count Boolean functions learnt by shallow and two-layer local learning",
       {{"n", 3}, {"monotone", false}, {"rules", "hebb,oja,new"}, {"restarts", 4096}, {"hidden_width", 0}},
       cmd_boolean_census},
      {"ssh analyze", "Cosine criteria and training verdict for one dataset",
       {{"family", "random"}, {"file", ""}, {"n", 6}, {"m", 10}, {"bias", true}, {"epochs", 1}}, cmd_ssh_analyze},
      {"ssh verify", "Predicted against empirical verdicts over random datasets",
       {{"family", "random"}, {"file", ""}, {"datasets", 200}, {"n_max", 10}, {"m_max", 20}, {"epochs", 5}},
       cmd_ssh_verify},
      {"deep-targets train", "Deep-targets training of a threshold autoencoder",
       {{"sizes", {100, 30, 10, 30, 100}},
        {"epochs", 100},
        {"clusters", 10},
        {"per_cluster", 100},
        {"bits", 100},
        {"flip", 0.05},
        {"test_per_cluster", 100},
        {"checkpoint", "checkpoint.json"}},
       cmd_deep_targets_train},
      {"channel run", "Step directions of one learning-channel algorithm",
       merge(channel_common, {{"W", 64}, {"D", 64}, {"trials", 100}}), cmd_channel_run},
      {"channel scale", "Scaling of the mean improvement with W or K",
       merge(channel_common,
             {{"axis", "W"}, {"sizes", {64.0, 256.0, 1024.0}}, {"fixed_W", 4096}, {"trials", 1000}, {"regressor", "log_log"}}),
       cmd_channel_scale},
      {"channel table8", "Theoretical rate and improvement table", {{"W", 1e4}, {"N", 100.0}, {"K", 16.0}, {"D", 64}},
       cmd_channel_table8},
      {"hopfield store", "Hopfield weights of a memory set", merge(hop_rule, {{"memories", "++--,+-+-"}}),
       cmd_hopfield_store},
      {"hopfield orient", "Energy orientation of the hypercube", merge(hop_rule, {{"memories", "++--,+-+-"}}),
       cmd_hopfield_orient},
      {"hopfield commute", "Check h(O(S)) = O(h(S))",
       merge(hop_rule, {{"memories", ""},
                        {"perm", json::array()},
                        {"flips", json::array()},
                        {"exhaustive_n", 0},
                        {"random_n", 8},
                        {"trials", 1000}}),
       cmd_hopfield_commute},
      {"hopfield uniqueness", "Search for an isometry violation of a symmetric rule",
       merge(hop_rule, {{"n", 4}, {"beta", 1}, {"trials", 1000}}), cmd_hopfield_uniqueness},
      {"reproduce", "Acceptance suite or one table/figure (all, table6, table7, table8, fig11, ac1..ac10)",
       {{"target", "all"}}, cmd_reproduce},
  };
}

std::string slug(const std::string& path) {
  std::string s = path;
  for (auto& ch : s)
    if (ch == ' ') ch = '_';
  return s;
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  const json cfg = as_config([&] { return read_json_file(path); });
  as_config([&] {
    check_keys(cfg, {"command", "seed", "threads", "output_dir", "budget", "params"}, path);
    return 0;
  });
  return cfg;
}

/// The config document that regenerates a run; threads and output_dir do not affect artifacts.
json run_identity(const Context& c) {
  return {{"command", c.command}, {"params", c.params}, {"seed", c.seed}, {"budget", to_string(c.budget)}};
}

std::string config_hash(const Context& c) { return hex(fnv1a(run_identity(c).dump())); }

void write_manifest(const Context& c, const std::string& version) {
  const json identity = run_identity(c);
  json outs = json::array();
  for (const auto& name : c.outputs) {
    std::ifstream in(c.out / name, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    outs.push_back({{"file", name}, {"fnv1a64", hex(fnv1a(ss.str()))}});
  }
  json m = identity;
  m["config"] = identity;
  m["config_hash"] = config_hash(c);
  m["version"] = version;
  m["outputs"] = outs;
  std::ofstream f = open_output((c.out / "manifest.json").string());
  f << m.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local learning rules, learnability analysis, deep targets and learning-channel benchmarks"};
  app.require_subcommand(0, 1);
  app.fallthrough();
  std::string config_path, out_dir, budget_text;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  app.add_option("--config", config_path, "JSON configuration {command, seed, threads, output_dir, budget, params}");
  auto* seed_opt = app.add_option("--seed", seed, "Random seed");
  auto* threads_opt = app.add_option("--threads", threads, "Worker threads");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--budget", budget_text, "Acceptance budget: quick or full");

  const auto cmds = commands();
  std::map<std::string, CLI::App*> groups;
  std::vector<CLI::App*> leaves;
  std::vector<std::map<std::string, std::string>> given(cmds.size());
  std::vector<std::map<std::string, CLI::Option*>> opts(cmds.size());
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    const auto parts = split(cmds[i].path, ' ');
    CLI::App* leaf;
    if (parts.size() == 2) {
      if (!groups.count(parts[0])) {
        groups[parts[0]] = app.add_subcommand(parts[0], parts[0] + " commands");
        groups[parts[0]]->require_subcommand(1);
        groups[parts[0]]->fallthrough();
      }
      leaf = groups[parts[0]]->add_subcommand(parts[1], cmds[i].help);
    } else {
      leaf = app.add_subcommand(parts[0], cmds[i].help);
    }
    leaf->fallthrough();
    for (const auto& [k, v] : cmds[i].defaults.items()) {
      const std::string name = cmds[i].path == "reproduce" && k == "target" ? "target,--target" : "--" + flag_name(k);
      opts[i][k] = leaf->add_option(name, given[i][k], "default " + v.dump());
    }
    leaves.push_back(leaf);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_invalid_config;
  }

  Context ctx;
  std::size_t which = cmds.size();
  int status = 0;
  try {
    const json cfg = load_config(config_path);
    for (std::size_t i = 0; i < cmds.size(); ++i)
      if (leaves[i]->parsed()) which = i;
    if (cfg.contains("command")) {
      const auto named = as_config([&] { return cfg.at("command").get<std::string>(); });
      std::size_t idx = cmds.size();
      for (std::size_t i = 0; i < cmds.size(); ++i)
        if (cmds[i].path == named) idx = i;
      if (idx == cmds.size()) throw ConfigError("config names unknown command '" + named + "'");
      if (which != cmds.size() && which != idx)
        throw ConfigError("config is for '" + named + "' but '" + cmds[which].path + "' was requested");
      which = idx;
    }
    if (which == cmds.size()) {
      std::cerr << app.help();
      return exit_invalid_config;
    }
    const Command& cmd = cmds[which];
    ctx.command = cmd.path;
    ctx.params = cmd.defaults;
    if (cfg.contains("params")) {
      const json& p = cfg.at("params");
      if (!p.is_object()) throw ConfigError("params must be an object");
      for (const auto& [k, v] : p.items()) {
        if (!cmd.defaults.contains(k)) throw ConfigError("unknown parameter '" + k + "' for " + cmd.path);
        if (!same_kind(cmd.defaults[k], v, k)) throw ConfigError("parameter '" + k + "' has the wrong type");
        ctx.params[k] = v;
      }
    }
    for (const auto& [k, opt] : opts[which])
      if (opt->count() > 0) ctx.params[k] = parse_as(cmd.defaults.at(k), k, given[which][k]);

    ctx.seed = 1;
    if (cfg.contains("seed")) ctx.seed = as_config([&] { return cfg.at("seed").get<std::uint64_t>(); });
    if (seed_opt->count()) ctx.seed = seed;
    ctx.threads = 1;
    if (cfg.contains("threads")) ctx.threads = as_config([&] { return cfg.at("threads").get<unsigned>(); });
    if (threads_opt->count()) ctx.threads = threads;
    if (ctx.threads == 0) ctx.threads = default_threads();
    std::string b = cfg.contains("budget") ? as_config([&] { return cfg.at("budget").get<std::string>(); }) : "quick";
    if (!budget_text.empty()) b = budget_text;
    ctx.budget = as_config([&] { return budget_from_string(b); });
    std::string dir = cfg.contains("output_dir") ? as_config([&] { return cfg.at("output_dir").get<std::string>(); })
                                                 : "runs/" + slug(cmd.path) + "-" + config_hash(ctx).substr(0, 8);
    if (!out_dir.empty()) dir = out_dir;
    ctx.out = dir;
    fs::create_directories(ctx.out);

    status = cmd.run(ctx);
    write_manifest(ctx, "0.1.0");
  } catch (const ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return exit_invalid_config;
  } catch (const json::exception& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return exit_invalid_config;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (!ctx.out.empty() && fs::exists(ctx.out)) write_manifest(ctx, "0.1.0");
    return exit_runtime_failure;
  }
  return status;
}
