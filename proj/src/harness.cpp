#include "mecmtl/harness.hpp"

#include "mecmtl/csv.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace mecmtl::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& stage, const std::string& what) {
  throw std::runtime_error("[stage:" + stage + "] " + what);
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

std::pair<int, int> get_range(const json& j, const std::string& key,
                              std::pair<int, int> fallback) {
  if (!j.contains(key)) return fallback;
  const auto v = j.at(key).get<std::vector<int>>();
  if (v.size() != 2) throw std::invalid_argument("config: " + key + " needs two values");
  return {v[0], v[1]};
}

ExecPolicy parse_exec(const json& j) {
  ExecPolicy p;
  if (j.is_null()) return p;
  const std::string mode = get_or<std::string>(j, "mode", "parallel");
  if (mode == "serial")
    p.mode = ExecMode::serial;
  else if (mode == "parallel")
    p.mode = ExecMode::parallel;
  else
    throw std::invalid_argument("config: exec.mode must be serial or parallel");
  p.threads = get_or<int>(j, "threads", 0);
  return p;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  if (!j.contains("spec_version"))
    throw std::invalid_argument("config: missing spec_version");
  cfg.spec_version = j.at("spec_version").get<int>();
  if (cfg.spec_version != kConfigVersion)
    throw std::invalid_argument("config: unsupported spec_version " +
                                std::to_string(cfg.spec_version));
  cfg.seed = get_or<std::uint64_t>(j, "seed", 0);

  {
    const json t = j.value("topology", json::object());
    const std::string source = get_or<std::string>(t, "source", "random");
    if (source == "random" || source == "clustered") {
      cfg.topology.source = source == "random"
                                ? TopologyConfig::Source::random_sites
                                : TopologyConfig::Source::clustered_sites;
      cfg.topology.n_sites = get_or<int>(t, "n_sites", 20);
      cfg.topology.k = get_or<int>(t, "k", 5);
      cfg.topology.extent = get_or<double>(t, "extent", 100.0);
      cfg.topology.n_blobs = get_or<int>(t, "n_blobs", 2);
      cfg.topology.spread = get_or<double>(t, "spread", 8.0);
      if (cfg.topology.n_sites < 2)
        throw std::invalid_argument("config: topology.n_sites must be >= 2");
      if (cfg.topology.k < 1 || cfg.topology.k >= cfg.topology.n_sites)
        throw std::invalid_argument("config: need 1 <= topology.k < n_sites");
    } else if (source == "file") {
      cfg.topology.source = TopologyConfig::Source::file;
      cfg.topology.path = t.at("path").get<std::string>();
    } else {
      throw std::invalid_argument("config: topology.source must be random or file");
    }
  }

  {
    const json d = j.value("data", json::object());
    const std::string source = get_or<std::string>(d, "source", "synth");
    cfg.data.split_ratio = get_or<double>(d, "split_ratio", 0.7);
    cfg.data.flip_rate = get_or<double>(d, "flip_rate", 0.1);
    cfg.data.normalize = get_or<std::string>(d, "normalize", "none");
    if (cfg.data.normalize != "none" && cfg.data.normalize != "minmax" &&
        cfg.data.normalize != "zscore")
      throw std::invalid_argument("config: data.normalize must be none|minmax|zscore");
    if (!(cfg.data.split_ratio > 0.0 && cfg.data.split_ratio < 1.0))
      throw std::invalid_argument("config: data.split_ratio must be in (0,1)");
    if (source == "synth") {
      cfg.data.source = DataConfig::Source::synth;
      const json s = d.value("synth", json::object());
      cfg.data.synth.dim = get_or<int>(s, "dim", 6);
      cfg.data.synth.n_clusters = get_or<int>(s, "n_clusters", 2);
      cfg.data.synth.samples_per_node =
          get_range(s, "samples_per_node", {30, 80});
      cfg.data.synth.margin_noise = get_or<double>(s, "margin_noise", 0.2);
      cfg.data.synth.flip_rate = get_or<double>(s, "flip_rate", cfg.data.flip_rate);
      cfg.data.synth.split_ratio = cfg.data.split_ratio;
    } else if (source == "csv") {
      cfg.data.source = DataConfig::Source::csv;
      const json c = d.at("csv");
      cfg.data.csv.path = c.at("path").get<std::string>();
      cfg.data.csv.size_range = get_range(c, "size_range", {200, 2000});
      const json s = c.at("schema");
      cfg.data.csv.schema.feature_columns =
          s.at("feature_columns").get<std::vector<std::string>>();
      cfg.data.csv.schema.label_column = s.at("label_column").get<std::string>();
      for (const auto& v : s.at("positive_values"))
        cfg.data.csv.schema.positive_values.insert(v.get<std::string>());
      if (s.contains("negative_values"))
        for (const auto& v : s.at("negative_values"))
          cfg.data.csv.schema.negative_values.insert(v.get<std::string>());
      cfg.data.csv.schema.categorical_columns =
          get_or<std::vector<std::string>>(s, "categorical_columns", {});
    } else {
      throw std::invalid_argument("config: data.source must be synth or csv");
    }
  }

  cfg.loss.l2 = get_or<double>(j.value("loss", json::object()), "l2", 0.1);
  {
    const json i = j.value("inner", json::object());
    cfg.inner.tol = get_or<double>(i, "tol", 1e-8);
    cfg.inner.max_iters = get_or<int>(i, "max_iters", 2000);
  }

  const json s = j.value("strategies", json::object());
  cfg.local_enabled = get_or<bool>(s.value("local", json::object()), "enabled", true);
  cfg.global_enabled = get_or<bool>(s.value("global", json::object()), "enabled", true);

  {
    const json n = s.value("netlasso", json::object());
    cfg.netlasso.enabled = get_or<bool>(n, "enabled", true);
    cfg.netlasso.opts.rho = get_or<double>(n, "rho", 1.0);
    cfg.netlasso.opts.eps_abs = get_or<double>(n, "eps_abs", 1e-4);
    cfg.netlasso.opts.eps_rel = get_or<double>(n, "eps_rel", 1e-3);
    cfg.netlasso.opts.max_iters = get_or<int>(n, "max_iters", 300);
    cfg.netlasso.lambdas =
        get_or<std::vector<double>>(n, "lambdas", std::vector<double>{0.0});
    cfg.netlasso.cluster_tol = get_or<double>(n, "cluster_tol", 0.05);
    cfg.netlasso.validation_fraction = get_or<double>(n, "validation_fraction", 0.25);
    if (cfg.netlasso.enabled) {
      if (cfg.netlasso.lambdas.empty())
        throw std::invalid_argument("config: netlasso.lambdas must be non-empty");
      for (std::size_t i = 1; i < cfg.netlasso.lambdas.size(); ++i)
        if (cfg.netlasso.lambdas[i] <= cfg.netlasso.lambdas[i - 1])
          throw std::invalid_argument(
              "config: netlasso.lambdas must be strictly increasing");
      if (!(cfg.netlasso.validation_fraction > 0.0 &&
            cfg.netlasso.validation_fraction < 1.0))
        throw std::invalid_argument(
            "config: netlasso.validation_fraction must be in (0,1)");
    }
  }

  {
    const json m = s.value("mocha", json::object());
    cfg.mocha.enabled = get_or<bool>(m, "enabled", true);
    cfg.mocha.opts.lambda1 = get_or<double>(m, "lambda1", 0.1);
    cfg.mocha.opts.local_passes = get_or<int>(m, "local_passes", 1);
    if (m.contains("sigma_prime") && !m.at("sigma_prime").is_null())
      cfg.mocha.opts.sigma_prime = m.at("sigma_prime").get<double>();
    cfg.mocha.opts.max_rounds = get_or<int>(m, "max_rounds", 300);
    cfg.mocha.opts.gap_tol = get_or<double>(m, "gap_tol", 1e-3);
    const std::string mode = get_or<std::string>(m, "omega_mode", "static-laplacian");
    if (mode == "static-laplacian")
      cfg.mocha.opts.omega_mode = mocha::OmegaMode::static_laplacian;
    else if (mode == "dynamic")
      cfg.mocha.opts.omega_mode = mocha::OmegaMode::dynamic;
    else
      throw std::invalid_argument(
          "config: mocha.omega_mode must be static-laplacian or dynamic");
    cfg.mocha.opts.omega_eps = get_or<double>(m, "omega_eps", mocha::kOmegaEpsFloor);
    if (cfg.mocha.opts.omega_eps < mocha::kOmegaEpsFloor)
      throw std::invalid_argument("config: mocha.omega_eps below the PD floor");
  }

  cfg.eval_every = get_or<int>(j, "eval_every", 1);
  if (cfg.eval_every < 1)
    throw std::invalid_argument("config: eval_every must be >= 1");
  cfg.accuracy_targets =
      get_or<std::vector<double>>(j, "accuracy_targets", std::vector<double>{});
  cfg.exec = parse_exec(j.value("exec", json()));

  cfg.netlasso.opts.inner = cfg.inner;
  cfg.netlasso.opts.exec = cfg.exec;
  cfg.mocha.opts.exec = cfg.exec;
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  json j = json::parse(in);
  return parse_config(j);
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["spec_version"] = cfg.spec_version;
  j["seed"] = cfg.seed;

  json t;
  if (cfg.topology.source == TopologyConfig::Source::file) {
    t["source"] = "file";
    t["path"] = cfg.topology.path;
  } else {
    t["source"] = cfg.topology.source == TopologyConfig::Source::random_sites
                      ? "random"
                      : "clustered";
    t["n_sites"] = cfg.topology.n_sites;
    t["k"] = cfg.topology.k;
    t["extent"] = cfg.topology.extent;
    t["n_blobs"] = cfg.topology.n_blobs;
    t["spread"] = cfg.topology.spread;
  }
  j["topology"] = t;

  json d;
  d["split_ratio"] = cfg.data.split_ratio;
  d["flip_rate"] = cfg.data.flip_rate;
  d["normalize"] = cfg.data.normalize;
  if (cfg.data.source == DataConfig::Source::synth) {
    d["source"] = "synth";
    d["synth"] = {{"dim", cfg.data.synth.dim},
                  {"n_clusters", cfg.data.synth.n_clusters},
                  {"samples_per_node",
                   std::vector<int>{cfg.data.synth.samples_per_node.first,
                                    cfg.data.synth.samples_per_node.second}},
                  {"margin_noise", cfg.data.synth.margin_noise},
                  {"flip_rate", cfg.data.synth.flip_rate}};
  } else {
    d["source"] = "csv";
    json sch;
    sch["feature_columns"] = cfg.data.csv.schema.feature_columns;
    sch["label_column"] = cfg.data.csv.schema.label_column;
    sch["positive_values"] = std::vector<std::string>(
        cfg.data.csv.schema.positive_values.begin(),
        cfg.data.csv.schema.positive_values.end());
    sch["negative_values"] = std::vector<std::string>(
        cfg.data.csv.schema.negative_values.begin(),
        cfg.data.csv.schema.negative_values.end());
    sch["categorical_columns"] = cfg.data.csv.schema.categorical_columns;
    d["csv"] = {{"path", cfg.data.csv.path},
                {"size_range", std::vector<int>{cfg.data.csv.size_range.first,
                                                cfg.data.csv.size_range.second}},
                {"schema", sch}};
  }
  j["data"] = d;

  j["loss"] = {{"l2", cfg.loss.l2}};
  j["inner"] = {{"tol", cfg.inner.tol}, {"max_iters", cfg.inner.max_iters}};

  json strategies;
  strategies["local"] = {{"enabled", cfg.local_enabled}};
  strategies["global"] = {{"enabled", cfg.global_enabled}};
  strategies["netlasso"] = {{"enabled", cfg.netlasso.enabled},
                            {"rho", cfg.netlasso.opts.rho},
                            {"eps_abs", cfg.netlasso.opts.eps_abs},
                            {"eps_rel", cfg.netlasso.opts.eps_rel},
                            {"max_iters", cfg.netlasso.opts.max_iters},
                            {"lambdas", cfg.netlasso.lambdas},
                            {"cluster_tol", cfg.netlasso.cluster_tol},
                            {"validation_fraction", cfg.netlasso.validation_fraction}};
  strategies["mocha"] = {
      {"enabled", cfg.mocha.enabled},
      {"lambda1", cfg.mocha.opts.lambda1},
      {"local_passes", cfg.mocha.opts.local_passes},
      {"sigma_prime", cfg.mocha.opts.sigma_prime
                          ? json(*cfg.mocha.opts.sigma_prime)
                          : json(nullptr)},
      {"max_rounds", cfg.mocha.opts.max_rounds},
      {"gap_tol", cfg.mocha.opts.gap_tol},
      {"omega_mode", cfg.mocha.opts.omega_mode == mocha::OmegaMode::static_laplacian
                         ? "static-laplacian"
                         : "dynamic"},
      {"omega_eps", cfg.mocha.opts.omega_eps}};
  j["strategies"] = strategies;

  j["eval_every"] = cfg.eval_every;
  j["accuracy_targets"] = cfg.accuracy_targets;
  j["exec"] = {{"mode", cfg.exec.mode == ExecMode::serial ? "serial" : "parallel"},
               {"threads", cfg.exec.threads}};
  return j;
}

const StrategyResult* Report::find(const std::string& name) const {
  for (const auto& s : strategies)
    if (s.name == name) return &s;
  return nullptr;
}

std::optional<int> rounds_to_accuracy(const ConvergenceTrace& trace, double target) {
  if (trace.points.empty())
    throw std::invalid_argument("rounds_to_accuracy: empty trace");
  if (!(target > 0.0 && target <= 1.0))
    throw std::invalid_argument("rounds_to_accuracy: target must be in (0, 1]");
  bool sampled = false;
  for (const auto& p : trace.points) {
    if (std::isnan(p.accuracy)) continue;
    sampled = true;
    if (p.accuracy >= target) return p.rounds;
  }
  if (!sampled)
    throw std::invalid_argument("rounds_to_accuracy: trace has no accuracy samples");
  return std::nullopt;
}

namespace {

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start)
        .count();
  }
};

std::vector<double> per_node_accuracy(const std::vector<LinearModel>& models,
                                      const data::ShardSet& shards) {
  std::vector<double> acc(shards.shards.size());
  for (std::size_t t = 0; t < shards.shards.size(); ++t)
    acc[t] = accuracy(models[t], shards.shards[t].test);
  return acc;
}

double macro(const std::vector<double>& acc) {
  return std::accumulate(acc.begin(), acc.end(), 0.0) /
         static_cast<double>(acc.size());
}

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json trace_to_json(const ConvergenceTrace& trace) {
  json arr = json::array();
  for (const auto& p : trace.points) {
    json row;
    row["iter"] = p.iter;
    if (!std::isnan(p.r_primal)) row["r_p"] = p.r_primal;
    if (!std::isnan(p.r_dual)) row["r_s"] = p.r_dual;
    if (!std::isnan(p.gap)) row["gap"] = p.gap;
    if (!std::isnan(p.objective)) row["objective"] = p.objective;
    if (!std::isnan(p.accuracy)) row["accuracy"] = p.accuracy;
    row["rounds"] = p.rounds;
    arr.push_back(row);
  }
  return arr;
}

}  // namespace

Report run_experiment(const ExperimentConfig& cfg, const std::set<std::string>& only) {
  for (const auto& name : only)
    if (name != "local" && name != "global" && name != "netlasso" && name != "mocha")
      fail("config", "unknown strategy '" + name + "'");
  auto wanted = [&](const std::string& name, bool enabled) {
    return enabled && (only.empty() || only.count(name));
  };

  Report report;
  report.config = cfg;
  Timer total;

  // --- topology ---------------------------------------------------------
  MecGraph graph;
  try {
    if (cfg.topology.source == TopologyConfig::Source::random_sites) {
      auto sites = random_sites(cfg.topology.n_sites,
                                data::derive_seed(cfg.seed, 11), cfg.topology.extent);
      graph = build_knn_graph(sites, cfg.topology.k);
    } else if (cfg.topology.source == TopologyConfig::Source::clustered_sites) {
      auto sites = clustered_sites(cfg.topology.n_sites, cfg.topology.n_blobs,
                                   data::derive_seed(cfg.seed, 11),
                                   cfg.topology.extent, cfg.topology.spread);
      graph = build_knn_graph(sites, cfg.topology.k);
    } else {
      graph = read_graph(cfg.topology.path).graph;
    }
    auto violations = validate_graph(graph);
    if (!violations.empty()) throw std::invalid_argument(violations.front());
  } catch (const std::exception& e) {
    fail("topology", e.what());
  }
  report.n_nodes = graph.n_nodes;
  report.n_edges = static_cast<int>(graph.edges.size());

  // --- data --------------------------------------------------------------
  data::ShardSet shards;
  try {
    Timer t;
    if (cfg.data.source == DataConfig::Source::synth) {
      data::SynthConfig sc = cfg.data.synth;
      sc.n_nodes = graph.n_nodes;
      sc.seed = data::derive_seed(cfg.seed, 22);
      data::SynthData synth = data::synth_clustered(sc);
      shards = std::move(synth.shards);
      report.ground_truth_clusters = std::move(synth.cluster_of);
    } else {
      Dataset pool = data::load_csv(cfg.data.csv.path, cfg.data.csv.schema);
      auto sharded = data::shard(pool, graph.n_nodes, cfg.data.csv.size_range,
                                 data::derive_seed(cfg.seed, 22));
      for (int t2 = 0; t2 < graph.n_nodes; ++t2) {
        Dataset noisy = data::flip_labels(sharded.shards[t2], cfg.data.flip_rate,
                                          data::derive_seed(cfg.seed, 1000 + t2));
        auto [train, test] = data::train_test_split(
            noisy, cfg.data.split_ratio, data::derive_seed(cfg.seed, 2000 + t2));
        shards.shards.push_back({t2, std::move(train), std::move(test)});
      }
      if (cfg.data.normalize != "none") {
        Dataset train_pool;
        for (const auto& ns : shards.shards)
          for (const auto& smp : ns.train.samples)
            train_pool.add(smp.features, smp.label);
        const auto method = cfg.data.normalize == "minmax"
                                ? data::NormMethod::minmax
                                : data::NormMethod::zscore;
        data::NormParams params = data::fit_normalization(train_pool, method);
        for (auto& ns : shards.shards) {
          ns.train = data::apply_normalization(ns.train, params);
          ns.test = data::apply_normalization(ns.test, params);
        }
        shards.normalization = params;
      }
    }
    report.timing_ms["data"] = t.ms();
  } catch (const std::exception& e) {
    fail("data", e.what());
  }
  report.shards_checksum = hex64(data::checksum(shards));
  for (const auto& ns : shards.shards)
    report.shard_sizes.push_back({static_cast<int>(ns.train.size()),
                                  static_cast<int>(ns.test.size())});

  auto make_eval = [&](const data::ShardSet& sh) {
    return [&sh, every = cfg.eval_every](int round,
                                         const std::vector<LinearModel>& models) {
      if ((round - 1) % every != 0) return std::numeric_limits<double>::quiet_NaN();
      return macro(per_node_accuracy(models, sh));
    };
  };

  double local_macro = std::numeric_limits<double>::quiet_NaN();

  // --- local -------------------------------------------------------------
  if (wanted("local", cfg.local_enabled)) {
    try {
      Timer t;
      auto local = baselines::train_local(shards, cfg.loss, cfg.inner, cfg.exec);
      StrategyResult r;
      r.name = "local";
      r.per_node_accuracy = per_node_accuracy(local.models, shards);
      r.macro_accuracy = macro(r.per_node_accuracy);
      r.total_rounds = 0;
      r.converged = local.all_converged;
      local_macro = r.macro_accuracy;
      report.strategies.push_back(std::move(r));
      report.timing_ms["local"] = t.ms();
    } catch (const std::exception& e) {
      fail("strategy:local", e.what());
    }
  }

  // --- global ------------------------------------------------------------
  if (wanted("global", cfg.global_enabled)) {
    try {
      Timer t;
      auto global = baselines::train_global(shards, cfg.loss, cfg.inner);
      StrategyResult r;
      r.name = "global";
      r.per_node_accuracy.reserve(shards.shards.size());
      for (const auto& ns : shards.shards)
        r.per_node_accuracy.push_back(accuracy(global.model, ns.test));
      r.macro_accuracy = macro(r.per_node_accuracy);
      r.total_rounds = 0;
      r.converged = global.converged;
      report.strategies.push_back(std::move(r));
      report.timing_ms["global"] = t.ms();
    } catch (const std::exception& e) {
      fail("strategy:global", e.what());
    }
  }

  // --- network lasso -----------------------------------------------------
  if (wanted("netlasso", cfg.netlasso.enabled)) {
    try {
      Timer t;
      double selected = cfg.netlasso.lambdas.front();
      if (cfg.netlasso.lambdas.size() > 1) {
        // carve a per-node validation set out of train for lambda selection
        data::ShardSet fit_shards;
        for (const auto& ns : shards.shards) {
          auto [fit, val] = data::train_test_split(
              ns.train, 1.0 - cfg.netlasso.validation_fraction,
              data::derive_seed(cfg.seed, 3000 + ns.node_id));
          fit_shards.shards.push_back({ns.node_id, std::move(fit), std::move(val)});
        }
        auto path = netlasso::regularization_path(graph, fit_shards, cfg.loss,
                                                  cfg.netlasso.lambdas,
                                                  cfg.netlasso.opts);
        double best = -1.0;
        for (const auto& entry : path) {
          PathPoint pp;
          pp.lambda = entry.lambda;
          pp.rounds = entry.rounds;
          pp.cumulative_rounds = entry.cumulative_rounds;
          pp.validation_accuracy = macro(per_node_accuracy(entry.models, fit_shards));
          pp.converged = entry.converged;
          if (pp.validation_accuracy > best) {
            best = pp.validation_accuracy;
            selected = entry.lambda;
          }
          report.path.push_back(pp);
        }
      }
      report.selected_lambda = selected;

      // cold re-run at the selected lambda on the full train shards; this is
      // the trace the communication comparison reads
      netlasso::AdmmOpts opts = cfg.netlasso.opts;
      opts.lambda = selected;
      auto final_run =
          netlasso::solve(graph, shards, cfg.loss, opts, nullptr, make_eval(shards));

      StrategyResult r;
      r.name = "netlasso";
      r.per_node_accuracy = per_node_accuracy(final_run.models, shards);
      r.macro_accuracy = macro(r.per_node_accuracy);
      r.total_rounds = static_cast<long>(final_run.trace.points.size());
      r.converged = final_run.converged;
      r.trace = std::move(final_run.trace);
      report.strategies.push_back(std::move(r));
      report.clusters =
          netlasso::extract_clusters(final_run.models, graph, cfg.netlasso.cluster_tol);
      report.timing_ms["netlasso"] = t.ms();
    } catch (const std::exception& e) {
      fail("strategy:netlasso", e.what());
    }
  }

  // --- mocha ---------------------------------------------------------------
  if (wanted("mocha", cfg.mocha.enabled)) {
    try {
      Timer t;
      auto run = mocha::solve(graph, shards, cfg.mocha.opts, make_eval(shards));
      StrategyResult r;
      r.name = "mocha";
      r.per_node_accuracy = per_node_accuracy(run.models, shards);
      r.macro_accuracy = macro(r.per_node_accuracy);
      r.total_rounds = static_cast<long>(run.trace.points.size());
      r.converged = run.converged;
      r.trace = std::move(run.trace);
      report.strategies.push_back(std::move(r));
      report.timing_ms["mocha"] = t.ms();
    } catch (const std::exception& e) {
      fail("strategy:mocha", e.what());
    }
  }

  // --- rounds-to-target table ---------------------------------------------
  try {
    std::vector<double> targets = cfg.accuracy_targets;
    if (!std::isnan(local_macro))
      targets.push_back(std::min(1.0, local_macro + 0.02));
    for (const auto& s : report.strategies) {
      if (s.trace.points.empty()) continue;
      for (double target : targets)
        report.rounds_table.push_back(
            {s.name, target, rounds_to_accuracy(s.trace, target)});
    }
  } catch (const std::exception& e) {
    fail("report", e.what());
  }

  report.timing_ms["total"] = total.ms();
  return report;
}

nlohmann::json report_to_json(const Report& r) {
  json j;
  j["spec_version"] = kConfigVersion;
  j["config"] = config_to_json(r.config);
  j["seed"] = r.config.seed;
  j["graph"] = {{"n_nodes", r.n_nodes}, {"n_edges", r.n_edges}};

  json sizes = json::array();
  for (std::size_t t = 0; t < r.shard_sizes.size(); ++t)
    sizes.push_back({{"node", t},
                     {"train", r.shard_sizes[t].first},
                     {"test", r.shard_sizes[t].second}});
  j["shards"] = {{"checksum", r.shards_checksum}, {"sizes", sizes}};

  json strategies;
  for (const auto& s : r.strategies) {
    json sj;
    sj["macro_accuracy"] = s.macro_accuracy;
    sj["per_node_accuracy"] = s.per_node_accuracy;
    sj["total_rounds"] = s.total_rounds;
    sj["converged"] = s.converged;
    if (!s.trace.points.empty()) sj["trace"] = trace_to_json(s.trace);
    if (s.name == "netlasso") {
      if (r.selected_lambda) sj["selected_lambda"] = *r.selected_lambda;
      if (!r.path.empty()) {
        json path = json::array();
        for (const auto& p : r.path)
          path.push_back({{"lambda", p.lambda},
                          {"rounds", p.rounds},
                          {"cumulative_rounds", p.cumulative_rounds},
                          {"validation_accuracy", p.validation_accuracy},
                          {"converged", p.converged}});
        sj["path"] = path;
      }
      if (!r.clusters.empty()) sj["clusters"] = r.clusters;
    }
    strategies[s.name] = sj;
  }
  j["strategies"] = strategies;

  json rounds = json::array();
  for (const auto& row : r.rounds_table)
    rounds.push_back({{"strategy", row.strategy},
                      {"target", row.target},
                      {"rounds", row.rounds ? json(*row.rounds) : json(nullptr)}});
  j["rounds_to_target"] = rounds;

  if (!r.ground_truth_clusters.empty())
    j["ground_truth_clusters"] = r.ground_truth_clusters;

  json timing;
  for (const auto& [k, v] : r.timing_ms) timing[k] = v;
  j["timing"] = timing;
  return j;
}

std::vector<std::string> emit_report(const Report& r, const std::string& out_dir,
                                     const std::set<std::string>& formats) {
  for (const auto& f : formats)
    if (f != "csv" && f != "json")
      throw std::invalid_argument("emit_report: unknown format '" + f + "'");
  fs::create_directories(out_dir);

  std::vector<std::string> written;
  auto open = [&](const std::string& name) {
    const std::string path = (fs::path(out_dir) / name).string();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("emit_report: cannot open " + path);
    written.push_back(path);
    return out;
  };

  try {
    if (formats.count("csv")) {
      {
        auto out = open("summary.csv");
        out << "strategy,macro_accuracy,total_rounds\n";
        for (const auto& s : r.strategies)
          out << s.name << ',' << csv::format_double(s.macro_accuracy) << ','
              << s.total_rounds << '\n';
      }
      {
        auto out = open("accuracy_per_node.csv");
        out << "strategy,node_id,accuracy\n";
        for (const auto& s : r.strategies)
          for (std::size_t t = 0; t < s.per_node_accuracy.size(); ++t)
            out << s.name << ',' << t << ','
                << csv::format_double(s.per_node_accuracy[t]) << '\n';
      }
      for (const auto& s : r.strategies) {
        if (s.trace.points.empty()) continue;
        auto out = open("trace_" + s.name + ".csv");
        out << s.trace.to_csv();
      }
      if (!r.clusters.empty()) {
        auto out = open("clusters.csv");
        out << "node_id,cluster_id\n";
        for (std::size_t t = 0; t < r.clusters.size(); ++t)
          out << t << ',' << r.clusters[t] << '\n';
      }
    }
    if (formats.count("json")) {
      {
        auto out = open("report.json");
        out << report_to_json(r).dump(2) << '\n';
      }
      {
        auto out = open("config_echo.json");
        out << config_to_json(r.config).dump(2) << '\n';
      }
    }
  } catch (...) {
    for (const auto& p : written) {
      std::error_code ec;
      fs::remove(p, ec);
    }
    throw;
  }
  return written;
}

}  // namespace mecmtl::harness
