#pragma once

#include "mecmtl/admm.hpp"
#include "mecmtl/baselines.hpp"
#include "mecmtl/data.hpp"
#include "mecmtl/mocha.hpp"
#include "mecmtl/topology.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace mecmtl::harness {

inline constexpr int kConfigVersion = 1;

struct TopologyConfig {
  enum class Source { random_sites, clustered_sites, file };
  Source source = Source::random_sites;
  int n_sites = 20;
  int k = 5;
  double extent = 100.0;
  int n_blobs = 2;      // clustered source only
  double spread = 8.0;  // clustered source only
  std::string path;     // graph file for Source::file
};

struct CsvDataConfig {
  std::string path;
  data::CsvSchema schema;
  std::pair<int, int> size_range = {200, 2000};
};

struct DataConfig {
  enum class Source { synth, csv };
  Source source = Source::synth;
  data::SynthConfig synth;   // n_nodes/seed filled from topology + global seed
  CsvDataConfig csv;
  double split_ratio = 0.7;
  double flip_rate = 0.1;
  std::string normalize = "none";  // none | minmax | zscore (csv path)
};

struct NetlassoConfig {
  bool enabled = true;
  netlasso::AdmmOpts opts;          // opts.lambda ignored; the grid drives it
  std::vector<double> lambdas = {0.0};
  double cluster_tol = 0.05;
  double validation_fraction = 0.25;  // train carve-out for lambda selection
};

struct MochaConfig {
  bool enabled = true;
  mocha::MochaOpts opts;
};

struct ExperimentConfig {
  int spec_version = kConfigVersion;
  std::uint64_t seed = 0;
  TopologyConfig topology;
  DataConfig data;
  LossConfig loss;
  InnerSolveOpts inner;
  bool local_enabled = true;
  bool global_enabled = true;
  NetlassoConfig netlasso;
  MochaConfig mocha;
  int eval_every = 1;
  std::vector<double> accuracy_targets;  // absolute macro-accuracy targets
  ExecPolicy exec;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

struct StrategyResult {
  std::string name;
  std::vector<double> per_node_accuracy;
  double macro_accuracy = 0.0;
  long total_rounds = 0;
  bool converged = true;
  ConvergenceTrace trace;  // empty for the one-shot baselines
};

struct RoundsToTarget {
  std::string strategy;
  double target = 0.0;
  std::optional<int> rounds;
};

struct PathPoint {
  double lambda = 0.0;
  int rounds = 0;
  long cumulative_rounds = 0;
  double validation_accuracy = 0.0;
  bool converged = false;
};

struct Report {
  ExperimentConfig config;
  int n_nodes = 0;
  int n_edges = 0;
  std::string shards_checksum;
  std::vector<std::pair<int, int>> shard_sizes;  // per node (train, test)
  std::vector<StrategyResult> strategies;        // run order: local, global, netlasso, mocha
  std::optional<double> selected_lambda;
  std::vector<PathPoint> path;
  std::vector<int> clusters;                     // node -> cluster at the selected lambda
  std::vector<RoundsToTarget> rounds_table;
  std::vector<int> ground_truth_clusters;        // synthetic data only
  std::map<std::string, double> timing_ms;       // excluded from determinism checks

  const StrategyResult* find(const std::string& name) const;
};

/// Report payload as deterministic JSON; wall-clock data sits under the
/// single top-level key "timing".
nlohmann::json report_to_json(const Report& r);

/// Builds the topology, prepares one ShardSet, runs every enabled strategy
/// on it, and evaluates per-node test accuracy (the global model is scored
/// on each node's test set, then macro-averaged). `only` restricts the
/// strategy set when non-empty.
Report run_experiment(const ExperimentConfig& cfg,
                      const std::set<std::string>& only = {});

/// First round whose sampled accuracy reaches `target`; nullopt if never.
/// Rejects traces that carry no accuracy samples.
std::optional<int> rounds_to_accuracy(const ConvergenceTrace& trace, double target);

/// Writes summary.csv, accuracy_per_node.csv, trace_<strategy>.csv,
/// clusters.csv (csv format) and report.json + config_echo.json (json
/// format). Removes everything it wrote if any write fails.
std::vector<std::string> emit_report(const Report& r, const std::string& out_dir,
                                     const std::set<std::string>& formats);

}  // namespace mecmtl::harness
