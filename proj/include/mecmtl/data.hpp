#pragma once

#include "mecmtl/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace mecmtl::data {

/// Column specs accept header names or zero-based indices given as digits.
/// Columns listed in categorical_columns are one-hot encoded (categories in
/// lexicographic order); every other feature column must parse as a number.
/// If negative_values is empty, any label not in positive_values maps to -1.
struct CsvSchema {
  std::vector<std::string> feature_columns;
  std::string label_column;
  std::set<std::string> positive_values;
  std::set<std::string> negative_values;
  std::vector<std::string> categorical_columns;
};

Dataset load_csv(const std::string& path, const CsvSchema& schema);

enum class NormMethod { minmax, zscore };

struct NormParams {
  NormMethod method = NormMethod::minmax;
  Vector p1;  // per-feature min (minmax) or mean (zscore)
  Vector p2;  // per-feature max (minmax) or std (zscore)
};

NormParams fit_normalization(const Dataset& data, NormMethod method);
Dataset apply_normalization(const Dataset& data, const NormParams& params);
std::pair<Dataset, NormParams> normalize(const Dataset& data, NormMethod method);

struct ShardResult {
  std::vector<Dataset> shards;
  bool with_replacement = false;
};

/// Shard sizes are drawn uniformly from [lo, hi]. Shards are disjoint when
/// the pool is large enough; otherwise every shard samples the full pool
/// with replacement and the result is flagged.
ShardResult shard(const Dataset& data, int n_shards, std::pair<int, int> size_range,
                  std::uint64_t seed);

/// Negates exactly round(rate*n) labels at positions drawn without
/// replacement. Same seed flips the same positions (involution).
Dataset flip_labels(const Dataset& data, double rate, std::uint64_t seed);

std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double ratio,
                                             std::uint64_t seed);

struct NodeShard {
  int node_id = 0;
  Dataset train;
  Dataset test;
};

struct ShardSet {
  std::vector<NodeShard> shards;
  std::optional<NormParams> normalization;

  Eigen::Index dim() const;
};

struct SynthConfig {
  int n_nodes = 20;
  int dim = 6;
  int n_clusters = 2;
  std::pair<int, int> samples_per_node = {30, 80};
  double margin_noise = 0.2;
  double flip_rate = 0.1;   // applied per node before the train/test split
  double split_ratio = 0.7;
  std::uint64_t seed = 0;
};

struct SynthData {
  ShardSet shards;
  std::vector<int> cluster_of;             // node -> ground-truth cluster
  std::vector<LinearModel> true_models;    // one per cluster, zero bias
};

/// Clustered linear tasks with known ground truth: unit-norm cluster weight
/// vectors, nodes assigned round-robin, x ~ N(0, I),
/// y = sign(w_c . x + margin_noise * eps), then label flips at flip_rate.
SynthData synth_clustered(const SynthConfig& cfg);

std::uint64_t checksum(const ShardSet& shards);

/// One CSV per node (node_<id>.csv with split,label,f0..) plus manifest.json
/// carrying node ids, sizes, normalization params and any extra metadata.
void save_shardset(const ShardSet& shards, const std::string& dir,
                   const nlohmann::json& extra_meta);
ShardSet load_shardset(const std::string& dir);

/// splitmix64 stream derivation for per-stage/per-node seeds.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace mecmtl::data
