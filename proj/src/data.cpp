#include "mecmtl/data.hpp"

#include "mecmtl/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace mecmtl::data {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

bool parse_number(const std::string& raw, double& out) {
  std::size_t b = raw.find_first_not_of(" \t");
  if (b == std::string::npos) return false;
  std::size_t e = raw.find_last_not_of(" \t") + 1;
  const char* first = raw.data() + b;
  const char* last = raw.data() + e;
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last && std::isfinite(out);
}

int resolve_column(const std::vector<std::string>& header, const std::string& spec) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == spec) return static_cast<int>(i);
  if (!spec.empty() && std::all_of(spec.begin(), spec.end(),
                                   [](char c) { return c >= '0' && c <= '9'; })) {
    const int idx = std::stoi(spec);
    if (idx >= 0 && idx < static_cast<int>(header.size())) return idx;
  }
  throw std::invalid_argument("load_csv: column '" + spec + "' not found");
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  if (schema.feature_columns.empty())
    throw std::invalid_argument("load_csv: no feature columns configured");
  if (schema.positive_values.empty())
    throw std::invalid_argument("load_csv: positive_values must be non-empty");

  const csv::Table table = csv::read_file(path);
  const int label_col = resolve_column(table.header, schema.label_column);

  struct Col {
    std::string name;
    int index;
    bool categorical;
    std::vector<std::string> categories;  // lexicographic, categorical only
  };
  std::vector<Col> cols;
  for (const auto& spec : schema.feature_columns) {
    const int idx = resolve_column(table.header, spec);
    if (idx == label_col)
      throw std::invalid_argument("load_csv: label column '" + spec +
                                  "' listed among features");
    const bool cat = std::find(schema.categorical_columns.begin(),
                               schema.categorical_columns.end(),
                               spec) != schema.categorical_columns.end();
    cols.push_back({spec, idx, cat, {}});
  }

  for (std::size_t r = 0; r < table.rows.size(); ++r)
    if (table.rows[r].size() != table.header.size())
      throw std::invalid_argument("load_csv: row " + std::to_string(r + 1) +
                                  " has " + std::to_string(table.rows[r].size()) +
                                  " cells, expected " +
                                  std::to_string(table.header.size()));

  // first pass: category vocabularies in lexicographic order
  for (auto& c : cols) {
    if (!c.categorical) continue;
    std::set<std::string> values;
    for (const auto& row : table.rows) values.insert(row[c.index]);
    c.categories.assign(values.begin(), values.end());
  }

  Eigen::Index dim = 0;
  for (const auto& c : cols)
    dim += c.categorical ? static_cast<Eigen::Index>(c.categories.size()) : 1;

  Dataset out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    Vector x = Vector::Zero(dim);
    Eigen::Index at = 0;
    for (const auto& c : cols) {
      if (c.categorical) {
        auto it = std::lower_bound(c.categories.begin(), c.categories.end(),
                                   row[c.index]);
        if (it != c.categories.end() && *it == row[c.index])
          x(at + (it - c.categories.begin())) = 1.0;
        // unknown categories encode as all zeros
        at += static_cast<Eigen::Index>(c.categories.size());
      } else {
        double v = 0.0;
        if (!parse_number(row[c.index], v))
          throw std::invalid_argument("load_csv: row " + std::to_string(r + 1) +
                                      ", column '" + c.name + "': cannot parse '" +
                                      row[c.index] + "' as a number");
        x(at++) = v;
      }
    }
    const std::string& raw_label = row[label_col];
    int label;
    if (schema.positive_values.count(raw_label)) {
      label = 1;
    } else if (schema.negative_values.empty() ||
               schema.negative_values.count(raw_label)) {
      label = -1;
    } else {
      throw std::invalid_argument("load_csv: row " + std::to_string(r + 1) +
                                  ", column '" + schema.label_column +
                                  "': unknown label value '" + raw_label + "'");
    }
    out.add(std::move(x), label);
  }
  return out;
}

NormParams fit_normalization(const Dataset& data, NormMethod method) {
  if (data.empty()) throw std::invalid_argument("fit_normalization: empty dataset");
  const Eigen::Index d = data.dim;
  const double n = static_cast<double>(data.size());
  NormParams p;
  p.method = method;
  if (method == NormMethod::minmax) {
    p.p1 = data.samples.front().features;
    p.p2 = data.samples.front().features;
    for (const auto& s : data.samples) {
      p.p1 = p.p1.cwiseMin(s.features);
      p.p2 = p.p2.cwiseMax(s.features);
    }
  } else {
    Vector mean = Vector::Zero(d);
    for (const auto& s : data.samples) mean += s.features;
    mean /= n;
    Vector var = Vector::Zero(d);
    for (const auto& s : data.samples) var += (s.features - mean).cwiseAbs2();
    var /= n;
    p.p1 = mean;
    p.p2 = var.cwiseSqrt();
  }
  return p;
}

Dataset apply_normalization(const Dataset& data, const NormParams& params) {
  Dataset out;
  for (const auto& s : data.samples) {
    if (s.features.size() != params.p1.size())
      throw std::invalid_argument("apply_normalization: dimension mismatch");
    Vector x(s.features.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      if (params.method == NormMethod::minmax) {
        const double span = params.p2(j) - params.p1(j);
        x(j) = span > 0.0 ? (s.features(j) - params.p1(j)) / span : 0.0;
      } else {
        x(j) = params.p2(j) > 0.0 ? (s.features(j) - params.p1(j)) / params.p2(j) : 0.0;
      }
    }
    out.add(std::move(x), s.label);
  }
  return out;
}

std::pair<Dataset, NormParams> normalize(const Dataset& data, NormMethod method) {
  NormParams p = fit_normalization(data, method);
  return {apply_normalization(data, p), p};
}

ShardResult shard(const Dataset& data, int n_shards, std::pair<int, int> size_range,
                  std::uint64_t seed) {
  const auto [lo, hi] = size_range;
  if (lo < 1 || hi < lo) throw std::invalid_argument("shard: need hi >= lo >= 1");
  if (n_shards < 1) throw std::invalid_argument("shard: need n_shards >= 1");
  if (data.empty()) throw std::invalid_argument("shard: empty dataset");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> size_dist(lo, hi);
  std::vector<int> sizes(n_shards);
  long total = 0;
  for (auto& s : sizes) {
    s = size_dist(rng);
    total += s;
  }

  const int n = static_cast<int>(data.size());
  ShardResult out;
  if (total <= n) {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    int at = 0;
    for (int s = 0; s < n_shards; ++s) {
      Dataset d;
      for (int i = 0; i < sizes[s]; ++i) {
        const auto& smp = data.samples[perm[at++]];
        d.add(smp.features, smp.label);
      }
      out.shards.push_back(std::move(d));
    }
  } else {
    out.with_replacement = true;
    std::uniform_int_distribution<int> pick(0, n - 1);
    for (int s = 0; s < n_shards; ++s) {
      Dataset d;
      for (int i = 0; i < sizes[s]; ++i) {
        const auto& smp = data.samples[pick(rng)];
        d.add(smp.features, smp.label);
      }
      out.shards.push_back(std::move(d));
    }
  }
  return out;
}

Dataset flip_labels(const Dataset& data, double rate, std::uint64_t seed) {
  if (rate < 0.0 || rate >= 1.0)
    throw std::invalid_argument("flip_labels: rate must be in [0, 1)");
  const int n = static_cast<int>(data.size());
  const int m = static_cast<int>(std::lround(rate * n));
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  // partial Fisher-Yates: first m entries are the flip positions
  for (int i = 0; i < m; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  std::vector<bool> flip(n, false);
  for (int i = 0; i < m; ++i) flip[idx[i]] = true;

  Dataset out;
  for (int i = 0; i < n; ++i)
    out.add(data.samples[i].features, flip[i] ? -data.samples[i].label
                                              : data.samples[i].label);
  return out;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double ratio,
                                             std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0))
    throw std::invalid_argument("train_test_split: ratio must be in (0, 1)");
  const int n = static_cast<int>(data.size());
  if (n < 2) throw std::invalid_argument("train_test_split: need at least 2 samples");
  const int n_train = static_cast<int>(std::lround(ratio * n));
  if (n_train < 1 || n_train >= n)
    throw std::invalid_argument("train_test_split: degenerate split sizes");

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  Dataset train, test;
  for (int i = 0; i < n; ++i) {
    const auto& s = data.samples[perm[i]];
    (i < n_train ? train : test).add(s.features, s.label);
  }
  return {std::move(train), std::move(test)};
}

Eigen::Index ShardSet::dim() const {
  return shards.empty() ? 0 : shards.front().train.dim;
}

SynthData synth_clustered(const SynthConfig& cfg) {
  if (cfg.dim < 1) throw std::invalid_argument("synth_clustered: dim must be >= 1");
  if (cfg.n_clusters < 1 || cfg.n_clusters > cfg.n_nodes)
    throw std::invalid_argument("synth_clustered: need 1 <= n_clusters <= n_nodes");
  if (cfg.samples_per_node.first < 2 ||
      cfg.samples_per_node.second < cfg.samples_per_node.first)
    throw std::invalid_argument("synth_clustered: bad samples_per_node range");
  if (cfg.margin_noise < 0.0)
    throw std::invalid_argument("synth_clustered: negative margin_noise");

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SynthData out;
  for (int c = 0; c < cfg.n_clusters; ++c) {
    Vector w(cfg.dim);
    do {
      for (Eigen::Index j = 0; j < w.size(); ++j) w(j) = gauss(rng);
    } while (w.norm() == 0.0);
    w.normalize();
    out.true_models.push_back({w, 0.0});
  }

  std::uniform_int_distribution<int> size_dist(cfg.samples_per_node.first,
                                               cfg.samples_per_node.second);
  for (int node = 0; node < cfg.n_nodes; ++node) {
    const int cluster = node % cfg.n_clusters;
    const Vector& w = out.true_models[cluster].weights;
    const int n = size_dist(rng);
    Dataset d;
    for (int i = 0; i < n; ++i) {
      Vector x(cfg.dim);
      for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = gauss(rng);
      const double score = w.dot(x) + cfg.margin_noise * gauss(rng);
      d.add(std::move(x), score >= 0.0 ? 1 : -1);
    }
    d = flip_labels(d, cfg.flip_rate, derive_seed(cfg.seed, 1000 + node));
    auto [train, test] =
        train_test_split(d, cfg.split_ratio, derive_seed(cfg.seed, 2000 + node));
    out.shards.shards.push_back({node, std::move(train), std::move(test)});
    out.cluster_of.push_back(cluster);
  }
  return out;
}

namespace {

void fnv_mix(std::uint64_t& h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xFFULL;
    h *= 0x100000001B3ULL;
  }
}

void fnv_mix_double(std::uint64_t& h, double d) {
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(d));
  std::memcpy(&bits, &d, sizeof(bits));
  fnv_mix(h, bits);
}

void fnv_mix_dataset(std::uint64_t& h, const Dataset& d) {
  fnv_mix(h, d.size());
  for (const auto& s : d.samples) {
    fnv_mix(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(s.label)));
    for (Eigen::Index j = 0; j < s.features.size(); ++j)
      fnv_mix_double(h, s.features(j));
  }
}

}  // namespace

std::uint64_t checksum(const ShardSet& shards) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  fnv_mix(h, shards.shards.size());
  for (const auto& ns : shards.shards) {
    fnv_mix(h, static_cast<std::uint64_t>(ns.node_id));
    fnv_mix_dataset(h, ns.train);
    fnv_mix_dataset(h, ns.test);
  }
  return h;
}

namespace {

json norm_to_json(const NormParams& p) {
  json j;
  j["method"] = p.method == NormMethod::minmax ? "minmax" : "zscore";
  j["p1"] = std::vector<double>(p.p1.begin(), p.p1.end());
  j["p2"] = std::vector<double>(p.p2.begin(), p.p2.end());
  return j;
}

NormParams norm_from_json(const json& j) {
  NormParams p;
  p.method = j.at("method") == "minmax" ? NormMethod::minmax : NormMethod::zscore;
  const auto v1 = j.at("p1").get<std::vector<double>>();
  const auto v2 = j.at("p2").get<std::vector<double>>();
  p.p1 = Eigen::Map<const Vector>(v1.data(), static_cast<Eigen::Index>(v1.size()));
  p.p2 = Eigen::Map<const Vector>(v2.data(), static_cast<Eigen::Index>(v2.size()));
  return p;
}

void write_shard_csv(const fs::path& path, const NodeShard& ns) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_shardset: cannot open " + path.string());
  const Eigen::Index d = ns.train.dim;
  out << "split,label";
  for (Eigen::Index j = 0; j < d; ++j) out << ",f" << j;
  out << '\n';
  auto dump = [&](const Dataset& ds, const char* tag) {
    for (const auto& s : ds.samples) {
      out << tag << ',' << s.label;
      for (Eigen::Index j = 0; j < d; ++j)
        out << ',' << csv::format_double(s.features(j));
      out << '\n';
    }
  };
  dump(ns.train, "train");
  dump(ns.test, "test");
}

}  // namespace

void save_shardset(const ShardSet& shards, const std::string& dir,
                   const json& extra_meta) {
  fs::create_directories(dir);
  json manifest;
  manifest["nodes"] = json::array();
  manifest["sizes"] = json::array();
  for (const auto& ns : shards.shards) {
    manifest["nodes"].push_back(ns.node_id);
    manifest["sizes"].push_back({{"node", ns.node_id},
                                 {"train", ns.train.size()},
                                 {"test", ns.test.size()}});
    write_shard_csv(fs::path(dir) / ("node_" + std::to_string(ns.node_id) + ".csv"),
                    ns);
  }
  manifest["dim"] = shards.dim();
  manifest["normalization"] =
      shards.normalization ? norm_to_json(*shards.normalization) : json(nullptr);
  manifest["meta"] = extra_meta;
  std::ofstream out(fs::path(dir) / "manifest.json");
  if (!out) throw std::runtime_error("save_shardset: cannot write manifest");
  out << manifest.dump(2) << '\n';
}

ShardSet load_shardset(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw std::runtime_error("load_shardset: missing manifest in " + dir);
  json manifest = json::parse(in);

  ShardSet out;
  if (!manifest.at("normalization").is_null())
    out.normalization = norm_from_json(manifest["normalization"]);
  for (const auto& id : manifest.at("nodes")) {
    const int node = id.get<int>();
    const csv::Table t =
        csv::read_file((fs::path(dir) / ("node_" + std::to_string(node) + ".csv")).string());
    NodeShard ns;
    ns.node_id = node;
    const Eigen::Index d = static_cast<Eigen::Index>(t.header.size()) - 2;
    for (const auto& row : t.rows) {
      Vector x(d);
      for (Eigen::Index j = 0; j < d; ++j) {
        double v = 0.0;
        if (!parse_number(row[2 + j], v))
          throw std::runtime_error("load_shardset: bad cell in node " +
                                   std::to_string(node));
        x(j) = v;
      }
      const int label = std::stoi(row[1]);
      (row[0] == "train" ? ns.train : ns.test).add(std::move(x), label);
    }
    out.shards.push_back(std::move(ns));
  }
  return out;
}

}  // namespace mecmtl::data
