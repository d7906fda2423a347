#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mecmtl/data.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

using namespace mecmtl;
using namespace mecmtl::data;

namespace {

namespace fs = std::filesystem;

std::string write_temp(const std::string& name, const std::string& content) {
  const auto dir = fs::temp_directory_path() / "mecmtl_data_test";
  fs::create_directories(dir);
  const std::string path = (dir / name).string();
  std::ofstream out(path);
  out << content;
  return path;
}

std::multiset<std::pair<double, int>> sample_multiset(const Dataset& d) {
  std::multiset<std::pair<double, int>> out;
  for (const auto& s : d.samples) out.insert({s.features.sum(), s.label});
  return out;
}

}  // namespace

TEST_CASE("load_csv: label mapping and diagnostics") {
  const std::string path = write_temp("basic.csv",
                                      "f1,f2,verdict\n"
                                      "1.5,2,attack\n"
                                      "0.5,-1,normal\n");
  CsvSchema schema;
  schema.feature_columns = {"f1", "f2"};
  schema.label_column = "verdict";
  schema.positive_values = {"attack"};

  Dataset d = load_csv(path, schema);
  REQUIRE(d.size() == 2);
  CHECK(d.dim == 2);
  CHECK(d.samples[0].label == 1);
  CHECK(d.samples[1].label == -1);
  CHECK(d.samples[0].features(0) == doctest::Approx(1.5));

  CsvSchema missing = schema;
  missing.label_column = "nope";
  CHECK_THROWS_WITH_AS(load_csv(path, missing),
                       "load_csv: column 'nope' not found", std::invalid_argument);

  CsvSchema strict = schema;
  strict.negative_values = {"benign"};
  CHECK_THROWS_AS(load_csv(path, strict), std::invalid_argument);  // 'normal' unknown
}

TEST_CASE("load_csv: one-hot encoding widens the dimension") {
  const std::string path = write_temp("cat.csv",
                                      "proto,bytes,label\n"
                                      "tcp,10,bad\n"
                                      "udp,20,ok\n"
                                      "icmp,30,ok\n"
                                      "tcp,40,bad\n");
  CsvSchema schema;
  schema.feature_columns = {"proto", "bytes"};
  schema.label_column = "label";
  schema.positive_values = {"bad"};
  schema.categorical_columns = {"proto"};

  Dataset d = load_csv(path, schema);
  CHECK(d.dim == 4);  // 3 one-hot categories + 1 numeric
  // categories are ordered lexicographically: icmp, tcp, udp
  CHECK(d.samples[0].features(1) == doctest::Approx(1.0));  // tcp
  CHECK(d.samples[1].features(2) == doctest::Approx(1.0));  // udp
  CHECK(d.samples[2].features(0) == doctest::Approx(1.0));  // icmp
  CHECK(d.samples[0].features(3) == doctest::Approx(10.0));
}

TEST_CASE("load_csv: malformed numeric cell names row and column") {
  const std::string path = write_temp("bad.csv",
                                      "a,b,y\n"
                                      "1,2,pos\n"
                                      "1,oops,neg\n");
  CsvSchema schema;
  schema.feature_columns = {"a", "b"};
  schema.label_column = "y";
  schema.positive_values = {"pos"};
  try {
    load_csv(path, schema);
    FAIL("expected a parse error");
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    CHECK(what.find("row 2") != std::string::npos);
    CHECK(what.find("'b'") != std::string::npos);
    CHECK(what.find("oops") != std::string::npos);
  }
}

TEST_CASE("normalize: minmax and zscore") {
  Dataset d;
  d.add((Vector(2) << 0.0, 3.0).finished(), 1);
  d.add((Vector(2) << 5.0, 3.0).finished(), -1);
  d.add((Vector(2) << 10.0, 3.0).finished(), 1);
  // second column is constant: maps to zero under both methods

  auto [mm, mm_params] = normalize(d, NormMethod::minmax);
  CHECK(mm.samples[0].features(0) == doctest::Approx(0.0));
  CHECK(mm.samples[1].features(0) == doctest::Approx(0.5));
  CHECK(mm.samples[2].features(0) == doctest::Approx(1.0));
  for (const auto& s : mm.samples) CHECK(s.features(1) == 0.0);

  auto [zs, zs_params] = normalize(d, NormMethod::zscore);
  double mean = 0.0, var = 0.0;
  for (const auto& s : zs.samples) mean += s.features(0);
  mean /= 3.0;
  for (const auto& s : zs.samples)
    var += (s.features(0) - mean) * (s.features(0) - mean);
  var /= 3.0;
  CHECK(std::abs(mean) <= 1e-9);
  CHECK(std::abs(std::sqrt(var) - 1.0) <= 1e-9);
  for (const auto& s : zs.samples) CHECK(s.features(1) == 0.0);

  // params re-apply to unseen data without refitting
  Dataset test;
  test.add((Vector(2) << 20.0, 3.0).finished(), 1);
  Dataset applied = apply_normalization(test, mm_params);
  CHECK(applied.samples[0].features(0) == doctest::Approx(2.0));
  (void)zs_params;
}

TEST_CASE("shard: disjoint carve and replacement fallback") {
  auto rng = testutil::rng(21);
  Dataset pool = testutil::random_dataset(rng, 100, 2);

  auto res = shard(pool, 2, {10, 10}, 77);
  CHECK_FALSE(res.with_replacement);
  REQUIRE(res.shards.size() == 2);
  CHECK(res.shards[0].size() == 10);
  CHECK(res.shards[1].size() == 10);
  auto all = sample_multiset(res.shards[0]);
  for (auto& e : sample_multiset(res.shards[1])) all.insert(e);
  CHECK(all.size() == 20);
  // disjoint: every drawn sample exists in the pool at least as often
  auto pool_ms = sample_multiset(pool);
  for (const auto& e : all) CHECK(pool_ms.count(e) >= all.count(e));

  auto rerun = shard(pool, 2, {10, 10}, 77);
  CHECK(sample_multiset(rerun.shards[0]) == sample_multiset(res.shards[0]));
  CHECK(sample_multiset(rerun.shards[1]) == sample_multiset(res.shards[1]));

  auto over = shard(pool, 3, {60, 60}, 77);
  CHECK(over.with_replacement);
  for (const auto& s : over.shards) CHECK(s.size() == 60);
}

TEST_CASE("shard sizes follow the uniform draw") {
  auto rng = testutil::rng(22);
  Dataset pool = testutil::random_dataset(rng, 50, 1);
  double total = 0.0;
  const int draws = 1000;
  for (int rep = 0; rep < draws; ++rep) {
    auto res = shard(pool, 1, {200, 2000}, 9000 + rep);
    total += static_cast<double>(res.shards[0].size());
  }
  const double mean = total / draws;
  CHECK(mean >= 1100.0 * 0.95);
  CHECK(mean <= 1100.0 * 1.05);
}

TEST_CASE("flip_labels: exact count, determinism, involution") {
  auto rng = testutil::rng(23);
  Dataset d = testutil::random_dataset(rng, 10, 2);

  Dataset same = flip_labels(d, 0.0, 5);
  for (std::size_t i = 0; i < d.size(); ++i)
    CHECK(same.samples[i].label == d.samples[i].label);

  Dataset half = flip_labels(d, 0.5, 5);
  int flipped = 0;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (half.samples[i].label != d.samples[i].label) ++flipped;
  CHECK(flipped == 5);

  Dataset twice = flip_labels(half, 0.5, 5);
  for (std::size_t i = 0; i < d.size(); ++i)
    CHECK(twice.samples[i].label == d.samples[i].label);

  CHECK_THROWS_AS(flip_labels(d, 1.0, 5), std::invalid_argument);
}

TEST_CASE("train_test_split: sizes, content preservation, determinism") {
  auto rng = testutil::rng(24);
  Dataset d = testutil::random_dataset(rng, 10, 3);
  auto [train, test] = train_test_split(d, 0.7, 123);
  CHECK(train.size() == 7);
  CHECK(test.size() == 3);

  auto combined = sample_multiset(train);
  for (auto& e : sample_multiset(test)) combined.insert(e);
  CHECK(combined == sample_multiset(d));

  auto [train2, test2] = train_test_split(d, 0.7, 123);
  CHECK(sample_multiset(train2) == sample_multiset(train));
  CHECK(train2.samples[0].features == train.samples[0].features);

  Dataset tiny;
  tiny.add(Vector::Constant(1, 1.0), 1);
  CHECK_THROWS_AS(train_test_split(tiny, 0.7, 1), std::invalid_argument);
  CHECK_THROWS_AS(train_test_split(d, 0.0, 1), std::invalid_argument);
}

TEST_CASE("synth_clustered: ground truth labels its own training data") {
  SynthConfig cfg;
  cfg.n_nodes = 6;
  cfg.dim = 2;
  cfg.n_clusters = 2;
  cfg.samples_per_node = {20, 30};
  cfg.margin_noise = 0.0;
  cfg.flip_rate = 0.0;
  cfg.seed = 99;
  SynthData sd = synth_clustered(cfg);
  REQUIRE(sd.shards.shards.size() == 6);
  REQUIRE(sd.true_models.size() == 2);
  for (int t = 0; t < 6; ++t) {
    const auto& m = sd.true_models[sd.cluster_of[t]];
    CHECK(accuracy(m, sd.shards.shards[t].train) == doctest::Approx(1.0));
    CHECK(accuracy(m, sd.shards.shards[t].test) == doctest::Approx(1.0));
  }

  SynthConfig one = cfg;
  one.n_clusters = 1;
  SynthData sd1 = synth_clustered(one);
  for (int c : sd1.cluster_of) CHECK(c == 0);
}

TEST_CASE("synth_clustered: class balance stays moderate") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SynthConfig cfg;
    cfg.n_nodes = 4;
    cfg.dim = 3;
    cfg.n_clusters = 2;
    cfg.samples_per_node = {40, 60};
    cfg.margin_noise = 0.2;
    cfg.flip_rate = 0.1;
    cfg.seed = seed;
    SynthData sd = synth_clustered(cfg);
    for (const auto& ns : sd.shards.shards) {
      int pos = 0, n = 0;
      for (const auto& s : ns.train.samples) {
        pos += s.label == 1;
        ++n;
      }
      for (const auto& s : ns.test.samples) {
        pos += s.label == 1;
        ++n;
      }
      const double balance = static_cast<double>(pos) / n;
      CHECK(balance >= 0.3);
      CHECK(balance <= 0.7);
    }
  }
}

TEST_CASE("shardset persists through CSV plus manifest") {
  SynthConfig cfg;
  cfg.n_nodes = 3;
  cfg.dim = 2;
  cfg.n_clusters = 2;
  cfg.samples_per_node = {8, 12};
  cfg.seed = 5;
  SynthData sd = synth_clustered(cfg);

  const auto dir =
      (fs::temp_directory_path() / "mecmtl_data_test" / "shardset").string();
  save_shardset(sd.shards, dir, {{"purpose", "unit-test"}});
  ShardSet back = load_shardset(dir);
  CHECK(checksum(back) == checksum(sd.shards));

  // manifest carries ids, sizes and metadata
  std::ifstream in(fs::path(dir) / "manifest.json");
  nlohmann::json manifest = nlohmann::json::parse(in);
  CHECK(manifest["nodes"].size() == 3);
  CHECK(manifest["meta"]["purpose"] == "unit-test");
  CHECK(manifest["sizes"][0].contains("train"));
}

TEST_CASE("pipeline stages are pure functions of input and seed") {
  SynthConfig cfg;
  cfg.n_nodes = 5;
  cfg.dim = 4;
  cfg.n_clusters = 2;
  cfg.seed = 1234;
  CHECK(checksum(synth_clustered(cfg).shards) ==
        checksum(synth_clustered(cfg).shards));
}
