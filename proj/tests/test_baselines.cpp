#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mecmtl/admm.hpp"
#include "mecmtl/baselines.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <filesystem>
#include <fstream>

using namespace mecmtl;
using namespace mecmtl::baselines;

namespace {

data::ShardSet make_shards(const std::vector<Dataset>& trains) {
  data::ShardSet out;
  for (std::size_t t = 0; t < trains.size(); ++t) {
    Dataset test;
    test.add(trains[t].samples.front().features, trains[t].samples.front().label);
    test.add(trains[t].samples.back().features, trains[t].samples.back().label);
    out.shards.push_back({static_cast<int>(t), trains[t], std::move(test)});
  }
  return out;
}

}  // namespace

TEST_CASE("train_local: per-node independence and parity with decoupled admm") {
  auto rng = testutil::rng(31);
  Dataset shared = testutil::random_dataset(rng, 20, 2);
  data::ShardSet twins = make_shards({shared, shared, shared});
  const LossConfig loss{0.4};
  InnerSolveOpts inner;
  inner.tol = 1e-12;

  LocalResult local = train_local(twins, loss, inner, {});
  CHECK(local.all_converged);
  for (int t = 1; t < 3; ++t) {
    CHECK(local.models[t].weights == local.models[0].weights);
    CHECK(local.models[t].bias == local.models[0].bias);
  }

  // per-node objective never exceeds the zero model's
  for (int t = 0; t < 3; ++t) {
    LinearModel zero{Vector::Zero(2), 0.0};
    CHECK(hinge_objective(local.models[t], twins.shards[t].train, loss) <=
          hinge_objective(zero, twins.shards[t].train, loss) + 1e-8);
  }

  // serial and parallel execution agree bitwise
  LocalResult serial = train_local(twins, loss, inner, {ExecMode::serial, 0});
  for (int t = 0; t < 3; ++t)
    CHECK(serial.models[t].weights == local.models[t].weights);

  // decoupled network solve lands on the same per-node optima
  MecGraph g;
  g.n_nodes = 3;
  g.edges = {{0, 1, 1.0}, {1, 2, 1.0}};
  netlasso::AdmmOpts opts;
  opts.lambda = 0.0;
  opts.eps_abs = 1e-7;
  opts.eps_rel = 0.0;
  opts.max_iters = 2000;
  opts.inner = inner;
  auto res = netlasso::solve(g, twins, loss, opts);
  for (int t = 0; t < 3; ++t)
    CHECK((to_augmented(res.models[t]) - to_augmented(local.models[t]))
              .lpNorm<Eigen::Infinity>() <= 1e-4);
}

TEST_CASE("train_global: pooled solve is shard-boundary invariant") {
  auto rng = testutil::rng(37);
  std::vector<Dataset> trains;
  for (int t = 0; t < 4; ++t)
    trains.push_back(testutil::random_dataset(rng, 15, 2));
  data::ShardSet shards = make_shards(trains);
  const LossConfig loss{0.3};
  InnerSolveOpts inner;
  inner.tol = 1e-12;

  GlobalResult g1 = train_global(shards, loss, inner);
  CHECK(g1.converged);

  data::ShardSet permuted = make_shards({trains[2], trains[0], trains[3], trains[1]});
  GlobalResult g2 = train_global(permuted, loss, inner);
  CHECK((g1.model.weights - g2.model.weights).norm() <= 1e-9);
  CHECK(std::abs(g1.model.bias - g2.model.bias) <= 1e-9);

  // single shard: same optimum as the local trainer
  data::ShardSet one = make_shards({trains[0]});
  GlobalResult solo = train_global(one, loss, inner);
  LocalResult local = train_local(one, loss, inner, {});
  CHECK((to_augmented(solo.model) - to_augmented(local.models[0])).norm() <= 1e-4);
}

TEST_CASE("train_global: pooled objective matches grid search on a 1-d toy") {
  auto rng = testutil::rng(41);
  std::vector<Dataset> trains;
  for (int t = 0; t < 3; ++t)
    trains.push_back(testutil::random_dataset(rng, 6, 1));
  data::ShardSet shards = make_shards(trains);
  const LossConfig loss{0.6};
  InnerSolveOpts inner;
  inner.tol = 1e-12;
  GlobalResult g = train_global(shards, loss, inner);

  Dataset pool;
  for (const auto& t : trains)
    for (const auto& s : t.samples) pool.add(s.features, s.label);
  const double ours = hinge_objective(g.model, pool, loss);
  auto f = [&](double w, double b) {
    Vector v(2);
    v << w, b;
    return prox_objective(v, pool, loss, {});
  };
  auto [bw, bb, best] = oracle::grid_min_2d(f, -3.0, 3.0);
  (void)bw;
  (void)bb;
  CHECK(std::abs(ours - best) <= 1e-4);
}

TEST_CASE("model export uses the node_id,bias,w_* layout") {
  std::vector<LinearModel> models;
  models.push_back({(Vector(2) << 1.0, 2.0).finished(), 0.5});
  models.push_back({(Vector(2) << -1.0, 0.25).finished(), -0.5});
  LinearModel global{(Vector(2) << 0.125, 4.0).finished(), 1.0};

  const auto path =
      (std::filesystem::temp_directory_path() / "mecmtl_models.csv").string();
  write_models_csv(path, models, &global);

  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "node_id,bias,w_0,w_1");
  std::getline(in, line);
  CHECK(line == "0,0.5,1,2");
  std::getline(in, line);
  CHECK(line == "1,-0.5,-1,0.25");
  std::getline(in, line);
  CHECK(line == "global,1,0.125,4");
}
