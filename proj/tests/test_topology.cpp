#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mecmtl/topology.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

using namespace mecmtl;

namespace {

std::vector<Site> collinear3() {
  return {{0, 0.0, 0.0}, {1, 1.0, 0.0}, {2, 2.0, 0.0}};
}

std::set<std::pair<int, int>> edge_set(const MecGraph& g) {
  std::set<std::pair<int, int>> s;
  for (const auto& e : g.edges) s.insert({e.a, e.b});
  return s;
}

}  // namespace

TEST_CASE("build_knn_graph: collinear and square layouts") {
  MecGraph g = build_knn_graph(collinear3(), 1);
  CHECK(edge_set(g) == std::set<std::pair<int, int>>{{0, 1}, {1, 2}});

  std::vector<Site> square = {{0, 0, 0}, {1, 1, 0}, {2, 0, 1}, {3, 1, 1}};
  MecGraph sq = build_knn_graph(square, 1);
  CHECK(sq.edges.size() >= 2);
  for (int t = 0; t < 4; ++t) CHECK(sq.neighbors(t).size() >= 1);

  CHECK_THROWS_AS(build_knn_graph(square, 4), std::invalid_argument);
  CHECK_THROWS_AS(build_knn_graph(square, 0), std::invalid_argument);
}

TEST_CASE("build_knn_graph matches the brute-force oracle") {
  auto sites = random_sites(100, 424242);
  MecGraph g = build_knn_graph(sites, 5);

  std::vector<std::tuple<double, double>> coords;
  for (const auto& s : sites) coords.emplace_back(s.x, s.y);
  CHECK(edge_set(g) == oracle::brute_knn_edges(coords, 5));

  for (int t = 0; t < g.n_nodes; ++t) {
    const auto deg = g.neighbors(t).size();
    CHECK(deg >= 5);
    CHECK(deg <= 99);
  }

  MecGraph again = build_knn_graph(sites, 5);
  CHECK(edge_set(g) == edge_set(again));  // deterministic
}

TEST_CASE("neighbors: path graph and oracle adjacency") {
  MecGraph path;
  path.n_nodes = 3;
  path.edges = {{0, 1, 1.0}, {1, 2, 1.0}};
  CHECK(path.neighbors(1) == std::set<int>{0, 2});
  CHECK(path.neighbors(0) == std::set<int>{1});
  CHECK_THROWS_AS(path.neighbors(7), std::invalid_argument);

  auto sites = random_sites(40, 7);
  MecGraph g = build_knn_graph(sites, 3);
  std::vector<std::tuple<double, double>> coords;
  for (const auto& s : sites) coords.emplace_back(s.x, s.y);
  auto edges = oracle::brute_knn_edges(coords, 3);
  for (int t = 0; t < g.n_nodes; ++t) {
    std::set<int> expected;
    for (const auto& [a, b] : edges) {
      if (a == t) expected.insert(b);
      if (b == t) expected.insert(a);
    }
    CHECK(g.neighbors(t) == expected);
  }
}

TEST_CASE("laplacian: small cases and quadratic-form identity") {
  MecGraph single;
  single.n_nodes = 2;
  single.edges = {{0, 1, 1.0}};
  Eigen::MatrixXd L = laplacian(single);
  CHECK(L(0, 0) == doctest::Approx(1.0));
  CHECK(L(0, 1) == doctest::Approx(-1.0));
  CHECK(L(1, 0) == doctest::Approx(-1.0));
  CHECK(L(1, 1) == doctest::Approx(1.0));

  MecGraph lonely;
  lonely.n_nodes = 3;
  CHECK(laplacian(lonely).norm() == 0.0);

  auto sites = random_sites(30, 99);
  MecGraph g = build_knn_graph(sites, 4);
  Eigen::MatrixXd Lg = laplacian(g);
  CHECK((Lg - Lg.transpose()).norm() == doctest::Approx(0.0));
  CHECK(Lg.rowwise().sum().norm() <= 1e-12);

  auto rng = testutil::rng(1);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd x = testutil::random_vector(rng, g.n_nodes);
    double direct = 0.0;
    for (const auto& e : g.edges)
      direct += e.weight * (x(e.a) - x(e.b)) * (x(e.a) - x(e.b));
    CHECK(x.dot(Lg * x) == doctest::Approx(direct).epsilon(1e-9));
  }
}

TEST_CASE("laplacian is positive semidefinite") {
  auto sites = random_sites(25, 5);
  MecGraph g = build_knn_graph(sites, 3);
  Eigen::MatrixXd L = laplacian(g);
  auto rng = testutil::rng(2);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::VectorXd x = testutil::random_vector(rng, g.n_nodes);
    CHECK(x.dot(L * x) >= -1e-9);
  }
}

TEST_CASE("validate_graph names violations") {
  MecGraph path;
  path.n_nodes = 3;
  path.edges = {{0, 1, 1.0}, {1, 2, 1.0}};
  CHECK(validate_graph(path).empty());

  MecGraph loop = path;
  loop.edges.push_back({3, 3, 1.0});
  loop.n_nodes = 4;
  auto v = validate_graph(loop);
  REQUIRE(v.size() == 1);
  CHECK(v[0] == "self-loop at 3");

  MecGraph dup = path;
  dup.edges.push_back({2, 1, 1.0});  // same undirected pair, reversed
  auto vd = validate_graph(dup);
  REQUIRE(vd.size() == 1);
  CHECK(vd[0].find("duplicate edge") == 0);

  MecGraph bad_weight = path;
  bad_weight.edges[0].weight = 0.0;
  CHECK(validate_graph(bad_weight).size() == 1);
}

TEST_CASE("graph file round-trips losslessly") {
  auto sites = random_sites(12, 31337);
  GraphFile gf{sites, build_knn_graph(sites, 2)};
  gf.graph.edges[0].weight = 0.12345678901234567;  // exercise full precision

  const auto dir = std::filesystem::temp_directory_path() / "mecmtl_topo_test";
  std::filesystem::create_directories(dir);
  const std::string p1 = (dir / "g1.txt").string();
  const std::string p2 = (dir / "g2.txt").string();
  write_graph(gf, p1);
  GraphFile back = read_graph(p1);
  write_graph(back, p2);

  std::ifstream f1(p1), f2(p2);
  std::string s1((std::istreambuf_iterator<char>(f1)), {});
  std::string s2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(s1 == s2);
  CHECK(back.graph.n_nodes == gf.graph.n_nodes);
  CHECK(back.sites.size() == gf.sites.size());
  CHECK(back.graph.edges[0].weight == gf.graph.edges[0].weight);

  CHECK_THROWS(read_graph((dir / "missing.txt").string()));
}
