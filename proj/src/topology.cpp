#include "mecmtl/topology.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace mecmtl {

std::set<int> MecGraph::neighbors(int node) const {
  if (node < 0 || node >= n_nodes)
    throw std::invalid_argument("neighbors: unknown node id " + std::to_string(node));
  std::set<int> out;
  for (const auto& e : edges) {
    if (e.a == node) out.insert(e.b);
    if (e.b == node) out.insert(e.a);
  }
  return out;
}

MecGraph build_knn_graph(const std::vector<Site>& sites, int k) {
  const int n = static_cast<int>(sites.size());
  if (k < 1) throw std::invalid_argument("build_knn_graph: k must be >= 1");
  if (k >= n) throw std::invalid_argument("build_knn_graph: k must be < |sites|");
  for (int i = 0; i < n; ++i) {
    if (sites[i].id != i)
      throw std::invalid_argument("build_knn_graph: site ids must be 0..n-1 in order");
    if (!std::isfinite(sites[i].x) || !std::isfinite(sites[i].y))
      throw std::invalid_argument("build_knn_graph: non-finite coordinate");
  }

  std::set<std::pair<int, int>> undirected;
  std::vector<std::pair<double, int>> cand;
  cand.reserve(n - 1);
  for (int i = 0; i < n; ++i) {
    cand.clear();
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dx = sites[i].x - sites[j].x;
      const double dy = sites[i].y - sites[j].y;
      cand.emplace_back(dx * dx + dy * dy, j);
    }
    // ties break toward the smaller id
    std::sort(cand.begin(), cand.end());
    for (int t = 0; t < k; ++t) {
      const int j = cand[t].second;
      undirected.emplace(std::min(i, j), std::max(i, j));
    }
  }

  MecGraph g;
  g.n_nodes = n;
  for (const auto& [a, b] : undirected) g.edges.push_back({a, b, 1.0});
  return g;
}

Eigen::MatrixXd laplacian(const MecGraph& g) {
  auto violations = validate_graph(g);
  if (!violations.empty())
    throw std::invalid_argument("laplacian: invalid graph: " + violations.front());
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(g.n_nodes, g.n_nodes);
  for (const auto& e : g.edges) {
    L(e.a, e.a) += e.weight;
    L(e.b, e.b) += e.weight;
    L(e.a, e.b) -= e.weight;
    L(e.b, e.a) -= e.weight;
  }
  return L;
}

std::vector<std::string> validate_graph(const MecGraph& g) {
  std::vector<std::string> out;
  if (g.n_nodes < 0) out.push_back("negative node count");
  std::set<std::pair<int, int>> seen;
  for (const auto& e : g.edges) {
    if (e.a == e.b) {
      out.push_back("self-loop at " + std::to_string(e.a));
      continue;
    }
    if (e.a < 0 || e.a >= g.n_nodes || e.b < 0 || e.b >= g.n_nodes) {
      out.push_back("edge endpoint out of range: (" + std::to_string(e.a) + "," +
                    std::to_string(e.b) + ")");
      continue;
    }
    if (!(e.weight > 0.0))
      out.push_back("non-positive weight on edge (" + std::to_string(e.a) + "," +
                    std::to_string(e.b) + ")");
    auto key = std::minmax(e.a, e.b);
    if (!seen.insert({key.first, key.second}).second)
      out.push_back("duplicate edge (" + std::to_string(key.first) + "," +
                    std::to_string(key.second) + ")");
  }
  return out;
}

std::vector<std::vector<int>> adjacency(const MecGraph& g) {
  std::vector<std::vector<int>> adj(g.n_nodes);
  for (const auto& e : g.edges) {
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  for (auto& row : adj) std::sort(row.begin(), row.end());
  return adj;
}

std::vector<Site> random_sites(int n, std::uint64_t seed, double extent) {
  if (n < 1) throw std::invalid_argument("random_sites: n must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(0.0, extent);
  std::vector<Site> sites(n);
  for (int i = 0; i < n; ++i) {
    sites[i].id = i;
    sites[i].x = coord(rng);
    sites[i].y = coord(rng);
  }
  return sites;
}

std::vector<Site> clustered_sites(int n, int n_blobs, std::uint64_t seed,
                                  double extent, double spread) {
  if (n < 1) throw std::invalid_argument("clustered_sites: n must be >= 1");
  if (n_blobs < 1 || n_blobs > n)
    throw std::invalid_argument("clustered_sites: need 1 <= n_blobs <= n");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, spread);
  std::vector<Site> sites(n);
  for (int i = 0; i < n; ++i) {
    const int b = i % n_blobs;
    const double cx = extent * (b + 1.0) / (n_blobs + 1.0);
    sites[i] = {i, cx + jitter(rng), 0.5 * extent + jitter(rng)};
  }
  return sites;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_graph(const GraphFile& gf, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_graph: cannot open " + path);
  for (const auto& s : gf.sites)
    out << "node " << s.id << ' ' << fmt(s.x) << ' ' << fmt(s.y) << '\n';
  for (const auto& e : gf.graph.edges)
    out << "edge " << e.a << ' ' << e.b << ' ' << fmt(e.weight) << '\n';
  if (!out) throw std::runtime_error("write_graph: write failed for " + path);
}

GraphFile read_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_graph: cannot open " + path);
  GraphFile gf;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string kind;
    ss >> kind;
    if (kind == "node") {
      Site s;
      if (!(ss >> s.id >> s.x >> s.y))
        throw std::runtime_error("read_graph: bad node line " + std::to_string(lineno));
      gf.sites.push_back(s);
    } else if (kind == "edge") {
      Edge e;
      if (!(ss >> e.a >> e.b >> e.weight))
        throw std::runtime_error("read_graph: bad edge line " + std::to_string(lineno));
      gf.graph.edges.push_back(e);
    } else {
      throw std::runtime_error("read_graph: unknown directive '" + kind + "' on line " +
                               std::to_string(lineno));
    }
  }
  for (std::size_t i = 0; i < gf.sites.size(); ++i)
    if (gf.sites[i].id != static_cast<int>(i))
      throw std::runtime_error("read_graph: node ids must be contiguous from 0");
  gf.graph.n_nodes = static_cast<int>(gf.sites.size());
  return gf;
}

}  // namespace mecmtl
