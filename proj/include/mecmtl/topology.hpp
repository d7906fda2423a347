#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace mecmtl {

struct Site {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
};

struct Edge {
  int a = 0;
  int b = 0;
  double weight = 1.0;
};

/// Undirected weighted graph over nodes 0..n_nodes-1. Graphs produced by the
/// builders are canonical (a < b, edges sorted, no duplicates); graphs read
/// from files may be arbitrary and should go through validate_graph first.
struct MecGraph {
  int n_nodes = 0;
  std::vector<Edge> edges;

  std::set<int> neighbors(int node) const;  // throws on unknown id
};

/// Directed kNN by Euclidean distance, symmetrized by union. Ties break
/// toward the smaller id. All edge weights start at 1.0.
MecGraph build_knn_graph(const std::vector<Site>& sites, int k);

/// L = D - A over the edge weights. Requires a valid graph.
Eigen::MatrixXd laplacian(const MecGraph& g);

/// Empty result iff all invariants hold; otherwise one message per violation.
std::vector<std::string> validate_graph(const MecGraph& g);

std::vector<std::vector<int>> adjacency(const MecGraph& g);

std::vector<Site> random_sites(int n, std::uint64_t seed, double extent = 100.0);

/// Sites drawn around `n_blobs` evenly spaced centers, with node i assigned
/// to blob i % n_blobs. Keeps proximity aligned with the round-robin task
/// assignment used by the synthetic generator.
std::vector<Site> clustered_sites(int n, int n_blobs, std::uint64_t seed,
                                  double extent = 100.0, double spread = 8.0);

struct GraphFile {
  std::vector<Site> sites;
  MecGraph graph;
};

// Line-oriented text format: "node <id> <x> <y>" and "edge <j> <k> <weight>".
// Round-trips losslessly (coordinates and weights written with 17 digits).
void write_graph(const GraphFile& gf, const std::string& path);
GraphFile read_graph(const std::string& path);

}  // namespace mecmtl
