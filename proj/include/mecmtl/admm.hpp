#pragma once

#include "mecmtl/data.hpp"
#include "mecmtl/model.hpp"
#include "mecmtl/parallel.hpp"
#include "mecmtl/topology.hpp"
#include "mecmtl/trace.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace mecmtl::netlasso {

struct AdmmOpts {
  double rho = 1.0;
  double lambda = 0.0;
  double eps_abs = 1e-4;
  double eps_rel = 1e-3;
  int max_iters = 500;
  InnerSolveOpts inner;
  ExecPolicy exec;
};

/// Consensus state. z and u live on directed edge slots: undirected edge e
/// = (a,b) owns slot 2e (a's copy, direction a->b) and slot 2e+1 (b's copy).
/// All vectors are packed (d+1) with the bias last.
struct AdmmState {
  std::vector<Vector> w;  // per node
  std::vector<Vector> z;  // per directed edge slot
  std::vector<Vector> u;  // scaled duals, per directed edge slot
  int iteration = 0;      // cumulative across warm starts
  std::vector<std::pair<double, double>> residual_history;
};

AdmmState zero_state(const MecGraph& g, Eigen::Index dim);

/// Node sub-problem: local hinge objective pulled toward z - u on every
/// incident slot with strength rho.
ProxSolution w_update(const MecGraph& g, int node, const AdmmState& s,
                      const Dataset& train, const LossConfig& loss,
                      const AdmmOpts& opts);

/// Exact minimizer of
///   lambda*a*|z_ti - z_it| + (rho/2)(|p - z_ti|^2 + |q - z_it|^2)
/// with p = w_t + u_ti, q = w_i + u_it: the pair interpolates between p and
/// q with factor theta = max(0.5, 1 - lambda*a/(rho*|p-q|)), collapsing to
/// the midpoint once the penalty dominates.
std::pair<Vector, Vector> z_update(const Vector& w_t, const Vector& w_i,
                                   const Vector& u_ti, const Vector& u_it,
                                   double lambda, double a_ti, double rho);

Vector u_update(const Vector& u, const Vector& w, const Vector& z);

/// (|r_p|, |r_s|): r_p stacks w_t - z_ti over directed slots, r_s stacks
/// rho * (z - z_prev).
std::pair<double, double> residual_norms(const MecGraph& g, const AdmmState& s,
                                         const std::vector<Vector>& z_prev,
                                         double rho);

/// Sum of per-node hinge objectives plus lambda * sum_e a_e * |w_j - w_k|_2
/// over undirected edges (packed vectors, bias included).
double network_lasso_objective(const MecGraph& g, const data::ShardSet& shards,
                               const LossConfig& loss, double lambda,
                               const std::vector<Vector>& w);

struct AdmmResult {
  std::vector<LinearModel> models;
  ConvergenceTrace trace;
  AdmmState state;
  bool converged = false;
  bool inner_warning = false;  // some node solve hit its pass cap
};

/// w -> z -> u sweeps with a barrier between phases; stops when both
/// residuals pass their combined absolute/relative tolerances.
AdmmResult solve(const MecGraph& g, const data::ShardSet& shards,
                 const LossConfig& loss, const AdmmOpts& opts,
                 const AdmmState* warm = nullptr, const EvalHook& eval = {});

struct PathEntry {
  double lambda = 0.0;
  std::vector<LinearModel> models;
  ConvergenceTrace trace;
  int rounds = 0;
  long cumulative_rounds = 0;
  bool converged = false;
};

/// Solves at each lambda in increasing order, warm-starting every solve from
/// the previous full state.
std::vector<PathEntry> regularization_path(const MecGraph& g,
                                           const data::ShardSet& shards,
                                           const LossConfig& loss,
                                           const std::vector<double>& lambdas,
                                           const AdmmOpts& opts,
                                           const EvalHook& eval = {});

/// Connected components of the subgraph keeping edges with
/// |w_j - w_k|_2 <= tol (packed distance). Cluster ids are assigned in node
/// order, starting at 0.
std::vector<int> extract_clusters(const std::vector<LinearModel>& models,
                                  const MecGraph& g, double tol);

}  // namespace mecmtl::netlasso
