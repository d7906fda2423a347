#pragma once

#include "mecmtl/data.hpp"
#include "mecmtl/model.hpp"
#include "mecmtl/parallel.hpp"
#include "mecmtl/topology.hpp"
#include "mecmtl/trace.hpp"

#include <optional>
#include <vector>

namespace mecmtl::mocha {

inline constexpr double kOmegaEpsFloor = 1e-6;

enum class OmegaMode { static_laplacian, dynamic };

struct MochaOpts {
  double lambda1 = 0.1;                 // relationship regularizer weight
  int local_passes = 1;                 // H: coordinate passes per round
  std::optional<double> sigma_prime;    // defaults to the task count m
  int max_rounds = 300;                 // K
  double gap_tol = 1e-3;
  OmegaMode omega_mode = OmegaMode::static_laplacian;
  double omega_eps = kOmegaEpsFloor;    // PD floor added to the Laplacian
  std::optional<Matrix> omega0;         // explicit static relationship matrix
  ExecPolicy exec;
};

/// Central state. Column t of v holds the weighted data map of task t's
/// duals, v_t = sum_i alpha_t^i * [x_i; 1]; the per-sample box is
/// y_i * alpha_i in [0, 1/n_t], realizing the per-task mean hinge. Column t
/// of w is the recovered primal model.
struct MochaState {
  std::vector<Eigen::VectorXd> alpha;  // one dual vector per task
  Matrix v;          // (d+1) x m
  Matrix omega;      // m x m SPD relationship matrix
  Matrix omega_inv;  // cached inverse
  Matrix w;          // (d+1) x m
  int round = 0;
  bool omega_warning = false;  // dynamic update fell back to the previous omega
};

/// L + eps*I over the graph's edge weights.
Matrix static_omega(const MecGraph& g, double eps);

MochaState init_state(const data::ShardSet& shards, const Matrix& omega);

/// W = (1/lambda1) * V * omega^{-1}; refreshes state.w and returns the
/// per-task models. Rejects a near-singular omega.
std::vector<LinearModel> recover_w(MochaState& s, double lambda1);

struct LocalDelta {
  Eigen::VectorXd d_alpha;
  Vector d_v;
};

/// H passes of exact single-coordinate ascent on the task's quadratic
/// surrogate: curvature sigma' * (omega^{-1})_tt / lambda1 per unit |x|^2,
/// box-clipped so y_i * alpha_i stays in [0, 1/n_t]. Zero-norm samples are
/// skipped (cannot happen with the bias coordinate, kept as a guard).
LocalDelta local_subproblem(int task, const MochaState& s, const Dataset& train,
                            const MochaOpts& opts);

/// v_t += d_v_t for every task, recovers W, advances the round counter.
void aggregate(MochaState& s, const std::vector<LocalDelta>& deltas,
               const MochaOpts& opts);

/// static mode: identity. dynamic mode: omega = S^{-1} with
/// S = (W^T W + eps*I)^{1/2} scaled to unit trace; recover_w and the local
/// curvature then see omega^{-1} = S. Falls back to the previous omega (with
/// a warning flag) if the decomposition degenerates.
Matrix omega_update(MochaState& s, OmegaMode mode, const MochaOpts& opts);

double primal_objective(const MochaState& s, const data::ShardSet& shards,
                        double lambda1);
double dual_objective(const MochaState& s, const data::ShardSet& shards,
                      double lambda1);

/// Primal minus dual objective; nonnegative up to rounding.
double duality_gap(const MochaState& s, const data::ShardSet& shards,
                   const MochaOpts& opts);

struct MochaResult {
  std::vector<LinearModel> models;
  ConvergenceTrace trace;
  MochaState state;
  bool converged = false;
};

/// Rounds of {parallel local sub-problems -> aggregate -> omega update}
/// until the duality gap passes gap_tol or max_rounds is hit.
MochaResult solve(const MecGraph& g, const data::ShardSet& shards,
                  const MochaOpts& opts, const EvalHook& eval = {});

}  // namespace mecmtl::mocha
