#pragma once

#include <Eigen/Dense>

#include <vector>

namespace mecmtl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// One training/test point: feature vector plus a binary label in {-1,+1}.
struct LabeledSample {
  Vector features;
  int label = 1;
};

struct Dataset {
  std::vector<LabeledSample> samples;
  Eigen::Index dim = 0;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  /// Appends a sample, fixing the dataset dimension on first insert.
  /// Throws if the dimension disagrees or the label is not +/-1.
  void add(Vector features, int label);
};

/// Linear binary classifier. The bias is treated as an extra regularized
/// coordinate everywhere (augmented convention), so all solvers operate on
/// packed (d+1)-vectors with the bias last.
struct LinearModel {
  Vector weights;
  double bias = 0.0;
};

struct LossConfig {
  double l2 = 0.1;  // per-node L2 strength, applied to weights and bias alike
};

struct Prediction {
  int label = 1;      // sign of the margin, ties at zero resolve to +1
  double margin = 0.0;
};

Vector to_augmented(const LinearModel& m);
LinearModel from_augmented(const Vector& v);

Prediction predict(const LinearModel& model, const LabeledSample& sample);

/// Mean hinge loss plus (l2/2)*(|w|^2 + b^2).
double hinge_objective(const LinearModel& model, const Dataset& data,
                       const LossConfig& cfg);

/// A subgradient of hinge_objective, packed as (d+1) with the bias last.
/// Samples sitting exactly on the margin contribute the zero branch.
Vector hinge_subgradient(const LinearModel& model, const Dataset& data,
                         const LossConfig& cfg);

double accuracy(const LinearModel& model, const Dataset& data);

/// Proximal pull toward `center` (packed d+1) with strength `weight`.
struct Anchor {
  Vector center;
  double weight = 0.0;
};

struct InnerSolveOpts {
  double tol = 1e-8;    // duality-gap stopping threshold
  int max_iters = 2000; // cap on coordinate passes over the data
};

struct ProxSolution {
  LinearModel model;
  bool converged = false;
  int passes = 0;
  double gap = 0.0;  // certified primal-dual gap at the returned iterate
};

/// Objective of the proximal sub-problem at a packed iterate:
/// hinge_objective(v) + sum_a (weight_a/2)*|v - center_a|^2.
double prox_objective(const Vector& v, const Dataset& data,
                      const LossConfig& cfg, const std::vector<Anchor>& anchors);

/// Minimizes prox_objective by cyclic dual coordinate ascent. Deterministic:
/// dual starts at zero and samples are visited in dataset order. Needs
/// cfg.l2 > 0 or at least one positive-weight anchor (strong convexity).
/// On hitting max_iters the best iterate seen is returned, converged=false.
ProxSolution solve_prox_svm(const Dataset& data, const LossConfig& cfg,
                            const std::vector<Anchor>& anchors,
                            const InnerSolveOpts& opts);

}  // namespace mecmtl
