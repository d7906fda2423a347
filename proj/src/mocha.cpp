#include "mecmtl/mocha.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace mecmtl::mocha {

namespace {

void check_inputs(const data::ShardSet& shards) {
  if (shards.shards.empty()) throw std::invalid_argument("mocha: no shards");
  const Eigen::Index d = shards.dim();
  for (const auto& ns : shards.shards) {
    if (ns.train.empty())
      throw std::invalid_argument("mocha: empty train shard at node " +
                                  std::to_string(ns.node_id));
    if (ns.train.dim != d)
      throw std::invalid_argument("mocha: shards disagree on dimension");
  }
}

Matrix inverse_spd(const Matrix& m, const char* what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument(std::string(what) + ": matrix is not positive definite");
  Matrix inv = llt.solve(Matrix::Identity(m.rows(), m.cols()));
  if (!inv.allFinite())
    throw std::invalid_argument(std::string(what) + ": near-singular matrix");
  return inv;
}

void check_omega(const Matrix& omega) {
  if (omega.rows() != omega.cols())
    throw std::invalid_argument("mocha: omega must be square");
  if (!omega.isApprox(omega.transpose(), 1e-12))
    throw std::invalid_argument("mocha: omega must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(omega, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < 0.5 * kOmegaEpsFloor)
    throw std::invalid_argument("mocha: omega rejected, minimum eigenvalue below floor");
}

}  // namespace

Matrix static_omega(const MecGraph& g, double eps) {
  if (eps < kOmegaEpsFloor)
    throw std::invalid_argument("static_omega: eps below the PD floor");
  return laplacian(g) + eps * Matrix::Identity(g.n_nodes, g.n_nodes);
}

MochaState init_state(const data::ShardSet& shards, const Matrix& omega) {
  check_inputs(shards);
  check_omega(omega);
  const int m = static_cast<int>(shards.shards.size());
  if (omega.rows() != m)
    throw std::invalid_argument("mocha: omega size must match the task count");
  const Eigen::Index D = shards.dim() + 1;
  MochaState s;
  s.alpha.reserve(m);
  for (const auto& ns : shards.shards)
    s.alpha.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ns.train.size())));
  s.v = Matrix::Zero(D, m);
  s.omega = omega;
  s.omega_inv = inverse_spd(omega, "mocha");
  s.w = Matrix::Zero(D, m);
  return s;
}

std::vector<LinearModel> recover_w(MochaState& s, double lambda1) {
  if (lambda1 <= 0) throw std::invalid_argument("recover_w: lambda1 must be positive");
  if (!s.omega_inv.allFinite() || s.omega_inv.size() == 0)
    throw std::invalid_argument("recover_w: omega inverse unavailable");
  s.w = s.v * s.omega_inv / lambda1;
  std::vector<LinearModel> models;
  models.reserve(s.w.cols());
  for (Eigen::Index t = 0; t < s.w.cols(); ++t)
    models.push_back(from_augmented(s.w.col(t)));
  return models;
}

LocalDelta local_subproblem(int task, const MochaState& s, const Dataset& train,
                            const MochaOpts& opts) {
  const int m = static_cast<int>(s.omega.rows());
  const int n = static_cast<int>(train.size());
  const Eigen::Index d = train.dim;
  const Eigen::Index D = d + 1;
  if (task < 0 || task >= m) throw std::invalid_argument("local_subproblem: bad task");
  if (s.alpha[task].size() != n)
    throw std::invalid_argument("local_subproblem: dual size mismatch");

  const double sigma = opts.sigma_prime.value_or(static_cast<double>(m));
  const double kappa = s.omega_inv(task, task) / opts.lambda1;
  const double curvature = sigma * kappa;
  const double cap = 1.0 / static_cast<double>(n);

  LocalDelta out;
  out.d_alpha = Eigen::VectorXd::Zero(n);
  out.d_v = Vector::Zero(D);
  const auto w_t = s.w.col(task);

  for (int pass = 0; pass < opts.local_passes; ++pass) {
    for (int i = 0; i < n; ++i) {
      const auto& smp = train.samples[i];
      const double sqn = smp.features.squaredNorm() + 1.0;
      if (sqn <= 0.0) continue;  // no curvature, nothing to do
      const double margin = w_t.head(d).dot(smp.features) + w_t(d) +
                            curvature * (out.d_v.head(d).dot(smp.features) + out.d_v(d));
      const double grad = 1.0 - smp.label * margin;
      const double beta = smp.label * (s.alpha[task](i) + out.d_alpha(i));
      const double beta_next = std::clamp(beta + grad / (curvature * sqn), 0.0, cap);
      const double step = beta_next - beta;
      if (step != 0.0) {
        const double d_alpha = smp.label * step;  // signed dual moves by y * d_beta
        out.d_alpha(i) += d_alpha;
        out.d_v.head(d) += d_alpha * smp.features;
        out.d_v(d) += d_alpha;
      }
    }
  }
  return out;
}

void aggregate(MochaState& s, const std::vector<LocalDelta>& deltas,
               const MochaOpts& opts) {
  if (deltas.size() != static_cast<std::size_t>(s.v.cols()))
    throw std::invalid_argument("aggregate: one delta per task required");
  for (Eigen::Index t = 0; t < s.v.cols(); ++t) s.v.col(t) += deltas[t].d_v;
  recover_w(s, opts.lambda1);
  s.round += 1;
}

Matrix omega_update(MochaState& s, OmegaMode mode, const MochaOpts& opts) {
  if (mode == OmegaMode::static_laplacian) return s.omega;

  // learned relationship: omega = S^{-1}, S = unit-trace (W^T W + eps I)^{1/2}
  const Matrix gram = s.w.transpose() * s.w;
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  if (es.info() != Eigen::Success) {
    s.omega_warning = true;
    return s.omega;
  }
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).array() + opts.omega_eps;
  Eigen::VectorXd roots = ev.cwiseSqrt();
  const double trace = roots.sum();
  Matrix sqrt_norm = es.eigenvectors() * (roots / trace).asDiagonal() *
                     es.eigenvectors().transpose();
  Matrix omega_new = es.eigenvectors() * (trace * roots.cwiseInverse()).asDiagonal() *
                     es.eigenvectors().transpose();
  omega_new = 0.5 * (omega_new + omega_new.transpose());
  if (!omega_new.allFinite() || !sqrt_norm.allFinite()) {
    s.omega_warning = true;
    return s.omega;
  }
  s.omega = omega_new;
  s.omega_inv = 0.5 * (sqrt_norm + sqrt_norm.transpose());
  recover_w(s, opts.lambda1);
  return s.omega;
}

double primal_objective(const MochaState& s, const data::ShardSet& shards,
                        double lambda1) {
  const Eigen::Index d = shards.dim();
  const Matrix w = s.v * s.omega_inv / lambda1;
  double obj = 0.0;
  for (Eigen::Index t = 0; t < w.cols(); ++t) {
    const auto& train = shards.shards[t].train;
    double hinge = 0.0;
    for (const auto& smp : train.samples) {
      const double margin = smp.label * (w.col(t).head(d).dot(smp.features) + w.col(t)(d));
      hinge += std::max(0.0, 1.0 - margin);
    }
    obj += hinge / static_cast<double>(train.size());
  }
  obj += 0.5 * lambda1 * (w * s.omega).cwiseProduct(w).sum();
  return obj;
}

double dual_objective(const MochaState& s, const data::ShardSet& shards,
                      double lambda1) {
  double lin = 0.0;
  for (std::size_t t = 0; t < shards.shards.size(); ++t) {
    const auto& train = shards.shards[t].train;
    for (std::size_t i = 0; i < train.size(); ++i)
      lin += train.samples[i].label * s.alpha[t](static_cast<Eigen::Index>(i));
  }
  const double quad =
      (s.v * s.omega_inv).cwiseProduct(s.v).sum() / (2.0 * lambda1);
  return lin - quad;
}

double duality_gap(const MochaState& s, const data::ShardSet& shards,
                   const MochaOpts& opts) {
  return primal_objective(s, shards, opts.lambda1) -
         dual_objective(s, shards, opts.lambda1);
}

MochaResult solve(const MecGraph& g, const data::ShardSet& shards,
                  const MochaOpts& opts, const EvalHook& eval) {
  check_inputs(shards);
  if (static_cast<int>(shards.shards.size()) != g.n_nodes)
    throw std::invalid_argument("mocha: need exactly one shard per node");
  if (opts.lambda1 <= 0) throw std::invalid_argument("mocha: lambda1 must be positive");
  if (opts.max_rounds < 1)
    throw std::invalid_argument("mocha: max_rounds must be >= 1");
  if (opts.local_passes < 0)
    throw std::invalid_argument("mocha: local_passes must be >= 0");

  Matrix omega0;
  if (opts.omega0) {
    omega0 = *opts.omega0;
  } else if (opts.omega_mode == OmegaMode::static_laplacian) {
    omega0 = static_omega(g, opts.omega_eps);
  } else {
    // dynamic mode starts from the W = 0 relationship, omega = m * I
    omega0 = static_cast<double>(g.n_nodes) *
             Matrix::Identity(g.n_nodes, g.n_nodes);
  }

  MochaState s = init_state(shards, omega0);
  const int m = g.n_nodes;

  MochaResult res;
  const auto t0 = std::chrono::steady_clock::now();

  for (int round = 1; round <= opts.max_rounds; ++round) {
    std::vector<LocalDelta> deltas(m);
    parallel_for(m, opts.exec, [&](int t) {
      deltas[t] = local_subproblem(t, s, shards.shards[t].train, opts);
      s.alpha[t] += deltas[t].d_alpha;  // task-owned, disjoint across the loop
    });
    aggregate(s, deltas, opts);
    omega_update(s, opts.omega_mode, opts);

    TracePoint tp;
    tp.iter = round;
    tp.gap = duality_gap(s, shards, opts);
    tp.objective = primal_objective(s, shards, opts.lambda1);
    tp.rounds = s.round;
    tp.wall_ms = std::chrono::duration<double, std::milli>(
                     std::chrono::steady_clock::now() - t0)
                     .count();
    if (eval) {
      std::vector<LinearModel> models;
      models.reserve(m);
      for (int t = 0; t < m; ++t) models.push_back(from_augmented(s.w.col(t)));
      tp.accuracy = eval(round, models);
    }
    res.trace.points.push_back(tp);

    if (tp.gap <= opts.gap_tol) {
      res.converged = true;
      break;
    }
  }

  res.trace.converged = res.converged;
  res.models = recover_w(s, opts.lambda1);
  res.state = std::move(s);
  return res;
}

}  // namespace mecmtl::mocha
