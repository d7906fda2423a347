#include "mecmtl/admm.hpp"

#include "mecmtl/csv.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace mecmtl {

std::string ConvergenceTrace::to_csv() const {
  std::ostringstream out;
  out << "iter,r_p,r_s,gap,objective,accuracy,rounds,wall_ms\n";
  auto cell = [](double v) { return csv::format_double(v); };
  for (const auto& p : points)
    out << p.iter << ',' << cell(p.r_primal) << ',' << cell(p.r_dual) << ','
        << cell(p.gap) << ',' << cell(p.objective) << ',' << cell(p.accuracy) << ','
        << p.rounds << ',' << cell(p.wall_ms) << '\n';
  return out.str();
}

void ConvergenceTrace::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("trace: cannot open " + path);
  out << to_csv();
}

}  // namespace mecmtl

namespace mecmtl::netlasso {

namespace {

struct Slots {
  // incident[t] lists (slot, edge) pairs for node t; slot 2e is edge e's
  // first endpoint copy, slot 2e+1 the second's.
  std::vector<std::vector<std::pair<int, int>>> incident;
  int count = 0;
};

Slots make_slots(const MecGraph& g) {
  Slots s;
  s.incident.resize(g.n_nodes);
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    s.incident[g.edges[e].a].push_back({2 * static_cast<int>(e), static_cast<int>(e)});
    s.incident[g.edges[e].b].push_back(
        {2 * static_cast<int>(e) + 1, static_cast<int>(e)});
  }
  s.count = 2 * static_cast<int>(g.edges.size());
  return s;
}

int slot_node(const MecGraph& g, int slot) {
  const auto& e = g.edges[slot / 2];
  return (slot % 2 == 0) ? e.a : e.b;
}

void check_inputs(const MecGraph& g, const data::ShardSet& shards) {
  if (static_cast<int>(shards.shards.size()) != g.n_nodes)
    throw std::invalid_argument("netlasso: need exactly one shard per node");
  for (const auto& ns : shards.shards)
    if (ns.train.empty())
      throw std::invalid_argument("netlasso: empty train shard at node " +
                                  std::to_string(ns.node_id));
  const Eigen::Index d = shards.dim();
  for (const auto& ns : shards.shards)
    if (ns.train.dim != d)
      throw std::invalid_argument("netlasso: shards disagree on dimension");
}

}  // namespace

AdmmState zero_state(const MecGraph& g, Eigen::Index dim) {
  AdmmState s;
  s.w.assign(g.n_nodes, Vector::Zero(dim + 1));
  s.z.assign(2 * g.edges.size(), Vector::Zero(dim + 1));
  s.u.assign(2 * g.edges.size(), Vector::Zero(dim + 1));
  return s;
}

ProxSolution w_update(const MecGraph& g, int node, const AdmmState& s,
                      const Dataset& train, const LossConfig& loss,
                      const AdmmOpts& opts) {
  std::vector<Anchor> anchors;
  const Slots slots = make_slots(g);
  for (const auto& [slot, edge] : slots.incident[node]) {
    (void)edge;
    anchors.push_back({s.z[slot] - s.u[slot], opts.rho});
  }
  return solve_prox_svm(train, loss, anchors, opts.inner);
}

std::pair<Vector, Vector> z_update(const Vector& w_t, const Vector& w_i,
                                   const Vector& u_ti, const Vector& u_it,
                                   double lambda, double a_ti, double rho) {
  if (rho <= 0) throw std::invalid_argument("z_update: rho must be positive");
  const Vector p = w_t + u_ti;
  const Vector q = w_i + u_it;
  const double delta = (p - q).norm();
  if (delta == 0.0) {
    Vector mid = 0.5 * (p + q);
    return {mid, mid};
  }
  const double theta = std::max(0.5, 1.0 - lambda * a_ti / (rho * delta));
  return {theta * p + (1.0 - theta) * q, (1.0 - theta) * p + theta * q};
}

Vector u_update(const Vector& u, const Vector& w, const Vector& z) {
  return u + (w - z);
}

std::pair<double, double> residual_norms(const MecGraph& g, const AdmmState& s,
                                         const std::vector<Vector>& z_prev,
                                         double rho) {
  if (z_prev.size() != s.z.size())
    throw std::invalid_argument("residual_norms: state size mismatch");
  double rp2 = 0.0, rs2 = 0.0;
  for (int slot = 0; slot < static_cast<int>(s.z.size()); ++slot) {
    rp2 += (s.w[slot_node(g, slot)] - s.z[slot]).squaredNorm();
    rs2 += (s.z[slot] - z_prev[slot]).squaredNorm();
  }
  return {std::sqrt(rp2), rho * std::sqrt(rs2)};
}

double network_lasso_objective(const MecGraph& g, const data::ShardSet& shards,
                               const LossConfig& loss, double lambda,
                               const std::vector<Vector>& w) {
  double obj = 0.0;
  for (int t = 0; t < g.n_nodes; ++t)
    obj += prox_objective(w[t], shards.shards[t].train, loss, {});
  for (const auto& e : g.edges)
    obj += lambda * e.weight * (w[e.a] - w[e.b]).norm();
  return obj;
}

AdmmResult solve(const MecGraph& g, const data::ShardSet& shards,
                 const LossConfig& loss, const AdmmOpts& opts,
                 const AdmmState* warm, const EvalHook& eval) {
  check_inputs(g, shards);
  if (opts.rho <= 0) throw std::invalid_argument("netlasso: rho must be positive");
  if (opts.max_iters < 1)
    throw std::invalid_argument("netlasso: max_iters must be >= 1");

  const Eigen::Index d = shards.dim();
  const Eigen::Index D = d + 1;
  const Slots slots = make_slots(g);
  const int n = g.n_nodes;
  const int ne = static_cast<int>(g.edges.size());

  AdmmState s = warm ? *warm : zero_state(g, d);
  if (s.w.size() != static_cast<std::size_t>(n) ||
      s.z.size() != static_cast<std::size_t>(2 * ne) ||
      (n > 0 && s.w[0].size() != D))
    throw std::invalid_argument("netlasso: warm state does not match the problem");

  AdmmResult res;
  std::vector<char> warn(n, 0);
  std::vector<Vector> z_prev;
  const auto t0 = std::chrono::steady_clock::now();

  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    // node phase
    parallel_for(n, opts.exec, [&](int t) {
      std::vector<Anchor> anchors;
      anchors.reserve(slots.incident[t].size());
      for (const auto& [slot, edge] : slots.incident[t]) {
        (void)edge;
        anchors.push_back({s.z[slot] - s.u[slot], opts.rho});
      }
      ProxSolution ps = solve_prox_svm(shards.shards[t].train, loss, anchors,
                                       opts.inner);
      if (!ps.converged) warn[t] = 1;
      s.w[t] = to_augmented(ps.model);
    });

    // edge phase
    z_prev = s.z;
    parallel_for(ne, opts.exec, [&](int e) {
      const auto& edge = g.edges[e];
      auto [za, zb] = z_update(s.w[edge.a], s.w[edge.b], s.u[2 * e], s.u[2 * e + 1],
                               opts.lambda, edge.weight, opts.rho);
      s.z[2 * e] = std::move(za);
      s.z[2 * e + 1] = std::move(zb);
    });

    // dual phase
    parallel_for(ne, opts.exec, [&](int e) {
      const auto& edge = g.edges[e];
      s.u[2 * e] = u_update(s.u[2 * e], s.w[edge.a], s.z[2 * e]);
      s.u[2 * e + 1] = u_update(s.u[2 * e + 1], s.w[edge.b], s.z[2 * e + 1]);
    });

    // residuals and combined absolute/relative tolerances (serial)
    auto [rp, rs] = residual_norms(g, s, z_prev, opts.rho);
    double wnorm2 = 0.0, znorm2 = 0.0;
    for (int slot = 0; slot < slots.count; ++slot) {
      wnorm2 += s.w[slot_node(g, slot)].squaredNorm();
      znorm2 += s.z[slot].squaredNorm();
    }
    std::vector<Vector> dual_sum(n, Vector::Zero(D));
    for (int slot = 0; slot < slots.count; ++slot)
      dual_sum[slot_node(g, slot)] += s.u[slot];
    double unorm2 = 0.0;
    for (int t = 0; t < n; ++t) unorm2 += dual_sum[t].squaredNorm();

    const double dims_pri = std::sqrt(static_cast<double>(slots.count) * D);
    const double dims_dual = std::sqrt(static_cast<double>(n) * D);
    const double eps_pri = dims_pri * opts.eps_abs +
                           opts.eps_rel * std::max(std::sqrt(wnorm2), std::sqrt(znorm2));
    const double eps_dual =
        dims_dual * opts.eps_abs + opts.eps_rel * opts.rho * std::sqrt(unorm2);

    s.iteration += 1;
    s.residual_history.push_back({rp, rs});

    TracePoint tp;
    tp.iter = iter;
    tp.r_primal = rp;
    tp.r_dual = rs;
    tp.objective = network_lasso_objective(g, shards, loss, opts.lambda, s.w);
    tp.rounds = iter;
    tp.wall_ms = std::chrono::duration<double, std::milli>(
                     std::chrono::steady_clock::now() - t0)
                     .count();
    if (eval) {
      std::vector<LinearModel> models;
      models.reserve(n);
      for (int t = 0; t < n; ++t) models.push_back(from_augmented(s.w[t]));
      tp.accuracy = eval(iter, models);
    }
    res.trace.points.push_back(tp);

    if (rp <= eps_pri && rs <= eps_dual) {
      res.converged = true;
      break;
    }
  }

  res.trace.converged = res.converged;
  res.inner_warning = std::any_of(warn.begin(), warn.end(), [](char c) { return c; });
  res.models.reserve(n);
  for (int t = 0; t < n; ++t) res.models.push_back(from_augmented(s.w[t]));
  res.state = std::move(s);
  return res;
}

std::vector<PathEntry> regularization_path(const MecGraph& g,
                                           const data::ShardSet& shards,
                                           const LossConfig& loss,
                                           const std::vector<double>& lambdas,
                                           const AdmmOpts& opts,
                                           const EvalHook& eval) {
  if (lambdas.empty())
    throw std::invalid_argument("regularization_path: empty lambda grid");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (lambdas[i] < 0)
      throw std::invalid_argument("regularization_path: negative lambda");
    if (i > 0 && lambdas[i] <= lambdas[i - 1])
      throw std::invalid_argument(
          "regularization_path: lambdas must be strictly increasing");
  }

  std::vector<PathEntry> out;
  AdmmState warm;
  long cumulative = 0;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    AdmmOpts o = opts;
    o.lambda = lambdas[i];
    AdmmResult r = solve(g, shards, loss, o, i == 0 ? nullptr : &warm, eval);
    cumulative += static_cast<long>(r.trace.points.size());
    PathEntry e;
    e.lambda = lambdas[i];
    e.models = r.models;
    e.trace = std::move(r.trace);
    e.rounds = static_cast<int>(e.trace.points.size());
    e.cumulative_rounds = cumulative;
    e.converged = r.converged;
    warm = std::move(r.state);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<int> extract_clusters(const std::vector<LinearModel>& models,
                                  const MecGraph& g, double tol) {
  if (tol <= 0) throw std::invalid_argument("extract_clusters: tol must be > 0");
  if (static_cast<int>(models.size()) != g.n_nodes)
    throw std::invalid_argument("extract_clusters: one model per node required");

  std::vector<int> parent(g.n_nodes);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (const auto& e : g.edges) {
    const Vector diff = to_augmented(models[e.a]) - to_augmented(models[e.b]);
    if (diff.norm() <= tol) {
      const int ra = find(e.a), rb = find(e.b);
      if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
    }
  }
  std::vector<int> label(g.n_nodes, -1);
  int next = 0;
  for (int t = 0; t < g.n_nodes; ++t) {
    const int r = find(t);
    if (label[r] < 0) label[r] = next++;
    label[t] = label[r];
  }
  return label;
}

}  // namespace mecmtl::netlasso
