#include "mecmtl/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mecmtl {

void Dataset::add(Vector features, int label) {
  if (label != 1 && label != -1)
    throw std::invalid_argument("Dataset::add: label must be +1 or -1");
  if (samples.empty())
    dim = features.size();
  else if (features.size() != dim)
    throw std::invalid_argument("Dataset::add: feature dimension mismatch");
  samples.push_back({std::move(features), label});
}

Vector to_augmented(const LinearModel& m) {
  Vector v(m.weights.size() + 1);
  v.head(m.weights.size()) = m.weights;
  v(m.weights.size()) = m.bias;
  return v;
}

LinearModel from_augmented(const Vector& v) {
  if (v.size() < 1) throw std::invalid_argument("from_augmented: empty vector");
  LinearModel m;
  m.weights = v.head(v.size() - 1);
  m.bias = v(v.size() - 1);
  return m;
}

Prediction predict(const LinearModel& model, const LabeledSample& sample) {
  if (model.weights.size() != sample.features.size())
    throw std::invalid_argument("predict: dimension mismatch");
  const double margin = model.weights.dot(sample.features) + model.bias;
  return {margin >= 0.0 ? 1 : -1, margin};
}

double hinge_objective(const LinearModel& model, const Dataset& data,
                       const LossConfig& cfg) {
  if (data.empty()) throw std::invalid_argument("hinge_objective: empty dataset");
  if (model.weights.size() != data.dim)
    throw std::invalid_argument("hinge_objective: dimension mismatch");
  double loss = 0.0;
  for (const auto& s : data.samples) {
    const double m = s.label * (model.weights.dot(s.features) + model.bias);
    loss += std::max(0.0, 1.0 - m);
  }
  loss /= static_cast<double>(data.size());
  loss += 0.5 * cfg.l2 * (model.weights.squaredNorm() + model.bias * model.bias);
  return loss;
}

Vector hinge_subgradient(const LinearModel& model, const Dataset& data,
                         const LossConfig& cfg) {
  if (data.empty()) throw std::invalid_argument("hinge_subgradient: empty dataset");
  if (model.weights.size() != data.dim)
    throw std::invalid_argument("hinge_subgradient: dimension mismatch");
  const Eigen::Index d = data.dim;
  Vector g = Vector::Zero(d + 1);
  for (const auto& s : data.samples) {
    const double m = s.label * (model.weights.dot(s.features) + model.bias);
    if (m < 1.0) {  // margin exactly 1 takes the zero branch
      g.head(d) -= s.label * s.features;
      g(d) -= s.label;
    }
  }
  g /= static_cast<double>(data.size());
  g.head(d) += cfg.l2 * model.weights;
  g(d) += cfg.l2 * model.bias;
  return g;
}

double accuracy(const LinearModel& model, const Dataset& data) {
  if (data.empty()) throw std::invalid_argument("accuracy: empty dataset");
  std::size_t correct = 0;
  for (const auto& s : data.samples)
    if (predict(model, s).label == s.label) ++correct;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

double prox_objective(const Vector& v, const Dataset& data, const LossConfig& cfg,
                      const std::vector<Anchor>& anchors) {
  const Eigen::Index d = data.dim;
  double obj = 0.0;
  for (const auto& s : data.samples) {
    const double m = s.label * (v.head(d).dot(s.features) + v(d));
    obj += std::max(0.0, 1.0 - m);
  }
  obj /= static_cast<double>(data.size());
  obj += 0.5 * cfg.l2 * v.squaredNorm();
  for (const auto& a : anchors) obj += 0.5 * a.weight * (v - a.center).squaredNorm();
  return obj;
}

namespace {

// Dual value at alpha with v = vbar + (1/mu) * sum_i alpha_i y_i x~_i:
//   D = sum(alpha) - mu*<vbar, v - vbar> - (mu/2)|v - vbar|^2 + k0.
double dual_value(const Vector& v, const Vector& vbar, double mu, double alpha_sum,
                  double k0) {
  const Vector u = v - vbar;
  return alpha_sum - mu * vbar.dot(u) - 0.5 * mu * u.squaredNorm() + k0;
}

}  // namespace

ProxSolution solve_prox_svm(const Dataset& data, const LossConfig& cfg,
                            const std::vector<Anchor>& anchors,
                            const InnerSolveOpts& opts) {
  if (data.empty()) throw std::invalid_argument("solve_prox_svm: empty dataset");
  if (cfg.l2 < 0) throw std::invalid_argument("solve_prox_svm: negative l2");
  const Eigen::Index d = data.dim;
  const Eigen::Index D = d + 1;

  double mu = cfg.l2;
  Vector pull = Vector::Zero(D);
  double anchor_sq = 0.0;
  for (const auto& a : anchors) {
    if (a.weight < 0)
      throw std::invalid_argument("solve_prox_svm: negative anchor weight");
    if (a.center.size() != D)
      throw std::invalid_argument("solve_prox_svm: anchor dimension mismatch");
    mu += a.weight;
    pull += a.weight * a.center;
    anchor_sq += a.weight * a.center.squaredNorm();
  }
  if (mu <= 0.0)
    throw std::invalid_argument(
        "solve_prox_svm: needs l2 > 0 or a positive-weight anchor");

  const Vector vbar = pull / mu;
  const double k0 = 0.5 * anchor_sq - 0.5 * mu * vbar.squaredNorm();

  const int n = static_cast<int>(data.size());
  const double cap = 1.0 / static_cast<double>(n);
  std::vector<double> sqnorm(n);
  for (int i = 0; i < n; ++i)
    sqnorm[i] = data.samples[i].features.squaredNorm() + 1.0;

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Vector v = vbar;
  double best_obj = prox_objective(v, data, cfg, anchors);
  Vector best_v = v;
  double gap = std::numeric_limits<double>::infinity();
  int pass = 0;

  for (pass = 1; pass <= opts.max_iters; ++pass) {
    for (int i = 0; i < n; ++i) {
      const auto& s = data.samples[i];
      const double margin = v.head(d).dot(s.features) + v(d);
      const double grad = 1.0 - s.label * margin;
      const double next = std::clamp(alpha(i) + mu * grad / sqnorm[i], 0.0, cap);
      const double delta = next - alpha(i);
      if (delta != 0.0) {
        alpha(i) = next;
        const double c = delta * s.label / mu;
        v.head(d) += c * s.features;
        v(d) += c;
      }
    }
    // refresh v from alpha so accumulated drift never limits the gap
    Vector acc = Vector::Zero(D);
    for (int i = 0; i < n; ++i) {
      if (alpha(i) == 0.0) continue;
      const auto& s = data.samples[i];
      acc.head(d) += alpha(i) * s.label * s.features;
      acc(d) += alpha(i) * s.label;
    }
    v = vbar + acc / mu;

    const double primal = prox_objective(v, data, cfg, anchors);
    if (primal < best_obj) {
      best_obj = primal;
      best_v = v;
    }
    gap = primal - dual_value(v, vbar, mu, alpha.sum(), k0);
    if (gap <= opts.tol) break;
  }

  ProxSolution out;
  out.converged = gap <= opts.tol;
  out.passes = std::min(pass, opts.max_iters);
  out.gap = gap;
  out.model = from_augmented(out.converged ? v : best_v);
  return out;
}

}  // namespace mecmtl
