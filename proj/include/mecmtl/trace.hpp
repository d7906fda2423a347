#pragma once

#include "mecmtl/model.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace mecmtl {

/// One outer iteration of an iterative strategy. Fields that do not apply
/// (r_* for Mocha, gap for the network solver, unsampled accuracy) stay NaN
/// and render as empty CSV cells.
struct TracePoint {
  int iter = 0;
  double r_primal = std::numeric_limits<double>::quiet_NaN();
  double r_dual = std::numeric_limits<double>::quiet_NaN();
  double gap = std::numeric_limits<double>::quiet_NaN();
  double objective = std::numeric_limits<double>::quiet_NaN();
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  int rounds = 0;     // cumulative communication rounds, one per iteration
  double wall_ms = 0.0;
};

struct ConvergenceTrace {
  std::vector<TracePoint> points;
  bool converged = false;

  // columns: iter,r_p,r_s,gap,objective,accuracy,rounds,wall_ms
  std::string to_csv() const;
  void write_csv(const std::string& path) const;
};

/// Called after each round with the current per-node models; returns the
/// sampled metric (macro test accuracy in the harness) or NaN to skip.
using EvalHook = std::function<double(int round, const std::vector<LinearModel>&)>;

}  // namespace mecmtl
