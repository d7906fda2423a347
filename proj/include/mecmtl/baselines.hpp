#pragma once

#include "mecmtl/data.hpp"
#include "mecmtl/model.hpp"
#include "mecmtl/parallel.hpp"

#include <string>
#include <vector>

namespace mecmtl::baselines {

struct LocalResult {
  std::vector<LinearModel> models;
  bool all_converged = true;
};

/// One isolated prox-SVM solve per node, no coupling.
LocalResult train_local(const data::ShardSet& shards, const LossConfig& loss,
                        const InnerSolveOpts& inner, const ExecPolicy& exec);

struct GlobalResult {
  LinearModel model;
  bool converged = true;
};

/// Single solve over the pooled train shards. The pool is sorted into a
/// canonical sample order first, so the result depends only on the multiset.
GlobalResult train_global(const data::ShardSet& shards, const LossConfig& loss,
                          const InnerSolveOpts& inner);

/// Rows "node_id,bias,w_0,...,w_{d-1}"; the pooled model uses id "global".
void write_models_csv(const std::string& path,
                      const std::vector<LinearModel>& per_node,
                      const LinearModel* global_model = nullptr);

}  // namespace mecmtl::baselines
