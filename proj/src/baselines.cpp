#include "mecmtl/baselines.hpp"

#include "mecmtl/csv.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace mecmtl::baselines {

LocalResult train_local(const data::ShardSet& shards, const LossConfig& loss,
                        const InnerSolveOpts& inner, const ExecPolicy& exec) {
  if (shards.shards.empty()) throw std::invalid_argument("train_local: no shards");
  const int n = static_cast<int>(shards.shards.size());
  LocalResult out;
  out.models.resize(n);
  std::vector<char> ok(n, 1);
  parallel_for(n, exec, [&](int t) {
    ProxSolution ps = solve_prox_svm(shards.shards[t].train, loss, {}, inner);
    out.models[t] = std::move(ps.model);
    ok[t] = ps.converged ? 1 : 0;
  });
  out.all_converged = std::all_of(ok.begin(), ok.end(), [](char c) { return c; });
  return out;
}

GlobalResult train_global(const data::ShardSet& shards, const LossConfig& loss,
                          const InnerSolveOpts& inner) {
  if (shards.shards.empty()) throw std::invalid_argument("train_global: no shards");
  Dataset pool;
  for (const auto& ns : shards.shards)
    for (const auto& s : ns.train.samples) pool.add(s.features, s.label);
  // canonical sample order: the result depends only on the pooled multiset
  std::sort(pool.samples.begin(), pool.samples.end(),
            [](const LabeledSample& a, const LabeledSample& b) {
              if (a.label != b.label) return a.label < b.label;
              return std::lexicographical_compare(
                  a.features.begin(), a.features.end(), b.features.begin(),
                  b.features.end());
            });
  ProxSolution ps = solve_prox_svm(pool, loss, {}, inner);
  return {std::move(ps.model), ps.converged};
}

void write_models_csv(const std::string& path,
                      const std::vector<LinearModel>& per_node,
                      const LinearModel* global_model) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_models_csv: cannot open " + path);
  const Eigen::Index d =
      !per_node.empty() ? per_node.front().weights.size()
                        : (global_model ? global_model->weights.size() : 0);
  out << "node_id,bias";
  for (Eigen::Index j = 0; j < d; ++j) out << ",w_" << j;
  out << '\n';
  auto row = [&](const std::string& id, const LinearModel& m) {
    out << id << ',' << csv::format_double(m.bias);
    for (Eigen::Index j = 0; j < m.weights.size(); ++j)
      out << ',' << csv::format_double(m.weights(j));
    out << '\n';
  };
  for (std::size_t t = 0; t < per_node.size(); ++t)
    row(std::to_string(t), per_node[t]);
  if (global_model) row("global", *global_model);
}

}  // namespace mecmtl::baselines
