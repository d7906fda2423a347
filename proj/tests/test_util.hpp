#pragma once

#include "mecmtl/model.hpp"

#include <random>
#include <vector>

namespace testutil {

using mecmtl::Dataset;
using mecmtl::LinearModel;
using mecmtl::Vector;

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline Vector random_vector(std::mt19937_64& r, int d, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Vector v(d);
  for (int j = 0; j < d; ++j) v(j) = g(r);
  return v;
}

inline LinearModel random_model(std::mt19937_64& r, int d, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  LinearModel m;
  m.weights = random_vector(r, d, scale);
  m.bias = g(r);
  return m;
}

inline Dataset random_dataset(std::mt19937_64& r, int n, int d) {
  std::bernoulli_distribution coin(0.5);
  Dataset out;
  for (int i = 0; i < n; ++i)
    out.add(random_vector(r, d), coin(r) ? 1 : -1);
  return out;
}

/// Linearly separable-ish dataset with labels from a random ground truth.
inline Dataset labeled_by_model(std::mt19937_64& r, int n, int d) {
  const Vector w = random_vector(r, d).normalized();
  Dataset out;
  for (int i = 0; i < n; ++i) {
    Vector x = random_vector(r, d);
    out.add(x, w.dot(x) >= 0 ? 1 : -1);
  }
  return out;
}

}  // namespace testutil
