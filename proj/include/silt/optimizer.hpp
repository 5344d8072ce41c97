// Adam with bias correction, plus global-norm gradient clipping. A step with
// all-zero gradients and fresh state leaves the parameters unchanged.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "silt/tensor.hpp"

namespace silt {

struct Adam {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t t = 0;
  std::vector<std::vector<double>> m, v;  // one slot per tensor, params.all() order

  void init(ModelParams& params) {
    m.clear();
    v.clear();
    for (Tensor* tensor : params.all()) {
      m.emplace_back(tensor->size(), 0.0);
      v.emplace_back(tensor->size(), 0.0);
    }
    t = 0;
  }

  void step(ModelParams& params, double lr) {
    auto tensors = params.all();
    if (m.size() != tensors.size()) init(params);
    ++t;
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t ti = 0; ti < tensors.size(); ++ti) {
      Tensor* tensor = tensors[ti];
      auto& mt = m[ti];
      auto& vt = v[ti];
      for (std::size_t i = 0; i < tensor->size(); ++i) {
        double g = tensor->g[i];
        mt[i] = beta1 * mt[i] + (1.0 - beta1) * g;
        vt[i] = beta2 * vt[i] + (1.0 - beta2) * g * g;
        double mhat = mt[i] / bc1;
        double vhat = vt[i] / bc2;
        tensor->v[i] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }
};

// Scales gradients so their global L2 norm is at most max_norm; returns the
// norm before clipping.
inline double clip_global_norm(ModelParams& params, double max_norm) {
  double sq = 0.0;
  for (Tensor* t : params.all())
    for (double g : t->g) sq += g * g;
  double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    double scale = max_norm / norm;
    for (Tensor* t : params.all())
      for (double& g : t->g) g *= scale;
  }
  return norm;
}

}  // namespace silt
