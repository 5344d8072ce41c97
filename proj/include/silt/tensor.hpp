// Parameter storage. Plain dense 64-bit tensors with a gradient buffer.
#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "silt/common.hpp"
#include "silt/rng.hpp"

namespace silt {

struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> v;
  std::vector<double> g;

  Tensor() = default;
  Tensor(std::string n, std::vector<std::size_t> sh) : name(std::move(n)), shape(std::move(sh)) {
    std::size_t total = 1;
    for (auto d : shape) total *= d;
    v.assign(total, 0.0);
    g.assign(total, 0.0);
  }

  std::size_t size() const { return v.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }
  void zero_grad() { std::fill(g.begin(), g.end(), 0.0); }
};

// DIORA-style parameter set. Compose is a single tanh layer R^{2D} -> R^{D},
// Score a bilinear form R^D x R^D -> R. The inside and outside passes share
// these; the outside recursion is seeded by a learned root vector.
struct ModelParams {
  int dim = 0;
  int vocab_size = 0;

  Tensor embedding;     // |V| x D
  Tensor compose_w;     // D x 2D
  Tensor compose_b;     // D
  Tensor score_w;       // D x D
  Tensor root_outside;  // D
  Tensor out_proj;      // |V| x D

  ModelParams() = default;
  ModelParams(int vocab, int d)
      : dim(d),
        vocab_size(vocab),
        embedding("embedding", {static_cast<std::size_t>(vocab), static_cast<std::size_t>(d)}),
        compose_w("compose_w", {static_cast<std::size_t>(d), static_cast<std::size_t>(2 * d)}),
        compose_b("compose_b", {static_cast<std::size_t>(d)}),
        score_w("score_w", {static_cast<std::size_t>(d), static_cast<std::size_t>(d)}),
        root_outside("root_outside", {static_cast<std::size_t>(d)}),
        out_proj("out_proj", {static_cast<std::size_t>(vocab), static_cast<std::size_t>(d)}) {}

  std::vector<Tensor*> all() {
    return {&embedding, &compose_w, &compose_b, &score_w, &root_outside, &out_proj};
  }
  std::vector<const Tensor*> all() const {
    return {&embedding, &compose_w, &compose_b, &score_w, &root_outside, &out_proj};
  }

  // uniform(-0.1, 0.1), biases zero; fill order is fixed so runs reproduce.
  void init(std::uint64_t seed) {
    Rng rng = Rng(seed).derive("param-init");
    for (Tensor* t : all()) {
      if (t == &compose_b) {
        std::fill(t->v.begin(), t->v.end(), 0.0);
        continue;
      }
      for (double& x : t->v) x = rng.uniform(-0.1, 0.1);
    }
    zero_grad();
  }

  void zero_grad() {
    for (Tensor* t : all()) t->zero_grad();
  }

  std::size_t total_params() const {
    std::size_t n = 0;
    for (const Tensor* t : all()) n += t->size();
    return n;
  }
};

}  // namespace silt
