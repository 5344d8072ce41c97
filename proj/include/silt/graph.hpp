// Reverse-mode tape over the handful of ops the chart needs. Node values live
// in one arena that is reused across sentences; parameter nodes alias tensor
// storage directly so binding them costs nothing. Gradients are accumulated
// into a per-tape arena on backward() and flushed into a grad sink at the end,
// which lets independent sentences run on separate tapes and be reduced in a
// fixed order.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "silt/common.hpp"
#include "silt/tensor.hpp"

namespace silt {

using NodeId = int;

// Where parameter gradients land. Default: the tensor's own .g buffer.
struct GradSink {
  virtual ~GradSink() = default;
  virtual double* grad_base(Tensor& t) { return t.g.data(); }
};

class Tape {
 public:
  explicit Tape(GradSink* sink = nullptr) : sink_(sink ? sink : &default_sink_) {}

  void reset() {
    nodes_.clear();
    vals_.clear();
    args_.clear();
    coefs_.clear();
    param_cache_.clear();
    grad_bytes_ = 0;
  }

  int num_nodes() const { return static_cast<int>(nodes_.size()); }

  std::span<const double> val(NodeId id) const {
    const Node& n = nodes_[id];
    const double* base = n.ext_val ? n.ext_val : vals_.data() + n.voff;
    return {base, static_cast<std::size_t>(n.len)};
  }

  double scalar(NodeId id) const { return val(id)[0]; }

  // --- node constructors -------------------------------------------------

  NodeId param(Tensor& t) { return param_slice(t, 0, t.size()); }

  NodeId param_slice(Tensor& t, std::size_t off, std::size_t len) {
    const double* base = t.v.data() + off;
    auto it = param_cache_.find(base);
    if (it != param_cache_.end()) return it->second;
    Node n{};
    n.kind = Kind::Param;
    n.len = static_cast<int>(len);
    n.ext_val = base;
    n.ext_grad = sink_->grad_base(t) + off;
    n.goff = alloc_grad(n.len);
    NodeId id = push(n);
    param_cache_.emplace(base, id);
    return id;
  }

  NodeId constant(std::span<const double> xs) {
    Node n{};
    n.kind = Kind::Const;
    n.len = static_cast<int>(xs.size());
    n.voff = alloc_vals(n.len);
    n.goff = alloc_grad(n.len);
    std::memcpy(vals_.data() + n.voff, xs.data(), xs.size() * sizeof(double));
    return push(n);
  }

  NodeId constant1(double x) { return constant(std::span<const double>(&x, 1)); }

  // tanh(W [l; r] + b) with W of shape D x 2D.
  NodeId compose(NodeId w, NodeId b, NodeId l, NodeId r) {
    int d = nodes_[l].len;
    if (nodes_[r].len != d || nodes_[b].len != d || nodes_[w].len != 2 * d * d)
      throw NumericError("compose: dimension mismatch");
    Node n = make(Kind::Compose, d, {w, b, l, r});
    auto W = val(w);
    auto B = val(b);
    auto L = val(l);
    auto R = val(r);
    double* out = vals_.data() + n.voff;
    for (int i = 0; i < d; ++i) {
      const double* row = W.data() + static_cast<std::size_t>(i) * 2 * d;
      double z = B[i];
      for (int c = 0; c < d; ++c) z += row[c] * L[c];
      for (int c = 0; c < d; ++c) z += row[d + c] * R[c];
      out[i] = std::tanh(z);
    }
    return finish(n, "compose");
  }

  // l^T S r with S of shape D x D.
  NodeId bilinear(NodeId s, NodeId l, NodeId r) {
    int d = nodes_[l].len;
    if (nodes_[r].len != d || nodes_[s].len != d * d)
      throw NumericError("bilinear: dimension mismatch");
    Node n = make(Kind::Bilinear, 1, {s, l, r});
    auto S = val(s);
    auto L = val(l);
    auto R = val(r);
    double acc = 0.0;
    for (int p = 0; p < d; ++p) {
      const double* row = S.data() + static_cast<std::size_t>(p) * d;
      double rowdot = 0.0;
      for (int q = 0; q < d; ++q) rowdot += row[q] * R[q];
      acc += L[p] * rowdot;
    }
    vals_[n.voff] = acc;
    return finish(n, "bilinear");
  }

  NodeId stack(std::span<const NodeId> scalars) {
    Node n = make(Kind::Stack, static_cast<int>(scalars.size()), scalars);
    for (std::size_t k = 0; k < scalars.size(); ++k)
      vals_[n.voff + k] = scalar(scalars[k]);
    return finish(n, "stack");
  }

  // Shift-invariant softmax (max subtracted before exponentiation).
  NodeId softmax(NodeId x) {
    int k = nodes_[x].len;
    Node n = make(Kind::Softmax, k, {x});
    auto X = val(x);
    double m = X[0];
    for (int i = 1; i < k; ++i) m = std::max(m, X[i]);
    double z = 0.0;
    for (int i = 0; i < k; ++i) {
      vals_[n.voff + i] = std::exp(X[i] - m);
      z += vals_[n.voff + i];
    }
    for (int i = 0; i < k; ++i) vals_[n.voff + i] /= z;
    return finish(n, "softmax");
  }

  // sum_k w_k * part_k; parts must share one length.
  NodeId mix(NodeId weights, std::span<const NodeId> parts) {
    if (nodes_[weights].len != static_cast<int>(parts.size()))
      throw NumericError("mix: weight count mismatch");
    int len = nodes_[parts[0]].len;
    std::vector<NodeId> args;
    args.reserve(parts.size() + 1);
    args.push_back(weights);
    for (NodeId p : parts) {
      if (nodes_[p].len != len) throw NumericError("mix: part length mismatch");
      args.push_back(p);
    }
    Node n = make(Kind::Mix, len, args);
    auto W = val(weights);
    double* out = vals_.data() + n.voff;
    std::fill(out, out + len, 0.0);
    for (std::size_t k = 0; k < parts.size(); ++k) {
      auto P = val(parts[k]);
      for (int i = 0; i < len; ++i) out[i] += W[k] * P[i];
    }
    return finish(n, "mix");
  }

  NodeId matvec(NodeId w, NodeId x) {
    int c = nodes_[x].len;
    if (nodes_[w].len % c != 0) throw NumericError("matvec: dimension mismatch");
    int r = nodes_[w].len / c;
    Node n = make(Kind::MatVec, r, {w, x});
    auto W = val(w);
    auto X = val(x);
    for (int i = 0; i < r; ++i) {
      const double* row = W.data() + static_cast<std::size_t>(i) * c;
      double acc = 0.0;
      for (int j = 0; j < c; ++j) acc += row[j] * X[j];
      vals_[n.voff + i] = acc;
    }
    return finish(n, "matvec");
  }

  // -log softmax(logits)[target]
  NodeId nll_pick(NodeId logits, int target) {
    int k = nodes_[logits].len;
    if (target < 0 || target >= k) throw NumericError("nll_pick: target out of range");
    Node n = make(Kind::NllPick, 1, {logits});
    n.aux = target;
    auto X = val(logits);
    double m = X[0];
    for (int i = 1; i < k; ++i) m = std::max(m, X[i]);
    double z = 0.0;
    for (int i = 0; i < k; ++i) z += std::exp(X[i] - m);
    vals_[n.voff] = m + std::log(z) - X[target];
    return finish(n, "nll_pick");
  }

  // bias + sum_i coef_i * x_i over scalar nodes; empty coefs means all ones.
  NodeId comb(std::span<const NodeId> xs, std::span<const double> coefs = {}, double bias = 0.0) {
    Node n = make(Kind::Comb, 1, xs);
    n.bias = bias;
    if (!coefs.empty()) {
      if (coefs.size() != xs.size()) throw NumericError("comb: coef count mismatch");
      n.coef_off = static_cast<int>(coefs_.size());
      coefs_.insert(coefs_.end(), coefs.begin(), coefs.end());
    }
    double acc = bias;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double c = n.coef_off < 0 ? 1.0 : coefs_[n.coef_off + i];
      acc += c * scalar(xs[i]);
    }
    vals_[n.voff] = acc;
    return finish(n, "comb");
  }

  NodeId comb(std::initializer_list<NodeId> xs, std::initializer_list<double> coefs = {},
              double bias = 0.0) {
    std::vector<NodeId> xv(xs);
    std::vector<double> cv(coefs);
    return comb(std::span<const NodeId>(xv), std::span<const double>(cv), bias);
  }

  NodeId relu(NodeId x) {
    Node n = make(Kind::Relu, 1, {x});
    vals_[n.voff] = std::max(0.0, scalar(x));
    return finish(n, "relu");
  }

  // --- backward ----------------------------------------------------------

  void backward(NodeId root, double seed = 1.0) {
    grads_.assign(grad_bytes_, 0.0);
    grads_[nodes_[root].goff] = seed;
    for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) backward_node(id);
    for (const Node& n : nodes_)
      if (n.kind == Kind::Param)
        for (int i = 0; i < n.len; ++i) n.ext_grad[i] += grads_[n.goff + i];
  }

  std::span<const double> grad(NodeId id) const {
    const Node& n = nodes_[id];
    return {grads_.data() + n.goff, static_cast<std::size_t>(n.len)};
  }

 private:
  enum class Kind { Param, Const, Compose, Bilinear, Stack, Softmax, Mix, MatVec, NllPick, Comb, Relu };

  struct Node {
    Kind kind;
    int len = 0;
    int voff = -1;               // arena value offset; -1 when ext_val set
    int goff = -1;               // arena gradient offset
    const double* ext_val = nullptr;
    double* ext_grad = nullptr;  // Param only
    int args_off = 0, n_args = 0;
    int coef_off = -1;
    double bias = 0.0;
    int aux = 0;
  };

  int alloc_vals(int len) {
    int off = static_cast<int>(vals_.size());
    vals_.resize(vals_.size() + len);
    return off;
  }

  int alloc_grad(int len) {
    int off = grad_bytes_;
    grad_bytes_ += len;
    return off;
  }

  Node make(Kind kind, int len, std::span<const NodeId> args) {
    Node n{};
    n.kind = kind;
    n.len = len;
    n.voff = alloc_vals(len);
    n.goff = alloc_grad(len);
    n.args_off = static_cast<int>(args_.size());
    n.n_args = static_cast<int>(args.size());
    args_.insert(args_.end(), args.begin(), args.end());
    return n;
  }

  Node make(Kind kind, int len, std::initializer_list<NodeId> args) {
    return make(kind, len, std::span<const NodeId>(args.begin(), args.size()));
  }

  NodeId finish(Node& n, const char* op) {
    const double* base = vals_.data() + n.voff;
    for (int i = 0; i < n.len; ++i)
      if (!std::isfinite(base[i]))
        throw NumericError(std::string("non-finite value out of ") + op);
    return push(n);
  }

  NodeId push(const Node& n) {
    nodes_.push_back(n);
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  int arg(const Node& n, int i) const { return args_[n.args_off + i]; }

  double* gptr(NodeId id) { return grads_.data() + nodes_[id].goff; }

  void backward_node(int id) {
    const Node& n = nodes_[id];
    const double* gout = grads_.data() + n.goff;
    switch (n.kind) {
      case Kind::Param:
      case Kind::Const:
        return;
      case Kind::Compose: {
        int d = n.len;
        auto W = val(arg(n, 0));
        auto L = val(arg(n, 2));
        auto R = val(arg(n, 3));
        auto out = val(id);
        double* gW = gptr(arg(n, 0));
        double* gB = gptr(arg(n, 1));
        double* gL = gptr(arg(n, 2));
        double* gR = gptr(arg(n, 3));
        for (int i = 0; i < d; ++i) {
          double dz = gout[i] * (1.0 - out[i] * out[i]);
          if (dz == 0.0) continue;
          const double* row = W.data() + static_cast<std::size_t>(i) * 2 * d;
          double* gRow = gW + static_cast<std::size_t>(i) * 2 * d;
          gB[i] += dz;
          for (int c = 0; c < d; ++c) {
            gRow[c] += dz * L[c];
            gRow[d + c] += dz * R[c];
            gL[c] += row[c] * dz;
            gR[c] += row[d + c] * dz;
          }
        }
        return;
      }
      case Kind::Bilinear: {
        double g = gout[0];
        if (g == 0.0) return;
        auto S = val(arg(n, 0));
        auto L = val(arg(n, 1));
        auto R = val(arg(n, 2));
        int d = static_cast<int>(L.size());
        double* gS = gptr(arg(n, 0));
        double* gL = gptr(arg(n, 1));
        double* gR = gptr(arg(n, 2));
        for (int p = 0; p < d; ++p) {
          const double* row = S.data() + static_cast<std::size_t>(p) * d;
          double* gRow = gS + static_cast<std::size_t>(p) * d;
          double rowdot = 0.0;
          for (int q = 0; q < d; ++q) {
            gRow[q] += g * L[p] * R[q];
            gR[q] += g * row[q] * L[p];
            rowdot += row[q] * R[q];
          }
          gL[p] += g * rowdot;
        }
        return;
      }
      case Kind::Stack: {
        for (int k = 0; k < n.n_args; ++k) gptr(arg(n, k))[0] += gout[k];
        return;
      }
      case Kind::Softmax: {
        auto A = val(id);
        int k = n.len;
        double dot = 0.0;
        for (int i = 0; i < k; ++i) dot += A[i] * gout[i];
        double* gX = gptr(arg(n, 0));
        for (int i = 0; i < k; ++i) gX[i] += A[i] * (gout[i] - dot);
        return;
      }
      case Kind::Mix: {
        auto W = val(arg(n, 0));
        double* gW = gptr(arg(n, 0));
        for (int k = 1; k < n.n_args; ++k) {
          auto P = val(arg(n, k));
          double* gP = gptr(arg(n, k));
          double dot = 0.0;
          for (int i = 0; i < n.len; ++i) {
            dot += gout[i] * P[i];
            gP[i] += W[k - 1] * gout[i];
          }
          gW[k - 1] += dot;
        }
        return;
      }
      case Kind::MatVec: {
        auto W = val(arg(n, 0));
        auto X = val(arg(n, 1));
        int c = static_cast<int>(X.size());
        double* gW = gptr(arg(n, 0));
        double* gX = gptr(arg(n, 1));
        for (int i = 0; i < n.len; ++i) {
          double g = gout[i];
          if (g == 0.0) continue;
          const double* row = W.data() + static_cast<std::size_t>(i) * c;
          double* gRow = gW + static_cast<std::size_t>(i) * c;
          for (int j = 0; j < c; ++j) {
            gRow[j] += g * X[j];
            gX[j] += row[j] * g;
          }
        }
        return;
      }
      case Kind::NllPick: {
        double g = gout[0];
        if (g == 0.0) return;
        auto X = val(arg(n, 0));
        int k = static_cast<int>(X.size());
        double m = X[0];
        for (int i = 1; i < k; ++i) m = std::max(m, X[i]);
        double z = 0.0;
        for (int i = 0; i < k; ++i) z += std::exp(X[i] - m);
        double* gX = gptr(arg(n, 0));
        for (int i = 0; i < k; ++i) gX[i] += g * std::exp(X[i] - m) / z;
        gX[n.aux] -= g;
        return;
      }
      case Kind::Comb: {
        double g = gout[0];
        for (int i = 0; i < n.n_args; ++i) {
          double c = n.coef_off < 0 ? 1.0 : coefs_[n.coef_off + i];
          gptr(arg(n, i))[0] += c * g;
        }
        return;
      }
      case Kind::Relu: {
        if (scalar(arg(n, 0)) > 0.0) gptr(arg(n, 0))[0] += gout[0];
        return;
      }
    }
  }

  GradSink default_sink_;
  GradSink* sink_;
  std::vector<Node> nodes_;
  std::vector<double> vals_;
  std::vector<double> grads_;
  std::vector<int> args_;
  std::vector<double> coefs_;
  std::unordered_map<const double*, NodeId> param_cache_;
  int grad_bytes_ = 0;
};

// ---------------------------------------------------------------------------
// Finite-difference checker. compute(true) must evaluate the loss AND
// accumulate analytic gradients into each tensor's .g (which the checker
// zeroes first); compute(false) must return the loss value only. Central
// differences per coordinate.
struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t n_checked = 0;

  bool pass(double tol) const { return max_rel_err < tol; }
};

inline GradCheckReport grad_check(std::vector<Tensor*> params,
                                  const std::function<double(bool)>& compute,
                                  double eps = 1e-5) {
  for (Tensor* t : params) t->zero_grad();
  compute(true);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (Tensor* t : params) analytic.push_back(t->g);

  GradCheckReport rep;
  for (std::size_t ti = 0; ti < params.size(); ++ti) {
    Tensor* t = params[ti];
    for (std::size_t i = 0; i < t->size(); ++i) {
      double saved = t->v[i];
      t->v[i] = saved + eps;
      double fp = compute(false);
      t->v[i] = saved - eps;
      double fm = compute(false);
      t->v[i] = saved;
      double numeric = (fp - fm) / (2.0 * eps);
      double a = analytic[ti][i];
      double scale = std::max({1.0, std::fabs(a), std::fabs(numeric)});
      double err = std::fabs(a - numeric) / scale;
      ++rep.n_checked;
      if (err > rep.max_rel_err) {
        rep.max_rel_err = err;
        rep.worst_tensor = t->name;
        rep.worst_index = i;
        rep.worst_analytic = a;
        rep.worst_numeric = numeric;
      }
    }
  }
  return rep;
}

}  // namespace silt
