// Inside-outside chart encoder.
//
// Inside, for every span (i,j) of width >= 2 and split i < k < j:
//   h_in(i,j,k) = compose(h_in(i,k), h_in(k,j))
//   s_in(i,j,k) = score(h_in(i,k), h_in(k,j)) + s_in(i,k) + s_in(k,j)
//   a(i,j,.)    = softmax_k s_in(i,j,.)
//   h_in(i,j)   = sum_k a(i,j,k) h_in(i,j,k),  s_in(i,j) = sum_k a(i,j,k) s_in(i,j,k)
// Leaves: h_in(i,i+1) = embedding(token_i), s_in = 0.
//
// Outside, from the root down, a span (i,j) aggregates one contribution per
// parent/sibling configuration: parents (i,m) with sibling (j,m) on the right,
// and parents (m,j) with sibling (m,i) on the left. Each contributes
//   compose(h_in(sib), h_out(parent)) scored by
//   score(h_in(sib), h_out(parent)) + s_in(sib) + s_out(parent),
// normalized across all contributions by softmax. The root outside vector is
// the learned parameter root_outside with s_out = 0.
#pragma once

#include <vector>

#include "silt/corpus.hpp"
#include "silt/graph.hpp"
#include "silt/tensor.hpp"

namespace silt {

constexpr int kDefaultMaxLen = 40;

class Chart {
 public:
  Chart() = default;
  Chart(int n, int dim) : n_(n), dim_(dim) {
    int cells = (n + 1) * (n + 1);
    h_in_.assign(cells, -1);
    s_in_.assign(cells, -1);
    h_out_.assign(cells, -1);
    s_out_.assign(cells, -1);
    a_in_.assign(cells, -1);
    a_out_.assign(cells, -1);
    split_base_.assign(cells, -1);
    int base = 0;
    for (int w = 2; w <= n; ++w)
      for (int i = 0; i + w <= n; ++i) {
        split_base_[idx(i, i + w)] = base;
        base += w - 1;
      }
    split_local_.assign(base, -1);
    split_total_.assign(base, -1);
    split_vec_.assign(base, -1);
  }

  int n() const { return n_; }
  int dim() const { return dim_; }

  // node handles
  NodeId h_in(int i, int j) const { return h_in_[idx(i, j)]; }
  NodeId s_in(int i, int j) const { return s_in_[idx(i, j)]; }
  NodeId h_out(int i, int j) const { return h_out_[idx(i, j)]; }
  NodeId s_out(int i, int j) const { return s_out_[idx(i, j)]; }
  NodeId inside_weights(int i, int j) const { return a_in_[idx(i, j)]; }
  NodeId outside_weights(int i, int j) const { return a_out_[idx(i, j)]; }
  NodeId split_local(int i, int j, int k) const { return split_local_[sidx(i, j, k)]; }
  NodeId split_total(int i, int j, int k) const { return split_total_[sidx(i, j, k)]; }
  NodeId split_vec(int i, int j, int k) const { return split_vec_[sidx(i, j, k)]; }

  bool outside_done() const { return outside_done_; }

  int num_cells() const { return n_ * (n_ + 1) / 2; }
  int num_split_entries() const { return static_cast<int>(split_local_.size()); }

  // setters used by the passes
  void set_h_in(int i, int j, NodeId v) { h_in_[idx(i, j)] = v; }
  void set_s_in(int i, int j, NodeId v) { s_in_[idx(i, j)] = v; }
  void set_h_out(int i, int j, NodeId v) { h_out_[idx(i, j)] = v; }
  void set_s_out(int i, int j, NodeId v) { s_out_[idx(i, j)] = v; }
  void set_inside_weights(int i, int j, NodeId v) { a_in_[idx(i, j)] = v; }
  void set_outside_weights(int i, int j, NodeId v) { a_out_[idx(i, j)] = v; }
  void set_split_local(int i, int j, int k, NodeId v) { split_local_[sidx(i, j, k)] = v; }
  void set_split_total(int i, int j, int k, NodeId v) { split_total_[sidx(i, j, k)] = v; }
  void set_split_vec(int i, int j, int k, NodeId v) { split_vec_[sidx(i, j, k)] = v; }
  void mark_outside_done() { outside_done_ = true; }

 private:
  int idx(int i, int j) const { return i * (n_ + 1) + j; }
  int sidx(int i, int j, int k) const { return split_base_[idx(i, j)] + (k - i - 1); }

  int n_ = 0;
  int dim_ = 0;
  bool outside_done_ = false;
  std::vector<NodeId> h_in_, s_in_, h_out_, s_out_, a_in_, a_out_;
  std::vector<NodeId> split_local_, split_total_, split_vec_;
  std::vector<int> split_base_;
};

// Test hook: additive offsets on the raw split scores of selected cells,
// used to check softmax shift invariance cell by cell.
struct ScoreOffsets {
  std::map<Span, double> by_cell;
  double at(int i, int j) const {
    auto it = by_cell.find({i, j});
    return it == by_cell.end() ? 0.0 : it->second;
  }
};

inline Chart inside_pass(Tape& tape, ModelParams& params, const std::vector<int>& token_ids,
                         int max_len = kDefaultMaxLen, const ScoreOffsets* offsets = nullptr) {
  int n = static_cast<int>(token_ids.size());
  if (n < 1) throw DataError("inside_pass: empty sentence");
  if (n > max_len)
    throw DataError("inside_pass: sentence length " + std::to_string(n) +
                    " exceeds max length " + std::to_string(max_len));
  int d = params.dim;
  Chart chart(n, d);

  NodeId w = tape.param(params.compose_w);
  NodeId b = tape.param(params.compose_b);
  NodeId s = tape.param(params.score_w);
  NodeId zero = tape.constant1(0.0);

  for (int i = 0; i < n; ++i) {
    int tok = token_ids[i];
    if (tok < 0 || tok >= params.vocab_size) throw DataError("inside_pass: token id out of range");
    chart.set_h_in(i, i + 1, tape.param_slice(params.embedding, static_cast<std::size_t>(tok) * d, d));
    chart.set_s_in(i, i + 1, zero);
  }

  std::vector<NodeId> totals, vecs;
  for (int width = 2; width <= n; ++width) {
    for (int i = 0; i + width <= n; ++i) {
      int j = i + width;
      totals.clear();
      vecs.clear();
      double off = offsets ? offsets->at(i, j) : 0.0;
      for (int k = i + 1; k < j; ++k) {
        NodeId vec = tape.compose(w, b, chart.h_in(i, k), chart.h_in(k, j));
        NodeId local = tape.bilinear(s, chart.h_in(i, k), chart.h_in(k, j));
        NodeId total = tape.comb({local, chart.s_in(i, k), chart.s_in(k, j)}, {}, off);
        chart.set_split_vec(i, j, k, vec);
        chart.set_split_local(i, j, k, local);
        chart.set_split_total(i, j, k, total);
        vecs.push_back(vec);
        totals.push_back(total);
      }
      NodeId weights = tape.softmax(tape.stack(totals));
      chart.set_inside_weights(i, j, weights);
      chart.set_h_in(i, j, tape.mix(weights, vecs));
      chart.set_s_in(i, j, tape.mix(weights, totals));
    }
  }
  return chart;
}

inline void outside_pass(Tape& tape, ModelParams& params, Chart& chart) {
  int n = chart.n();
  NodeId w = tape.param(params.compose_w);
  NodeId b = tape.param(params.compose_b);
  NodeId s = tape.param(params.score_w);

  chart.set_h_out(0, n, tape.param(params.root_outside));
  chart.set_s_out(0, n, tape.constant1(0.0));

  std::vector<NodeId> scores, vecs;
  for (int width = n - 1; width >= 1; --width) {
    for (int i = 0; i + width <= n; ++i) {
      int j = i + width;
      scores.clear();
      vecs.clear();
      // as a left child: parent (i,m), sibling (j,m) to the right
      for (int m = j + 1; m <= n; ++m) {
        NodeId vec = tape.compose(w, b, chart.h_in(j, m), chart.h_out(i, m));
        NodeId sc = tape.comb({tape.bilinear(s, chart.h_in(j, m), chart.h_out(i, m)),
                               chart.s_in(j, m), chart.s_out(i, m)});
        vecs.push_back(vec);
        scores.push_back(sc);
      }
      // as a right child: parent (m,j), sibling (m,i) to the left
      for (int m = 0; m < i; ++m) {
        NodeId vec = tape.compose(w, b, chart.h_in(m, i), chart.h_out(m, j));
        NodeId sc = tape.comb({tape.bilinear(s, chart.h_in(m, i), chart.h_out(m, j)),
                               chart.s_in(m, i), chart.s_out(m, j)});
        vecs.push_back(vec);
        scores.push_back(sc);
      }
      NodeId weights = tape.softmax(tape.stack(scores));
      chart.set_outside_weights(i, j, weights);
      chart.set_h_out(i, j, tape.mix(weights, vecs));
      chart.set_s_out(i, j, tape.mix(weights, scores));
    }
  }
  chart.mark_outside_done();
}

}  // namespace silt
