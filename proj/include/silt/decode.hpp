// Tree extraction. TreeScore(y) sums, over the internal nodes (i,j,k) of y,
// the local compatibility score score(h_in(i,k), h_in(k,j)); the recursive
// child terms are covered by summing over all nodes. CKY maximizes that sum;
// constrained CKY maximizes the constraint satisfaction count first and the
// sum second (lexicographic), which is the epsilon -> infinity limit of
// S(y) + eps * g(y,z). A finite-eps variant is also provided.
#pragma once

#include <map>
#include <set>
#include <vector>

#include "silt/chart.hpp"
#include "silt/common.hpp"
#include "silt/corpus.hpp"
#include "silt/graph.hpp"

namespace silt {

// Plain-double view of the per-split local scores, detached from the tape so
// decoding stays independent of gradient machinery.
struct ScoreGrid {
  int n = 0;
  std::vector<double> local;
  std::vector<int> base;

  explicit ScoreGrid(int n_) : n(n_), base((n_ + 1) * (n_ + 1), -1) {
    int off = 0;
    for (int w = 2; w <= n; ++w)
      for (int i = 0; i + w <= n; ++i) {
        base[i * (n + 1) + i + w] = off;
        off += w - 1;
      }
    local.assign(off, 0.0);
  }

  double& at(int i, int j, int k) { return local[base[i * (n + 1) + j] + (k - i - 1)]; }
  double at(int i, int j, int k) const { return local[base[i * (n + 1) + j] + (k - i - 1)]; }
};

inline ScoreGrid score_grid(const Tape& tape, const Chart& chart) {
  ScoreGrid grid(chart.n());
  for (int w = 2; w <= chart.n(); ++w)
    for (int i = 0; i + w <= chart.n(); ++i)
      for (int k = i + 1; k < i + w; ++k)
        grid.at(i, i + w, k) = tape.scalar(chart.split_local(i, i + w, k));
  return grid;
}

inline double tree_score(const BinaryTree& tree, const ScoreGrid& grid) {
  if (tree.n_leaves != grid.n) throw DataError("tree_score: length mismatch");
  double s = 0.0;
  for (const auto& [span, k] : tree.splits) s += grid.at(span.first, span.second, k);
  return s;
}

inline double tree_score(const BinaryTree& tree, const Tape& tape, const Chart& chart) {
  if (tree.n_leaves != chart.n()) throw DataError("tree_score: length mismatch");
  double s = 0.0;
  for (const auto& [span, k] : tree.splits)
    s += tape.scalar(chart.split_local(span.first, span.second, k));
  return s;
}

// Number of constraint spans realized as internal nodes of the tree.
inline int satisfaction_count(const BinaryTree& tree, const std::set<Span>& spans) {
  int g = 0;
  for (const auto& s : spans)
    if (tree.has_span(s)) ++g;
  return g;
}

namespace detail {

// One DP for CKY and all its constrained variants: maximize the integer
// bonus collected at tree nodes first, the float score second; ties broken
// by the smallest split k. Plain CKY is the all-zero-bonus case, which keeps
// the float accumulation bit-identical between the two.
inline BinaryTree cky_lexicographic(const ScoreGrid& grid, const std::map<Span, int>& bonus) {
  int n = grid.n;
  std::vector<long long> gbest((n + 1) * (n + 1), 0);
  std::vector<double> sbest((n + 1) * (n + 1), 0.0);
  std::vector<int> kbest((n + 1) * (n + 1), -1);
  auto id = [n](int i, int j) { return i * (n + 1) + j; };

  for (int w = 2; w <= n; ++w) {
    for (int i = 0; i + w <= n; ++i) {
      int j = i + w;
      long long node_bonus = 0;
      if (auto it = bonus.find({i, j}); it != bonus.end()) node_bonus = it->second;
      bool have = false;
      long long bg = 0;
      double bs = 0.0;
      int bk = -1;
      for (int k = i + 1; k < j; ++k) {
        long long cg = node_bonus + gbest[id(i, k)] + gbest[id(k, j)];
        double cs = grid.at(i, j, k) + sbest[id(i, k)] + sbest[id(k, j)];
        if (!have || cg > bg || (cg == bg && cs > bs)) {
          have = true;
          bg = cg;
          bs = cs;
          bk = k;
        }
      }
      gbest[id(i, j)] = bg;
      sbest[id(i, j)] = bs;
      kbest[id(i, j)] = bk;
    }
  }

  BinaryTree tree;
  tree.n_leaves = n;
  if (n < 2) return tree;
  auto build = [&](auto&& self, int i, int j) -> void {
    if (j - i < 2) return;
    int k = kbest[id(i, j)];
    tree.splits[{i, j}] = k;
    self(self, i, k);
    self(self, k, j);
  };
  build(build, 0, n);
  return tree;
}

}  // namespace detail

inline BinaryTree cky(const ScoreGrid& grid) {
  return detail::cky_lexicographic(grid, {});
}

enum class CckyMode { Lexicographic, Epsilon };

// Constrained CKY. Lexicographic mode guarantees g(y,z) is maximized over all
// binary trees and the score is maximal among g-maximal trees; crossing
// constraints simply cap the achievable count. Epsilon mode maximizes
// S(y) + eps * g(y,z) for a finite importance weight.
inline BinaryTree ccky(const ScoreGrid& grid, const std::set<Span>& constraints,
                       CckyMode mode = CckyMode::Lexicographic, double eps = 1.0) {
  if (mode == CckyMode::Lexicographic) {
    std::map<Span, int> bonus;
    for (const auto& s : constraints) bonus[s] = 1;
    return detail::cky_lexicographic(grid, bonus);
  }
  ScoreGrid shifted = grid;
  for (const auto& s : constraints) {
    if (s.second - s.first < 2 || !(0 <= s.first && s.second <= grid.n)) continue;
    for (int k = s.first + 1; k < s.second; ++k) shifted.at(s.first, s.second, k) += eps;
  }
  return cky(shifted);
}

// Generalized form used by the PS-SVM variants: per-span integer weights,
// possibly negative (loss-augmented negative selection minimizes the count).
inline BinaryTree cky_with_bonus(const ScoreGrid& grid, const std::map<Span, int>& bonus) {
  return detail::cky_lexicographic(grid, bonus);
}

constexpr int kMaxEnumerationLeaves = 12;

inline std::vector<BinaryTree> enumerate_trees(int n) {
  if (n > kMaxEnumerationLeaves)
    throw DataError("enumerate_trees: n exceeds enumeration cap of " +
                    std::to_string(kMaxEnumerationLeaves));
  if (n < 1) throw DataError("enumerate_trees: n must be positive");
  // trees[i][j]: all split maps over [i, j)
  std::vector<std::vector<std::vector<std::map<Span, int>>>> memo(
      n + 1, std::vector<std::vector<std::map<Span, int>>>(n + 1));
  for (int i = 0; i < n; ++i) memo[i][i + 1].push_back({});
  for (int w = 2; w <= n; ++w) {
    for (int i = 0; i + w <= n; ++i) {
      int j = i + w;
      for (int k = i + 1; k < j; ++k)
        for (const auto& left : memo[i][k])
          for (const auto& right : memo[k][j]) {
            std::map<Span, int> t = left;
            t.insert(right.begin(), right.end());
            t[{i, j}] = k;
            memo[i][j].push_back(std::move(t));
          }
    }
  }
  std::vector<BinaryTree> out;
  out.reserve(memo[0][n].size());
  for (auto& splits : memo[0][n]) {
    BinaryTree t;
    t.n_leaves = n;
    t.splits = std::move(splits);
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace silt
