// Losses. Reconstruction predicts each word from its leaf outside vector;
// PS-SVM is the margin loss alpha * max(0, margin + S(y-) - S(y+)) with the
// four (alpha, y-, y+) selection rules:
//
//   NCBL            alpha = 1                y- = argmax S          y+ = argmax [S + g(.,z)]
//   MinDifference   alpha = 1                y- = argmax S          y+ = argmax [S + g(.,z) + g(.,y-)]
//   Rescale         alpha = g(y+,y-)/(n-1)   y- = argmax S          y+ = argmax [S + g(.,z)]
//   StructuredRamp  alpha = 1                y- = argmax [S - g(.,z)]   y+ = argmax [S + g(.,z)]
//
// The bonus-weighted argmaxes are lexicographic (count first, score second).
// Gradients flow through S(y-) and S(y+) only; alpha and the tree selections
// are constants of the step.
#pragma once

#include <set>
#include <string>
#include <vector>

#include "silt/chart.hpp"
#include "silt/decode.hpp"
#include "silt/graph.hpp"

namespace silt {

enum class PsVariant { Ncbl, MinDifference, Rescale, StructuredRamp };

inline std::string to_string(PsVariant v) {
  switch (v) {
    case PsVariant::Ncbl: return "ncbl";
    case PsVariant::MinDifference: return "mindiff";
    case PsVariant::Rescale: return "rescale";
    case PsVariant::StructuredRamp: return "structramp";
  }
  return "?";
}

inline PsVariant parse_variant(const std::string& s) {
  if (s == "ncbl") return PsVariant::Ncbl;
  if (s == "mindiff") return PsVariant::MinDifference;
  if (s == "rescale") return PsVariant::Rescale;
  if (s == "structramp") return PsVariant::StructuredRamp;
  throw DataError("unknown PS-SVM variant: " + s);
}

// Mean negative log-likelihood of each token given its context vector.
inline NodeId reconstruction_loss(Tape& tape, ModelParams& params, const Chart& chart,
                                  const std::vector<int>& token_ids) {
  if (!chart.outside_done()) throw DataError("reconstruction_loss: outside pass missing");
  int n = chart.n();
  NodeId proj = tape.param(params.out_proj);
  std::vector<NodeId> nlls;
  nlls.reserve(n);
  for (int i = 0; i < n; ++i) {
    NodeId logits = tape.matvec(proj, chart.h_out(i, i + 1));
    nlls.push_back(tape.nll_pick(logits, token_ids[i]));
  }
  std::vector<double> coefs(n, 1.0 / n);
  return tape.comb(std::span<const NodeId>(nlls), std::span<const double>(coefs));
}

struct PsSvmOptions {
  double margin = 1.0;
  bool rescale_raw = false;  // use raw g(y+,y-) instead of g(y+,y-)/(n-1)
};

struct PsSvmResult {
  NodeId loss = -1;
  BinaryTree y_minus;
  BinaryTree y_plus;
  double alpha = 1.0;
  int g_minus = 0;       // constraints satisfied by y-
  int g_plus = 0;        // constraints satisfied by y+
  double s_minus = 0.0;  // TreeScore of y-
  double s_plus = 0.0;
  bool margin_violated = false;
};

namespace detail {

// S(y) as a tape node: sum of the tree's per-node local score nodes.
inline NodeId tree_score_node(Tape& tape, const Chart& chart, const BinaryTree& tree) {
  if (tree.splits.empty()) return tape.constant1(0.0);
  std::vector<NodeId> locals;
  locals.reserve(tree.splits.size());
  for (const auto& [span, k] : tree.splits)
    locals.push_back(chart.split_local(span.first, span.second, k));
  return tape.comb(std::span<const NodeId>(locals));
}

inline std::map<Span, int> constraint_bonus(const std::set<Span>& constraints, int n, int sign) {
  std::map<Span, int> bonus;
  for (const auto& s : constraints) {
    if (s.second - s.first < 2) continue;  // width-1 spans can never be tree nodes
    if (s.first < 0 || s.second > n) continue;
    bonus[s] += sign;
  }
  return bonus;
}

}  // namespace detail

inline PsSvmResult ps_svm_loss(Tape& tape, const Chart& chart,
                               const std::set<Span>& constraints, PsVariant variant,
                               const PsSvmOptions& opts = {}) {
  int n = chart.n();
  ScoreGrid grid = score_grid(tape, chart);
  auto plus_bonus = detail::constraint_bonus(constraints, n, +1);

  PsSvmResult res;
  if (variant == PsVariant::StructuredRamp) {
    res.y_minus = cky_with_bonus(grid, detail::constraint_bonus(constraints, n, -1));
  } else {
    res.y_minus = cky(grid);
  }
  if (variant == PsVariant::MinDifference) {
    auto bonus = plus_bonus;
    for (const auto& [span, k] : res.y_minus.splits) bonus[span] += 1;
    res.y_plus = cky_with_bonus(grid, bonus);
  } else {
    res.y_plus = cky_with_bonus(grid, plus_bonus);
  }

  res.g_minus = satisfaction_count(res.y_minus, constraints);
  res.g_plus = satisfaction_count(res.y_plus, constraints);
  res.s_minus = tree_score(res.y_minus, grid);
  res.s_plus = tree_score(res.y_plus, grid);

  res.alpha = 1.0;
  if (variant == PsVariant::Rescale) {
    if (n >= 2) {
      int shared = 0;
      for (const auto& [span, k] : res.y_plus.splits)
        if (res.y_minus.splits.count(span)) ++shared;
      res.alpha = opts.rescale_raw ? static_cast<double>(shared)
                                   : static_cast<double>(shared) / (n - 1);
    }
  }

  NodeId s_minus_node = detail::tree_score_node(tape, chart, res.y_minus);
  NodeId s_plus_node = detail::tree_score_node(tape, chart, res.y_plus);
  NodeId hinge = tape.relu(tape.comb({s_minus_node, s_plus_node}, {1.0, -1.0}, opts.margin));
  res.loss = tape.comb({hinge}, {res.alpha});
  res.margin_violated = tape.scalar(hinge) > 0.0 && !(res.y_plus == res.y_minus);
  return res;
}

struct InstanceLoss {
  NodeId total = -1;
  NodeId rec = -1;
  double j_rec = 0.0;
  double j_ps = 0.0;
  bool has_ps = false;
  PsSvmResult ps;
};

// J(x,z) = J_rec(x) + lambda * J_PS(x,z); one inside+outside pass per call.
// Sentences without constraints contribute J_rec only.
inline InstanceLoss instance_loss(Tape& tape, ModelParams& params,
                                  const std::vector<int>& token_ids,
                                  const std::set<Span>& constraints, PsVariant variant,
                                  double lambda = 1.0, const PsSvmOptions& opts = {},
                                  int max_len = kDefaultMaxLen, Chart* chart_out = nullptr) {
  Chart chart = inside_pass(tape, params, token_ids, max_len);
  outside_pass(tape, params, chart);

  InstanceLoss out;
  out.rec = reconstruction_loss(tape, params, chart, token_ids);
  out.j_rec = tape.scalar(out.rec);
  if (!constraints.empty() && lambda != 0.0) {
    out.has_ps = true;
    out.ps = ps_svm_loss(tape, chart, constraints, variant, opts);
    out.j_ps = tape.scalar(out.ps.loss);
    out.total = tape.comb({out.rec, out.ps.loss}, {1.0, lambda});
  } else {
    out.total = out.rec;
  }
  if (chart_out) *chart_out = chart;
  return out;
}

}  // namespace silt
