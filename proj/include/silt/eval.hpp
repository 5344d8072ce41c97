// Parsing evaluation: sentence-level unlabeled F1 with punctuation removal and
// trivial-span exclusion, constraint span recall, per-root-label buckets, and
// the binarized-gold upper bound. F1 is computed per sentence and averaged.
//
// Trivial spans (width 1 and the full remapped sentence) are dropped from both
// sides; a sentence whose filtered gold set is empty scores 100 by convention.
#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "silt/common.hpp"
#include "silt/constraints.hpp"
#include "silt/corpus.hpp"

namespace silt {

enum class PunctPolicy { Auto, Pos, Chars, None };

inline std::string to_string(PunctPolicy p) {
  switch (p) {
    case PunctPolicy::Auto: return "auto";
    case PunctPolicy::Pos: return "pos";
    case PunctPolicy::Chars: return "chars";
    case PunctPolicy::None: return "none";
  }
  return "?";
}

inline PunctPolicy parse_punct_policy(const std::string& s) {
  if (s == "auto") return PunctPolicy::Auto;
  if (s == "pos") return PunctPolicy::Pos;
  if (s == "chars") return PunctPolicy::Chars;
  if (s == "none") return PunctPolicy::None;
  throw DataError("unknown punctuation policy: " + s);
}

namespace detail {

inline bool pos_is_punct(const std::string& tag) {
  static const std::set<std::string> kPunctTags = {
      ",",     ".",     ":",     "``",    "''",   "-LRB-", "-RRB-",
      "-LCB-", "-RCB-", "HYPH",  "PUNC",  "PUNCT"};
  return kPunctTags.count(tag) > 0;
}

// True when the token consists solely of punctuation characters (ASCII
// ispunct plus the common Unicode dash/quote/ellipsis code points).
inline bool token_is_punct(const std::string& tok) {
  if (tok.empty()) return false;
  static const std::set<unsigned int> kUnicodePunct = {
      0x2010, 0x2011, 0x2012, 0x2013, 0x2014, 0x2018, 0x2019, 0x201C,
      0x201D, 0x2026, 0x00AB, 0x00BB, 0x2039, 0x203A, 0x00A1, 0x00BF, 0x00B7};
  std::size_t i = 0;
  while (i < tok.size()) {
    unsigned char c = tok[i];
    if (c < 0x80) {
      if (!std::ispunct(c)) return false;
      ++i;
      continue;
    }
    unsigned int cp = 0;
    int extra = 0;
    if ((c >> 5) == 0x6) {
      cp = c & 0x1f;
      extra = 1;
    } else if ((c >> 4) == 0xe) {
      cp = c & 0x0f;
      extra = 2;
    } else if ((c >> 3) == 0x1e) {
      cp = c & 0x07;
      extra = 3;
    } else {
      return false;
    }
    if (i + extra >= tok.size()) return false;
    for (int k = 1; k <= extra; ++k) cp = (cp << 6) | (tok[i + k] & 0x3f);
    if (!kUnicodePunct.count(cp)) return false;
    i += extra + 1;
  }
  return true;
}

// keep flags per token under the resolved policy
inline std::vector<bool> keep_mask(const Sentence& sent, PunctPolicy policy) {
  const int n = sent.size();
  std::vector<bool> keep(n, true);
  PunctPolicy resolved = policy;
  if (policy == PunctPolicy::Auto) {
    bool has_pos = false;
    if (sent.gold)
      for (const auto& t : sent.gold->pos)
        if (!t.empty()) has_pos = true;
    resolved = has_pos ? PunctPolicy::Pos : PunctPolicy::Chars;
  }
  if (resolved == PunctPolicy::None) return keep;
  for (int i = 0; i < n; ++i) {
    if (resolved == PunctPolicy::Pos) {
      if (sent.gold && i < static_cast<int>(sent.gold->pos.size()))
        keep[i] = !pos_is_punct(sent.gold->pos[i]);
    } else {
      keep[i] = !token_is_punct(sent.tokens[i]);
    }
  }
  return keep;
}

// remap spans through the keep mask and drop trivial ones
inline std::set<Span> remap_filter(const std::set<Span>& spans, const std::vector<bool>& keep) {
  int n = static_cast<int>(keep.size());
  std::vector<int> pref(n + 1, 0);
  for (int i = 0; i < n; ++i) pref[i + 1] = pref[i] + (keep[i] ? 1 : 0);
  int n_kept = pref[n];
  std::set<Span> out;
  for (const auto& s : spans) {
    if (s.first < 0 || s.second > n) continue;
    int a = pref[s.first], b = pref[s.second];
    if (b - a < 2) continue;              // width-1 or emptied by the filter
    if (a == 0 && b == n_kept) continue;  // full-sentence span
    out.insert({a, b});
  }
  return out;
}

}  // namespace detail

// F1 in [0, 100] between a predicted span set and the sentence's gold tree.
inline double sentence_f1(const std::set<Span>& pred, const Sentence& sent,
                          PunctPolicy policy = PunctPolicy::Auto) {
  if (!sent.gold) throw DataError("sentence_f1: sentence has no gold tree");
  auto keep = detail::keep_mask(sent, policy);
  std::set<Span> p = detail::remap_filter(pred, keep);
  std::set<Span> g = detail::remap_filter(sent.gold->span_set(), keep);
  if (g.empty()) return 100.0;
  int tp = 0;
  for (const auto& s : p)
    if (g.count(s)) ++tp;
  double prec = p.empty() ? 0.0 : static_cast<double>(tp) / static_cast<double>(p.size());
  double rec = static_cast<double>(tp) / static_cast<double>(g.size());
  if (prec + rec == 0.0) return 0.0;
  return 100.0 * 2.0 * prec * rec / (prec + rec);
}

inline double corpus_f1(const std::vector<std::set<Span>>& preds,
                        const std::vector<Sentence>& sentences,
                        PunctPolicy policy = PunctPolicy::Auto) {
  if (preds.size() != sentences.size()) throw DataError("corpus_f1: size mismatch");
  if (preds.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    total += sentence_f1(preds[i], sentences[i], policy);
  return total / static_cast<double>(preds.size());
}

// Percent of reference spans found in the predicted trees. Width-1 spans are
// excluded from the denominator; indices are raw (no punctuation filtering).
inline double span_recall(const std::vector<std::set<Span>>& preds, const SpanMap& spans) {
  long long denom = 0, hit = 0;
  for (const auto& [sid, set] : spans) {
    if (sid < 0 || sid >= static_cast<int>(preds.size()))
      throw DataError("span_recall: span for unknown sentence " + std::to_string(sid));
    for (const auto& s : set) {
      if (s.second - s.first < 2) continue;
      ++denom;
      if (preds[sid].count(s)) ++hit;
    }
  }
  if (denom == 0) return 0.0;
  return 100.0 * static_cast<double>(hit) / static_cast<double>(denom);
}

// per-top-constituent breakdown (Table-4 style)
struct BucketRow {
  std::string label;
  int n = 0;
  int n_z = 0;
  double f1 = 0.0;
  double recall = 0.0;
  bool has_recall = false;  // false when the bucket has no constraints
};

inline std::vector<BucketRow> bucket_report(const std::vector<std::set<Span>>& preds,
                                            const std::vector<Sentence>& sentences,
                                            const SpanMap& constraints,
                                            PunctPolicy policy = PunctPolicy::Auto) {
  if (preds.size() != sentences.size()) throw DataError("bucket_report: size mismatch");
  std::map<std::string, std::vector<int>> groups;
  for (const auto& sent : sentences) {
    if (!sent.gold) throw DataError("bucket_report: sentence lacks gold tree");
    groups[sent.gold->root_label()].push_back(sent.id);
  }
  std::vector<BucketRow> rows;
  for (const auto& [label, ids] : groups) {
    BucketRow row;
    row.label = label;
    row.n = static_cast<int>(ids.size());
    double f1_sum = 0.0;
    long long denom = 0, hit = 0;
    for (int sid : ids) {
      f1_sum += sentence_f1(preds[sid], sentences[sid], policy);
      auto it = constraints.find(sid);
      if (it == constraints.end()) continue;
      for (const auto& s : it->second) {
        if (s.second - s.first < 2) continue;
        ++denom;
        ++row.n_z;
        if (preds[sid].count(s)) ++hit;
      }
    }
    row.f1 = f1_sum / row.n;
    if (denom > 0) {
      row.has_recall = true;
      row.recall = 100.0 * static_cast<double>(hit) / static_cast<double>(denom);
    }
    rows.push_back(row);
  }
  std::sort(rows.begin(), rows.end(), [](const BucketRow& a, const BucketRow& b) {
    if (a.n != b.n) return a.n > b.n;
    return a.label < b.label;
  });
  return rows;
}

// ---------------------------------------------------------------------------
// binarized-gold upper bound

enum class Binarization { RightBranching, LeftBranching };

inline std::set<Span> binarize_gold(const GoldTree& gold,
                                    Binarization mode = Binarization::RightBranching) {
  std::set<Span> spans = gold.span_set();
  spans.insert({0, gold.n_leaves});
  std::set<Span> out = spans;
  auto rec = [&](auto&& self, const Span& node) -> void {
    // children: maximal proper subspans, plus uncovered tokens as leaves
    std::vector<Span> kids;
    for (const auto& t : spans) {
      if (t == node || !span_contains(node, t)) continue;
      bool maximal = true;
      for (const auto& u : spans)
        if (u != node && u != t && span_contains(node, u) && span_contains(u, t)) {
          maximal = false;
          break;
        }
      if (maximal) kids.push_back(t);
    }
    std::sort(kids.begin(), kids.end());
    std::vector<int> bounds{node.first};
    int cursor = node.first;
    std::vector<Span> real_kids;
    for (const auto& k : kids) {
      while (cursor < k.first) {
        bounds.push_back(++cursor);
      }
      bounds.push_back(k.second);
      cursor = k.second;
      real_kids.push_back(k);
    }
    while (cursor < node.second) bounds.push_back(++cursor);
    int m = static_cast<int>(bounds.size()) - 1;  // child count
    if (mode == Binarization::RightBranching) {
      for (int t = 1; t <= m - 2; ++t) out.insert({bounds[t], node.second});
    } else {
      for (int t = 2; t <= m - 1; ++t) out.insert({node.first, bounds[t]});
    }
    for (const auto& k : real_kids)
      if (k.second - k.first >= 2) self(self, k);
  };
  rec(rec, {0, gold.n_leaves});
  return out;
}

inline double binarized_upper_bound(const std::vector<Sentence>& sentences,
                                    PunctPolicy policy = PunctPolicy::Auto,
                                    Binarization mode = Binarization::RightBranching) {
  std::vector<std::set<Span>> preds;
  preds.reserve(sentences.size());
  for (const auto& sent : sentences) {
    if (!sent.gold) throw DataError("binarized_upper_bound: sentence lacks gold tree");
    preds.push_back(binarize_gold(*sent.gold, mode));
  }
  return corpus_f1(preds, sentences, policy);
}

}  // namespace silt
