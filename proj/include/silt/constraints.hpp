// Span constraint mining and bookkeeping: gazetteer matching over a token
// trie, word2phrase-style PMI phrase induction, synthetic constraints from
// gold constituents, de-nesting/downsampling, and agreement statistics.
//
// Constraints equal to the whole sentence or a single token carry no tree
// information (every binary tree satisfies the former, none can encode the
// latter) and are never emitted by the miners.
#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "silt/common.hpp"
#include "silt/corpus.hpp"
#include "silt/rng.hpp"

namespace silt {

// constraints grouped by sentence id
using SpanMap = std::map<int, std::set<Span>>;

enum class ConstraintSource { GoldEntity, Gazetteer, Pmi, Synthetic };

struct SpanConstraint {
  int sentence_id = 0;
  int start = 0;
  int end = 0;
  ConstraintSource source = ConstraintSource::GoldEntity;
};

inline int count_constraints(const SpanMap& m) {
  int n = 0;
  for (const auto& [sid, spans] : m) n += static_cast<int>(spans.size());
  return n;
}

// ---------------------------------------------------------------------------
// constraint TSV: sentence_id \t start \t end (end exclusive)

struct ConstraintLoad {
  SpanMap by_sentence;
  int rejected = 0;
  std::vector<std::string> messages;
};

inline ConstraintLoad load_constraints(const std::string& path,
                                       const std::vector<int>& sentence_lengths) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open constraints file: " + path);
  ConstraintLoad out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    auto fields = split_ws(line);
    bool ok = fields.size() == 3;
    int sid = 0, a = 0, b = 0;
    if (ok) {
      try {
        sid = std::stoi(fields[0]);
        a = std::stoi(fields[1]);
        b = std::stoi(fields[2]);
      } catch (...) {
        ok = false;
      }
    }
    if (ok)
      ok = sid >= 0 && sid < static_cast<int>(sentence_lengths.size()) && 0 <= a && a < b &&
           b <= sentence_lengths[sid];
    if (!ok) {
      ++out.rejected;
      out.messages.push_back(path + ":" + std::to_string(line_no) + ": rejected constraint line");
      continue;
    }
    out.by_sentence[sid].insert({a, b});
  }
  return out;
}

inline void save_constraints(const SpanMap& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write constraints file: " + path);
  for (const auto& [sid, spans] : m)
    for (const auto& s : spans) out << sid << "\t" << s.first << "\t" << s.second << "\n";
}

// ---------------------------------------------------------------------------
// gazetteer

class GazetteerIndex {
 public:
  GazetteerIndex() : nodes_(1) {}

  void insert(const std::vector<std::string>& phrase) {
    if (phrase.empty()) return;
    int cur = 0;
    for (const auto& raw : phrase) {
      std::string tok = lower_ascii(raw);
      auto it = nodes_[cur].next.find(tok);
      if (it == nodes_[cur].next.end()) {
        nodes_.push_back({});
        it = nodes_[cur].next.emplace(tok, static_cast<int>(nodes_.size()) - 1).first;
      }
      cur = it->second;
    }
    if (!nodes_[cur].terminal) {
      nodes_[cur].terminal = true;
      ++phrase_count_;
    }
  }

  bool contains(const std::vector<std::string>& phrase) const {
    int cur = 0;
    for (const auto& raw : phrase) {
      std::string tok = lower_ascii(raw);
      auto it = nodes_[cur].next.find(tok);
      if (it == nodes_[cur].next.end()) return false;
      cur = it->second;
    }
    return nodes_[cur].terminal;
  }

  int phrase_count() const { return phrase_count_; }

  // end offsets (exclusive) of every phrase starting at pos
  void match_ends(const std::vector<std::string>& lower_toks, int pos,
                  std::vector<int>& ends) const {
    int cur = 0;
    for (int j = pos; j < static_cast<int>(lower_toks.size()); ++j) {
      auto it = nodes_[cur].next.find(lower_toks[j]);
      if (it == nodes_[cur].next.end()) return;
      cur = it->second;
      if (nodes_[cur].terminal) ends.push_back(j + 1);
    }
  }

  static GazetteerIndex from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open gazetteer file: " + path);
    GazetteerIndex idx;
    std::string line;
    while (std::getline(in, line)) {
      auto toks = split_ws(line);
      if (!toks.empty()) idx.insert(toks);
    }
    return idx;
  }

 private:
  struct TrieNode {
    std::map<std::string, int> next;
    bool terminal = false;
  };
  std::vector<TrieNode> nodes_;
  int phrase_count_ = 0;
};

namespace detail {

// Longest-match-wins selection: all candidate matches ranked by length
// (longest first, leftmost on ties), greedily kept if non-overlapping.
// Width-1 and full-sentence matches are discarded up front.
inline std::set<Span> select_matches(const std::vector<std::string>& tokens,
                                     const GazetteerIndex& idx) {
  int n = static_cast<int>(tokens.size());
  std::vector<std::string> lower;
  lower.reserve(tokens.size());
  for (const auto& t : tokens) lower.push_back(lower_ascii(t));

  std::vector<Span> candidates;
  std::vector<int> ends;
  for (int i = 0; i < n; ++i) {
    ends.clear();
    idx.match_ends(lower, i, ends);
    for (int e : ends)
      if (e - i >= 2 && !(i == 0 && e == n)) candidates.push_back({i, e});
  }
  std::sort(candidates.begin(), candidates.end(), [](const Span& a, const Span& b) {
    int wa = a.second - a.first, wb = b.second - b.first;
    if (wa != wb) return wa > wb;
    return a.first < b.first;
  });
  std::set<Span> chosen;
  for (const auto& c : candidates) {
    bool overlaps = false;
    for (const auto& k : chosen)
      if (c.first < k.second && k.first < c.second) {
        overlaps = true;
        break;
      }
    if (!overlaps) chosen.insert(c);
  }
  return chosen;
}

}  // namespace detail

inline SpanMap match_gazetteer(const std::vector<Sentence>& sentences,
                               const GazetteerIndex& gazetteer) {
  SpanMap out;
  for (const auto& sent : sentences) {
    auto spans = detail::select_matches(sent.tokens, gazetteer);
    if (!spans.empty()) out[sent.id] = std::move(spans);
  }
  return out;
}

// ---------------------------------------------------------------------------
// PMI phrase induction
//
// Each pass scores every adjacent unit pair with the discounted count ratio
//   score(a,b) = (count(ab) - min_count) * N / (count(a) * count(b)),
// N the current corpus unit count, and greedily merges left-to-right every
// pair with score > delta into one unit for the next pass. The lexicon is
// every multi-word unit present after the final pass.

struct PmiLexicon {
  std::set<std::vector<std::string>> phrases;
  double delta = 0.0;
  int passes = 0;

  bool empty() const { return phrases.empty(); }
  int size() const { return static_cast<int>(phrases.size()); }

  GazetteerIndex to_index() const {
    GazetteerIndex idx;
    for (const auto& p : phrases) idx.insert(p);
    return idx;
  }
};

// delta < 0 requests the default threshold 1e-3 * N computed from the corpus
// unit count before the first pass.
inline PmiLexicon induce_pmi_phrases(const std::vector<Sentence>& sentences, int passes,
                                     double delta = -1.0, int min_count = 0) {
  if (passes < 1) throw DataError("induce_pmi_phrases: passes must be >= 1");
  constexpr char kSep = '\x1f';

  std::vector<std::vector<std::string>> units;
  units.reserve(sentences.size());
  long long total_units = 0;
  for (const auto& s : sentences) {
    std::vector<std::string> u;
    u.reserve(s.tokens.size());
    for (const auto& t : s.tokens) u.push_back(lower_ascii(t));
    total_units += static_cast<long long>(u.size());
    units.push_back(std::move(u));
  }

  PmiLexicon lex;
  lex.passes = passes;
  lex.delta = delta >= 0.0 ? delta : 1e-3 * static_cast<double>(total_units);
  if (total_units == 0) return lex;

  for (int pass = 0; pass < passes; ++pass) {
    std::map<std::string, long long> uni;
    std::map<std::pair<std::string, std::string>, long long> bi;
    long long n_units = 0;
    for (const auto& sent : units) {
      n_units += static_cast<long long>(sent.size());
      for (std::size_t i = 0; i < sent.size(); ++i) {
        ++uni[sent[i]];
        if (i + 1 < sent.size()) ++bi[{sent[i], sent[i + 1]}];
      }
    }
    auto score = [&](const std::string& a, const std::string& b) {
      auto it = bi.find({a, b});
      if (it == bi.end()) return -1.0;
      double num = static_cast<double>(it->second) - static_cast<double>(min_count);
      return num * static_cast<double>(n_units) /
             (static_cast<double>(uni[a]) * static_cast<double>(uni[b]));
    };
    for (auto& sent : units) {
      std::vector<std::string> merged;
      merged.reserve(sent.size());
      std::size_t i = 0;
      while (i < sent.size()) {
        if (i + 1 < sent.size() && score(sent[i], sent[i + 1]) > lex.delta) {
          merged.push_back(sent[i] + kSep + sent[i + 1]);
          i += 2;
        } else {
          merged.push_back(sent[i]);
          i += 1;
        }
      }
      sent = std::move(merged);
    }
  }

  for (const auto& sent : units)
    for (const auto& u : sent) {
      if (u.find(kSep) == std::string::npos) continue;
      std::vector<std::string> words;
      std::size_t start = 0;
      for (std::size_t i = 0; i <= u.size(); ++i)
        if (i == u.size() || u[i] == kSep) {
          words.push_back(u.substr(start, i - start));
          start = i + 1;
        }
      lex.phrases.insert(std::move(words));
    }
  return lex;
}

inline SpanMap match_pmi(const std::vector<Sentence>& sentences, const PmiLexicon& lexicon) {
  GazetteerIndex idx = lexicon.to_index();
  return match_gazetteer(sentences, idx);
}

inline void save_lexicon(const PmiLexicon& lex, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write lexicon file: " + path);
  for (const auto& p : lex.phrases) out << join(p, " ") << "\n";
}

// ---------------------------------------------------------------------------
// synthetic constraints from gold constituents

inline SpanMap synth_constraints(const std::vector<Sentence>& sentences,
                                 const std::set<std::string>& labels) {
  SpanMap out;
  for (const auto& sent : sentences) {
    if (!sent.gold) continue;
    int n = sent.gold->n_leaves;
    std::set<Span> spans;
    for (const auto& sp : sent.gold->spans) {
      if (!labels.count(sp.label)) continue;
      if (sp.end - sp.start < 2) continue;
      if (sp.start == 0 && sp.end == n) continue;
      spans.insert({sp.start, sp.end});
    }
    if (!spans.empty()) out[sent.id] = std::move(spans);
  }
  return out;
}

// ---------------------------------------------------------------------------
// de-nesting and downsampling

struct RestrictResult {
  SpanMap constraints;
  int shortfall = 0;  // target_count - available, when positive
};

inline RestrictResult restrict_constraints(const SpanMap& constraints, int target_count,
                                           bool forbid_nesting, std::uint64_t seed) {
  if (target_count < 0) throw DataError("restrict_constraints: negative target");
  std::vector<SpanConstraint> flat;
  for (const auto& [sid, spans] : constraints) {
    for (const auto& s : spans) {
      if (forbid_nesting) {
        bool nested = false;
        for (const auto& t : spans)
          if (t != s && span_contains(t, s)) {
            nested = true;
            break;
          }
        if (nested) continue;
      }
      flat.push_back({sid, s.first, s.second, ConstraintSource::Synthetic});
    }
  }

  RestrictResult out;
  if (static_cast<int>(flat.size()) <= target_count) {
    out.shortfall = target_count - static_cast<int>(flat.size());
    for (const auto& c : flat) out.constraints[c.sentence_id].insert({c.start, c.end});
    return out;
  }
  std::vector<std::size_t> order(flat.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng = Rng(seed).derive("restrict-constraints");
  rng.shuffle(order);
  for (int i = 0; i < target_count; ++i) {
    const auto& c = flat[order[i]];
    out.constraints[c.sentence_id].insert({c.start, c.end});
  }
  return out;
}

// ---------------------------------------------------------------------------
// agreement statistics (exact match / crossing / per-label coverage)

struct ConstraintStats {
  int n_z = 0;
  int exact = 0;
  int crossing = 0;
  double em_pct = 0.0;
  double crossing_pct = 0.0;
  // label -> (gold spans of that label found among constraints, total gold spans)
  std::map<std::string, std::pair<int, int>> per_label;
  int gold_found = 0;
  int gold_total = 0;
  int n_sentences = 0;
  double spans_per_sentence = 0.0;
};

inline ConstraintStats constraint_stats(const SpanMap& constraints,
                                        const std::vector<Sentence>& sentences) {
  ConstraintStats st;
  st.n_sentences = static_cast<int>(sentences.size());
  for (const auto& [sid, spans] : constraints) {
    if (sid < 0 || sid >= static_cast<int>(sentences.size()))
      throw DataError("constraint_stats: constraint for unknown sentence " + std::to_string(sid));
    const Sentence& sent = sentences[sid];
    if (!sent.gold)
      throw DataError("constraint_stats: sentence " + std::to_string(sid) + " has no gold tree");
    auto gold = sent.gold->span_set();
    for (const auto& c : spans) {
      ++st.n_z;
      if (gold.count(c)) ++st.exact;
      bool crosses_any = false;
      for (const auto& g : gold)
        if (spans_cross(c, g)) {
          crosses_any = true;
          break;
        }
      if (crosses_any) ++st.crossing;
    }
  }
  for (const auto& sent : sentences) {
    if (!sent.gold) continue;
    auto it = constraints.find(sent.id);
    const std::set<Span>* cons = it == constraints.end() ? nullptr : &it->second;
    for (const auto& sp : sent.gold->spans) {
      auto& entry = st.per_label[sp.label];
      ++entry.second;
      ++st.gold_total;
      if (cons && cons->count({sp.start, sp.end})) {
        ++entry.first;
        ++st.gold_found;
      }
    }
  }
  if (st.n_z > 0) {
    st.em_pct = 100.0 * st.exact / st.n_z;
    st.crossing_pct = 100.0 * st.crossing / st.n_z;
  }
  if (st.n_sentences > 0)
    st.spans_per_sentence = static_cast<double>(st.n_z) / st.n_sentences;
  return st;
}

}  // namespace silt
