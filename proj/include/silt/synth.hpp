// Synthetic PCFG corpus generator. Emits sentences with gold derivations and
// entity-like constraints: any gold constituent whose yield matches a phrase
// in the entity lexicon becomes a constraint, so constraints are gold
// constituents by construction (exact match 100%). A noise knob can flip a
// fraction of constraints to random non-constituent spans.
//
// Grammar file format, one rule per line ('#' starts a comment):
//   LHS -> RHS1 RHS2 ... : weight
// The weight (default 1) is normalized per LHS. Symbols that never appear as
// a LHS are terminals.
#pragma once

#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "silt/common.hpp"
#include "silt/constraints.hpp"
#include "silt/corpus.hpp"
#include "silt/rng.hpp"

namespace silt {

struct GrammarRule {
  std::string lhs;
  std::vector<std::string> rhs;
  double weight = 1.0;
};

struct Grammar {
  std::string start = "S";
  std::vector<GrammarRule> rules;
  std::map<std::string, std::vector<int>> by_lhs;
  std::set<std::string> nonterminals;

  void index() {
    by_lhs.clear();
    nonterminals.clear();
    for (int i = 0; i < static_cast<int>(rules.size()); ++i) {
      by_lhs[rules[i].lhs].push_back(i);
      nonterminals.insert(rules[i].lhs);
    }
    for (const auto& r : rules) {
      if (r.rhs.empty()) throw DataError("grammar rule with empty right-hand side: " + r.lhs);
      if (r.weight <= 0) throw DataError("grammar rule with non-positive weight: " + r.lhs);
    }
    if (!by_lhs.count(start)) throw DataError("grammar has no rules for start symbol " + start);
  }

  bool is_terminal(const std::string& sym) const { return !nonterminals.count(sym); }
};

inline Grammar parse_grammar(std::istream& in, const std::string& start = "S") {
  Grammar g;
  g.start = start;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    auto arrow = line.find("->");
    if (arrow == std::string::npos)
      throw DataError("grammar line " + std::to_string(line_no) + ": missing '->'");
    GrammarRule rule;
    {
      auto lhs_toks = split_ws(line.substr(0, arrow));
      if (lhs_toks.size() != 1)
        throw DataError("grammar line " + std::to_string(line_no) + ": bad left-hand side");
      rule.lhs = lhs_toks[0];
    }
    std::string rest = line.substr(arrow + 2);
    auto colon = rest.rfind(':');
    if (colon != std::string::npos) {
      try {
        rule.weight = std::stod(rest.substr(colon + 1));
        rest = rest.substr(0, colon);
      } catch (...) {
        // ':' was part of a token; keep weight 1
      }
    }
    rule.rhs = split_ws(rest);
    if (rule.rhs.empty())
      throw DataError("grammar line " + std::to_string(line_no) + ": empty right-hand side");
    g.rules.push_back(std::move(rule));
  }
  g.index();
  return g;
}

inline Grammar parse_grammar_file(const std::string& path, const std::string& start = "S") {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open grammar file: " + path);
  return parse_grammar(in, start);
}

// ~20 nonterminal rules, vocab around 170, mean length around 9. Entity
// phrases live under ENT and reuse no common-noun vocabulary, so entity
// bracketing has to be learned from context rather than token identity.
inline const char* default_grammar_text() {
  return R"(# default synthetic grammar
S -> NP VP : 1
NP -> Det N : 0.42
NP -> Det Adj N : 0.13
NP -> ENT : 0.25
NP -> NP PP : 0.2
VP -> V NP : 0.5
VP -> V : 0.12
VP -> V NP PP : 0.2
VP -> V PP : 0.18
PP -> P NP : 1
Det -> the : 0.45
Det -> a : 0.3
Det -> every : 0.08
Det -> some : 0.07
Det -> each : 0.05
Det -> this : 0.05
N -> cat : 1
N -> dog : 1
N -> bird : 1
N -> horse : 1
N -> farmer : 1
N -> teacher : 1
N -> child : 1
N -> doctor : 1
N -> sailor : 1
N -> painter : 1
N -> house : 1
N -> garden : 1
N -> river : 1
N -> mountain : 1
N -> road : 1
N -> bridge : 1
N -> market : 1
N -> letter : 1
N -> stone : 1
N -> wagon : 1
N -> engine : 1
N -> window : 1
N -> village : 1
N -> castle : 1
N -> forest : 1
N -> meadow : 1
N -> harbor : 1
N -> tower : 1
N -> mill : 1
N -> barn : 1
N -> lantern : 1
N -> basket : 1
N -> orchard : 1
N -> valley : 1
N -> shepherd : 1
N -> merchant : 1
N -> soldier : 1
N -> baker : 1
N -> fisherman : 1
N -> carpenter : 1
V -> saw : 1
V -> found : 1
V -> built : 1
V -> crossed : 1
V -> visited : 1
V -> painted : 1
V -> watched : 1
V -> followed : 1
V -> reached : 1
V -> carried : 1
V -> opened : 1
V -> closed : 1
V -> repaired : 1
V -> admired : 1
V -> sketched : 1
V -> measured : 1
V -> guarded : 1
V -> cleaned : 1
V -> sold : 1
V -> bought : 1
Adj -> old : 1
Adj -> small : 1
Adj -> tall : 1
Adj -> quiet : 1
Adj -> bright : 1
Adj -> narrow : 1
Adj -> wooden : 1
Adj -> ancient : 1
Adj -> busy : 1
Adj -> gentle : 1
Adj -> crooked : 1
Adj -> distant : 1
P -> of : 1
P -> in : 1
P -> on : 1
P -> near : 1
P -> behind : 1
P -> beyond : 1
P -> under : 1
P -> across : 1
ENT -> north haven : 1
ENT -> cedar rapids : 1
ENT -> fort dodge : 1
ENT -> lake forest : 1
ENT -> green bay : 1
ENT -> silver creek : 1
ENT -> pine bluff : 1
ENT -> grand forks : 1
ENT -> blue ridge : 1
ENT -> red hook : 1
ENT -> twin falls : 1
ENT -> elk grove : 1
ENT -> palo verde : 1
ENT -> sandy springs : 1
ENT -> iron ridge : 1
ENT -> maple grove : 1
ENT -> cedar falls : 1
ENT -> oak park : 1
ENT -> river bend : 1
ENT -> salt flats : 1
ENT -> stone harbor : 1
ENT -> ash hollow : 1
ENT -> clear lake : 1
ENT -> dry gulch : 1
ENT -> east palo verde : 1
ENT -> new port richey : 1
ENT -> old fort dodge : 1
ENT -> upper twin falls : 1
ENT -> west cedar rapids : 1
ENT -> little river bend : 1
)";
}

inline Grammar default_grammar() {
  std::istringstream in(default_grammar_text());
  return parse_grammar(in);
}

inline std::set<std::vector<std::string>> entity_lexicon_from_grammar(const Grammar& g,
                                                                      const std::string& sym = "ENT") {
  std::set<std::vector<std::string>> out;
  auto it = g.by_lhs.find(sym);
  if (it == g.by_lhs.end()) return out;
  for (int ri : it->second) {
    const auto& rhs = g.rules[ri].rhs;
    bool all_terminal = true;
    for (const auto& s : rhs)
      if (!g.is_terminal(s)) all_terminal = false;
    if (all_terminal && rhs.size() >= 2) out.insert(rhs);
  }
  return out;
}

struct SynthOptions {
  int n_sentences = 2000;
  std::uint64_t seed = 1;
  double constraint_fraction = 0.5;  // fraction of sentences that emit constraints
  double noise_pct = 0.0;            // percent of constraints flipped to non-constituents
  int depth_cap = 40;
  int max_len = 0;                   // 0: unbounded; otherwise resample longer sentences
};

struct SynthCorpus {
  std::vector<Sentence> sentences;
  SpanMap constraints;
  int resampled = 0;
};

namespace detail {

struct DerivationTooDeep {};

inline void expand_symbol(const Grammar& g, const std::string& sym, int depth, int depth_cap,
                          Rng& rng, std::vector<std::string>& tokens,
                          std::vector<LabeledSpan>& spans, std::vector<std::string>& pos) {
  if (depth > depth_cap) throw DerivationTooDeep{};
  const auto& rule_ids = g.by_lhs.at(sym);
  double total = 0.0;
  for (int ri : rule_ids) total += g.rules[ri].weight;
  double pick = rng.next_double() * total;
  int chosen = rule_ids.back();
  for (int ri : rule_ids) {
    pick -= g.rules[ri].weight;
    if (pick < 0) {
      chosen = ri;
      break;
    }
  }
  const GrammarRule& rule = g.rules[chosen];

  bool all_terminal = true;
  for (const auto& s : rule.rhs)
    if (!g.is_terminal(s)) all_terminal = false;

  if (all_terminal && rule.rhs.size() == 1) {
    // preterminal: POS tag, no span
    tokens.push_back(rule.rhs[0]);
    pos.push_back(sym);
    return;
  }
  int start = static_cast<int>(tokens.size());
  std::size_t span_slot = spans.size();
  spans.push_back({start, -1, sym});
  for (const auto& s : rule.rhs) {
    if (g.is_terminal(s)) {
      tokens.push_back(s);
      pos.push_back("");
    } else {
      expand_symbol(g, s, depth + 1, depth_cap, rng, tokens, spans, pos);
    }
  }
  spans[span_slot].end = static_cast<int>(tokens.size());
}

}  // namespace detail

inline SynthCorpus generate(const Grammar& grammar,
                            const std::set<std::vector<std::string>>& entity_lexicon,
                            const SynthOptions& opts) {
  SynthCorpus out;
  Rng gen_rng = Rng(opts.seed).derive("synth-derivations");
  Rng cover_rng = Rng(opts.seed).derive("synth-coverage");
  Rng noise_rng = Rng(opts.seed).derive("synth-noise");

  for (int sid = 0; sid < opts.n_sentences; ++sid) {
    Sentence sent;
    GoldTree tree;
    for (;;) {
      sent.tokens.clear();
      tree.spans.clear();
      tree.pos.clear();
      try {
        detail::expand_symbol(grammar, grammar.start, 0, opts.depth_cap, gen_rng, sent.tokens,
                              tree.spans, tree.pos);
      } catch (const detail::DerivationTooDeep&) {
        ++out.resampled;
        continue;
      }
      if (opts.max_len > 0 && static_cast<int>(sent.tokens.size()) > opts.max_len) {
        ++out.resampled;
        continue;
      }
      break;
    }
    tree.n_leaves = static_cast<int>(sent.tokens.size());
    sent.id = sid;

    // constraints: gold constituents whose yield is an entity phrase
    bool covered = cover_rng.next_double() < opts.constraint_fraction;
    std::set<Span> gold_pairs;
    for (const auto& sp : tree.spans) gold_pairs.insert({sp.start, sp.end});
    std::set<Span> cons;
    for (const auto& sp : tree.spans) {
      int w = sp.end - sp.start;
      if (w < 2 || (sp.start == 0 && sp.end == tree.n_leaves)) continue;
      std::vector<std::string> yield(sent.tokens.begin() + sp.start,
                                     sent.tokens.begin() + sp.end);
      if (!entity_lexicon.count(yield)) continue;
      sent.entity_spans.push_back({sp.start, sp.end, "ENT"});
      cons.insert({sp.start, sp.end});
    }
    if (covered && !cons.empty()) {
      std::set<Span> emitted;
      for (const auto& c : cons) {
        Span use = c;
        if (opts.noise_pct > 0 && noise_rng.next_double() * 100.0 < opts.noise_pct) {
          int n = tree.n_leaves;
          for (int attempt = 0; attempt < 50; ++attempt) {
            int i = static_cast<int>(noise_rng.next_below(n - 1));
            int maxw = n - i;
            int w = 2 + static_cast<int>(noise_rng.next_below(std::max(1, maxw - 1)));
            if (i + w > n) continue;
            Span cand{i, i + w};
            if (cand.first == 0 && cand.second == n) continue;
            if (gold_pairs.count(cand)) continue;
            use = cand;
            break;
          }
        }
        emitted.insert(use);
      }
      out.constraints[sid] = std::move(emitted);
    }
    sent.gold = std::move(tree);
    out.sentences.push_back(std::move(sent));
  }
  return out;
}

inline void write_corpus_files(const SynthCorpus& corpus, const std::string& prefix) {
  std::ofstream toks(prefix + ".tokens");
  std::ofstream brackets(prefix + ".brackets");
  if (!toks || !brackets) throw DataError("cannot write corpus files at prefix: " + prefix);
  for (const auto& sent : corpus.sentences) {
    toks << join(sent.tokens, " ") << "\n";
    // render the gold tree back to a bracketed line
    const GoldTree& g = *sent.gold;
    std::string line;
    auto rec = [&](auto&& self, std::size_t span_idx) -> void {
      const LabeledSpan& node = g.spans[span_idx];
      line += "(" + node.label;
      int cursor = node.start;
      while (cursor < node.end) {
        // first later pre-order span starting at cursor inside node; this is
        // the direct child there (pre-order lists ancestors first, and a
        // same-extent hit is a unary child)
        std::size_t child = g.spans.size();
        for (std::size_t t = span_idx + 1; t < g.spans.size(); ++t) {
          const auto& cand = g.spans[t];
          if (cand.start == cursor && cand.end <= node.end) {
            child = t;
            break;
          }
        }
        line += " ";
        if (child < g.spans.size()) {
          self(self, child);
          cursor = g.spans[child].end;
        } else {
          if (!g.pos[cursor].empty())
            line += "(" + g.pos[cursor] + " " + sent.tokens[cursor] + ")";
          else
            line += sent.tokens[cursor];
          ++cursor;
        }
      }
      line += ")";
    };
    if (!g.spans.empty()) {
      rec(rec, 0);
    } else {
      line = "(" + std::string("S") + " " + sent.tokens[0] + ")";
    }
    brackets << line << "\n";
  }
  save_constraints(corpus.constraints, prefix + ".constraints.tsv");
}

}  // namespace silt
