// Corpus I/O: token files, bracketed trees, vocabularies, prediction output.
//
// Formats:
//   tokens       one sentence per line, space separated, UTF-8
//   ptb_brackets one s-expression per line, e.g. (S (NP (DT the) (NN cat)) (VP (VBD sat)))
// All spans are half-open token intervals [start, end).
#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "silt/common.hpp"

namespace silt {

struct LabeledSpan {
  int start = 0;
  int end = 0;
  std::string label;
  bool operator==(const LabeledSpan&) const = default;
};

// Gold constituency tree stored as its labeled span set (pre-order) plus the
// per-token POS tags read off the preterminals. Gold trees may be n-ary.
struct GoldTree {
  int n_leaves = 0;
  std::vector<LabeledSpan> spans;      // pre-order; outermost first
  std::vector<std::string> pos;        // per token; "" when no preterminal

  std::set<Span> span_set() const {
    std::set<Span> out;
    for (const auto& s : spans) out.insert({s.start, s.end});
    return out;
  }

  // Label of the top-most constituent.
  std::string root_label() const {
    for (const auto& s : spans)
      if (s.start == 0 && s.end == n_leaves) return s.label;
    return "";
  }
};

struct Sentence {
  int id = 0;
  std::vector<std::string> tokens;
  std::optional<GoldTree> gold;
  std::vector<LabeledSpan> entity_spans;  // gold entity annotation, if any

  int size() const { return static_cast<int>(tokens.size()); }
};

// Unlabeled full binary bracketing: split point k for every internal span,
// i < k < j. A tree over n leaves has exactly n-1 internal spans (n >= 2).
struct BinaryTree {
  int n_leaves = 0;
  std::map<Span, int> splits;

  std::vector<Span> spans() const {
    std::vector<Span> out;
    out.reserve(splits.size());
    for (const auto& [sp, k] : splits) out.push_back(sp);
    return out;
  }

  std::set<Span> span_set() const {
    std::set<Span> out;
    for (const auto& [sp, k] : splits) out.insert(sp);
    return out;
  }

  bool has_span(const Span& s) const { return splits.count(s) > 0; }

  bool operator==(const BinaryTree& o) const {
    return n_leaves == o.n_leaves && splits == o.splits;
  }
};

// ---------------------------------------------------------------------------
// s-expression parsing

namespace detail {

struct SexprNode {
  std::string label;               // empty for bare terminals
  std::string terminal;            // set iff leaf token
  std::vector<SexprNode> kids;
  bool is_terminal() const { return kids.empty() && !terminal.empty(); }
};

inline SexprNode parse_sexpr_node(const std::string& s, std::size_t& p) {
  auto skip_ws = [&] { while (p < s.size() && std::isspace(static_cast<unsigned char>(s[p]))) ++p; };
  skip_ws();
  if (p >= s.size()) throw DataError("unexpected end of bracketing");
  if (s[p] != '(') {
    std::size_t b = p;
    while (p < s.size() && !std::isspace(static_cast<unsigned char>(s[p])) && s[p] != '(' && s[p] != ')') ++p;
    if (p == b) throw DataError("unexpected ')' in bracketing");
    SexprNode leaf;
    leaf.terminal = s.substr(b, p - b);
    return leaf;
  }
  ++p;  // '('
  skip_ws();
  SexprNode node;
  std::size_t b = p;
  while (p < s.size() && !std::isspace(static_cast<unsigned char>(s[p])) && s[p] != '(' && s[p] != ')') ++p;
  node.label = s.substr(b, p - b);
  skip_ws();
  while (p < s.size() && s[p] != ')') {
    node.kids.push_back(parse_sexpr_node(s, p));
    skip_ws();
  }
  if (p >= s.size()) throw DataError("unbalanced parentheses");
  ++p;  // ')'
  if (node.kids.empty() && node.label.empty())
    throw DataError("empty node in bracketing");
  return node;
}

inline int walk_sexpr(const SexprNode& node, int offset, std::vector<std::string>& tokens,
                      std::vector<LabeledSpan>& spans, std::vector<std::string>& pos) {
  if (node.is_terminal()) {
    tokens.push_back(node.terminal);
    pos.push_back("");
    return offset + 1;
  }
  if (node.kids.empty()) {
    // label with no children: treat the label itself as a bare token
    tokens.push_back(node.label);
    pos.push_back("");
    return offset + 1;
  }
  if (node.kids.size() == 1 && node.kids[0].is_terminal()) {
    // preterminal: contributes a POS tag, not a span
    tokens.push_back(node.kids[0].terminal);
    pos.push_back(node.label);
    return offset + 1;
  }
  std::size_t span_slot = spans.size();
  spans.push_back({offset, -1, node.label});  // end patched below
  int end = offset;
  for (const auto& kid : node.kids) end = walk_sexpr(kid, end, tokens, spans, pos);
  spans[span_slot].end = end;
  return end;
}

}  // namespace detail

// Parses one bracketed line into a Sentence with gold tree. Throws DataError.
inline Sentence parse_bracketed(const std::string& line) {
  std::size_t p = 0;
  detail::SexprNode root = detail::parse_sexpr_node(line, p);
  while (p < line.size() && std::isspace(static_cast<unsigned char>(line[p]))) ++p;
  if (p != line.size()) throw DataError("trailing characters after bracketing");
  // unwrap empty-label wrappers like "( (S ...) )"
  while (root.label.empty() && root.kids.size() == 1 && !root.kids[0].is_terminal())
    root = std::move(root.kids[0]);

  Sentence sent;
  GoldTree tree;
  detail::walk_sexpr(root, 0, sent.tokens, tree.spans, tree.pos);
  if (sent.tokens.empty()) throw DataError("bracketing yields no tokens");
  tree.n_leaves = static_cast<int>(sent.tokens.size());

  for (const auto& s : tree.spans) {
    if (!(0 <= s.start && s.start < s.end && s.end <= tree.n_leaves))
      throw DataError("span out of range in bracketing");
    for (const auto& t : tree.spans)
      if (spans_cross({s.start, s.end}, {t.start, t.end}))
        throw DataError("crossing spans in gold tree");
  }
  // Every non-preterminal root covers the whole sentence; single-token lines
  // like "(X a)" parse as a bare preterminal and carry no spans.
  if (tree.n_leaves >= 2 &&
      (tree.spans.empty() || tree.spans.front().start != 0 || tree.spans.front().end != tree.n_leaves))
    throw DataError("gold tree lacks full-sentence span");
  sent.gold = std::move(tree);
  return sent;
}

enum class CorpusFormat { Tokens, PtbBrackets };

inline std::vector<Sentence> load_corpus(const std::string& path, CorpusFormat format,
                                         std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file: " + path);
  std::vector<Sentence> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) {
      if (warnings)
        warnings->push_back(path + ":" + std::to_string(line_no) + ": empty line skipped");
      continue;
    }
    Sentence sent;
    if (format == CorpusFormat::Tokens) {
      sent.tokens = split_ws(line);
    } else {
      try {
        sent = parse_bracketed(line);
      } catch (const DataError& e) {
        throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    sent.id = static_cast<int>(out.size());
    out.push_back(std::move(sent));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Vocabulary

struct Vocab {
  std::vector<std::string> tokens;  // index -> token; UNK at index 0
  std::unordered_map<std::string, int> index;
  static constexpr const char* kUnk = "<unk>";

  int unk() const { return 0; }
  int size() const { return static_cast<int>(tokens.size()); }

  int lookup(const std::string& tok) const {
    auto it = index.find(tok);
    return it == index.end() ? 0 : it->second;
  }

  std::vector<int> encode(const std::vector<std::string>& toks) const {
    std::vector<int> ids;
    ids.reserve(toks.size());
    for (const auto& t : toks) ids.push_back(lookup(t));
    return ids;
  }

  std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& t : tokens) {
      h = fnv1a64(t, h);
      h = fnv1a64("\n", h);
    }
    return h;
  }
};

// Frequency-ranked vocabulary, ties broken lexicographically, UNK always at 0.
// size_cap counts UNK; tokens under min_count are dropped.
inline Vocab build_vocab(const std::vector<Sentence>& sentences, int size_cap,
                         int min_count = 1) {
  if (size_cap < 2) throw DataError("vocab size cap must be >= 2");
  std::map<std::string, long long> counts;
  for (const auto& s : sentences)
    for (const auto& t : s.tokens) ++counts[t];

  std::vector<std::pair<std::string, long long>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocab v;
  v.tokens.push_back(Vocab::kUnk);
  for (const auto& [tok, cnt] : ranked) {
    if (static_cast<int>(v.tokens.size()) >= size_cap) break;
    if (cnt < min_count) break;  // ranked by count, so all following are under too
    if (tok == Vocab::kUnk) continue;
    v.tokens.push_back(tok);
  }
  for (int i = 0; i < static_cast<int>(v.tokens.size()); ++i) v.index[v.tokens[i]] = i;
  return v;
}

inline void save_vocab(const Vocab& v, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write vocab file: " + path);
  for (const auto& t : v.tokens) out << t << "\n";
}

inline Vocab load_vocab(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocab file: " + path);
  Vocab v;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) v.tokens.push_back(line);
  }
  if (v.tokens.empty() || v.tokens[0] != Vocab::kUnk)
    throw DataError("vocab file missing UNK at index 0: " + path);
  for (int i = 0; i < static_cast<int>(v.tokens.size()); ++i) v.index[v.tokens[i]] = i;
  return v;
}

// ---------------------------------------------------------------------------
// Prediction output

inline std::string render_tree(const BinaryTree& tree, const std::vector<std::string>& tokens) {
  if (tree.n_leaves != static_cast<int>(tokens.size()))
    throw DataError("tree leaf count does not match token count");
  std::string out;
  auto rec = [&](auto&& self, int i, int j) -> void {
    if (j - i == 1) {
      out += "(X ";
      out += tokens[i];
      out += ")";
      return;
    }
    auto it = tree.splits.find({i, j});
    if (it == tree.splits.end()) throw DataError("tree is missing a split");
    out += "(X ";
    self(self, i, it->second);
    out += " ";
    self(self, it->second, j);
    out += ")";
  };
  rec(rec, 0, tree.n_leaves);
  return out;
}

inline void write_predictions(const std::vector<BinaryTree>& trees,
                              const std::vector<std::vector<std::string>>& tokens,
                              const std::string& path) {
  if (trees.size() != tokens.size())
    throw DataError("prediction count does not match sentence count");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write predictions file: " + path);
  for (std::size_t i = 0; i < trees.size(); ++i) out << render_tree(trees[i], tokens[i]) << "\n";
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace silt
