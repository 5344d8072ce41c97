#include "silt/synth.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "silt/eval.hpp"

using namespace silt;

namespace {

SynthOptions small_opts(int n, std::uint64_t seed) {
  SynthOptions o;
  o.n_sentences = n;
  o.seed = seed;
  o.constraint_fraction = 1.0;
  return o;
}

}  // namespace

TEST(Synth, SingleRuleGrammar) {
  std::istringstream in("S -> a : 1\n");
  Grammar g = parse_grammar(in);
  SynthCorpus corpus = generate(g, {}, small_opts(10, 3));
  ASSERT_EQ(corpus.sentences.size(), 10u);
  for (const auto& s : corpus.sentences) EXPECT_EQ(s.tokens, std::vector<std::string>{"a"});
  EXPECT_TRUE(corpus.constraints.empty());
}

TEST(Synth, GrammarParserRejectsBadLines) {
  std::istringstream in("S NP VP\n");
  EXPECT_THROW(parse_grammar(in), DataError);
  std::istringstream in2("S -> : 1\n");
  EXPECT_THROW(parse_grammar(in2), DataError);
  std::istringstream in3("Q -> a : 1\n");
  EXPECT_THROW(parse_grammar(in3), DataError);  // no start symbol rules
}

TEST(Synth, DefaultGrammarShape) {
  Grammar g = default_grammar();
  auto lexicon = entity_lexicon_from_grammar(g);
  EXPECT_EQ(lexicon.size(), 30u);
  for (const auto& p : lexicon) EXPECT_GE(p.size(), 2u);
}

TEST(Synth, DeterministicGivenSeed) {
  Grammar g = default_grammar();
  auto lexicon = entity_lexicon_from_grammar(g);
  SynthCorpus a = generate(g, lexicon, small_opts(100, 42));
  SynthCorpus b = generate(g, lexicon, small_opts(100, 42));
  ASSERT_EQ(a.sentences.size(), b.sentences.size());
  for (std::size_t i = 0; i < a.sentences.size(); ++i)
    EXPECT_EQ(a.sentences[i].tokens, b.sentences[i].tokens);
  EXPECT_EQ(a.constraints, b.constraints);

  SynthCorpus c = generate(g, lexicon, small_opts(100, 43));
  bool identical = a.sentences.size() == c.sentences.size();
  if (identical)
    for (std::size_t i = 0; i < a.sentences.size(); ++i)
      if (a.sentences[i].tokens != c.sentences[i].tokens) identical = false;
  EXPECT_FALSE(identical);
}

TEST(Synth, ZeroFractionMeansNoConstraints) {
  Grammar g = default_grammar();
  auto lexicon = entity_lexicon_from_grammar(g);
  SynthOptions o = small_opts(50, 7);
  o.constraint_fraction = 0.0;
  SynthCorpus corpus = generate(g, lexicon, o);
  EXPECT_TRUE(corpus.constraints.empty());
}

TEST(Synth, ConstraintsAreGoldConstituents) {
  Grammar g = default_grammar();
  auto lexicon = entity_lexicon_from_grammar(g);
  SynthCorpus corpus = generate(g, lexicon, small_opts(200, 11));
  EXPECT_GT(count_constraints(corpus.constraints), 0);
  auto st = constraint_stats(corpus.constraints, corpus.sentences);
  EXPECT_DOUBLE_EQ(st.em_pct, 100.0);
  EXPECT_DOUBLE_EQ(st.crossing_pct, 0.0);
}

TEST(Synth, NoiseKnobBreaksExactMatch) {
  Grammar g = default_grammar();
  auto lexicon = entity_lexicon_from_grammar(g);
  SynthOptions o = small_opts(200, 11);
  o.noise_pct = 100.0;
  SynthCorpus corpus = generate(g, lexicon, o);
  auto st = constraint_stats(corpus.constraints, corpus.sentences);
  EXPECT_LT(st.em_pct, 10.0);  // flipped spans are non-constituents by construction
}

TEST(Synth, MeanLengthInRange) {
  Grammar g = default_grammar();
  auto lexicon = entity_lexicon_from_grammar(g);
  SynthCorpus corpus = generate(g, lexicon, small_opts(500, 5));
  double total = 0;
  for (const auto& s : corpus.sentences) total += s.size();
  double mean = total / corpus.sentences.size();
  EXPECT_GT(mean, 6.0);
  EXPECT_LT(mean, 14.0);
}

TEST(Synth, BracketsRoundTripThroughCorpusIo) {
  Grammar g = default_grammar();
  auto lexicon = entity_lexicon_from_grammar(g);
  SynthCorpus corpus = generate(g, lexicon, small_opts(50, 23));
  auto prefix = (std::filesystem::temp_directory_path() / "silt_synth_rt").string();
  write_corpus_files(corpus, prefix);

  auto loaded = load_corpus(prefix + ".brackets", CorpusFormat::PtbBrackets);
  ASSERT_EQ(loaded.size(), corpus.sentences.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    EXPECT_EQ(loaded[i].tokens, corpus.sentences[i].tokens);
    ASSERT_TRUE(loaded[i].gold.has_value());
    // labeled spans survive the round trip (including unary ENT-under-NP)
    std::set<std::tuple<int, int, std::string>> got, want;
    for (const auto& sp : loaded[i].gold->spans) got.insert({sp.start, sp.end, sp.label});
    for (const auto& sp : corpus.sentences[i].gold->spans) want.insert({sp.start, sp.end, sp.label});
    EXPECT_EQ(got, want) << "sentence " << i;
  }

  std::vector<int> lens;
  for (const auto& s : loaded) lens.push_back(s.size());
  auto cons = load_constraints(prefix + ".constraints.tsv", lens);
  EXPECT_EQ(cons.rejected, 0);
  EXPECT_EQ(cons.by_sentence, corpus.constraints);

  auto toks = load_corpus(prefix + ".tokens", CorpusFormat::Tokens);
  ASSERT_EQ(toks.size(), corpus.sentences.size());
  for (std::size_t i = 0; i < toks.size(); ++i)
    EXPECT_EQ(toks[i].tokens, corpus.sentences[i].tokens);
}

TEST(Synth, DepthCapResamples) {
  Grammar g = default_grammar();
  auto lexicon = entity_lexicon_from_grammar(g);
  SynthOptions o = small_opts(100, 9);
  o.depth_cap = 5;
  SynthCorpus corpus = generate(g, lexicon, o);
  EXPECT_EQ(corpus.sentences.size(), 100u);
  EXPECT_GT(corpus.resampled, 0);
}

TEST(Synth, MaxLenResamples) {
  Grammar g = default_grammar();
  auto lexicon = entity_lexicon_from_grammar(g);
  SynthOptions o = small_opts(100, 9);
  o.max_len = 8;
  SynthCorpus corpus = generate(g, lexicon, o);
  for (const auto& s : corpus.sentences) EXPECT_LE(s.size(), 8);
  EXPECT_GT(corpus.resampled, 0);
}
