// silt: distantly supervised latent tree induction.
//
// Subcommands: synth | extract-constraints | train | parse | eval | stats |
// gradcheck. Every run writes a manifest next to its primary output. Exit
// codes: 0 success, 1 usage, 2 data error, 3 numerical failure.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "silt/silt.hpp"

namespace {

using namespace silt;

std::vector<int> sentence_lengths(const std::vector<Sentence>& sents) {
  std::vector<int> out;
  out.reserve(sents.size());
  for (const auto& s : sents) out.push_back(s.size());
  return out;
}

std::string fmt(double x, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, x);
  return buf;
}

void write_kv_file(const std::string& path, const std::vector<std::pair<std::string, std::string>>& kvs) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write key-value file: " + path);
  for (const auto& [k, v] : kvs) out << k << "=" << v << "\n";
}

CorpusFormat parse_format(const std::string& s) {
  if (s == "tokens") return CorpusFormat::Tokens;
  if (s == "brackets") return CorpusFormat::PtbBrackets;
  throw DataError("unknown corpus format: " + s);
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string out_dir;
  int n_train = 2000;
  int n_heldout = 300;
  std::uint64_t seed = 1;
  double constraint_fraction = 0.5;
  double heldout_constraint_fraction = 1.0;
  double noise_pct = 0.0;
  std::string grammar_file;
  std::string entity_lexicon_file;
  int depth_cap = 40;
  int max_len = 0;
};

int run_synth(const SynthArgs& a) {
  Grammar grammar = a.grammar_file.empty() ? default_grammar() : parse_grammar_file(a.grammar_file);
  std::set<std::vector<std::string>> lexicon;
  if (!a.entity_lexicon_file.empty()) {
    std::ifstream in(a.entity_lexicon_file);
    if (!in) throw DataError("cannot open entity lexicon: " + a.entity_lexicon_file);
    std::string line;
    while (std::getline(in, line)) {
      auto toks = split_ws(line);
      if (toks.size() >= 2) lexicon.insert(toks);
    }
  } else {
    lexicon = entity_lexicon_from_grammar(grammar);
  }
  if (lexicon.empty())
    std::cerr << "warning: empty entity lexicon; no constraints will be generated\n";

  std::filesystem::create_directories(a.out_dir);
  SynthOptions train_opts;
  train_opts.n_sentences = a.n_train;
  train_opts.seed = a.seed;
  train_opts.constraint_fraction = a.constraint_fraction;
  train_opts.noise_pct = a.noise_pct;
  train_opts.depth_cap = a.depth_cap;
  train_opts.max_len = a.max_len;
  SynthCorpus train_corpus = generate(grammar, lexicon, train_opts);
  write_corpus_files(train_corpus, a.out_dir + "/train");

  if (a.n_heldout > 0) {
    SynthOptions held_opts = train_opts;
    held_opts.n_sentences = a.n_heldout;
    held_opts.seed = a.seed ^ 0x9e3779b97f4a7c15ull;
    held_opts.constraint_fraction = a.heldout_constraint_fraction;
    held_opts.noise_pct = 0.0;
    SynthCorpus heldout = generate(grammar, lexicon, held_opts);
    write_corpus_files(heldout, a.out_dir + "/heldout");
  }

  {
    std::ofstream lex_out(a.out_dir + "/entity_lexicon.txt");
    for (const auto& p : lexicon) lex_out << join(p, " ") << "\n";
  }

  std::map<std::string, std::string> opts{
      {"n_train", std::to_string(a.n_train)},
      {"n_heldout", std::to_string(a.n_heldout)},
      {"seed", std::to_string(a.seed)},
      {"constraint_fraction", fmt(a.constraint_fraction, 6)},
      {"heldout_constraint_fraction", fmt(a.heldout_constraint_fraction, 6)},
      {"noise_pct", fmt(a.noise_pct, 6)},
      {"grammar", a.grammar_file.empty() ? "<default>" : a.grammar_file},
      {"depth_cap", std::to_string(a.depth_cap)},
      {"max_len", std::to_string(a.max_len)},
  };
  write_manifest(a.out_dir + "/synth", "synth", opts);

  std::cout << "synth: wrote " << train_corpus.sentences.size() << " train sentences ("
            << count_constraints(train_corpus.constraints) << " constraints, "
            << train_corpus.resampled << " resampled) to " << a.out_dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct ExtractArgs {
  std::string corpus;
  std::string format = "tokens";
  std::string method;
  std::string out;
  std::string gazetteer;
  int pmi_passes = 1;
  double pmi_delta = -1.0;
  int pmi_min_count = 0;
  std::string lexicon_out;
  std::string labels;
  int target_count = -1;
  bool forbid_nesting = false;
  std::uint64_t seed = 1;
};

int run_extract(const ExtractArgs& a) {
  std::vector<std::string> warnings;
  auto sents = load_corpus(a.corpus, parse_format(a.format), &warnings);
  print_warnings(warnings);

  SpanMap constraints;
  std::map<std::string, std::string> opts{{"method", a.method}, {"corpus", a.corpus}};
  if (a.method == "gazetteer") {
    if (a.gazetteer.empty()) throw DataError("--gazetteer is required for method gazetteer");
    GazetteerIndex idx = GazetteerIndex::from_file(a.gazetteer);
    constraints = match_gazetteer(sents, idx);
    opts["gazetteer"] = a.gazetteer;
    std::cout << "gazetteer phrases: " << idx.phrase_count() << "\n";
  } else if (a.method == "pmi") {
    PmiLexicon lex = induce_pmi_phrases(sents, a.pmi_passes, a.pmi_delta, a.pmi_min_count);
    constraints = match_pmi(sents, lex);
    if (!a.lexicon_out.empty()) save_lexicon(lex, a.lexicon_out);
    opts["pmi_passes"] = std::to_string(a.pmi_passes);
    opts["pmi_delta"] = fmt(lex.delta, 6);
    opts["pmi_min_count"] = std::to_string(a.pmi_min_count);
    std::cout << "pmi lexicon size: " << lex.size() << " (delta=" << fmt(lex.delta, 6) << ")\n";
  } else if (a.method == "synth") {
    if (a.labels.empty()) throw DataError("--labels is required for method synth");
    std::set<std::string> labels;
    std::stringstream ss(a.labels);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) labels.insert(item);
    }
    constraints = synth_constraints(sents, labels);
    opts["labels"] = a.labels;
  } else {
    throw DataError("unknown extraction method: " + a.method);
  }

  if (a.forbid_nesting || a.target_count >= 0) {
    int target = a.target_count >= 0 ? a.target_count : count_constraints(constraints);
    RestrictResult r = restrict_constraints(constraints, target, a.forbid_nesting, a.seed);
    if (a.target_count >= 0 && r.shortfall > 0)
      std::cerr << "warning: requested " << target << " constraints but only "
                << count_constraints(r.constraints) << " available\n";
    constraints = std::move(r.constraints);
    opts["target_count"] = std::to_string(a.target_count);
    opts["forbid_nesting"] = a.forbid_nesting ? "1" : "0";
    opts["seed"] = std::to_string(a.seed);
  }

  save_constraints(constraints, a.out);
  write_manifest(a.out, "extract-constraints", opts);
  std::cout << "extract-constraints: " << count_constraints(constraints) << " constraints over "
            << constraints.size() << " sentences -> " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string corpus;
  std::string corpus_format = "tokens";
  std::string constraints;
  std::string val;
  std::string val_constraints;
  std::string out_dir;
  std::string init;
  bool resume = false;
  TrainConfig cfg;
  std::string variant = "rescale";
};

int run_train(const TrainArgs& a) {
  TrainConfig cfg = a.cfg;
  cfg.variant = parse_variant(a.variant);

  std::vector<std::string> warnings;
  auto train_sents = load_corpus(a.corpus, parse_format(a.corpus_format), &warnings);
  print_warnings(warnings);

  SpanMap train_cons;
  if (!a.constraints.empty()) {
    auto loaded = load_constraints(a.constraints, sentence_lengths(train_sents));
    if (loaded.rejected > 0)
      std::cerr << "warning: rejected " << loaded.rejected << " constraint lines\n";
    train_cons = std::move(loaded.by_sentence);
  }

  std::vector<Sentence> val_sents;
  SpanMap val_cons;
  if (!a.val.empty()) {
    val_sents = load_corpus(a.val, CorpusFormat::PtbBrackets, &warnings);
    if (!a.val_constraints.empty()) {
      auto loaded = load_constraints(a.val_constraints, sentence_lengths(val_sents));
      val_cons = std::move(loaded.by_sentence);
    }
  }

  ModelParams params;
  Adam adam;
  Vocab vocab;
  int start_epoch = 0;
  if (!a.init.empty()) {
    Checkpoint ck = load_checkpoint(a.init);
    if (ck.params.dim != cfg.dim)
      throw DataError("checkpoint dimension " + std::to_string(ck.params.dim) +
                      " does not match --dim " + std::to_string(cfg.dim));
    params = std::move(ck.params);
    vocab = std::move(ck.vocab);
    if (a.resume) {
      if (!ck.has_optimizer) throw DataError("--resume needs optimizer state in the checkpoint");
      if (ck.config_hash != cfg.hash())
        throw DataError("checkpoint config hash mismatch; refusing to resume");
      adam = std::move(ck.adam);
      start_epoch = static_cast<int>(ck.completed_epochs);
    } else {
      adam.init(params);
    }
  } else {
    vocab = build_vocab(train_sents, cfg.vocab_cap, cfg.vocab_min_count);
    params = ModelParams(vocab.size(), cfg.dim);
    params.init(cfg.seed);
    adam.init(params);
  }

  std::filesystem::create_directories(a.out_dir);
  save_vocab(vocab, a.out_dir + "/vocab.txt");

  TrainSink sink;
  sink.out_dir = a.out_dir;
  sink.progress = &std::cout;
  TrainResult result = train(params, adam, vocab, train_sents, train_cons, val_sents, val_cons,
                             cfg, start_epoch, sink);

  auto opts = cfg.as_options();
  opts["corpus"] = a.corpus;
  opts["constraints"] = a.constraints;
  opts["val"] = a.val;
  opts["init"] = a.init;
  write_manifest(a.out_dir + "/train", "train", opts, vocab.hash());

  if (result.diverged) {
    std::cerr << "training diverged (non-finite loss); last good checkpoint retained in "
              << a.out_dir << "\n";
    throw NumericError("training diverged");
  }
  if (result.best_index >= 0) {
    const auto& best = result.history[result.best_index];
    std::cout << "train: best val_f1=" << fmt(best.val_f1) << " at step " << best.step << " ("
              << result.history.size() << " evals, " << result.epochs_completed << " epochs)\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct ParseArgs {
  std::string checkpoint;
  std::string corpus;
  std::string corpus_format = "tokens";
  std::string out;
  bool constrained = false;
  std::string constraints;
  std::string ccky_mode = "lex";
  double epsilon = 1.0;
  int threads = 1;
  std::string dump_chart;
  std::string expect_config_hash;
};

int run_parse(const ParseArgs& a) {
  Checkpoint ck = load_checkpoint(a.checkpoint);
  if (!a.expect_config_hash.empty() && hex64(ck.config_hash) != a.expect_config_hash)
    throw DataError("checkpoint config hash " + hex64(ck.config_hash) +
                    " does not match expected " + a.expect_config_hash);

  std::vector<std::string> warnings;
  auto sents = load_corpus(a.corpus, parse_format(a.corpus_format), &warnings);
  print_warnings(warnings);

  SpanMap constraints;
  if (a.constrained) {
    if (a.constraints.empty()) throw DataError("--constrained requires --constraints");
    auto loaded = load_constraints(a.constraints, sentence_lengths(sents));
    if (loaded.rejected > 0)
      std::cerr << "warning: rejected " << loaded.rejected << " constraint lines\n";
    constraints = std::move(loaded.by_sentence);
  }

  CckyMode mode = a.ccky_mode == "epsilon" ? CckyMode::Epsilon : CckyMode::Lexicographic;
  if (a.ccky_mode != "lex" && a.ccky_mode != "epsilon")
    throw DataError("unknown ccky mode: " + a.ccky_mode);

  auto trees = predict_trees(ck.params, ck.vocab, sents, a.constrained ? &constraints : nullptr,
                             mode, a.epsilon, a.threads);

  std::vector<std::vector<std::string>> tokens;
  tokens.reserve(sents.size());
  for (const auto& s : sents) tokens.push_back(s.tokens);
  write_predictions(trees, tokens, a.out);

  if (!a.dump_chart.empty()) {
    std::ofstream dump(a.dump_chart);
    if (!dump) throw DataError("cannot write chart dump: " + a.dump_chart);
    dump << "# silt chart dump (unstable format): cell sid i j s_in s_out | split sid i j k "
            "local total\n";
    Tape tape;
    for (const auto& sent : sents) {
      tape.reset();
      std::vector<int> ids = ck.vocab.encode(sent.tokens);
      Chart chart = inside_pass(tape, ck.params, ids, std::max(sent.size(), 1));
      outside_pass(tape, ck.params, chart);
      int n = chart.n();
      char buf[256];
      for (int w = 1; w <= n; ++w)
        for (int i = 0; i + w <= n; ++i) {
          std::snprintf(buf, sizeof(buf), "cell %d %d %d %.17g %.17g", sent.id, i, i + w,
                        w == 1 ? 0.0 : tape.scalar(chart.s_in(i, i + w)),
                        tape.scalar(chart.s_out(i, i + w)));
          dump << buf << "\n";
        }
      for (int w = 2; w <= n; ++w)
        for (int i = 0; i + w <= n; ++i)
          for (int k = i + 1; k < i + w; ++k) {
            std::snprintf(buf, sizeof(buf), "split %d %d %d %d %.17g %.17g", sent.id, i, i + w, k,
                          tape.scalar(chart.split_local(i, i + w, k)),
                          tape.scalar(chart.split_total(i, i + w, k)));
            dump << buf << "\n";
          }
    }
  }

  std::map<std::string, std::string> opts{
      {"checkpoint", a.checkpoint},
      {"corpus", a.corpus},
      {"constrained", a.constrained ? "1" : "0"},
      {"constraints", a.constraints},
      {"ccky_mode", a.ccky_mode},
      {"epsilon", fmt(a.epsilon, 6)},
      {"checkpoint_config_hash", hex64(ck.config_hash)},
  };
  write_manifest(a.out, "parse", opts, ck.vocab.hash());
  std::cout << "parse: wrote " << trees.size() << " predictions -> " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string pred;
  std::string gold;
  std::string constraints;
  std::string out;
  std::string kv;
  std::string punct = "auto";
  bool buckets = false;
  bool upper_bound = false;
};

int run_eval(const EvalArgs& a) {
  check_vocab_hashes_match({a.pred, a.gold, a.constraints});

  std::vector<std::string> warnings;
  auto preds = load_corpus(a.pred, CorpusFormat::PtbBrackets, &warnings);
  auto golds = load_corpus(a.gold, CorpusFormat::PtbBrackets, &warnings);
  print_warnings(warnings);
  if (preds.size() != golds.size())
    throw DataError("prediction/gold sentence count mismatch: " + std::to_string(preds.size()) +
                    " vs " + std::to_string(golds.size()));

  PunctPolicy policy = parse_punct_policy(a.punct);
  std::vector<std::set<Span>> pred_spans;
  pred_spans.reserve(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].tokens != golds[i].tokens)
      throw DataError("token mismatch at sentence " + std::to_string(i));
    pred_spans.push_back(preds[i].gold ? preds[i].gold->span_set() : std::set<Span>{});
  }

  double f1 = corpus_f1(pred_spans, golds, policy);

  std::map<std::string, std::string> opts{
      {"pred", a.pred}, {"gold", a.gold}, {"constraints", a.constraints}, {"punct", a.punct}};
  std::uint64_t run_hash = config_hash(opts);

  std::ostringstream report;
  report << "silt eval report\n";
  report << "  config_hash:  " << hex64(run_hash) << "\n";
  report << "  punct_policy: " << to_string(policy) << "\n";
  report << "  sentences:    " << golds.size() << "\n";
  report << "  corpus_f1:    " << fmt(f1) << "\n";
  std::vector<std::pair<std::string, std::string>> kvs{
      {"config_hash", hex64(run_hash)},
      {"punct_policy", to_string(policy)},
      {"sentences", std::to_string(golds.size())},
      {"corpus_f1", fmt(f1)},
  };

  SpanMap cons;
  if (!a.constraints.empty()) {
    auto loaded = load_constraints(a.constraints, sentence_lengths(golds));
    cons = std::move(loaded.by_sentence);
    double recall = span_recall(pred_spans, cons);
    report << "  span_recall:  " << fmt(recall) << " (" << count_constraints(cons)
           << " constraint spans)\n";
    kvs.push_back({"span_recall", fmt(recall)});
    kvs.push_back({"n_constraints", std::to_string(count_constraints(cons))});
  }
  if (a.upper_bound) {
    double ub = binarized_upper_bound(golds, policy);
    report << "  binarized_ub: " << fmt(ub) << "\n";
    kvs.push_back({"binarized_ub", fmt(ub)});
  }
  if (a.buckets) {
    auto rows = bucket_report(pred_spans, golds, cons, policy);
    report << "\n  top-constituent buckets\n";
    report << "  label            n     n_z     F1      R^z\n";
    for (const auto& row : rows) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "  %-12s %6d %7d %7.1f %8s\n", row.label.c_str(), row.n,
                    row.n_z, row.f1, row.has_recall ? fmt(row.recall, 1).c_str() : "-");
      report << buf;
      kvs.push_back({"bucket." + row.label + ".n", std::to_string(row.n)});
      kvs.push_back({"bucket." + row.label + ".n_z", std::to_string(row.n_z)});
      kvs.push_back({"bucket." + row.label + ".f1", fmt(row.f1, 1)});
      if (row.has_recall) kvs.push_back({"bucket." + row.label + ".recall", fmt(row.recall, 1)});
    }
  }

  if (a.out.empty()) {
    std::cout << report.str();
  } else {
    std::ofstream out(a.out);
    if (!out) throw DataError("cannot write report: " + a.out);
    out << report.str();
    write_manifest(a.out, "eval", opts);
    std::cout << "eval: corpus_f1=" << fmt(f1) << " -> " << a.out << "\n";
  }
  if (!a.kv.empty()) write_kv_file(a.kv, kvs);
  return 0;
}

// ---------------------------------------------------------------------------

struct StatsArgs {
  std::string constraints;
  std::string gold;
  std::string out;
  std::string kv;
};

int run_stats(const StatsArgs& a) {
  std::vector<std::string> warnings;
  auto golds = load_corpus(a.gold, CorpusFormat::PtbBrackets, &warnings);
  print_warnings(warnings);
  auto loaded = load_constraints(a.constraints, sentence_lengths(golds));
  ConstraintStats st = constraint_stats(loaded.by_sentence, golds);

  std::map<std::string, std::string> opts{{"constraints", a.constraints}, {"gold", a.gold}};
  std::uint64_t run_hash = config_hash(opts);

  std::ostringstream report;
  report << "silt constraint statistics\n";
  report << "  config_hash:       " << hex64(run_hash) << "\n";
  report << "  n_z:               " << st.n_z << "\n";
  report << "  exact_match_pct:   " << fmt(st.em_pct, 1) << "\n";
  report << "  crossing_pct:      " << fmt(st.crossing_pct, 1) << "\n";
  report << "  sentences:         " << st.n_sentences << "\n";
  report << "  gold_spans:        " << st.gold_total << "\n";
  report << "  spans_per_sentence: " << fmt(st.spans_per_sentence, 2) << "\n";
  report << "\n  gold spans found among constraints, by label\n";
  report << "  label          found   total    pct\n";
  std::vector<std::pair<std::string, std::string>> kvs{
      {"config_hash", hex64(run_hash)},
      {"n_z", std::to_string(st.n_z)},
      {"exact_match_pct", fmt(st.em_pct, 1)},
      {"crossing_pct", fmt(st.crossing_pct, 1)},
      {"sentences", std::to_string(st.n_sentences)},
      {"gold_spans", std::to_string(st.gold_total)},
      {"spans_per_sentence", fmt(st.spans_per_sentence, 2)},
  };
  for (const auto& [label, counts] : st.per_label) {
    double pct = counts.second ? 100.0 * counts.first / counts.second : 0.0;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "  %-12s %7d %7d %6.1f\n", label.c_str(), counts.first,
                  counts.second, pct);
    report << buf;
    kvs.push_back({"label." + label + ".pct", fmt(pct, 1)});
  }
  double total_pct = st.gold_total ? 100.0 * st.gold_found / st.gold_total : 0.0;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "  %-12s %7d %7d %6.1f\n", "Total", st.gold_found,
                st.gold_total, total_pct);
  report << buf;
  kvs.push_back({"label.Total.pct", fmt(total_pct, 1)});

  if (a.out.empty()) {
    std::cout << report.str();
  } else {
    std::ofstream out(a.out);
    if (!out) throw DataError("cannot write report: " + a.out);
    out << report.str();
    write_manifest(a.out, "stats", opts);
  }
  if (!a.kv.empty()) write_kv_file(a.kv, kvs);
  return 0;
}

// ---------------------------------------------------------------------------

struct GradcheckArgs {
  int dim = 32;
  int len = 5;
  int vocab = 12;
  std::uint64_t seed = 1;
  double eps = 1e-5;
  double tol = 1e-4;
  std::string variant = "all";
};

int run_gradcheck(const GradcheckArgs& a) {
  std::vector<PsVariant> variants;
  if (a.variant == "all")
    variants = {PsVariant::Ncbl, PsVariant::MinDifference, PsVariant::Rescale,
                PsVariant::StructuredRamp};
  else
    variants = {parse_variant(a.variant)};

  Rng rng = Rng(a.seed).derive("gradcheck-tokens");
  std::vector<int> toks;
  for (int i = 0; i < a.len; ++i) toks.push_back(static_cast<int>(rng.next_below(a.vocab)));
  std::set<Span> z;
  if (a.len >= 3) z.insert({1, std::min(3, a.len)});

  bool ok = true;
  for (PsVariant v : variants) {
    ModelParams params(a.vocab, a.dim);
    params.init(a.seed);
    auto compute = [&](bool want_grad) {
      Tape tape;
      InstanceLoss loss = instance_loss(tape, params, toks, z, v);
      if (want_grad) tape.backward(loss.total);
      return tape.scalar(loss.total);
    };
    GradCheckReport rep = grad_check(params.all(), compute, a.eps);
    bool pass = rep.pass(a.tol);
    ok = ok && pass;
    std::printf("%-11s max_rel_err=%.3e (%zu coords) worst=%s[%zu] analytic=%.6e numeric=%.6e %s\n",
                to_string(v).c_str(), rep.max_rel_err, rep.n_checked, rep.worst_tensor.c_str(),
                rep.worst_index, rep.worst_analytic, rep.worst_numeric,
                pass ? "PASS" : "FAIL");
  }
  if (!ok) throw NumericError("gradient check failed");
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------

int main(int argc, char** argv) {
  CLI::App app{"silt: distantly supervised latent tree induction"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic PCFG corpus");
  synth_cmd->set_config("--config");
  synth_cmd->add_option("--out", synth_args.out_dir, "output directory")->required();
  synth_cmd->add_option("--n-train", synth_args.n_train);
  synth_cmd->add_option("--n-heldout", synth_args.n_heldout);
  synth_cmd->add_option("--seed", synth_args.seed);
  synth_cmd->add_option("--constraint-fraction", synth_args.constraint_fraction,
                        "fraction of train sentences that emit constraints");
  synth_cmd->add_option("--heldout-constraint-fraction", synth_args.heldout_constraint_fraction);
  synth_cmd->add_option("--noise", synth_args.noise_pct,
                        "percent of constraints flipped to non-constituent spans");
  synth_cmd->add_option("--grammar", synth_args.grammar_file, "PCFG file (default: built-in)");
  synth_cmd->add_option("--entity-lexicon", synth_args.entity_lexicon_file);
  synth_cmd->add_option("--depth-cap", synth_args.depth_cap);
  synth_cmd->add_option("--max-len", synth_args.max_len, "resample sentences longer than this");

  ExtractArgs ex_args;
  auto* ex_cmd = app.add_subcommand("extract-constraints", "mine span constraints from a corpus");
  ex_cmd->set_config("--config");
  ex_cmd->add_option("--corpus", ex_args.corpus)->required();
  ex_cmd->add_option("--format", ex_args.format, "tokens|brackets");
  ex_cmd->add_option("--method", ex_args.method, "gazetteer|pmi|synth")->required();
  ex_cmd->add_option("--out", ex_args.out)->required();
  ex_cmd->add_option("--gazetteer", ex_args.gazetteer);
  ex_cmd->add_option("--pmi-passes", ex_args.pmi_passes);
  ex_cmd->add_option("--pmi-delta", ex_args.pmi_delta, "score threshold; <0 = 1e-3 * token count");
  ex_cmd->add_option("--pmi-min-count", ex_args.pmi_min_count);
  ex_cmd->add_option("--lexicon-out", ex_args.lexicon_out);
  ex_cmd->add_option("--labels", ex_args.labels, "comma-separated constituent labels");
  ex_cmd->add_option("--target-count", ex_args.target_count, "downsample to this many");
  ex_cmd->add_flag("--forbid-nesting", ex_args.forbid_nesting);
  ex_cmd->add_option("--seed", ex_args.seed);

  TrainArgs tr_args;
  auto* tr_cmd = app.add_subcommand("train", "train the chart encoder");
  tr_cmd->set_config("--config");
  tr_cmd->add_option("--corpus", tr_args.corpus)->required();
  tr_cmd->add_option("--corpus-format", tr_args.corpus_format, "tokens|brackets");
  tr_cmd->add_option("--constraints", tr_args.constraints, "enables the PS-SVM loss");
  tr_cmd->add_option("--val", tr_args.val, "bracketed validation corpus");
  tr_cmd->add_option("--val-constraints", tr_args.val_constraints);
  tr_cmd->add_option("--out", tr_args.out_dir)->required();
  tr_cmd->add_option("--init", tr_args.init, "checkpoint to start from");
  tr_cmd->add_flag("--resume", tr_args.resume, "continue epochs/optimizer from --init");
  tr_cmd->add_option("--dim", tr_args.cfg.dim);
  tr_cmd->add_option("--lr", tr_args.cfg.lr);
  tr_cmd->add_option("--batch-size", tr_args.cfg.batch_size);
  tr_cmd->add_option("--epochs", tr_args.cfg.max_epochs);
  tr_cmd->add_option("--max-len", tr_args.cfg.max_len);
  tr_cmd->add_option("--variant", tr_args.variant, "ncbl|mindiff|rescale|structramp");
  tr_cmd->add_option("--lambda", tr_args.cfg.lambda_ps, "PS-SVM loss weight");
  tr_cmd->add_option("--margin", tr_args.cfg.margin);
  tr_cmd->add_flag("--rescale-raw", tr_args.cfg.rescale_raw);
  tr_cmd->add_option("--seed", tr_args.cfg.seed);
  tr_cmd->add_option("--eval-every", tr_args.cfg.eval_every, "steps between evals; 0 = per epoch");
  tr_cmd->add_option("--patience", tr_args.cfg.patience);
  tr_cmd->add_option("--vocab-cap", tr_args.cfg.vocab_cap);
  tr_cmd->add_option("--min-count", tr_args.cfg.vocab_min_count);
  tr_cmd->add_option("--val-sample", tr_args.cfg.val_sample);
  tr_cmd->add_option("--threads", tr_args.cfg.threads);
  tr_cmd->add_option("--clip-norm", tr_args.cfg.clip_norm);

  ParseArgs pa_args;
  auto* pa_cmd = app.add_subcommand("parse", "decode trees with a trained model");
  pa_cmd->set_config("--config");
  pa_cmd->add_option("--checkpoint", pa_args.checkpoint)->required();
  pa_cmd->add_option("--corpus", pa_args.corpus)->required();
  pa_cmd->add_option("--corpus-format", pa_args.corpus_format, "tokens|brackets");
  pa_cmd->add_option("--out", pa_args.out)->required();
  pa_cmd->add_flag("--constrained", pa_args.constrained, "decode with constrained CKY");
  pa_cmd->add_option("--constraints", pa_args.constraints);
  pa_cmd->add_option("--ccky-mode", pa_args.ccky_mode, "lex|epsilon");
  pa_cmd->add_option("--epsilon", pa_args.epsilon);
  pa_cmd->add_option("--threads", pa_args.threads);
  pa_cmd->add_option("--dump-chart", pa_args.dump_chart, "debug chart dump (unstable format)");
  pa_cmd->add_option("--expect-config-hash", pa_args.expect_config_hash);

  EvalArgs ev_args;
  auto* ev_cmd = app.add_subcommand("eval", "score predictions against gold trees");
  ev_cmd->set_config("--config");
  ev_cmd->add_option("--pred", ev_args.pred)->required();
  ev_cmd->add_option("--gold", ev_args.gold)->required();
  ev_cmd->add_option("--constraints", ev_args.constraints, "also report span recall");
  ev_cmd->add_option("--out", ev_args.out, "report file (default stdout)");
  ev_cmd->add_option("--kv", ev_args.kv, "machine-readable key-value file");
  ev_cmd->add_option("--punct", ev_args.punct, "auto|pos|chars|none");
  ev_cmd->add_flag("--buckets", ev_args.buckets, "per-top-constituent breakdown");
  ev_cmd->add_flag("--upper-bound", ev_args.upper_bound, "binarized-gold upper bound");

  StatsArgs st_args;
  auto* st_cmd = app.add_subcommand("stats", "constraint/gold agreement statistics");
  st_cmd->set_config("--config");
  st_cmd->add_option("--constraints", st_args.constraints)->required();
  st_cmd->add_option("--gold", st_args.gold)->required();
  st_cmd->add_option("--out", st_args.out);
  st_cmd->add_option("--kv", st_args.kv);

  GradcheckArgs gc_args;
  auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference gradient check");
  gc_cmd->set_config("--config");
  gc_cmd->add_option("--dim", gc_args.dim);
  gc_cmd->add_option("--len", gc_args.len);
  gc_cmd->add_option("--vocab", gc_args.vocab);
  gc_cmd->add_option("--seed", gc_args.seed);
  gc_cmd->add_option("--eps", gc_args.eps);
  gc_cmd->add_option("--tol", gc_args.tol);
  gc_cmd->add_option("--variant", gc_args.variant, "all|ncbl|mindiff|rescale|structramp");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth_cmd->parsed()) return run_synth(synth_args);
    if (ex_cmd->parsed()) return run_extract(ex_args);
    if (tr_cmd->parsed()) return run_train(tr_args);
    if (pa_cmd->parsed()) return run_parse(pa_args);
    if (ev_cmd->parsed()) return run_eval(ev_args);
    if (st_cmd->parsed()) return run_stats(st_args);
    if (gc_cmd->parsed()) return run_gradcheck(gc_args);
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
