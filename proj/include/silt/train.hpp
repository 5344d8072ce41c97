// Training loop: length-bucketed shuffled batches, Adam with global-norm
// clipping, periodic validation F1 via CKY decoding, best-checkpoint retention
// with patience, and divergence abort.
//
// Determinism contract: every random stream derives from config.seed (and the
// epoch index, so resuming from a checkpoint replays the same batches), and
// per-sentence gradient buffers are reduced in sentence-id order, so runs with
// identical configs produce byte-identical metric logs at any --threads value.
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "silt/checkpoint.hpp"
#include "silt/constraints.hpp"
#include "silt/corpus.hpp"
#include "silt/decode.hpp"
#include "silt/eval.hpp"
#include "silt/manifest.hpp"
#include "silt/objective.hpp"
#include "silt/optimizer.hpp"

namespace silt {

struct TrainConfig {
  int dim = 32;
  double lr = 2e-3;
  int batch_size = 32;
  int max_epochs = 40;
  int max_len = kDefaultMaxLen;
  PsVariant variant = PsVariant::Rescale;
  double lambda_ps = 1.0;
  double margin = 1.0;
  bool rescale_raw = false;
  std::uint64_t seed = 1;
  int eval_every = 0;  // optimizer steps between evals; 0 = once per epoch
  int patience = 0;    // evals without F1 improvement before stopping; 0 = off
  int vocab_cap = 10000;
  int vocab_min_count = 1;
  int val_sample = 0;  // early-stop on a seeded sample of this many val sentences; 0 = all
  int threads = 1;
  double clip_norm = 5.0;

  std::map<std::string, std::string> as_options() const {
    char buf[64];
    auto fmt = [&](double x) {
      std::snprintf(buf, sizeof(buf), "%.17g", x);
      return std::string(buf);
    };
    return {
        {"dim", std::to_string(dim)},
        {"lr", fmt(lr)},
        {"batch_size", std::to_string(batch_size)},
        {"max_epochs", std::to_string(max_epochs)},
        {"max_len", std::to_string(max_len)},
        {"variant", to_string(variant)},
        {"lambda_ps", fmt(lambda_ps)},
        {"margin", fmt(margin)},
        {"rescale_raw", rescale_raw ? "1" : "0"},
        {"seed", std::to_string(seed)},
        {"eval_every", std::to_string(eval_every)},
        {"patience", std::to_string(patience)},
        {"vocab_cap", std::to_string(vocab_cap)},
        {"vocab_min_count", std::to_string(vocab_min_count)},
        {"val_sample", std::to_string(val_sample)},
        {"clip_norm", fmt(clip_norm)},
    };
  }

  std::uint64_t hash() const { return config_hash(as_options()); }
};

// ---------------------------------------------------------------------------
// decoding helpers

// CKY (or constrained CKY) trees for a sentence batch; forward passes only.
inline std::vector<BinaryTree> predict_trees(ModelParams& params, const Vocab& vocab,
                                             const std::vector<Sentence>& sentences,
                                             const SpanMap* constraints = nullptr,
                                             CckyMode mode = CckyMode::Lexicographic,
                                             double eps = 1.0, int threads = 1) {
  std::vector<BinaryTree> trees(sentences.size());
  auto decode_range = [&](std::size_t lo, std::size_t hi) {
    Tape tape;
    for (std::size_t i = lo; i < hi; ++i) {
      tape.reset();
      const Sentence& sent = sentences[i];
      std::vector<int> ids = vocab.encode(sent.tokens);
      Chart chart = inside_pass(tape, params, ids, std::max<int>(sent.size(), 1));
      ScoreGrid grid = score_grid(tape, chart);
      const std::set<Span>* z = nullptr;
      if (constraints) {
        auto it = constraints->find(sent.id);
        if (it != constraints->end()) z = &it->second;
      }
      trees[i] = z ? ccky(grid, *z, mode, eps) : cky(grid);
    }
  };
  if (threads <= 1 || sentences.size() < 2) {
    decode_range(0, sentences.size());
  } else {
    int n_workers = std::min<int>(threads, static_cast<int>(sentences.size()));
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(n_workers);
    std::size_t chunk = (sentences.size() + n_workers - 1) / n_workers;
    for (int w = 0; w < n_workers; ++w) {
      std::size_t lo = w * chunk, hi = std::min(sentences.size(), lo + chunk);
      workers.emplace_back([&, w, lo, hi] {
        try {
          decode_range(lo, hi);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : workers) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  return trees;
}

inline std::vector<std::set<Span>> tree_span_sets(const std::vector<BinaryTree>& trees) {
  std::vector<std::set<Span>> out;
  out.reserve(trees.size());
  for (const auto& t : trees) out.push_back(t.span_set());
  return out;
}

// index of the best validation F1; ties go to the earliest eval
inline int early_stop_select(const std::vector<double>& f1_history) {
  if (f1_history.empty()) throw DataError("early_stop_select: empty history");
  int best = 0;
  for (int i = 1; i < static_cast<int>(f1_history.size()); ++i)
    if (f1_history[i] > f1_history[best]) best = i;
  return best;
}

// ---------------------------------------------------------------------------
// training

struct EvalPoint {
  std::uint64_t step = 0;
  int epoch = 0;
  double j_rec = 0.0;
  double j_ps = 0.0;
  double val_f1 = 0.0;
  double constraint_recall = 0.0;
};

struct TrainResult {
  std::vector<EvalPoint> history;
  int best_index = -1;
  double best_f1 = 0.0;
  bool diverged = false;
  int epochs_completed = 0;
  std::string metrics_log;
};

struct TrainSink {
  std::string out_dir;              // when set: best.ckpt, last.ckpt, metrics.log, train.log
  std::ostream* progress = nullptr; // one line per eval
};

namespace detail {

// per-sentence gradient buffer; reduced into the shared tensors in id order
struct BufferSink : GradSink {
  ModelParams* params = nullptr;
  std::vector<std::vector<double>> bufs;

  void attach(ModelParams& p) {
    params = &p;
    auto ts = p.all();
    bufs.resize(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) bufs[i].assign(ts[i]->size(), 0.0);
  }

  void zero() {
    for (auto& b : bufs) std::fill(b.begin(), b.end(), 0.0);
  }

  double* grad_base(Tensor& t) override {
    auto ts = params->all();
    for (std::size_t i = 0; i < ts.size(); ++i)
      if (ts[i] == &t) return bufs[i].data();
    throw NumericError("gradient buffer has no slot for tensor " + t.name);
  }

  void reduce_into(ModelParams& p) const {
    auto ts = p.all();
    for (std::size_t i = 0; i < ts.size(); ++i)
      for (std::size_t k = 0; k < bufs[i].size(); ++k) ts[i]->g[k] += bufs[i][k];
  }
};

inline std::vector<std::vector<int>> make_batches(const std::vector<int>& usable,
                                                  const std::vector<int>& lengths,
                                                  int batch_size, std::uint64_t seed, int epoch) {
  // group by length, shuffle within groups, chunk, then shuffle chunk order
  std::map<int, std::vector<int>> by_len;
  for (int id : usable) by_len[lengths[id]].push_back(id);
  Rng rng = Rng(seed).derive("epoch-shuffle", static_cast<std::uint64_t>(epoch));
  std::vector<std::vector<int>> batches;
  for (auto& [len, ids] : by_len) {
    rng.shuffle(ids);
    for (std::size_t i = 0; i < ids.size(); i += batch_size) {
      std::vector<int> batch(ids.begin() + i,
                             ids.begin() + std::min(ids.size(), i + batch_size));
      std::sort(batch.begin(), batch.end());
      batches.push_back(std::move(batch));
    }
  }
  Rng order_rng = Rng(seed).derive("epoch-batch-order", static_cast<std::uint64_t>(epoch));
  order_rng.shuffle(batches);
  return batches;
}

}  // namespace detail

inline TrainResult train(ModelParams& params, Adam& adam, const Vocab& vocab,
                         const std::vector<Sentence>& train_sents, const SpanMap& train_cons,
                         const std::vector<Sentence>& val_sents, const SpanMap& val_cons,
                         const TrainConfig& cfg, int start_epoch = 0,
                         const TrainSink& sink = {}) {
  TrainResult result;
  std::uint64_t cfg_hash = cfg.hash();

  std::vector<std::vector<int>> encoded(train_sents.size());
  std::vector<int> lengths(train_sents.size());
  for (std::size_t i = 0; i < train_sents.size(); ++i) {
    encoded[i] = vocab.encode(train_sents[i].tokens);
    lengths[i] = train_sents[i].size();
  }
  std::vector<int> usable;
  for (std::size_t i = 0; i < train_sents.size(); ++i)
    if (lengths[i] >= 1 && lengths[i] <= cfg.max_len) usable.push_back(static_cast<int>(i));
  if (usable.empty()) throw DataError("train: no usable sentences under max_len");

  // validation subset (seeded, sorted for reproducibility)
  std::vector<Sentence> val_used;
  if (cfg.val_sample > 0 && cfg.val_sample < static_cast<int>(val_sents.size())) {
    std::vector<int> ids(val_sents.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
    Rng rng = Rng(cfg.seed).derive("val-sample");
    rng.shuffle(ids);
    ids.resize(cfg.val_sample);
    std::sort(ids.begin(), ids.end());
    for (int id : ids) val_used.push_back(val_sents[id]);
  } else {
    val_used = val_sents;
  }
  // constraint recall is measured on the same subset; reindex against it
  SpanMap val_cons_used;
  for (std::size_t i = 0; i < val_used.size(); ++i) {
    auto it = val_cons.find(val_used[i].id);
    if (it != val_cons.end()) val_cons_used[static_cast<int>(i)] = it->second;
  }
  for (auto& s : val_used) s.id = static_cast<int>(&s - val_used.data());

  std::ofstream metrics_file, batch_file;
  if (!sink.out_dir.empty()) {
    std::filesystem::create_directories(sink.out_dir);
    metrics_file.open(sink.out_dir + "/metrics.log", std::ios::app);
    batch_file.open(sink.out_dir + "/train.log", std::ios::app);
  }

  std::vector<detail::BufferSink> grad_bufs(cfg.batch_size);
  for (auto& b : grad_bufs) b.attach(params);

  double sum_rec = 0.0, sum_ps = 0.0;
  long long n_since_eval = 0;
  PsSvmOptions ps_opts;
  ps_opts.margin = cfg.margin;
  ps_opts.rescale_raw = cfg.rescale_raw;

  int evals_since_best = 0;
  bool stop = false;

  auto do_eval = [&](std::uint64_t step, int epoch) {
    auto trees = predict_trees(params, vocab, val_used, nullptr, CckyMode::Lexicographic, 1.0,
                               cfg.threads);
    auto spans = tree_span_sets(trees);
    double f1 = val_used.empty() ? 0.0 : corpus_f1(spans, val_used);
    double recall = val_cons_used.empty() ? 0.0 : span_recall(spans, val_cons_used);
    EvalPoint pt;
    pt.step = step;
    pt.epoch = epoch;
    pt.j_rec = n_since_eval ? sum_rec / n_since_eval : 0.0;
    pt.j_ps = n_since_eval ? sum_ps / n_since_eval : 0.0;
    pt.val_f1 = f1;
    pt.constraint_recall = recall;
    sum_rec = sum_ps = 0.0;
    n_since_eval = 0;

    char line[256];
    std::snprintf(line, sizeof(line),
                  "step=%llu epoch=%d j_rec=%.6f j_ps=%.6f val_f1=%.4f constraint_recall=%.4f",
                  static_cast<unsigned long long>(pt.step), pt.epoch, pt.j_rec, pt.j_ps,
                  pt.val_f1, pt.constraint_recall);
    result.metrics_log += line;
    result.metrics_log += "\n";
    if (metrics_file) metrics_file << line << "\n" << std::flush;
    if (sink.progress) (*sink.progress) << line << "\n";

    result.history.push_back(pt);
    bool improved = result.best_index < 0 || pt.val_f1 > result.best_f1;
    if (improved) {
      result.best_index = static_cast<int>(result.history.size()) - 1;
      result.best_f1 = pt.val_f1;
      evals_since_best = 0;
      if (!sink.out_dir.empty())
        save_checkpoint(sink.out_dir + "/best.ckpt", params, vocab, cfg_hash, &adam,
                        static_cast<std::uint64_t>(epoch + 1));
    } else {
      ++evals_since_best;
    }
    if (!sink.out_dir.empty())
      save_checkpoint(sink.out_dir + "/last.ckpt", params, vocab, cfg_hash, &adam,
                      static_cast<std::uint64_t>(epoch + 1));
    if (cfg.patience > 0 && evals_since_best >= cfg.patience) stop = true;
  };

  for (int epoch = start_epoch; epoch < cfg.max_epochs && !stop; ++epoch) {
    auto batches = detail::make_batches(usable, lengths, cfg.batch_size, cfg.seed, epoch);
    for (const auto& batch : batches) {
      const double inv_b = 1.0 / static_cast<double>(batch.size());
      double batch_rec = 0.0, batch_ps = 0.0, alpha_sum = 0.0;
      int ps_count = 0, g_plus = 0, g_minus = 0, violations = 0;

      auto run_sentence = [&](std::size_t slot) {
        int sid = batch[slot];
        detail::BufferSink& buf = grad_bufs[slot];
        buf.zero();
        Tape tape(&buf);
        static const std::set<Span> kNoSpans;
        auto it = train_cons.find(train_sents[sid].id);
        const std::set<Span>& z = it == train_cons.end() ? kNoSpans : it->second;
        InstanceLoss loss = instance_loss(tape, params, encoded[sid], z, cfg.variant,
                                          cfg.lambda_ps, ps_opts, cfg.max_len);
        tape.backward(loss.total, inv_b);
        return loss;
      };

      std::vector<InstanceLoss> losses(batch.size());
      try {
        if (cfg.threads <= 1 || batch.size() < 2) {
          for (std::size_t slot = 0; slot < batch.size(); ++slot) losses[slot] = run_sentence(slot);
        } else {
          int n_workers = std::min<int>(cfg.threads, static_cast<int>(batch.size()));
          std::vector<std::thread> workers;
          std::vector<std::exception_ptr> errors(n_workers);
          for (int w = 0; w < n_workers; ++w) {
            workers.emplace_back([&, w] {
              try {
                for (std::size_t slot = w; slot < batch.size(); slot += n_workers)
                  losses[slot] = run_sentence(slot);
              } catch (...) {
                errors[w] = std::current_exception();
              }
            });
          }
          for (auto& t : workers) t.join();
          for (auto& e : errors)
            if (e) std::rethrow_exception(e);
        }
      } catch (const NumericError&) {
        result.diverged = true;
        result.epochs_completed = epoch - start_epoch;
        return result;
      }

      params.zero_grad();
      for (std::size_t slot = 0; slot < batch.size(); ++slot) {
        grad_bufs[slot].reduce_into(params);
        const InstanceLoss& l = losses[slot];
        batch_rec += l.j_rec;
        if (l.has_ps) {
          batch_ps += l.j_ps;
          alpha_sum += l.ps.alpha;
          g_plus += l.ps.g_plus;
          g_minus += l.ps.g_minus;
          if (l.ps.margin_violated) ++violations;
          ++ps_count;
        }
      }
      sum_rec += batch_rec * inv_b;
      sum_ps += batch_ps * inv_b;
      ++n_since_eval;

      double grad_norm = clip_global_norm(params, cfg.clip_norm);
      adam.step(params, cfg.lr);

      if (batch_file) {
        char line[320];
        std::snprintf(line, sizeof(line),
                      "step=%llu epoch=%d j_rec=%.6f j_ps=%.6f alpha_mean=%.4f g_plus=%d "
                      "g_minus=%d margin_violations=%d grad_norm=%.4f",
                      static_cast<unsigned long long>(adam.t), epoch, batch_rec * inv_b,
                      batch_ps * inv_b, ps_count ? alpha_sum / ps_count : 0.0, g_plus, g_minus,
                      violations, grad_norm);
        batch_file << line << "\n";
      }

      if (cfg.eval_every > 0 && adam.t % static_cast<std::uint64_t>(cfg.eval_every) == 0) {
        do_eval(adam.t, epoch);
        if (stop) break;
      }
    }
    if (cfg.eval_every == 0 && !stop) do_eval(adam.t, epoch);
    result.epochs_completed = epoch - start_epoch + 1;
  }
  return result;
}

}  // namespace silt
