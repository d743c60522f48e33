#include "repartee/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <regex>
#include <set>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "repartee/analyze.hpp"
#include "repartee/corpus.hpp"
#include "repartee/embed.hpp"
#include "repartee/eval.hpp"
#include "repartee/models.hpp"
#include "repartee/runconfig.hpp"
#include "repartee/train.hpp"

namespace fs = std::filesystem;

namespace repartee {
namespace {

// --- corpus directory --------------------------------------------------------

// What `ingest` wrote: the normalized thread file plus derived tables. Chains
// are re-extracted with the ingest-time minimum length recorded in the meta
// file, so the manifest stays authoritative no matter what later commands get
// passed on their command line.
struct LoadedCorpus {
  std::vector<Thread> threads;
  Vocab vocab;
  std::vector<Chain> chains;
  nlohmann::json meta;
};

LoadedCorpus load_corpus(const std::string& dir) {
  fs::path p(dir);
  if (!fs::exists(p / "threads.jsonl"))
    throw DataError("not a corpus directory (missing threads.jsonl): " + dir);

  LoadedCorpus c;
  std::ifstream meta(p / "corpus_meta.json");
  if (!meta) throw DataError("missing corpus_meta.json in " + dir + "; re-run ingest");
  try {
    meta >> c.meta;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad corpus_meta.json: ") + e.what());
  }

  c.threads = parse_threads((p / "threads.jsonl").string());
  c.vocab = load_vocab_tsv((p / "vocab.tsv").string());
  tokenize_threads(c.threads, c.vocab);

  size_t min_len = c.meta.value("min_chain_len", 2);
  for (const Thread& t : c.threads) {
    auto tc = extract_chains(t, min_len);
    c.chains.insert(c.chains.end(), tc.begin(), tc.end());
  }
  if (c.chains.empty()) throw DataError("corpus holds no chains of the ingested length");
  return c;
}

// Owns the tables/embeddings a model-consuming command needs; `inputs` points
// into the owned members, so instances live behind a unique_ptr and never
// move. Dimension expectations of -1 skip the check.
struct SampleBundle {
  IdfTable thread_idf, comment_idf;
  EmbeddingFile words, comments;
  std::unordered_map<std::string, int> comment_index;
  SampleInputs inputs;
};

std::unique_ptr<SampleBundle> load_inputs(const LoadedCorpus& corpus, const std::string& dir,
                                          Arch arch, SelectorKind selector, int want_word_dim,
                                          int want_comment_dim) {
  auto b = std::make_unique<SampleBundle>();
  b->inputs.vocab = &corpus.vocab;
  b->inputs.selector = selector;
  fs::path p(dir);

  if (arch_uses_words(arch)) {
    fs::path wp = p / "words.emb";
    if (fs::exists(wp)) {
      b->words = load_embeddings(wp.string());
      if (b->words.vectors.rows() != corpus.vocab.size())
        throw DataError("words.emb has " + std::to_string(b->words.vectors.rows()) +
                        " rows but the vocabulary has " + std::to_string(corpus.vocab.size()));
      if (want_word_dim > 0 && b->words.vectors.cols() != want_word_dim)
        throw DataError("words.emb is " + std::to_string(b->words.vectors.cols()) +
                        "-dimensional, expected " + std::to_string(want_word_dim));
      b->inputs.static_words = &b->words.vectors;
    } else if (arch_uses_attention(arch)) {
      throw DataError("attention architectures need " + wp.string() +
                      "; run the embed step first");
    }
    if (arch_uses_attention(arch)) {
      b->thread_idf =
          load_idf_tsv(corpus.vocab, IdfKind::ThreadIdf, (p / "idf_thread.tsv").string());
      b->comment_idf =
          load_idf_tsv(corpus.vocab, IdfKind::CommentIdf, (p / "idf_comment.tsv").string());
      b->inputs.thread_idf = &b->thread_idf;
      b->inputs.comment_idf = &b->comment_idf;
    }
  }

  if (arch_uses_comment_vecs(arch)) {
    fs::path cp = p / "comments.emb";
    if (!fs::exists(cp))
      throw DataError("vector architectures need " + cp.string() + "; run the embed step first");
    b->comments = load_embeddings(cp.string());
    if (want_comment_dim > 0 && b->comments.vectors.cols() != want_comment_dim)
      throw DataError("comments.emb is " + std::to_string(b->comments.vectors.cols()) +
                      "-dimensional, expected " + std::to_string(want_comment_dim));
    b->inputs.comment_vecs = &b->comments;
    b->comment_index = build_label_index(b->comments);
    b->inputs.comment_index = &b->comment_index;
  }
  return b;
}

// Predicted-act overrides keyed by (thread id, comment id); from a
// predictions JSONL written by `evaluate` or `tag`.
std::map<std::pair<std::string, std::string>, int> load_overrides(const std::string& path) {
  std::map<std::pair<std::string, std::string>, int> overrides;
  for (const Prediction& p : load_predictions_jsonl(path))
    overrides[{p.thread_id, p.comment_id}] = p.pred;
  return overrides;
}

// --- subcommand bodies --------------------------------------------------------

int cmd_ingest(const RunConfig& cfg, const std::string& in_path, const std::string& out_dir) {
  ParseReport report;
  auto threads = parse_threads(in_path, &report);
  auto vocab = build_vocab(threads, cfg.min_count);
  tokenize_threads(threads, vocab);
  auto thread_idf = compute_idf(threads, vocab, IdfKind::ThreadIdf);
  auto comment_idf = compute_idf(threads, vocab, IdfKind::CommentIdf);

  fs::create_directories(out_dir);
  fs::path p(out_dir);
  fs::path dest = p / "threads.jsonl";
  if (!fs::exists(dest) || !fs::equivalent(in_path, dest))
    fs::copy_file(in_path, dest, fs::copy_options::overwrite_existing);
  save_vocab_tsv(vocab, (p / "vocab.tsv").string());
  save_idf_tsv(thread_idf, vocab, (p / "idf_thread.tsv").string());
  save_idf_tsv(comment_idf, vocab, (p / "idf_comment.tsv").string());

  std::ofstream manifest(p / "chains.tsv");
  if (!manifest) throw DataError("cannot write chains.tsv in " + out_dir);
  manifest << "thread_id\tlength\tcomment_ids\n";
  int64_t n_chains = 0, n_comments = 0;
  for (const Thread& t : threads) {
    n_comments += static_cast<int64_t>(t.comments.size());
    for (const Chain& chain : extract_chains(t, static_cast<size_t>(cfg.min_chain_len))) {
      manifest << t.id << '\t' << chain.length() << '\t';
      for (size_t i = 0; i < chain.comments.size(); ++i)
        manifest << (i ? "," : "") << chain.comments[i]->id;
      manifest << '\n';
      ++n_chains;
    }
  }
  if (!manifest) throw DataError("short write: chains.tsv");
  if (n_chains == 0)
    throw DataError("no reply chains of length >= " + std::to_string(cfg.min_chain_len));

  nlohmann::json meta = {{"min_count", cfg.min_count},
                         {"min_chain_len", cfg.min_chain_len},
                         {"threads", threads.size()},
                         {"comments", n_comments},
                         {"chains", n_chains},
                         {"vocab_size", vocab.size()},
                         {"orphans_dropped", report.orphans_dropped},
                         {"malformed_lines", report.malformed_lines},
                         {"threads_without_root", report.threads_without_root},
                         {"unknown_act_strings", report.unknown_act_strings}};
  std::ofstream mout(p / "corpus_meta.json");
  if (!mout) throw DataError("cannot write corpus_meta.json in " + out_dir);
  mout << meta.dump(2) << '\n';
  save_run_config(cfg, (p / "ingest_config.json").string());

  std::cout << "ingest: " << threads.size() << " threads, " << n_comments << " comments, "
            << n_chains << " chains, vocabulary " << vocab.size() << " -> " << out_dir << "\n";
  return 0;
}

int cmd_embed(const RunConfig& cfg, const std::string& corpus_dir) {
  auto corpus = load_corpus(corpus_dir);

  EmbedConfig wc;
  wc.dim = cfg.word_dim;
  wc.window = cfg.embed_window;
  wc.negatives = cfg.embed_negatives;
  wc.epochs = cfg.embed_epochs;
  wc.lr = cfg.embed_lr;
  wc.seed = cfg.seed;
  auto words = train_word_embeddings(corpus.threads, corpus.vocab, wc);
  save_embeddings(words, (fs::path(corpus_dir) / "words.emb").string());

  EmbedConfig cc = wc;
  cc.dim = cfg.comment_dim;
  auto comments = train_comment_embeddings(corpus.threads, corpus.vocab, cc);
  save_embeddings(comments, (fs::path(corpus_dir) / "comments.emb").string());

  save_run_config(cfg, (fs::path(corpus_dir) / "embed_config.json").string());
  std::cout << "embed: words " << words.vectors.rows() << "x" << words.vectors.cols()
            << ", comments " << comments.vectors.rows() << "x" << comments.vectors.cols()
            << " -> " << corpus_dir << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& corpus_dir, const std::string& out_dir) {
  Arch arch = arch_from_string(cfg.arch);
  auto corpus = load_corpus(corpus_dir);
  auto bundle = load_inputs(corpus, corpus_dir, arch, selector_from_string(cfg.selector),
                            cfg.word_dim, cfg.comment_dim);

  auto plan = make_folds(corpus.chains, cfg.folds, cfg.seed);
  auto buckets = bucket_by_length(corpus.chains, cfg.cmax_percentile, cfg.cmax_cap);

  TrainSettings ts;
  ts.arch = arch;
  ts.folds = cfg.folds;
  ts.epochs = cfg.epochs;
  ts.patience = cfg.patience;
  ts.batch_size = cfg.batch_size;
  ts.cmax_percentile = cfg.cmax_percentile;
  ts.cmax_cap = cfg.cmax_cap;
  ts.class_weights = cfg.class_weights;
  ts.deterministic = cfg.deterministic;
  ts.max_threads = cfg.max_threads;
  ts.seed = cfg.seed;
  ts.adam.lr = cfg.lr;
  ts.out_dir = out_dir;
  ts.model.n_classes = kNumActs;
  ts.model.vocab_size = corpus.vocab.size();
  ts.model.word_dim = cfg.word_dim;
  ts.model.comment_dim = cfg.comment_dim;
  ts.model.lstm1_hidden = cfg.lstm1_hidden;
  ts.model.lstm2_hidden = cfg.lstm2_hidden;
  ts.model.comment_lstm_hidden = cfg.comment_lstm_hidden;
  ts.model.mlp_h1 = cfg.mlp_h1;
  ts.model.mlp_h2 = cfg.mlp_h2;
  ts.model.cnn_channels = cfg.cnn_channels;

  fs::create_directories(out_dir);
  save_run_config(cfg, (fs::path(out_dir) / "run_config.json").string());
  save_fold_plan_json(plan, (fs::path(out_dir) / "fold_plan.json").string());

  auto result = train_run(corpus.chains, plan, buckets, bundle->inputs, ts);
  save_training_log_csv(result.log, (fs::path(out_dir) / "training_log.csv").string());

  std::cout << "train: " << cfg.arch << ", " << corpus.chains.size() << " chains, "
            << buckets.size() << " length buckets, " << result.checkpoints.size()
            << " checkpoints -> " << out_dir << "\n";
  return 0;
}

// Checkpoint files are named {arch}.fold{f}.len{l}.ckpt by the trainer.
struct CheckpointSet {
  Arch arch = Arch::Hlstm;
  std::map<std::pair<int, int>, std::string> by_fold_len;
};

CheckpointSet discover_checkpoints(const std::string& dir) {
  static const std::regex pat(R"(^(.+)\.fold(\d+)\.len(\d+)\.ckpt$)");
  CheckpointSet set;
  std::set<std::string> arch_names;
  if (!fs::is_directory(dir)) throw DataError("not a checkpoint directory: " + dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::string name = entry.path().filename().string();
    std::smatch m;
    if (!std::regex_match(name, m, pat)) continue;
    arch_names.insert(m[1].str());
    set.by_fold_len[{std::stoi(m[2].str()), std::stoi(m[3].str())}] = entry.path().string();
  }
  if (set.by_fold_len.empty()) throw DataError("no checkpoints found in " + dir);
  if (arch_names.size() > 1)
    throw DataError("checkpoint directory mixes architectures: " + dir);
  set.arch = arch_from_string(*arch_names.begin());
  return set;
}

// Exact (fold, length) when the trainer produced one; otherwise the fold's
// nearest-length checkpoint (a bucket can end up with no training chains for
// one fold when a rare length merged into a neighboring stratum).
const std::string& pick_checkpoint(const CheckpointSet& set, int fold, int length) {
  auto it = set.by_fold_len.find({fold, length});
  if (it != set.by_fold_len.end()) return it->second;
  const std::string* best = nullptr;
  int best_gap = std::numeric_limits<int>::max();
  for (const auto& [key, path] : set.by_fold_len) {
    if (key.first != fold) continue;
    int gap = std::abs(key.second - length);
    if (gap < best_gap || (gap == best_gap && key.second < length)) {
      best_gap = gap;
      best = &path;
    }
  }
  if (!best) throw DataError("fold " + std::to_string(fold) + " has no checkpoints");
  return *best;
}

int cmd_evaluate(const RunConfig& cfg, const std::string& ckpt_dir,
                 const std::string& corpus_dir, std::string out_dir) {
  if (out_dir.empty()) out_dir = ckpt_dir;
  auto corpus = load_corpus(corpus_dir);
  auto set = discover_checkpoints(ckpt_dir);
  auto plan = load_fold_plan_json((fs::path(ckpt_dir) / "fold_plan.json").string());
  if (plan.fold_of.size() != corpus.chains.size())
    throw DataError("fold plan covers " + std::to_string(plan.fold_of.size()) +
                    " chains but the corpus has " + std::to_string(corpus.chains.size()) +
                    "; evaluate against the corpus the run was trained on");

  auto buckets = bucket_by_length(corpus.chains, cfg.cmax_percentile, cfg.cmax_cap);
  auto bundle =
      load_inputs(corpus, corpus_dir, set.arch, selector_from_string(cfg.selector), -1, -1);

  std::vector<Prediction> per_chain;
  for (int fold = 0; fold < plan.k; ++fold) {
    for (const Bucket& bucket : buckets) {
      std::vector<size_t> held_out;
      for (size_t ci : bucket.chain_idx)
        if (plan.fold_of[ci] == fold) held_out.push_back(ci);
      if (held_out.empty()) continue;

      Model<float> model = load_model(pick_checkpoint(set, fold, bucket.length));
      if (arch_uses_words(set.arch) && model.config().vocab_size != corpus.vocab.size())
        throw DataError("checkpoint vocabulary size " +
                        std::to_string(model.config().vocab_size) + " != corpus " +
                        std::to_string(corpus.vocab.size()));
      int c_max = std::max(1, model.config().max_words);
      for (size_t ci : held_out) {
        auto sample = make_sample(corpus.chains[ci], c_max, set.arch, bundle->inputs);
        auto preds = tag_chain(model, sample);
        per_chain.insert(per_chain.end(), preds.begin(), preds.end());
      }
    }
  }

  auto deduped = dedup_predictions(per_chain);
  std::vector<int> gold, pred;
  split_gold_pred(deduped, &gold, &pred);
  if (gold.empty()) throw DataError("no labeled comments to score");
  Metrics m = compute_metrics(gold, pred, kNumActs);

  fs::create_directories(out_dir);
  fs::path p(out_dir);
  save_metrics_csv(m, (p / "metrics.csv").string());
  save_confusion_tsv(m, (p / "confusion.tsv").string());
  save_predictions_jsonl(deduped, (p / "predictions.jsonl").string());
  save_predictions_jsonl(per_chain, (p / "predictions_per_chain.jsonl").string());
  save_metrics_summary_json(m, (p / "metrics_summary.json").string());
  save_run_config(cfg, (p / "eval_config.json").string());

  std::cout << "evaluate: " << gold.size() << " comments, accuracy " << m.accuracy
            << ", macro-F1 " << m.macro_f1 << ", weighted-F1 " << m.weighted_f1 << " -> "
            << out_dir << "\n";
  return 0;
}

int cmd_tag(const RunConfig& cfg, const std::string& ckpt_path, const std::string& corpus_dir,
            const std::string& out_path) {
  Model<float> model = load_model(ckpt_path);
  Arch arch = model.config().arch;
  auto corpus = load_corpus(corpus_dir);
  if (arch_uses_words(arch) && model.config().vocab_size != corpus.vocab.size())
    throw DataError("checkpoint vocabulary size " + std::to_string(model.config().vocab_size) +
                    " != corpus " + std::to_string(corpus.vocab.size()));
  auto bundle = load_inputs(corpus, corpus_dir, arch, selector_from_string(cfg.selector),
                            model.config().word_dim, model.config().comment_dim);

  int c_max = std::max(1, model.config().max_words);
  std::vector<Prediction> per_chain;
  for (const Chain& chain : corpus.chains) {
    auto sample = make_sample(chain, c_max, arch, bundle->inputs);
    auto preds = tag_chain(model, sample);
    per_chain.insert(per_chain.end(), preds.begin(), preds.end());
  }
  auto deduped = dedup_predictions(per_chain);
  save_predictions_jsonl(deduped, out_path);

  std::cout << "tag: " << deduped.size() << " comments across " << corpus.chains.size()
            << " chains -> " << out_path << "\n";
  return 0;
}

int cmd_relevance(const RunConfig& cfg, const std::string& ckpt_path,
                  const std::string& corpus_dir, const std::string& out_path) {
  Model<float> model = load_model(ckpt_path);
  if (!arch_uses_attention(model.config().arch))
    throw UsageError("relevance needs an attention checkpoint (hlstm-attn or cnnlstm-attn), got " +
                     std::string(arch_name(model.config().arch)));
  auto corpus = load_corpus(corpus_dir);
  if (model.config().vocab_size != corpus.vocab.size())
    throw DataError("checkpoint vocabulary size " + std::to_string(model.config().vocab_size) +
                    " != corpus " + std::to_string(corpus.vocab.size()));
  auto bundle = load_inputs(corpus, corpus_dir, model.config().arch,
                            selector_from_string(cfg.selector), model.config().word_dim, -1);

  int c_max = std::max(1, model.config().max_words);
  std::vector<RelevanceRecord> records;
  for (const Chain& chain : corpus.chains) {
    auto sample = make_sample(chain, c_max, model.config().arch, bundle->inputs);
    auto recs = dump_relevance(model, sample, corpus.vocab);
    records.insert(records.end(), recs.begin(), recs.end());
  }
  save_relevance_jsonl(records, out_path);

  std::cout << "relevance: " << records.size() << " comments -> " << out_path << "\n";
  return 0;
}

int cmd_characterize(const RunConfig& cfg, const std::string& corpus_dir,
                     const std::string& preds_path, const std::string& out_dir) {
  auto corpus = load_corpus(corpus_dir);
  std::map<std::pair<std::string, std::string>, int> overrides;
  if (!preds_path.empty()) overrides = load_overrides(preds_path);

  std::vector<TaggedComment> tagged;
  int64_t untagged_skipped = 0;
  for (const Thread& t : corpus.threads)
    for (const Comment& c : t.comments) {
      int act = -1;
      auto it = overrides.find({t.id, c.id});
      if (it != overrides.end())
        act = it->second;
      else if (c.gold_act)
        act = static_cast<int>(*c.gold_act);
      if (act < 0) {
        ++untagged_skipped;
        continue;
      }
      tagged.push_back({c.timestamp, act});
    }
  if (tagged.empty())
    throw DataError("no tagged comments; pass --preds or ingest gold-labeled threads");

  auto series = temporal_fractions(tagged, cfg.window_seconds);
  fs::create_directories(out_dir);
  fs::path p(out_dir);
  save_series_csv(series, (p / "series.csv").string());

  auto graph =
      build_user_graph(corpus.threads, overrides.empty() ? nullptr : &overrides,
                       cfg.humor_negative);
  Partition part = partition_users(graph, cfg.seed, cfg.exact_limit, cfg.partition_restarts);
  save_partition_json(part, (p / "partition.json").string());
  save_run_config(cfg, (p / "characterize_config.json").string());

  std::cout << "characterize: " << series.windows.size() << " time windows ("
            << series.skipped_unstamped << " unstamped, " << untagged_skipped
            << " untagged skipped); " << graph.users.size() << " users, " << graph.edges.size()
            << " signed pairs, frustration " << part.frustration << " (" << part.method
            << ") -> " << out_dir << "\n";
  return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
  // The config file seeds every default before flags are parsed; any flag
  // present then overwrites its field, which is exactly "flags win".
  RunConfig cfg;
  try {
    for (size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--config") {
        if (i + 1 >= args.size()) throw UsageError("--config needs a file path");
        cfg = load_run_config(args[i + 1]);
      } else if (args[i].rfind("--config=", 0) == 0) {
        cfg = load_run_config(args[i].substr(9));
      }
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  }

  CLI::App app{"discourse-act tagging and analysis over threaded discussions"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; explicit flags override it");
  app.add_option("--arch", cfg.arch, "model architecture")
      ->check(CLI::IsMember(
          {"mlp", "seqlstm", "hlstm", "hlstm-attn", "cnnlstm", "cnnlstm-attn"}));
  app.add_option("--word-dim", cfg.word_dim, "word vector width");
  app.add_option("--comment-dim", cfg.comment_dim, "comment vector width");
  app.add_option("--lstm1-hidden", cfg.lstm1_hidden, "first word-level LSTM width");
  app.add_option("--lstm2-hidden", cfg.lstm2_hidden, "second word-level LSTM width");
  app.add_option("--comment-lstm-hidden", cfg.comment_lstm_hidden, "chain-level LSTM width");
  app.add_option("--mlp-h1", cfg.mlp_h1, "first MLP hidden width");
  app.add_option("--mlp-h2", cfg.mlp_h2, "second MLP hidden width");
  app.add_option("--cnn-channels", cfg.cnn_channels, "convolution channels per n-gram size");
  app.add_option("--min-count", cfg.min_count, "vocabulary frequency floor");
  app.add_option("--min-chain-len", cfg.min_chain_len, "shortest reply chain kept");
  app.add_option("--selector", cfg.selector, "content-word selection for attention targets")
      ->check(CLI::IsMember({"heuristic", "identity"}));
  app.add_option("--embed-window", cfg.embed_window, "skip-gram context window");
  app.add_option("--embed-negatives", cfg.embed_negatives, "negative samples per pair");
  app.add_option("--embed-epochs", cfg.embed_epochs, "embedding pretraining epochs");
  app.add_option("--embed-lr", cfg.embed_lr, "embedding learning rate");
  app.add_option("--folds", cfg.folds, "cross-validation folds");
  app.add_option("--epochs", cfg.epochs, "training epochs per length bucket");
  app.add_option("--patience", cfg.patience, "early-stopping patience");
  app.add_option("--batch-size", cfg.batch_size, "chains per optimizer step");
  app.add_option("--lr", cfg.lr, "Adam learning rate");
  app.add_option("--cmax-percentile", cfg.cmax_percentile,
                 "comment-width percentile per bucket");
  app.add_option("--cmax-cap", cfg.cmax_cap, "hard cap on padded comment width");
  std::string class_weights_s, humor_negative_s;
  app.add_option("--class-weights", class_weights_s, "inverse-frequency class weighting")
      ->check(CLI::IsMember({"on", "off"}));
  app.add_flag("--deterministic", cfg.deterministic,
               "single-threaded, bitwise-reproducible runs");
  app.add_option("--threads", cfg.max_threads, "worker cap (0 = hardware)");
  app.add_option("--seed", cfg.seed, "base random seed");
  app.add_option("--window-seconds", cfg.window_seconds, "temporal analysis window");
  app.add_option("--humor-negative", humor_negative_s,
                 "count humor as a negative interaction")
      ->check(CLI::IsMember({"on", "off"}));
  app.add_option("--exact-limit", cfg.exact_limit,
                 "largest user count partitioned exhaustively");
  app.add_option("--restarts", cfg.partition_restarts, "heuristic partition restarts");

  auto* ing = app.add_subcommand("ingest", "parse threads JSONL into a corpus directory");
  std::string ing_in, ing_out;
  ing->add_option("--in", ing_in, "threads JSONL file")->required();
  ing->add_option("--out", ing_out, "corpus directory to create")->required();

  auto* emb = app.add_subcommand("embed", "pretrain word and comment vectors");
  std::string emb_corpus;
  emb->add_option("--corpus", emb_corpus, "corpus directory")->required();

  auto* tr = app.add_subcommand("train", "train cross-validated models over a corpus");
  std::string tr_corpus, tr_out;
  tr->add_option("--corpus", tr_corpus, "corpus directory")->required();
  tr->add_option("--out", tr_out, "run directory for checkpoints and logs")->required();

  auto* ev = app.add_subcommand("evaluate", "score held-out chains with a run's checkpoints");
  std::string ev_ckpt_dir, ev_corpus, ev_out;
  ev->add_option("--ckpt-dir", ev_ckpt_dir, "run directory holding checkpoints")->required();
  ev->add_option("--corpus", ev_corpus, "corpus directory")->required();
  ev->add_option("--out", ev_out, "output directory (default: --ckpt-dir)");

  auto* tg = app.add_subcommand("tag", "tag a corpus with one checkpoint");
  std::string tg_ckpt, tg_corpus, tg_out;
  tg->add_option("--ckpt", tg_ckpt, "checkpoint file")->required();
  tg->add_option("--corpus", tg_corpus, "corpus directory")->required();
  tg->add_option("--out", tg_out, "predictions JSONL path")->required();

  auto* rel = app.add_subcommand("relevance", "dump per-word relevance from an attention model");
  std::string rel_ckpt, rel_corpus, rel_out;
  rel->add_option("--ckpt", rel_ckpt, "attention checkpoint file")->required();
  rel->add_option("--corpus", rel_corpus, "corpus directory")->required();
  rel->add_option("--out", rel_out, "relevance JSONL path")->required();

  auto* ch = app.add_subcommand("characterize",
                                "temporal discourse series and user partitioning");
  std::string ch_corpus, ch_preds, ch_out;
  ch->add_option("--corpus", ch_corpus, "corpus directory")->required();
  ch->add_option("--preds", ch_preds, "predictions JSONL overriding gold acts");
  ch->add_option("--out", ch_out, "output directory")->required();

  for (auto* sub : {ing, emb, tr, ev, tg, rel, ch}) sub->fallthrough();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exits 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the error and a --help hint
    return 1;
  }

  if (!class_weights_s.empty()) cfg.class_weights = class_weights_s == "on";
  if (!humor_negative_s.empty()) cfg.humor_negative = humor_negative_s == "on";

  try {
    if (ing->parsed()) return cmd_ingest(cfg, ing_in, ing_out);
    if (emb->parsed()) return cmd_embed(cfg, emb_corpus);
    if (tr->parsed()) return cmd_train(cfg, tr_corpus, tr_out);
    if (ev->parsed()) return cmd_evaluate(cfg, ev_ckpt_dir, ev_corpus, ev_out);
    if (tg->parsed()) return cmd_tag(cfg, tg_ckpt, tg_corpus, tg_out);
    if (rel->parsed()) return cmd_relevance(cfg, rel_ckpt, rel_corpus, rel_out);
    if (ch->parsed()) return cmd_characterize(cfg, ch_corpus, ch_preds, ch_out);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  }
  return 1;  // unreachable with require_subcommand(1)
}

}  // namespace repartee
