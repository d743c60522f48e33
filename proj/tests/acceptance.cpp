// Acceptance gate: one pass/fail line per criterion, tolerances pinned in the
// checks themselves. Exit code = number of failed criteria. The final
// corpus-scale ordering check is optional and long-running; it activates only
// when DISCOURSE_FULL_CORPUS points at a full threads JSONL.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "repartee/analyze.hpp"
#include "repartee/cli.hpp"
#include "repartee/corpus.hpp"
#include "repartee/eval.hpp"
#include "repartee/layers.hpp"
#include "repartee/models.hpp"
#include "repartee/train.hpp"

using namespace repartee;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int n, const std::string& what, bool pass, const std::string& detail) {
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << n << " (" << what << "): "
            << detail << std::endl;
  if (!pass) ++failures;
}

void skip(int n, const std::string& what, const std::string& why) {
  std::cout << "SKIP criterion " << n << " (" << what << "): " << why << std::endl;
}

template <typename Fn>
void guarded(int n, const std::string& what, Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    report(n, what, false, std::string("exception: ") + e.what());
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --- shared toy builders -----------------------------------------------------

ModelConfig toy_config(Arch arch) {
  ModelConfig cfg;
  cfg.arch = arch;
  cfg.n_classes = 5;
  cfg.vocab_size = 6;   // V = 6
  cfg.word_dim = 4;
  cfg.lstm1_hidden = 5;  // hidden = 5
  cfg.lstm2_hidden = 5;
  cfg.comment_lstm_hidden = 5;
  cfg.comment_dim = 4;
  cfg.mlp_h1 = 5;
  cfg.mlp_h2 = 4;
  cfg.cnn_channels = 2;
  cfg.max_words = 4;    // C_max = 4
  cfg.chain_len = 3;    // chain_len = 3
  cfg.seed = 7;
  return cfg;
}

template <typename T>
ChainSample<T> toy_word_chain(const ModelConfig& cfg, uint64_t seed, bool with_targets) {
  Rng rng(seed);
  ChainSample<T> chain;
  chain.thread_id = "t";
  for (int i = 0; i < cfg.chain_len; ++i) {
    chain.comment_ids.push_back("c" + std::to_string(i));
    std::vector<int> toks(cfg.max_words, 0);
    std::vector<uint8_t> mask(cfg.max_words, 0);
    size_t real = 1 + rng.uniform_int(cfg.max_words);
    for (size_t t = 0; t < real; ++t) {
      toks[t] = 1 + static_cast<int>(rng.uniform_int(cfg.vocab_size - 1));
      mask[t] = 1;
    }
    chain.tokens.push_back(toks);
    chain.word_mask.push_back(mask);
    if (with_targets) {
      AttentionTargets<T> tg;
      tg.first_vec = Vec<T>::Zero(cfg.word_dim);
      tg.parent_vec = Vec<T>::Zero(cfg.word_dim);
      for (int d = 0; d < cfg.word_dim; ++d) {
        tg.first_vec[d] = static_cast<T>(rng.uniform(-1, 1));
        tg.parent_vec[d] = static_cast<T>(rng.uniform(-1, 1));
      }
      chain.targets.push_back(tg);
    }
    chain.gold.push_back(static_cast<int>(rng.uniform_int(cfg.n_classes)));
  }
  return chain;
}

template <typename T>
ChainSample<T> toy_vector_chain(const ModelConfig& cfg, uint64_t seed) {
  Rng rng(seed);
  ChainSample<T> chain;
  chain.thread_id = "t";
  for (int i = 0; i < cfg.chain_len; ++i) {
    chain.comment_ids.push_back("c" + std::to_string(i));
    Vec<T> v(cfg.comment_dim);
    for (int d = 0; d < cfg.comment_dim; ++d) v[d] = static_cast<T>(rng.uniform(-1, 1));
    chain.comment_vecs.push_back(v);
    chain.gold.push_back(static_cast<int>(rng.uniform_int(cfg.n_classes)));
  }
  return chain;
}

const Arch kAllArchs[] = {Arch::Mlp,       Arch::SeqLstm, Arch::Hlstm,
                          Arch::HlstmAttn, Arch::CnnLstm, Arch::CnnLstmAttn};

// --- criterion 1: gradient integrity -----------------------------------------

void criterion_1() {
  auto t0 = std::chrono::steady_clock::now();
  double worst = 0;
  std::string worst_where;
  for (Arch a : kAllArchs) {
    ModelConfig cfg = toy_config(a);
    Model<double> m(cfg);
    ChainSample<double> chain = arch_uses_comment_vecs(a)
                                    ? toy_vector_chain<double>(cfg, 21)
                                    : toy_word_chain<double>(cfg, 21, arch_uses_attention(a));
    chain.gold.back() = -1;  // exercise the unlabeled path too
    Vec<double> weights(cfg.n_classes);
    for (EIndex k = 0; k < weights.size(); ++k) weights[k] = 0.5 + 0.2 * double(k);
    auto loss_fn = [&]() {
      m.store().zero_grads();
      return m.accumulate(chain, weights, 0.37).loss;
    };
    auto rep = grad_check<double>(m.store(), loss_fn, 1e-5);
    if (rep.max_rel_err > worst) {
      worst = rep.max_rel_err;
      worst_where = std::string(arch_name(a)) + "/" + rep.worst_param;
    }
  }
  double secs = seconds_since(t0);
  std::ostringstream d;
  d << "max relative error " << worst << " (worst at " << worst_where << ", tolerance 1e-4), "
    << secs << " s";
  report(1, "gradient integrity", worst <= 1e-4 && secs < 60.0, d.str());
}

// --- criterion 2: zero-parameter LSTM oracle ----------------------------------

void criterion_2() {
  ParamStore<double> store;
  auto cell = add_lstm<double>(store, "cell", 3, 2);  // add() zero-initializes
  LstmState<double> prev{Vec<double>::Zero(2), Vec<double>::Constant(2, 2.0)};
  Vec<double> x = Vec<double>::Ones(3);
  LstmState<double> next = lstm_step(cell, x, prev);

  // gates all sigmoid(0)=0.5, candidate tanh(0)=0:
  //   c = 0.5*2 + 0.5*0 = 1 exactly, h = 0.5*tanh(1)
  const double expected_h = 0.3807970779778824;
  double c_err = (next.c - Vec<double>::Ones(2)).cwiseAbs().maxCoeff();
  double h_err = (next.h - Vec<double>::Constant(2, expected_h)).cwiseAbs().maxCoeff();
  std::ostringstream d;
  d << "c_t error " << c_err << ", h_t error " << h_err << " vs 0.3807970779778824 "
    << "(tolerance 1e-9)";
  report(2, "LSTM oracle", c_err == 0.0 && h_err <= 1e-9, d.str());
}

// --- criterion 3: attention normalization during training ---------------------

void criterion_3() {
  double worst_sum_err = 0, worst_pad = 0;
  long checked = 0;
  for (Arch a : {Arch::HlstmAttn, Arch::CnnLstmAttn}) {
    ModelConfig cfg = toy_config(a);
    cfg.seed = 11;
    Model<double> m(cfg);
    std::vector<ChainSample<double>> batch;
    for (uint64_t s = 0; s < 8; ++s) batch.push_back(toy_word_chain<double>(cfg, 50 + s, true));
    Vec<double> w = Vec<double>::Ones(cfg.n_classes);
    AdamConfig adam;
    for (int epoch = 0; epoch < 5; ++epoch) {
      m.store().zero_grads();
      for (auto& chain : batch) {
        m.accumulate(chain, w, 1.0 / double(batch.size()));
        auto p = m.relevance(chain);
        for (size_t i = 0; i < p.size(); ++i) {
          double real_sum = 0;
          for (int t = 0; t < cfg.max_words; ++t) {
            if (chain.word_mask[i][t])
              real_sum += p[i][t];
            else
              worst_pad = std::max(worst_pad, std::abs(p[i][t]));
          }
          worst_sum_err = std::max(worst_sum_err, std::abs(real_sum - 1.0));
          ++checked;
        }
      }
      adam_step(m.store(), adam);
    }
  }
  std::ostringstream d;
  d << checked << " distributions over 5 epochs x 2 architectures; worst |sum-1| "
    << worst_sum_err << " (tol 1e-6), worst PAD mass " << worst_pad << " (tol 1e-12)";
  report(3, "attention normalization", worst_sum_err <= 1e-6 && worst_pad < 1e-12, d.str());
}

// --- criterion 4: chain extraction vs brute force ------------------------------

void criterion_4() {
  Rng rng(404);
  int bad_trees = 0;
  for (int trial = 0; trial < 100; ++trial) {
    int n = 1 + static_cast<int>(rng.uniform_int(100));
    Thread t;
    t.id = "tree";
    std::vector<int> parent(n, -1);
    for (int k = 0; k < n; ++k) {
      Comment c;
      c.id = "n" + std::to_string(k);
      if (k > 0) {
        parent[k] = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(k)));
        c.parent_id = "n" + std::to_string(parent[k]);
      }
      t.comments.push_back(c);
    }

    // brute force: DFS in input order, every root-to-leaf path
    std::vector<std::vector<int>> children(n);
    for (int k = 1; k < n; ++k) children[parent[k]].push_back(k);
    std::vector<std::string> expected;
    std::vector<int> stack = {0};
    std::vector<std::pair<int, size_t>> frames;  // (node, next child)
    frames.push_back({0, 0});
    std::vector<int> path = {0};
    while (!frames.empty()) {
      auto& [node, next] = frames.back();
      if (children[node].empty() || next == children[node].size()) {
        if (children[node].empty()) {
          std::string key;
          for (int id : path) key += "n" + std::to_string(id) + "/";
          expected.push_back(key);
        }
        frames.pop_back();
        path.pop_back();
        continue;
      }
      int child = children[node][next++];
      frames.push_back({child, 0});
      path.push_back(child);
    }

    auto got_chains = extract_chains(t, 1);
    std::vector<std::string> got;
    for (const auto& ch : got_chains) {
      std::string key;
      for (const Comment* c : ch.comments) key += c->id + "/";
      got.push_back(key);
    }
    std::sort(expected.begin(), expected.end());
    std::sort(got.begin(), got.end());
    if (got != expected) ++bad_trees;
  }
  std::ostringstream d;
  d << "100 random trees (<=100 nodes), " << bad_trees << " mismatches";
  report(4, "chain-extraction equivalence", bad_trees == 0, d.str());
}

// --- criterion 5: hierarchical tf-idf oracle -----------------------------------

void criterion_5() {
  // 3 threads, 7 comments, with deliberate cross-thread repetition
  std::string jsonl =
      R"({"id":"t1","title":"apples","posts":[)"
      R"({"id":"a","in_reply_to":null,"author":"u1","body":"red apples and green pears"},)"
      R"({"id":"b","in_reply_to":"a","author":"u2","body":"pears ripen fast"},)"
      R"({"id":"c","in_reply_to":"b","author":"u3","body":"apples keep well"}]})"
      "\n"
      R"({"id":"t2","title":"pears","posts":[)"
      R"({"id":"a","in_reply_to":null,"author":"u1","body":"green pears again"},)"
      R"({"id":"b","in_reply_to":"a","author":"u2","body":"red wins every time"}]})"
      "\n"
      R"({"id":"t3","title":"plums","posts":[)"
      R"({"id":"a","in_reply_to":null,"author":"u3","body":"plums bruise easily"},)"
      R"({"id":"b","in_reply_to":"a","author":"u1","body":"wrap plums in paper"}]})"
      "\n";
  auto threads = parse_threads_text(jsonl);
  auto vocab = build_vocab(threads, 1);
  tokenize_threads(threads, vocab);
  auto t_idf = compute_idf(threads, vocab, IdfKind::ThreadIdf);
  auto c_idf = compute_idf(threads, vocab, IdfKind::CommentIdf);

  // independent df counters straight off the token lists
  int V = vocab.size();
  std::vector<int> df_thread(V, 0), df_comment(V, 0);
  int64_t n_comments = 0;
  for (const auto& t : threads) {
    std::set<int> in_thread;
    for (const auto& c : t.comments) {
      ++n_comments;
      std::set<int> in_comment(c.tokens.begin(), c.tokens.end());
      for (int id : in_comment) ++df_comment[id];
      in_thread.insert(in_comment.begin(), in_comment.end());
    }
    for (int id : in_thread) ++df_thread[id];
  }
  double worst = 0;
  for (int id = 0; id < V; ++id) {
    double want_t = df_thread[id] ? std::log(double(threads.size()) / df_thread[id]) : 0.0;
    double want_c = df_comment[id] ? std::log(double(n_comments) / df_comment[id]) : 0.0;
    worst = std::max(worst, std::abs(t_idf.lookup(id) - want_t));
    worst = std::max(worst, std::abs(c_idf.lookup(id) - want_c));
  }
  std::ostringstream d;
  d << threads.size() << " threads / " << n_comments << " comments, " << V
    << " vocabulary entries, worst |idf - brute force| " << worst << " (tol 1e-12)";
  report(5, "hierarchical tf-idf oracle", worst <= 1e-12, d.str());
}

// --- criterion 6: overfit capability -------------------------------------------

void criterion_6() {
  auto t0 = std::chrono::steady_clock::now();
  ModelConfig cfg;
  cfg.arch = Arch::HlstmAttn;
  cfg.n_classes = 10;
  cfg.vocab_size = 50;
  cfg.word_dim = 16;
  cfg.lstm1_hidden = 24;
  cfg.lstm2_hidden = 24;
  cfg.comment_lstm_hidden = 24;
  cfg.max_words = 8;
  cfg.seed = 42;

  Rng rng(606);
  std::vector<ChainSample<float>> chains;
  int64_t total_labeled = 0;
  for (int k = 0; k < 32; ++k) {
    ChainSample<float> chain;
    chain.thread_id = "s" + std::to_string(k);
    int len = 2 + k % 3;  // lengths 2..4
    for (int i = 0; i < len; ++i) {
      chain.comment_ids.push_back("c" + std::to_string(i));
      std::vector<int> toks(cfg.max_words, 0);
      std::vector<uint8_t> mask(cfg.max_words, 0);
      size_t real = 3 + rng.uniform_int(6);  // 3..8 live words
      for (size_t t = 0; t < real; ++t) {
        toks[t] = 2 + static_cast<int>(rng.uniform_int(48));
        mask[t] = 1;
      }
      chain.tokens.push_back(toks);
      chain.word_mask.push_back(mask);
      AttentionTargets<float> tg;
      tg.first_vec = Vec<float>(cfg.word_dim);
      tg.parent_vec = Vec<float>(cfg.word_dim);
      for (int d = 0; d < cfg.word_dim; ++d) {
        tg.first_vec[d] = static_cast<float>(rng.uniform(-0.5, 0.5));
        tg.parent_vec[d] = static_cast<float>(rng.uniform(-0.5, 0.5));
      }
      chain.targets.push_back(tg);
      chain.gold.push_back(static_cast<int>(rng.uniform_int(10)));
      ++total_labeled;
    }
    chains.push_back(std::move(chain));
  }

  Model<float> m(cfg);
  Vec<float> w = Vec<float>::Ones(10);
  AdamConfig adam;
  adam.lr = 5e-3;
  double acc = 0;
  int epoch = 0;
  for (epoch = 1; epoch <= 200; ++epoch) {
    for (size_t start = 0; start < chains.size(); start += 8) {
      size_t stop = std::min(chains.size(), start + 8);
      m.store().zero_grads();
      for (size_t j = start; j < stop; ++j)
        m.accumulate(chains[j], w, 1.0f / static_cast<float>(stop - start));
      adam_step(m.store(), adam);
    }

    int64_t correct = 0;
    for (auto& chain : chains) {
      auto dists = m.forward(chain);
      for (size_t i = 0; i < dists.size(); ++i) {
        EIndex best;
        dists[i].maxCoeff(&best);
        if (static_cast<int>(best) == chain.gold[i]) ++correct;
      }
    }
    acc = double(correct) / double(total_labeled);
    if (acc >= 0.95) break;
  }
  double secs = seconds_since(t0);
  std::ostringstream d;
  d << "training accuracy " << acc * 100 << "% after " << std::min(epoch, 200)
    << " epochs on 32 chains (vocab 50, lengths 2-4, 10 classes), " << secs
    << " s (needs >=95% within 200 epochs, <300 s)";
  report(6, "overfit capability", acc >= 0.95 && epoch <= 200 && secs < 300.0, d.str());
}

// --- criterion 7: attention utility (directional) ------------------------------

// Synthetic echo task: a reply's label says whether it repeats one of its
// parent's content words. Content words come in two sign groups and every
// non-echo reply draws from the opposite group, so the repetition bit equals
// the group-match bit. Each content word is buried among filler words whose
// group dimension carries noise; a dedicated marker dimension makes
// content-vs-filler linearly separable, so the relevance scorer can learn to
// concentrate mass on content words and hand the comment-level LSTM clean
// group signals, while the plain hierarchy has to pool over the noise.
// Two further corpus properties keep the task out of the pure-XOR dead zone
// and reward word-level reweighting specifically:
//   - parents from the two groups echo at different rates (0.8 vs 0.2), so a
//     first-order parent-group cue exists and the models must then refine it
//     with the true repetition bit;
//   - the reply leads with its content word followed by fillers, which a
//     final-state pooler tends to wash out but a per-position scorer can
//     keep alive.
struct EchoCorpus {
  std::vector<Thread> threads;
  Vocab vocab;
  IdfTable thread_idf, comment_idf;
  MatF statics;
  std::vector<Chain> chains;
  std::vector<int> reply_gold;  // per chain
};

EchoCorpus make_echo_corpus(uint64_t seed, int n_chains) {
  Rng rng(seed);
  auto tok = [](char g, int i) { return std::string(1, g) + "tok" + std::to_string(i); };

  EchoCorpus ec;
  ec.threads.reserve(n_chains);
  for (int k = 0; k < n_chains; ++k) {
    bool group_a = rng.uniform() < 0.5;
    bool echo = rng.uniform() < (group_a ? 0.8 : 0.2);
    char g = group_a ? 'a' : 'b';
    char anti = group_a ? 'b' : 'a';

    // parent: 4 distinct content words of its group + 8 fillers
    std::vector<int> picks;
    while (picks.size() < 4) {
      int c = static_cast<int>(rng.uniform_int(10));
      if (std::find(picks.begin(), picks.end(), c) == picks.end()) picks.push_back(c);
    }
    std::vector<std::string> parent_words;
    for (int c : picks) parent_words.push_back(tok(g, c));
    for (int i = 0; i < 8; ++i)
      parent_words.push_back(tok('f', static_cast<int>(rng.uniform_int(20))));
    for (size_t i = parent_words.size(); i-- > 1;)
      std::swap(parent_words[i], parent_words[rng.uniform_int(i + 1)]);

    // reply: the content word (echoed or from the opposite group) leads,
    // then fillers trail it
    std::string content = echo ? tok(g, picks[rng.uniform_int(4)])
                               : tok(anti, static_cast<int>(rng.uniform_int(10)));
    std::vector<std::string> reply_words = {content};
    for (int i = 0; i < 5; ++i)
      reply_words.push_back(tok('f', static_cast<int>(rng.uniform_int(20))));

    auto join = [](const std::vector<std::string>& ws) {
      std::string s;
      for (const auto& w : ws) s += w + " ";
      return s;
    };
    Thread t;
    t.id = "echo" + std::to_string(k);
    Comment root;
    root.id = "p0";
    root.author = "u0";
    root.body = join(parent_words);
    Comment reply;
    reply.id = "p1";
    reply.parent_id = "p0";
    reply.author = "u1";
    reply.body = join(reply_words);
    reply.gold_act = echo ? DiscourseAct::Agreement : DiscourseAct::Disagreement;
    t.comments = {root, reply};
    ec.threads.push_back(std::move(t));
    ec.reply_gold.push_back(echo ? static_cast<int>(DiscourseAct::Agreement)
                                 : static_cast<int>(DiscourseAct::Disagreement));
  }

  ec.vocab = build_vocab(ec.threads, 1);
  tokenize_threads(ec.threads, ec.vocab);
  ec.thread_idf = compute_idf(ec.threads, ec.vocab, IdfKind::ThreadIdf);
  ec.comment_idf = compute_idf(ec.threads, ec.vocab, IdfKind::CommentIdf);

  // static embeddings: column 0 carries the group sign (noisy for fillers),
  // column 1 a content-vs-filler marker, the rest per-word identity noise
  Rng srng(777);
  const int word_dim = 12;
  ec.statics = MatF::Zero(ec.vocab.size(), word_dim);
  for (int r = 2; r < ec.vocab.size(); ++r) {
    const std::string& token = ec.vocab.index_to_token[r];
    bool filler = token[0] == 'f';
    ec.statics(r, 0) = filler ? static_cast<float>(srng.uniform(-0.5, 0.5))
                              : (token[0] == 'a' ? 1.0f : -1.0f);
    ec.statics(r, 1) = filler ? -1.0f : 1.0f;
    for (int c = 2; c < word_dim; ++c)
      ec.statics(r, c) = static_cast<float>(srng.uniform(-0.3, 0.3));
  }

  for (const Thread& t : ec.threads) {
    auto tc = extract_chains(t, 2);
    ec.chains.insert(ec.chains.end(), tc.begin(), tc.end());
  }
  return ec;
}

double echo_f1(Arch arch, const EchoCorpus& ec, uint64_t model_seed, int epochs,
               int batch_size, double lr) {
  SampleInputs in;
  in.vocab = &ec.vocab;
  in.static_words = &ec.statics;
  in.thread_idf = &ec.thread_idf;
  in.comment_idf = &ec.comment_idf;
  in.selector = SelectorKind::Identity;

  const int c_max = 12;
  std::vector<ChainSample<float>> samples;
  for (const Chain& ch : ec.chains) {
    auto s = make_sample(ch, c_max, arch, in);
    s.gold[0] = -1;  // score replies only; roots carry no label
    samples.push_back(std::move(s));
  }
  size_t n_train = samples.size() * 5 / 7;

  ModelConfig cfg;
  cfg.arch = arch;
  cfg.n_classes = kNumActs;
  cfg.vocab_size = ec.vocab.size();
  cfg.word_dim = static_cast<int>(ec.statics.cols());
  cfg.lstm1_hidden = 16;
  cfg.lstm2_hidden = 16;
  cfg.comment_lstm_hidden = 16;
  cfg.max_words = c_max;
  cfg.chain_len = 2;
  cfg.seed = model_seed;
  Model<float> m(cfg, &ec.statics);

  Vec<float> w = Vec<float>::Ones(kNumActs);
  AdamConfig adam;
  adam.lr = lr;
  Rng order_rng(model_seed ^ 0xabcdef);
  std::vector<size_t> order(n_train);
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  // REPARTEE_TUNE=1 prints the learning curves; handy when rebalancing the task
  const bool tune = std::getenv("REPARTEE_TUNE") != nullptr;
  auto test_f1 = [&]() {
    std::vector<int> gold, pred;
    for (size_t i = n_train; i < samples.size(); ++i) {
      auto dists = m.forward(samples[i]);
      EIndex best;
      dists[1].maxCoeff(&best);
      gold.push_back(samples[i].gold[1]);
      pred.push_back(static_cast<int>(best));
    }
    return compute_metrics(gold, pred, kNumActs).weighted_f1;
  };

  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (size_t i = order.size(); i-- > 1;)
      std::swap(order[i], order[order_rng.uniform_int(i + 1)]);
    double epoch_loss = 0;
    for (size_t start = 0; start < order.size(); start += batch_size) {
      size_t stop = std::min(order.size(), start + batch_size);
      m.store().zero_grads();
      for (size_t j = start; j < stop; ++j)
        epoch_loss +=
            m.accumulate(samples[order[j]], w, 1.0f / static_cast<float>(stop - start)).loss;
      adam_step(m.store(), adam);
    }
    if (tune && (epoch + 1) % 10 == 0) {
      int64_t correct = 0;
      for (size_t j = 0; j < n_train; ++j) {
        auto dists = m.forward(samples[j]);
        EIndex best;
        dists[1].maxCoeff(&best);
        if (static_cast<int>(best) == samples[j].gold[1]) ++correct;
      }
      std::cerr << "[tune] " << arch_name(arch) << " seed " << model_seed << " epoch "
                << (epoch + 1) << " loss " << epoch_loss / double(n_train) << " train acc "
                << double(correct) / double(n_train) << " test wF1 " << test_f1() << "\n";
    }
  }
  return test_f1();
}

void criterion_7() {
  auto t0 = std::chrono::steady_clock::now();
  const int kChains = 200, kEpochs = 100, kBatch = 20;
  const double kLr = 3e-3;
  double gap_sum = 0;
  std::ostringstream gaps;
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    EchoCorpus ec = make_echo_corpus(9000 + seed, kChains);
    double f_attn = echo_f1(Arch::HlstmAttn, ec, 1000 + seed, kEpochs, kBatch, kLr);
    double f_plain = echo_f1(Arch::Hlstm, ec, 1000 + seed, kEpochs, kBatch, kLr);
    gap_sum += f_attn - f_plain;
    gaps << (seed > 1 ? ", " : "") << "seed " << seed << ": " << f_attn * 100 << " vs "
         << f_plain * 100;
  }
  double mean_gap_pts = gap_sum / 5.0 * 100.0;
  std::ostringstream d;
  d << "weighted-F1 gap hlstm-attn minus hlstm averaged over 5 seeds = " << mean_gap_pts
    << " points (needs >= 5); per seed [" << gaps.str() << "]; " << seconds_since(t0)
    << " s";
  report(7, "attention utility (directional)", mean_gap_pts >= 5.0, d.str());
}

// --- criterion 8: metric oracle -------------------------------------------------

void criterion_8() {
  // confusion [[3,1],[2,4]]: class0 P=3/5 R=3/4 F1=2/3; class1 P=4/5 R=2/3
  std::vector<int> gold, pred;
  auto emit = [&](int g, int p, int times) {
    for (int i = 0; i < times; ++i) {
      gold.push_back(g);
      pred.push_back(p);
    }
  };
  emit(0, 0, 3);
  emit(0, 1, 1);
  emit(1, 0, 2);
  emit(1, 1, 4);
  Metrics m = compute_metrics(gold, pred, 2);

  const double f1_c0 = 2.0 / 3.0;
  const double f1_c1 = 2.0 * (4.0 / 5.0) * (2.0 / 3.0) / (4.0 / 5.0 + 2.0 / 3.0);
  const double macro = (f1_c0 + f1_c1) / 2.0;
  const double weighted = (4.0 * f1_c0 + 6.0 * f1_c1) / 10.0;
  double err = std::max({std::abs(m.f1[0] - f1_c0), std::abs(m.f1[1] - f1_c1),
                         std::abs(m.macro_f1 - macro), std::abs(m.weighted_f1 - weighted)});
  std::ostringstream d;
  d << "class0 F1 " << m.f1[0] << " vs 0.666667, worst deviation " << err << " (tol 1e-9)";
  report(8, "metric oracle", err <= 1e-9, d.str());
}

// --- criterion 9: weight transfer + checkpoint round-trip ------------------------

void criterion_9() {
  ModelConfig small = toy_config(Arch::HlstmAttn);
  small.chain_len = 2;
  small.max_words = 4;
  ModelConfig big = small;
  big.chain_len = 3;
  big.max_words = 6;  // attention table gains rows
  big.seed = 99;

  Model<float> a(small);
  // make a's values distinctive
  Rng rng(31);
  for (Param<float>* p : a.store().all())
    for (EIndex r = 0; r < p->rows(); ++r)
      for (EIndex c = 0; c < p->cols(); ++c) p->value(r, c) = static_cast<float>(rng.uniform(-1, 1));

  Model<float> b(big);
  transfer_weights(a.store(), b.store());

  bool transfer_ok = true;
  std::string why;
  for (const Param<float>* pa : a.store().all()) {
    const Param<float>& pb = b.store().at(pa->name);
    if (pa->name == "attn.K") {
      if (pb.value.topRows(pa->rows()) != pa->value) {
        transfer_ok = false;
        why = "attn.K leading rows differ";
      }
      continue;
    }
    if (pa->rows() == pb.rows() && pa->cols() == pb.cols() && pa->value != pb.value) {
      transfer_ok = false;
      why = pa->name + " not copied bitwise";
    }
  }

  // checkpoint round-trip: save -> load -> forward bitwise equal
  fs::path dir = fs::temp_directory_path() / "repartee_acceptance_ckpt";
  fs::create_directories(dir);
  std::string path = (dir / "roundtrip.ckpt").string();
  save_model(b, path);
  Model<float> b2 = load_model(path);
  auto chain = toy_word_chain<float>(big, 77, true);
  auto d1 = b.forward(chain);
  auto d2 = b2.forward(chain);
  bool forward_ok = d1.size() == d2.size();
  for (size_t i = 0; forward_ok && i < d1.size(); ++i)
    if (d1[i] != d2[i]) forward_ok = false;
  fs::remove_all(dir);

  std::ostringstream d;
  d << "transferred tensors bitwise " << (transfer_ok ? "equal" : ("UNEQUAL: " + why))
    << "; save->load->forward " << (forward_ok ? "bitwise equal" : "DIVERGED");
  report(9, "weight transfer + checkpoint round-trip", transfer_ok && forward_ok, d.str());
}

// --- criterion 10: partition oracle ----------------------------------------------

void criterion_10() {
  Rng rng(2024);
  int mismatches = 0;
  double worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    SignedUserGraph g;
    int n = 4 + static_cast<int>(rng.uniform_int(9));  // 4..12 users
    for (int u = 0; u < n; ++u) g.user_id("user" + std::to_string(u));
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v) {
        double roll = rng.uniform();
        if (roll < 0.35)
          g.add_interaction(g.user_name(u), g.user_name(v), DiscourseAct::Agreement);
        else if (roll < 0.7)
          g.add_interaction(g.user_name(u), g.user_name(v), DiscourseAct::Disagreement);
      }
    if (g.edges.empty()) continue;
    Partition exact = partition_users(g, 1, /*exact_limit=*/20);
    Partition heur = partition_users(g, 1, /*exact_limit=*/0, /*restarts=*/10);
    double diff = std::abs(heur.frustration - exact.frustration);
    worst = std::max(worst, diff);
    if (diff > 1e-9) ++mismatches;
  }
  std::ostringstream d;
  d << "50 random signed graphs (<=12 nodes, 10 restarts): " << mismatches
    << " heuristic/exhaustive mismatches, worst frustration gap " << worst << " (tol 1e-9)";
  report(10, "partition oracle", mismatches == 0, d.str());
}

// --- criterion 11: optional corpus-scale ordering ----------------------------------

void criterion_11() {
  const char* corpus_path = std::getenv("DISCOURSE_FULL_CORPUS");
  if (!corpus_path || !*corpus_path) {
    skip(11, "corpus-scale ordering",
         "optional long-running check; full-corpus scores are not reproducible on "
         "desk-scale hardware. Set DISCOURSE_FULL_CORPUS=/path/to/threads.jsonl to train "
         "all six architectures on a 10% thread subsample and verify the relative "
         "ordering.");
    return;
  }

  // 10% subsample of threads, then the standard pipeline per architecture.
  fs::path dir = fs::temp_directory_path() / "repartee_acceptance_full";
  fs::remove_all(dir);
  fs::create_directories(dir);
  fs::path sub = dir / "subsample.jsonl";
  {
    std::ifstream in(corpus_path);
    if (!in) {
      report(11, "corpus-scale ordering", false,
             std::string("cannot open DISCOURSE_FULL_CORPUS=") + corpus_path);
      return;
    }
    std::ofstream out(sub);
    std::string line;
    long k = 0;
    while (std::getline(in, line))
      if (k++ % 10 == 0) out << line << "\n";
  }
  std::string corpus = (dir / "corpus").string();
  if (run_command({"ingest", "--in", sub.string(), "--out", corpus}) != 0 ||
      run_command({"embed", "--corpus", corpus}) != 0) {
    report(11, "corpus-scale ordering", false, "pipeline failed during ingest/embed");
    return;
  }
  std::map<std::string, double> f1;
  for (const char* arch :
       {"mlp", "seqlstm", "hlstm", "cnnlstm", "cnnlstm-attn", "hlstm-attn"}) {
    std::string run_dir = (dir / arch).string();
    if (run_command({"train", "--arch", arch, "--corpus", corpus, "--out", run_dir,
                     "--folds", "3", "--epochs", "8"}) != 0 ||
        run_command({"evaluate", "--ckpt-dir", run_dir, "--corpus", corpus}) != 0) {
      report(11, "corpus-scale ordering", false, std::string("pipeline failed for ") + arch);
      return;
    }
    std::ifstream in(run_dir + "/metrics_summary.json");
    nlohmann::json j;
    in >> j;
    f1[arch] = j.at("weighted").at("f1").get<double>();
  }
  // expected ranking; hlstm and cnnlstm are unordered relative to each other
  bool ok = f1["mlp"] < f1["seqlstm"] && f1["seqlstm"] < f1["hlstm"] &&
            f1["seqlstm"] < f1["cnnlstm"] && f1["hlstm"] < f1["cnnlstm-attn"] &&
            f1["cnnlstm"] < f1["cnnlstm-attn"] && f1["cnnlstm-attn"] < f1["hlstm-attn"];
  std::ostringstream d;
  d << "weighted F1 on 10% subsample:";
  for (const auto& [k, v] : f1) d << " " << k << "=" << v;
  report(11, "corpus-scale ordering", ok, d.str());
}

}  // namespace

int main(int argc, char** argv) {
  // optional args: criterion numbers to run (default: all)
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  auto want = [&](int n) { return only.empty() || only.count(n) > 0; };

  std::cout << "acceptance checks (tolerances pinned in code)\n";
  if (want(1)) guarded(1, "gradient integrity", criterion_1);
  if (want(2)) guarded(2, "LSTM oracle", criterion_2);
  if (want(3)) guarded(3, "attention normalization", criterion_3);
  if (want(4)) guarded(4, "chain-extraction equivalence", criterion_4);
  if (want(5)) guarded(5, "hierarchical tf-idf oracle", criterion_5);
  if (want(6)) guarded(6, "overfit capability", criterion_6);
  if (want(7)) guarded(7, "attention utility", criterion_7);
  if (want(8)) guarded(8, "metric oracle", criterion_8);
  if (want(9)) guarded(9, "weight transfer + checkpoint round-trip", criterion_9);
  if (want(10)) guarded(10, "partition oracle", criterion_10);
  if (want(11)) guarded(11, "corpus-scale ordering", criterion_11);
  if (failures == 0)
    std::cout << "all acceptance criteria passed\n";
  else
    std::cout << failures << " criteria FAILED\n";
  return failures == 0 ? 0 : 1;
}
