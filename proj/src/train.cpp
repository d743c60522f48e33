#include "repartee/train.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <sstream>
#include <thread>

#include "repartee/embed.hpp"
#include "repartee/eval.hpp"

namespace repartee {

using nlohmann::json;

// --- fold assignment --------------------------------------------------------

namespace {

int chain_key(const Chain& chain, bool by_first_label) {
  if (!by_first_label) return static_cast<int>(chain.length());
  const Comment* first = chain.comments.front();
  return first->gold_act ? static_cast<int>(*first->gold_act) : kNumActs;
}

void seeded_shuffle(std::vector<size_t>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[rng.uniform_int(i)]);
}

}  // namespace

FoldPlan make_folds(const std::vector<Chain>& chains, int k, uint64_t seed,
                    bool by_first_label) {
  if (k < 2) throw UsageError("need at least 2 folds");
  if (chains.size() < static_cast<size_t>(k))
    throw DataError("only " + std::to_string(chains.size()) + " chains for " +
                    std::to_string(k) + " folds");

  FoldPlan plan;
  plan.k = k;
  plan.fold_of.assign(chains.size(), -1);
  plan.strat_key.resize(chains.size());

  std::map<int, std::vector<size_t>> strata;
  for (size_t i = 0; i < chains.size(); ++i)
    strata[chain_key(chains[i], by_first_label)].push_back(i);

  // Strata too small to spread over every fold merge into the nearest key.
  bool merged = true;
  while (merged && strata.size() > 1) {
    merged = false;
    for (auto it = strata.begin(); it != strata.end(); ++it) {
      if (it->second.size() >= static_cast<size_t>(k)) continue;
      auto best = strata.end();
      for (auto jt = strata.begin(); jt != strata.end(); ++jt) {
        if (jt == it) continue;
        if (best == strata.end() ||
            std::abs(jt->first - it->first) < std::abs(best->first - it->first))
          best = jt;
      }
      // Merge keeps member order stable: lower-index chains first.
      best->second.insert(best->second.end(), it->second.begin(), it->second.end());
      std::sort(best->second.begin(), best->second.end());
      strata.erase(it);
      plan.merged_strata += 1;
      merged = true;
      break;
    }
  }

  Rng rng(seed);
  size_t cursor = 0;
  for (auto& [key, members] : strata) {
    Rng stratum_rng = rng.derive("stratum-" + std::to_string(key));
    seeded_shuffle(members, stratum_rng);
    for (size_t idx : members) {
      plan.fold_of[idx] = static_cast<int>(cursor % static_cast<size_t>(k));
      plan.strat_key[idx] = key;
      ++cursor;
    }
  }
  return plan;
}

void save_fold_plan_json(const FoldPlan& plan, const std::string& path) {
  json j;
  j["k"] = plan.k;
  j["merged_strata"] = plan.merged_strata;
  j["fold_of"] = plan.fold_of;
  j["strat_key"] = plan.strat_key;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("failed writing " + path);
}

FoldPlan load_fold_plan_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open fold plan: " + path);
  try {
    json j = json::parse(in);
    FoldPlan plan;
    plan.k = j.at("k").get<int>();
    plan.merged_strata = j.value("merged_strata", 0);
    plan.fold_of = j.at("fold_of").get<std::vector<int>>();
    plan.strat_key = j.value("strat_key", std::vector<int>(plan.fold_of.size(), 0));
    return plan;
  } catch (const json::exception& e) {
    throw DataError("bad fold plan " + path + ": " + e.what());
  }
}

// --- length buckets ---------------------------------------------------------

std::vector<Bucket> bucket_by_length(const std::vector<Chain>& chains, double percentile,
                                     int cap) {
  if (percentile <= 0 || percentile > 1) throw UsageError("percentile must be in (0, 1]");
  if (cap < 1) throw UsageError("comment width cap must be positive");

  std::map<int, Bucket> by_len;
  for (size_t i = 0; i < chains.size(); ++i) {
    Bucket& b = by_len[static_cast<int>(chains[i].length())];
    b.length = static_cast<int>(chains[i].length());
    b.chain_idx.push_back(i);
  }

  std::vector<Bucket> out;
  for (auto& [len, bucket] : by_len) {
    std::vector<size_t> counts;
    for (size_t ci : bucket.chain_idx)
      for (const Comment* c : chains[ci].comments) counts.push_back(c->tokens.size());
    std::sort(counts.begin(), counts.end());
    // Nearest-rank percentile of per-comment word counts.
    size_t rank = static_cast<size_t>(
        std::ceil(percentile * static_cast<double>(counts.size())));
    rank = std::min(std::max<size_t>(rank, 1), counts.size());
    int width = static_cast<int>(counts[rank - 1]);
    bucket.c_max = std::clamp(width, 1, cap);
    out.push_back(std::move(bucket));
  }
  return out;
}

// --- sample construction ----------------------------------------------------

ChainSample<float> make_sample(const Chain& chain, int c_max, Arch arch,
                               const SampleInputs& in) {
  if (chain.comments.empty()) throw DataError("cannot build a sample from an empty chain");
  if (c_max < 1) throw DataError("comment width must be positive");

  ChainSample<float> s;
  s.thread_id = chain.thread_id;
  for (const Comment* c : chain.comments) {
    s.comment_ids.push_back(c->id);
    s.gold.push_back(c->gold_act ? static_cast<int>(*c->gold_act) : -1);
  }

  if (arch_uses_words(arch)) {
    const size_t width = static_cast<size_t>(c_max);
    for (const Comment* c : chain.comments) {
      std::vector<int> row(width, kPadIndex);
      std::vector<uint8_t> mask(width, 0);
      size_t n = std::min(c->tokens.size(), width);
      for (size_t t = 0; t < n; ++t) {
        row[t] = c->tokens[t];
        mask[t] = 1;
      }
      // An empty comment keeps one live PAD position so the encoder still
      // takes a step and the relevance softmax has support.
      if (n == 0) mask[0] = 1;
      s.tokens.push_back(std::move(row));
      s.word_mask.push_back(std::move(mask));
    }
  }

  if (arch_uses_attention(arch)) {
    if (!in.vocab || !in.static_words || !in.thread_idf || !in.comment_idf)
      throw DataError("attention samples need vocab, static embeddings, and idf tables");
    const Comment* first = chain.comments.front();
    for (size_t i = 0; i < chain.comments.size(); ++i) {
      const Comment* parent = i > 0 ? chain.comments[i - 1] : nullptr;
      s.targets.push_back(attention_targets<float>(first, parent, *in.static_words,
                                                   *in.thread_idf, *in.comment_idf,
                                                   *in.vocab, in.selector));
    }
  }

  if (arch_uses_comment_vecs(arch)) {
    if (!in.comment_vecs) throw DataError("vector models need pretrained comment vectors");
    for (const Comment* c : chain.comments) {
      std::string label = comment_label(chain.thread_id, c->id);
      int row = -1;
      if (in.comment_index) {
        auto it = in.comment_index->find(label);
        row = it == in.comment_index->end() ? -1 : it->second;
      } else {
        row = find_label_row(*in.comment_vecs, label);
      }
      if (row < 0) throw DataError("no pretrained vector for comment " + label);
      s.comment_vecs.push_back(in.comment_vecs->vectors.row(row).transpose());
    }
  }
  return s;
}

std::unordered_map<std::string, int> build_label_index(const EmbeddingFile& e) {
  std::unordered_map<std::string, int> index;
  index.reserve(e.labels.size());
  for (size_t i = 0; i < e.labels.size(); ++i)
    index.emplace(e.labels[i], static_cast<int>(i));
  return index;
}

VecF inverse_frequency_weights(const std::vector<const Chain*>& chains, int n_classes,
                               bool enabled) {
  VecF w = VecF::Ones(n_classes);
  if (!enabled) return w;

  std::vector<int64_t> counts(n_classes, 0);
  int64_t total = 0;
  for (const Chain* chain : chains)
    for (const Comment* c : chain->comments)
      if (c->gold_act) {
        ++counts[static_cast<int>(*c->gold_act)];
        ++total;
      }
  if (total == 0) return w;

  // w_c ∝ 1/freq_c over the classes that occur, rescaled to mean 1 so the
  // effective learning rate stays comparable to the unweighted loss.
  double sum_present = 0;
  int n_present = 0;
  for (int c = 0; c < n_classes; ++c)
    if (counts[c] > 0) {
      w[c] = static_cast<float>(static_cast<double>(total) / static_cast<double>(counts[c]));
      sum_present += w[c];
      ++n_present;
    }
  float norm = static_cast<float>(static_cast<double>(n_present) / sum_present);
  for (int c = 0; c < n_classes; ++c)
    if (counts[c] > 0) w[c] *= norm;
  return w;
}

// --- weight transfer --------------------------------------------------------

int transfer_weights(const ParamStore<float>& from, ParamStore<float>& to) {
  int copied = 0;
  for (Param<float>* p : to.all()) {
    const Param<float>* q = from.find(p->name);
    if (!q) continue;
    if (q->rows() == p->rows() && q->cols() == p->cols()) {
      p->value = q->value;
      ++copied;
    } else if (p->name == "attn.K" && q->cols() == p->cols()) {
      // Score rows are per word position; buckets with wider comments add
      // fresh rows, narrower ones drop the tail.
      EIndex r = std::min(p->rows(), q->rows());
      p->value.topRows(r) = q->value.topRows(r);
      ++copied;
    }
  }
  return copied;
}

// --- training loop ----------------------------------------------------------

int resolve_thread_count(const TrainSettings& cfg, int jobs) {
  if (jobs < 1) return 1;
  if (cfg.deterministic) return 1;
  int n = cfg.max_threads > 0 ? cfg.max_threads
                              : static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("DISCOURSE_CHAIN_THREADS")) {
    char* end = nullptr;
    long cap = std::strtol(env, &end, 10);
    if (end && *end == '\0' && cap > 0) n = std::min<long>(n, cap);
  }
  return std::min(n, jobs);
}

namespace {

struct FoldOutput {
  std::vector<EpochRow> rows;
  std::map<std::pair<int, int>, std::string> checkpoints;
};

uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b) {
  uint64_t s = splitmix64(base ^ splitmix64(a));
  return splitmix64(s ^ splitmix64(b ^ 0x9e3779b97f4a7c15ull));
}

double chain_loss(Model<float>& model, const ChainSample<float>& s, const VecF& weights,
                  std::vector<int>* gold, std::vector<int>* pred, int64_t* n_labeled) {
  auto dists = model.forward(s);
  double loss = 0;
  for (size_t i = 0; i < dists.size(); ++i) {
    if (s.gold[i] < 0) continue;
    loss += weights[s.gold[i]] *
            cross_entropy<float>(dists[i], s.gold[i], nullptr);
    EIndex best;
    dists[i].maxCoeff(&best);
    if (gold) gold->push_back(s.gold[i]);
    if (pred) pred->push_back(static_cast<int>(best));
    if (n_labeled) ++*n_labeled;
  }
  return loss;
}

FoldOutput train_fold(int fold, const std::vector<Chain>& chains, const FoldPlan& plan,
                      const std::vector<Bucket>& buckets, const SampleInputs& inputs,
                      const TrainSettings& cfg, const VecF& weights) {
  FoldOutput out;
  std::unique_ptr<Model<float>> prev;

  for (const Bucket& bucket : buckets) {
    std::vector<ChainSample<float>> train_samples, val_samples;
    for (size_t ci : bucket.chain_idx) {
      auto s = make_sample(chains[ci], bucket.c_max, cfg.arch, inputs);
      if (plan.fold_of[ci] == fold)
        val_samples.push_back(std::move(s));
      else
        train_samples.push_back(std::move(s));
    }
    if (train_samples.empty()) continue;

    ModelConfig mc = cfg.model;
    mc.arch = cfg.arch;
    mc.chain_len = bucket.length;
    mc.max_words = bucket.c_max;
    mc.seed = derive_seed(cfg.seed, static_cast<uint64_t>(fold),
                          static_cast<uint64_t>(bucket.length));
    Model<float> model(mc, arch_uses_words(cfg.arch) ? inputs.static_words : nullptr);
    if (prev) transfer_weights(prev->store(), model.store());

    Rng order_rng(derive_seed(cfg.seed ^ 0x5bf03635ull, static_cast<uint64_t>(fold),
                              static_cast<uint64_t>(bucket.length)));
    std::vector<size_t> order(train_samples.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    double best_val = std::numeric_limits<double>::infinity();
    std::map<std::string, MatF> best_values;
    int bad_epochs = 0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
      seeded_shuffle(order, order_rng);
      double loss_sum = 0;
      int batches = 0;
      int64_t train_correct = 0, train_labeled = 0;

      for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
        size_t stop = std::min(order.size(), start + cfg.batch_size);
        int64_t batch_labeled = 0;
        for (size_t b = start; b < stop; ++b)
          for (int g : train_samples[order[b]].gold)
            if (g >= 0) ++batch_labeled;
        if (batch_labeled == 0) continue;

        model.store().zero_grads();
        double batch_loss = 0;
        float scale = 1.0f / static_cast<float>(batch_labeled);
        for (size_t b = start; b < stop; ++b) {
          const auto& s = train_samples[order[b]];
          auto res = model.accumulate(s, weights, scale);
          batch_loss += res.loss;
          for (size_t i = 0; i < res.dists.size(); ++i) {
            if (s.gold[i] < 0) continue;
            EIndex best;
            res.dists[i].maxCoeff(&best);
            train_correct += static_cast<int>(best) == s.gold[i];
            ++train_labeled;
          }
        }
        if (!std::isfinite(batch_loss)) {
          std::ostringstream oss;
          oss << "non-finite loss: fold " << fold << ", bucket len " << bucket.length
              << ", epoch " << epoch << ", batch threads:";
          for (size_t b = start; b < stop; ++b)
            oss << ' ' << train_samples[order[b]].thread_id;
          throw NumericError(oss.str());
        }
        adam_step(model.store(), cfg.adam);
        loss_sum += batch_loss;
        ++batches;
      }

      EpochRow row;
      row.fold = fold;
      row.bucket_len = bucket.length;
      row.epoch = epoch;
      row.loss = batches > 0 ? loss_sum / batches : 0;
      row.train_acc = train_labeled > 0
                          ? static_cast<double>(train_correct) /
                                static_cast<double>(train_labeled)
                          : 0;

      if (!val_samples.empty()) {
        double vloss = 0;
        int64_t vn = 0;
        std::vector<int> vgold, vpred;
        for (const auto& s : val_samples)
          vloss += chain_loss(model, s, weights, &vgold, &vpred, &vn);
        row.val_loss = vn > 0 ? vloss / static_cast<double>(vn)
                              : std::numeric_limits<double>::quiet_NaN();
        row.val_f1 = vgold.empty()
                         ? std::numeric_limits<double>::quiet_NaN()
                         : compute_metrics(vgold, vpred, cfg.model.n_classes).weighted_f1;

        if (vn > 0 && row.val_loss < best_val - 1e-9) {
          best_val = row.val_loss;
          best_values.clear();
          for (const Param<float>* p : model.store().all())
            best_values[p->name] = p->value;
          bad_epochs = 0;
        } else {
          ++bad_epochs;
        }
      } else {
        row.val_loss = std::numeric_limits<double>::quiet_NaN();
        row.val_f1 = std::numeric_limits<double>::quiet_NaN();
      }
      out.rows.push_back(row);
      if (!val_samples.empty() && bad_epochs >= cfg.patience) break;
    }

    // Hand-off and checkpoint use the best validation epoch when one exists.
    if (!best_values.empty())
      for (Param<float>* p : model.store().all()) p->value = best_values.at(p->name);

    std::string name = std::string(arch_name(cfg.arch)) + ".fold" + std::to_string(fold) +
                       ".len" + std::to_string(bucket.length) + ".ckpt";
    std::string path = (std::filesystem::path(cfg.out_dir) / name).string();
    save_model(model, path);
    out.checkpoints[{fold, bucket.length}] = path;

    prev = std::make_unique<Model<float>>(std::move(model));
  }
  return out;
}

}  // namespace

TrainRunResult train_run(const std::vector<Chain>& chains, const FoldPlan& plan,
                         const std::vector<Bucket>& buckets, const SampleInputs& inputs,
                         const TrainSettings& cfg) {
  if (plan.fold_of.size() != chains.size())
    throw DataError("fold plan does not cover the chain set");
  if (plan.k < 2) throw UsageError("fold plan needs k >= 2");
  if (cfg.batch_size < 1) throw UsageError("batch size must be positive");
  if (cfg.epochs < 1) throw UsageError("epoch count must be positive");
  if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);

  // Class weights come from each fold's own training split.
  std::vector<VecF> weights(plan.k);
  for (int f = 0; f < plan.k; ++f) {
    std::vector<const Chain*> train_chains;
    for (size_t i = 0; i < chains.size(); ++i)
      if (plan.fold_of[i] != f) train_chains.push_back(&chains[i]);
    weights[f] =
        inverse_frequency_weights(train_chains, cfg.model.n_classes, cfg.class_weights);
  }

  std::vector<FoldOutput> outputs(plan.k);
  std::vector<std::exception_ptr> errors(plan.k);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      int f = next.fetch_add(1);
      if (f >= plan.k) return;
      try {
        outputs[f] = train_fold(f, chains, plan, buckets, inputs, cfg, weights[f]);
      } catch (...) {
        errors[f] = std::current_exception();
      }
    }
  };

  int n_threads = resolve_thread_count(cfg, plan.k);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (int f = 0; f < plan.k; ++f)
    if (errors[f]) std::rethrow_exception(errors[f]);

  TrainRunResult result;
  for (int f = 0; f < plan.k; ++f) {
    result.log.insert(result.log.end(), outputs[f].rows.begin(), outputs[f].rows.end());
    result.checkpoints.insert(outputs[f].checkpoints.begin(), outputs[f].checkpoints.end());
  }
  return result;
}

void save_training_log_csv(const std::vector<EpochRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "fold,bucket_len,epoch,loss,train_acc,val_loss,val_f1\n";
  out.precision(6);
  out << std::fixed;
  for (const auto& r : rows) {
    out << r.fold << ',' << r.bucket_len << ',' << r.epoch << ',' << r.loss << ','
        << r.train_acc << ',';
    if (std::isnan(r.val_loss))
      out << "";
    else
      out << r.val_loss;
    out << ',';
    if (std::isnan(r.val_f1))
      out << "";
    else
      out << r.val_f1;
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path);
}

}  // namespace repartee
