#include "repartee/embed.hpp"

#include <algorithm>
#include <cmath>

namespace repartee {

NegativeSampler::NegativeSampler(const Vocab& vocab, double power) {
  if (vocab.size() < 2) throw DataError("negative sampler: empty vocabulary");
  cumulative_.resize(vocab.size());
  cumulative_[0] = 0.0;  // PAD never sampled
  double total = 0.0;
  for (int i = 1; i < vocab.size(); ++i) {
    total += std::pow(static_cast<double>(std::max<int64_t>(vocab.counts[i], 1)), power);
    cumulative_[i] = total;
  }
  if (total <= 0.0) throw DataError("negative sampler: degenerate counts");
}

int NegativeSampler::sample(Rng& rng) const {
  double u = rng.uniform() * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin() + 1, cumulative_.end(), u);
  return static_cast<int>(it - cumulative_.begin());
}

namespace {

// One SGD touch for (center row of w_in, positive, negatives). Returns loss.
float apply_pair(MatF& w_in, MatF& w_out, int center, int pos,
                 const std::vector<int>& negs, float lr) {
  VecF v = w_in.row(center).transpose();
  auto g = sgns_pair_grads<float>(v, w_out, pos, negs);
  w_in.row(center) -= (lr * g.d_center).transpose();
  w_out.row(pos) -= (lr * g.d_out[0]).transpose();
  for (size_t k = 0; k < negs.size(); ++k)
    w_out.row(negs[k]) -= (lr * g.d_out[k + 1]).transpose();
  return g.loss;
}

std::vector<int> draw_negatives(const NegativeSampler& sampler, Rng& rng, int count,
                                int exclude) {
  std::vector<int> negs;
  negs.reserve(count);
  for (int k = 0; k < count; ++k) {
    int n = sampler.sample(rng);
    if (n == exclude) continue;  // standard practice: drop, don't resample
    negs.push_back(n);
  }
  return negs;
}

}  // namespace

EmbeddingFile train_word_embeddings(const std::vector<Thread>& threads, const Vocab& vocab,
                                    const EmbedConfig& cfg, MatF* out_context) {
  if (cfg.dim < 2) throw UsageError("word embedding dim must be >= 2");

  // Sentences are comment token lists, in corpus order.
  std::vector<const std::vector<int>*> sentences;
  int64_t total_positions = 0;
  for (const auto& t : threads)
    for (const auto& c : t.comments) {
      sentences.push_back(&c.tokens);
      total_positions += static_cast<int64_t>(c.tokens.size());
    }
  if (total_positions < cfg.window + 1)
    throw DataError("corpus too small to fill one context window");

  MatF w_in(vocab.size(), cfg.dim), w_out = MatF::Zero(vocab.size(), cfg.dim);
  Rng rng(cfg.seed);
  Rng init_rng = rng.derive("init");
  float scale = 0.5f / static_cast<float>(cfg.dim);
  for (EIndex r = 1; r < w_in.rows(); ++r)
    for (EIndex c = 0; c < w_in.cols(); ++c)
      w_in(r, c) = static_cast<float>(init_rng.uniform(-scale, scale));
  w_in.row(0).setZero();  // PAD stays zero: never a center, never sampled

  NegativeSampler sampler(vocab);
  Rng train_rng = rng.derive("train");
  const int64_t total_steps = std::max<int64_t>(1, total_positions * cfg.epochs);
  int64_t step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto* sent : sentences) {
      const auto& toks = *sent;
      for (size_t i = 0; i < toks.size(); ++i, ++step) {
        int center = toks[i];
        if (center == kPadIndex) continue;
        float lr = static_cast<float>(std::max(
            cfg.min_lr, cfg.lr * (1.0 - static_cast<double>(step) / total_steps)));
        size_t lo = i >= static_cast<size_t>(cfg.window) ? i - cfg.window : 0;
        size_t hi = std::min(toks.size() - 1, i + static_cast<size_t>(cfg.window));
        for (size_t j = lo; j <= hi; ++j) {
          if (j == i || toks[j] == kPadIndex) continue;
          auto negs = draw_negatives(sampler, train_rng, cfg.negatives, toks[j]);
          apply_pair(w_in, w_out, center, toks[j], negs, lr);
        }
      }
    }
  }

  if (!all_finite(w_in)) throw NumericError("word embedding training diverged");
  if (out_context) *out_context = w_out;
  EmbeddingFile out;
  out.vectors = std::move(w_in);
  out.labels = vocab.index_to_token;
  return out;
}

EmbeddingFile train_comment_embeddings(const std::vector<Thread>& threads,
                                       const Vocab& vocab, const EmbedConfig& cfg) {
  if (cfg.dim < 2) throw UsageError("comment embedding dim must be >= 2");

  std::vector<std::string> labels;
  std::vector<const std::vector<int>*> docs;
  int64_t total_positions = 0;
  for (const auto& t : threads)
    for (const auto& c : t.comments) {
      labels.push_back(comment_label(t.id, c.id));
      docs.push_back(&c.tokens);
      total_positions += static_cast<int64_t>(c.tokens.size());
    }
  if (docs.empty()) throw DataError("no comments to embed");
  if (total_positions == 0) throw DataError("corpus has no tokens (tokenize first?)");

  MatF d_vecs(static_cast<EIndex>(docs.size()), cfg.dim);
  MatF w_out = MatF::Zero(vocab.size(), cfg.dim);
  Rng rng(cfg.seed);
  Rng init_rng = rng.derive("doc-init");
  float scale = 0.5f / static_cast<float>(cfg.dim);
  for (EIndex r = 0; r < d_vecs.rows(); ++r)
    for (EIndex c = 0; c < d_vecs.cols(); ++c)
      d_vecs(r, c) = static_cast<float>(init_rng.uniform(-scale, scale));

  NegativeSampler sampler(vocab);
  Rng train_rng = rng.derive("doc-train");
  const int64_t total_steps = std::max<int64_t>(1, total_positions * cfg.epochs);
  int64_t step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (size_t d = 0; d < docs.size(); ++d) {
      for (int tok : *docs[d]) {
        float lr = static_cast<float>(std::max(
            cfg.min_lr, cfg.lr * (1.0 - static_cast<double>(step) / total_steps)));
        ++step;
        if (tok == kPadIndex) continue;
        auto negs = draw_negatives(sampler, train_rng, cfg.negatives, tok);
        apply_pair(d_vecs, w_out, static_cast<int>(d), tok, negs, lr);
      }
    }
  }

  if (!all_finite(d_vecs)) throw NumericError("comment embedding training diverged");
  EmbeddingFile out;
  out.vectors = std::move(d_vecs);
  out.labels = std::move(labels);
  return out;
}

int find_label_row(const EmbeddingFile& e, const std::string& label) {
  for (size_t i = 0; i < e.labels.size(); ++i)
    if (e.labels[i] == label) return static_cast<int>(i);
  return -1;
}

}  // namespace repartee
