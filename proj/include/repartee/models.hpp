#pragma once

// The end-to-end architectures mapping a comment chain to per-comment
// discourse-act distributions:
//
//   mlp          3-layer feedforward over (prev comment vec, prev act, cur vec)
//   seqlstm      LSTM over pretrained comment vectors, shared dense head
//   hlstm        word-LSTM stack -> comment vector -> comment-LSTM -> head
//   hlstm-attn   hlstm with the word-relevance distribution between the
//                word LSTMs
//   cnnlstm      n-gram conv encoder -> comment-LSTM -> head
//   cnnlstm-attn cnnlstm with relevance scaling of the embedded words
//                before convolution
//
// Each model owns a ParamStore; accumulate() runs forward + backward for one
// chain and adds gradients, so a trainer can batch chains by calling it
// repeatedly before one optimizer step.

#include <memory>
#include <string>
#include <vector>

#include "repartee/checkpoint.hpp"
#include "repartee/common.hpp"
#include "repartee/corpus.hpp"
#include "repartee/layers.hpp"
#include "repartee/ops.hpp"
#include "repartee/paramstore.hpp"
#include "repartee/tensor.hpp"

namespace repartee {

enum class Arch { Mlp, SeqLstm, Hlstm, HlstmAttn, CnnLstm, CnnLstmAttn };

inline const char* arch_name(Arch a) {
  switch (a) {
    case Arch::Mlp: return "mlp";
    case Arch::SeqLstm: return "seqlstm";
    case Arch::Hlstm: return "hlstm";
    case Arch::HlstmAttn: return "hlstm-attn";
    case Arch::CnnLstm: return "cnnlstm";
    case Arch::CnnLstmAttn: return "cnnlstm-attn";
  }
  return "?";
}

inline Arch arch_from_string(const std::string& s) {
  for (Arch a : {Arch::Mlp, Arch::SeqLstm, Arch::Hlstm, Arch::HlstmAttn, Arch::CnnLstm,
                 Arch::CnnLstmAttn})
    if (s == arch_name(a)) return a;
  throw UsageError("unknown architecture: " + s +
                   " (want mlp|seqlstm|hlstm|hlstm-attn|cnnlstm|cnnlstm-attn)");
}

inline bool arch_uses_attention(Arch a) {
  return a == Arch::HlstmAttn || a == Arch::CnnLstmAttn;
}
inline bool arch_uses_words(Arch a) {
  return a == Arch::Hlstm || a == Arch::HlstmAttn || a == Arch::CnnLstm ||
         a == Arch::CnnLstmAttn;
}
inline bool arch_uses_comment_vecs(Arch a) {
  return a == Arch::Mlp || a == Arch::SeqLstm;
}

// Normal: learned relevance. ForceUniform: P fixed to uniform over real
// positions (wiring tests). Off: skip the branch, scaling W' by off_scale
// (1.0 = plain model; 1/n mirrors a uniform P for the wiring comparison).
enum class AttentionMode { Normal, ForceUniform, Off };

struct ModelConfig {
  Arch arch = Arch::Hlstm;
  int n_classes = kNumActs;
  int vocab_size = 0;           // word models
  int word_dim = 150;
  int lstm1_hidden = 150;       // word LSTM, sequential
  int lstm2_hidden = 200;       // word LSTM, final state = comment vector
  int comment_lstm_hidden = 200;
  int comment_dim = 700;        // mlp / seqlstm input width
  int mlp_h1 = 300;
  int mlp_h2 = 100;
  int cnn_channels = 64;        // F; conv comment vector is 3F wide
  int max_words = 0;            // C_max of the bucket (word models)
  int chain_len = 0;            // bucket chain length (metadata only)
  uint64_t seed = 1;
  AttentionMode attention_mode = AttentionMode::Normal;
  double off_scale = 1.0;
};

// One padded chain. Word models read tokens/word_mask/targets; vector models
// read comment_vecs. gold = -1 marks an unlabeled comment: it still advances
// the sequence models but contributes no loss.
template <typename T>
struct ChainSample {
  std::string thread_id;
  std::vector<std::string> comment_ids;
  std::vector<std::vector<int>> tokens;         // [len][C_max]
  std::vector<std::vector<uint8_t>> word_mask;  // [len][C_max], 1 = real
  std::vector<AttentionTargets<T>> targets;     // per comment; empty if unused
  std::vector<Vec<T>> comment_vecs;             // [len], dim comment_dim
  std::vector<int> gold;                        // [len], -1 = unlabeled

  size_t length() const {
    return tokens.empty() ? comment_vecs.size() : tokens.size();
  }
};

template <typename T>
struct AccumulateResult {
  T loss = 0;           // sum of scaled per-comment losses
  int n_labeled = 0;    // comments that contributed
  std::vector<Vec<T>> dists;  // per-comment distributions (for train accuracy)
};

template <typename T>
class Model {
 public:
  // pretrained_words: rows copied into the trainable embedding (word models);
  // nullptr leaves the embedding randomly initialized (tests, scratch runs).
  Model(const ModelConfig& cfg, const MatF* pretrained_words = nullptr)
      : cfg_(cfg) {
    Rng rng(cfg.seed);
    build(rng, pretrained_words);
  }

  const ModelConfig& config() const { return cfg_; }
  ParamStore<T>& store() { return store_; }
  const ParamStore<T>& store() const { return store_; }

  // Distributions per comment, no gradients.
  std::vector<Vec<T>> forward(const ChainSample<T>& chain) {
    switch (cfg_.arch) {
      case Arch::Mlp: return mlp_forward(chain, nullptr, nullptr);
      case Arch::SeqLstm: return seq_forward(chain, nullptr);
      case Arch::Hlstm:
      case Arch::HlstmAttn: return word_forward(chain, nullptr);
      case Arch::CnnLstm:
      case Arch::CnnLstmAttn: return word_forward(chain, nullptr);
    }
    throw DataError("unreachable");
  }

  // Per-comment relevance distributions over word positions (attention
  // architectures only). Entries are zero at PAD positions.
  std::vector<Vec<T>> relevance(const ChainSample<T>& chain) {
    if (!arch_uses_attention(cfg_.arch))
      throw UsageError(std::string("architecture ") + arch_name(cfg_.arch) +
                       " has no relevance distribution");
    WordCaches cc;
    (void)word_forward(chain, &cc);
    return cc.p;
  }

  // Forward + backward for one chain. Per-comment loss is
  // class_weights[gold] * CE * upstream_scale; gradients accumulate into the
  // store. class_weights must have n_classes entries (ones = unweighted).
  AccumulateResult<T> accumulate(const ChainSample<T>& chain, const Vec<T>& class_weights,
                                 T upstream_scale) {
    if (class_weights.size() != cfg_.n_classes)
      throw DataError("class weight vector has wrong length");
    switch (cfg_.arch) {
      case Arch::Mlp: return mlp_accumulate(chain, class_weights, upstream_scale);
      case Arch::SeqLstm: return seq_accumulate(chain, class_weights, upstream_scale);
      default: return word_accumulate(chain, class_weights, upstream_scale);
    }
  }

 private:
  ModelConfig cfg_;
  ParamStore<T> store_;

  // bound views (populated in build)
  Param<T>* emb_ = nullptr;
  LstmParams<T> lstm1_{}, lstm2_{}, lstm_c_{};
  ConvParams<T> conv_{};
  Param<T>* attn_K_ = nullptr;
  Param<T>*head_W_ = nullptr, *head_b_ = nullptr;
  Param<T>*mlp_W1_ = nullptr, *mlp_b1_ = nullptr;
  Param<T>*mlp_W2_ = nullptr, *mlp_b2_ = nullptr;
  Param<T>*mlp_W3_ = nullptr, *mlp_b3_ = nullptr;

  bool use_attention() const {
    return arch_uses_attention(cfg_.arch) && cfg_.attention_mode != AttentionMode::Off;
  }

  void build(Rng& rng, const MatF* pretrained) {
    const int C = cfg_.n_classes;
    switch (cfg_.arch) {
      case Arch::Mlp: {
        const int in = cfg_.comment_dim + C + cfg_.comment_dim;
        mlp_W1_ = &store_.add("mlp.W1", in, cfg_.mlp_h1);
        mlp_b1_ = &store_.add("mlp.b1", 1, cfg_.mlp_h1);
        mlp_W2_ = &store_.add("mlp.W2", cfg_.mlp_h1, cfg_.mlp_h2);
        mlp_b2_ = &store_.add("mlp.b2", 1, cfg_.mlp_h2);
        mlp_W3_ = &store_.add("mlp.W3", cfg_.mlp_h2, C);
        mlp_b3_ = &store_.add("mlp.b3", 1, C);
        for (auto* w : {mlp_W1_, mlp_W2_, mlp_W3_}) init_glorot(*w, rng);
        break;
      }
      case Arch::SeqLstm: {
        lstm_c_ = add_lstm(store_, "clstm", cfg_.comment_dim, cfg_.comment_lstm_hidden);
        init_lstm(lstm_c_, rng);
        add_head(cfg_.comment_lstm_hidden, rng);
        break;
      }
      case Arch::Hlstm:
      case Arch::HlstmAttn: {
        add_embedding(rng, pretrained);
        lstm1_ = add_lstm(store_, "wlstm1", cfg_.word_dim, cfg_.lstm1_hidden);
        lstm2_ = add_lstm(store_, "wlstm2", cfg_.lstm1_hidden, cfg_.lstm2_hidden);
        lstm_c_ = add_lstm(store_, "clstm", cfg_.lstm2_hidden, cfg_.comment_lstm_hidden);
        for (auto* l : {&lstm1_, &lstm2_, &lstm_c_}) init_lstm(*l, rng);
        if (cfg_.arch == Arch::HlstmAttn) add_attention(rng);
        add_head(cfg_.comment_lstm_hidden, rng);
        break;
      }
      case Arch::CnnLstm:
      case Arch::CnnLstmAttn: {
        add_embedding(rng, pretrained);
        conv_ = add_conv(store_, "conv", cfg_.word_dim, cfg_.cnn_channels);
        init_conv(conv_, rng);
        lstm_c_ = add_lstm(store_, "clstm", 3 * cfg_.cnn_channels, cfg_.comment_lstm_hidden);
        init_lstm(lstm_c_, rng);
        if (cfg_.arch == Arch::CnnLstmAttn) add_attention(rng);
        add_head(cfg_.comment_lstm_hidden, rng);
        break;
      }
    }
  }

  void add_embedding(Rng& rng, const MatF* pretrained) {
    if (cfg_.vocab_size < 2) throw DataError("word model needs a vocabulary");
    emb_ = &store_.add("emb", cfg_.vocab_size, cfg_.word_dim);
    emb_->freeze_row0 = true;
    if (pretrained) {
      if (pretrained->rows() != cfg_.vocab_size || pretrained->cols() != cfg_.word_dim)
        throw DataError("pretrained embedding shape does not match config");
      emb_->value = pretrained->template cast<T>();
    } else {
      init_uniform(*emb_, rng, 0.08);
    }
    emb_->value.row(0).setZero();
  }

  void add_attention(Rng& rng) {
    if (cfg_.max_words < 1)
      throw DataError("attention model needs max_words (bucket C_max)");
    attn_K_ = &store_.add("attn.K", cfg_.max_words, 3 * cfg_.word_dim);
    init_glorot(*attn_K_, rng);
  }

  void add_head(int in_dim, Rng& rng) {
    head_W_ = &store_.add("head.W", in_dim, cfg_.n_classes);
    head_b_ = &store_.add("head.b", 1, cfg_.n_classes);
    init_glorot(*head_W_, rng);
  }

  Vec<T> head_bias() const { return head_b_->value.row(0).transpose(); }

  // --- mlp -----------------------------------------------------------------

  // Builds the input for predicting comment i: concat(C_{i-1}, D_{i-1}, C_i),
  // zero vectors before the chain start.
  Vec<T> mlp_input(const ChainSample<T>& chain, size_t i, const Vec<T>& d_prev) const {
    const int cd = cfg_.comment_dim, C = cfg_.n_classes;
    Vec<T> in = Vec<T>::Zero(2 * cd + C);
    if (i > 0) {
      in.segment(0, cd) = chain.comment_vecs[i - 1];
      in.segment(cd, C) = d_prev;
    }
    in.segment(cd + C, cd) = chain.comment_vecs[i];
    return in;
  }

  // teacher_force: gold one-hots feed the next step when labeled; otherwise
  // (and always at inference) the predicted argmax does.
  std::vector<Vec<T>> mlp_forward(const ChainSample<T>& chain,
                                  std::vector<Vec<T>>* inputs_out,
                                  std::vector<std::pair<Vec<T>, Vec<T>>>* hidden_out,
                                  bool teacher_force = false) {
    check_vector_chain(chain);
    const int C = cfg_.n_classes;
    std::vector<Vec<T>> dists;
    Vec<T> d_prev = Vec<T>::Zero(C);
    for (size_t i = 0; i < chain.length(); ++i) {
      Vec<T> in = mlp_input(chain, i, d_prev);
      Vec<T> a1 = sigmoid<T>(mlp_W1_->value.transpose() * in +
                             mlp_b1_->value.row(0).transpose());
      Vec<T> a2 = sigmoid<T>(mlp_W2_->value.transpose() * a1 +
                             mlp_b2_->value.row(0).transpose());
      Vec<T> logits =
          mlp_W3_->value.transpose() * a2 + mlp_b3_->value.row(0).transpose();
      Vec<T> dist = masked_softmax<T>(logits, nullptr);
      if (inputs_out) inputs_out->push_back(in);
      if (hidden_out) hidden_out->emplace_back(a1, a2);
      dists.push_back(dist);

      if (teacher_force && chain.gold[i] >= 0) {
        d_prev = Vec<T>::Zero(C);
        d_prev[chain.gold[i]] = 1;
      } else {
        EIndex best;
        dist.maxCoeff(&best);
        d_prev = Vec<T>::Zero(C);
        d_prev[best] = 1;
      }
    }
    return dists;
  }

  AccumulateResult<T> mlp_accumulate(const ChainSample<T>& chain,
                                     const Vec<T>& class_weights, T upstream_scale) {
    std::vector<Vec<T>> inputs;
    std::vector<std::pair<Vec<T>, Vec<T>>> hidden;
    AccumulateResult<T> res;
    res.dists = mlp_forward(chain, &inputs, &hidden, /*teacher_force=*/true);

    // Teacher forcing makes each step independent: D_{i-1} fed forward is a
    // constant, so the backward never crosses timesteps.
    for (size_t i = 0; i < chain.length(); ++i) {
      int gold = chain.gold[i];
      if (gold < 0) continue;
      T w = class_weights[gold] * upstream_scale;
      // Recover logits gradient from the distribution (fused head algebra).
      Vec<T> dlogits = w * res.dists[i];
      dlogits[gold] -= w;
      res.loss += w * cross_entropy<T>(res.dists[i], gold, &store_.xent_clamp_count);
      ++res.n_labeled;

      const auto& [a1, a2] = hidden[i];
      mlp_W3_->grad += a2 * dlogits.transpose();
      mlp_b3_->grad += dlogits.transpose();
      Vec<T> da2 = mlp_W3_->value * dlogits;
      Vec<T> dz2 = sigmoid_backward<T>(a2, da2);
      mlp_W2_->grad += a1 * dz2.transpose();
      mlp_b2_->grad += dz2.transpose();
      Vec<T> da1 = mlp_W2_->value * dz2;
      Vec<T> dz1 = sigmoid_backward<T>(a1, da1);
      mlp_W1_->grad += inputs[i] * dz1.transpose();
      mlp_b1_->grad += dz1.transpose();
      // d(input) ends here: comment vectors are static inputs.
    }
    return res;
  }

  // --- seqlstm ---------------------------------------------------------------

  std::vector<Vec<T>> seq_forward(const ChainSample<T>& chain,
                                  LstmForwardCache<T>* cache_out) {
    check_vector_chain(chain);
    auto cache = lstm_forward(lstm_c_, chain.comment_vecs);
    std::vector<Vec<T>> dists;
    for (size_t i = 0; i < chain.length(); ++i) {
      Vec<T> logits = head_W_->value.transpose() * cache.outputs[i] + head_bias();
      dists.push_back(masked_softmax<T>(logits, nullptr));
    }
    if (cache_out) *cache_out = std::move(cache);
    return dists;
  }

  AccumulateResult<T> seq_accumulate(const ChainSample<T>& chain,
                                     const Vec<T>& class_weights, T upstream_scale) {
    LstmForwardCache<T> cache;
    AccumulateResult<T> res;
    res.dists = seq_forward(chain, &cache);

    std::vector<Vec<T>> douts(chain.length());
    for (size_t i = 0; i < chain.length(); ++i) {
      int gold = chain.gold[i];
      if (gold < 0) continue;
      T w = class_weights[gold] * upstream_scale;
      Vec<T> dlogits = w * res.dists[i];
      dlogits[gold] -= w;
      res.loss += w * cross_entropy<T>(res.dists[i], gold, &store_.xent_clamp_count);
      ++res.n_labeled;
      head_W_->grad += cache.outputs[i] * dlogits.transpose();
      head_b_->grad += dlogits.transpose();
      douts[i] = head_W_->value * dlogits;
    }
    lstm_backward<T>(lstm_c_, cache, &douts, nullptr);
    // d(comment_vecs) discarded: pretrained vectors are static inputs.
    return res;
  }

  // --- hlstm / cnnlstm (word models) -----------------------------------------

  struct WordCaches {
    std::vector<std::vector<Vec<T>>> embedded;  // per comment
    std::vector<LstmForwardCache<T>> l1, l2;     // hlstm path
    std::vector<ConvCache<T>> conv;              // cnn path
    std::vector<size_t> real_len;                // unmasked words per comment
    std::vector<RelevanceCache<T>> rel;          // attention (Normal mode)
    std::vector<Vec<T>> p;                       // distribution actually applied
    std::vector<std::vector<Vec<T>>> scaled;     // input to l2 / conv
    LstmForwardCache<T> lc;                      // comment-dimension LSTM
  };

  bool is_cnn() const {
    return cfg_.arch == Arch::CnnLstm || cfg_.arch == Arch::CnnLstmAttn;
  }

  std::vector<Vec<T>> word_forward(const ChainSample<T>& chain, WordCaches* caches) {
    check_word_chain(chain);
    const size_t len = chain.length();
    WordCaches local;
    WordCaches& cc = caches ? *caches : local;
    cc.embedded.resize(len);
    cc.real_len.resize(len);
    cc.p.resize(len);
    cc.scaled.resize(len);
    if (is_cnn())
      cc.conv.resize(len);
    else {
      cc.l1.resize(len);
      cc.l2.resize(len);
    }
    if (use_attention() && cfg_.attention_mode == AttentionMode::Normal)
      cc.rel.resize(len);

    std::vector<Vec<T>> comment_vecs(len);
    for (size_t i = 0; i < len; ++i) {
      const auto& ids = chain.tokens[i];
      const auto& mask = chain.word_mask[i];
      cc.embedded[i] = embedding_lookup(*emb_, ids);
      size_t real = 0;
      for (uint8_t m : mask) real += m;
      cc.real_len[i] = real;

      if (is_cnn()) {
        // Relevance (if any) scales the embedded words, then the conv encoder
        // sees the real prefix only.
        std::vector<Vec<T>> conv_in;
        if (use_attention()) {
          Vec<T> p = attention_p(chain, i, cc, mask);
          cc.p[i] = p;
          cc.scaled[i] = apply_relevance(p, cc.embedded[i]);
        } else {
          cc.scaled[i] = scale_all(cc.embedded[i], static_cast<T>(cfg_.off_scale));
        }
        conv_in.assign(cc.scaled[i].begin(),
                       cc.scaled[i].begin() + static_cast<long>(std::max<size_t>(real, 1)));
        comment_vecs[i] = conv_ngram_forward(conv_, conv_in, &cc.conv[i]);
      } else {
        cc.l1[i] = lstm_forward(lstm1_, cc.embedded[i], &mask);
        if (use_attention()) {
          Vec<T> p = attention_p(chain, i, cc, mask);
          cc.p[i] = p;
          cc.scaled[i] = apply_relevance(p, cc.l1[i].outputs);
        } else {
          cc.scaled[i] = scale_all(cc.l1[i].outputs, static_cast<T>(cfg_.off_scale));
        }
        cc.l2[i] = lstm_forward(lstm2_, cc.scaled[i], &mask);
        comment_vecs[i] = cc.l2[i].final_state.h;
      }
    }

    cc.lc = lstm_forward(lstm_c_, comment_vecs);
    std::vector<Vec<T>> dists;
    for (size_t i = 0; i < len; ++i) {
      Vec<T> logits = head_W_->value.transpose() * cc.lc.outputs[i] + head_bias();
      dists.push_back(masked_softmax<T>(logits, nullptr));
    }
    return dists;
  }

  // The relevance distribution for comment i under the configured mode.
  Vec<T> attention_p(const ChainSample<T>& chain, size_t i, WordCaches& cc,
                     const std::vector<uint8_t>& mask) {
    if (cfg_.attention_mode == AttentionMode::ForceUniform) {
      size_t real = cc.real_len[i];
      Vec<T> p = Vec<T>::Zero(static_cast<EIndex>(mask.size()));
      if (real > 0) {
        for (size_t t = 0; t < mask.size(); ++t)
          if (mask[t]) p[static_cast<EIndex>(t)] = static_cast<T>(1) / static_cast<T>(real);
      }
      return p;
    }
    cc.rel[i] = relevance_distribution(*attn_K_, cc.embedded[i], chain.targets[i], mask);
    return cc.rel[i].p;
  }

  static std::vector<Vec<T>> scale_all(const std::vector<Vec<T>>& seq, T s) {
    if (s == static_cast<T>(1)) return seq;
    std::vector<Vec<T>> out(seq.size());
    for (size_t i = 0; i < seq.size(); ++i) out[i] = s * seq[i];
    return out;
  }

  AccumulateResult<T> word_accumulate(const ChainSample<T>& chain,
                                      const Vec<T>& class_weights, T upstream_scale) {
    WordCaches cc;
    AccumulateResult<T> res;
    res.dists = word_forward(chain, &cc);
    const size_t len = chain.length();

    // Head + comment-LSTM backward.
    std::vector<Vec<T>> douts(len);
    for (size_t i = 0; i < len; ++i) {
      int gold = chain.gold[i];
      if (gold < 0) continue;
      T w = class_weights[gold] * upstream_scale;
      Vec<T> dlogits = w * res.dists[i];
      dlogits[gold] -= w;
      res.loss += w * cross_entropy<T>(res.dists[i], gold, &store_.xent_clamp_count);
      ++res.n_labeled;
      head_W_->grad += cc.lc.outputs[i] * dlogits.transpose();
      head_b_->grad += dlogits.transpose();
      douts[i] = head_W_->value * dlogits;
    }
    std::vector<Vec<T>> dcomment = lstm_backward<T>(lstm_c_, cc.lc, &douts, nullptr);

    // Per-comment backward into the word pipeline.
    for (size_t i = 0; i < len; ++i) {
      const auto& ids = chain.tokens[i];
      const auto& mask = chain.word_mask[i];
      std::vector<Vec<T>> dembedded(ids.size(), Vec<T>());

      if (is_cnn()) {
        auto dconv_in = conv_ngram_backward(conv_, cc.conv[i], dcomment[i]);
        // Re-expand to the padded width (appended/pad positions get zero).
        std::vector<Vec<T>> dscaled(ids.size(), Vec<T>::Zero(cfg_.word_dim));
        for (size_t t = 0; t < dconv_in.size() && t < dscaled.size(); ++t)
          dscaled[t] = dconv_in[t];
        backward_through_scaling(i, cc, mask, dscaled, cc.embedded[i], dembedded);
      } else {
        // l2 consumed the scaled sequence and produced the comment vector.
        std::vector<Vec<T>> dscaled =
            lstm_backward<T>(lstm2_, cc.l2[i], nullptr, &dcomment[i]);
        std::vector<Vec<T>> dW1(ids.size(), Vec<T>());
        backward_through_scaling(i, cc, mask, dscaled, cc.l1[i].outputs, dW1);
        // dW1 holds gradient on l1's outputs; run l1 backward into embeddings.
        auto demb = lstm_backward<T>(lstm1_, cc.l1[i], &dW1, nullptr);
        for (size_t t = 0; t < ids.size(); ++t) dembedded[t] = demb[t];
        if (use_attention() && cfg_.attention_mode == AttentionMode::Normal) {
          // Scores also consumed the embedded vectors directly.
          for (size_t t = 0; t < ids.size(); ++t)
            if (pending_dx_[t].size() > 0) dembedded[t] += pending_dx_[t];
        }
      }
      embedding_lookup_backward(*emb_, ids, dembedded);
    }
    return res;
  }

  // Backward through W_rel = p * W' (or the off_scale multiplier), routing dp
  // into K and the embedded word vectors. d_base receives gradient on the
  // pre-scaling sequence; for the cnn path the embedded-vector gradient from
  // the scores is added into d_base directly (the base IS the embedding);
  // for the hlstm path it is stashed in pending_dx_ (the base is l1's output,
  // while the scores consume the embeddings).
  void backward_through_scaling(size_t i, WordCaches& cc,
                                const std::vector<uint8_t>& mask,
                                const std::vector<Vec<T>>& dscaled,
                                const std::vector<Vec<T>>& base,
                                std::vector<Vec<T>>& d_base) {
    pending_dx_.assign(base.size(), Vec<T>());
    if (!use_attention()) {
      T s = static_cast<T>(cfg_.off_scale);
      for (size_t t = 0; t < base.size(); ++t) d_base[t] = s * dscaled[t];
      return;
    }
    auto g = apply_relevance_backward(cc.p[i], base, dscaled);
    for (size_t t = 0; t < base.size(); ++t) d_base[t] = g.dseq[t];
    if (cfg_.attention_mode == AttentionMode::ForceUniform) return;  // p constant

    auto dx = relevance_backward(*attn_K_, cc.rel[i], g.dp);
    if (is_cnn()) {
      // base == embedded vectors: fold the score gradient straight in.
      for (size_t t = 0; t < base.size(); ++t)
        if (mask[t]) d_base[t] += dx[t];
    } else {
      for (size_t t = 0; t < base.size(); ++t)
        if (mask[t]) pending_dx_[t] = dx[t];
    }
  }

  std::vector<Vec<T>> pending_dx_;  // scratch shared between the two helpers

  void check_vector_chain(const ChainSample<T>& chain) const {
    if (chain.comment_vecs.empty()) throw DataError("vector model given no comment vectors");
    for (const auto& v : chain.comment_vecs)
      if (v.size() != cfg_.comment_dim)
        throw DataError("comment vector dim " + std::to_string(v.size()) + " != " +
                        std::to_string(cfg_.comment_dim));
    if (chain.gold.size() != chain.comment_vecs.size())
      throw DataError("gold labels and comments disagree in length");
  }

  void check_word_chain(const ChainSample<T>& chain) const {
    if (chain.tokens.empty()) throw DataError("word model given no token matrix");
    if (chain.word_mask.size() != chain.tokens.size())
      throw DataError("word mask and token matrix disagree");
    if (chain.gold.size() != chain.tokens.size())
      throw DataError("gold labels and comments disagree in length");
    for (size_t i = 0; i < chain.tokens.size(); ++i)
      if (chain.tokens[i].size() != chain.word_mask[i].size())
        throw DataError("token row and mask row disagree");
    if (use_attention() && chain.targets.size() != chain.tokens.size())
      throw DataError("attention model given a chain without targets");
  }
};

// ---------------------------------------------------------------------------
// Checkpoint plumbing (float models only; training runs in float)

inline CheckpointHeader make_header(const ModelConfig& cfg) {
  CheckpointHeader h;
  h.arch = arch_name(cfg.arch);
  h.word_dim = cfg.word_dim;
  h.comment_dim = cfg.comment_dim;
  h.n_classes = cfg.n_classes;
  h.chain_len = cfg.chain_len;
  h.max_words = cfg.max_words;
  h.vocab_size = cfg.vocab_size;
  h.seed = cfg.seed;
  h.attention = arch_uses_attention(cfg.arch);
  h.dims = {{"lstm1_hidden", cfg.lstm1_hidden},
            {"lstm2_hidden", cfg.lstm2_hidden},
            {"comment_lstm_hidden", cfg.comment_lstm_hidden},
            {"mlp_h1", cfg.mlp_h1},
            {"mlp_h2", cfg.mlp_h2},
            {"cnn_channels", cfg.cnn_channels}};
  return h;
}

inline ModelConfig config_from_header(const CheckpointHeader& h) {
  ModelConfig cfg;
  cfg.arch = arch_from_string(h.arch);
  cfg.word_dim = h.word_dim;
  cfg.comment_dim = h.comment_dim;
  cfg.n_classes = h.n_classes;
  cfg.chain_len = h.chain_len;
  cfg.max_words = h.max_words;
  cfg.vocab_size = h.vocab_size;
  cfg.seed = h.seed;
  auto dim = [&](const char* key, int fallback) {
    auto it = h.dims.find(key);
    return it == h.dims.end() ? fallback : it->second;
  };
  cfg.lstm1_hidden = dim("lstm1_hidden", cfg.lstm1_hidden);
  cfg.lstm2_hidden = dim("lstm2_hidden", cfg.lstm2_hidden);
  cfg.comment_lstm_hidden = dim("comment_lstm_hidden", cfg.comment_lstm_hidden);
  cfg.mlp_h1 = dim("mlp_h1", cfg.mlp_h1);
  cfg.mlp_h2 = dim("mlp_h2", cfg.mlp_h2);
  cfg.cnn_channels = dim("cnn_channels", cfg.cnn_channels);
  return cfg;
}

inline void save_model(const Model<float>& m, const std::string& path) {
  save_checkpoint(make_header(m.config()), m.store(), path);
}

inline Model<float> load_model(const std::string& path) {
  auto ck = load_checkpoint(path);
  Model<float> m(config_from_header(ck.header));
  restore_into(ck, m.store());
  return m;
}

}  // namespace repartee
