#pragma once

// Composable model layers: LSTM cell/sequence, trainable embedding lookup,
// tf-idf attention targets, word-relevance distribution and its application,
// and the n-gram convolutional comment encoder.
//
// All layers are pure functions of (params, inputs) returning caches that the
// matching *_backward consumes. Gradients accumulate into Param::grad so a
// chain of calls composes like any reverse-mode tape.

#include <array>
#include <string>
#include <vector>

#include "repartee/common.hpp"
#include "repartee/corpus.hpp"
#include "repartee/ops.hpp"
#include "repartee/paramstore.hpp"
#include "repartee/tensor.hpp"

namespace repartee {

// ---------------------------------------------------------------------------
// LSTM

template <typename T>
struct LstmParams {
  Param<T>*W_xi, *W_hi, *b_i;
  Param<T>*W_xf, *W_hf, *b_f;
  Param<T>*W_xc, *W_hc, *b_c;
  Param<T>*W_xo, *W_ho, *b_o;

  EIndex in_dim() const { return W_xi->rows(); }
  EIndex hidden() const { return W_xi->cols(); }
};

template <typename T>
LstmParams<T> add_lstm(ParamStore<T>& store, const std::string& prefix, EIndex in_dim,
                       EIndex hidden) {
  LstmParams<T> p;
  p.W_xi = &store.add(prefix + ".W_xi", in_dim, hidden);
  p.W_hi = &store.add(prefix + ".W_hi", hidden, hidden);
  p.b_i = &store.add(prefix + ".b_i", 1, hidden);
  p.W_xf = &store.add(prefix + ".W_xf", in_dim, hidden);
  p.W_hf = &store.add(prefix + ".W_hf", hidden, hidden);
  p.b_f = &store.add(prefix + ".b_f", 1, hidden);
  p.W_xc = &store.add(prefix + ".W_xc", in_dim, hidden);
  p.W_hc = &store.add(prefix + ".W_hc", hidden, hidden);
  p.b_c = &store.add(prefix + ".b_c", 1, hidden);
  p.W_xo = &store.add(prefix + ".W_xo", in_dim, hidden);
  p.W_ho = &store.add(prefix + ".W_ho", hidden, hidden);
  p.b_o = &store.add(prefix + ".b_o", 1, hidden);
  return p;
}

template <typename T>
LstmParams<T> bind_lstm(ParamStore<T>& store, const std::string& prefix) {
  LstmParams<T> p;
  p.W_xi = &store.at(prefix + ".W_xi");
  p.W_hi = &store.at(prefix + ".W_hi");
  p.b_i = &store.at(prefix + ".b_i");
  p.W_xf = &store.at(prefix + ".W_xf");
  p.W_hf = &store.at(prefix + ".W_hf");
  p.b_f = &store.at(prefix + ".b_f");
  p.W_xc = &store.at(prefix + ".W_xc");
  p.W_hc = &store.at(prefix + ".W_hc");
  p.b_c = &store.at(prefix + ".b_c");
  p.W_xo = &store.at(prefix + ".W_xo");
  p.W_ho = &store.at(prefix + ".W_ho");
  p.b_o = &store.at(prefix + ".b_o");
  return p;
}

// Recurrent init: small uniform weights, zero biases, forget-gate bias +1 so
// early training keeps the cell channel open.
template <typename T>
void init_lstm(LstmParams<T>& p, Rng& rng, double scale = 0.08) {
  for (Param<T>* w : {p.W_xi, p.W_hi, p.W_xf, p.W_hf, p.W_xc, p.W_hc, p.W_xo, p.W_ho})
    init_uniform(*w, rng, scale);
  for (Param<T>* b : {p.b_i, p.b_c, p.b_o}) b->value.setZero();
  p.b_f->value.setOnes();
}

template <typename T>
struct LstmState {
  Vec<T> h, c;
  static LstmState zero(EIndex hidden) {
    return {Vec<T>::Zero(hidden), Vec<T>::Zero(hidden)};
  }
};

template <typename T>
struct LstmStepCache {
  Vec<T> x, h_prev, c_prev;
  Vec<T> i, f, g, o, c, tanh_c;
};

// One cell update:
//   i = sigmoid(xW_xi + h W_hi + b_i)        f = sigmoid(xW_xf + h W_hf + b_f)
//   c = f*c_prev + i*tanh(xW_xc + h W_hc + b_c)
//   o = sigmoid(xW_xo + h W_ho + b_o)        h' = o * tanh(c)
template <typename T>
LstmState<T> lstm_step(const LstmParams<T>& p, const Vec<T>& x, const LstmState<T>& prev,
                       LstmStepCache<T>* cache = nullptr) {
  if (x.size() != p.in_dim())
    throw DataError("lstm_step: input dim " + std::to_string(x.size()) + " != " +
                    std::to_string(p.in_dim()));
  if (prev.h.size() != p.hidden() || prev.c.size() != p.hidden())
    throw DataError("lstm_step: state dim mismatch");

  auto gate = [&](const Param<T>* Wx, const Param<T>* Wh, const Param<T>* b) -> Vec<T> {
    return Wx->value.transpose() * x + Wh->value.transpose() * prev.h +
           b->value.row(0).transpose();
  };
  Vec<T> i = sigmoid<T>(gate(p.W_xi, p.W_hi, p.b_i));
  Vec<T> f = sigmoid<T>(gate(p.W_xf, p.W_hf, p.b_f));
  Vec<T> g = tanh_vec<T>(gate(p.W_xc, p.W_hc, p.b_c));
  Vec<T> o = sigmoid<T>(gate(p.W_xo, p.W_ho, p.b_o));

  LstmState<T> next;
  next.c = f.cwiseProduct(prev.c) + i.cwiseProduct(g);
  Vec<T> tc = tanh_vec<T>(next.c);
  next.h = o.cwiseProduct(tc);

  if (cache) {
    cache->x = x;
    cache->h_prev = prev.h;
    cache->c_prev = prev.c;
    cache->i = i;
    cache->f = f;
    cache->g = g;
    cache->o = o;
    cache->c = next.c;
    cache->tanh_c = tc;
  }
  return next;
}

template <typename T>
struct LstmStepGrads {
  Vec<T> dx, dh_prev, dc_prev;
};

// Reverse of lstm_step. dh/dc are dL w.r.t. this step's outputs; parameter
// gradients accumulate into the store.
template <typename T>
LstmStepGrads<T> lstm_step_backward(LstmParams<T>& p, const LstmStepCache<T>& cc,
                                    const Vec<T>& dh, const Vec<T>& dc_in) {
  const Vec<T> ones = Vec<T>::Ones(cc.i.size());

  Vec<T> do_ = dh.cwiseProduct(cc.tanh_c);
  Vec<T> dc = dc_in + dh.cwiseProduct(cc.o).cwiseProduct(ones - cc.tanh_c.cwiseProduct(cc.tanh_c));

  Vec<T> df = dc.cwiseProduct(cc.c_prev);
  Vec<T> di = dc.cwiseProduct(cc.g);
  Vec<T> dg = dc.cwiseProduct(cc.i);

  Vec<T> dpre_i = di.cwiseProduct(cc.i).cwiseProduct(ones - cc.i);
  Vec<T> dpre_f = df.cwiseProduct(cc.f).cwiseProduct(ones - cc.f);
  Vec<T> dpre_g = dg.cwiseProduct(ones - cc.g.cwiseProduct(cc.g));
  Vec<T> dpre_o = do_.cwiseProduct(cc.o).cwiseProduct(ones - cc.o);

  LstmStepGrads<T> out;
  out.dc_prev = dc.cwiseProduct(cc.f);
  out.dx = p.W_xi->value * dpre_i + p.W_xf->value * dpre_f + p.W_xc->value * dpre_g +
           p.W_xo->value * dpre_o;
  out.dh_prev = p.W_hi->value * dpre_i + p.W_hf->value * dpre_f + p.W_hc->value * dpre_g +
                p.W_ho->value * dpre_o;

  p.W_xi->grad += cc.x * dpre_i.transpose();
  p.W_hi->grad += cc.h_prev * dpre_i.transpose();
  p.b_i->grad += dpre_i.transpose();
  p.W_xf->grad += cc.x * dpre_f.transpose();
  p.W_hf->grad += cc.h_prev * dpre_f.transpose();
  p.b_f->grad += dpre_f.transpose();
  p.W_xc->grad += cc.x * dpre_g.transpose();
  p.W_hc->grad += cc.h_prev * dpre_g.transpose();
  p.b_c->grad += dpre_g.transpose();
  p.W_xo->grad += cc.x * dpre_o.transpose();
  p.W_ho->grad += cc.h_prev * dpre_o.transpose();
  p.b_o->grad += dpre_o.transpose();
  return out;
}

template <typename T>
struct LstmForwardCache {
  std::vector<LstmStepCache<T>> steps;  // aligned with input; masked steps unused
  std::vector<uint8_t> mask;            // 1 = real position
  std::vector<Vec<T>> outputs;          // h per position; zeros at masked
  LstmState<T> final_state;             // after the last unmasked step
};

// Runs the cell over a sequence. Masked positions do not advance state and
// emit zero vectors, so appending padding never changes anything upstream.
template <typename T>
LstmForwardCache<T> lstm_forward(const LstmParams<T>& p, const std::vector<Vec<T>>& seq,
                                 const std::vector<uint8_t>* mask = nullptr) {
  if (seq.empty()) throw DataError("lstm_forward: empty sequence");
  if (mask && mask->size() != seq.size())
    throw DataError("lstm_forward: mask length mismatch");

  LstmForwardCache<T> cache;
  cache.steps.resize(seq.size());
  cache.mask.assign(seq.size(), 1);
  if (mask) cache.mask = *mask;
  cache.outputs.resize(seq.size());

  LstmState<T> state = LstmState<T>::zero(p.hidden());
  for (size_t t = 0; t < seq.size(); ++t) {
    if (!cache.mask[t]) {
      cache.outputs[t] = Vec<T>::Zero(p.hidden());
      continue;
    }
    state = lstm_step(p, seq[t], state, &cache.steps[t]);
    cache.outputs[t] = state.h;
  }
  cache.final_state = state;
  return cache;
}

// Reverse pass. douts: upstream per position (nullptr if only the final state
// is consumed); dfinal_h: upstream on the final hidden state (nullptr if only
// sequential outputs are consumed). Returns d(seq); parameter gradients
// accumulate.
template <typename T>
std::vector<Vec<T>> lstm_backward(LstmParams<T>& p, const LstmForwardCache<T>& cache,
                                  const std::vector<Vec<T>>* douts,
                                  const Vec<T>* dfinal_h) {
  const size_t n = cache.steps.size();
  std::vector<Vec<T>> dseq(n, Vec<T>::Zero(p.in_dim()));

  // The final state is the last unmasked step's state, and masked steps pass
  // state through untouched, so the carried (dh, dc) initialized from dfinal
  // arrives at the right step.
  Vec<T> dh = dfinal_h ? *dfinal_h : Vec<T>::Zero(p.hidden());
  Vec<T> dc = Vec<T>::Zero(p.hidden());

  for (size_t ti = n; ti-- > 0;) {
    if (!cache.mask[ti]) continue;
    Vec<T> dh_total = dh;
    if (douts && (*douts)[ti].size() > 0) dh_total += (*douts)[ti];
    auto g = lstm_step_backward(p, cache.steps[ti], dh_total, dc);
    dseq[ti] = g.dx;
    dh = g.dh_prev;
    dc = g.dc_prev;
  }
  return dseq;
}

// ---------------------------------------------------------------------------
// Embedding lookup (trainable copy of the pretrained matrix)

template <typename T>
std::vector<Vec<T>> embedding_lookup(const Param<T>& emb, const std::vector<int>& ids) {
  std::vector<Vec<T>> out;
  out.reserve(ids.size());
  for (int id : ids) {
    if (id < 0 || id >= emb.rows())
      throw DataError("embedding_lookup: id " + std::to_string(id) + " out of range");
    out.push_back(emb.value.row(id).transpose());
  }
  return out;
}

// Scatter-add: duplicate ids accumulate; the frozen PAD row is skipped so its
// gradient stays exactly zero.
template <typename T>
void embedding_lookup_backward(Param<T>& emb, const std::vector<int>& ids,
                               const std::vector<Vec<T>>& dvecs) {
  if (ids.size() != dvecs.size())
    throw DataError("embedding_lookup_backward: length mismatch");
  for (size_t k = 0; k < ids.size(); ++k) {
    if (emb.freeze_row0 && ids[k] == 0) continue;
    if (dvecs[k].size() == 0) continue;  // no upstream at this position
    emb.grad.row(ids[k]) += dvecs[k].transpose();
  }
}

// ---------------------------------------------------------------------------
// Attention targets (static tf-idf summaries of first and parent comments)

template <typename T>
struct AttentionTargets {
  Vec<T> first_vec;   // thread-idf weighted mean over the first comment
  Vec<T> parent_vec;  // comment-idf weighted mean over the parent comment
};

// Weighted mean of static embedding rows: sum_i emb[sel_i] * tf(sel_i)*idf(sel_i)
// divided by the number of selected positions. tf counts occurrences in the
// full source token list.
template <typename T>
Vec<T> tfidf_weighted_mean(const std::vector<int>& selected,
                           const std::vector<int>& source_tokens, const Mat<T>& static_emb,
                           const IdfTable& idf) {
  Vec<T> acc = Vec<T>::Zero(static_emb.cols());
  if (selected.empty()) return acc;
  std::unordered_map<int, int> tf;
  for (int id : source_tokens) ++tf[id];
  for (int id : selected) {
    T weight = static_cast<T>(tf[id]) * static_cast<T>(idf.lookup(id));
    acc += weight * static_emb.row(id).transpose();
  }
  return acc / static_cast<T>(selected.size());
}

// first/parent may be null (the chain's first element has neither): the
// corresponding target is the zero vector. No gradient flows through targets.
template <typename T>
AttentionTargets<T> attention_targets(const Comment* first, const Comment* parent,
                                      const Mat<T>& static_emb, const IdfTable& thread_idf,
                                      const IdfTable& comment_idf, const Vocab& vocab,
                                      SelectorKind selector) {
  if (thread_idf.kind != IdfKind::ThreadIdf || comment_idf.kind != IdfKind::CommentIdf)
    throw DataError("attention_targets: idf tables passed in the wrong order");
  AttentionTargets<T> t;
  t.first_vec = Vec<T>::Zero(static_emb.cols());
  t.parent_vec = Vec<T>::Zero(static_emb.cols());
  if (first) {
    auto sel = select_content_words(*first, vocab, selector);
    t.first_vec = tfidf_weighted_mean<T>(sel, first->tokens, static_emb, thread_idf);
  }
  if (parent) {
    auto sel = select_content_words(*parent, vocab, selector);
    t.parent_vec = tfidf_weighted_mean<T>(sel, parent->tokens, static_emb, comment_idf);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Word-relevance distribution

template <typename T>
struct RelevanceCache {
  std::vector<Vec<T>> word_vecs;  // x_i per position (kept for K's gradient)
  AttentionTargets<T> targets;
  Vec<T> scores;  // s_i, zeros at masked positions
  Vec<T> p;       // masked softmax of scores; masked entries exactly 0
  std::vector<uint8_t> mask;
};

// s_i = K.row(i) . concat(x_i, W_f', W_p') for each unpadded position, then a
// masked softmax over positions. K has one row per position up to the bucket
// cap, columns span the augmented width 3V.
template <typename T>
RelevanceCache<T> relevance_distribution(const Param<T>& K,
                                         const std::vector<Vec<T>>& word_vecs,
                                         const AttentionTargets<T>& targets,
                                         const std::vector<uint8_t>& mask) {
  const EIndex n = static_cast<EIndex>(word_vecs.size());
  if (n > K.rows())
    throw DataError("relevance: sequence length " + std::to_string(n) +
                    " exceeds attention row capacity " + std::to_string(K.rows()));
  if (mask.size() != word_vecs.size())
    throw DataError("relevance: mask length mismatch");
  const EIndex v = targets.first_vec.size();
  if (K.cols() != 3 * v) throw DataError("relevance: K width is not 3x the word dim");

  RelevanceCache<T> cache;
  cache.word_vecs = word_vecs;
  cache.targets = targets;
  cache.mask = mask;
  cache.scores = Vec<T>::Zero(n);
  for (EIndex i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    if (word_vecs[i].size() != v) throw DataError("relevance: word vector dim mismatch");
    const auto row = K.value.row(i);
    cache.scores[i] = row.segment(0, v).dot(word_vecs[i]) +
                      row.segment(v, v).dot(targets.first_vec) +
                      row.segment(2 * v, v).dot(targets.parent_vec);
  }
  cache.p = masked_softmax<T>(cache.scores, &cache.mask);
  return cache;
}

// dp: upstream on the distribution. Accumulates into K.grad; returns
// d(word_vecs). Target segments of K still get gradient (they scaled real
// inputs); the targets themselves are static by construction.
template <typename T>
std::vector<Vec<T>> relevance_backward(Param<T>& K, const RelevanceCache<T>& cache,
                                       const Vec<T>& dp) {
  const EIndex n = cache.scores.size();
  const EIndex v = cache.targets.first_vec.size();
  Vec<T> ds = softmax_backward<T>(cache.p, dp, &cache.mask);

  std::vector<Vec<T>> dx(n);
  for (EIndex i = 0; i < n; ++i) {
    if (!cache.mask[i]) {
      dx[i] = Vec<T>::Zero(v);
      continue;
    }
    K.grad.row(i).segment(0, v) += ds[i] * cache.word_vecs[i].transpose();
    K.grad.row(i).segment(v, v) += ds[i] * cache.targets.first_vec.transpose();
    K.grad.row(i).segment(2 * v, v) += ds[i] * cache.targets.parent_vec.transpose();
    dx[i] = ds[i] * K.value.row(i).segment(0, v).transpose();
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Relevance application: W_rel[i] = p_i * W'[i]

template <typename T>
std::vector<Vec<T>> apply_relevance(const Vec<T>& p, const std::vector<Vec<T>>& seq) {
  if (static_cast<size_t>(p.size()) != seq.size())
    throw DataError("apply_relevance: length mismatch");
  std::vector<Vec<T>> out(seq.size());
  for (size_t i = 0; i < seq.size(); ++i) out[i] = p[static_cast<EIndex>(i)] * seq[i];
  return out;
}

template <typename T>
struct ApplyRelevanceGrads {
  std::vector<Vec<T>> dseq;
  Vec<T> dp;
};

template <typename T>
ApplyRelevanceGrads<T> apply_relevance_backward(const Vec<T>& p,
                                                const std::vector<Vec<T>>& seq,
                                                const std::vector<Vec<T>>& douts) {
  if (douts.size() != seq.size()) throw DataError("apply_relevance_backward: length mismatch");
  ApplyRelevanceGrads<T> g;
  g.dseq.resize(seq.size());
  g.dp = Vec<T>::Zero(p.size());
  for (size_t i = 0; i < seq.size(); ++i) {
    EIndex ix = static_cast<EIndex>(i);
    if (douts[i].size() == 0) {
      g.dseq[i] = Vec<T>::Zero(seq[i].size());
      continue;
    }
    g.dseq[i] = p[ix] * douts[i];
    g.dp[ix] = douts[i].dot(seq[i]);
  }
  return g;
}

// ---------------------------------------------------------------------------
// n-gram convolutional encoder

enum class ConvActivation { Tanh, Identity };

constexpr std::array<int, 3> kConvSizes = {2, 3, 4};

template <typename T>
struct ConvParams {
  std::array<Param<T>*, 3> kernel;  // (k * in_dim) x channels, k in {2,3,4}
  std::array<Param<T>*, 3> bias;    // 1 x channels

  EIndex in_dim() const { return kernel[0]->rows() / 2; }
  EIndex channels() const { return kernel[0]->cols(); }
};

template <typename T>
ConvParams<T> add_conv(ParamStore<T>& store, const std::string& prefix, EIndex in_dim,
                       EIndex channels) {
  ConvParams<T> p;
  for (size_t s = 0; s < kConvSizes.size(); ++s) {
    std::string tag = prefix + ".k" + std::to_string(kConvSizes[s]);
    p.kernel[s] = &store.add(tag + ".kernel", kConvSizes[s] * in_dim, channels);
    p.bias[s] = &store.add(tag + ".bias", 1, channels);
  }
  return p;
}

template <typename T>
ConvParams<T> bind_conv(ParamStore<T>& store, const std::string& prefix) {
  ConvParams<T> p;
  for (size_t s = 0; s < kConvSizes.size(); ++s) {
    std::string tag = prefix + ".k" + std::to_string(kConvSizes[s]);
    p.kernel[s] = &store.at(tag + ".kernel");
    p.bias[s] = &store.at(tag + ".bias");
  }
  return p;
}

template <typename T>
void init_conv(ConvParams<T>& p, Rng& rng) {
  for (size_t s = 0; s < kConvSizes.size(); ++s) {
    init_glorot(*p.kernel[s], rng);
    p.bias[s]->value.setZero();
  }
}

// Single filter size, exposed for hand-value tests: valid convolution of
// width-k windows, activation, average pool over positions.
// kernel is (k*in_dim) x channels; seq length must be >= k.
template <typename T>
Vec<T> conv_single_size(const Mat<T>& kernel, const Vec<T>& bias, int k,
                        const std::vector<Vec<T>>& seq, ConvActivation act,
                        Mat<T>* pre_out = nullptr, Mat<T>* act_out = nullptr) {
  const EIndex in_dim = kernel.rows() / k;
  const EIndex channels = kernel.cols();
  const EIndex n_pos = static_cast<EIndex>(seq.size()) - k + 1;
  if (n_pos < 1) throw DataError("conv: sequence shorter than filter");

  Mat<T> pre(n_pos, channels);
  for (EIndex t = 0; t < n_pos; ++t) {
    Vec<T> window(k * in_dim);
    for (int j = 0; j < k; ++j) window.segment(j * in_dim, in_dim) = seq[t + j];
    pre.row(t) = (kernel.transpose() * window + bias).transpose();
  }
  Mat<T> activated = act == ConvActivation::Tanh
                         ? pre.unaryExpr([](T x) { return std::tanh(x); }).eval()
                         : pre;
  if (pre_out) *pre_out = pre;
  if (act_out) *act_out = activated;
  return activated.colwise().mean().transpose();
}

template <typename T>
struct ConvCache {
  std::vector<Vec<T>> padded;  // input extended to the minimum length
  std::array<Mat<T>, 3> act;   // per size: positions x channels
  ConvActivation activation = ConvActivation::Tanh;
  size_t orig_len = 0;
};

// Parallel convolutions of sizes 2/3/4, each tanh + average-pooled to
// `channels` values, concatenated in fixed order -> 3*channels. Inputs
// shorter than the largest filter are zero-padded up to it; padded windows
// then contribute tanh(bias) to the pools, which is the documented
// behaviour for padded comments too (padding carries zero vectors).
template <typename T>
Vec<T> conv_ngram_forward(const ConvParams<T>& p, const std::vector<Vec<T>>& seq,
                          ConvCache<T>* cache = nullptr,
                          ConvActivation act = ConvActivation::Tanh) {
  if (seq.empty()) throw DataError("conv: empty sequence");
  const EIndex in_dim = p.in_dim();
  std::vector<Vec<T>> padded = seq;
  while (padded.size() < static_cast<size_t>(kConvSizes.back()))
    padded.push_back(Vec<T>::Zero(in_dim));

  Vec<T> out(3 * p.channels());
  std::array<Mat<T>, 3> acts;
  for (size_t s = 0; s < kConvSizes.size(); ++s) {
    Vec<T> bias = p.bias[s]->value.row(0).transpose();
    out.segment(s * p.channels(), p.channels()) = conv_single_size<T>(
        p.kernel[s]->value, bias, kConvSizes[s], padded, act, nullptr, &acts[s]);
  }
  if (cache) {
    cache->padded = std::move(padded);
    cache->act = std::move(acts);
    cache->activation = act;
    cache->orig_len = seq.size();
  }
  return out;
}

// Returns d(seq) for the ORIGINAL positions; gradient to appended padding is
// discarded (those vectors are constants).
template <typename T>
std::vector<Vec<T>> conv_ngram_backward(ConvParams<T>& p, const ConvCache<T>& cache,
                                        const Vec<T>& dout) {
  const EIndex in_dim = p.in_dim();
  const EIndex channels = p.channels();
  if (dout.size() != 3 * channels) throw DataError("conv backward: upstream dim mismatch");

  std::vector<Vec<T>> dpadded(cache.padded.size(), Vec<T>::Zero(in_dim));
  for (size_t s = 0; s < kConvSizes.size(); ++s) {
    const int k = kConvSizes[s];
    const Mat<T>& act = cache.act[s];
    const EIndex n_pos = act.rows();
    Vec<T> dpool = dout.segment(s * channels, channels);

    for (EIndex t = 0; t < n_pos; ++t) {
      // average pool: each position receives dpool / n_pos
      Vec<T> dact = dpool / static_cast<T>(n_pos);
      Vec<T> dpre;
      if (cache.activation == ConvActivation::Tanh) {
        Vec<T> a = act.row(t).transpose();
        dpre = dact.cwiseProduct(Vec<T>::Ones(channels) - a.cwiseProduct(a));
      } else {
        dpre = dact;
      }
      Vec<T> window(k * in_dim);
      for (int j = 0; j < k; ++j) window.segment(j * in_dim, in_dim) = cache.padded[t + j];
      p.kernel[s]->grad += window * dpre.transpose();
      p.bias[s]->grad += dpre.transpose();
      Vec<T> dwindow = p.kernel[s]->value * dpre;
      for (int j = 0; j < k; ++j)
        dpadded[t + j] += dwindow.segment(j * in_dim, in_dim);
    }
  }
  dpadded.resize(cache.orig_len);
  return dpadded;
}

}  // namespace repartee
