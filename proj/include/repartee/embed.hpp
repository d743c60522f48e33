#pragma once

// Unsupervised pretraining: skip-gram/negative-sampling word vectors and
// PV-DBOW comment vectors. Training is strictly sequential over the corpus
// so a fixed seed reproduces the matrices bit for bit.

#include <cstdint>
#include <string>
#include <vector>

#include "repartee/checkpoint.hpp"
#include "repartee/common.hpp"
#include "repartee/corpus.hpp"
#include "repartee/ops.hpp"
#include "repartee/tensor.hpp"

namespace repartee {

struct EmbedConfig {
  int dim = 150;        // 700 for comment vectors
  int window = 5;       // word model only
  int negatives = 5;
  int epochs = 5;
  double lr = 0.025;
  double min_lr = 1e-4;
  uint64_t seed = 1;
};

// Draws negatives from unigram^0.75 over the vocabulary (PAD excluded).
class NegativeSampler {
 public:
  NegativeSampler(const Vocab& vocab, double power = 0.75);
  int sample(Rng& rng) const;

 private:
  std::vector<double> cumulative_;  // over indices 1..V-1 (index 0 = PAD skipped)
};

// Loss and analytic gradients for one skip-gram pair with its negatives:
//   L = -log sigma(v . u_pos) - sum_k log sigma(-v . u_neg_k)
// d_out[0] pairs with pos, d_out[k] with negs[k-1]. Duplicated negative ids
// get independent entries; callers accumulate.
template <typename T>
struct SgnsGrads {
  T loss{};
  Vec<T> d_center;
  std::vector<Vec<T>> d_out;
};

template <typename T>
SgnsGrads<T> sgns_pair_grads(const Vec<T>& center, const Mat<T>& w_out, int pos,
                             const std::vector<int>& negs) {
  SgnsGrads<T> g;
  g.d_center = Vec<T>::Zero(center.size());
  g.d_out.reserve(negs.size() + 1);

  auto accumulate = [&](int row, T label) {
    Vec<T> u = w_out.row(row).transpose();
    T score = center.dot(u);
    T s = static_cast<T>(1) / (static_cast<T>(1) + std::exp(-score));
    // label 1: L += -log s;     dL/dscore = s - 1
    // label 0: L += -log(1-s);  dL/dscore = s
    T p = label > static_cast<T>(0.5) ? s : static_cast<T>(1) - s;
    g.loss -= std::log(std::max(p, static_cast<T>(kXentClamp)));
    T dscore = s - label;
    g.d_center += dscore * u;
    g.d_out.push_back(dscore * center);
  };

  accumulate(pos, static_cast<T>(1));
  for (int n : negs) accumulate(n, static_cast<T>(0));
  return g;
}

// Word vectors: |V| x dim, labels = tokens, PAD row exactly zero.
// out_context, when supplied, receives the context-side matrix — only useful
// for computing the true training loss in diagnostics and tests.
EmbeddingFile train_word_embeddings(const std::vector<Thread>& threads, const Vocab& vocab,
                                    const EmbedConfig& cfg, MatF* out_context = nullptr);

// Comment vectors: one row per comment in corpus order, labels =
// "thread_id/comment_id". Comments with no tokens keep their (finite) init.
EmbeddingFile train_comment_embeddings(const std::vector<Thread>& threads,
                                       const Vocab& vocab, const EmbedConfig& cfg);

// Row lookup helper for comment vectors.
int find_label_row(const EmbeddingFile& e, const std::string& label);

inline std::string comment_label(const std::string& thread_id, const std::string& comment_id) {
  return thread_id + "/" + comment_id;
}

}  // namespace repartee
