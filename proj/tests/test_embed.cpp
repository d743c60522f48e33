#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "repartee/checkpoint.hpp"
#include "repartee/common.hpp"
#include "repartee/corpus.hpp"
#include "repartee/embed.hpp"

using namespace repartee;

namespace {

// Corpus where p and q always co-occur and r never appears near p.
std::vector<Thread> cooccurrence_corpus(Vocab* vocab_out) {
  std::ostringstream jsonl;
  for (int t = 0; t < 30; ++t) {
    jsonl << R"({"id":"t)" << t << R"(","title":"","posts":[)"
          << R"({"id":"a","in_reply_to":null,"body":"p q p q p q"},)"
          << R"({"id":"b","in_reply_to":"a","body":"r s r s r s"}]})" << "\n";
  }
  auto threads = parse_threads_text(jsonl.str(), nullptr);
  Vocab v = build_vocab(threads, 1);
  tokenize_threads(threads, v);
  *vocab_out = std::move(v);
  return threads;
}

double cosine(const VecF& a, const VecF& b) {
  double na = a.norm(), nb = b.norm();
  if (na == 0 || nb == 0) return 0;
  return a.dot(b) / (na * nb);
}

}  // namespace

TEST_CASE("sgns pair gradients match central finite differences") {
  Rng rng(31);
  const int dim = 8, vocab = 12;
  MatD w_out(vocab, dim);
  VecD center(dim);
  for (EIndex i = 0; i < w_out.size(); ++i) w_out.data()[i] = rng.uniform(-0.7, 0.7);
  for (EIndex i = 0; i < dim; ++i) center(i) = rng.uniform(-0.7, 0.7);
  int pos = 3;
  std::vector<int> negs = {5, 7, 7, 9};  // duplicate negative on purpose

  auto loss_of = [&](const VecD& c, const MatD& out) {
    return sgns_pair_grads<double>(c, out, pos, negs).loss;
  };
  auto g = sgns_pair_grads<double>(center, w_out, pos, negs);

  const double eps = 1e-6;
  double worst = 0;
  for (int i = 0; i < dim; ++i) {
    VecD cp = center, cm = center;
    cp(i) += eps;
    cm(i) -= eps;
    double num = (loss_of(cp, w_out) - loss_of(cm, w_out)) / (2 * eps);
    double rel = std::abs(g.d_center(i) - num) /
                 std::max({std::abs(g.d_center(i)), std::abs(num), 1e-3});
    worst = std::max(worst, rel);
  }
  // Output rows: accumulate duplicates before comparing, since the loss sums
  // both occurrences of row 7.
  std::vector<int> rows = {pos, 5, 7, 9};
  for (int row : rows) {
    VecD analytic = VecD::Zero(dim);
    if (row == pos) analytic += g.d_out[0];
    for (size_t k = 0; k < negs.size(); ++k)
      if (negs[k] == row) analytic += g.d_out[k + 1];
    for (int i = 0; i < dim; ++i) {
      MatD op = w_out, om = w_out;
      op(row, i) += eps;
      om(row, i) -= eps;
      double num = (loss_of(center, op) - loss_of(center, om)) / (2 * eps);
      double rel = std::abs(analytic(i) - num) /
                   std::max({std::abs(analytic(i)), std::abs(num), 1e-3});
      worst = std::max(worst, rel);
    }
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("negative sampler: skips pad, respects frequency mass") {
  Vocab v;
  v.index_to_token = {"<pad>", "<unk>", "common", "rare"};
  v.counts = {0, 1, 1000, 10};
  v.token_to_index = {{"<pad>", 0}, {"<unk>", 1}, {"common", 2}, {"rare", 3}};
  NegativeSampler sampler(v);
  Rng rng(4);
  int hits_common = 0, hits_rare = 0;
  for (int i = 0; i < 20000; ++i) {
    int s = sampler.sample(rng);
    CHECK(s != kPadIndex);
    CHECK(s < 4);
    if (s == 2) ++hits_common;
    if (s == 3) ++hits_rare;
  }
  // 1000^.75 : 10^.75 is about 31.6 : 1 — just require a decisive gap.
  CHECK(hits_common > 10 * hits_rare);
}

TEST_CASE("word embeddings: shape, pad row zero, determinism") {
  Vocab v;
  auto threads = cooccurrence_corpus(&v);
  EmbedConfig cfg;
  cfg.dim = 16;
  cfg.epochs = 2;
  cfg.seed = 99;

  auto e1 = train_word_embeddings(threads, v, cfg);
  CHECK(e1.vectors.rows() == v.size());
  CHECK(e1.vectors.cols() == 16);
  CHECK(e1.labels.size() == static_cast<size_t>(v.size()));
  CHECK(e1.vectors.row(0).cwiseAbs().maxCoeff() == 0.0f);  // PAD frozen

  auto e2 = train_word_embeddings(threads, v, cfg);
  CHECK((e1.vectors - e2.vectors).cwiseAbs().maxCoeff() == 0.0f);  // bitwise

  EmbedConfig other = cfg;
  other.seed = 100;
  auto e3 = train_word_embeddings(threads, v, other);
  CHECK((e1.vectors - e3.vectors).cwiseAbs().maxCoeff() > 0.0f);
}

TEST_CASE("word embeddings: co-occurring tokens end up closer") {
  Vocab v;
  auto threads = cooccurrence_corpus(&v);
  EmbedConfig cfg;
  cfg.dim = 24;
  cfg.epochs = 5;
  cfg.seed = 7;
  auto e = train_word_embeddings(threads, v, cfg);

  VecF p = e.vectors.row(v.lookup("p")).transpose();
  VecF q = e.vectors.row(v.lookup("q")).transpose();
  VecF r = e.vectors.row(v.lookup("r")).transpose();
  CHECK(cosine(p, q) > cosine(p, r));
}

TEST_CASE("word embeddings: frozen-minibatch loss decreases with epochs") {
  Vocab v;
  auto threads = cooccurrence_corpus(&v);

  // Frozen evaluation set: every (center, context) pair with fixed negatives.
  std::vector<std::tuple<int, int, std::vector<int>>> pairs;
  NegativeSampler sampler(v);
  Rng neg_rng(1234);
  for (const auto& t : threads)
    for (const auto& c : t.comments)
      for (size_t i = 0; i < c.tokens.size(); ++i)
        for (size_t j = i > 2 ? i - 2 : 0; j <= std::min(c.tokens.size() - 1, i + 2); ++j) {
          if (i == j) continue;
          std::vector<int> negs;
          for (int k = 0; k < 3; ++k) negs.push_back(sampler.sample(neg_rng));
          pairs.emplace_back(c.tokens[i], c.tokens[j], negs);
        }

  auto mean_loss = [&](const MatF& vecs, const MatF& out) {
    double total = 0;
    for (auto& [c, p, negs] : pairs) {
      VecF center = vecs.row(c).transpose();
      total += sgns_pair_grads<float>(center, out, p, negs).loss;
    }
    return total / pairs.size();
  };

  // Same seed, bigger epoch budget: more training must drive the true loss
  // on the frozen pairs down.
  EmbedConfig cfg;
  cfg.dim = 16;
  cfg.seed = 5;
  cfg.epochs = 1;
  MatF ctx1, ctx5;
  auto e1 = train_word_embeddings(threads, v, cfg, &ctx1);
  cfg.epochs = 5;
  auto e5 = train_word_embeddings(threads, v, cfg, &ctx5);

  double l1 = mean_loss(e1.vectors, ctx1);
  double l5 = mean_loss(e5.vectors, ctx5);
  CHECK(l5 < l1);
}

TEST_CASE("comment embeddings: one finite vector per comment, empty ok") {
  std::string jsonl =
      R"({"id":"t","title":"","posts":[)"
      R"({"id":"a","in_reply_to":null,"body":"alpha beta gamma alpha"},)"
      R"({"id":"b","in_reply_to":"a","body":""},)"
      R"({"id":"c","in_reply_to":"a","body":"beta beta gamma"}]}
)";
  auto threads = parse_threads_text(jsonl, nullptr);
  Vocab v = build_vocab(threads, 1);
  tokenize_threads(threads, v);

  EmbedConfig cfg;
  cfg.dim = 12;
  cfg.epochs = 3;
  cfg.seed = 11;
  auto e = train_comment_embeddings(threads, v, cfg);
  REQUIRE(e.vectors.rows() == 3);
  CHECK(e.vectors.cols() == 12);
  CHECK(e.labels[0] == "t/a");
  CHECK(e.labels[1] == "t/b");
  for (EIndex r = 0; r < 3; ++r)
    for (EIndex c = 0; c < 12; ++c) CHECK(std::isfinite(e.vectors(r, c)));
  CHECK(find_label_row(e, "t/c") == 2);
  CHECK(find_label_row(e, "t/zzz") == -1);

  auto e2 = train_comment_embeddings(threads, v, cfg);
  CHECK((e.vectors - e2.vectors).cwiseAbs().maxCoeff() == 0.0f);
}

TEST_CASE("embedding container: bit-exact round-trip") {
  Vocab v;
  auto threads = cooccurrence_corpus(&v);
  EmbedConfig cfg;
  cfg.dim = 8;
  cfg.epochs = 1;
  cfg.seed = 3;
  auto e = train_word_embeddings(threads, v, cfg);

  auto dir = std::filesystem::temp_directory_path() / "repartee_embed_test";
  std::filesystem::create_directories(dir);
  auto path = (dir / "words.remb").string();
  save_embeddings(e, path);
  auto back = load_embeddings(path);
  REQUIRE(back.vectors.rows() == e.vectors.rows());
  REQUIRE(back.vectors.cols() == e.vectors.cols());
  CHECK(std::memcmp(back.vectors.data(), e.vectors.data(),
                    sizeof(float) * e.vectors.size()) == 0);
  CHECK(back.labels == e.labels);

  CHECK_THROWS_AS(load_embeddings((dir / "missing.remb").string()), DataError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("embed: corpus smaller than a window is fatal") {
  std::string jsonl =
      R"({"id":"t","title":"","posts":[{"id":"a","in_reply_to":null,"body":"lone"}]}
)";
  auto threads = parse_threads_text(jsonl, nullptr);
  Vocab v = build_vocab(threads, 1);
  tokenize_threads(threads, v);
  EmbedConfig cfg;
  cfg.dim = 4;
  CHECK_THROWS_AS(train_word_embeddings(threads, v, cfg), DataError);
}
