#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "repartee/paramstore.hpp"
#include "repartee/tensor.hpp"

namespace repartee {

template <typename T>
void check_shapes(const Mat<T>& a, const Mat<T>& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream os;
    os << what << ": shape mismatch (" << a.rows() << "x" << a.cols()
       << " vs " << b.rows() << "x" << b.cols() << ")";
    throw DataError(os.str());
  }
}

// y = xW + b, x is n x in, W is in x h, b has h entries broadcast over rows.
template <typename T>
Mat<T> affine(const Mat<T>& x, const Mat<T>& W, const Vec<T>& b) {
  if (x.cols() != W.rows() || b.size() != W.cols()) {
    std::ostringstream os;
    os << "affine: shape mismatch x=" << x.rows() << "x" << x.cols()
       << " W=" << W.rows() << "x" << W.cols() << " b=" << b.size();
    throw DataError(os.str());
  }
  Mat<T> y = x * W;
  y.rowwise() += b.transpose();
  return y;
}

template <typename T>
struct AffineGrads {
  Mat<T> dx;
  Mat<T> dW;
  Vec<T> db;
};

template <typename T>
AffineGrads<T> affine_backward(const Mat<T>& x, const Mat<T>& W,
                               const Mat<T>& dy) {
  AffineGrads<T> g;
  g.dx = dy * W.transpose();
  g.dW = x.transpose() * dy;
  g.db = dy.colwise().sum().transpose();
  return g;
}

template <typename T>
T sigmoid_scalar(T x) {
  return static_cast<T>(1) / (static_cast<T>(1) + std::exp(-x));
}

template <typename T>
Vec<T> sigmoid(const Vec<T>& x) {
  return x.unaryExpr([](T v) { return sigmoid_scalar(v); });
}

// ds given the already-computed activation s = sigmoid(x)
template <typename T>
Vec<T> sigmoid_backward(const Vec<T>& s, const Vec<T>& ds) {
  return ds.cwiseProduct(s.cwiseProduct(Vec<T>::Ones(s.size()) - s));
}

template <typename T>
Vec<T> tanh_vec(const Vec<T>& x) {
  return x.unaryExpr([](T v) { return std::tanh(v); });
}

template <typename T>
Vec<T> tanh_backward(const Vec<T>& t, const Vec<T>& dt) {
  return dt.cwiseProduct(Vec<T>::Ones(t.size()) - t.cwiseProduct(t));
}

// Softmax with an optional mask over positions. Masked scores are replaced
// by a -inf surrogate before normalization, so masked probabilities come out
// exactly zero. Throws if every position is masked.
template <typename T>
Vec<T> masked_softmax(const Vec<T>& scores,
                      const std::vector<uint8_t>* mask = nullptr) {
  const EIndex n = scores.size();
  if (mask && static_cast<EIndex>(mask->size()) != n)
    throw DataError("masked_softmax: mask length mismatch");
  T max_score = -std::numeric_limits<T>::infinity();
  int live = 0;
  for (EIndex i = 0; i < n; ++i) {
    if (mask && !(*mask)[i]) continue;
    live += 1;
    max_score = std::max(max_score, scores[i]);
  }
  if (live == 0) throw DataError("masked_softmax: all positions masked");
  Vec<T> p = Vec<T>::Zero(n);
  T denom = 0;
  for (EIndex i = 0; i < n; ++i) {
    if (mask && !(*mask)[i]) continue;
    p[i] = std::exp(scores[i] - max_score);
    denom += p[i];
  }
  p /= denom;
  return p;
}

// dscores from dL/dp at the softmax output p (mask as in forward).
template <typename T>
Vec<T> softmax_backward(const Vec<T>& p, const Vec<T>& dp,
                        const std::vector<uint8_t>* mask = nullptr) {
  T dot = 0;
  for (EIndex i = 0; i < p.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    dot += dp[i] * p[i];
  }
  Vec<T> ds = Vec<T>::Zero(p.size());
  for (EIndex i = 0; i < p.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    ds[i] = p[i] * (dp[i] - dot);
  }
  return ds;
}

constexpr double kXentClamp = 1e-12;

// loss = -ln pred[gold]. pred[gold] <= 0 (or underflowed) is clamped and
// counted through the store's clamp counter when one is supplied.
template <typename T>
T cross_entropy(const Vec<T>& pred, int gold, int64_t* clamp_counter = nullptr) {
  if (gold < 0 || gold >= pred.size())
    throw DataError("cross_entropy: gold index out of range");
  T p = pred[gold];
  if (p < static_cast<T>(kXentClamp)) {
    p = static_cast<T>(kXentClamp);
    if (clamp_counter) (*clamp_counter)++;
  }
  return -std::log(p);
}

template <typename T>
Vec<T> cross_entropy_backward(const Vec<T>& pred, int gold, T upstream = 1) {
  Vec<T> dp = Vec<T>::Zero(pred.size());
  T p = std::max(pred[gold], static_cast<T>(kXentClamp));
  dp[gold] = -upstream / p;
  return dp;
}

// Fused softmax + cross-entropy head used by the models: identical algebra to
// composing the two backwards but avoids the intermediate division.
// Returns loss; dlogits written in place, scaled by `weight`.
template <typename T>
T softmax_xent(const Vec<T>& logits, int gold, T weight, Vec<T>* dlogits,
               int64_t* clamp_counter = nullptr) {
  Vec<T> p = masked_softmax<T>(logits, nullptr);
  T loss = weight * cross_entropy<T>(p, gold, clamp_counter);
  if (dlogits) {
    *dlogits = weight * p;
    (*dlogits)[gold] -= weight;
  }
  return loss;
}

// --- finite-difference gradient checker ----------------------------------

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  EIndex worst_row = 0, worst_col = 0;
  double analytic = 0.0, numeric = 0.0;
};

// Central differences over every coordinate of every parameter in the store.
// loss_fn must recompute the loss AND refresh .grad; one clean call at the
// base point snapshots the analytic gradients before the sweep perturbs
// anything. Relative error uses a small floor so coordinates with near-zero
// gradient do not dominate with finite-difference noise.
template <typename T, typename LossFn>
GradCheckReport grad_check(ParamStore<T>& store, LossFn&& loss_fn, T eps) {
  (void)loss_fn();  // populate grads at the unperturbed point
  std::map<std::string, Mat<T>> analytic_grads;
  for (Param<T>* p : store.all()) analytic_grads[p->name] = p->grad;

  GradCheckReport rep;
  for (Param<T>* p : store.all()) {
    const Mat<T>& base_grad = analytic_grads[p->name];
    for (EIndex r = 0; r < p->rows(); ++r) {
      if (p->freeze_row0 && r == 0) continue;  // not a trainable coordinate
      for (EIndex c = 0; c < p->cols(); ++c) {
        const T saved = p->value(r, c);
        p->value(r, c) = saved + eps;
        const double f_plus = static_cast<double>(loss_fn());
        p->value(r, c) = saved - eps;
        const double f_minus = static_cast<double>(loss_fn());
        p->value(r, c) = saved;
        const double numeric = (f_plus - f_minus) / (2.0 * static_cast<double>(eps));
        const double analytic = static_cast<double>(base_grad(r, c));
        const double denom =
            std::max({std::abs(analytic), std::abs(numeric), 1e-3});
        const double rel = std::abs(analytic - numeric) / denom;
        if (rel > rep.max_rel_err) {
          rep.max_rel_err = rel;
          rep.worst_param = p->name;
          rep.worst_row = r;
          rep.worst_col = c;
          rep.analytic = analytic;
          rep.numeric = numeric;
        }
      }
    }
  }
  return rep;
}

}  // namespace repartee
