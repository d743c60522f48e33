#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "repartee/common.hpp"
#include "repartee/tensor.hpp"

namespace repartee {

// One named trainable tensor with its gradient accumulator and Adam state.
template <typename T>
struct Param {
  std::string name;
  Mat<T> value;
  Mat<T> grad;
  Mat<T> adam_m;
  Mat<T> adam_v;
  bool freeze_row0 = false;  // PAD row of an embedding table stays zero

  EIndex rows() const { return value.rows(); }
  EIndex cols() const { return value.cols(); }
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Named map of parameters plus optimizer state. Single writer; map nodes are
// stable so layers may hold Param* across inserts.
template <typename T>
class ParamStore {
 public:
  Param<T>& add(const std::string& name, EIndex rows, EIndex cols) {
    if (params_.count(name) > 0)
      throw DataError("duplicate parameter name: " + name);
    auto p = std::make_unique<Param<T>>();
    p->name = name;
    p->value = Mat<T>::Zero(rows, cols);
    p->grad = Mat<T>::Zero(rows, cols);
    Param<T>* raw = p.get();
    params_[name] = std::move(p);
    return *raw;
  }

  Param<T>* find(const std::string& name) {
    auto it = params_.find(name);
    return it == params_.end() ? nullptr : it->second.get();
  }

  const Param<T>* find(const std::string& name) const {
    auto it = params_.find(name);
    return it == params_.end() ? nullptr : it->second.get();
  }

  Param<T>& at(const std::string& name) {
    Param<T>* p = find(name);
    if (!p) throw DataError("no such parameter: " + name);
    return *p;
  }

  // Name-sorted, so any reduction or serialization order is deterministic.
  std::vector<Param<T>*> all() {
    std::vector<Param<T>*> out;
    out.reserve(params_.size());
    for (auto& [k, v] : params_) out.push_back(v.get());
    return out;
  }

  std::vector<const Param<T>*> all() const {
    std::vector<const Param<T>*> out;
    out.reserve(params_.size());
    for (auto& [k, v] : params_) out.push_back(v.get());
    return out;
  }

  void zero_grads() {
    for (auto& [k, v] : params_) v->grad.setZero();
  }

  size_t size() const { return params_.size(); }

  int64_t adam_steps = 0;
  int64_t skipped_nonfinite_grads = 0;  // tensors skipped by the optimizer
  int64_t xent_clamp_count = 0;         // cross-entropy clamps (see ops.hpp)

 private:
  std::map<std::string, std::unique_ptr<Param<T>>> params_;
};

// Standard Adam with bias correction. A tensor whose gradient is non-finite
// is skipped for this step and counted.
template <typename T>
void adam_step(ParamStore<T>& store, const AdamConfig& cfg) {
  store.adam_steps += 1;
  const double t = static_cast<double>(store.adam_steps);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (Param<T>* p : store.all()) {
    if (p->freeze_row0 && p->grad.rows() > 0) p->grad.row(0).setZero();
    if (!all_finite(p->grad)) {
      store.skipped_nonfinite_grads += 1;
      continue;
    }
    if (p->adam_m.size() == 0) {
      p->adam_m = Mat<T>::Zero(p->rows(), p->cols());
      p->adam_v = Mat<T>::Zero(p->rows(), p->cols());
    }
    p->adam_m = static_cast<T>(cfg.beta1) * p->adam_m +
                static_cast<T>(1.0 - cfg.beta1) * p->grad;
    p->adam_v =
        static_cast<T>(cfg.beta2) * p->adam_v +
        static_cast<T>(1.0 - cfg.beta2) * p->grad.cwiseProduct(p->grad);
    Mat<T> m_hat = p->adam_m / static_cast<T>(bc1);
    Mat<T> v_hat = p->adam_v / static_cast<T>(bc2);
    p->value -=
        (static_cast<T>(cfg.lr) * m_hat.array() /
         (v_hat.array().sqrt() + static_cast<T>(cfg.eps)))
            .matrix();
    if (p->freeze_row0 && p->value.rows() > 0) p->value.row(0).setZero();
  }
}

// Plain SGD; used by gradient-sanity tests and available via config.
template <typename T>
void sgd_step(ParamStore<T>& store, double lr) {
  for (Param<T>* p : store.all()) {
    if (p->freeze_row0 && p->grad.rows() > 0) p->grad.row(0).setZero();
    if (!all_finite(p->grad)) {
      store.skipped_nonfinite_grads += 1;
      continue;
    }
    p->value -= static_cast<T>(lr) * p->grad;
    if (p->freeze_row0 && p->value.rows() > 0) p->value.row(0).setZero();
  }
}

// Initializers. The recurrent/dense split follows common practice for this
// kind of model; biases start at zero except LSTM forget gates (+1).
template <typename T>
void init_uniform(Param<T>& p, Rng& rng, double scale) {
  for (EIndex r = 0; r < p.rows(); ++r)
    for (EIndex c = 0; c < p.cols(); ++c)
      p.value(r, c) = static_cast<T>(rng.uniform(-scale, scale));
}

template <typename T>
void init_glorot(Param<T>& p, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(p.rows() + p.cols()));
  init_uniform(p, rng, limit);
}

}  // namespace repartee
