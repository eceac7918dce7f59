#pragma once

#include "arvae/nn.hpp"

namespace arvae {

template <typename T>
struct AdamWConfig {
  T lr = static_cast<T>(1e-3);
  T beta1 = static_cast<T>(0.9);
  T beta2 = static_cast<T>(0.999);
  T eps = static_cast<T>(1e-8);
  T weight_decay = static_cast<T>(1e-2);
  T grad_clip = 0;  // global L2 norm; 0 disables
};

// Adam with decoupled weight decay.
template <typename T>
class AdamW {
 public:
  AdamW(ParamRegistry<T> params, AdamWConfig<T> cfg)
      : params_(std::move(params)), cfg_(cfg) {
    for (auto& [name, p] : params_.items)
      slots_.push_back({Tensor<T>(p->value.shape()), Tensor<T>(p->value.shape())});
  }

  void zero_grad() {
    for (auto& [name, p] : params_.items) p->zero_grad();
  }

  void set_lr(T lr) { cfg_.lr = lr; }
  T lr() const { return cfg_.lr; }

  void step() {
    ++t_;
    T scale = T(1);
    if (cfg_.grad_clip > T(0)) {
      double sq = 0;
      for (auto& [name, p] : params_.items)
        if (!p->grad.empty())
          for (const T& g : p->grad) sq += static_cast<double>(g) * g;
      double norm = std::sqrt(sq);
      if (norm > static_cast<double>(cfg_.grad_clip))
        scale = static_cast<T>(cfg_.grad_clip / norm);
    }
    const T bc1 = T(1) - std::pow(cfg_.beta1, static_cast<T>(t_));
    const T bc2 = T(1) - std::pow(cfg_.beta2, static_cast<T>(t_));
    for (std::size_t i = 0; i < params_.items.size(); ++i) {
      Param<T>* p = params_.items[i].second;
      if (p->grad.empty()) continue;
      Tensor<T>&m = slots_[i].m, &v = slots_[i].v;
      T* w = p->value.data();
      const T* g = p->grad.data();
      for (std::size_t j = 0, n = p->value.size(); j < n; ++j) {
        T gj = g[j] * scale;
        m[j] = cfg_.beta1 * m[j] + (T(1) - cfg_.beta1) * gj;
        v[j] = cfg_.beta2 * v[j] + (T(1) - cfg_.beta2) * gj * gj;
        T mhat = m[j] / bc1;
        T vhat = v[j] / bc2;
        w[j] -= cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * w[j]);
      }
    }
  }

 private:
  struct Slot {
    Tensor<T> m, v;
  };
  ParamRegistry<T> params_;
  std::vector<Slot> slots_;
  AdamWConfig<T> cfg_;
  long t_ = 0;
};

}  // namespace arvae
