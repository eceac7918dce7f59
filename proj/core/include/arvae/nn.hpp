#pragma once

#include <string>
#include <utility>
#include <vector>

#include "arvae/ops.hpp"
#include "arvae/rng.hpp"

namespace arvae {

enum class Act { relu, leaky_relu };

template <typename T>
Var activate(Tape<T>& tp, Var x, Act a) {
  return leaky_relu(tp, x, a == Act::relu ? T(0) : T(0.1));
}

// Named parameter registry; names double as checkpoint keys.
template <typename T>
struct ParamRegistry {
  std::vector<std::pair<std::string, Param<T>*>> items;
  void add(std::string name, Param<T>* p) { items.emplace_back(std::move(name), p); }
  std::size_t count() const {
    std::size_t n = 0;
    for (auto& [name, p] : items) n += p->value.size();
    return n;
  }
};

template <typename T>
struct Conv2d {
  Param<T> w, b;
  int stride = 1, pad = 0;

  Conv2d() = default;
  Conv2d(int cin, int cout, int k, int stride_, Rng& rng, T neg_slope = T(0.1))
      : stride(stride_), pad(k / 2) {
    w.value = Tensor<T>(Shape{cout, cin, k, k});
    b.value = Tensor<T>(Shape{cout});
    // Kaiming-normal for the leaky slope actually used downstream
    double fan_in = static_cast<double>(cin) * k * k;
    double stddev = std::sqrt(2.0 / ((1.0 + neg_slope * neg_slope) * fan_in));
    std::normal_distribution<double> dist(0.0, stddev);
    for (T& v : w.value) v = static_cast<T>(dist(rng));
  }

  void zero_init() {
    w.value.zero();
    b.value.zero();
  }

  Var operator()(Tape<T>& tp, Var x) {
    return conv2d(tp, x, tp.use(w), tp.use(b), stride, pad);
  }

  void reg(ParamRegistry<T>& r, const std::string& prefix) {
    r.add(prefix + ".weight", &w);
    r.add(prefix + ".bias", &b);
  }
};

// conv - act - conv with additive skip (1x1 projection when widths differ)
template <typename T>
struct ResBlock {
  Conv2d<T> c1, c2, proj;
  bool has_proj = false;
  Act act;

  ResBlock() = default;
  ResBlock(int cin, int cout, Act a, Rng& rng) : act(a) {
    c1 = Conv2d<T>(cin, cout, 3, 1, rng);
    c2 = Conv2d<T>(cout, cout, 3, 1, rng);
    if (cin != cout) {
      proj = Conv2d<T>(cin, cout, 1, 1, rng);
      has_proj = true;
    }
  }

  Var operator()(Tape<T>& tp, Var x) {
    Var h = c2(tp, activate(tp, c1(tp, x), act));
    Var s = has_proj ? proj(tp, x) : x;
    return add(tp, h, s);
  }

  void reg(ParamRegistry<T>& r, const std::string& prefix) {
    c1.reg(r, prefix + ".c1");
    c2.reg(r, prefix + ".c2");
    if (has_proj) proj.reg(r, prefix + ".proj");
  }
};

}  // namespace arvae
