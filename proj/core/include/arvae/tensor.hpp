#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <vector>

#include "arvae/common.hpp"

namespace arvae {

namespace tensor_detail {

// Recycles backing vectors by exact element count. Graph building allocates
// and frees the same sizes every step; without reuse, large blocks bounce
// through mmap and page-fault zeroing dominates the step time.
template <typename T>
class BufferPool {
 public:
  static BufferPool& instance() {
    static thread_local BufferPool pool;
    return pool;
  }

  std::shared_ptr<std::vector<T>> acquire(std::size_t n) {
    auto& bucket = free_[n];
    std::vector<T>* raw;
    if (!bucket.empty()) {
      raw = bucket.back().release();
      bucket.pop_back();
    } else {
      raw = new std::vector<T>(n);
    }
    return std::shared_ptr<std::vector<T>>(raw, [](std::vector<T>* v) {
      instance().free_[v->size()].emplace_back(v);
    });
  }

 private:
  std::unordered_map<std::size_t, std::vector<std::unique_ptr<std::vector<T>>>> free_;
};

}  // namespace tensor_detail

// Dense row-major tensor with shared ownership of the buffer. Copies are
// shallow; use clone() for a deep copy. Rank up to 4.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape s) : shape_(s) {
    buf_ = tensor_detail::BufferPool<T>::instance().acquire(s.numel());
    std::fill(buf_->begin(), buf_->end(), T(0));
  }
  Tensor(Shape s, std::vector<T> values) : shape_(s) {
    require(values.size() == s.numel(), "tensor init size mismatch: ",
            values.size(), " values for shape ", s.str());
    buf_ = std::make_shared<std::vector<T>>(std::move(values));
  }

  static Tensor zeros(Shape s) { return Tensor(s); }
  // Recycled storage with undefined contents; caller overwrites every cell.
  static Tensor uninit(Shape s) {
    Tensor t;
    t.shape_ = s;
    t.buf_ = tensor_detail::BufferPool<T>::instance().acquire(s.numel());
    return t;
  }
  static Tensor full(Shape s, T v) {
    Tensor t = uninit(s);
    std::fill(t.begin(), t.end(), v);
    return t;
  }

  bool empty() const { return !buf_; }
  const Shape& shape() const { return shape_; }
  int dim(int i) const { return shape_[i]; }
  int rank() const { return shape_.rank; }
  std::size_t size() const { return buf_ ? buf_->size() : 0; }

  T* data() { return buf_->data(); }
  const T* data() const { return buf_->data(); }
  T* begin() { return data(); }
  T* end() { return data() + size(); }
  const T* begin() const { return data(); }
  const T* end() const { return data() + size(); }

  T& operator[](std::size_t i) { return (*buf_)[i]; }
  const T& operator[](std::size_t i) const { return (*buf_)[i]; }

  // rank-4 (b,c,y,x)
  T& at(int b, int c, int y, int x) {
    return (*buf_)[((static_cast<std::size_t>(b) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
  }
  const T& at(int b, int c, int y, int x) const {
    return (*buf_)[((static_cast<std::size_t>(b) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
  }
  // rank-3 (c,y,x)
  T& at(int c, int y, int x) {
    return (*buf_)[(static_cast<std::size_t>(c) * shape_[1] + y) * shape_[2] + x];
  }
  const T& at(int c, int y, int x) const {
    return (*buf_)[(static_cast<std::size_t>(c) * shape_[1] + y) * shape_[2] + x];
  }

  Tensor clone() const {
    if (empty()) return {};
    Tensor t = uninit(shape_);
    std::memcpy(t.data(), data(), size() * sizeof(T));
    return t;
  }

  Tensor reshaped(Shape s) const {
    require(s.numel() == size(), "reshape ", shape_.str(), " -> ", s.str());
    Tensor t = *this;
    t.shape_ = s;
    return t;
  }

  void fill(T v) { std::fill(begin(), end(), v); }
  void zero() { fill(T(0)); }

  void add_(const Tensor& o) {
    require(o.size() == size(), "add_ size mismatch");
    const T* src = o.data();
    T* dst = data();
    for (std::size_t i = 0, n = size(); i < n; ++i) dst[i] += src[i];
  }
  void axpy_(T a, const Tensor& o) {
    require(o.size() == size(), "axpy_ size mismatch");
    const T* src = o.data();
    T* dst = data();
    for (std::size_t i = 0, n = size(); i < n; ++i) dst[i] += a * src[i];
  }
  void scale_(T a) {
    for (T& v : *this->buf_) v *= a;
  }

  bool all_finite() const {
    for (const T& v : *buf_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  T min() const {
    return *std::min_element(begin(), end());
  }
  T max() const {
    return *std::max_element(begin(), end());
  }
  double sum() const {
    double s = 0;
    for (const T& v : *buf_) s += static_cast<double>(v);
    return s;
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> t = Tensor<U>::uninit(shape_);
    const T* src = data();
    U* dst = t.data();
    for (std::size_t i = 0, n = size(); i < n; ++i) dst[i] = static_cast<U>(src[i]);
    return t;
  }

 private:
  Shape shape_;
  std::shared_ptr<std::vector<T>> buf_;

  template <typename U>
  friend class Tensor;
};

// Extract sample b of a (B,C,H,W) tensor as (C,H,W).
template <typename T>
Tensor<T> slice_sample(const Tensor<T>& t, int b) {
  require(t.rank() == 4, "slice_sample wants rank-4, got ", t.shape().str());
  Shape s{t.dim(1), t.dim(2), t.dim(3)};
  Tensor<T> out = Tensor<T>::uninit(s);
  std::memcpy(out.data(), t.data() + static_cast<std::size_t>(b) * s.numel(),
              s.numel() * sizeof(T));
  return out;
}

// Stack rank-3 (C,H,W) tensors into (B,C,H,W).
template <typename T>
Tensor<T> stack_samples(const std::vector<Tensor<T>>& xs) {
  require(!xs.empty(), "stack_samples: empty");
  const Shape& s0 = xs[0].shape();
  require(s0.rank == 3, "stack_samples wants rank-3 items");
  Tensor<T> out = Tensor<T>::uninit(Shape{static_cast<int>(xs.size()), s0[0], s0[1], s0[2]});
  std::size_t n = s0.numel();
  for (std::size_t b = 0; b < xs.size(); ++b) {
    require(xs[b].shape() == s0, "stack_samples: inconsistent shapes");
    std::memcpy(out.data() + b * n, xs[b].data(), n * sizeof(T));
  }
  return out;
}

}  // namespace arvae
