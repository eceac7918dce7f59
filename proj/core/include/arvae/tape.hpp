#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "arvae/tensor.hpp"

namespace arvae {

// Handle into a Tape. Plain index so ops stay cheap to pass around.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// A trainable tensor plus its gradient accumulator. Owned by modules;
// the tape only references it.
template <typename T>
struct Param {
  Tensor<T> value;
  Tensor<T> grad;

  void zero_grad() {
    if (!grad.empty()) grad.zero();
  }
  Tensor<T>& grad_buffer() {
    if (grad.empty()) grad = Tensor<T>(value.shape());
    return grad;
  }
};

// Reverse-mode tape. Operations append nodes in evaluation order; backward
// replays their closures in reverse. Built per optimization step (or per
// frame during inference, with recording off).
template <typename T>
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}

  bool recording() const { return recording_; }

  Var constant(Tensor<T> v) { return push_value(std::move(v)); }

  // Leaf whose gradient stays queryable after backward.
  Var input(Tensor<T> v) {
    Var id = push_value(std::move(v));
    nodes_[id.id].keep = true;
    return id;
  }

  Var use(Param<T>& p) {
    Var id = push_value(p.value);
    nodes_[id.id].keep = true;
    if (recording_) {
      Param<T>* pp = &p;
      nodes_[id.id].back = [id, pp](Tape& tp) {
        pp->grad_buffer().add_(tp.nodes_[id.id].grad);
      };
    }
    return id;
  }

  Var push_value(Tensor<T> v) {
    nodes_.push_back(Node{std::move(v), {}, nullptr, false});
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  template <class F>
  Var push(Tensor<T> v, F&& back) {
    Var id = push_value(std::move(v));
    if (recording_) nodes_[id.id].back = std::forward<F>(back);
    return id;
  }

  template <class F>
  void set_back(Var v, F&& back) {
    nodes_[v.id].back = std::forward<F>(back);
  }

  const Tensor<T>& val(Var v) const {
    require(v.valid() && v.id < static_cast<int>(nodes_.size()), "invalid Var");
    return nodes_[v.id].value;
  }

  bool has_grad(Var v) const { return !nodes_[v.id].grad.empty(); }

  // Gradient of the last backward() w.r.t. v; exact zeros if the loss never
  // touched it.
  Tensor<T> grad(Var v) const {
    if (!has_grad(v)) return Tensor<T>(nodes_[v.id].value.shape());
    return nodes_[v.id].grad;
  }

  Tensor<T>& grad_buffer(Var v) {
    Node& n = nodes_[v.id];
    if (n.grad.empty()) n.grad = Tensor<T>(n.value.shape());
    return n.grad;
  }

  void add_grad(Var v, const Tensor<T>& g) { grad_buffer(v).add_(g); }

  // Scalar convenience for {1}-shaped nodes.
  T scalar(Var v) const {
    const Tensor<T>& t = val(v);
    require(t.size() == 1, "scalar() on non-scalar ", t.shape().str());
    return t[0];
  }

  void backward(Var loss) {
    require(recording_, "backward on a non-recording tape");
    const Tensor<T>& lv = val(loss);
    require(lv.size() == 1, "loss must be scalar, got ", lv.shape().str());
    grad_buffer(loss).fill(T(1));
    for (int i = loss.id; i >= 0; --i) {
      Node& n = nodes_[i];
      if (!n.grad.empty() && n.back) n.back(*this);
      if (!n.keep) {
        // Consumers have already run; release this node's buffers. Closures
        // hold shared copies of whatever forward values they still need.
        n.back = nullptr;
        n.grad = {};
        if (i != loss.id) n.value = {};
      }
    }
  }

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    std::function<void(Tape&)> back;
    bool keep = false;
  };
  std::vector<Node> nodes_;
  bool recording_;
};

}  // namespace arvae
