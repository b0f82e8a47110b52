#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gerseg/conv.hpp"
#include "gerseg/ops.hpp"
#include "gerseg/tensor.hpp"

// Reverse-mode differentiation on an explicit tape. Every forward op appends
// a node holding its output value and a closure that routes the incoming
// gradient to the node's parents. backward() walks the tape once in reverse,
// so gradients accumulate in a fixed order and repeated runs are bit
// identical.
namespace gerseg::autograd {

template <typename T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  bool trainable = true;

  Param() = default;
  Param(std::string n, Tensor<T> v, bool train = true)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()), trainable(train) {}

  void zero_grad() { std::fill(grad.data(), grad.data() + grad.numel(), T(0)); }
};

using Var = int;
inline constexpr Var kNoVar = -1;

template <typename T>
class Tape {
 public:
  Var constant(Tensor<T> v) { return push(std::move(v), {}, nullptr); }

  // A leaf behaves like a constant but keeps its gradient addressable, which
  // is what finite-difference checks poke at.
  Var leaf(Tensor<T> v) { return push(std::move(v), {}, nullptr); }

  // Registers a parameter once per tape; repeated calls hand back the same
  // node so gradient contributions from shared use pile up in one place.
  Var param(Param<T>* p) {
    auto it = param_vars_.find(p);
    if (it != param_vars_.end()) return it->second;
    const Var v = push(Tensor<T>(p->value), {}, nullptr);
    param_vars_.emplace(p, v);
    return v;
  }

  const Tensor<T>& value(Var v) const { return nodes_[static_cast<size_t>(v)].value; }

  // Gradient of the most recent backward() at this node; empty if the node
  // was never reached.
  const Tensor<T>& grad(Var v) const { return grads_[static_cast<size_t>(v)]; }

  Var add(Var a, Var b) {
    Tensor<T> out = ops::add(value(a), value(b));
    return push(std::move(out), {a, b}, [this, a, b](const Tensor<T>& dy) {
      accumulate(a, dy);
      accumulate(b, dy);
    });
  }

  Var relu(Var a) {
    Tensor<T> out = ops::relu(value(a));
    return push(std::move(out), {a},
                [this, a](const Tensor<T>& dy) { accumulate(a, ops::relu_backward(dy, value(a))); });
  }

  Var conv2d(Var x, Var w, Var bias, int stride, int pad) {
    Tensor<T> out = ops::conv2d(value(x), value(w), bias == kNoVar ? Tensor<T>() : value(bias), stride, pad);
    return push(std::move(out), {x, w, bias}, [this, x, w, bias, stride, pad](const Tensor<T>& dy) {
      auto g = ops::conv2d_backward(dy, value(x), value(w), bias != kNoVar, stride, pad);
      accumulate(x, g.dx);
      accumulate(w, g.dw);
      if (bias != kNoVar) accumulate(bias, g.dbias);
    });
  }

  Var lift_conv(Var x, Var w, Var bias, int stride, int pad) {
    Tensor<T> out =
        ops::lift_conv(value(x), value(w), bias == kNoVar ? Tensor<T>() : value(bias), stride, pad);
    return push(std::move(out), {x, w, bias}, [this, x, w, bias, stride, pad](const Tensor<T>& dy) {
      auto g = ops::lift_conv_backward(dy, value(x), value(w), bias != kNoVar, stride, pad);
      accumulate(x, g.dx);
      accumulate(w, g.dw);
      if (bias != kNoVar) accumulate(bias, g.dbias);
    });
  }

  Var group_conv(Var x, Var w, Var bias, int stride, int pad) {
    Tensor<T> out =
        ops::group_conv(value(x), value(w), bias == kNoVar ? Tensor<T>() : value(bias), stride, pad);
    return push(std::move(out), {x, w, bias}, [this, x, w, bias, stride, pad](const Tensor<T>& dy) {
      auto g = ops::group_conv_backward(dy, value(x), value(w), bias != kNoVar, stride, pad);
      accumulate(x, g.dx);
      accumulate(w, g.dw);
      if (bias != kNoVar) accumulate(bias, g.dbias);
    });
  }

  // Normalization statistics live outside the tape; in training mode the
  // call updates the layer's running buffers as a side effect.
  Var batchnorm(Var x, Var gamma, Var beta, Tensor<T>& running_mean, Tensor<T>& running_var, T momentum,
                T eps, bool training) {
    auto saved = std::make_shared<ops::BNSaved<T>>();
    Tensor<T> out = ops::batchnorm(value(x), value(gamma), value(beta), running_mean, running_var,
                                   momentum, eps, training, saved.get());
    return push(std::move(out), {x, gamma, beta},
                [this, x, gamma, beta, saved, training](const Tensor<T>& dy) {
                  auto g = ops::batchnorm_backward(dy, value(x), value(gamma), *saved, training);
                  accumulate(x, g.dx);
                  accumulate(gamma, g.dgamma);
                  accumulate(beta, g.dbeta);
                });
  }

  Var upsample(Var x, int factor, ops::Upsample mode) {
    Tensor<T> out = ops::upsample(value(x), factor, mode);
    return push(std::move(out), {x}, [this, x, factor, mode](const Tensor<T>& dy) {
      accumulate(x, ops::upsample_backward(dy, value(x).shape(), factor, mode));
    });
  }

  Var orientation_pool(Var x) {
    Tensor<T> out = ops::orientation_pool(value(x));
    return push(std::move(out), {x}, [this, x](const Tensor<T>& dy) {
      accumulate(x, ops::orientation_pool_backward(dy, value(x).shape()));
    });
  }

  Var concat(Var a, Var b) {
    Tensor<T> out = ops::concat_channels(value(a), value(b));
    const int ca = value(a).dim(1), cb = value(b).dim(1);
    return push(std::move(out), {a, b}, [this, a, b, ca, cb](const Tensor<T>& dy) {
      accumulate(a, ops::slice_channels(dy, 0, ca));
      accumulate(b, ops::slice_channels(dy, ca, ca + cb));
    });
  }

  Var cross_entropy(Var logits, Tensor<int32_t> target) {
    const T loss = ops::cross_entropy(value(logits), target);
    auto tgt = std::make_shared<Tensor<int32_t>>(std::move(target));
    return push(Tensor<T>({1}, {loss}), {logits}, [this, logits, tgt](const Tensor<T>& dy) {
      accumulate(logits, ops::cross_entropy_backward(dy[0], value(logits), *tgt));
    });
  }

  // Seeds the root with 1 and sweeps the tape in reverse. Gradients of
  // registered parameters are added into their Param::grad.
  void backward(Var root) {
    GERSEG_CHECK(root >= 0 && static_cast<size_t>(root) < nodes_.size(), "backward: bad root var");
    if (value(root).numel() != 1) {
      throw std::invalid_argument("backward: root must be a scalar, got " + shape_string(value(root)));
    }
    grads_.assign(nodes_.size(), Tensor<T>());
    Tensor<T> seed(value(root).shape());
    seed[0] = T(1);
    grads_[static_cast<size_t>(root)] = std::move(seed);
    for (Var v = root; v >= 0; --v) {
      const auto& node = nodes_[static_cast<size_t>(v)];
      const auto& g = grads_[static_cast<size_t>(v)];
      if (g.numel() == 0 || !node.vjp) continue;
      node.vjp(g);
    }
    for (const auto& [p, v] : param_vars_) {
      const auto& g = grads_[static_cast<size_t>(v)];
      if (g.numel() != 0) p->grad = ops::add(p->grad, g);
    }
  }

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    std::vector<Var> parents;
    std::function<void(const Tensor<T>&)> vjp;
  };

  Var push(Tensor<T> value, std::vector<Var> parents, std::function<void(const Tensor<T>&)> vjp) {
    nodes_.push_back(Node{std::move(value), std::move(parents), std::move(vjp)});
    return static_cast<Var>(nodes_.size() - 1);
  }

  void accumulate(Var v, const Tensor<T>& g) {
    if (v == kNoVar) return;
    auto& slot = grads_[static_cast<size_t>(v)];
    if (slot.numel() == 0) {
      slot = g;
    } else {
      slot = ops::add(slot, g);
    }
  }

  std::vector<Node> nodes_;
  std::vector<Tensor<T>> grads_;
  std::unordered_map<Param<T>*, Var> param_vars_;
};

// Central finite differences of eval() with respect to the entries of x,
// perturbing in place and restoring afterwards.
template <typename T>
Tensor<T> finite_diff_grad(Tensor<T>& x, const std::function<T()>& eval, T eps) {
  Tensor<T> g(x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) {
    const T saved = x[i];
    x[i] = saved + eps;
    const T up = eval();
    x[i] = saved - eps;
    const T down = eval();
    x[i] = saved;
    g[i] = (up - down) / (T(2) * eps);
  }
  return g;
}

}  // namespace gerseg::autograd
