#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gerseg/autograd.hpp"
#include "gerseg/tensor.hpp"

// Parameterized layers. Each layer owns its parameters, knows how to
// initialize them, and records its forward pass on a tape. Checkpointing
// walks state() pairs, so every parameter and running buffer carries a
// unique dotted name.
namespace gerseg::layers {

using autograd::kNoVar;
using autograd::Param;
using autograd::Tape;
using autograd::Var;

template <typename T>
using NamedTensor = std::pair<std::string, Tensor<T>*>;

template <typename T>
void uniform_init(Tensor<T>& w, int64_t fan_in, std::mt19937& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (int64_t i = 0; i < w.numel(); ++i) w[i] = static_cast<T>(dist(rng));
}

enum class ConvKind { kPlain, kLift, kGroup };

// One stored kernel; the lift and group kinds expand it into the eight
// orientation copies inside the op, so parameters are counted once.
template <typename T>
struct ConvLayer {
  ConvKind kind;
  Param<T> w;
  Param<T> bias;
  bool has_bias;
  int stride, pad;
  int64_t fan_in;

  ConvLayer(ConvKind kind_, const std::string& name, int cin, int cout, int k, int stride_, int pad_,
            bool bias_)
      : kind(kind_),
        w(name + ".w", Tensor<T>(kind_ == ConvKind::kGroup ? std::vector<int>{cout, cin, kGroupSize, k, k}
                                                           : std::vector<int>{cout, cin, k, k})),
        bias(bias_ ? Param<T>(name + ".b", Tensor<T>({cout})) : Param<T>()),
        has_bias(bias_),
        stride(stride_),
        pad(pad_),
        fan_in(static_cast<int64_t>(k) * k * cin * (kind_ == ConvKind::kGroup ? kGroupSize : 1)) {}

  void init(std::mt19937& rng) {
    uniform_init(w.value, fan_in, rng);
    if (has_bias) std::fill(bias.value.data(), bias.value.data() + bias.value.numel(), T(0));
  }

  Var forward(Tape<T>& tape, Var x) {
    const Var wv = tape.param(&w);
    const Var bv = has_bias ? tape.param(&bias) : kNoVar;
    switch (kind) {
      case ConvKind::kPlain:
        return tape.conv2d(x, wv, bv, stride, pad);
      case ConvKind::kLift:
        return tape.lift_conv(x, wv, bv, stride, pad);
      default:
        return tape.group_conv(x, wv, bv, stride, pad);
    }
  }

  void collect_params(std::vector<Param<T>*>& out) {
    out.push_back(&w);
    if (has_bias) out.push_back(&bias);
  }

  void collect_state(std::vector<NamedTensor<T>>& out) {
    out.emplace_back(w.name, &w.value);
    if (has_bias) out.emplace_back(bias.name, &bias.value);
  }

  int64_t param_count() const { return w.value.numel() + (has_bias ? bias.value.numel() : 0); }
};

// Per-channel normalization. Statistics pool over every non-channel axis,
// so oriented stacks are normalized across batch, orientation and space at
// once; per-orientation statistics would break the orientation symmetry.
template <typename T>
struct BatchNormLayer {
  Param<T> gamma, beta;
  Tensor<T> running_mean, running_var;
  std::string name;
  T momentum, eps;

  BatchNormLayer(const std::string& name_, int channels, T momentum_, T eps_)
      : gamma(name_ + ".gamma", Tensor<T>({channels})),
        beta(name_ + ".beta", Tensor<T>({channels})),
        running_mean(Tensor<T>({channels})),
        running_var(Tensor<T>({channels})),
        name(name_),
        momentum(momentum_),
        eps(eps_) {
    reset();
  }

  void reset() {
    std::fill(gamma.value.data(), gamma.value.data() + gamma.value.numel(), T(1));
    std::fill(beta.value.data(), beta.value.data() + beta.value.numel(), T(0));
    std::fill(running_mean.data(), running_mean.data() + running_mean.numel(), T(0));
    std::fill(running_var.data(), running_var.data() + running_var.numel(), T(1));
  }

  Var forward(Tape<T>& tape, Var x, bool training) {
    return tape.batchnorm(x, tape.param(&gamma), tape.param(&beta), running_mean, running_var, momentum,
                          eps, training);
  }

  void collect_params(std::vector<Param<T>*>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
  }

  void collect_state(std::vector<NamedTensor<T>>& out) {
    out.emplace_back(gamma.name, &gamma.value);
    out.emplace_back(beta.name, &beta.value);
    out.emplace_back(name + ".running_mean", &running_mean);
    out.emplace_back(name + ".running_var", &running_var);
  }

  int64_t param_count() const { return gamma.value.numel() + beta.value.numel(); }
};

// conv-BN-ReLU-conv-BN with an additive shortcut, then ReLU. The shortcut
// becomes a 1x1 projection (same stride as the first conv) whenever the
// channel count or resolution changes.
template <typename T>
struct ResBlock {
  ConvLayer<T> conv1;
  BatchNormLayer<T> bn1;
  ConvLayer<T> conv2;
  BatchNormLayer<T> bn2;
  std::vector<ConvLayer<T>> proj;  // empty or one 1x1 conv

  ResBlock(ConvKind kind, const std::string& name, int cin, int cout, int stride, T momentum, T eps)
      : conv1(kind, name + ".conv1", cin, cout, 3, stride, 1, false),
        bn1(name + ".bn1", cout, momentum, eps),
        conv2(kind, name + ".conv2", cout, cout, 3, 1, 1, false),
        bn2(name + ".bn2", cout, momentum, eps) {
    if (cin != cout || stride != 1) {
      proj.emplace_back(kind, name + ".proj", cin, cout, 1, stride, 0, false);
    }
  }

  void init(std::mt19937& rng) {
    conv1.init(rng);
    conv2.init(rng);
    for (auto& p : proj) p.init(rng);
  }

  Var forward(Tape<T>& tape, Var x, bool training) {
    Var h = tape.relu(bn1.forward(tape, conv1.forward(tape, x), training));
    h = bn2.forward(tape, conv2.forward(tape, h), training);
    const Var shortcut = proj.empty() ? x : proj.front().forward(tape, x);
    return tape.relu(tape.add(h, shortcut));
  }

  void collect_params(std::vector<Param<T>*>& out) {
    conv1.collect_params(out);
    bn1.collect_params(out);
    conv2.collect_params(out);
    bn2.collect_params(out);
    for (auto& p : proj) p.collect_params(out);
  }

  void collect_state(std::vector<NamedTensor<T>>& out) {
    conv1.collect_state(out);
    bn1.collect_state(out);
    conv2.collect_state(out);
    bn2.collect_state(out);
    for (auto& p : proj) p.collect_state(out);
  }

  int64_t param_count() const {
    int64_t n = conv1.param_count() + bn1.param_count() + conv2.param_count() + bn2.param_count();
    for (const auto& p : proj) n += p.param_count();
    return n;
  }
};

}  // namespace gerseg::layers
