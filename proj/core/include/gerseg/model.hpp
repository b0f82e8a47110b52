#pragma once

#include <array>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "gerseg/layers.hpp"

namespace gerseg::models {

using autograd::Tape;
using autograd::Var;
using layers::NamedTensor;
using layers::Param;

struct ModelConfig {
  std::string arch = "ger-unet";  // "ger-unet" or "r-unet"
  int in_channels = 1;
  int num_classes = 2;
  int base_channels = 32;  // regular width; the group model derives its own via scale_width
  std::string skip_mode = "add";        // "add" or "concat"
  std::string upsample_mode = "nearest";  // "nearest" or "bilinear"
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;

  void validate() const;  // throws ConfigError
};

// round(channels / sqrt(8)), floored at 1: the width that keeps a group
// model's parameter count level with its regular twin (8 orientation copies
// at 1/8 the channel pairs).
int scale_width(int channels);

ModelConfig model_config_from_json_text(const std::string& text);
std::string model_config_to_json_text(const ModelConfig& cfg, int indent = 2);

template <typename T>
class SegNet {
 public:
  virtual ~SegNet() = default;
  virtual Var forward(Tape<T>& tape, Var x, bool training) = 0;
  virtual const ModelConfig& config() const = 0;
  // Trainable parameters, in a fixed construction order.
  virtual std::vector<Param<T>*> parameters() = 0;
  // Everything a checkpoint persists: parameters plus running buffers.
  virtual std::vector<NamedTensor<T>> state() = 0;
  virtual void init_params(uint64_t seed) = 0;
  virtual std::vector<std::pair<std::string, int64_t>> layer_table() = 0;

  Tensor<T> forward_eval(const Tensor<T>& x) {
    Tape<T> tape;
    const Var y = forward(tape, tape.constant(x), false);
    return tape.value(y);
  }

  int64_t parameter_count() {
    int64_t n = 0;
    for (const auto* p : parameters()) n += p->value.numel();
    return n;
  }
};

namespace detail {

// Both architectures are the same U-Net; they differ in the convolution
// kind (lift stem + group convs vs plain convs), the width rule, and
// whether the head pools orientations.
template <typename T>
class UNet final : public SegNet<T> {
 public:
  explicit UNet(const ModelConfig& cfg)
      : cfg_(cfg), group_(cfg.arch == "ger-unet"), skip_add_(cfg.skip_mode == "add") {
    const T mom = static_cast<T>(cfg.bn_momentum);
    const T eps = static_cast<T>(cfg.bn_eps);
    const int w1 = group_ ? scale_width(cfg.base_channels) : cfg.base_channels;
    const std::array<int, 4> widths{w1, 2 * w1, 4 * w1, 8 * w1};
    const layers::ConvKind stem_kind = group_ ? layers::ConvKind::kLift : layers::ConvKind::kPlain;
    const layers::ConvKind kind = group_ ? layers::ConvKind::kGroup : layers::ConvKind::kPlain;

    stem_.emplace_back(stem_kind, "stem.conv", cfg.in_channels, w1, 3, 1, 1, false);
    stem_bn_.emplace_back("stem.bn", w1, mom, eps);

    for (int s = 0; s < 4; ++s) {
      const int cin = s == 0 ? w1 : widths[static_cast<size_t>(s - 1)];
      const int cout = widths[static_cast<size_t>(s)];
      const int stride = s == 0 ? 1 : 2;
      const std::string base = "enc" + std::to_string(s + 1);
      enc_.emplace_back(kind, base + ".block1", cin, cout, stride, mom, eps);
      enc_.emplace_back(kind, base + ".block2", cout, cout, 1, mom, eps);
    }

    for (int d = 0; d < 3; ++d) {
      const int cin_up = widths[static_cast<size_t>(3 - d)];
      const int cskip = widths[static_cast<size_t>(2 - d)];
      const std::string base = "dec" + std::to_string(d + 1);
      if (skip_add_) {
        up_proj_.emplace_back(kind, base + ".proj", cin_up, cskip, 1, 1, 0, false);
      }
      const int cin_block = skip_add_ ? cskip : cin_up + cskip;
      dec_.emplace_back(kind, base + ".block", cin_block, cskip, 1, mom, eps);
    }

    head_.emplace_back(kind, "head.conv", w1, cfg.num_classes, 1, 1, 0, true);
  }

  Var forward(Tape<T>& tape, Var x, bool training) override {
    const Tensor<T>& in = tape.value(x);
    GERSEG_CHECK_SHAPE(in.ndim() == 4, "model: input must be [B,C,H,W], got " + shape_string(in));
    GERSEG_CHECK(in.dim(1) == cfg_.in_channels,
                 "model: expected " + std::to_string(cfg_.in_channels) + " input channels, got " +
                     std::to_string(in.dim(1)));
    const int H = in.dim(2), W = in.dim(3);
    GERSEG_CHECK(H % 8 == 0 && W % 8 == 0,
                 "model: spatial dims must be divisible by 8, got " + shape_string(in));

    const ops::Upsample up_mode =
        cfg_.upsample_mode == "bilinear" ? ops::Upsample::kBilinear : ops::Upsample::kNearest;

    Var h = stem_.front().forward(tape, x);
    h = stem_bn_.front().forward(tape, h, training);
    h = tape.relu(h);

    std::array<Var, 4> stage_out{};
    for (int s = 0; s < 4; ++s) {
      h = enc_[static_cast<size_t>(2 * s)].forward(tape, h, training);
      h = enc_[static_cast<size_t>(2 * s + 1)].forward(tape, h, training);
      stage_out[static_cast<size_t>(s)] = h;
    }

    for (int d = 0; d < 3; ++d) {
      h = tape.upsample(h, 2, up_mode);
      const Var skip = stage_out[static_cast<size_t>(2 - d)];
      if (skip_add_) {
        h = up_proj_[static_cast<size_t>(d)].forward(tape, h);
        h = tape.add(h, skip);
      } else {
        h = tape.concat(h, skip);
      }
      h = dec_[static_cast<size_t>(d)].forward(tape, h, training);
    }

    h = head_.front().forward(tape, h);
    if (group_) h = tape.orientation_pool(h);

    const Tensor<T>& out = tape.value(h);
    if (out.dim(-2) != H || out.dim(-1) != W) {
      GERSEG_CHECK_SHAPE(H % out.dim(-2) == 0 && H / out.dim(-2) == W / out.dim(-1),
                         "model: cannot upsample logits to the input resolution");
      h = tape.upsample(h, H / out.dim(-2), up_mode);
    }
    return h;
  }

  const ModelConfig& config() const override { return cfg_; }

  std::vector<Param<T>*> parameters() override {
    std::vector<Param<T>*> out;
    walk([&out](auto& layer) { layer.collect_params(out); });
    return out;
  }

  std::vector<NamedTensor<T>> state() override {
    std::vector<NamedTensor<T>> out;
    walk([&out](auto& layer) { layer.collect_state(out); });
    return out;
  }

  void init_params(uint64_t seed) override {
    std::mt19937 rng(static_cast<uint32_t>(seed ^ (seed >> 32)));
    stem_.front().init(rng);
    stem_bn_.front().reset();
    for (auto& b : enc_) {
      b.init(rng);
      b.bn1.reset();
      b.bn2.reset();
    }
    for (int d = 0; d < 3; ++d) {
      if (skip_add_) up_proj_[static_cast<size_t>(d)].init(rng);
      dec_[static_cast<size_t>(d)].init(rng);
      dec_[static_cast<size_t>(d)].bn1.reset();
      dec_[static_cast<size_t>(d)].bn2.reset();
    }
    head_.front().init(rng);
  }

  std::vector<std::pair<std::string, int64_t>> layer_table() override {
    std::vector<std::pair<std::string, int64_t>> rows;
    rows.emplace_back("stem.conv", stem_.front().param_count());
    rows.emplace_back("stem.bn", stem_bn_.front().param_count());
    for (int s = 0; s < 4; ++s) {
      const std::string base = "enc" + std::to_string(s + 1);
      rows.emplace_back(base + ".block1", enc_[static_cast<size_t>(2 * s)].param_count());
      rows.emplace_back(base + ".block2", enc_[static_cast<size_t>(2 * s + 1)].param_count());
    }
    for (int d = 0; d < 3; ++d) {
      const std::string base = "dec" + std::to_string(d + 1);
      if (skip_add_) rows.emplace_back(base + ".proj", up_proj_[static_cast<size_t>(d)].param_count());
      rows.emplace_back(base + ".block", dec_[static_cast<size_t>(d)].param_count());
    }
    rows.emplace_back("head.conv", head_.front().param_count());
    return rows;
  }

 private:
  template <typename Fn>
  void walk(Fn&& fn) {
    fn(stem_.front());
    fn(stem_bn_.front());
    size_t pi = 0;
    for (int s = 0; s < 4; ++s) {
      fn(enc_[static_cast<size_t>(2 * s)]);
      fn(enc_[static_cast<size_t>(2 * s + 1)]);
    }
    for (int d = 0; d < 3; ++d) {
      if (skip_add_) fn(up_proj_[pi++]);
      fn(dec_[static_cast<size_t>(d)]);
    }
    fn(head_.front());
  }

  ModelConfig cfg_;
  bool group_;
  bool skip_add_;
  std::vector<layers::ConvLayer<T>> stem_;        // single element; vector avoids default-construct
  std::vector<layers::BatchNormLayer<T>> stem_bn_;
  std::vector<layers::ResBlock<T>> enc_;
  std::vector<layers::ConvLayer<T>> up_proj_;
  std::vector<layers::ResBlock<T>> dec_;
  std::vector<layers::ConvLayer<T>> head_;
};

}  // namespace detail

template <typename T>
std::unique_ptr<SegNet<T>> build_model(const ModelConfig& cfg) {
  cfg.validate();
  return std::make_unique<detail::UNet<T>>(cfg);
}

// Elementwise state copy between precisions; the walk order is fixed by
// construction, and names are checked to match pairwise.
template <typename TDst, typename TSrc>
void copy_state_cast(SegNet<TSrc>& src, SegNet<TDst>& dst) {
  auto from = src.state();
  auto to = dst.state();
  GERSEG_CHECK(from.size() == to.size(), "copy_state_cast: state entry count mismatch");
  for (size_t i = 0; i < from.size(); ++i) {
    GERSEG_CHECK(from[i].first == to[i].first, "copy_state_cast: state name mismatch at '" +
                                                   from[i].first + "' vs '" + to[i].first + "'");
    const Tensor<TSrc>& a = *from[i].second;
    Tensor<TDst>& b = *to[i].second;
    GERSEG_CHECK_SHAPE(a.shape() == b.shape(), "copy_state_cast: shape mismatch at '" + from[i].first + "'");
    for (int64_t j = 0; j < a.numel(); ++j) b[j] = static_cast<TDst>(a[j]);
  }
}

}  // namespace gerseg::models
