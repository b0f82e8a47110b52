#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "gerseg/group.hpp"
#include "gerseg/tensor.hpp"

// Forward/backward kernels on plain tensors. No graph bookkeeping here; the
// autograd layer wraps these. Every kernel loops in a fixed order, so results
// are reproducible bit for bit on repeat runs.
namespace gerseg::ops {

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  GERSEG_CHECK_SHAPE(a.same_shape(b), "add: shape mismatch " + shape_string(a) + " vs " + shape_string(b));
  Tensor<T> y(a.shape());
  for (int64_t i = 0; i < a.numel(); ++i) y[i] = a[i] + b[i];
  return y;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  GERSEG_CHECK_SHAPE(a.same_shape(b), "sub: shape mismatch");
  Tensor<T> y(a.shape());
  for (int64_t i = 0; i < a.numel(); ++i) y[i] = a[i] - b[i];
  return y;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  GERSEG_CHECK_SHAPE(a.same_shape(b), "mul: shape mismatch");
  Tensor<T> y(a.shape());
  for (int64_t i = 0; i < a.numel(); ++i) y[i] = a[i] * b[i];
  return y;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T c) {
  Tensor<T> y(a.shape());
  for (int64_t i = 0; i < a.numel(); ++i) y[i] = a[i] * c;
  return y;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
  return y;
}

// Gradient convention at the kink: relu'(0) = 0.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& dy, const Tensor<T>& x) {
  GERSEG_CHECK_SHAPE(dy.same_shape(x), "relu_backward: shape mismatch");
  Tensor<T> dx(x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) dx[i] = x[i] > T(0) ? dy[i] : T(0);
  return dx;
}

// ---- spatial pooling over the trailing two dimensions ----

// Mean over non-overlapping s x s cells. This is the downsampling primitive
// behind strided convolutions: sampling cell centers instead of individual
// pixels is what keeps striding compatible with the eight square symmetries
// on even-sized grids.
template <typename T>
Tensor<T> block_mean(const Tensor<T>& x, int s) {
  GERSEG_CHECK(s >= 1, "block_mean: factor must be >= 1");
  if (s == 1) return x;
  GERSEG_CHECK_SHAPE(x.ndim() >= 2, "block_mean: tensor must have at least 2 dims");
  const int H = x.dim(-2), W = x.dim(-1);
  GERSEG_CHECK_SHAPE(H % s == 0 && W % s == 0, "block_mean: spatial dims must be divisible by the factor");
  std::vector<int> oshape = x.shape();
  oshape[oshape.size() - 2] = H / s;
  oshape[oshape.size() - 1] = W / s;
  Tensor<T> y(oshape);
  const int64_t planes = x.numel() / (static_cast<int64_t>(H) * W);
  const int Ho = H / s, Wo = W / s;
  const T inv = T(1) / static_cast<T>(s * s);
  for (int64_t p = 0; p < planes; ++p) {
    const T* src = x.data() + p * H * W;
    T* dst = y.data() + p * static_cast<int64_t>(Ho) * Wo;
    for (int r = 0; r < Ho; ++r) {
      for (int c = 0; c < Wo; ++c) {
        T acc = T(0);
        for (int dr = 0; dr < s; ++dr) {
          for (int dc = 0; dc < s; ++dc) acc += src[static_cast<int64_t>(r * s + dr) * W + c * s + dc];
        }
        dst[static_cast<int64_t>(r) * Wo + c] = acc * inv;
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> block_mean_backward(const Tensor<T>& dy, const std::vector<int>& xshape, int s) {
  if (s == 1) return dy;
  Tensor<T> dx(xshape);
  const int H = dx.dim(-2), W = dx.dim(-1);
  const int Ho = H / s, Wo = W / s;
  const int64_t planes = dx.numel() / (static_cast<int64_t>(H) * W);
  const T inv = T(1) / static_cast<T>(s * s);
  for (int64_t p = 0; p < planes; ++p) {
    const T* g = dy.data() + p * static_cast<int64_t>(Ho) * Wo;
    T* d = dx.data() + p * H * W;
    for (int r = 0; r < H; ++r) {
      for (int c = 0; c < W; ++c) {
        d[static_cast<int64_t>(r) * W + c] = g[static_cast<int64_t>(r / s) * Wo + c / s] * inv;
      }
    }
  }
  return dx;
}

// ---- upsampling over the trailing two dimensions ----

enum class Upsample { kNearest, kBilinear };

template <typename T>
Tensor<T> upsample_nearest(const Tensor<T>& x, int factor) {
  GERSEG_CHECK(factor >= 2, "upsample: factor must be >= 2");
  GERSEG_CHECK_SHAPE(x.ndim() >= 2, "upsample: tensor must have at least 2 dims");
  const int H = x.dim(-2), W = x.dim(-1);
  std::vector<int> oshape = x.shape();
  oshape[oshape.size() - 2] = H * factor;
  oshape[oshape.size() - 1] = W * factor;
  Tensor<T> y(oshape);
  const int64_t planes = x.numel() / (static_cast<int64_t>(H) * W);
  const int Ho = H * factor, Wo = W * factor;
  for (int64_t p = 0; p < planes; ++p) {
    const T* src = x.data() + p * H * W;
    T* dst = y.data() + p * static_cast<int64_t>(Ho) * Wo;
    for (int r = 0; r < Ho; ++r) {
      for (int c = 0; c < Wo; ++c) {
        dst[static_cast<int64_t>(r) * Wo + c] = src[static_cast<int64_t>(r / factor) * W + c / factor];
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> upsample_nearest_backward(const Tensor<T>& dy, const std::vector<int>& xshape, int factor) {
  Tensor<T> dx(xshape);
  const int H = dx.dim(-2), W = dx.dim(-1);
  const int Ho = H * factor, Wo = W * factor;
  const int64_t planes = dx.numel() / (static_cast<int64_t>(H) * W);
  for (int64_t p = 0; p < planes; ++p) {
    const T* g = dy.data() + p * static_cast<int64_t>(Ho) * Wo;
    T* d = dx.data() + p * H * W;
    for (int r = 0; r < Ho; ++r) {
      for (int c = 0; c < Wo; ++c) d[static_cast<int64_t>(r / factor) * W + c / factor] += g[static_cast<int64_t>(r) * Wo + c];
    }
  }
  return dx;
}

namespace detail {

// Corner-aligned source positions: output index j samples j*(S-1)/(S'-1).
// The sampling grid is symmetric under flipping j, which is what makes
// bilinear upsampling commute with the square symmetries (up to rounding).
struct LerpTap {
  int i0, i1;
  double w1;  // weight on i1; weight on i0 is 1 - w1
};

inline std::vector<LerpTap> lerp_taps(int in, int out) {
  std::vector<LerpTap> taps(static_cast<size_t>(out));
  for (int j = 0; j < out; ++j) {
    double src = (in == 1) ? 0.0 : static_cast<double>(j) * (in - 1) / (out - 1);
    int i0 = static_cast<int>(src);
    if (i0 > in - 2) i0 = in - 2;
    if (i0 < 0) i0 = 0;
    double w1 = src - i0;
    if (in == 1) {
      i0 = 0;
      w1 = 0.0;
    }
    taps[static_cast<size_t>(j)] = LerpTap{i0, std::min(i0 + 1, in - 1), w1};
  }
  return taps;
}

}  // namespace detail

template <typename T>
Tensor<T> upsample_bilinear(const Tensor<T>& x, int factor) {
  GERSEG_CHECK(factor >= 2, "upsample: factor must be >= 2");
  GERSEG_CHECK_SHAPE(x.ndim() >= 2, "upsample: tensor must have at least 2 dims");
  const int H = x.dim(-2), W = x.dim(-1);
  const int Ho = H * factor, Wo = W * factor;
  const auto rt = detail::lerp_taps(H, Ho);
  const auto ct = detail::lerp_taps(W, Wo);
  std::vector<int> oshape = x.shape();
  oshape[oshape.size() - 2] = Ho;
  oshape[oshape.size() - 1] = Wo;
  Tensor<T> y(oshape);
  const int64_t planes = x.numel() / (static_cast<int64_t>(H) * W);
  for (int64_t p = 0; p < planes; ++p) {
    const T* src = x.data() + p * H * W;
    T* dst = y.data() + p * static_cast<int64_t>(Ho) * Wo;
    for (int r = 0; r < Ho; ++r) {
      const auto& a = rt[static_cast<size_t>(r)];
      for (int c = 0; c < Wo; ++c) {
        const auto& b = ct[static_cast<size_t>(c)];
        const double v00 = src[static_cast<int64_t>(a.i0) * W + b.i0];
        const double v01 = src[static_cast<int64_t>(a.i0) * W + b.i1];
        const double v10 = src[static_cast<int64_t>(a.i1) * W + b.i0];
        const double v11 = src[static_cast<int64_t>(a.i1) * W + b.i1];
        const double top = v00 * (1.0 - b.w1) + v01 * b.w1;
        const double bot = v10 * (1.0 - b.w1) + v11 * b.w1;
        dst[static_cast<int64_t>(r) * Wo + c] = static_cast<T>(top * (1.0 - a.w1) + bot * a.w1);
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> upsample_bilinear_backward(const Tensor<T>& dy, const std::vector<int>& xshape, int factor) {
  Tensor<T> dx(xshape);
  const int H = dx.dim(-2), W = dx.dim(-1);
  const int Ho = H * factor, Wo = W * factor;
  const auto rt = detail::lerp_taps(H, Ho);
  const auto ct = detail::lerp_taps(W, Wo);
  const int64_t planes = dx.numel() / (static_cast<int64_t>(H) * W);
  for (int64_t p = 0; p < planes; ++p) {
    const T* g = dy.data() + p * static_cast<int64_t>(Ho) * Wo;
    T* d = dx.data() + p * H * W;
    for (int r = 0; r < Ho; ++r) {
      const auto& a = rt[static_cast<size_t>(r)];
      for (int c = 0; c < Wo; ++c) {
        const auto& b = ct[static_cast<size_t>(c)];
        const double go = static_cast<double>(g[static_cast<int64_t>(r) * Wo + c]);
        d[static_cast<int64_t>(a.i0) * W + b.i0] += static_cast<T>(go * (1.0 - a.w1) * (1.0 - b.w1));
        d[static_cast<int64_t>(a.i0) * W + b.i1] += static_cast<T>(go * (1.0 - a.w1) * b.w1);
        d[static_cast<int64_t>(a.i1) * W + b.i0] += static_cast<T>(go * a.w1 * (1.0 - b.w1));
        d[static_cast<int64_t>(a.i1) * W + b.i1] += static_cast<T>(go * a.w1 * b.w1);
      }
    }
  }
  return dx;
}

template <typename T>
Tensor<T> upsample(const Tensor<T>& x, int factor, Upsample mode) {
  return mode == Upsample::kNearest ? upsample_nearest(x, factor) : upsample_bilinear(x, factor);
}

template <typename T>
Tensor<T> upsample_backward(const Tensor<T>& dy, const std::vector<int>& xshape, int factor, Upsample mode) {
  return mode == Upsample::kNearest ? upsample_nearest_backward(dy, xshape, factor)
                                    : upsample_bilinear_backward(dy, xshape, factor);
}

// ---- orientation average ----

// Collapses the orientation axis of a [B, C, 8, H, W] stack by averaging.
// Averaging over the whole group makes the result invariant to relabelling
// of orientations, which turns an equivariant feature stack into an
// equivariant planar map.
template <typename T>
Tensor<T> orientation_pool(const Tensor<T>& x) {
  GERSEG_CHECK_SHAPE(x.ndim() == 5, "orientation_pool: expected [B,C,8,H,W], got " + shape_string(x));
  GERSEG_CHECK_SHAPE(x.dim(2) == kGroupSize, "orientation_pool: orientation dimension must be 8");
  const int B = x.dim(0), C = x.dim(1), H = x.dim(3), W = x.dim(4);
  Tensor<T> y({B, C, H, W});
  const int64_t hw = static_cast<int64_t>(H) * W;
  const T inv = T(1) / T(kGroupSize);
  for (int64_t bc = 0; bc < static_cast<int64_t>(B) * C; ++bc) {
    const T* src = x.data() + bc * kGroupSize * hw;
    T* dst = y.data() + bc * hw;
    for (int64_t i = 0; i < hw; ++i) {
      T acc = T(0);
      for (int g = 0; g < kGroupSize; ++g) acc += src[g * hw + i];
      dst[i] = acc * inv;
    }
  }
  return y;
}

template <typename T>
Tensor<T> orientation_pool_backward(const Tensor<T>& dy, const std::vector<int>& xshape) {
  Tensor<T> dx(xshape);
  const int H = dx.dim(3), W = dx.dim(4);
  const int64_t hw = static_cast<int64_t>(H) * W;
  const int64_t planes = dx.numel() / (kGroupSize * hw);
  const T inv = T(1) / T(kGroupSize);
  for (int64_t bc = 0; bc < planes; ++bc) {
    const T* g = dy.data() + bc * hw;
    T* d = dx.data() + bc * kGroupSize * hw;
    for (int o = 0; o < kGroupSize; ++o) {
      for (int64_t i = 0; i < hw; ++i) d[o * hw + i] = g[i] * inv;
    }
  }
  return dx;
}

// ---- batch normalization ----

// Channel axis is dim 1; statistics pool over every other axis. For oriented
// stacks [B, C, 8, H, W] that means batch, orientation and space together,
// which is required for the normalization to commute with the symmetries
// (any per-orientation statistic would break when orientations permute).
template <typename T>
struct BNSaved {
  Tensor<T> mean;    // [C], the statistics actually used by the forward pass
  Tensor<T> invstd;  // [C]
};

template <typename T>
Tensor<T> batchnorm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                    Tensor<T>& running_mean, Tensor<T>& running_var, double momentum, double eps,
                    bool training, BNSaved<T>* saved = nullptr) {
  GERSEG_CHECK_SHAPE(x.ndim() >= 2, "batchnorm: tensor must have at least 2 dims");
  const int B = x.dim(0), C = x.dim(1);
  const int64_t inner = x.numel() / (static_cast<int64_t>(B) * C);
  GERSEG_CHECK_SHAPE(gamma.numel() == C && beta.numel() == C, "batchnorm: gamma/beta must have one entry per channel");
  GERSEG_CHECK_SHAPE(running_mean.numel() == C && running_var.numel() == C,
                     "batchnorm: running stats must have one entry per channel");

  Tensor<T> mean({C}), invstd({C});
  if (training) {
    const int64_t n = static_cast<int64_t>(B) * inner;
    for (int c = 0; c < C; ++c) {
      double acc = 0;
      for (int b = 0; b < B; ++b) {
        const T* src = x.data() + (static_cast<int64_t>(b) * C + c) * inner;
        for (int64_t i = 0; i < inner; ++i) acc += static_cast<double>(src[i]);
      }
      const double mu = acc / static_cast<double>(n);
      double vacc = 0;
      for (int b = 0; b < B; ++b) {
        const T* src = x.data() + (static_cast<int64_t>(b) * C + c) * inner;
        for (int64_t i = 0; i < inner; ++i) {
          const double d = static_cast<double>(src[i]) - mu;
          vacc += d * d;
        }
      }
      const double var = vacc / static_cast<double>(n);  // biased, used for normalization
      mean[c] = static_cast<T>(mu);
      invstd[c] = static_cast<T>(1.0 / std::sqrt(var + eps));
      const double unbiased = n > 1 ? vacc / static_cast<double>(n - 1) : var;
      running_mean[c] = static_cast<T>((1.0 - momentum) * static_cast<double>(running_mean[c]) + momentum * mu);
      running_var[c] = static_cast<T>((1.0 - momentum) * static_cast<double>(running_var[c]) + momentum * unbiased);
    }
  } else {
    for (int c = 0; c < C; ++c) {
      mean[c] = running_mean[c];
      invstd[c] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(running_var[c]) + eps));
    }
  }

  Tensor<T> y(x.shape());
  for (int b = 0; b < B; ++b) {
    for (int c = 0; c < C; ++c) {
      const T* src = x.data() + (static_cast<int64_t>(b) * C + c) * inner;
      T* dst = y.data() + (static_cast<int64_t>(b) * C + c) * inner;
      const T mu = mean[c], is = invstd[c], ga = gamma[c], be = beta[c];
      for (int64_t i = 0; i < inner; ++i) dst[i] = (src[i] - mu) * is * ga + be;
    }
  }
  if (saved != nullptr) {
    saved->mean = std::move(mean);
    saved->invstd = std::move(invstd);
  }
  return y;
}

template <typename T>
struct BNGrads {
  Tensor<T> dx, dgamma, dbeta;
};

template <typename T>
BNGrads<T> batchnorm_backward(const Tensor<T>& dy, const Tensor<T>& x, const Tensor<T>& gamma,
                              const BNSaved<T>& saved, bool training) {
  const int B = x.dim(0), C = x.dim(1);
  const int64_t inner = x.numel() / (static_cast<int64_t>(B) * C);
  const int64_t n = static_cast<int64_t>(B) * inner;
  BNGrads<T> g{Tensor<T>(x.shape()), Tensor<T>({C}), Tensor<T>({C})};
  for (int c = 0; c < C; ++c) {
    const double mu = static_cast<double>(saved.mean[c]);
    const double is = static_cast<double>(saved.invstd[c]);
    double sum_dy = 0, sum_dy_xhat = 0;
    for (int b = 0; b < B; ++b) {
      const T* xs = x.data() + (static_cast<int64_t>(b) * C + c) * inner;
      const T* gs = dy.data() + (static_cast<int64_t>(b) * C + c) * inner;
      for (int64_t i = 0; i < inner; ++i) {
        const double xhat = (static_cast<double>(xs[i]) - mu) * is;
        sum_dy += static_cast<double>(gs[i]);
        sum_dy_xhat += static_cast<double>(gs[i]) * xhat;
      }
    }
    g.dbeta[c] = static_cast<T>(sum_dy);
    g.dgamma[c] = static_cast<T>(sum_dy_xhat);
    const double ga = static_cast<double>(gamma[c]);
    for (int b = 0; b < B; ++b) {
      const T* xs = x.data() + (static_cast<int64_t>(b) * C + c) * inner;
      const T* gs = dy.data() + (static_cast<int64_t>(b) * C + c) * inner;
      T* ds = g.dx.data() + (static_cast<int64_t>(b) * C + c) * inner;
      for (int64_t i = 0; i < inner; ++i) {
        if (training) {
          const double xhat = (static_cast<double>(xs[i]) - mu) * is;
          ds[i] = static_cast<T>(ga * is / static_cast<double>(n) *
                                 (static_cast<double>(n) * static_cast<double>(gs[i]) - sum_dy - xhat * sum_dy_xhat));
        } else {
          // Running statistics are constants in eval mode.
          ds[i] = static_cast<T>(static_cast<double>(gs[i]) * ga * is);
        }
      }
    }
  }
  return g;
}

// ---- channel concat / split (dim 1) ----

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  GERSEG_CHECK_SHAPE(a.ndim() == b.ndim() && a.ndim() >= 2, "concat: rank mismatch");
  for (int i = 0; i < a.ndim(); ++i) {
    if (i == 1) continue;
    GERSEG_CHECK_SHAPE(a.shape()[static_cast<size_t>(i)] == b.shape()[static_cast<size_t>(i)],
                       "concat: non-channel dims must match, got " + shape_string(a) + " vs " + shape_string(b));
  }
  std::vector<int> oshape = a.shape();
  oshape[1] = a.dim(1) + b.dim(1);
  Tensor<T> y(oshape);
  const int B = a.dim(0);
  const int64_t a_block = a.numel() / B, b_block = b.numel() / B;
  for (int i = 0; i < B; ++i) {
    std::copy_n(a.data() + static_cast<int64_t>(i) * a_block, a_block, y.data() + i * (a_block + b_block));
    std::copy_n(b.data() + static_cast<int64_t>(i) * b_block, b_block,
                y.data() + i * (a_block + b_block) + a_block);
  }
  return y;
}

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, int c0, int c1) {
  GERSEG_CHECK_SHAPE(x.ndim() >= 2, "slice_channels: tensor must have at least 2 dims");
  GERSEG_CHECK(c0 >= 0 && c1 > c0 && c1 <= x.dim(1), "slice_channels: bad channel range");
  std::vector<int> oshape = x.shape();
  oshape[1] = c1 - c0;
  Tensor<T> y(oshape);
  const int B = x.dim(0), C = x.dim(1);
  const int64_t per_ch = x.numel() / (static_cast<int64_t>(B) * C);
  for (int b = 0; b < B; ++b) {
    std::copy_n(x.data() + (static_cast<int64_t>(b) * C + c0) * per_ch, static_cast<int64_t>(c1 - c0) * per_ch,
                y.data() + static_cast<int64_t>(b) * (c1 - c0) * per_ch);
  }
  return y;
}

// ---- softmax cross entropy ----

// Mean over batch and pixels of -log softmax(logits)[target]. Stabilized by
// subtracting the per-pixel max before exponentiating.
template <typename T>
T cross_entropy(const Tensor<T>& logits, const Tensor<int32_t>& target) {
  GERSEG_CHECK_SHAPE(logits.ndim() == 4, "cross_entropy: logits must be [B,K,H,W]");
  const int B = logits.dim(0), K = logits.dim(1), H = logits.dim(2), W = logits.dim(3);
  GERSEG_CHECK_SHAPE(target.ndim() == 3 && target.dim(0) == B && target.dim(1) == H && target.dim(2) == W,
                     "cross_entropy: target must be [B,H,W] matching the logits");
  const int64_t hw = static_cast<int64_t>(H) * W;
  double loss = 0;
  for (int b = 0; b < B; ++b) {
    const T* lb = logits.data() + static_cast<int64_t>(b) * K * hw;
    const int32_t* tb = target.data() + static_cast<int64_t>(b) * hw;
    for (int64_t i = 0; i < hw; ++i) {
      const int32_t t = tb[i];
      GERSEG_CHECK(t >= 0 && t < K, "cross_entropy: target class out of range");
      double m = static_cast<double>(lb[i]);
      for (int k = 1; k < K; ++k) m = std::max(m, static_cast<double>(lb[k * hw + i]));
      double lse = 0;
      for (int k = 0; k < K; ++k) lse += std::exp(static_cast<double>(lb[k * hw + i]) - m);
      loss += m + std::log(lse) - static_cast<double>(lb[t * hw + i]);
    }
  }
  return static_cast<T>(loss / (static_cast<double>(B) * hw));
}

template <typename T>
Tensor<T> cross_entropy_backward(T dloss, const Tensor<T>& logits, const Tensor<int32_t>& target) {
  const int B = logits.dim(0), K = logits.dim(1), H = logits.dim(2), W = logits.dim(3);
  const int64_t hw = static_cast<int64_t>(H) * W;
  Tensor<T> dl(logits.shape());
  const double scale = static_cast<double>(dloss) / (static_cast<double>(B) * hw);
  for (int b = 0; b < B; ++b) {
    const T* lb = logits.data() + static_cast<int64_t>(b) * K * hw;
    T* db = dl.data() + static_cast<int64_t>(b) * K * hw;
    const int32_t* tb = target.data() + static_cast<int64_t>(b) * hw;
    for (int64_t i = 0; i < hw; ++i) {
      double m = static_cast<double>(lb[i]);
      for (int k = 1; k < K; ++k) m = std::max(m, static_cast<double>(lb[k * hw + i]));
      double denom = 0;
      for (int k = 0; k < K; ++k) denom += std::exp(static_cast<double>(lb[k * hw + i]) - m);
      for (int k = 0; k < K; ++k) {
        const double p = std::exp(static_cast<double>(lb[k * hw + i]) - m) / denom;
        db[k * hw + i] = static_cast<T>(scale * (p - (k == tb[i] ? 1.0 : 0.0)));
      }
    }
  }
  return dl;
}

// Argmax over the class axis of [B,K,H,W]; ties resolve to the lowest class.
template <typename T>
Tensor<uint8_t> argmax_classes(const Tensor<T>& logits) {
  GERSEG_CHECK_SHAPE(logits.ndim() == 4, "argmax_classes: logits must be [B,K,H,W]");
  const int B = logits.dim(0), K = logits.dim(1), H = logits.dim(2), W = logits.dim(3);
  GERSEG_CHECK(K <= 256, "argmax_classes: more than 256 classes");
  const int64_t hw = static_cast<int64_t>(H) * W;
  Tensor<uint8_t> out({B, H, W});
  for (int b = 0; b < B; ++b) {
    const T* lb = logits.data() + static_cast<int64_t>(b) * K * hw;
    uint8_t* ob = out.data() + static_cast<int64_t>(b) * hw;
    for (int64_t i = 0; i < hw; ++i) {
      int best = 0;
      T bv = lb[i];
      for (int k = 1; k < K; ++k) {
        if (lb[k * hw + i] > bv) {
          bv = lb[k * hw + i];
          best = k;
        }
      }
      ob[i] = static_cast<uint8_t>(best);
    }
  }
  return out;
}

}  // namespace gerseg::ops
