#pragma once

#include <array>
#include <vector>

#include "gerseg/blas.hpp"
#include "gerseg/group.hpp"
#include "gerseg/ops.hpp"
#include "gerseg/tensor.hpp"

// Convolution kernels: plain planar convolution, the lifting convolution
// (planar input -> oriented stack) and the group convolution (oriented stack
// -> oriented stack). All three run as im2col + GEMM per sample, with the
// oriented variants expanding their stored kernel into eight transformed
// copies, one per output orientation.
//
// Striding is anti-aliased: a stride-s call averages s x s cells first and
// then correlates at stride 1. Cell centers sit on a lattice that the eight
// square symmetries map onto itself (plain every-other-pixel subsampling
// does not, which would silently break equivariance on even grids). With the
// required same padding the output size is floor((H + 2*pad - k)/s) + 1, the
// usual strided-convolution formula.
namespace gerseg::ops {

namespace detail {

inline void check_conv_geometry(int k, int stride, int pad, int H, int W) {
  GERSEG_CHECK(k >= 1 && k % 2 == 1, "conv: kernel size must be odd");
  GERSEG_CHECK(stride >= 1, "conv: stride must be >= 1");
  GERSEG_CHECK(pad >= 0, "conv: padding must be >= 0");
  if (stride > 1) {
    GERSEG_CHECK(pad == (k - 1) / 2, "conv: stride > 1 requires same padding (k-1)/2");
    GERSEG_CHECK_SHAPE(H % stride == 0 && W % stride == 0,
                       "conv: stride > 1 needs spatial dims divisible by the stride");
  }
  GERSEG_CHECK_SHAPE(H / stride + 2 * pad - k + 1 >= 1 && W / stride + 2 * pad - k + 1 >= 1,
                     "conv: kernel does not fit the (downsampled) input");
}

// col[(ci*k+dy)*k+dx][oy*Wo+ox] = x[ci][oy+dy-pad][ox+dx-pad], zero outside.
template <typename T>
void im2col(const T* x, int Cin, int H, int W, int k, int pad, T* col) {
  const int Ho = H + 2 * pad - k + 1, Wo = W + 2 * pad - k + 1;
  const int64_t n = static_cast<int64_t>(Ho) * Wo;
  for (int ci = 0; ci < Cin; ++ci) {
    const T* plane = x + static_cast<int64_t>(ci) * H * W;
    for (int dy = 0; dy < k; ++dy) {
      for (int dx = 0; dx < k; ++dx) {
        T* row = col + ((static_cast<int64_t>(ci) * k + dy) * k + dx) * n;
        for (int oy = 0; oy < Ho; ++oy) {
          const int iy = oy + dy - pad;
          T* dst = row + static_cast<int64_t>(oy) * Wo;
          if (iy < 0 || iy >= H) {
            std::fill_n(dst, Wo, T(0));
            continue;
          }
          const T* src = plane + static_cast<int64_t>(iy) * W;
          for (int ox = 0; ox < Wo; ++ox) {
            const int ix = ox + dx - pad;
            dst[ox] = (ix < 0 || ix >= W) ? T(0) : src[ix];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, int Cin, int H, int W, int k, int pad, T* dx) {
  const int Ho = H + 2 * pad - k + 1, Wo = W + 2 * pad - k + 1;
  const int64_t n = static_cast<int64_t>(Ho) * Wo;
  for (int ci = 0; ci < Cin; ++ci) {
    T* plane = dx + static_cast<int64_t>(ci) * H * W;
    for (int dy = 0; dy < k; ++dy) {
      for (int dx_ = 0; dx_ < k; ++dx_) {
        const T* row = col + ((static_cast<int64_t>(ci) * k + dy) * k + dx_) * n;
        for (int oy = 0; oy < Ho; ++oy) {
          const int iy = oy + dy - pad;
          if (iy < 0 || iy >= H) continue;
          const T* src = row + static_cast<int64_t>(oy) * Wo;
          T* dst = plane + static_cast<int64_t>(iy) * W;
          for (int ox = 0; ox < Wo; ++ox) {
            const int ix = ox + dx_ - pad;
            if (ix >= 0 && ix < W) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

// Pixel permutations of the k x k kernel grid, one per group element:
// perm[g][p] is the destination of flat index p under g.
inline std::array<std::vector<int>, kGroupSize> kernel_perms(int k) {
  std::array<std::vector<int>, kGroupSize> perms;
  for (int gi = 0; gi < kGroupSize; ++gi) {
    const GroupElement g = element_from_index(gi);
    auto& p = perms[static_cast<size_t>(gi)];
    p.resize(static_cast<size_t>(k) * k);
    for (int r = 0; r < k; ++r) {
      for (int c = 0; c < k; ++c) {
        const Coord q = act_coord(g, Coord{r, c}, k, k);
        p[static_cast<size_t>(r) * k + c] = q.row * k + q.col;
      }
    }
  }
  return perms;
}

// Expanded kernel for the lifting convolution: row (co*8 + g) holds the
// stored kernel of output channel co with its taps moved by g, so that the
// g-th orientation of the output is the correlation of the input with the
// g-rotated/mirrored filter.
template <typename T>
void build_lift_wall(const Tensor<T>& w, std::vector<T>& wall) {
  const int Cout = w.dim(0), Cin = w.dim(1), k = w.dim(2);
  const auto perms = kernel_perms(k);
  const int64_t kk = static_cast<int64_t>(k) * k;
  const int64_t K = Cin * kk;
  wall.assign(static_cast<size_t>(Cout) * kGroupSize * K, T(0));
  for (int co = 0; co < Cout; ++co) {
    for (int g = 0; g < kGroupSize; ++g) {
      T* row = wall.data() + (static_cast<int64_t>(co) * kGroupSize + g) * K;
      const auto& perm = perms[static_cast<size_t>(g)];
      for (int ci = 0; ci < Cin; ++ci) {
        const T* src = w.data() + (static_cast<int64_t>(co) * Cin + ci) * kk;
        T* dst = row + static_cast<int64_t>(ci) * kk;
        for (int64_t p = 0; p < kk; ++p) dst[perm[static_cast<size_t>(p)]] = src[p];
      }
    }
  }
}

template <typename T>
void fold_lift_wall_grad(const std::vector<T>& dwall, Tensor<T>& dw) {
  const int Cout = dw.dim(0), Cin = dw.dim(1), k = dw.dim(2);
  const auto perms = kernel_perms(k);
  const int64_t kk = static_cast<int64_t>(k) * k;
  const int64_t K = Cin * kk;
  for (int co = 0; co < Cout; ++co) {
    for (int g = 0; g < kGroupSize; ++g) {
      const T* row = dwall.data() + (static_cast<int64_t>(co) * kGroupSize + g) * K;
      const auto& perm = perms[static_cast<size_t>(g)];
      for (int ci = 0; ci < Cin; ++ci) {
        const T* src = row + static_cast<int64_t>(ci) * kk;
        T* dst = dw.data() + (static_cast<int64_t>(co) * Cin + ci) * kk;
        for (int64_t p = 0; p < kk; ++p) dst[p] += src[perm[static_cast<size_t>(p)]];
      }
    }
  }
}

// Expanded kernel for the group convolution. For output orientation g the
// filter applied to input orientation slot h is the stored slice for
// orientation g^-1*h, moved spatially by g. Row (co*8 + g), column layout
// ((ci*8 + h)*k + qr)*k + qc matching im2col over the flattened [Cin*8]
// input channels.
template <typename T>
void build_group_wall(const Tensor<T>& w, std::vector<T>& wall) {
  const int Cout = w.dim(0), Cin = w.dim(1), k = w.dim(3);
  const auto perms = kernel_perms(k);
  const int64_t kk = static_cast<int64_t>(k) * k;
  const int64_t K = static_cast<int64_t>(Cin) * kGroupSize * kk;
  wall.assign(static_cast<size_t>(Cout) * kGroupSize * K, T(0));
  for (int g = 0; g < kGroupSize; ++g) {
    const GroupElement ginv = inverse(element_from_index(g));
    const auto& perm = perms[static_cast<size_t>(g)];
    std::array<int, kGroupSize> src_orient{};
    for (int h = 0; h < kGroupSize; ++h) {
      src_orient[static_cast<size_t>(h)] = index_of(compose(ginv, element_from_index(h)));
    }
    for (int co = 0; co < Cout; ++co) {
      T* row = wall.data() + (static_cast<int64_t>(co) * kGroupSize + g) * K;
      for (int ci = 0; ci < Cin; ++ci) {
        for (int h = 0; h < kGroupSize; ++h) {
          const T* src = w.data() +
                         ((static_cast<int64_t>(co) * Cin + ci) * kGroupSize + src_orient[static_cast<size_t>(h)]) * kk;
          T* dst = row + (static_cast<int64_t>(ci) * kGroupSize + h) * kk;
          for (int64_t p = 0; p < kk; ++p) dst[perm[static_cast<size_t>(p)]] = src[p];
        }
      }
    }
  }
}

template <typename T>
void fold_group_wall_grad(const std::vector<T>& dwall, Tensor<T>& dw) {
  const int Cout = dw.dim(0), Cin = dw.dim(1), k = dw.dim(3);
  const auto perms = kernel_perms(k);
  const int64_t kk = static_cast<int64_t>(k) * k;
  const int64_t K = static_cast<int64_t>(Cin) * kGroupSize * kk;
  for (int g = 0; g < kGroupSize; ++g) {
    const GroupElement ginv = inverse(element_from_index(g));
    const auto& perm = perms[static_cast<size_t>(g)];
    std::array<int, kGroupSize> src_orient{};
    for (int h = 0; h < kGroupSize; ++h) {
      src_orient[static_cast<size_t>(h)] = index_of(compose(ginv, element_from_index(h)));
    }
    for (int co = 0; co < Cout; ++co) {
      const T* row = dwall.data() + (static_cast<int64_t>(co) * kGroupSize + g) * K;
      for (int ci = 0; ci < Cin; ++ci) {
        for (int h = 0; h < kGroupSize; ++h) {
          T* dst = dw.data() +
                   ((static_cast<int64_t>(co) * Cin + ci) * kGroupSize + src_orient[static_cast<size_t>(h)]) * kk;
          const T* src = row + (static_cast<int64_t>(ci) * kGroupSize + h) * kk;
          for (int64_t p = 0; p < kk; ++p) dst[p] += src[perm[static_cast<size_t>(p)]];
        }
      }
    }
  }
}

template <typename T>
std::vector<T>& col_scratch() {
  thread_local std::vector<T> buf;
  return buf;
}

// y[b] = wall (M x K) * im2col(x[b]) (K x N) for every sample.
template <typename T>
void conv_forward_core(const T* x, int B, int Cin, int H, int W, const T* wall, int M, int k, int pad,
                       T* y) {
  const int Ho = H + 2 * pad - k + 1, Wo = W + 2 * pad - k + 1;
  const int64_t K = static_cast<int64_t>(Cin) * k * k;
  const int64_t N = static_cast<int64_t>(Ho) * Wo;
  auto& col = col_scratch<T>();
  col.resize(static_cast<size_t>(K * N));
  for (int b = 0; b < B; ++b) {
    im2col(x + static_cast<int64_t>(b) * Cin * H * W, Cin, H, W, k, pad, col.data());
    blas::gemm(false, false, M, static_cast<int>(N), static_cast<int>(K), T(1), wall, static_cast<int>(K),
               col.data(), static_cast<int>(N), T(0), y + static_cast<int64_t>(b) * M * N, static_cast<int>(N));
  }
}

// dwall += sum_b dy[b] * im2col(x[b])^T ; dx[b] += wall^T * dy[b] (via col2im).
template <typename T>
void conv_backward_core(const T* x, const T* dy, int B, int Cin, int H, int W, const T* wall, int M,
                        int k, int pad, T* dwall, T* dx) {
  const int Ho = H + 2 * pad - k + 1, Wo = W + 2 * pad - k + 1;
  const int64_t K = static_cast<int64_t>(Cin) * k * k;
  const int64_t N = static_cast<int64_t>(Ho) * Wo;
  auto& col = col_scratch<T>();
  col.resize(static_cast<size_t>(K * N));
  std::vector<T> dcol(static_cast<size_t>(K * N));
  for (int b = 0; b < B; ++b) {
    const T* dyb = dy + static_cast<int64_t>(b) * M * N;
    im2col(x + static_cast<int64_t>(b) * Cin * H * W, Cin, H, W, k, pad, col.data());
    blas::gemm(false, true, M, static_cast<int>(K), static_cast<int>(N), T(1), dyb, static_cast<int>(N),
               col.data(), static_cast<int>(N), T(1), dwall, static_cast<int>(K));
    blas::gemm(true, false, static_cast<int>(K), static_cast<int>(N), M, T(1), wall, static_cast<int>(K),
               dyb, static_cast<int>(N), T(0), dcol.data(), static_cast<int>(N));
    col2im_add(dcol.data(), Cin, H, W, k, pad, dx + static_cast<int64_t>(b) * Cin * H * W);
  }
}

}  // namespace detail

template <typename T>
struct ConvGrads {
  Tensor<T> dx, dw, dbias;  // dbias empty when the layer has no bias
};

// ---- plain planar convolution: x [B,Cin,H,W], w [Cout,Cin,k,k] ----

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias, int stride, int pad) {
  GERSEG_CHECK_SHAPE(x.ndim() == 4, "conv2d: input must be [B,Cin,H,W], got " + shape_string(x));
  GERSEG_CHECK_SHAPE(w.ndim() == 4, "conv2d: weight must be [Cout,Cin,k,k], got " + shape_string(w));
  GERSEG_CHECK_SHAPE(w.dim(2) == w.dim(3), "conv2d: kernel must be square");
  GERSEG_CHECK_SHAPE(x.dim(1) == w.dim(1),
                     "conv2d: channel mismatch, input " + shape_string(x) + " vs weight " + shape_string(w));
  const int k = w.dim(2), Cout = w.dim(0);
  detail::check_conv_geometry(k, stride, pad, x.dim(2), x.dim(3));
  GERSEG_CHECK_SHAPE(bias.numel() == 0 || bias.numel() == Cout, "conv2d: bias must have Cout entries");

  const Tensor<T> xs = ops::block_mean(x, stride);
  const int B = xs.dim(0), Cin = xs.dim(1), H = xs.dim(2), W = xs.dim(3);
  const int Ho = H + 2 * pad - k + 1, Wo = W + 2 * pad - k + 1;
  Tensor<T> y({B, Cout, Ho, Wo});
  detail::conv_forward_core(xs.data(), B, Cin, H, W, w.data(), Cout, k, pad, y.data());
  if (bias.numel() != 0) {
    const int64_t n = static_cast<int64_t>(Ho) * Wo;
    for (int b = 0; b < B; ++b) {
      for (int co = 0; co < Cout; ++co) {
        T* dst = y.data() + (static_cast<int64_t>(b) * Cout + co) * n;
        for (int64_t i = 0; i < n; ++i) dst[i] += bias[co];
      }
    }
  }
  return y;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& dy, const Tensor<T>& x, const Tensor<T>& w, bool has_bias,
                             int stride, int pad) {
  const int k = w.dim(2), Cout = w.dim(0);
  const Tensor<T> xs = ops::block_mean(x, stride);
  const int B = xs.dim(0), Cin = xs.dim(1), H = xs.dim(2), W = xs.dim(3);
  const int Ho = H + 2 * pad - k + 1, Wo = W + 2 * pad - k + 1;
  GERSEG_CHECK_SHAPE(dy.ndim() == 4 && dy.dim(0) == B && dy.dim(1) == Cout && dy.dim(2) == Ho && dy.dim(3) == Wo,
                     "conv2d_backward: upstream gradient shape mismatch");
  ConvGrads<T> g{Tensor<T>(xs.shape()), Tensor<T>(w.shape()), Tensor<T>()};
  detail::conv_backward_core(xs.data(), dy.data(), B, Cin, H, W, w.data(), Cout, k, pad, g.dw.data(),
                             g.dx.data());
  if (stride > 1) g.dx = ops::block_mean_backward(g.dx, x.shape(), stride);
  if (has_bias) {
    g.dbias = Tensor<T>({Cout});
    const int64_t n = static_cast<int64_t>(Ho) * Wo;
    for (int b = 0; b < B; ++b) {
      for (int co = 0; co < Cout; ++co) {
        const T* src = dy.data() + (static_cast<int64_t>(b) * Cout + co) * n;
        T acc = T(0);
        for (int64_t i = 0; i < n; ++i) acc += src[i];
        g.dbias[co] += acc;
      }
    }
  }
  return g;
}

// ---- lifting convolution: x [B,Cin,H,W], w [Cout,Cin,k,k] -> [B,Cout,8,Ho,Wo] ----

template <typename T>
Tensor<T> lift_conv(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias, int stride, int pad) {
  GERSEG_CHECK_SHAPE(x.ndim() == 4, "lift_conv: input must be [B,Cin,H,W], got " + shape_string(x));
  GERSEG_CHECK_SHAPE(w.ndim() == 4, "lift_conv: weight must be [Cout,Cin,k,k], got " + shape_string(w));
  GERSEG_CHECK_SHAPE(w.dim(2) == w.dim(3), "lift_conv: kernel must be square");
  GERSEG_CHECK_SHAPE(x.dim(1) == w.dim(1),
                     "lift_conv: channel mismatch, input " + shape_string(x) + " vs weight " + shape_string(w));
  const int k = w.dim(2), Cout = w.dim(0);
  detail::check_conv_geometry(k, stride, pad, x.dim(2), x.dim(3));
  GERSEG_CHECK_SHAPE(bias.numel() == 0 || bias.numel() == Cout, "lift_conv: bias must have Cout entries");

  const Tensor<T> xs = ops::block_mean(x, stride);
  const int B = xs.dim(0), Cin = xs.dim(1), H = xs.dim(2), W = xs.dim(3);
  const int Ho = H + 2 * pad - k + 1, Wo = W + 2 * pad - k + 1;
  std::vector<T> wall;
  detail::build_lift_wall(w, wall);
  Tensor<T> y({B, Cout, kGroupSize, Ho, Wo});
  detail::conv_forward_core(xs.data(), B, Cin, H, W, wall.data(), Cout * kGroupSize, k, pad, y.data());
  if (bias.numel() != 0) {
    // One bias per output channel, shared by all eight orientations; a
    // per-orientation bias would not transform correctly.
    const int64_t n = static_cast<int64_t>(Ho) * Wo;
    for (int64_t bc = 0; bc < static_cast<int64_t>(B) * Cout; ++bc) {
      T* dst = y.data() + bc * kGroupSize * n;
      const T bv = bias[static_cast<int>(bc % Cout)];
      for (int64_t i = 0; i < kGroupSize * n; ++i) dst[i] += bv;
    }
  }
  return y;
}

template <typename T>
ConvGrads<T> lift_conv_backward(const Tensor<T>& dy, const Tensor<T>& x, const Tensor<T>& w, bool has_bias,
                                int stride, int pad) {
  const int k = w.dim(2), Cout = w.dim(0);
  const Tensor<T> xs = ops::block_mean(x, stride);
  const int B = xs.dim(0), Cin = xs.dim(1), H = xs.dim(2), W = xs.dim(3);
  const int Ho = H + 2 * pad - k + 1, Wo = W + 2 * pad - k + 1;
  GERSEG_CHECK_SHAPE(dy.ndim() == 5 && dy.dim(0) == B && dy.dim(1) == Cout && dy.dim(2) == kGroupSize &&
                         dy.dim(3) == Ho && dy.dim(4) == Wo,
                     "lift_conv_backward: upstream gradient shape mismatch");
  std::vector<T> wall;
  detail::build_lift_wall(w, wall);
  std::vector<T> dwall(wall.size(), T(0));
  ConvGrads<T> g{Tensor<T>(xs.shape()), Tensor<T>(w.shape()), Tensor<T>()};
  detail::conv_backward_core(xs.data(), dy.data(), B, Cin, H, W, wall.data(), Cout * kGroupSize, k, pad,
                             dwall.data(), g.dx.data());
  detail::fold_lift_wall_grad(dwall, g.dw);
  if (stride > 1) g.dx = ops::block_mean_backward(g.dx, x.shape(), stride);
  if (has_bias) {
    g.dbias = Tensor<T>({Cout});
    const int64_t n = static_cast<int64_t>(Ho) * Wo * kGroupSize;
    for (int64_t bc = 0; bc < static_cast<int64_t>(B) * Cout; ++bc) {
      const T* src = dy.data() + bc * n;
      T acc = T(0);
      for (int64_t i = 0; i < n; ++i) acc += src[i];
      g.dbias[static_cast<int>(bc % Cout)] += acc;
    }
  }
  return g;
}

// ---- group convolution: x [B,Cin,8,H,W], w [Cout,Cin,8,k,k] -> [B,Cout,8,Ho,Wo] ----

template <typename T>
Tensor<T> group_conv(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias, int stride, int pad) {
  GERSEG_CHECK_SHAPE(x.ndim() == 5, "group_conv: input must be [B,Cin,8,H,W], got " + shape_string(x));
  GERSEG_CHECK_SHAPE(x.dim(2) == kGroupSize, "group_conv: input orientation dimension must be 8");
  GERSEG_CHECK_SHAPE(w.ndim() == 5, "group_conv: weight must be [Cout,Cin,8,k,k], got " + shape_string(w));
  GERSEG_CHECK_SHAPE(w.dim(2) == kGroupSize, "group_conv: weight orientation dimension must be 8");
  GERSEG_CHECK_SHAPE(w.dim(3) == w.dim(4), "group_conv: kernel must be square");
  GERSEG_CHECK_SHAPE(x.dim(1) == w.dim(1),
                     "group_conv: channel mismatch, input " + shape_string(x) + " vs weight " + shape_string(w));
  const int k = w.dim(3), Cout = w.dim(0);
  detail::check_conv_geometry(k, stride, pad, x.dim(3), x.dim(4));
  GERSEG_CHECK_SHAPE(bias.numel() == 0 || bias.numel() == Cout, "group_conv: bias must have Cout entries");

  const Tensor<T> xs = ops::block_mean(x, stride);
  const int B = xs.dim(0), Cin = xs.dim(1), H = xs.dim(3), W = xs.dim(4);
  const int Ho = H + 2 * pad - k + 1, Wo = W + 2 * pad - k + 1;
  std::vector<T> wall;
  detail::build_group_wall(w, wall);
  Tensor<T> y({B, Cout, kGroupSize, Ho, Wo});
  // The [Cin,8] axes are contiguous, so each sample is a [Cin*8, H, W] plane
  // stack as far as im2col is concerned.
  detail::conv_forward_core(xs.data(), B, Cin * kGroupSize, H, W, wall.data(), Cout * kGroupSize, k, pad,
                            y.data());
  if (bias.numel() != 0) {
    const int64_t n = static_cast<int64_t>(Ho) * Wo;
    for (int64_t bc = 0; bc < static_cast<int64_t>(B) * Cout; ++bc) {
      T* dst = y.data() + bc * kGroupSize * n;
      const T bv = bias[static_cast<int>(bc % Cout)];
      for (int64_t i = 0; i < kGroupSize * n; ++i) dst[i] += bv;
    }
  }
  return y;
}

template <typename T>
ConvGrads<T> group_conv_backward(const Tensor<T>& dy, const Tensor<T>& x, const Tensor<T>& w,
                                 bool has_bias, int stride, int pad) {
  const int k = w.dim(3), Cout = w.dim(0);
  const Tensor<T> xs = ops::block_mean(x, stride);
  const int B = xs.dim(0), Cin = xs.dim(1), H = xs.dim(3), W = xs.dim(4);
  const int Ho = H + 2 * pad - k + 1, Wo = W + 2 * pad - k + 1;
  GERSEG_CHECK_SHAPE(dy.ndim() == 5 && dy.dim(0) == B && dy.dim(1) == Cout && dy.dim(2) == kGroupSize &&
                         dy.dim(3) == Ho && dy.dim(4) == Wo,
                     "group_conv_backward: upstream gradient shape mismatch");
  std::vector<T> wall;
  detail::build_group_wall(w, wall);
  std::vector<T> dwall(wall.size(), T(0));
  ConvGrads<T> g{Tensor<T>(xs.shape()), Tensor<T>(w.shape()), Tensor<T>()};
  detail::conv_backward_core(xs.data(), dy.data(), B, Cin * kGroupSize, H, W, wall.data(),
                             Cout * kGroupSize, k, pad, dwall.data(), g.dx.data());
  detail::fold_group_wall_grad(dwall, g.dw);
  if (stride > 1) g.dx = ops::block_mean_backward(g.dx, x.shape(), stride);
  if (has_bias) {
    g.dbias = Tensor<T>({Cout});
    const int64_t n = static_cast<int64_t>(Ho) * Wo * kGroupSize;
    for (int64_t bc = 0; bc < static_cast<int64_t>(B) * Cout; ++bc) {
      const T* src = dy.data() + bc * n;
      T acc = T(0);
      for (int64_t i = 0; i < n; ++i) acc += src[i];
      g.dbias[static_cast<int>(bc % Cout)] += acc;
    }
  }
  return g;
}

}  // namespace gerseg::ops
