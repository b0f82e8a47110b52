#pragma once

#include <array>
#include <cstdint>

#include "gerseg/tensor.hpp"

namespace gerseg {

// The symmetry group of the square: four rotations, with and without a
// mirror. Elements are kept in the canonical form (reflect, rot) meaning
// "rotate rot quarter turns, then mirror if reflect is set", i.e. the
// element's matrix is M^reflect * R^rot.
struct GroupElement {
  int reflect = 0;  // 0 or 1
  int rot = 0;      // quarter turns, 0..3
};

inline constexpr int kGroupSize = 8;

// Integer 2x2 matrix acting on centered (row, col) column vectors.
using Mat2 = std::array<int, 4>;  // row-major: [a b; c d]

GroupElement make_element(int reflect, int rot);

inline int index_of(GroupElement g) { return 4 * g.reflect + g.rot; }
GroupElement element_from_index(int idx);

bool operator==(GroupElement a, GroupElement b);

// R is the quarter-turn that maps (row, col) -> (-col, row) in centered
// coordinates; M mirrors left-right by negating the column axis. Every
// element's matrix is orthogonal with determinant +1 (rotations) or -1
// (roto-reflections).
Mat2 group_matrix(GroupElement g);

GroupElement compose(GroupElement a, GroupElement b);  // acts as "a after b"
GroupElement inverse(GroupElement g);
GroupElement identity_element();

struct Coord {
  int row = 0;
  int col = 0;
};

bool operator==(Coord a, Coord b);

// Applies g to a pixel index of an H x W grid. The action is about the grid
// center, so it is an exact permutation of pixels for both odd and even
// sizes (internally coordinates are doubled to keep the center integral).
// Quarter turns swap the axes and therefore require H == W.
Coord act_coord(GroupElement g, Coord p, int H, int W);

// Permutation of orientation slots under left multiplication:
// perm[index_of(h)] == index_of(compose(g, h)).
std::array<int, kGroupSize> left_perm(GroupElement g);

namespace detail {
void check_plane_transform(GroupElement g, int H, int W);
}

// out[act_coord(g, p)] = plane[p], applied to the trailing two dimensions of
// f (leading dimensions are carried along unchanged). A pure permutation of
// entries, so it is exact in every dtype.
template <typename T>
Tensor<T> transform_plane(GroupElement g, const Tensor<T>& f) {
  GERSEG_CHECK_SHAPE(f.ndim() >= 2, "transform_plane: tensor must have at least 2 dims");
  const int H = f.dim(-2), W = f.dim(-1);
  detail::check_plane_transform(g, H, W);
  Tensor<T> out(f.shape());
  const int64_t planes = f.numel() / (static_cast<int64_t>(H) * W);
  // Precompute the pixel permutation once, then apply it per plane.
  std::vector<int64_t> dst(static_cast<size_t>(H) * W);
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      const Coord q = act_coord(g, Coord{r, c}, H, W);
      dst[static_cast<size_t>(r) * W + c] = static_cast<int64_t>(q.row) * W + q.col;
    }
  }
  const int64_t hw = static_cast<int64_t>(H) * W;
  for (int64_t p = 0; p < planes; ++p) {
    const T* src = f.data() + p * hw;
    T* d = out.data() + p * hw;
    for (int64_t i = 0; i < hw; ++i) d[dst[static_cast<size_t>(i)]] = src[i];
  }
  return out;
}

// Transforms a stack of oriented feature planes: the trailing dims are
// (orientation=8, H, W). Each plane is moved spatially by g and its
// orientation slot is relabelled h -> g*h, which is exactly how features
// produced by the lifting and group convolutions transform when their input
// is transformed by g.
template <typename T>
Tensor<T> transform_group_feature(GroupElement g, const Tensor<T>& f) {
  GERSEG_CHECK_SHAPE(f.ndim() >= 3, "transform_group_feature: tensor must have at least 3 dims");
  GERSEG_CHECK_SHAPE(f.dim(-3) == kGroupSize,
                     "transform_group_feature: orientation dimension must be 8, got tensor " + shape_string(f));
  const int H = f.dim(-2), W = f.dim(-1);
  detail::check_plane_transform(g, H, W);
  const auto perm = left_perm(g);
  Tensor<T> out(f.shape());
  const int64_t hw = static_cast<int64_t>(H) * W;
  const int64_t stacks = f.numel() / (kGroupSize * hw);

  std::vector<int64_t> dst(static_cast<size_t>(H) * W);
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      const Coord q = act_coord(g, Coord{r, c}, H, W);
      dst[static_cast<size_t>(r) * W + c] = static_cast<int64_t>(q.row) * W + q.col;
    }
  }
  for (int64_t s = 0; s < stacks; ++s) {
    for (int h = 0; h < kGroupSize; ++h) {
      const T* src = f.data() + (s * kGroupSize + h) * hw;
      T* d = out.data() + (s * kGroupSize + perm[static_cast<size_t>(h)]) * hw;
      for (int64_t i = 0; i < hw; ++i) d[dst[static_cast<size_t>(i)]] = src[i];
    }
  }
  return out;
}

// Translates the trailing two dimensions by (dr, dc), filling vacated pixels
// with zero. out[r + dr][c + dc] = f[r][c] wherever that lands in bounds.
template <typename T>
Tensor<T> shift_plane(const Tensor<T>& f, int dr, int dc) {
  GERSEG_CHECK_SHAPE(f.ndim() >= 2, "shift_plane: tensor must have at least 2 dims");
  const int H = f.dim(-2), W = f.dim(-1);
  Tensor<T> out(f.shape());
  const int64_t hw = static_cast<int64_t>(H) * W;
  const int64_t planes = f.numel() / hw;
  for (int64_t p = 0; p < planes; ++p) {
    const T* src = f.data() + p * hw;
    T* d = out.data() + p * hw;
    for (int r = 0; r < H; ++r) {
      const int rr = r + dr;
      if (rr < 0 || rr >= H) continue;
      for (int c = 0; c < W; ++c) {
        const int cc = c + dc;
        if (cc < 0 || cc >= W) continue;
        d[static_cast<int64_t>(rr) * W + cc] = src[static_cast<int64_t>(r) * W + c];
      }
    }
  }
  return out;
}

}  // namespace gerseg
