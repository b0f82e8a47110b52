#include "gerseg/group.hpp"

namespace gerseg {
namespace {

constexpr Mat2 kIdentity{1, 0, 0, 1};
constexpr Mat2 kQuarterTurn{0, -1, 1, 0};  // (row, col) -> (-col, row)
constexpr Mat2 kMirror{1, 0, 0, -1};       // (row, col) -> (row, -col)

Mat2 mat_mul(const Mat2& a, const Mat2& b) {
  return Mat2{a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
              a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}

Mat2 mat_transpose(const Mat2& a) { return Mat2{a[0], a[2], a[1], a[3]}; }

struct Tables {
  std::array<Mat2, kGroupSize> matrix;
  std::array<std::array<int, kGroupSize>, kGroupSize> compose;
  std::array<int, kGroupSize> inverse;
};

int match_matrix(const std::array<Mat2, kGroupSize>& mats, const Mat2& m) {
  for (int i = 0; i < kGroupSize; ++i) {
    if (mats[static_cast<size_t>(i)] == m) return i;
  }
  // Unreachable for products of group matrices; guards table construction.
  throw std::logic_error("matrix is not a symmetry of the square");
}

// All derived structure (composition, inverses) comes from multiplying the
// eight canonical matrices and matching the result back, rather than from
// hand-written index arithmetic.
Tables build_tables() {
  Tables t;
  for (int i = 0; i < kGroupSize; ++i) {
    Mat2 m = kIdentity;
    const GroupElement g = element_from_index(i);
    for (int r = 0; r < g.rot; ++r) m = mat_mul(kQuarterTurn, m);
    if (g.reflect) m = mat_mul(kMirror, m);
    t.matrix[static_cast<size_t>(i)] = m;
  }
  for (int a = 0; a < kGroupSize; ++a) {
    for (int b = 0; b < kGroupSize; ++b) {
      t.compose[static_cast<size_t>(a)][static_cast<size_t>(b)] =
          match_matrix(t.matrix, mat_mul(t.matrix[static_cast<size_t>(a)], t.matrix[static_cast<size_t>(b)]));
    }
    // Orthogonal matrices invert by transposition.
    t.inverse[static_cast<size_t>(a)] = match_matrix(t.matrix, mat_transpose(t.matrix[static_cast<size_t>(a)]));
  }
  return t;
}

const Tables& tables() {
  static const Tables t = build_tables();
  return t;
}

}  // namespace

GroupElement make_element(int reflect, int rot) {
  GERSEG_CHECK(reflect == 0 || reflect == 1, "group element: reflect must be 0 or 1");
  GERSEG_CHECK(rot >= 0 && rot <= 3, "group element: rot must be in 0..3");
  return GroupElement{reflect, rot};
}

GroupElement element_from_index(int idx) {
  GERSEG_CHECK(idx >= 0 && idx < kGroupSize, "group element index must be in 0..7");
  return GroupElement{idx / 4, idx % 4};
}

bool operator==(GroupElement a, GroupElement b) {
  return a.reflect == b.reflect && a.rot == b.rot;
}

bool operator==(Coord a, Coord b) { return a.row == b.row && a.col == b.col; }

Mat2 group_matrix(GroupElement g) {
  make_element(g.reflect, g.rot);  // validate
  return tables().matrix[static_cast<size_t>(index_of(g))];
}

GroupElement compose(GroupElement a, GroupElement b) {
  make_element(a.reflect, a.rot);
  make_element(b.reflect, b.rot);
  return element_from_index(tables().compose[static_cast<size_t>(index_of(a))][static_cast<size_t>(index_of(b))]);
}

GroupElement inverse(GroupElement g) {
  make_element(g.reflect, g.rot);
  return element_from_index(tables().inverse[static_cast<size_t>(index_of(g))]);
}

GroupElement identity_element() { return GroupElement{0, 0}; }

Coord act_coord(GroupElement g, Coord p, int H, int W) {
  GERSEG_CHECK(H > 0 && W > 0, "act_coord: grid dimensions must be positive");
  if (g.rot % 2 == 1) {
    GERSEG_CHECK_SHAPE(H == W, "act_coord: quarter turns need a square grid");
  }
  GERSEG_CHECK(p.row >= 0 && p.row < H && p.col >= 0 && p.col < W, "act_coord: pixel out of range");
  const Mat2 m = group_matrix(g);
  // Doubled coordinates keep the center integral for even sizes:
  // 2*p - (n-1) runs symmetrically over ...,-3,-1,1,3,... or ...,-2,0,2,...
  const int dr = 2 * p.row - (H - 1);
  const int dc = 2 * p.col - (W - 1);
  const int nr = m[0] * dr + m[1] * dc;
  const int nc = m[2] * dr + m[3] * dc;
  return Coord{(nr + (H - 1)) / 2, (nc + (W - 1)) / 2};
}

std::array<int, kGroupSize> left_perm(GroupElement g) {
  std::array<int, kGroupSize> perm{};
  for (int h = 0; h < kGroupSize; ++h) {
    perm[static_cast<size_t>(h)] = index_of(compose(g, element_from_index(h)));
  }
  return perm;
}

namespace detail {
void check_plane_transform(GroupElement g, int H, int W) {
  if (g.rot % 2 == 1) {
    GERSEG_CHECK_SHAPE(H == W, "plane transform: quarter turns need square planes");
  }
}
}  // namespace detail

}  // namespace gerseg
