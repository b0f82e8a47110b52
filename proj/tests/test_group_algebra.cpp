#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <random>
#include <set>

#include "gerseg/group.hpp"
#include "oracles.hpp"

using namespace gerseg;

namespace {

GroupElement el(int idx) { return element_from_index(idx); }

}  // namespace

TEST_CASE("canonical matrices") {
  CHECK(group_matrix(make_element(0, 0)) == Mat2{1, 0, 0, 1});
  CHECK(group_matrix(make_element(0, 1)) == Mat2{0, -1, 1, 0});
  // every entry in {-1,0,1}, determinant +1 for rotations, -1 with a mirror
  for (int i = 0; i < kGroupSize; ++i) {
    const Mat2 m = group_matrix(el(i));
    for (int v : m) CHECK(std::abs(v) <= 1);
    const int det = m[0] * m[3] - m[1] * m[2];
    CHECK(det == (i < 4 ? 1 : -1));
  }
  // all 8 matrices distinct
  std::set<Mat2> seen;
  for (int i = 0; i < kGroupSize; ++i) seen.insert(group_matrix(el(i)));
  CHECK(seen.size() == 8);
}

TEST_CASE("index round trip") {
  for (int i = 0; i < kGroupSize; ++i) CHECK(index_of(el(i)) == i);
  CHECK_THROWS_AS(element_from_index(8), std::invalid_argument);
  CHECK_THROWS_AS(element_from_index(-1), std::invalid_argument);
  CHECK_THROWS_AS(make_element(2, 0), std::invalid_argument);
  CHECK_THROWS_AS(make_element(0, 4), std::invalid_argument);
}

TEST_CASE("group axioms, exhaustive") {
  const auto t0 = std::chrono::steady_clock::now();

  // closure
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) {
      const int c = index_of(compose(el(a), el(b)));
      CHECK(c >= 0);
      CHECK(c < 8);
    }
  // associativity over all 512 triples
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b)
      for (int c = 0; c < 8; ++c) {
        const GroupElement lhs = compose(compose(el(a), el(b)), el(c));
        const GroupElement rhs = compose(el(a), compose(el(b), el(c)));
        CHECK(lhs == rhs);
      }
  // identity
  for (int a = 0; a < 8; ++a) {
    CHECK(compose(identity_element(), el(a)) == el(a));
    CHECK(compose(el(a), identity_element()) == el(a));
  }
  // inverses, both sides
  for (int a = 0; a < 8; ++a) {
    CHECK(compose(el(a), inverse(el(a))) == identity_element());
    CHECK(compose(inverse(el(a)), el(a)) == identity_element());
  }
  // each row and column of the Cayley table is a permutation
  for (int a = 0; a < 8; ++a) {
    std::set<int> row, col;
    for (int b = 0; b < 8; ++b) {
      row.insert(index_of(compose(el(a), el(b))));
      col.insert(index_of(compose(el(b), el(a))));
    }
    CHECK(row.size() == 8);
    CHECK(col.size() == 8);
  }

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(secs < 1.0);
}

TEST_CASE("composition and inverse examples") {
  CHECK(compose(make_element(0, 1), make_element(0, 1)) == make_element(0, 2));
  CHECK(compose(make_element(1, 0), make_element(1, 0)) == identity_element());
  CHECK(compose(make_element(0, 1), make_element(1, 0)) == make_element(1, 3));
  CHECK(inverse(identity_element()) == identity_element());
  CHECK(inverse(make_element(0, 1)) == make_element(0, 3));
  for (int k = 0; k < 4; ++k) CHECK(inverse(make_element(1, k)) == make_element(1, k));
}

TEST_CASE("composition matches the oracle matrices") {
  for (int a = 0; a < 8; ++a) {
    for (int b = 0; b < 8; ++b) {
      CHECK(index_of(compose(el(a), el(b))) == oracle::compose_idx(a, b));
    }
    CHECK(index_of(inverse(el(a))) == oracle::inverse_idx(a));
  }
}

TEST_CASE("act_coord examples") {
  CHECK(act_coord(identity_element(), Coord{1, 2}, 3, 3) == Coord{1, 2});
  CHECK(act_coord(make_element(0, 1), Coord{0, 0}, 3, 3) == Coord{2, 0});
  CHECK(act_coord(make_element(1, 0), Coord{0, 0}, 3, 4) == Coord{0, 3});
}

TEST_CASE("act_coord is a grid permutation, odd and even sizes") {
  for (const int n : {3, 4, 5, 6}) {
    for (int g = 0; g < 8; ++g) {
      std::set<std::pair<int, int>> image;
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
          const Coord q = act_coord(el(g), Coord{r, c}, n, n);
          CHECK(q.row >= 0);
          CHECK(q.row < n);
          CHECK(q.col >= 0);
          CHECK(q.col < n);
          image.insert({q.row, q.col});
        }
      CHECK(image.size() == static_cast<size_t>(n) * n);
    }
  }
}

TEST_CASE("act_coord composes") {
  for (const int n : {4, 5}) {
    for (int a = 0; a < 8; ++a)
      for (int b = 0; b < 8; ++b)
        for (int r = 0; r < n; ++r)
          for (int c = 0; c < n; ++c) {
            const Coord one = act_coord(el(a), act_coord(el(b), Coord{r, c}, n, n), n, n);
            const Coord two = act_coord(compose(el(a), el(b)), Coord{r, c}, n, n);
            CHECK(one == two);
          }
  }
}

TEST_CASE("act_coord rejects bad input") {
  CHECK_THROWS_AS(act_coord(make_element(0, 1), Coord{0, 0}, 3, 4), ShapeError);
  CHECK_THROWS_AS(act_coord(make_element(0, 3), Coord{0, 0}, 2, 5), ShapeError);
  CHECK_NOTHROW(act_coord(make_element(0, 2), Coord{0, 0}, 3, 4));  // 180 degrees is fine
  CHECK_THROWS_AS(act_coord(identity_element(), Coord{3, 0}, 3, 4), std::invalid_argument);
}

TEST_CASE("transform_plane quarter turn example") {
  Tensor<double> p({3, 3});
  for (int i = 0; i < 9; ++i) p[i] = i + 1;
  const Tensor<double> q = transform_plane(make_element(0, 1), p);
  const double want[9] = {3, 6, 9, 2, 5, 8, 1, 4, 7};
  for (int i = 0; i < 9; ++i) CHECK(q[i] == want[i]);
}

TEST_CASE("transform_plane round trips and matches the oracle") {
  std::mt19937 rng(11);
  for (const int n : {4, 5}) {
    const auto x = random_uniform<double>({2, n, n}, rng);
    for (int g = 0; g < 8; ++g) {
      const auto back = transform_plane(el(g), transform_plane(inverse(el(g)), x));
      CHECK(max_rel_err(back, x) == 0.0);
      const auto ours = transform_plane(el(g), x);
      const auto ref = oracle::transform_plane(g, x);
      CHECK(max_rel_err(ours, ref) == 0.0);
    }
  }
  // mirrors on a non-square grid
  const auto y = random_uniform<double>({3, 4}, rng);
  for (const int g : {0, 2, 4, 6}) {
    CHECK(max_rel_err(transform_plane(el(g), y), oracle::transform_plane(g, y)) == 0.0);
  }
  CHECK_THROWS_AS(transform_plane(make_element(0, 1), y), ShapeError);
}

TEST_CASE("left_perm structure") {
  const auto id = left_perm(identity_element());
  for (int h = 0; h < 8; ++h) CHECK(id[static_cast<size_t>(h)] == h);

  // definition, bijectivity
  for (int g = 0; g < 8; ++g) {
    const auto p = left_perm(el(g));
    std::set<int> seen(p.begin(), p.end());
    CHECK(seen.size() == 8);
    for (int h = 0; h < 8; ++h) CHECK(p[static_cast<size_t>(h)] == index_of(compose(el(g), el(h))));
  }

  // homomorphism over all 64 pairs
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) {
      const auto pa = left_perm(el(a));
      const auto pb = left_perm(el(b));
      const auto pab = left_perm(compose(el(a), el(b)));
      for (int h = 0; h < 8; ++h)
        CHECK(pab[static_cast<size_t>(h)] == pa[static_cast<size_t>(pb[static_cast<size_t>(h)])]);
    }

  // half turn shifts the rotation block by two
  const auto p = left_perm(make_element(0, 2));
  CHECK(p[0] == 2);
  CHECK(p[1] == 3);
  CHECK(p[2] == 0);
  CHECK(p[3] == 1);
}

TEST_CASE("transform_group_feature relabels orientations and composes") {
  std::mt19937 rng(5);
  const auto f = random_uniform<double>({2, 8, 4, 4}, rng);

  for (int g = 0; g < 8; ++g) {
    const auto got = transform_group_feature(el(g), f);
    // slot-by-slot: slice h of f lands spatially transformed in slot g*h
    const auto perm = left_perm(el(g));
    for (int b = 0; b < 2; ++b)
      for (int h = 0; h < 8; ++h) {
        Tensor<double> src({4, 4}), dst({4, 4});
        for (int i = 0; i < 16; ++i) {
          src[i] = f[(static_cast<int64_t>(b) * 8 + h) * 16 + i];
          dst[i] = got[(static_cast<int64_t>(b) * 8 + perm[static_cast<size_t>(h)]) * 16 + i];
        }
        CHECK(max_rel_err(dst, transform_plane(el(g), src)) == 0.0);
      }
  }

  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) {
      const auto one = transform_group_feature(el(a), transform_group_feature(el(b), f));
      const auto two = transform_group_feature(compose(el(a), el(b)), f);
      CHECK(max_rel_err(one, two) == 0.0);
    }

  Tensor<double> bad({2, 7, 4, 4});
  CHECK_THROWS_AS(transform_group_feature(identity_element(), bad), ShapeError);
}

TEST_CASE("shift_plane moves content and zero-fills") {
  Tensor<double> p({2, 2});
  p[0] = 1;
  p[1] = 2;
  p[2] = 3;
  p[3] = 4;
  const auto s = shift_plane(p, 1, 0);
  CHECK(s[0] == 0.0);
  CHECK(s[1] == 0.0);
  CHECK(s[2] == 1.0);
  CHECK(s[3] == 2.0);
  const auto gone = shift_plane(p, 5, 5);
  CHECK(max_abs(gone) == 0.0);
}
