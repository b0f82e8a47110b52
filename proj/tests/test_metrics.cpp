#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "gerseg/group.hpp"
#include "gerseg/metrics.hpp"
#include "oracles.hpp"

using namespace gerseg;
using namespace gerseg::metrics;

namespace {

Tensor<uint8_t> random_mask(int h, int w, double density, std::mt19937& rng) {
  Tensor<uint8_t> m({h, w});
  std::bernoulli_distribution bit(density);
  for (int64_t i = 0; i < m.numel(); ++i) m[i] = bit(rng) ? 1 : 0;
  return m;
}

Tensor<uint8_t> mask_from(std::initializer_list<std::pair<int, int>> pts, int h, int w) {
  Tensor<uint8_t> m({h, w});
  for (const auto& [r, c] : pts) m.at(r, c) = 1;
  return m;
}

}  // namespace

TEST_CASE("confusion counting") {
  const auto ones = Tensor<uint8_t>::full({2, 2}, 1);
  const auto zeros = Tensor<uint8_t>({2, 2});
  auto c = confusion(ones, ones);
  CHECK(c.tp == 4);
  CHECK(c.fp == 0);
  CHECK(c.fn == 0);
  CHECK(c.tn == 0);

  c = confusion(zeros, ones);
  CHECK(c.fn == 4);
  CHECK(c.tp == 0);

  // 3x3 grid, 4 predicted and 4 true pixels overlapping in 2
  const auto pred = mask_from({{0, 0}, {0, 1}, {1, 0}, {1, 1}}, 3, 3);
  const auto gt = mask_from({{1, 1}, {1, 2}, {0, 0}, {2, 2}}, 3, 3);
  c = confusion(pred, gt);
  CHECK(c.tp == 2);
  CHECK(c.fp == 2);
  CHECK(c.fn == 2);
  CHECK(c.tn == 3);

  CHECK_THROWS_AS(confusion(ones, Tensor<uint8_t>({2, 3})), ShapeError);
}

TEST_CASE("scalar metric formulas and conventions") {
  ConfusionCounts c;
  c.tp = 2;
  c.fp = 2;
  c.fn = 2;
  c.tn = 3;
  auto m = scalar_metrics(c);
  CHECK(m.dice == doctest::Approx(0.5));
  CHECK(m.jaccard == doctest::Approx(1.0 / 3));
  CHECK(m.precision == doctest::Approx(0.5));
  CHECK(m.recall == doctest::Approx(0.5));
  CHECK(m.specificity == doctest::Approx(0.6));
  CHECK(m.f1 == doctest::Approx(0.5));

  // perfect prediction
  ConfusionCounts p;
  p.tp = 5;
  p.tn = 4;
  m = scalar_metrics(p);
  CHECK(m.dice == 1.0);
  CHECK(m.jaccard == 1.0);
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 1.0);
  CHECK(m.specificity == 1.0);
  CHECK(m.f1 == 1.0);

  // both masks empty of foreground
  ConfusionCounts e;
  e.tn = 9;
  m = scalar_metrics(e);
  CHECK(m.dice == 1.0);
  CHECK(m.jaccard == 1.0);
  CHECK(m.f1 == 1.0);

  // prediction empty, truth not: everything foreground-related is 0
  ConfusionCounts miss;
  miss.fn = 4;
  miss.tn = 5;
  m = scalar_metrics(miss);
  CHECK(m.dice == 0.0);
  CHECK(m.precision == 0.0);
  CHECK(m.recall == 0.0);
  CHECK(m.f1 == 0.0);
  CHECK(m.specificity == 1.0);

  // all-foreground truth and prediction: background empty on both sides
  ConfusionCounts allfg;
  allfg.tp = 9;
  m = scalar_metrics(allfg);
  CHECK(m.specificity == 1.0);
}

TEST_CASE("scalar metrics equal the set-count oracle on 100 random pairs") {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    // densities include frequent empties at the extremes
    const double dp = (trial % 10) / 9.0;
    const double dg = ((trial / 10) % 10) / 9.0;
    const auto pred = random_mask(8, 8, dp, rng);
    const auto gt = random_mask(8, 8, dg, rng);
    const auto got = scalar_metrics(confusion(pred, gt));
    const auto ref = oracle::set_metrics(pred, gt);
    CHECK(got.dice == ref.dice);
    CHECK(got.jaccard == ref.jaccard);
    CHECK(got.precision == ref.precision);
    CHECK(got.recall == ref.recall);
    CHECK(got.specificity == ref.specificity);
    CHECK(got.f1 == ref.f1);
    // order relations
    CHECK(got.dice >= got.jaccard);
    if (got.jaccard > 0.0 && got.jaccard < 1.0) CHECK(got.dice > got.jaccard);
    CHECK(got.dice == doctest::Approx(2 * got.jaccard / (1 + got.jaccard)).epsilon(1e-12));
  }
}

TEST_CASE("hausdorff examples") {
  const auto a = mask_from({{0, 0}, {1, 2}}, 4, 5);
  CHECK(hausdorff(a, a) == 0.0);

  const auto p = mask_from({{0, 0}}, 5, 5);
  const auto q = mask_from({{3, 4}}, 5, 5);
  CHECK(*hausdorff(p, q) == 5.0);
  CHECK(*hausdorff(q, p) == 5.0);

  const auto wide = mask_from({{0, 0}, {10, 0}}, 11, 2);
  const auto point = mask_from({{0, 0}}, 11, 2);
  CHECK(*hausdorff(wide, point) == 10.0);
  CHECK(*hausdorff(point, wide) == 10.0);

  // undefined when either side is empty
  const Tensor<uint8_t> empty({4, 5});
  CHECK(!hausdorff(a, empty).has_value());
  CHECK(!hausdorff(empty, a).has_value());
  CHECK(!hausdorff(empty, empty).has_value());

  CHECK_THROWS_AS(hausdorff(a, a, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(hausdorff(a, a, 101.0), std::invalid_argument);
}

TEST_CASE("squared distance field is exact") {
  std::mt19937 rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const int h = 1 + trial % 13, w = 1 + (trial * 7) % 11;
    const auto m = random_mask(h, w, trial % 5 == 0 ? 0.02 : 0.3, rng);
    const auto field = squared_distance_field(m);

    const auto fg = oracle::foreground(m);
    if (fg.empty()) {
      for (int64_t i = 0; i < field.numel(); ++i) CHECK(field[i] == -1);
      continue;
    }
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        int64_t best = std::numeric_limits<int64_t>::max();
        for (const auto& [fr, fc] : fg) {
          const int64_t dr = r - fr, dc = c - fc;
          best = std::min(best, dr * dr + dc * dc);
        }
        CHECK(field.at(r, c) == best);
      }
  }
}

TEST_CASE("hausdorff equals the brute-force oracle, all percentiles") {
  std::mt19937 rng(88);
  for (int trial = 0; trial < 100; ++trial) {
    const int h = 2 + trial % 9, w = 2 + (trial * 3) % 9;
    const auto pred = random_mask(h, w, (trial % 7) / 7.0, rng);
    const auto gt = random_mask(h, w, ((trial + 3) % 7) / 7.0, rng);
    for (const double pct : {100.0, 95.0, 50.0, 1.0}) {
      double ref = 0;
      const bool defined = oracle::brute_hausdorff(pred, gt, pct, &ref);
      const auto got = hausdorff(pred, gt, pct);
      CHECK(got.has_value() == defined);
      if (defined) CHECK(*got == ref);  // exact, both routes sqrt the same integer
    }
  }
}

TEST_CASE("hausdorff is symmetric and satisfies the triangle inequality") {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 25; ++trial) {
    auto a = random_mask(7, 7, 0.25, rng);
    auto b = random_mask(7, 7, 0.25, rng);
    auto c = random_mask(7, 7, 0.25, rng);
    a.at(3, 3) = 1;  // keep all three nonempty
    b.at(2, 4) = 1;
    c.at(5, 1) = 1;
    const double ab = *hausdorff(a, b);
    const double ba = *hausdorff(b, a);
    const double bc = *hausdorff(b, c);
    const double ac = *hausdorff(a, c);
    CHECK(ab == ba);
    CHECK(ac <= ab + bc + 1e-12);
  }
}

TEST_CASE("metrics are invariant under the group action on both masks") {
  std::mt19937 rng(111);
  const auto pred = random_mask(6, 6, 0.3, rng);
  const auto gt = random_mask(6, 6, 0.35, rng);
  const auto base = scalar_metrics(confusion(pred, gt));
  const auto base_hd = hausdorff(pred, gt);
  for (int g = 0; g < 8; ++g) {
    const auto e = element_from_index(g);
    const auto tp = transform_plane(e, pred);
    const auto tg = transform_plane(e, gt);
    const auto m = scalar_metrics(confusion(tp, tg));
    CHECK(m.dice == base.dice);
    CHECK(m.jaccard == base.jaccard);
    CHECK(m.precision == base.precision);
    CHECK(m.recall == base.recall);
    CHECK(m.specificity == base.specificity);
    CHECK(m.f1 == base.f1);
    CHECK(hausdorff(tp, tg) == base_hd);  // isometry of pixel centers
  }
}

TEST_CASE("accumulator macro-averages and counts undefined hausdorff") {
  MetricsAccumulator acc;
  const auto ones = Tensor<uint8_t>::full({2, 2}, 1);
  const auto zeros = Tensor<uint8_t>({2, 2});
  acc.add(ones, ones);    // all metrics 1, hausdorff 0
  acc.add(zeros, zeros);  // fg metrics 1 by convention, hausdorff undefined
  acc.add(zeros, ones);   // dice 0, hausdorff undefined

  const auto r = acc.report();
  CHECK(r.n_images == 3);
  CHECK(r.n_hausdorff_undefined == 2);
  CHECK(r.dice == doctest::Approx(2.0 / 3));
  CHECK(r.jaccard == doctest::Approx(2.0 / 3));
  CHECK(r.hausdorff == 0.0);  // the only defined case
  // all-ones gt and pred: both sides empty of background, convention 1;
  // all-zero pair: plain 1; zero pred vs ones gt: tn=0 with fn>0 gives 0
  CHECK(r.specificity == doctest::Approx(2.0 / 3));

  MetricsAccumulator none;
  const auto empty = none.report();
  CHECK(empty.n_images == 0);
  CHECK(empty.dice == 0.0);
}
