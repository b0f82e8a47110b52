#include "gerseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "gerseg/common.hpp"

namespace gerseg::metrics {

ConfusionCounts confusion(const Tensor<uint8_t>& pred, const Tensor<uint8_t>& gt) {
  GERSEG_CHECK_SHAPE(pred.same_shape(gt), "confusion: mask shapes differ, " + shape_string(pred) +
                                              " vs " + shape_string(gt));
  ConfusionCounts c;
  for (int64_t i = 0; i < pred.numel(); ++i) {
    const bool p = pred[i] != 0, g = gt[i] != 0;
    if (p && g)
      ++c.tp;
    else if (p && !g)
      ++c.fp;
    else if (!p && g)
      ++c.fn;
    else
      ++c.tn;
  }
  return c;
}

namespace {

// ratio with the both-empty convention; "empty" meaning no pixel of the
// relevant class on either side.
double ratio(int64_t num, int64_t den, bool both_empty) {
  if (den == 0) return both_empty ? 1.0 : 0.0;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ScalarMetrics scalar_metrics(const ConfusionCounts& c) {
  ScalarMetrics m;
  const bool pred_empty_fg = c.tp + c.fp == 0;
  const bool gt_empty_fg = c.tp + c.fn == 0;
  const bool pred_empty_bg = c.tn + c.fn == 0;
  const bool gt_empty_bg = c.tn + c.fp == 0;
  m.dice = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn, pred_empty_fg && gt_empty_fg);
  m.jaccard = ratio(c.tp, c.tp + c.fp + c.fn, pred_empty_fg && gt_empty_fg);
  m.precision = ratio(c.tp, c.tp + c.fp, pred_empty_fg && gt_empty_fg);
  m.recall = ratio(c.tp, c.tp + c.fn, pred_empty_fg && gt_empty_fg);
  m.specificity = ratio(c.tn, c.tn + c.fp, pred_empty_bg && gt_empty_bg);
  m.f1 = (m.precision + m.recall == 0) ? 0.0 : 2 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

namespace {

constexpr int64_t kFar = std::numeric_limits<int64_t>::max() / 4;

// Exact 1D squared-distance lower envelope. Input f holds squared distances
// (kFar where no source exists); output d[x] = min_v (x-v)^2 + f[v].
// Parabola intersections are compared as exact integer rationals, so the
// result is the true integer minimum, not a rounded one.
void envelope_1d(const std::vector<int64_t>& f, std::vector<int64_t>& d) {
  const int n = static_cast<int>(f.size());
  static thread_local std::vector<int> v;
  static thread_local std::vector<int64_t> zn;  // intersection numerators
  static thread_local std::vector<int64_t> zd;  // intersection denominators
  v.clear();
  zn.assign(static_cast<size_t>(n) + 1, 0);
  zd.assign(static_cast<size_t>(n) + 1, 0);  // zd == 0 marks -infinity
  for (int q = 0; q < n; ++q) {
    if (f[static_cast<size_t>(q)] >= kFar) continue;
    while (true) {
      if (v.empty()) {
        v.push_back(q);
        break;
      }
      const int p = v.back();
      // s = intersection of parabolas at p and q (q > p)
      const int64_t num = f[static_cast<size_t>(q)] + static_cast<int64_t>(q) * q -
                          f[static_cast<size_t>(p)] - static_cast<int64_t>(p) * p;
      const int64_t den = 2 * static_cast<int64_t>(q - p);
      const size_t k = v.size() - 1;
      // pop p while the new intersection is at or left of p's left boundary
      const bool pop = (zd[k] != 0) && num * zd[k] <= zn[k] * den;
      if (pop) {
        v.pop_back();
        continue;
      }
      zn[v.size()] = num;
      zd[v.size()] = den;
      v.push_back(q);
      break;
    }
  }
  if (v.empty()) {
    std::fill(d.begin(), d.end(), kFar);
    return;
  }
  size_t k = 0;
  for (int x = 0; x < n; ++x) {
    // advance while the next boundary is at or left of x
    while (k + 1 < v.size() && zd[k + 1] != 0 && zn[k + 1] <= static_cast<int64_t>(x) * zd[k + 1]) ++k;
    const int64_t dx = x - v[k];
    d[static_cast<size_t>(x)] = dx * dx + f[static_cast<size_t>(v[k])];
  }
}

}  // namespace

Tensor<int64_t> squared_distance_field(const Tensor<uint8_t>& mask) {
  GERSEG_CHECK_SHAPE(mask.ndim() == 2, "squared_distance_field: mask must be [H,W], got " +
                                           shape_string(mask));
  const int H = mask.dim(0), W = mask.dim(1);
  Tensor<int64_t> out({H, W});

  // Column pass: squared distance to the nearest foreground row in the same
  // column, via an up sweep and a down sweep of plain 1D distances.
  std::vector<int64_t> coldist(static_cast<size_t>(H) * W, kFar);
  for (int c = 0; c < W; ++c) {
    int64_t run = kFar;
    for (int r = 0; r < H; ++r) {
      if (mask.at(r, c) != 0)
        run = 0;
      else if (run < kFar)
        ++run;
      coldist[static_cast<size_t>(r) * W + c] = run;
    }
    run = kFar;
    for (int r = H - 1; r >= 0; --r) {
      if (mask.at(r, c) != 0)
        run = 0;
      else if (run < kFar)
        ++run;
      auto& cell = coldist[static_cast<size_t>(r) * W + c];
      cell = std::min(cell, run);
    }
  }

  bool any = false;
  std::vector<int64_t> f(static_cast<size_t>(W)), d(static_cast<size_t>(W));
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      const int64_t v = coldist[static_cast<size_t>(r) * W + c];
      f[static_cast<size_t>(c)] = v >= kFar ? kFar : v * v;
      if (v == 0) any = true;
    }
    envelope_1d(f, d);
    for (int c = 0; c < W; ++c) out.at(r, c) = d[static_cast<size_t>(c)];
  }
  if (!any) {
    std::fill(out.data(), out.data() + out.numel(), int64_t(-1));
  }
  return out;
}

namespace {

// Directed distances from every foreground pixel of `from` into `field`
// (squared distance field of the target mask), as squared integers.
std::vector<int64_t> directed_sq(const Tensor<uint8_t>& from, const Tensor<int64_t>& field) {
  std::vector<int64_t> ds;
  for (int64_t i = 0; i < from.numel(); ++i) {
    if (from[i] != 0) ds.push_back(field[i]);
  }
  return ds;
}

int64_t percentile_sq(std::vector<int64_t>& ds, double percentile) {
  if (percentile >= 100.0) return *std::max_element(ds.begin(), ds.end());
  const auto n = static_cast<int64_t>(ds.size());
  int64_t k = static_cast<int64_t>(std::ceil(percentile / 100.0 * static_cast<double>(n))) - 1;
  k = std::clamp<int64_t>(k, 0, n - 1);
  std::nth_element(ds.begin(), ds.begin() + k, ds.end());
  return ds[static_cast<size_t>(k)];
}

}  // namespace

std::optional<double> hausdorff(const Tensor<uint8_t>& pred, const Tensor<uint8_t>& gt,
                                double percentile) {
  GERSEG_CHECK_SHAPE(pred.ndim() == 2 && pred.same_shape(gt),
                     "hausdorff: masks must be equal-sized [H,W], got " + shape_string(pred) + " vs " +
                         shape_string(gt));
  GERSEG_CHECK(percentile > 0 && percentile <= 100.0, "hausdorff: percentile must be in (0,100]");
  const Tensor<int64_t> dp = squared_distance_field(pred);
  const Tensor<int64_t> dg = squared_distance_field(gt);
  std::vector<int64_t> ab = directed_sq(pred, dg);  // from pred pixels into gt
  std::vector<int64_t> ba = directed_sq(gt, dp);
  if (ab.empty() || ba.empty()) return std::nullopt;
  const int64_t sq = std::max(percentile_sq(ab, percentile), percentile_sq(ba, percentile));
  return std::sqrt(static_cast<double>(sq));
}

void MetricsAccumulator::add(const Tensor<uint8_t>& pred, const Tensor<uint8_t>& gt,
                             double hausdorff_percentile) {
  const ScalarMetrics m = scalar_metrics(confusion(pred, gt));
  sums_.dice += m.dice;
  sums_.jaccard += m.jaccard;
  sums_.precision += m.precision;
  sums_.recall += m.recall;
  sums_.specificity += m.specificity;
  sums_.f1 += m.f1;
  if (const auto hd = hausdorff(pred, gt, hausdorff_percentile)) {
    hausdorff_sum_ += *hd;
    ++n_hausdorff_defined_;
  }
  ++n_;
}

MetricsReport MetricsAccumulator::report() const {
  MetricsReport r;
  r.n_images = n_;
  r.n_hausdorff_undefined = n_ - n_hausdorff_defined_;
  if (n_ == 0) return r;
  const double inv = 1.0 / n_;
  r.dice = sums_.dice * inv;
  r.jaccard = sums_.jaccard * inv;
  r.precision = sums_.precision * inv;
  r.recall = sums_.recall * inv;
  r.specificity = sums_.specificity * inv;
  r.f1 = sums_.f1 * inv;
  r.hausdorff = n_hausdorff_defined_ > 0 ? hausdorff_sum_ / n_hausdorff_defined_ : 0.0;
  return r;
}

}  // namespace gerseg::metrics
