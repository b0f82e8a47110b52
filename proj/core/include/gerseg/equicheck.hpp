#pragma once

#include <array>
#include <random>
#include <string>
#include <vector>

#include "gerseg/conv.hpp"
#include "gerseg/group.hpp"
#include "gerseg/model.hpp"
#include "gerseg/ops.hpp"
#include "gerseg/tensor.hpp"

// Measures how far an operation is from commuting with the eight square
// symmetries: feed a transformed input, transform the reference output, and
// report the max relative difference. Group layers should land at rounding
// error; plain convolutions should not.
namespace gerseg::equicheck {

struct CheckRow {
  std::string name;
  std::array<double, kGroupSize> err{};

  double max_err() const {
    double m = 0;
    for (double e : err) m = std::max(m, e);
    return m;
  }
};

namespace detail {

template <typename T>
double rel_err(const Tensor<T>& a, const Tensor<T>& b) {
  return static_cast<double>(max_rel_err(a, b));
}

}  // namespace detail

// Equivariance of the individual layer ops on random data. The returned
// rows carry one error per group element, maximized over trials.
template <typename T>
std::vector<CheckRow> layer_checks(int trials, uint64_t seed) {
  std::mt19937 rng(static_cast<uint32_t>(seed ^ (seed >> 32)));
  std::vector<CheckRow> rows;
  auto row = [&rows](const std::string& name) -> CheckRow& {
    rows.push_back(CheckRow{name, {}});
    return rows.back();
  };

  CheckRow& r_lift1 = row("lift_conv");
  CheckRow& r_lift2 = row("lift_conv_stride2");
  CheckRow& r_group1 = row("group_conv");
  CheckRow& r_group2 = row("group_conv_stride2");
  CheckRow& r_bn = row("group_batchnorm");
  CheckRow& r_up_n = row("group_upsample_nearest");
  CheckRow& r_up_b = row("group_upsample_bilinear");
  CheckRow& r_add = row("group_skip_add");
  CheckRow& r_cat = row("group_skip_concat");
  CheckRow& r_pool = row("orientation_pool");

  const Tensor<T> no_bias;
  for (int trial = 0; trial < trials; ++trial) {
    const Tensor<T> x = random_uniform<T>({2, 3, 8, 8}, rng);
    const Tensor<T> wl = random_uniform<T>({4, 3, 3, 3}, rng);
    const Tensor<T> f = random_uniform<T>({2, 3, kGroupSize, 8, 8}, rng);
    const Tensor<T> f2 = random_uniform<T>({2, 3, kGroupSize, 8, 8}, rng);
    const Tensor<T> wg = random_uniform<T>({4, 3, kGroupSize, 3, 3}, rng);
    const Tensor<T> gamma = random_uniform<T>({3}, rng, T(0.5), T(1.5));
    const Tensor<T> beta = random_uniform<T>({3}, rng);

    const Tensor<T> y_lift1 = ops::lift_conv(x, wl, no_bias, 1, 1);
    const Tensor<T> y_lift2 = ops::lift_conv(x, wl, no_bias, 2, 1);
    const Tensor<T> y_group1 = ops::group_conv(f, wg, no_bias, 1, 1);
    const Tensor<T> y_group2 = ops::group_conv(f, wg, no_bias, 2, 1);
    Tensor<T> rm({3}), rv({3});
    std::fill(rv.data(), rv.data() + rv.numel(), T(1));
    const Tensor<T> y_bn = ops::batchnorm(f, gamma, beta, rm, rv, T(0.1), T(1e-5), true,
                                          static_cast<ops::BNSaved<T>*>(nullptr));
    const Tensor<T> y_up_n = ops::upsample(f, 2, ops::Upsample::kNearest);
    const Tensor<T> y_up_b = ops::upsample(f, 2, ops::Upsample::kBilinear);
    const Tensor<T> y_add = ops::add(f, f2);
    const Tensor<T> y_cat = ops::concat_channels(f, f2);
    const Tensor<T> y_pool = ops::orientation_pool(f);

    for (int gi = 0; gi < kGroupSize; ++gi) {
      const GroupElement g = element_from_index(gi);
      const Tensor<T> tx = transform_plane(g, x);
      const Tensor<T> tf = transform_group_feature(g, f);
      const Tensor<T> tf2 = transform_group_feature(g, f2);
      auto track = [&](CheckRow& r, double e) {
        r.err[static_cast<size_t>(gi)] = std::max(r.err[static_cast<size_t>(gi)], e);
      };

      track(r_lift1, detail::rel_err(ops::lift_conv(tx, wl, no_bias, 1, 1),
                                     transform_group_feature(g, y_lift1)));
      track(r_lift2, detail::rel_err(ops::lift_conv(tx, wl, no_bias, 2, 1),
                                     transform_group_feature(g, y_lift2)));
      track(r_group1, detail::rel_err(ops::group_conv(tf, wg, no_bias, 1, 1),
                                      transform_group_feature(g, y_group1)));
      track(r_group2, detail::rel_err(ops::group_conv(tf, wg, no_bias, 2, 1),
                                      transform_group_feature(g, y_group2)));
      Tensor<T> rm2({3}), rv2({3});
      std::fill(rv2.data(), rv2.data() + rv2.numel(), T(1));
      track(r_bn, detail::rel_err(ops::batchnorm(tf, gamma, beta, rm2, rv2, T(0.1), T(1e-5), true,
                                                 static_cast<ops::BNSaved<T>*>(nullptr)),
                                  transform_group_feature(g, y_bn)));
      track(r_up_n, detail::rel_err(ops::upsample(tf, 2, ops::Upsample::kNearest),
                                    transform_group_feature(g, y_up_n)));
      track(r_up_b, detail::rel_err(ops::upsample(tf, 2, ops::Upsample::kBilinear),
                                    transform_group_feature(g, y_up_b)));
      track(r_add, detail::rel_err(ops::add(tf, tf2), transform_group_feature(g, y_add)));
      track(r_cat, detail::rel_err(ops::concat_channels(tf, tf2), transform_group_feature(g, y_cat)));
      track(r_pool, detail::rel_err(ops::orientation_pool(tf), transform_plane(g, y_pool)));
    }
  }
  return rows;
}

// Equivariance of a plain 3x3 convolution, the regular model's building
// block. Expected to fail by a wide margin; reported for contrast.
template <typename T>
std::vector<CheckRow> plain_layer_checks(int trials, uint64_t seed) {
  std::mt19937 rng(static_cast<uint32_t>(seed ^ (seed >> 32)));
  std::vector<CheckRow> rows{CheckRow{"conv2d", {}}};
  const Tensor<T> no_bias;
  for (int trial = 0; trial < trials; ++trial) {
    const Tensor<T> x = random_uniform<T>({2, 3, 8, 8}, rng);
    const Tensor<T> w = random_uniform<T>({4, 3, 3, 3}, rng);
    const Tensor<T> y = ops::conv2d(x, w, no_bias, 1, 1);
    for (int gi = 0; gi < kGroupSize; ++gi) {
      const GroupElement g = element_from_index(gi);
      const double e = detail::rel_err(ops::conv2d(transform_plane(g, x), w, no_bias, 1, 1),
                                       transform_plane(g, y));
      rows[0].err[static_cast<size_t>(gi)] = std::max(rows[0].err[static_cast<size_t>(gi)], e);
    }
  }
  return rows;
}

// Whole-model check in eval mode: model(transform(x)) against
// transform(model(x)) per group element, maximized over trials.
template <typename T>
CheckRow model_check(models::SegNet<T>& model, int trials, uint64_t seed, int size) {
  std::mt19937 rng(static_cast<uint32_t>(seed ^ (seed >> 32)));
  CheckRow row{"end_to_end", {}};
  for (int trial = 0; trial < trials; ++trial) {
    const Tensor<T> x = random_uniform<T>({1, model.config().in_channels, size, size}, rng, T(0), T(1));
    const Tensor<T> y = model.forward_eval(x);
    for (int gi = 0; gi < kGroupSize; ++gi) {
      const GroupElement g = element_from_index(gi);
      const double e = detail::rel_err(model.forward_eval(transform_plane(g, x)), transform_plane(g, y));
      row.err[static_cast<size_t>(gi)] = std::max(row.err[static_cast<size_t>(gi)], e);
    }
  }
  return row;
}

}  // namespace gerseg::equicheck
