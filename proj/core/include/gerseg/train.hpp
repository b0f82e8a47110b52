#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "gerseg/checkpoint.hpp"
#include "gerseg/data.hpp"
#include "gerseg/metrics.hpp"
#include "gerseg/model.hpp"

namespace gerseg::train {

struct TrainConfig {
  int epochs_max = 300;
  int batch_size = 4;
  int patience = 20;
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::string lr_schedule = "none";  // "none" or "step"
  int lr_step_every = 50;
  double lr_step_factor = 0.5;
  double val_fraction = 0.2;
  uint64_t seed = 1;

  void validate() const;  // throws ConfigError
};

TrainConfig train_config_from_json_text(const std::string& text);
std::string train_config_to_json_text(const TrainConfig& cfg, int indent = 2);

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0;
  double val_dice = 0;
  double lr = 0;
  double seconds = 0;
};

struct History {
  std::vector<EpochStats> epochs;
  int best_epoch = 0;  // 1-based; 0 when no epoch ran
  double best_val_dice = 0;
  int train_count = 0;
  int val_count = 0;
};

template <typename T>
struct Adam {
  std::vector<Tensor<T>> m, v;
  int64_t t = 0;

  void init(const std::vector<autograd::Param<T>*>& params) {
    m.clear();
    v.clear();
    for (const auto* p : params) {
      m.emplace_back(p->value.shape());
      v.emplace_back(p->value.shape());
    }
    t = 0;
  }

  void step(const std::vector<autograd::Param<T>*>& params, double lr, double beta1, double beta2,
            double eps) {
    GERSEG_CHECK(m.size() == params.size(), "adam: state not initialized for these parameters");
    ++t;
    const T b1 = static_cast<T>(beta1), b2 = static_cast<T>(beta2);
    const T corr1 = static_cast<T>(1.0 - std::pow(beta1, static_cast<double>(t)));
    const T corr2 = static_cast<T>(1.0 - std::pow(beta2, static_cast<double>(t)));
    const T step_size = static_cast<T>(lr);
    const T e = static_cast<T>(eps);
    for (size_t i = 0; i < params.size(); ++i) {
      auto& p = *params[i];
      GERSEG_CHECK_SHAPE(p.grad.same_shape(m[i]), "adam: gradient shape changed for " + p.name);
      T* mw = m[i].data();
      T* vw = v[i].data();
      T* w = p.value.data();
      const T* g = p.grad.data();
      for (int64_t j = 0; j < p.value.numel(); ++j) {
        mw[j] = b1 * mw[j] + (T(1) - b1) * g[j];
        vw[j] = b2 * vw[j] + (T(1) - b2) * g[j] * g[j];
        const T mhat = mw[j] / corr1;
        const T vhat = vw[j] / corr2;
        w[j] -= step_size * mhat / (std::sqrt(vhat) + e);
      }
    }
  }
};

namespace detail {

template <typename T>
Tensor<T> batch_images(const data::Dataset& ds, const std::vector<int>& idx, size_t lo, size_t hi) {
  const auto& first = ds.samples[static_cast<size_t>(idx[lo])].image;
  const int C = first.dim(0), H = first.dim(1), W = first.dim(2);
  Tensor<T> x({static_cast<int>(hi - lo), C, H, W});
  for (size_t i = lo; i < hi; ++i) {
    const auto& img = ds.samples[static_cast<size_t>(idx[i])].image;
    GERSEG_CHECK_SHAPE(img.dim(0) == C && img.dim(1) == H && img.dim(2) == W,
                       "train: samples disagree on image shape");
    T* dst = x.data() + static_cast<int64_t>(i - lo) * C * H * W;
    for (int64_t j = 0; j < img.numel(); ++j) dst[j] = static_cast<T>(img[j]);
  }
  return x;
}

inline Tensor<int32_t> batch_targets(const data::Dataset& ds, const std::vector<int>& idx, size_t lo,
                                     size_t hi) {
  const auto& first = ds.samples[static_cast<size_t>(idx[lo])].mask;
  const int H = first.dim(0), W = first.dim(1);
  Tensor<int32_t> y({static_cast<int>(hi - lo), H, W});
  for (size_t i = lo; i < hi; ++i) {
    const auto& msk = ds.samples[static_cast<size_t>(idx[i])].mask;
    int32_t* dst = y.data() + static_cast<int64_t>(i - lo) * H * W;
    for (int64_t j = 0; j < msk.numel(); ++j) dst[j] = msk[j] ? 1 : 0;
  }
  return y;
}

}  // namespace detail

// Predicted class masks for every sample, eval mode. Samples run
// independently (one per worker thread), so results do not depend on the
// thread count.
template <typename T>
std::vector<Tensor<uint8_t>> predict_masks(models::SegNet<T>& model, const data::Dataset& ds) {
  std::vector<Tensor<uint8_t>> preds(static_cast<size_t>(ds.count()));
  parallel_for(ds.count(), [&](int64_t i) {
    const auto& img = ds.samples[static_cast<size_t>(i)].image;
    Tensor<T> x({1, img.dim(0), img.dim(1), img.dim(2)});
    for (int64_t j = 0; j < img.numel(); ++j) x[j] = static_cast<T>(img[j]);
    const Tensor<T> logits = model.forward_eval(x);
    const Tensor<uint8_t> cls = ops::argmax_classes(logits);  // [1,H,W]
    preds[static_cast<size_t>(i)] = cls.reshaped({cls.dim(1), cls.dim(2)});
  });
  return preds;
}

template <typename T>
metrics::MetricsReport evaluate_model(models::SegNet<T>& model, const data::Dataset& ds,
                                      double hausdorff_percentile = 100.0) {
  const auto preds = predict_masks(model, ds);
  metrics::MetricsAccumulator acc;
  for (int i = 0; i < ds.count(); ++i) {
    acc.add(preds[static_cast<size_t>(i)], ds.samples[static_cast<size_t>(i)].mask,
            hausdorff_percentile);
  }
  return acc.report();
}

// Mean per-image Dice of the model on the given sample indices.
template <typename T>
double mean_dice(models::SegNet<T>& model, const data::Dataset& ds, const std::vector<int>& idx) {
  std::vector<double> dice(idx.size());
  parallel_for(static_cast<int64_t>(idx.size()), [&](int64_t i) {
    const auto& s = ds.samples[static_cast<size_t>(idx[static_cast<size_t>(i)])];
    Tensor<T> x({1, s.image.dim(0), s.image.dim(1), s.image.dim(2)});
    for (int64_t j = 0; j < s.image.numel(); ++j) x[j] = static_cast<T>(s.image[j]);
    const Tensor<uint8_t> cls = ops::argmax_classes(model.forward_eval(x));
    const Tensor<uint8_t> pred = cls.reshaped({cls.dim(1), cls.dim(2)});
    dice[static_cast<size_t>(i)] = metrics::scalar_metrics(metrics::confusion(pred, s.mask)).dice;
  });
  double sum = 0;
  for (double d : dice) sum += d;
  return idx.empty() ? 0.0 : sum / static_cast<double>(idx.size());
}

// Minibatch training with a seeded 4:1 train/validation split, per-epoch
// validation Dice, and early stopping that keeps the best-scoring weights.
// The best snapshot is restored into the model before returning and written
// to checkpoint_path when one is given.
template <typename T>
History train_model(models::SegNet<T>& model, const data::Dataset& ds, const TrainConfig& cfg,
                    const std::string& checkpoint_path = "", std::ostream* log = nullptr) {
  cfg.validate();
  GERSEG_CHECK(ds.count() >= 2, "train: dataset needs at least 2 samples, got " +
                                    std::to_string(ds.count()));

  std::mt19937 rng(static_cast<uint32_t>(cfg.seed ^ (cfg.seed >> 32)));
  std::vector<int> order(static_cast<size_t>(ds.count()));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  int n_val = static_cast<int>(std::lround(cfg.val_fraction * ds.count()));
  n_val = std::clamp(n_val, 1, ds.count() - 1);
  std::vector<int> val_idx(order.begin(), order.begin() + n_val);
  std::vector<int> train_idx(order.begin() + n_val, order.end());

  auto params = model.parameters();
  Adam<T> adam;
  adam.init(params);

  auto state = model.state();
  std::vector<Tensor<T>> best_state;
  auto snapshot = [&]() {
    best_state.clear();
    for (const auto& [name, t] : state) best_state.push_back(*t);
  };
  auto restore = [&]() {
    for (size_t i = 0; i < state.size(); ++i) *state[i].second = best_state[i];
  };

  History hist;
  hist.train_count = static_cast<int>(train_idx.size());
  hist.val_count = static_cast<int>(val_idx.size());
  double best = -1.0;
  int bad_epochs = 0;

  for (int epoch = 1; epoch <= cfg.epochs_max; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    double lr = cfg.lr;
    if (cfg.lr_schedule == "step") {
      lr *= std::pow(cfg.lr_step_factor, (epoch - 1) / cfg.lr_step_every);
    }

    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    double loss_sum = 0;
    for (size_t lo = 0; lo < train_idx.size(); lo += static_cast<size_t>(cfg.batch_size)) {
      const size_t hi = std::min(train_idx.size(), lo + static_cast<size_t>(cfg.batch_size));
      Tensor<T> x = detail::batch_images<T>(ds, train_idx, lo, hi);
      Tensor<int32_t> y = detail::batch_targets(ds, train_idx, lo, hi);

      autograd::Tape<T> tape;
      const autograd::Var logits = model.forward(tape, tape.constant(std::move(x)), true);
      const autograd::Var loss = tape.cross_entropy(logits, std::move(y));
      loss_sum += static_cast<double>(tape.value(loss)[0]) * static_cast<double>(hi - lo);
      for (auto* p : params) p->zero_grad();
      tape.backward(loss);
      adam.step(params, lr, cfg.beta1, cfg.beta2, cfg.eps);
    }

    const double val_dice = mean_dice(model, ds, val_idx);
    const auto t1 = std::chrono::steady_clock::now();
    EpochStats st;
    st.epoch = epoch;
    st.mean_loss = loss_sum / static_cast<double>(train_idx.size());
    st.val_dice = val_dice;
    st.lr = lr;
    st.seconds = std::chrono::duration<double>(t1 - t0).count();
    hist.epochs.push_back(st);
    if (log) {
      (*log) << "epoch " << epoch << " loss " << st.mean_loss << " val_dice " << st.val_dice << " lr "
             << lr << " (" << st.seconds << "s)\n";
      log->flush();
    }

    if (val_dice > best) {
      best = val_dice;
      hist.best_epoch = epoch;
      hist.best_val_dice = val_dice;
      snapshot();
      bad_epochs = 0;
    } else {
      ++bad_epochs;
      if (bad_epochs >= cfg.patience) break;
    }
  }

  if (!best_state.empty()) restore();
  if (!checkpoint_path.empty()) {
    checkpoint::TrainMeta meta;
    meta.epoch = hist.best_epoch;
    meta.best_val_dice = hist.best_val_dice;
    meta.adam_t = adam.t;
    checkpoint::save_model(checkpoint_path, model, meta, &adam.m, &adam.v);
  }
  return hist;
}

}  // namespace gerseg::train
