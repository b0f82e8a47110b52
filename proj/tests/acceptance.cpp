// Release gate: one check per acceptance criterion, each printing a
// [PASS]/[FAIL] line with measured numbers. Exits nonzero when anything
// fails. The training criterion dominates the runtime; everything else
// finishes in seconds.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gerseg/checkpoint.hpp"
#include "gerseg/data.hpp"
#include "gerseg/equicheck.hpp"
#include "gerseg/io.hpp"
#include "gerseg/metrics.hpp"
#include "gerseg/model.hpp"
#include "gerseg/train.hpp"
#include "oracles.hpp"

using namespace gerseg;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

std::string strf(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

void report(const char* name, bool pass, const std::string& detail) {
  std::printf("[%s] %-15s %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

void criterion(const char* name, const std::function<std::pair<bool, std::string>()>& fn) {
  try {
    const auto [pass, detail] = fn();
    report(name, pass, detail);
  } catch (const std::exception& e) {
    report(name, false, strf("exception: %s", e.what()));
  }
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0;
  for (int64_t i = 0; i < a.numel(); ++i) s += a[i] * b[i];
  return s;
}

Tensor<double> away_from_kinks(const std::vector<int>& shape, std::mt19937& rng) {
  Tensor<double> t(shape);
  std::uniform_real_distribution<double> mag(0.2, 1.2);
  std::bernoulli_distribution sign(0.5);
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = (sign(rng) ? 1.0 : -1.0) * mag(rng);
  return t;
}

models::ModelConfig arch_cfg(const std::string& arch, int base, const std::string& skip = "add") {
  models::ModelConfig cfg;
  cfg.arch = arch;
  cfg.base_channels = base;
  cfg.skip_mode = skip;
  return cfg;
}

data::Dataset synth(uint64_t seed, int count, int size) {
  data::SynthSpec spec;
  spec.seed = seed;
  spec.count = count;
  spec.size = size;
  return data::generate(spec);
}

data::Dataset transformed_copy(const data::Dataset& ds, uint64_t seed) {
  std::mt19937 rng(static_cast<uint32_t>(seed));
  std::uniform_int_distribution<int> pick(0, kGroupSize - 1);
  data::Dataset out;
  for (const auto& s : ds.samples) {
    const GroupElement g = element_from_index(pick(rng));
    data::Sample t;
    t.image = transform_plane(g, s.image);
    t.mask = transform_plane(g, s.mask);
    out.samples.push_back(std::move(t));
  }
  return out;
}

std::vector<int> all_indices(const data::Dataset& ds) {
  std::vector<int> idx(static_cast<size_t>(ds.count()));
  for (int i = 0; i < ds.count(); ++i) idx[static_cast<size_t>(i)] = i;
  return idx;
}

// Mean per-image test Dice at f64 regardless of the training precision, so
// Dice comparisons are immune to f32 argmax jitter.
double test_dice_f64(models::SegNet<float>& trained, const data::Dataset& ds) {
  auto wide = models::build_model<double>(trained.config());
  models::copy_state_cast(trained, *wide);
  return train::mean_dice(*wide, ds, all_indices(ds));
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("gerseg_acceptance_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

// ---- criteria ----

std::pair<bool, std::string> group_axioms() {
  const auto t0 = Clock::now();
  bool ok = true;

  for (int a = 0; a < kGroupSize && ok; ++a) {
    const GroupElement ga = element_from_index(a);
    ok = index_of(compose(identity_element(), ga)) == a &&
         index_of(compose(ga, identity_element())) == a &&
         index_of(compose(ga, inverse(ga))) == 0 && index_of(compose(inverse(ga), ga)) == 0;
  }

  int closure = 0;
  for (int a = 0; a < kGroupSize; ++a) {
    for (int b = 0; b < kGroupSize; ++b) {
      const int ab = index_of(compose(element_from_index(a), element_from_index(b)));
      if (ab >= 0 && ab < kGroupSize && ab == oracle::compose_idx(a, b)) ++closure;
    }
  }
  ok = ok && closure == 64;

  int assoc = 0;
  for (int a = 0; a < kGroupSize; ++a) {
    for (int b = 0; b < kGroupSize; ++b) {
      for (int c = 0; c < kGroupSize; ++c) {
        const GroupElement left =
            compose(compose(element_from_index(a), element_from_index(b)), element_from_index(c));
        const GroupElement right =
            compose(element_from_index(a), compose(element_from_index(b), element_from_index(c)));
        if (index_of(left) == index_of(right)) ++assoc;
      }
    }
  }
  ok = ok && assoc == 512;

  const double secs = seconds_since(t0);
  ok = ok && secs < 1.0;
  return {ok, strf("closure 64/64, associativity %d/512, identity+inverses, %.3fs", assoc, secs)};
}

std::pair<bool, std::string> layer_eq() {
  const auto t0 = Clock::now();
  const auto rows = equicheck::layer_checks<double>(10, 424242);
  double worst = 0;
  bool found = false;
  for (const auto& row : rows) {
    if (row.name == "lift_conv" || row.name == "lift_conv_stride2" || row.name == "group_conv" ||
        row.name == "group_conv_stride2") {
      worst = std::max(worst, row.max_err());
      found = true;
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = found && worst <= 1e-10 && secs < 10.0;
  return {ok, strf("lift/group conv (stride 1 and 2), 10 trials x 8 elements: max err %.2e, %.2fs",
                   worst, secs)};
}

std::pair<bool, std::string> trans_eq() {
  std::mt19937 rng(1001);
  const int n = 12;
  // support confined to the middle so shifted content never meets the border
  Tensor<double> x({1, 2, n, n});
  for (int ci = 0; ci < 2; ++ci)
    for (int r = 4; r <= 7; ++r)
      for (int c = 4; c <= 7; ++c)
        x.at(0, ci, r, c) = std::uniform_real_distribution<double>(-1, 1)(rng);
  Tensor<double> f({1, 2, kGroupSize, n, n});
  for (int64_t i = 0; i < f.numel(); ++i) {
    const int64_t rc = i % (n * n);
    const int r = static_cast<int>(rc / n), c = static_cast<int>(rc % n);
    f[i] = (r >= 4 && r <= 7 && c >= 4 && c <= 7)
               ? std::uniform_real_distribution<double>(-1, 1)(rng)
               : 0.0;
  }
  const Tensor<double> wp = random_uniform<double>({3, 2, 3, 3}, rng);
  const Tensor<double> wg = random_uniform<double>({3, 2, kGroupSize, 3, 3}, rng);
  const Tensor<double> none;

  double worst = 0;
  for (const auto [dr, dc] : {std::pair{1, 0}, {0, -2}, {2, 1}}) {
    worst = std::max(worst, max_rel_err(ops::conv2d(shift_plane(x, dr, dc), wp, none, 1, 1),
                                        shift_plane(ops::conv2d(x, wp, none, 1, 1), dr, dc)));
    worst = std::max(worst, max_rel_err(ops::lift_conv(shift_plane(x, dr, dc), wp, none, 1, 1),
                                        shift_plane(ops::lift_conv(x, wp, none, 1, 1), dr, dc)));
    worst = std::max(worst, max_rel_err(ops::group_conv(shift_plane(f, dr, dc), wg, none, 1, 1),
                                        shift_plane(ops::group_conv(f, wg, none, 1, 1), dr, dc)));
  }
  return {worst <= 1e-12, strf("conv2d/lift/group under 3 shifts: max err %.2e", worst)};
}

std::pair<bool, std::string> oracle_eq() {
  std::mt19937 rng(777);
  auto pick = [&rng](std::initializer_list<int> opts) {
    std::vector<int> v(opts);
    return v[std::uniform_int_distribution<size_t>(0, v.size() - 1)(rng)];
  };

  double worst_lift = 0, worst_group = 0;
  for (int c = 0; c < 20; ++c) {
    const int n = pick({4, 6, 8});
    const int cin = pick({1, 2, 3});
    const int cout = pick({1, 2});
    const int k = pick({1, 3});
    const int stride = pick({1, 2});
    const int pad = stride > 1 ? (k - 1) / 2 : pick({0, (k - 1) / 2});

    const auto x = random_uniform<double>({2, cin, n, n}, rng);
    const auto wl = random_uniform<double>({cout, cin, k, k}, rng);
    const auto bias = random_uniform<double>({cout}, rng);
    worst_lift = std::max(worst_lift, max_rel_err(ops::lift_conv(x, wl, bias, stride, pad),
                                                  oracle::lift_conv(x, wl, bias, stride, pad)));

    const auto fx = random_uniform<double>({2, cin, kGroupSize, n, n}, rng);
    const auto wg = random_uniform<double>({cout, cin, kGroupSize, k, k}, rng);
    worst_group = std::max(worst_group, max_rel_err(ops::group_conv(fx, wg, bias, stride, pad),
                                                    oracle::group_conv(fx, wg, bias, stride, pad)));
  }
  const bool ok = worst_lift <= 1e-12 && worst_group <= 1e-12;
  return {ok, strf("20 random cases each: lift err %.2e, group err %.2e vs brute force", worst_lift,
                   worst_group)};
}

std::pair<bool, std::string> e2e_eq() {
  auto untrained = models::build_model<double>(arch_cfg("ger-unet", 16));
  untrained->init_params(101);
  const double e_untrained = equicheck::model_check(*untrained, 1, 55, 64).max_err();

  const auto ds = synth(9001, 40, 64);
  train::TrainConfig tc;
  tc.epochs_max = 2;
  tc.batch_size = 4;
  tc.lr = 1e-3;
  tc.patience = 30;
  tc.seed = 77;
  auto trained = models::build_model<float>(arch_cfg("ger-unet", 16));
  trained->init_params(3);
  train::train_model(*trained, ds, tc);
  const double e_trained32 = equicheck::model_check(*trained, 1, 56, 64).max_err();

  auto wide = models::build_model<double>(arch_cfg("ger-unet", 16));
  models::copy_state_cast(*trained, *wide);
  const double e_trained64 = equicheck::model_check(*wide, 1, 57, 64).max_err();

  auto regular = models::build_model<double>(arch_cfg("r-unet", 16));
  regular->init_params(5);
  const double e_regular = equicheck::model_check(*regular, 1, 58, 64).max_err();

  const bool ok =
      e_untrained <= 1e-8 && e_trained64 <= 1e-8 && e_trained32 <= 1e-4 && e_regular > 1e-2;
  return {ok, strf("64x64, all 8 g: untrained f64 %.2e, trained f64 %.2e, trained f32 %.2e; r-unet %.2e",
                   e_untrained, e_trained64, e_trained32, e_regular)};
}

std::pair<bool, std::string> grad_check() {
  std::mt19937 rng(31415);
  const double eps = 1e-5, tol = 1e-6;
  double worst = 0;
  std::string worst_op = "none";
  auto track = [&](const char* what, double e) {
    if (e > worst) {
      worst = e;
      worst_op = what;
    }
  };

  // convolution family: dx, dw, dbias at stride 1 and 2
  for (const int stride : {1, 2}) {
    {
      auto x = away_from_kinks({2, 2, 6, 6}, rng);
      const auto w = random_uniform<double>({3, 2, 3, 3}, rng);
      const auto b = random_uniform<double>({3}, rng);
      const auto co = random_uniform<double>(ops::conv2d(x, w, b, stride, 1).shape(), rng);
      const auto g = ops::conv2d_backward(co, x, w, true, stride, 1);
      auto wc = w, bc = b;
      auto eval = [&] { return dot(co, ops::conv2d(x, wc, bc, stride, 1)); };
      track("conv2d dx", max_rel_err(g.dx, autograd::finite_diff_grad<double>(x, eval, eps)));
      track("conv2d dw", max_rel_err(g.dw, autograd::finite_diff_grad<double>(wc, eval, eps)));
      track("conv2d db", max_rel_err(g.dbias, autograd::finite_diff_grad<double>(bc, eval, eps)));
    }
    {
      auto x = away_from_kinks({1, 2, 6, 6}, rng);
      const auto w = random_uniform<double>({2, 2, 3, 3}, rng);
      const auto b = random_uniform<double>({2}, rng);
      const auto co = random_uniform<double>(ops::lift_conv(x, w, b, stride, 1).shape(), rng);
      const auto g = ops::lift_conv_backward(co, x, w, true, stride, 1);
      auto wc = w, bc = b;
      auto eval = [&] { return dot(co, ops::lift_conv(x, wc, bc, stride, 1)); };
      track("lift dx", max_rel_err(g.dx, autograd::finite_diff_grad<double>(x, eval, eps)));
      track("lift dw", max_rel_err(g.dw, autograd::finite_diff_grad<double>(wc, eval, eps)));
      track("lift db", max_rel_err(g.dbias, autograd::finite_diff_grad<double>(bc, eval, eps)));
    }
    {
      auto x = away_from_kinks({1, 2, kGroupSize, 6, 6}, rng);
      const auto w = random_uniform<double>({2, 2, kGroupSize, 3, 3}, rng);
      const auto b = random_uniform<double>({2}, rng);
      const auto co = random_uniform<double>(ops::group_conv(x, w, b, stride, 1).shape(), rng);
      const auto g = ops::group_conv_backward(co, x, w, true, stride, 1);
      auto wc = w, bc = b;
      auto eval = [&] { return dot(co, ops::group_conv(x, wc, bc, stride, 1)); };
      track("group dx", max_rel_err(g.dx, autograd::finite_diff_grad<double>(x, eval, eps)));
      track("group dw", max_rel_err(g.dw, autograd::finite_diff_grad<double>(wc, eval, eps)));
      track("group db", max_rel_err(g.dbias, autograd::finite_diff_grad<double>(bc, eval, eps)));
    }
  }

  // batchnorm in both modes
  for (const bool training : {true, false}) {
    auto x = away_from_kinks({2, 3, 4, 4}, rng);
    auto gamma = random_uniform<double>({3}, rng, 0.5, 1.5);
    auto beta = random_uniform<double>({3}, rng);
    const auto co = random_uniform<double>(x.shape(), rng);
    Tensor<double> rm0 = random_uniform<double>({3}, rng, -0.2, 0.2);
    Tensor<double> rv0 = random_uniform<double>({3}, rng, 0.5, 1.5);
    ops::BNSaved<double> saved;
    auto rm = rm0, rv = rv0;
    ops::batchnorm(x, gamma, beta, rm, rv, 0.1, 1e-5, training, &saved);
    const auto g = ops::batchnorm_backward(co, x, gamma, saved, training);
    auto eval = [&] {
      auto m = rm0, v = rv0;  // fresh running stats so train mode is repeatable
      return dot(co, ops::batchnorm(x, gamma, beta, m, v, 0.1, 1e-5, training));
    };
    const char* mode = training ? "bn-train" : "bn-eval";
    track(mode, max_rel_err(g.dx, autograd::finite_diff_grad<double>(x, eval, eps)));
    track(mode, max_rel_err(g.dgamma, autograd::finite_diff_grad<double>(gamma, eval, eps)));
    track(mode, max_rel_err(g.dbeta, autograd::finite_diff_grad<double>(beta, eval, eps)));
  }

  {
    auto x = away_from_kinks({2, 3, 5, 5}, rng);
    const auto co = random_uniform<double>(x.shape(), rng);
    auto eval = [&] { return dot(co, ops::relu(x)); };
    track("relu", max_rel_err(ops::relu_backward(co, x), autograd::finite_diff_grad<double>(x, eval, eps)));
  }
  {
    auto x = away_from_kinks({2, 3, 6, 6}, rng);
    const auto co = random_uniform<double>(ops::block_mean(x, 2).shape(), rng);
    auto eval = [&] { return dot(co, ops::block_mean(x, 2)); };
    track("block_mean", max_rel_err(ops::block_mean_backward(co, x.shape(), 2),
                                    autograd::finite_diff_grad<double>(x, eval, eps)));
  }
  for (const auto mode : {ops::Upsample::kNearest, ops::Upsample::kBilinear}) {
    auto x = away_from_kinks({2, 2, 3, 3}, rng);
    const auto co = random_uniform<double>(ops::upsample(x, 2, mode).shape(), rng);
    auto eval = [&] { return dot(co, ops::upsample(x, 2, mode)); };
    track("upsample", max_rel_err(ops::upsample_backward(co, x.shape(), 2, mode),
                                  autograd::finite_diff_grad<double>(x, eval, eps)));
  }
  {
    auto x = away_from_kinks({2, 2, kGroupSize, 4, 4}, rng);
    const auto co = random_uniform<double>(ops::orientation_pool(x).shape(), rng);
    auto eval = [&] { return dot(co, ops::orientation_pool(x)); };
    track("orientation_pool", max_rel_err(ops::orientation_pool_backward(co, x.shape()),
                                          autograd::finite_diff_grad<double>(x, eval, eps)));
  }
  {
    auto logits = away_from_kinks({2, 3, 4, 4}, rng);
    Tensor<int32_t> target({2, 4, 4});
    for (int64_t i = 0; i < target.numel(); ++i) {
      target[i] = std::uniform_int_distribution<int32_t>(0, 2)(rng);
    }
    auto eval = [&] { return ops::cross_entropy(logits, target); };
    track("cross_entropy", max_rel_err(ops::cross_entropy_backward(1.0, logits, target),
                                       autograd::finite_diff_grad<double>(logits, eval, eps)));
  }

  // full tape composite covering add/concat wiring plus parameter
  // accumulation: two lifted branches, group conv, both upsample modes,
  // orientation pooling, cross entropy
  {
    auto x = away_from_kinks({2, 1, 8, 8}, rng);
    autograd::Param<double> w1("w1", random_uniform<double>({2, 1, 3, 3}, rng));
    autograd::Param<double> w1b("w1b", random_uniform<double>({2, 1, 3, 3}, rng));
    autograd::Param<double> gamma("gamma", random_uniform<double>({2}, rng, 0.5, 1.5));
    autograd::Param<double> beta("beta", random_uniform<double>({2}, rng, 0.3, 0.8));
    autograd::Param<double> w2("w2", random_uniform<double>({2, 2, kGroupSize, 3, 3}, rng));
    autograd::Param<double> b2("b2", random_uniform<double>({2}, rng));
    Tensor<int32_t> target({2, 8, 8});
    for (int64_t i = 0; i < target.numel(); ++i) {
      target[i] = std::uniform_int_distribution<int32_t>(0, 3)(rng);
    }
    Tensor<double> rm({2}), rv({2});

    auto forward = [&](autograd::Tape<double>& tape) {
      auto m = rm, v = rv;
      const autograd::Var xin = tape.constant(x);
      const autograd::Var f1 = tape.lift_conv(xin, tape.param(&w1), autograd::kNoVar, 1, 1);
      const autograd::Var f2 = tape.lift_conv(xin, tape.param(&w1b), autograd::kNoVar, 1, 1);
      const autograd::Var norm =
          tape.batchnorm(f1, tape.param(&gamma), tape.param(&beta), m, v, 0.1, 1e-5, true);
      const autograd::Var s = tape.add(tape.relu(norm), f2);
      const autograd::Var g = tape.group_conv(s, tape.param(&w2), tape.param(&b2), 2, 1);
      const autograd::Var u1 = tape.upsample(g, 2, ops::Upsample::kNearest);
      const autograd::Var u2 = tape.upsample(g, 2, ops::Upsample::kBilinear);
      const autograd::Var cat = tape.concat(u1, u2);
      const autograd::Var logits = tape.orientation_pool(cat);
      return tape.cross_entropy(logits, target);
    };

    for (auto* p : {&w1, &w1b, &gamma, &beta, &w2, &b2}) p->zero_grad();
    autograd::Tape<double> tape;
    tape.backward(forward(tape));

    auto eval = [&] {
      autograd::Tape<double> t;
      return t.value(forward(t))[0];
    };
    for (auto* p : {&w1, &w1b, &gamma, &beta, &w2, &b2}) {
      track(("tape " + p->name).c_str(), max_rel_err(p->grad, autograd::finite_diff_grad<double>(p->value, eval, eps)));
    }
  }

  return {worst <= tol, strf("all ops vs central differences: worst %.2e (%s), tol 1e-6", worst,
                             worst_op.c_str())};
}

std::pair<bool, std::string> param_parity() {
  double ratios[3] = {0, 0, 0};
  bool ok = true;
  const int bases[3] = {16, 32, 64};
  for (int i = 0; i < 3; ++i) {
    const auto g = models::build_model<float>(arch_cfg("ger-unet", bases[i]))->parameter_count();
    const auto r = models::build_model<float>(arch_cfg("r-unet", bases[i]))->parameter_count();
    ratios[i] = static_cast<double>(g) / static_cast<double>(r);
    ok = ok && ratios[i] >= 0.90 && ratios[i] <= 1.15;
  }
  for (const double c : {16.0, 32.0, 64.0}) {
    const double w = c / std::sqrt(8.0);
    ok = ok && std::abs(9.0 * 8.0 * w * w - 9.0 * c * c) <= 1e-9 * 9.0 * c * c;
  }
  return {ok, strf("ratios %.4f / %.4f / %.4f at base 16/32/64 (bound [0.90,1.15]); "
                   "k^2*8*(C/sqrt(8))^2 = k^2*C^2 holds",
                   ratios[0], ratios[1], ratios[2])};
}

std::pair<bool, std::string> ds_train() {
  const auto pool = synth(20260818, 250, 64);  // 200 train / 50 val via val_fraction
  const auto test = synth(909090, 50, 64);
  const auto test_t = transformed_copy(test, 777);

  // converges well before the 30-epoch allowance, so train fewer epochs to
  // keep this criterion inside its wall-clock budget
  train::TrainConfig tc;
  tc.epochs_max = 10;
  tc.batch_size = 4;
  tc.lr = 1e-3;
  tc.patience = 5;
  tc.val_fraction = 0.2;
  tc.seed = 42;

  const auto t0 = Clock::now();
  auto ger = models::build_model<float>(arch_cfg("ger-unet", 16));
  ger->init_params(1);
  const auto hist_g = train::train_model(*ger, pool, tc, "", &std::cout);
  const double ger_secs = seconds_since(t0);

  auto reg = models::build_model<float>(arch_cfg("r-unet", 16));
  reg->init_params(1);
  train::train_model(*reg, pool, tc, "", &std::cout);

  const double g_plain = test_dice_f64(*ger, test);
  const double g_trans = test_dice_f64(*ger, test_t);
  const double r_plain = test_dice_f64(*reg, test);
  const double r_trans = test_dice_f64(*reg, test_t);

  const bool ok = g_plain >= 0.90 && static_cast<int>(hist_g.epochs.size()) <= 30 &&
                  ger_secs <= 1800.0 && r_trans < g_trans &&
                  std::abs(g_trans - g_plain) <= 1e-6;
  return {ok, strf("ger dice %.4f (transformed %.4f, drift %.1e) in %zu epochs / %.0fs; "
                   "r-unet dice %.4f -> transformed %.4f",
                   g_plain, g_trans, std::abs(g_trans - g_plain), hist_g.epochs.size(), ger_secs,
                   r_plain, r_trans)};
}

std::pair<bool, std::string> metric_oracles() {
  std::mt19937 rng(2718);
  int scalar_exact = 0, hd_exact = 0, hd_checked = 0;
  for (int i = 0; i < 100; ++i) {
    Tensor<uint8_t> pred({8, 8}), gt({8, 8});
    const double dp = (i % 10 == 0) ? 0.0 : std::uniform_real_distribution<double>(0.1, 0.9)(rng);
    const double dg = (i % 7 == 0) ? 0.0 : std::uniform_real_distribution<double>(0.1, 0.9)(rng);
    std::bernoulli_distribution bp(dp), bg(dg);
    for (int64_t j = 0; j < 64; ++j) {
      pred[j] = bp(rng) ? 1 : 0;
      gt[j] = bg(rng) ? 1 : 0;
    }

    const auto m = metrics::scalar_metrics(metrics::confusion(pred, gt));
    const auto o = oracle::set_metrics(pred, gt);
    if (m.dice == o.dice && m.jaccard == o.jaccard && m.precision == o.precision &&
        m.recall == o.recall && m.specificity == o.specificity && m.f1 == o.f1) {
      ++scalar_exact;
    }

    for (const double pct : {100.0, 95.0, 50.0}) {
      ++hd_checked;
      double brute = 0;
      const bool brute_defined = oracle::brute_hausdorff(pred, gt, pct, &brute);
      const auto fast = metrics::hausdorff(pred, gt, pct);
      if (fast.has_value() == brute_defined && (!fast.has_value() || *fast == brute)) ++hd_exact;
    }
  }
  const bool ok = scalar_exact == 100 && hd_exact == hd_checked;
  return {ok, strf("scalar metrics exact on %d/100 pairs; hausdorff exact on %d/%d cases",
                   scalar_exact, hd_exact, hd_checked)};
}

std::pair<bool, std::string> skip_modes() {
  const auto ds = synth(333, 16, 64);
  train::TrainConfig tc;
  tc.epochs_max = 1;
  tc.batch_size = 4;
  tc.lr = 1e-3;
  tc.seed = 12;

  std::string detail;
  bool ok = true;
  for (const auto& skip : {std::string("add"), std::string("concat")}) {
    auto model = models::build_model<float>(arch_cfg("ger-unet", 16, skip));
    model->init_params(6);
    train::train_model(*model, ds, tc);
    const double e32 = equicheck::model_check(*model, 1, 61, 64).max_err();
    auto wide = models::build_model<double>(arch_cfg("ger-unet", 16, skip));
    models::copy_state_cast(*model, *wide);
    const double e64 = equicheck::model_check(*wide, 1, 62, 64).max_err();
    ok = ok && e32 <= 1e-4 && e64 <= 1e-8;
    if (!detail.empty()) detail += "; ";
    detail += strf("%s: trained 1 epoch, f32 err %.2e, f64 err %.2e", skip.c_str(), e32, e64);
  }
  return {ok, detail};
}

std::pair<bool, std::string> format_round_trips() {
  TempDir tmp;
  std::mt19937 rng(99);
  bool ok = true;

  const auto f32 = random_uniform<float>({2, 3, 4}, rng);
  io::write_tensor(tmp.file("a.gten"), f32);
  const auto f32b = io::read_tensor<float>(tmp.file("a.gten"));
  for (int64_t i = 0; i < f32.numel(); ++i) ok = ok && f32b[i] == f32[i];

  const auto f64 = random_uniform<double>({7}, rng);
  io::write_tensor(tmp.file("b.gten"), f64);
  const auto f64b = io::read_tensor<double>(tmp.file("b.gten"));
  for (int64_t i = 0; i < f64.numel(); ++i) ok = ok && f64b[i] == f64[i];

  Tensor<uint8_t> u8({4, 5});
  for (int64_t i = 0; i < u8.numel(); ++i) u8[i] = static_cast<uint8_t>((i * 13) % 256);
  io::write_tensor(tmp.file("c.gten"), u8);
  const auto u8b = io::read_tensor<uint8_t>(tmp.file("c.gten"));
  for (int64_t i = 0; i < u8.numel(); ++i) ok = ok && u8b[i] == u8[i];
  const bool tensors_ok = ok;

  auto model = models::build_model<float>(arch_cfg("ger-unet", 4));
  model->init_params(21);
  checkpoint::TrainMeta meta;
  meta.epoch = 3;
  meta.best_val_dice = 0.5;
  meta.adam_t = 7;
  std::vector<Tensor<float>> m, v;
  for (const auto* p : model->parameters()) {
    m.push_back(random_uniform<float>(p->value.shape(), rng));
    v.push_back(random_uniform<float>(p->value.shape(), rng, 0.0f, 1.0f));
  }
  checkpoint::save_model(tmp.file("m.geru"), *model, meta, &m, &v);
  auto fresh = models::build_model<float>(arch_cfg("ger-unet", 4));
  std::vector<Tensor<float>> m2, v2;
  const auto meta2 = checkpoint::load_model(tmp.file("m.geru"), *fresh, &m2, &v2);
  ok = meta2.epoch == 3 && meta2.best_val_dice == 0.5 && meta2.adam_t == 7 && meta2.has_adam;
  const auto sa = model->state();
  const auto sb = fresh->state();
  ok = ok && sa.size() == sb.size();
  for (size_t i = 0; ok && i < sa.size(); ++i) {
    for (int64_t j = 0; j < sa[i].second->numel(); ++j) {
      ok = ok && (*sa[i].second)[j] == (*sb[i].second)[j];
    }
  }
  ok = ok && m2.size() == m.size() && v2.size() == v.size();
  for (size_t i = 0; ok && i < m.size(); ++i) {
    for (int64_t j = 0; j < m[i].numel(); ++j) {
      ok = ok && m2[i][j] == m[i][j] && v2[i][j] == v[i][j];
    }
  }
  const bool ckpt_ok = ok;

  Tensor<uint8_t> mask({5, 6});
  for (int64_t i = 0; i < mask.numel(); ++i) mask[i] = (i % 4 == 0) ? 1 : 0;
  io::write_pgm(tmp.file("m.pgm"), mask);
  const auto mb = io::read_pgm(tmp.file("m.pgm"));
  bool pgm_ok = mb.shape() == mask.shape();
  for (int64_t i = 0; pgm_ok && i < mask.numel(); ++i) {
    pgm_ok = mb[i] == (mask[i] ? 255 : 0);
  }

  return {tensors_ok && ckpt_ok && pgm_ok,
          strf("tensor files %s, checkpoint %s, pgm %s", tensors_ok ? "exact" : "BROKEN",
               ckpt_ok ? "exact" : "BROKEN", pgm_ok ? "exact" : "BROKEN")};
}

}  // namespace

int main() {
  std::printf("acceptance gate, %d criteria\n", 11);
  criterion("GROUP-AXIOMS", group_axioms);
  criterion("LAYER-EQ", layer_eq);
  criterion("TRANS-EQ", trans_eq);
  criterion("ORACLE-EQ", oracle_eq);
  criterion("E2E-EQ", e2e_eq);
  criterion("GRAD-CHECK", grad_check);
  criterion("PARAM-PARITY", param_parity);
  criterion("DS-TRAIN", ds_train);
  criterion("METRIC-ORACLES", metric_oracles);
  criterion("SKIP-MODES", skip_modes);
  criterion("FORMAT", format_round_trips);
  if (g_failures == 0) {
    std::printf("all 11 criteria passed\n");
    return 0;
  }
  std::printf("%d criteria FAILED\n", g_failures);
  return 1;
}
