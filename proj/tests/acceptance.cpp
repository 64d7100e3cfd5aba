// Release gate: one self-contained check per shipping criterion, each
// printed as a PASS/FAIL line with its pinned tolerance. Exits nonzero
// when any check fails. The end-to-end check spawns the CLI named by
// the SDRNET_CLI environment variable.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sdrnet/class_map.hpp"
#include "sdrnet/dilation.hpp"
#include "sdrnet/image.hpp"
#include "sdrnet/loss.hpp"
#include "sdrnet/metrics.hpp"
#include "sdrnet/model.hpp"
#include "sdrnet/optimizer.hpp"
#include "sdrnet/synthetic.hpp"
#include "sdrnet/tiling.hpp"
#include "sdrnet/trainer.hpp"

#include "oracles.hpp"
#include "refnet.hpp"

namespace fs = std::filesystem;
using namespace sdrnet;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Tensor rand_input(const Shape& shape, uint64_t seed) {
  Rng rng(seed, 3);
  Tensor x = Tensor::zeros(shape);
  for (int64_t i = 0; i < x.numel(); ++i)
    x.data()[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
  return x;
}

std::vector<int32_t> rand_targets(int64_t count, int num_classes,
                                  uint64_t seed) {
  Rng rng(seed, 5);
  std::vector<int32_t> t(static_cast<size_t>(count));
  for (auto& v : t)
    v = static_cast<int32_t>(rng.uniform_int(0, num_classes - 1));
  return t;
}

// 1. Gridding verdicts against the brute-force 2-D footprint oracle over
//    every non-decreasing schedule with depth <= 4, rates <= 10, kernel
//    in {3,5}. 100% agreement, under a minute.
Outcome check_gridding_oracle() {
  auto t0 = Clock::now();
  int64_t checked = 0, disagreements = 0;
  std::string first_bad;
  for (int kernel : {3, 5}) {
    std::vector<int> rates;
    auto rec = [&](auto&& self, int lo) -> void {
      if (!rates.empty()) {
        DilationSchedule s{rates, kernel};
        bool lib = check_gridding(s).passes;
        bool ref = oracle::footprint_2d(s).full();
        ++checked;
        if (lib != ref && ++disagreements == 1) {
          first_bad = strf("k=%d rates=", kernel);
          for (int r : rates) first_bad += strf("%d,", r);
        }
      }
      if (rates.size() == 4) return;
      for (int r = lo; r <= 10; ++r) {
        rates.push_back(r);
        self(self, r);
        rates.pop_back();
      }
    };
    rec(rec, 1);
  }
  double dt = since(t0);
  bool pass = disagreements == 0 && checked == 2000 && dt < 60.0;
  std::string detail = strf("%lld schedules, %lld disagreements, %.1fs (cap 60s)",
                            static_cast<long long>(checked),
                            static_cast<long long>(disagreements), dt);
  if (!first_bad.empty()) detail += " first at " + first_bad;
  return {pass, detail};
}

// 2. Both heads of the stacked model emit batch x classes x H x W logits
//    at the input resolution, for the default width at 256 and the
//    eighth width at 64. Exact shape match.
Outcome check_output_shapes() {
  auto run = [](int size, int width, uint64_t seed) -> std::string {
    ModelConfig cfg;
    cfg.input_size = size;
    cfg.base_width = width;
    SdrNet model(cfg, seed);
    model.set_training(false);
    NoGradGuard ng;
    ModelOutput out = model.forward(rand_input({2, 3, size, size}, seed));
    Shape want{2, cfg.num_classes, size, size};
    if (!out.main.defined() || out.main.shape() != want)
      return strf("main head at %d px has the wrong shape", size);
    if (!out.inter.defined() || out.inter.shape() != want)
      return strf("intermediate head at %d px has the wrong shape", size);
    return "";
  };
  std::string err = run(256, 64, 21);
  if (err.empty()) err = run(64, 8, 22);
  if (!err.empty()) return {false, err};
  return {true, "2x6x256x256 at width 64 and 2x6x64x64 at width 8, exact"};
}

// 3. With both loss weights on, every trainable tensor receives gradient
//    mass; with only the intermediate head weighted, everything past it
//    (second subnetwork and the main head) stays at exactly zero.
Outcome check_gradient_routing() {
  ModelConfig cfg;
  cfg.input_size = 64;
  cfg.base_width = 8;
  SdrNet model(cfg, 5);
  model.set_training(true);
  Tensor x = rand_input({2, 3, 64, 64}, 31);
  std::vector<int32_t> targets = rand_targets(2 * 64 * 64, cfg.num_classes, 32);
  LossConfig lc = default_loss_config(cfg.num_classes);

  model.zero_grads();
  ModelOutput out = model.forward(x);
  backward(total_loss(weighted_ce(out.main, targets, lc),
                      weighted_ce(out.inter, targets, lc), lc));
  auto params = model.named_parameters();
  int64_t live = 0;
  for (const auto& p : params) {
    double norm_sq = 0.0;
    if (p.tensor.has_grad())
      for (float g : p.tensor.grad()) norm_sq += static_cast<double>(g) * g;
    if (!(std::sqrt(norm_sq) > 1e-12))
      return {false, strf("%s got no gradient under a=1 b=0.4 (tol 1e-12)",
                          p.name.c_str())};
    ++live;
  }

  LossConfig inter_only = lc;
  inter_only.alpha = 0.f;
  inter_only.beta = 1.f;
  model.zero_grads();
  out = model.forward(x);
  backward(total_loss(weighted_ce(out.main, targets, inter_only),
                      weighted_ce(out.inter, targets, inter_only), inter_only));
  const char* tail[] = {"enc2.", "att2.", "drb2.", "dec2.", "head_main."};
  int64_t frozen = 0;
  bool inter_live = false;
  for (const auto& p : params) {
    bool is_tail = false;
    for (const char* prefix : tail)
      if (p.name.rfind(prefix, 0) == 0) is_tail = true;
    if (is_tail) {
      if (p.tensor.has_grad())
        for (float g : p.tensor.grad())
          if (g != 0.f)
            return {false, strf("%s has gradient %g under a=0 b=1, want 0",
                                p.name.c_str(), static_cast<double>(g))};
      ++frozen;
    } else if (p.name.rfind("head_inter.", 0) == 0 && p.tensor.has_grad()) {
      for (float g : p.tensor.grad()) inter_live |= g != 0.f;
    }
  }
  if (!inter_live)
    return {false, "intermediate head got no gradient under a=0 b=1"};
  return {true, strf("%lld tensors live under a=1 b=0.4; %lld downstream "
                     "tensors exactly zero under a=0 b=1",
                     static_cast<long long>(live),
                     static_cast<long long>(frozen))};
}

// Shared machinery for the finite-difference checks: Rademacher
// directions, central differences on the double-precision reference,
// relative error floored at the RMS directional derivative.
struct FdResult {
  double worst = 0.0;
  int trials = 0;
  std::string error;
};

FdResult fd_sweep(const ModelConfig& cfg, bool training, int trials,
                  uint64_t seed, double rel_tol) {
  SdrNet model(cfg, 77);
  model.set_training(training);
  Rng rng(seed, 4);
  Tensor x = Tensor::zeros({1, 3, 64, 64});
  for (int64_t i = 0; i < x.numel(); ++i)
    x.data()[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
  std::vector<int32_t> targets(64 * 64);
  for (auto& t : targets)
    t = static_cast<int32_t>(rng.uniform_int(0, cfg.num_classes - 1));
  LossConfig lc = default_loss_config(cfg.num_classes);

  model.zero_grads();
  ModelOutput out = model.forward(x);
  backward(total_loss(weighted_ce(out.main, targets, lc),
                      weighted_ce(out.inter, targets, lc), lc));

  auto params = model.named_parameters();
  double gnorm_sq = 0.0;
  int64_t total = 0;
  for (const auto& p : params) {
    total += p.tensor.numel();
    if (p.tensor.has_grad())
      for (float g : p.tensor.grad()) gnorm_sq += static_cast<double>(g) * g;
  }
  const double gnorm = std::sqrt(gnorm_sq);
  const double dnorm = std::sqrt(static_cast<double>(total));

  refnet::Params P(model);
  refnet::Arr xa = refnet::from_tensor(x);
  const double eps = 1e-6;
  FdResult res;
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<std::vector<float>> dir;
    double analytic = 0.0;
    for (const auto& p : params) {
      std::vector<float> d(static_cast<size_t>(p.tensor.numel()));
      for (size_t i = 0; i < d.size(); ++i)
        d[i] = rng.next_u32() & 1u ? 1.f : -1.f;
      if (p.tensor.has_grad())
        for (size_t i = 0; i < d.size(); ++i)
          analytic += static_cast<double>(p.tensor.grad()[i]) * d[i];
      dir.push_back(std::move(d));
    }
    analytic /= dnorm;

    P.perturb(dir, eps / dnorm);
    double lp = refnet::model_loss(cfg, P, xa, targets, lc, training);
    P.perturb(dir, -eps / dnorm);
    double lm = refnet::model_loss(cfg, P, xa, targets, lc, training);
    P.perturb(dir, 0.0);

    double fd = (lp - lm) / (2.0 * eps);
    double rel = std::fabs(fd - analytic) /
                 std::max({std::fabs(analytic), std::fabs(fd), gnorm / dnorm});
    res.worst = std::max(res.worst, rel);
    ++res.trials;
    if (rel >= rel_tol && res.error.empty())
      res.error = strf("trial %d: analytic %.6g fd %.6g rel %.2g", trial,
                       analytic, fd, rel);
  }
  return res;
}

// 4. Analytic gradients against double-precision central differences on
//    width-reduced models: 20 directions through the basic-block stack in
//    training mode, plus 8 through the bottleneck stack with frozen
//    normalizer statistics (the training-mode float32 forward of the
//    ~50-normalization bottleneck stack drifts ~4e-3 from the double
//    reference, swamping the tolerance for reasons unrelated to the
//    gradients). Relative error < 1e-3 per direction.
Outcome check_gradient_fd() {
  const double rel_tol = 1e-3;
  ModelConfig basic;
  basic.input_size = 32;
  basic.base_width = 8;
  basic.backbone = Backbone::Resnet18Style;
  FdResult a = fd_sweep(basic, true, 20, 101, rel_tol);
  if (!a.error.empty()) return {false, "basic stack " + a.error};

  ModelConfig bneck = basic;
  bneck.backbone = Backbone::Resnet50Style;
  FdResult b = fd_sweep(bneck, false, 8, 113, rel_tol);
  if (!b.error.empty()) return {false, "bottleneck stack " + b.error};
  return {true, strf("worst rel %.1e over %d training-mode and %.1e over %d "
                     "eval-mode directions (tol 1e-3)",
                     a.worst, a.trials, b.worst, b.trials)};
}

double pixel_accuracy(SdrNet& model, const std::vector<Sample>& data) {
  int64_t correct = 0, counted = 0;
  for (const Sample& s : data) {
    IndexMask pred = argmax_mask(predict_logits(model, s.image));
    for (int64_t i = 0; i < s.mask.numel(); ++i) {
      if (s.mask.values[static_cast<size_t>(i)] == 255) continue;
      ++counted;
      if (pred.values[static_cast<size_t>(i)] ==
          s.mask.values[static_cast<size_t>(i)])
        ++correct;
    }
  }
  return counted ? static_cast<double>(correct) / static_cast<double>(counted)
                 : 0.0;
}

// 5. The stacked model at a quarter of the default width memorizes eight
//    synthetic 64x64 frames in 300 iterations (batch 4, base lr 1e-3,
//    stock polynomial decay): >= 99% pixel accuracy, under ten minutes.
Outcome check_overfit() {
  auto t0 = Clock::now();
  ModelConfig cfg;
  cfg.input_size = 64;
  cfg.base_width = 16;
  cfg.num_classes = 2;
  SdrNet model(cfg, 1);
  std::vector<Sample> data = make_synthetic_dataset(8, 64, cfg.num_classes, 7);
  TrainConfig tc;
  tc.batch_size = 4;
  tc.max_iter = 300;
  tc.base_lr = 1e-3;
  tc.seed = 2;
  train(model, data, {}, tc, default_loss_config(cfg.num_classes),
        AugmentPolicy{});
  double acc = pixel_accuracy(model, data);
  double dt = since(t0);
  return {acc >= 0.99 && dt < 600.0,
          strf("pixel accuracy %.4f (floor 0.99) in %.0fs (cap 600s)", acc, dt)};
}

// 6. Capacity knobs order the summary counts: the basic-block variant is
//    smaller and cheaper than the bottleneck default, and dropping
//    attention or the second subnetwork sheds parameters.
Outcome check_ablation_order() {
  auto summary_for = [](ModelConfig cfg) {
    SdrNet model(cfg, 1);
    return summarize(model);
  };
  ModelConfig base;
  ModelSummary full = summary_for(base);
  ModelConfig light = base;
  light.backbone = Backbone::Resnet18Style;
  ModelSummary basic = summary_for(light);
  ModelConfig plain = base;
  plain.use_attention = false;
  ModelSummary no_att = summary_for(plain);
  ModelConfig single = base;
  single.stacked = false;
  ModelSummary one_stage = summary_for(single);

  bool pass = basic.parameter_count < full.parameter_count &&
              basic.flops_estimate < full.flops_estimate &&
              no_att.parameter_count < full.parameter_count &&
              one_stage.parameter_count < full.parameter_count;
  return {pass,
          strf("params %lld > {basic %lld, no-attention %lld, single %lld}; "
               "flops %lld > basic %lld",
               static_cast<long long>(full.parameter_count),
               static_cast<long long>(basic.parameter_count),
               static_cast<long long>(no_att.parameter_count),
               static_cast<long long>(one_stage.parameter_count),
               static_cast<long long>(full.flops_estimate),
               static_cast<long long>(basic.flops_estimate))};
}

// 7. Scores from the confusion matrix against a naive counting oracle on
//    100 random mask pairs (tol 1e-12), plus a hand-checked F1: precision
//    0.9350 and recall 0.9764 must print as 0.9553 at four decimals.
Outcome check_metric_oracle() {
  const double tol = 1e-12;
  Rng rng(888, 1);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 6;
    IndexMask gt{32, 32, {}}, pred{32, 32, {}};
    gt.values.resize(32 * 32);
    pred.values.resize(32 * 32);
    for (auto& v : gt.values) {
      v = static_cast<int32_t>(rng.uniform_int(0, k - 1));
      if (rng.uniform_int(0, 12) == 0) v = 255;
    }
    for (auto& v : pred.values)
      v = static_cast<int32_t>(rng.uniform_int(0, k - 1));

    ConfusionMatrix conf = make_confusion(make_synthetic_class_map(k));
    accumulate(conf, pred, gt);
    std::vector<int> excluded = trial % 2 ? std::vector<int>{5}
                                          : std::vector<int>{};
    MetricsReport rep = metrics(conf, excluded);

    std::vector<oracle::ClassStat> st =
        oracle::count_stats(pred.values, gt.values, k, 255);
    double correct = 0.0, denom = 0.0, f1_sum = 0.0;
    int included = 0;
    for (int c = 0; c < k; ++c) {
      const oracle::ClassStat& s = st[static_cast<size_t>(c)];
      double p = s.tp + s.fp ? static_cast<double>(s.tp) / (s.tp + s.fp) : 0.0;
      double r = s.tp + s.fn ? static_cast<double>(s.tp) / (s.tp + s.fn) : 0.0;
      double sp = s.tn + s.fp ? static_cast<double>(s.tn) / (s.tn + s.fp) : 0.0;
      double f1 = p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
      size_t i = static_cast<size_t>(c);
      worst = std::max({worst, std::fabs(p - rep.precision[i]),
                        std::fabs(r - rep.recall[i]),
                        std::fabs(sp - rep.specificity[i]),
                        std::fabs(f1 - rep.f1[i])});
      if (excluded.empty() || c != 5) {
        correct += static_cast<double>(s.tp);
        denom += static_cast<double>(s.tp + s.fn);
        f1_sum += f1;
        ++included;
      }
    }
    worst = std::max({worst, std::fabs(correct / denom - rep.oa),
                      std::fabs(f1_sum / included - rep.mean_f1)});
    if (worst > tol)
      return {false, strf("trial %d drifted %.2e from the counting oracle "
                          "(tol 1e-12)", trial, worst)};
  }

  // Integer counts chosen so tp/(tp+fp) is exactly 187/200 = 0.9350 and
  // tp/(tp+fn) exactly 2441/2500 = 0.9764.
  ConfusionMatrix conf = make_confusion(make_synthetic_class_map(2));
  conf.at(0, 0) = 187 * 2441;
  conf.at(0, 1) = 187 * 59;
  conf.at(1, 0) = 13 * 2441;
  conf.at(1, 1) = 1000000;
  MetricsReport rep = metrics(conf, {});
  double expect = 2.0 * (0.9350 * 0.9764) / (0.9350 + 0.9764);
  if (std::fabs(rep.precision[0] - 0.9350) > tol ||
      std::fabs(rep.recall[0] - 0.9764) > tol ||
      std::fabs(rep.f1[0] - expect) > tol ||
      std::llround(rep.f1[0] * 1e4) != 9553)
    return {false, strf("hand-checked f1 came out %.6f, want 0.9553 at four "
                        "decimals", rep.f1[0])};
  return {true, strf("worst oracle drift %.1e over 100 mask pairs (tol "
                     "1e-12); spot f1 %.4f", worst, rep.f1[0])};
}

// 8. The polynomial decay factor hits 1 at iteration zero, 0 at the last,
//    0.5^0.9 at the midpoint (tol 1e-9), and a logged 50-iteration run
//    never increases the learning rate.
Outcome check_lr_schedule() {
  const double tol = 1e-9;
  const int64_t max_iter = 1000;
  if (std::fabs(lr_factor(0, max_iter, 0.9) - 1.0) > tol ||
      std::fabs(lr_factor(max_iter, max_iter, 0.9)) > tol ||
      std::fabs(lr_factor(max_iter / 2, max_iter, 0.9) - std::pow(0.5, 0.9)) >
          tol)
    return {false, "endpoint or midpoint factor off by more than 1e-9"};

  ModelConfig cfg;
  cfg.input_size = 32;
  cfg.base_width = 8;
  cfg.num_classes = 3;
  SdrNet model(cfg, 9);
  std::vector<Sample> data = make_synthetic_dataset(4, 32, 3, 7);
  TrainConfig tc;
  tc.batch_size = 2;
  tc.max_iter = 50;
  tc.base_lr = 1e-3;
  tc.seed = 3;
  TrainResult res = train(model, data, {}, tc,
                          default_loss_config(cfg.num_classes), AugmentPolicy{});
  if (res.log.size() != 50)
    return {false, strf("expected 50 log rows, got %d",
                        static_cast<int>(res.log.size()))};
  if (res.log.front().lr != 1e-3)
    return {false, "first logged lr is not the base lr"};
  for (size_t i = 1; i < res.log.size(); ++i)
    if (res.log[i].lr > res.log[i - 1].lr)
      return {false, strf("lr rose at iteration %d",
                          static_cast<int>(res.log[i].iter))};
  return {true, strf("factors exact to 1e-9; logged lr fell %.3g -> %.3g "
                     "over 50 iterations", res.log.front().lr,
                     res.log.back().lr)};
}

// 9. Weighted cross-entropy with unit weights against an independent
//    long-double implementation on 50 random tensors (tol 1e-6), and
//    exact insensitivity of loss and gradients to ignored pixels.
Outcome check_loss_equivalence() {
  const double tol = 1e-6;
  Rng rng(417, 2);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    int n = 2, h = 5, w = 7;
    int k = 2 + trial % 5;
    Tensor lg = Tensor::zeros({n, k, h, w});
    for (int64_t i = 0; i < lg.numel(); ++i)
      lg.data()[i] = static_cast<float>(rng.uniform(-4.0, 4.0));
    std::vector<int32_t> tgt(static_cast<size_t>(n) * h * w);
    for (auto& t : tgt) {
      int64_t v = rng.uniform_int(0, k);
      t = v == k ? 255 : static_cast<int32_t>(v);
    }
    std::vector<float> unit(static_cast<size_t>(k), 1.f);
    double got = ops::weighted_cross_entropy(lg, tgt, unit, 255).item();
    double want = oracle::ce_mean(lg.vec(), n, k, h, w, tgt, nullptr, 255);
    worst = std::max(worst, std::fabs(got - want));
    if (worst > tol)
      return {false, strf("trial %d: loss %.8f vs oracle %.8f (tol 1e-6)",
                          trial, got, want)};
  }

  int n = 1, k = 3, h = 4, w = 4;
  Tensor a = Tensor::zeros({n, k, h, w}, true);
  for (int64_t i = 0; i < a.numel(); ++i)
    a.data()[i] = static_cast<float>(rng.uniform(-2.0, 2.0));
  std::vector<int32_t> tgt(static_cast<size_t>(h) * w);
  for (int64_t i = 0; i < h * w; ++i)
    tgt[static_cast<size_t>(i)] =
        i % 2 ? 255 : static_cast<int32_t>(i % k);  // checkerboard of ignores
  std::vector<float> unit(static_cast<size_t>(k), 1.f);
  Tensor loss = ops::weighted_cross_entropy(a, tgt, unit, 255);
  float l0 = loss.item();
  backward(loss);
  for (int64_t i = 0; i < h * w; ++i) {
    if (tgt[static_cast<size_t>(i)] != 255) continue;
    for (int c = 0; c < k; ++c)
      if (a.grad()[static_cast<size_t>(c * h * w + i)] != 0.f)
        return {false, strf("ignored pixel %lld holds gradient mass",
                            static_cast<long long>(i))};
  }
  Tensor b = Tensor::zeros({n, k, h, w});
  std::copy(a.data(), a.data() + a.numel(), b.data());
  for (int64_t i = 0; i < h * w; ++i)
    if (tgt[static_cast<size_t>(i)] == 255)
      for (int c = 0; c < k; ++c) b.data()[c * h * w + i] += 3.75f;
  float l1 = ops::weighted_cross_entropy(b, tgt, unit, 255).item();
  if (l0 != l1)
    return {false, "perturbing ignored logits moved the loss"};
  return {true, strf("worst |loss - oracle| %.1e over 50 tensors (tol 1e-6); "
                     "ignored pixels exactly inert", worst)};
}

// 10. Byte-exact color codec over the survey palette plus the ignore
//     color, bitwise tile->stitch identity on a non-overlapping plan, and
//     the full-frame plan (2494x2064, 256/256) with clamped final anchors.
Outcome check_data_roundtrips() {
  ClassMap map = isprs_class_map();
  IndexMask m{2, 7, {}};
  m.values = {0, 1, 2, 3, 4, 5, 255, 255, 5, 4, 3, 2, 1, 0};
  ImageU8 color = decode_mask(m, map);
  IndexMask back = encode_mask(color, map);
  if (back.values != m.values)
    return {false, "mask -> color -> mask changed at least one label"};
  ImageU8 again = decode_mask(back, map);
  if (again.pixels != color.pixels)
    return {false, "color -> mask -> color changed at least one byte"};

  const int k = 3;
  Tensor frame = rand_input({k, 96, 128}, 91);
  TilePlan plan = plan_tiles(96, 128, 32, 32);
  std::vector<TilePrediction> preds;
  for (auto [row, col] : plan.windows) {
    TilePrediction p;
    p.row = row;
    p.col = col;
    p.logits = Tensor::zeros({k, 32, 32});
    for (int c = 0; c < k; ++c)
      for (int64_t y = 0; y < 32; ++y)
        for (int64_t x = 0; x < 32; ++x)
          p.logits.data()[(c * 32 + y) * 32 + x] =
              frame.data()[(c * 96 + row + y) * 128 + col + x];
    preds.push_back(std::move(p));
  }
  Tensor stitched = stitch(preds, plan, k);
  for (int64_t i = 0; i < frame.numel(); ++i)
    if (stitched.data()[i] != frame.data()[i])
      return {false, "non-overlapping stitch is not bitwise identity"};

  TilePlan survey = plan_tiles(2494, 2064, 256, 256);
  if (survey.windows.size() != 90 ||
      survey.windows.front() != std::pair<int64_t, int64_t>{0, 0} ||
      survey.windows.back() != std::pair<int64_t, int64_t>{2238, 1808})
    return {false, strf("survey-frame plan has %d windows, last (%lld,%lld)",
                        static_cast<int>(survey.windows.size()),
                        static_cast<long long>(survey.windows.back().first),
                        static_cast<long long>(survey.windows.back().second))};
  return {true, strf("palette codec byte-exact; %d-window stitch bitwise; "
                     "survey plan 90 windows ending (2238,1808)",
                     static_cast<int>(plan.windows.size()))};
}

struct CliStep {
  int code = -1;
  std::string err;
};

CliStep run_step(const std::string& cli, const fs::path& root,
                 const std::string& args) {
  fs::path out = root / "step-stdout";
  fs::path err = root / "step-stderr";
  std::string cmd =
      cli + " " + args + " > " + out.string() + " 2> " + err.string();
  int status = std::system(cmd.c_str());
  CliStep s;
  s.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(err);
  std::ostringstream ss;
  ss << in.rdbuf();
  s.err = ss.str();
  for (char& c : s.err)
    if (c == '\n') c = ' ';
  if (s.err.size() > 160) s.err = s.err.substr(s.err.size() - 160);
  return s;
}

// 11. The CLI pipeline synth -> tile -> train (50 iterations) -> eval ->
//     predict finishes with exit 0, the metrics CSV parses, and the
//     predicted color PNG has the input frame's dimensions. Under five
//     minutes end to end.
Outcome check_cli_pipeline() {
  auto t0 = Clock::now();
  const char* cli = std::getenv("SDRNET_CLI");
  if (!cli) return {false, "SDRNET_CLI is not set"};
  fs::path root = fs::temp_directory_path() / "sdrnet-acceptance";
  fs::remove_all(root);
  fs::create_directories(root);

  fs::path frames = root / "frames";
  CliStep s = run_step(cli, root,
                       strf("synth --count 2 --size 192 --classes 6 --seed 9 "
                            "--out %s", frames.string().c_str()));
  if (s.code != 0) return {false, "synth exited " + std::to_string(s.code)};
  std::vector<fs::path> images;
  for (const auto& e : fs::directory_iterator(frames)) {
    std::string name = e.path().filename().string();
    if (name.size() > 8 && name.substr(name.size() - 8) == "_img.png")
      images.push_back(e.path());
  }
  std::sort(images.begin(), images.end());
  if (images.size() != 2)
    return {false, strf("synth wrote %d frames, want 2",
                        static_cast<int>(images.size()))};
  auto mask_of = [](const fs::path& img) {
    std::string p = img.string();
    return p.substr(0, p.size() - 8) + "_mask.png";
  };

  fs::path tiles = root / "tiles";
  s = run_step(cli, root,
               strf("tile --image %s --mask %s --tile 64 --stride 64 --out %s",
                    images[0].string().c_str(),
                    mask_of(images[0]).c_str(), tiles.string().c_str()));
  if (s.code != 0) return {false, "tile exited " + std::to_string(s.code)};

  fs::path config = root / "run.ini";
  {
    std::ofstream cfg(config);
    cfg << "[model]\nnum_classes = 6\ninput_size = 64\nbase_width = 8\n"
        << "[train]\nbatch_size = 3\nmax_iter = 50\nseed = 7\n"
        << "[data]\naugment = none\n";
  }
  fs::path run = root / "run";
  s = run_step(cli, root,
               strf("train --config %s --out %s --data %s",
                    config.string().c_str(), run.string().c_str(),
                    tiles.string().c_str()));
  if (s.code != 0)
    return {false, "train exited " + std::to_string(s.code) + ": " + s.err};

  fs::path report = root / "report.txt";
  fs::path csv = root / "metrics.csv";
  s = run_step(cli, root,
               strf("eval --checkpoint %s --data %s --out %s --csv %s",
                    (run / "model.ckpt").string().c_str(),
                    tiles.string().c_str(), report.string().c_str(),
                    csv.string().c_str()));
  if (s.code != 0) return {false, "eval exited " + std::to_string(s.code)};

  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  if (line != "class,tp,fp,tn,fn,precision,recall,specificity,f1")
    return {false, "metrics csv header is off"};
  int rows = 0;
  double oa = -1.0, mean_f1 = -1.0;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() == 2) {
      char* end = nullptr;
      double v = std::strtod(fields[1].c_str(), &end);
      if (*end || v < 0.0 || v > 1.0)
        return {false, "summary row in the metrics csv does not parse"};
      (fields[0] == "oa" ? oa : mean_f1) = v;
      continue;
    }
    if (fields.size() != 9)
      return {false, strf("metrics row has %d fields, want 9",
                          static_cast<int>(fields.size()))};
    for (int i = 1; i <= 4; ++i) {
      char* end = nullptr;
      if (std::strtoll(fields[static_cast<size_t>(i)].c_str(), &end, 10) < 0 ||
          *end)
        return {false, "count column in the metrics csv does not parse"};
    }
    for (int i = 5; i <= 8; ++i) {
      char* end = nullptr;
      double v = std::strtod(fields[static_cast<size_t>(i)].c_str(), &end);
      if (*end || v < 0.0 || v > 1.0)
        return {false, "score column in the metrics csv does not parse"};
    }
    ++rows;
  }
  if (rows != 6 || oa < 0.0 || mean_f1 < 0.0)
    return {false, strf("metrics csv has %d class rows, oa %.3f, mean f1 %.3f",
                        rows, oa, mean_f1)};

  fs::path color = root / "pred_color.png";
  fs::path index = root / "pred_index.png";
  s = run_step(cli, root,
               strf("predict --checkpoint %s --image %s --out %s --index-out %s",
                    (run / "model.ckpt").string().c_str(),
                    images[1].string().c_str(), color.string().c_str(),
                    index.string().c_str()));
  if (s.code != 0) return {false, "predict exited " + std::to_string(s.code)};
  ImageU8 painted = read_png(color.string());
  if (painted.height != 192 || painted.width != 192 || painted.channels != 3)
    return {false, strf("prediction is %lldx%lldx%d, want 192x192x3",
                        static_cast<long long>(painted.height),
                        static_cast<long long>(painted.width),
                        painted.channels)};
  IndexMask labels = read_mask_png(index.string());
  for (int32_t v : labels.values)
    if (v < 0 || v >= 6)
      return {false, strf("predicted index %d is outside the class range", v)};

  double dt = since(t0);
  return {dt < 300.0,
          strf("synth/tile/train/eval/predict all exit 0; oa %.3f, mean f1 "
               "%.3f; 192x192x3 painting; %.0fs (cap 300s)", oa, mean_f1, dt)};
}

}  // namespace

int main() {
  struct Item {
    const char* name;
    Outcome (*fn)();
  };
  const Item items[] = {
      {"gridding verdicts match the 2-d footprint oracle", check_gridding_oracle},
      {"stacked heads emit full-resolution logit maps", check_output_shapes},
      {"loss weights route gradients to the right subnetwork", check_gradient_routing},
      {"analytic gradients match finite differences", check_gradient_fd},
      {"small-data recipe overfits to 99 percent accuracy", check_overfit},
      {"capacity ablations order parameters and flops", check_ablation_order},
      {"metrics match a counting oracle and a hand-checked f1", check_metric_oracle},
      {"poly lr factor is exact and the logged schedule decays", check_lr_schedule},
      {"weighted cross-entropy reduces to plain ce", check_loss_equivalence},
      {"palette, tiling and plans round-trip", check_data_roundtrips},
      {"synthetic cli pipeline runs end to end", check_cli_pipeline},
  };
  const int total = static_cast<int>(sizeof(items) / sizeof(items[0]));
  int passed = 0;
  for (int i = 0; i < total; ++i) {
    Outcome o;
    try {
      o = items[i].fn();
    } catch (const std::exception& e) {
      o = {false, strf("threw: %s", e.what())};
    }
    passed += o.pass;
    std::printf("%2d/%d %s %s | %s\n", i + 1, total, o.pass ? "PASS" : "FAIL",
                items[i].name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("acceptance: %d/%d passed\n", passed, total);
  return passed == total ? 0 : 1;
}
