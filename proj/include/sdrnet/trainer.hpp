#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sdrnet/augment.hpp"
#include "sdrnet/checkpoint.hpp"
#include "sdrnet/class_map.hpp"
#include "sdrnet/image.hpp"
#include "sdrnet/loss.hpp"
#include "sdrnet/metrics.hpp"
#include "sdrnet/model.hpp"
#include "sdrnet/optimizer.hpp"
#include "sdrnet/rng.hpp"
#include "sdrnet/runconfig.hpp"
#include "sdrnet/synthetic.hpp"

namespace sdrnet {

struct TrainLogRow {
  int64_t iter = 0;
  double lr = 0;
  double main_loss = 0;
  double inter_loss = 0;  // 0 when the model has no intermediate head
  double total_loss = 0;
};

struct ValRecord {
  int64_t iter = 0;
  double oa = 0;
  double mean_f1 = 0;
};

struct TrainResult {
  std::vector<TrainLogRow> log;
  std::vector<ValRecord> val;
  std::string checkpoint_path;  // final checkpoint, empty when not written
};

inline std::string train_log_csv(const std::vector<TrainLogRow>& rows,
                                 uint64_t seed) {
  std::string out = strf("# seed=%llu\n", static_cast<unsigned long long>(seed));
  out += "iter,lr,main_loss,inter_loss,total_loss\n";
  for (const TrainLogRow& r : rows)
    out += strf("%lld,%.9g,%.9g,%.9g,%.9g\n", static_cast<long long>(r.iter),
                r.lr, r.main_loss, r.inter_loss, r.total_loss);
  return out;
}

inline std::string val_log_csv(const std::vector<ValRecord>& rows) {
  std::string out = "iter,oa,mean_f1\n";
  for (const ValRecord& r : rows)
    out += strf("%lld,%.9g,%.9g\n", static_cast<long long>(r.iter), r.oa,
                r.mean_f1);
  return out;
}

// W_i = total / (K * count_i), so a balanced dataset gets all-ones. Classes
// that never occur get weight 0 rather than a division blow-up.
inline std::vector<float> inverse_frequency_weights(
    const std::vector<Sample>& samples, int num_classes, int ignore_index) {
  std::vector<int64_t> count(static_cast<size_t>(num_classes), 0);
  int64_t total = 0;
  for (const Sample& s : samples)
    for (int32_t v : s.mask.values) {
      if (v == ignore_index) continue;
      check(v >= 0 && v < num_classes, ErrorKind::Data,
            strf("mask value %d outside [0,%d) in %s", v, num_classes,
                 s.source_id.c_str()));
      ++count[static_cast<size_t>(v)];
      ++total;
    }
  check(total > 0, ErrorKind::Data, "all mask pixels are ignored");
  std::vector<float> w(static_cast<size_t>(num_classes), 0.f);
  for (int k = 0; k < num_classes; ++k)
    if (count[k] > 0)
      w[k] = static_cast<float>(static_cast<double>(total) /
                                (static_cast<double>(num_classes) *
                                 static_cast<double>(count[k])));
  return w;
}

namespace detail {

inline Tensor batch_images(const std::vector<const Sample*>& batch) {
  const ImageU8& first = batch.front()->image;
  int64_t n = static_cast<int64_t>(batch.size());
  int64_t c = first.channels, h = first.height, w = first.width;
  Tensor x = Tensor::zeros({n, c, h, w});
  float* out = x.data();
  for (int64_t b = 0; b < n; ++b) {
    const ImageU8& img = batch[static_cast<size_t>(b)]->image;
    check(img.height == h && img.width == w && img.channels == c,
          ErrorKind::Data,
          strf("sample %s has shape %lldx%lldx%lld, batch expects "
               "%lldx%lldx%lld",
               batch[static_cast<size_t>(b)]->source_id.c_str(),
               static_cast<long long>(img.height),
               static_cast<long long>(img.width),
               static_cast<long long>(img.channels), static_cast<long long>(h),
               static_cast<long long>(w), static_cast<long long>(c)));
    for (int64_t ch = 0; ch < c; ++ch)
      for (int64_t y = 0; y < h; ++y)
        for (int64_t xx = 0; xx < w; ++xx)
          out[((b * c + ch) * h + y) * w + xx] =
              static_cast<float>(img.at(y, xx, ch)) / 255.f;
  }
  return x;
}

inline std::vector<int32_t> batch_targets(
    const std::vector<const Sample*>& batch) {
  std::vector<int32_t> t;
  for (const Sample* s : batch)
    t.insert(t.end(), s->mask.values.begin(), s->mask.values.end());
  return t;
}

}  // namespace detail

// Argmax over the class axis of [K,H,W] logits.
inline IndexMask argmax_mask(const Tensor& logits) {
  check(logits.defined() && logits.ndim() == 3, ErrorKind::Shape,
        "argmax_mask expects [K,H,W] logits");
  int64_t k = logits.dim(0), h = logits.dim(1), w = logits.dim(2);
  IndexMask m = make_mask(h, w, 0);
  const float* p = logits.data();
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      int best = 0;
      float best_v = p[y * w + x];
      for (int64_t c = 1; c < k; ++c) {
        float v = p[(c * h + y) * w + x];
        if (v > best_v) {
          best_v = v;
          best = static_cast<int>(c);
        }
      }
      m.at(y, x) = best;
    }
  return m;
}

// Eval-mode prediction for one sample-sized input; returns [K,H,W] logits.
inline Tensor predict_logits(SdrNet& model, const ImageU8& image) {
  std::vector<const Sample*> one;
  Sample s;
  s.image = image;
  one.push_back(&s);
  Tensor x = detail::batch_images(one);
  bool was_training = model.training();
  model.set_training(false);
  Tensor logits = model.forward(x).main;
  model.set_training(was_training);
  int64_t k = logits.dim(1), h = logits.dim(2), w = logits.dim(3);
  Tensor out = Tensor::zeros({k, h, w});
  std::copy(logits.data(), logits.data() + logits.numel(), out.data());
  return out;
}

inline ValRecord evaluate_samples(SdrNet& model,
                                  const std::vector<Sample>& samples,
                                  int ignore_index) {
  ClassMap map = make_synthetic_class_map(model.config().num_classes);
  map.ignore_index = ignore_index;
  ConfusionMatrix conf = make_confusion(map);
  for (const Sample& s : samples) {
    IndexMask pred = argmax_mask(predict_logits(model, s.image));
    accumulate(conf, pred, s.mask);
  }
  MetricsReport rep = metrics(conf, {});
  ValRecord v;
  v.oa = rep.oa;
  v.mean_f1 = rep.mean_f1;
  return v;
}

// One optimization run. Writes periodic checkpoints to
// `<checkpoint_path>.iter<k>` and the final state to `checkpoint_path`
// itself (nothing is written when the path is empty).
inline TrainResult train(SdrNet& model, const std::vector<Sample>& train_set,
                         const std::vector<Sample>& val_set,
                         const TrainConfig& tc, const LossConfig& loss_in,
                         const AugmentPolicy& policy,
                         const std::string& checkpoint_path = "") {
  validate_train_config(tc);
  check(!train_set.empty(), ErrorKind::Data, "training set is empty");
  const ModelConfig& mc = model.config();
  for (const Sample& s : train_set) {
    check(s.image.channels == mc.in_channels, ErrorKind::Data,
          strf("sample %s has %lld channels, model expects %d",
               s.source_id.c_str(), static_cast<long long>(s.image.channels),
               mc.in_channels));
    check(s.mask.height == s.image.height && s.mask.width == s.image.width,
          ErrorKind::Data,
          strf("sample %s: image/mask size mismatch", s.source_id.c_str()));
  }

  LossConfig lc = loss_in;
  if (!mc.stacked) lc.beta = 0.f;  // no intermediate head to supervise
  validate_loss_config(lc, mc.num_classes);

  AdamW opt(model.named_parameters(), tc.weight_decay, tc.amsgrad);
  Rng order_rng(tc.seed, 17);
  std::vector<size_t> order(train_set.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  model.set_training(true);
  size_t pos = order.size();  // forces a shuffle before the first batch
  int64_t epoch = -1;

  for (int64_t iter = 0; iter < tc.max_iter; ++iter) {
    if (pos >= order.size()) {
      ++epoch;
      order_rng.shuffle(order);
      pos = 0;
    }
    size_t take = std::min(static_cast<size_t>(tc.batch_size),
                           order.size() - pos);
    std::vector<Sample> augmented;
    std::vector<const Sample*> batch;
    augmented.reserve(take);
    batch.reserve(take);
    for (size_t i = 0; i < take; ++i) {
      const Sample& src = train_set[order[pos + i]];
      if (policy.ops.empty()) {
        batch.push_back(&src);
      } else {
        augmented.push_back(augment(
            src, augment_seed(tc.seed, src.provenance(), epoch), policy));
        batch.push_back(&augmented.back());
      }
    }
    pos += take;

    Tensor x = detail::batch_images(batch);
    std::vector<int32_t> target = detail::batch_targets(batch);

    model.zero_grads();
    ModelOutput out = model.forward(x);
    Tensor main_loss = weighted_ce(out.main, target, lc);
    Tensor inter_loss;
    if (out.inter.defined()) inter_loss = weighted_ce(out.inter, target, lc);
    Tensor total = total_loss(main_loss, inter_loss, lc);

    double main_v = main_loss.item();
    double inter_v = inter_loss.defined() ? inter_loss.item() : 0.0;
    double total_v = total.item();
    if (!std::isfinite(total_v)) {
      std::string prov;
      for (const Sample* s : batch) {
        if (!prov.empty()) prov += " ";
        prov += s->provenance();
      }
      fail(ErrorKind::Runtime,
           strf("non-finite loss at iteration %lld (batch: %s)",
                static_cast<long long>(iter), prov.c_str()));
    }

    backward(total);
    double lr = tc.base_lr * lr_factor(iter, tc.max_iter, tc.poly_power);
    opt.step(lr);

    result.log.push_back({iter, lr, main_v, inter_v, total_v});

    bool last = iter + 1 == tc.max_iter;
    bool due = tc.checkpoint_every > 0 && (iter + 1) % tc.checkpoint_every == 0;
    if (due || last) {
      if (!checkpoint_path.empty()) {
        std::string path =
            last ? checkpoint_path
                 : strf("%s.iter%lld", checkpoint_path.c_str(),
                        static_cast<long long>(iter + 1));
        save_checkpoint(path, model);
        if (last) result.checkpoint_path = path;
      }
      if (!val_set.empty()) {
        ValRecord v = evaluate_samples(model, val_set, lc.ignore_index);
        v.iter = iter;
        result.val.push_back(v);
        model.set_training(true);
      }
    }
  }

  model.set_training(false);
  return result;
}

}  // namespace sdrnet
