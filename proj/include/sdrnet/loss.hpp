#pragma once

#include <vector>

#include "sdrnet/ops.hpp"

namespace sdrnet {

struct LossConfig {
  std::vector<float> class_weights;  // per-class W_i, length num_classes
  float alpha = 1.f;                 // weight of the main head's loss
  float beta = 0.4f;                 // weight of the intermediate head's loss
  int ignore_index = 255;
};

inline LossConfig default_loss_config(int num_classes) {
  LossConfig c;
  c.class_weights.assign(static_cast<size_t>(num_classes), 1.f);
  return c;
}

inline void validate_loss_config(const LossConfig& c, int num_classes) {
  check(static_cast<int>(c.class_weights.size()) == num_classes,
        ErrorKind::Config,
        strf("class_weights has %d entries, expected num_classes = %d",
             static_cast<int>(c.class_weights.size()), num_classes));
  for (float w : c.class_weights)
    check(std::isfinite(w) && w >= 0.f, ErrorKind::Config,
          "class_weights must be finite and non-negative");
  check(c.alpha >= 0.f && c.beta >= 0.f, ErrorKind::Config,
        "alpha and beta must be non-negative");
  check(c.alpha + c.beta > 0.f, ErrorKind::Config,
        "alpha + beta must be positive");
  check(c.ignore_index < 0 || c.ignore_index >= num_classes, ErrorKind::Config,
        strf("ignore_index %d collides with the class index range",
             c.ignore_index));
}

inline Tensor weighted_ce(const Tensor& logits,
                          const std::vector<int32_t>& target,
                          const LossConfig& c, ops::CeStats* stats = nullptr) {
  return ops::weighted_cross_entropy(logits, target, c.class_weights,
                                     c.ignore_index, stats);
}

// L_T = alpha * main + beta * inter; scalar tensors so gradients flow to both
// heads in one backward pass.
inline Tensor total_loss(const Tensor& main_loss, const Tensor& inter_loss,
                         const LossConfig& c) {
  Tensor weighted_main = ops::scale(main_loss, c.alpha);
  if (!inter_loss.defined()) return weighted_main;
  return ops::add(weighted_main, ops::scale(inter_loss, c.beta));
}

}  // namespace sdrnet
