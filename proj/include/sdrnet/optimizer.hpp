#pragma once

#include <cmath>
#include <vector>

#include "sdrnet/nn.hpp"

namespace sdrnet {

// Polynomial decay multiplier for the base learning rate.
inline double lr_factor(int64_t cur_iter, int64_t max_iter, double power) {
  check(max_iter >= 1, ErrorKind::InvalidArgument,
        strf("max_iter must be >= 1, got %lld",
             static_cast<long long>(max_iter)));
  check(cur_iter >= 0 && cur_iter <= max_iter, ErrorKind::InvalidArgument,
        strf("cur_iter %lld outside [0, max_iter=%lld]",
             static_cast<long long>(cur_iter),
             static_cast<long long>(max_iter)));
  return std::pow(1.0 - static_cast<double>(cur_iter) /
                            static_cast<double>(max_iter),
                  power);
}

// Adam with optional AMSGrad and decoupled weight decay. Decay skips
// parameters flagged decay_exempt (normalization scales/shifts and biases).
// Parameters that carry no gradient buffer are skipped entirely.
class AdamW {
 public:
  AdamW(std::vector<nn::Module::ParamRef> params, double weight_decay,
        bool amsgrad, double beta1 = 0.9, double beta2 = 0.999,
        double eps = 1e-8)
      : weight_decay_(weight_decay),
        amsgrad_(amsgrad),
        beta1_(beta1),
        beta2_(beta2),
        eps_(eps) {
    check(weight_decay >= 0.0, ErrorKind::InvalidArgument,
          "weight_decay must be non-negative");
    check(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0,
          ErrorKind::InvalidArgument, "betas must lie in [0,1)");
    check(eps > 0.0, ErrorKind::InvalidArgument, "eps must be positive");
    for (auto& p : params) {
      Slot s;
      s.param = p.tensor;
      s.decay_exempt = p.decay_exempt;
      size_t n = static_cast<size_t>(p.tensor.numel());
      s.m.assign(n, 0.f);
      s.v.assign(n, 0.f);
      if (amsgrad) s.vmax.assign(n, 0.f);
      slots_.push_back(std::move(s));
    }
  }

  void step(double lr) {
    check(std::isfinite(lr) && lr >= 0.0, ErrorKind::InvalidArgument,
          "learning rate must be finite and non-negative");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (Slot& s : slots_) {
      if (!s.param.has_grad()) continue;
      const std::vector<float>& g = s.param.grad();
      float* w = s.param.data();
      for (size_t i = 0; i < g.size(); ++i) {
        double gi = g[i];
        double m = beta1_ * s.m[i] + (1.0 - beta1_) * gi;
        double v = beta2_ * s.v[i] + (1.0 - beta2_) * gi * gi;
        s.m[i] = static_cast<float>(m);
        s.v[i] = static_cast<float>(v);
        double vhat;
        if (amsgrad_) {
          // The max runs over the raw second moment; bias correction is
          // applied to the running maximum.
          double vm = std::max(static_cast<double>(s.vmax[i]), v);
          s.vmax[i] = static_cast<float>(vm);
          vhat = vm / bc2;
        } else {
          vhat = v / bc2;
        }
        double update = lr * (m / bc1) / (std::sqrt(vhat) + eps_);
        if (!s.decay_exempt) update += lr * weight_decay_ * w[i];
        w[i] = static_cast<float>(w[i] - update);
      }
    }
  }

  void zero_grads() {
    for (Slot& s : slots_) s.param.zero_grad();
  }

  int64_t step_count() const { return t_; }

 private:
  struct Slot {
    Tensor param;
    bool decay_exempt = false;
    std::vector<float> m, v, vmax;
  };
  std::vector<Slot> slots_;
  double weight_decay_;
  bool amsgrad_;
  double beta1_, beta2_, eps_;
  int64_t t_ = 0;
};

}  // namespace sdrnet
