#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sdrnet/ops.hpp"
#include "sdrnet/rng.hpp"
#include "sdrnet/tensor.hpp"

namespace sdrnet {
namespace nn {

// Base class giving modules a recursive registry of named parameters,
// buffers, and children. Registration order is construction order, which
// keeps weight initialization and checkpoint layout deterministic.
class Module {
 public:
  struct ParamRef {
    std::string name;
    Tensor tensor;
    bool decay_exempt;  // norms and biases skip weight decay
  };
  struct BufferRef {
    std::string name;
    Tensor tensor;
  };

  virtual ~Module() = default;
  Module() = default;
  Module(const Module&) = delete;
  Module& operator=(const Module&) = delete;

  void collect_parameters(const std::string& prefix,
                          std::vector<ParamRef>& out) const {
    for (const ParamRef& p : params_)
      out.push_back({prefix + p.name, p.tensor, p.decay_exempt});
    for (const auto& [name, child] : children_)
      child->collect_parameters(prefix + name + ".", out);
  }
  void collect_buffers(const std::string& prefix,
                       std::vector<BufferRef>& out) const {
    for (const BufferRef& b : buffers_)
      out.push_back({prefix + b.name, b.tensor});
    for (const auto& [name, child] : children_)
      child->collect_buffers(prefix + name + ".", out);
  }
  std::vector<ParamRef> named_parameters() const {
    std::vector<ParamRef> out;
    collect_parameters("", out);
    return out;
  }
  std::vector<BufferRef> named_buffers() const {
    std::vector<BufferRef> out;
    collect_buffers("", out);
    return out;
  }
  int64_t parameter_count() const {
    int64_t n = 0;
    for (const ParamRef& p : named_parameters()) n += p.tensor.numel();
    return n;
  }

  void set_training(bool on) {
    training_ = on;
    for (auto& [name, child] : children_) child->set_training(on);
  }
  bool training() const { return training_; }

  void zero_grads() {
    for (ParamRef& p : params_) p.tensor.zero_grad();
    for (auto& [name, child] : children_) child->zero_grads();
  }

 protected:
  Tensor& add_param(const std::string& name, Tensor t,
                    bool decay_exempt = false) {
    t.set_requires_grad(true);
    params_.push_back({name, std::move(t), decay_exempt});
    return params_.back().tensor;
  }
  Tensor& add_buffer(const std::string& name, Tensor t) {
    buffers_.push_back({name, std::move(t)});
    return buffers_.back().tensor;
  }
  void add_child(const std::string& name, Module* m) {
    children_.emplace_back(name, m);
  }

 private:
  std::vector<std::pair<std::string, Module*>> children_;
  std::vector<ParamRef> params_;
  std::vector<BufferRef> buffers_;
  bool training_ = true;
};

inline void fill_he_normal(Tensor& t, int64_t fan_in, Rng& rng) {
  float std = std::sqrt(2.f / static_cast<float>(fan_in));
  for (int64_t i = 0; i < t.numel(); ++i) t.data()[i] = std * rng.normal();
}

class Conv2d : public Module {
 public:
  Conv2d(int in, int out, int kernel, int stride, int pad, int dil, bool bias,
         Rng& rng)
      : stride_(stride), pad_(pad), dil_(dil) {
    Tensor w = Tensor::zeros({out, in, kernel, kernel});
    fill_he_normal(w, static_cast<int64_t>(in) * kernel * kernel, rng);
    weight = add_param("weight", std::move(w));
    if (bias) this->bias = add_param("bias", Tensor::zeros({out}), true);
  }

  Tensor forward(const Tensor& x) const {
    return ops::conv2d(x, weight, bias, stride_, pad_, dil_);
  }

  Tensor weight;
  Tensor bias;  // undefined when constructed without bias

 private:
  int stride_, pad_, dil_;
};

class ConvTranspose2d : public Module {
 public:
  ConvTranspose2d(int in, int out, int kernel, Rng& rng) : kernel_(kernel) {
    Tensor w = Tensor::zeros({in, out, kernel, kernel});
    fill_he_normal(w, static_cast<int64_t>(in) * kernel * kernel, rng);
    weight = add_param("weight", std::move(w));
  }
  Tensor forward(const Tensor& x) const {
    return ops::conv_transpose2d(x, weight, Tensor(), kernel_);
  }
  Tensor weight;

 private:
  int kernel_;
};

class BatchNorm2d : public Module {
 public:
  explicit BatchNorm2d(int channels) {
    gamma = add_param("weight", Tensor::full({channels}, 1.f), true);
    beta = add_param("bias", Tensor::zeros({channels}), true);
    running_mean = add_buffer("running_mean", Tensor::zeros({channels}));
    running_var = add_buffer("running_var", Tensor::full({channels}, 1.f));
  }
  Tensor forward(const Tensor& x) {
    return ops::batch_norm(x, gamma, beta, running_mean, running_var,
                           training());
  }
  Tensor gamma, beta, running_mean, running_var;
};

// conv -> batch norm -> ReLU; convolution bias is omitted since the
// normalization shift would absorb it and leave a dead parameter.
class ConvBnRelu : public Module {
 public:
  ConvBnRelu(int in, int out, int kernel, int stride, int pad, int dil,
             Rng& rng)
      : conv(in, out, kernel, stride, pad, dil, false, rng), bn(out) {
    add_child("conv", &conv);
    add_child("bn", &bn);
  }
  Tensor forward(const Tensor& x) { return ops::relu(bn.forward(conv.forward(x))); }

  Conv2d conv;
  BatchNorm2d bn;
};

}  // namespace nn
}  // namespace sdrnet
