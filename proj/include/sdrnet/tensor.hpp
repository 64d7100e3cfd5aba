#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <deque>
#include <memory>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sdrnet/common.hpp"

namespace sdrnet {

using Shape = std::vector<int64_t>;

inline int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

namespace detail {
struct Node;
}

struct TensorImpl {
  Shape shape;
  std::vector<float> data;
  std::vector<float> grad;  // allocated lazily by the backward pass
  bool requires_grad = false;
  std::shared_ptr<detail::Node> grad_fn;
};

// Define-by-run gradient mode, scoped with NoGradGuard.
inline bool& grad_enabled() {
  thread_local bool enabled = true;
  return enabled;
}

struct NoGradGuard {
  bool prev;
  NoGradGuard() : prev(grad_enabled()) { grad_enabled() = false; }
  ~NoGradGuard() { grad_enabled() = prev; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    auto impl = std::make_shared<TensorImpl>();
    impl->data.assign(static_cast<size_t>(shape_numel(shape)), 0.f);
    impl->shape = std::move(shape);
    impl->requires_grad = requires_grad;
    return Tensor(std::move(impl));
  }

  static Tensor full(Shape shape, float value, bool requires_grad = false) {
    Tensor t = zeros(std::move(shape), requires_grad);
    std::fill(t.impl_->data.begin(), t.impl_->data.end(), value);
    return t;
  }

  static Tensor from(Shape shape, std::vector<float> data,
                     bool requires_grad = false) {
    check(static_cast<int64_t>(data.size()) == shape_numel(shape),
          ErrorKind::Shape,
          strf("tensor data size %zu does not match shape %s", data.size(),
               shape_str(shape).c_str()));
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(shape);
    impl->data = std::move(data);
    impl->requires_grad = requires_grad;
    return Tensor(std::move(impl));
  }

  bool defined() const { return impl_ != nullptr; }
  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

  const Shape& shape() const { return impl_->shape; }
  int64_t dim(size_t i) const { return impl_->shape[i]; }
  size_t ndim() const { return impl_->shape.size(); }
  int64_t numel() const { return shape_numel(impl_->shape); }

  float* data() { return impl_->data.data(); }
  const float* data() const { return impl_->data.data(); }
  std::vector<float>& vec() { return impl_->data; }
  const std::vector<float>& vec() const { return impl_->data; }

  float item() const {
    check(numel() == 1, ErrorKind::Shape, "item() requires a one-element tensor");
    return impl_->data[0];
  }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool v) { impl_->requires_grad = v; }

  bool has_grad() const { return !impl_->grad.empty(); }
  std::vector<float>& mutable_grad() {
    if (impl_->grad.empty())
      impl_->grad.assign(static_cast<size_t>(numel()), 0.f);
    return impl_->grad;
  }
  const std::vector<float>& grad() const {
    check(has_grad(), ErrorKind::Runtime, "tensor has no gradient");
    return impl_->grad;
  }
  void zero_grad() {
    if (!impl_->grad.empty())
      std::fill(impl_->grad.begin(), impl_->grad.end(), 0.f);
  }
  void drop_grad() { impl_->grad.clear(); }

  bool all_finite() const {
    for (float v : impl_->data)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

namespace detail {

struct Node {
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  virtual ~Node() = default;
  // Accumulates into the inputs' grad buffers; `out` carries the upstream
  // gradient in out.grad.
  virtual void backward(TensorImpl& out) = 0;

  static std::vector<float>& grad_of(TensorImpl& t) {
    if (t.grad.empty()) t.grad.assign(static_cast<size_t>(shape_numel(t.shape)), 0.f);
    return t.grad;
  }
};

}  // namespace detail

// Reverse-mode sweep from a scalar. Nodes fire once all their consumers have
// contributed, so gradient accumulation order is fixed by graph topology and
// runs are bitwise reproducible. The graph is released as it is consumed.
inline void backward(const Tensor& root) {
  check(root.defined() && root.numel() == 1, ErrorKind::InvalidArgument,
        "backward() expects a defined scalar tensor");
  std::shared_ptr<TensorImpl> r = root.impl();
  check(r->grad_fn != nullptr, ErrorKind::InvalidArgument,
        "backward() root does not depend on any tracked tensor");

  std::unordered_map<TensorImpl*, int> pending;
  std::unordered_set<TensorImpl*> visited;
  std::vector<std::shared_ptr<TensorImpl>> stack{r};
  visited.insert(r.get());
  while (!stack.empty()) {
    std::shared_ptr<TensorImpl> t = stack.back();
    stack.pop_back();
    if (!t->grad_fn) continue;
    for (const auto& in : t->grad_fn->inputs) {
      if (!in->requires_grad) continue;
      pending[in.get()]++;
      if (visited.insert(in.get()).second) stack.push_back(in);
    }
  }

  r->grad.assign(1, 1.f);
  std::deque<std::shared_ptr<TensorImpl>> ready{r};
  while (!ready.empty()) {
    std::shared_ptr<TensorImpl> t = ready.front();
    ready.pop_front();
    if (!t->grad_fn) continue;
    t->grad_fn->backward(*t);
    std::shared_ptr<detail::Node> node = std::move(t->grad_fn);
    t->grad_fn.reset();
    for (const auto& in : node->inputs) {
      if (!in->requires_grad) continue;
      if (--pending[in.get()] == 0 && in->grad_fn) ready.push_back(in);
    }
  }
}

// Multiply-accumulate counts per labeled region of a forward pass. The
// convolution ops report into whichever profiler is installed.
struct MacProfiler {
  std::vector<std::pair<std::string, int64_t>> stages;  // first-touch order
  std::string current;

  void add(int64_t macs) {
    for (auto& [name, count] : stages)
      if (name == current) {
        count += macs;
        return;
      }
    stages.emplace_back(current, macs);
  }
  int64_t total() const {
    int64_t t = 0;
    for (const auto& [name, count] : stages) t += count;
    return t;
  }
};

inline MacProfiler*& mac_profiler() {
  thread_local MacProfiler* p = nullptr;
  return p;
}

struct ProfileStage {
  std::string prev;
  bool active;
  explicit ProfileStage(const std::string& name) : active(mac_profiler() != nullptr) {
    if (active) {
      prev = mac_profiler()->current;
      mac_profiler()->current = name;
    }
  }
  ~ProfileStage() {
    if (active) mac_profiler()->current = prev;
  }
  ProfileStage(const ProfileStage&) = delete;
  ProfileStage& operator=(const ProfileStage&) = delete;
};

}  // namespace sdrnet
