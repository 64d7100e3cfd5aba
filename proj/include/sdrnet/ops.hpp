#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "sdrnet/tensor.hpp"

namespace sdrnet {
namespace ops {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<RowMat>;
using CMapRM = Eigen::Map<const RowMat>;
using StridedMapRM = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;
using CStridedMapRM = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;

inline bool track_any(std::initializer_list<const Tensor*> ts) {
  if (!grad_enabled()) return false;
  for (const Tensor* t : ts)
    if (t->defined() && t->requires_grad()) return true;
  return false;
}

inline void attach(Tensor& out, std::shared_ptr<detail::Node> node) {
  out.impl()->requires_grad = true;
  out.impl()->grad_fn = std::move(node);
}

// ---------------------------------------------------------------------------
// conv2d: NCHW x OIHW, strip-mined im2col feeding a GEMM.

namespace detail2 {

struct ConvGeom {
  int n, ci, h, w, co, kh, kw, stride, pad, dil, ho, wo;
};

inline ConvGeom conv_geometry(const Tensor& x, const Tensor& w, int stride,
                              int pad, int dil) {
  check(x.ndim() == 4, ErrorKind::Shape,
        strf("conv2d input must be 4-D, got %s", shape_str(x.shape()).c_str()));
  check(w.ndim() == 4, ErrorKind::Shape,
        strf("conv2d weight must be 4-D, got %s", shape_str(w.shape()).c_str()));
  check(stride >= 1 && pad >= 0 && dil >= 1, ErrorKind::InvalidArgument,
        strf("conv2d: bad stride/pad/dilation %d/%d/%d", stride, pad, dil));
  ConvGeom g;
  g.n = static_cast<int>(x.dim(0));
  g.ci = static_cast<int>(x.dim(1));
  g.h = static_cast<int>(x.dim(2));
  g.w = static_cast<int>(x.dim(3));
  g.co = static_cast<int>(w.dim(0));
  g.kh = static_cast<int>(w.dim(2));
  g.kw = static_cast<int>(w.dim(3));
  g.stride = stride;
  g.pad = pad;
  g.dil = dil;
  check(static_cast<int>(w.dim(1)) == g.ci, ErrorKind::Shape,
        strf("conv2d: weight expects %d input channels, input has %d",
             static_cast<int>(w.dim(1)), g.ci));
  g.ho = (g.h + 2 * pad - dil * (g.kh - 1) - 1) / stride + 1;
  g.wo = (g.w + 2 * pad - dil * (g.kw - 1) - 1) / stride + 1;
  check(g.ho >= 1 && g.wo >= 1, ErrorKind::Shape,
        strf("conv2d: output would be empty for input %dx%d kernel %dx%d",
             g.h, g.w, g.kh, g.kw));
  return g;
}

// Writes kernel-unrolled rows for output rows [r0, r1).
inline void im2col(const float* x, const ConvGeom& g, int r0, int r1,
                   float* col) {
  const int64_t P = static_cast<int64_t>(r1 - r0) * g.wo;
  int64_t q = 0;
  for (int ic = 0; ic < g.ci; ++ic)
    for (int ky = 0; ky < g.kh; ++ky)
      for (int kx = 0; kx < g.kw; ++kx, ++q) {
        float* dst = col + q * P;
        for (int oy = r0; oy < r1; ++oy) {
          int iy = oy * g.stride - g.pad + ky * g.dil;
          float* drow = dst + static_cast<int64_t>(oy - r0) * g.wo;
          if (iy < 0 || iy >= g.h) {
            std::fill(drow, drow + g.wo, 0.f);
            continue;
          }
          const float* srow = x + (static_cast<int64_t>(ic) * g.h + iy) * g.w;
          if (g.stride == 1) {
            int ix0 = -g.pad + kx * g.dil;
            int lo = std::clamp(-ix0, 0, g.wo);
            int hi = std::clamp(g.w - ix0, 0, g.wo);
            std::fill(drow, drow + lo, 0.f);
            if (hi > lo) std::copy(srow + ix0 + lo, srow + ix0 + hi, drow + lo);
            std::fill(drow + std::max(hi, lo), drow + g.wo, 0.f);
          } else {
            for (int ox = 0; ox < g.wo; ++ox) {
              int ix = ox * g.stride - g.pad + kx * g.dil;
              drow[ox] = (ix >= 0 && ix < g.w) ? srow[ix] : 0.f;
            }
          }
        }
      }
}

inline void col2im_add(const float* col, const ConvGeom& g, int r0, int r1,
                       float* dx) {
  const int64_t P = static_cast<int64_t>(r1 - r0) * g.wo;
  int64_t q = 0;
  for (int ic = 0; ic < g.ci; ++ic)
    for (int ky = 0; ky < g.kh; ++ky)
      for (int kx = 0; kx < g.kw; ++kx, ++q) {
        const float* src = col + q * P;
        for (int oy = r0; oy < r1; ++oy) {
          int iy = oy * g.stride - g.pad + ky * g.dil;
          if (iy < 0 || iy >= g.h) continue;
          float* drow = dx + (static_cast<int64_t>(ic) * g.h + iy) * g.w;
          const float* srow = src + static_cast<int64_t>(oy - r0) * g.wo;
          for (int ox = 0; ox < g.wo; ++ox) {
            int ix = ox * g.stride - g.pad + kx * g.dil;
            if (ix >= 0 && ix < g.w) drow[ix] += srow[ox];
          }
        }
      }
}

// Cap the im2col scratch at ~8 MB of floats per strip.
inline int conv_strip_rows(const ConvGeom& g) {
  int64_t K = static_cast<int64_t>(g.ci) * g.kh * g.kw;
  int64_t budget = int64_t(1) << 21;
  int64_t rows = budget / std::max<int64_t>(1, K * g.wo);
  return static_cast<int>(std::clamp<int64_t>(rows, 1, g.ho));
}

}  // namespace detail2

struct Conv2dNode : detail::Node {
  detail2::ConvGeom g;
  bool has_bias = false;

  void backward(TensorImpl& out) override {
    TensorImpl& x = *inputs[0];
    TensorImpl& w = *inputs[1];
    const int64_t K = static_cast<int64_t>(g.ci) * g.kh * g.kw;
    const int64_t plane = static_cast<int64_t>(g.ho) * g.wo;
    const int strip = detail2::conv_strip_rows(g);
    std::vector<float> col(static_cast<size_t>(K * strip * g.wo));

    if (has_bias && inputs[2]->requires_grad) {
      std::vector<float>& db = grad_of(*inputs[2]);
      for (int oc = 0; oc < g.co; ++oc) {
        double acc = 0.0;
        for (int b = 0; b < g.n; ++b) {
          const float* p = out.grad.data() +
                           (static_cast<int64_t>(b) * g.co + oc) * plane;
          for (int64_t i = 0; i < plane; ++i) acc += p[i];
        }
        db[static_cast<size_t>(oc)] += static_cast<float>(acc);
      }
    }

    const bool need_x = x.requires_grad;
    const bool need_w = w.requires_grad;
    if (!need_x && !need_w) return;
    if (need_x) grad_of(x);
    if (need_w) grad_of(w);
    MapRM dW(need_w ? w.grad.data() : nullptr, need_w ? g.co : 0, need_w ? K : 0);
    CMapRM W(w.data.data(), g.co, K);
    std::vector<float> gcol(need_x ? static_cast<size_t>(K * strip * g.wo) : 0);

    for (int b = 0; b < g.n; ++b) {
      const float* xb = x.data.data() + static_cast<int64_t>(b) * g.ci * g.h * g.w;
      float* dxb = need_x ? x.grad.data() + static_cast<int64_t>(b) * g.ci * g.h * g.w
                          : nullptr;
      const float* dob = out.grad.data() + static_cast<int64_t>(b) * g.co * plane;
      for (int r0 = 0; r0 < g.ho; r0 += strip) {
        int r1 = std::min(g.ho, r0 + strip);
        int64_t P = static_cast<int64_t>(r1 - r0) * g.wo;
        CStridedMapRM dO(dob + static_cast<int64_t>(r0) * g.wo, g.co, P,
                         Eigen::OuterStride<>(plane));
        if (need_w) {
          detail2::im2col(xb, g, r0, r1, col.data());
          CMapRM C(col.data(), K, P);
          dW.noalias() += dO * C.transpose();
        }
        if (need_x) {
          MapRM GC(gcol.data(), K, P);
          GC.noalias() = W.transpose() * dO;
          detail2::col2im_add(gcol.data(), g, r0, r1, dxb);
        }
      }
    }
  }
};

inline Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias,
                     int stride = 1, int pad = 0, int dil = 1) {
  detail2::ConvGeom g = detail2::conv_geometry(x, w, stride, pad, dil);
  if (bias.defined())
    check(bias.ndim() == 1 && bias.dim(0) == g.co, ErrorKind::Shape,
          strf("conv2d: bias must have %d entries", g.co));

  if (MacProfiler* prof = mac_profiler())
    prof->add(static_cast<int64_t>(g.n) * g.co * g.ci * g.kh * g.kw * g.ho * g.wo);

  Tensor out = Tensor::zeros({g.n, g.co, g.ho, g.wo});
  const int64_t K = static_cast<int64_t>(g.ci) * g.kh * g.kw;
  const int64_t plane = static_cast<int64_t>(g.ho) * g.wo;
  const int strip = detail2::conv_strip_rows(g);
  std::vector<float> col(static_cast<size_t>(K * strip * g.wo));
  CMapRM W(w.data(), g.co, K);

  for (int b = 0; b < g.n; ++b) {
    const float* xb = x.data() + static_cast<int64_t>(b) * g.ci * g.h * g.w;
    float* ob = out.data() + static_cast<int64_t>(b) * g.co * plane;
    for (int r0 = 0; r0 < g.ho; r0 += strip) {
      int r1 = std::min(g.ho, r0 + strip);
      int64_t P = static_cast<int64_t>(r1 - r0) * g.wo;
      detail2::im2col(xb, g, r0, r1, col.data());
      CMapRM C(col.data(), K, P);
      StridedMapRM O(ob + static_cast<int64_t>(r0) * g.wo, g.co, P,
                     Eigen::OuterStride<>(plane));
      O.noalias() = W * C;
    }
    if (bias.defined()) {
      for (int oc = 0; oc < g.co; ++oc) {
        float bv = bias.data()[oc];
        float* p = ob + static_cast<int64_t>(oc) * plane;
        for (int64_t i = 0; i < plane; ++i) p[i] += bv;
      }
    }
  }

  if (track_any({&x, &w, &bias})) {
    auto node = std::make_shared<Conv2dNode>();
    node->g = g;
    node->has_bias = bias.defined();
    node->inputs = {x.impl(), w.impl()};
    if (bias.defined()) node->inputs.push_back(bias.impl());
    attach(out, std::move(node));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Transposed convolution restricted to kernel == stride (non-overlapping
// upsampling), weight layout [Ci, Co, k, k].

struct ConvTranspose2dNode : detail::Node {
  int n, ci, h, w, co, k;
  bool has_bias = false;

  void backward(TensorImpl& out) override {
    TensorImpl& x = *inputs[0];
    TensorImpl& wt = *inputs[1];
    const int ho = h * k, wo = w * k;
    const int64_t oplane = static_cast<int64_t>(ho) * wo;

    if (has_bias && inputs[2]->requires_grad) {
      std::vector<float>& db = grad_of(*inputs[2]);
      for (int oc = 0; oc < co; ++oc) {
        double acc = 0.0;
        for (int b = 0; b < n; ++b) {
          const float* p =
              out.grad.data() + (static_cast<int64_t>(b) * co + oc) * oplane;
          for (int64_t i = 0; i < oplane; ++i) acc += p[i];
        }
        db[static_cast<size_t>(oc)] += static_cast<float>(acc);
      }
    }

    const bool need_x = x.requires_grad;
    const bool need_w = wt.requires_grad;
    if (!need_x && !need_w) return;
    if (need_x) grad_of(x);
    if (need_w) grad_of(wt);
    for (int b = 0; b < n; ++b)
      for (int ic = 0; ic < ci; ++ic)
        for (int iy = 0; iy < h; ++iy)
          for (int ix = 0; ix < w; ++ix) {
            int64_t xi = ((static_cast<int64_t>(b) * ci + ic) * h + iy) * w + ix;
            float xv = x.data[static_cast<size_t>(xi)];
            double dxi = 0.0;
            for (int oc = 0; oc < co; ++oc) {
              const float* wp =
                  wt.data.data() + ((static_cast<int64_t>(ic) * co + oc) * k) * k;
              float* wg = need_w ? wt.grad.data() +
                                       ((static_cast<int64_t>(ic) * co + oc) * k) * k
                                 : nullptr;
              const float* gp = out.grad.data() +
                                ((static_cast<int64_t>(b) * co + oc) * ho +
                                 static_cast<int64_t>(iy) * k) *
                                    wo +
                                static_cast<int64_t>(ix) * k;
              for (int ky = 0; ky < k; ++ky)
                for (int kx = 0; kx < k; ++kx) {
                  float go = gp[static_cast<int64_t>(ky) * wo + kx];
                  if (need_x) dxi += static_cast<double>(wp[ky * k + kx]) * go;
                  if (need_w) wg[ky * k + kx] += xv * go;
                }
            }
            if (need_x) x.grad[static_cast<size_t>(xi)] += static_cast<float>(dxi);
          }
  }
};

inline Tensor conv_transpose2d(const Tensor& x, const Tensor& w,
                               const Tensor& bias, int stride) {
  check(x.ndim() == 4 && w.ndim() == 4, ErrorKind::Shape,
        "conv_transpose2d expects 4-D input and weight");
  int k = static_cast<int>(w.dim(2));
  check(k == static_cast<int>(w.dim(3)) && k == stride, ErrorKind::InvalidArgument,
        "conv_transpose2d supports square kernel == stride only");
  int n = static_cast<int>(x.dim(0)), ci = static_cast<int>(x.dim(1));
  int h = static_cast<int>(x.dim(2)), ww = static_cast<int>(x.dim(3));
  check(static_cast<int>(w.dim(0)) == ci, ErrorKind::Shape,
        "conv_transpose2d: weight/input channel mismatch");
  int co = static_cast<int>(w.dim(1));
  if (bias.defined())
    check(bias.ndim() == 1 && bias.dim(0) == co, ErrorKind::Shape,
          "conv_transpose2d: bad bias shape");

  if (MacProfiler* prof = mac_profiler())
    prof->add(static_cast<int64_t>(n) * ci * co * k * k * h * ww);

  int ho = h * k, wo = ww * k;
  Tensor out = Tensor::zeros({n, co, ho, wo});
  for (int b = 0; b < n; ++b)
    for (int oc = 0; oc < co; ++oc) {
      float bv = bias.defined() ? bias.data()[oc] : 0.f;
      float* ob = out.data() + (static_cast<int64_t>(b) * co + oc) *
                                   static_cast<int64_t>(ho) * wo;
      for (int iy = 0; iy < h; ++iy)
        for (int ix = 0; ix < ww; ++ix) {
          float* op = ob + (static_cast<int64_t>(iy) * k) * wo +
                      static_cast<int64_t>(ix) * k;
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              double acc = bv;
              for (int ic = 0; ic < ci; ++ic)
                acc += static_cast<double>(
                           x.data()[((static_cast<int64_t>(b) * ci + ic) * h + iy) *
                                        ww +
                                    ix]) *
                       w.data()[((static_cast<int64_t>(ic) * co + oc) * k + ky) * k +
                                kx];
              op[static_cast<int64_t>(ky) * wo + kx] = static_cast<float>(acc);
            }
        }
    }

  if (track_any({&x, &w, &bias})) {
    auto node = std::make_shared<ConvTranspose2dNode>();
    node->n = n;
    node->ci = ci;
    node->h = h;
    node->w = ww;
    node->co = co;
    node->k = k;
    node->has_bias = bias.defined();
    node->inputs = {x.impl(), w.impl()};
    if (bias.defined()) node->inputs.push_back(bias.impl());
    attach(out, std::move(node));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Batch normalization over N,H,W per channel.

struct BatchNormNode : detail::Node {
  int n, c, h, w;
  bool training;
  std::vector<float> mean, invstd;  // statistics used in the forward pass

  void backward(TensorImpl& out) override {
    TensorImpl& x = *inputs[0];
    TensorImpl& gamma = *inputs[1];
    TensorImpl& beta = *inputs[2];
    const int64_t plane = static_cast<int64_t>(h) * w;
    const double M = static_cast<double>(n) * plane;

    const bool need_x = x.requires_grad;
    if (need_x) grad_of(x);
    const bool need_g = gamma.requires_grad;
    const bool need_b = beta.requires_grad;
    if (need_g) grad_of(gamma);
    if (need_b) grad_of(beta);

    for (int ch = 0; ch < c; ++ch) {
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      float mu = mean[static_cast<size_t>(ch)];
      float is = invstd[static_cast<size_t>(ch)];
      for (int b = 0; b < n; ++b) {
        const float* xp =
            x.data.data() + (static_cast<int64_t>(b) * c + ch) * plane;
        const float* gp =
            out.grad.data() + (static_cast<int64_t>(b) * c + ch) * plane;
        for (int64_t i = 0; i < plane; ++i) {
          sum_dy += gp[i];
          sum_dy_xhat += static_cast<double>(gp[i]) * ((xp[i] - mu) * is);
        }
      }
      if (need_g) gamma.grad[static_cast<size_t>(ch)] += static_cast<float>(sum_dy_xhat);
      if (need_b) beta.grad[static_cast<size_t>(ch)] += static_cast<float>(sum_dy);
      if (!need_x) continue;
      float gch = gamma.data[static_cast<size_t>(ch)];
      if (training) {
        float k1 = static_cast<float>(sum_dy / M);
        float k2 = static_cast<float>(sum_dy_xhat / M);
        for (int b = 0; b < n; ++b) {
          const float* xp =
              x.data.data() + (static_cast<int64_t>(b) * c + ch) * plane;
          const float* gp =
              out.grad.data() + (static_cast<int64_t>(b) * c + ch) * plane;
          float* dxp = x.grad.data() + (static_cast<int64_t>(b) * c + ch) * plane;
          for (int64_t i = 0; i < plane; ++i) {
            float xhat = (xp[i] - mu) * is;
            dxp[i] += gch * is * (gp[i] - k1 - xhat * k2);
          }
        }
      } else {
        for (int b = 0; b < n; ++b) {
          const float* gp =
              out.grad.data() + (static_cast<int64_t>(b) * c + ch) * plane;
          float* dxp = x.grad.data() + (static_cast<int64_t>(b) * c + ch) * plane;
          for (int64_t i = 0; i < plane; ++i) dxp[i] += gp[i] * gch * is;
        }
      }
    }
  }
};

inline Tensor batch_norm(const Tensor& x, const Tensor& gamma,
                         const Tensor& beta, Tensor& running_mean,
                         Tensor& running_var, bool training,
                         float momentum = 0.1f, float eps = 1e-5f) {
  check(x.ndim() == 4, ErrorKind::Shape, "batch_norm expects a 4-D input");
  int n = static_cast<int>(x.dim(0)), c = static_cast<int>(x.dim(1));
  int h = static_cast<int>(x.dim(2)), w = static_cast<int>(x.dim(3));
  check(gamma.numel() == c && beta.numel() == c && running_mean.numel() == c &&
            running_var.numel() == c,
        ErrorKind::Shape, "batch_norm: parameter size must match channels");
  const int64_t plane = static_cast<int64_t>(h) * w;
  const double M = static_cast<double>(n) * plane;
  if (training)
    check(M > 1, ErrorKind::Shape,
          "batch_norm: training requires more than one value per channel");

  std::vector<float> mean(static_cast<size_t>(c)), invstd(static_cast<size_t>(c));
  if (training) {
    for (int ch = 0; ch < c; ++ch) {
      double s = 0.0;
      for (int b = 0; b < n; ++b) {
        const float* xp = x.data() + (static_cast<int64_t>(b) * c + ch) * plane;
        for (int64_t i = 0; i < plane; ++i) s += xp[i];
      }
      double mu = s / M;
      double v = 0.0;
      for (int b = 0; b < n; ++b) {
        const float* xp = x.data() + (static_cast<int64_t>(b) * c + ch) * plane;
        for (int64_t i = 0; i < plane; ++i) {
          double d = xp[i] - mu;
          v += d * d;
        }
      }
      double var = v / M;
      mean[static_cast<size_t>(ch)] = static_cast<float>(mu);
      invstd[static_cast<size_t>(ch)] = static_cast<float>(1.0 / std::sqrt(var + eps));
      float* rm = running_mean.data();
      float* rv = running_var.data();
      rm[ch] = (1.f - momentum) * rm[ch] + momentum * static_cast<float>(mu);
      rv[ch] = (1.f - momentum) * rv[ch] +
               momentum * static_cast<float>(v / (M - 1.0));
    }
  } else {
    for (int ch = 0; ch < c; ++ch) {
      mean[static_cast<size_t>(ch)] = running_mean.data()[ch];
      invstd[static_cast<size_t>(ch)] =
          1.f / std::sqrt(running_var.data()[ch] + eps);
    }
  }

  Tensor out = Tensor::zeros(x.shape());
  for (int ch = 0; ch < c; ++ch) {
    float scale = invstd[static_cast<size_t>(ch)] * gamma.data()[ch];
    float shift = beta.data()[ch] - mean[static_cast<size_t>(ch)] * scale;
    for (int b = 0; b < n; ++b) {
      const float* xp = x.data() + (static_cast<int64_t>(b) * c + ch) * plane;
      float* op = out.data() + (static_cast<int64_t>(b) * c + ch) * plane;
      for (int64_t i = 0; i < plane; ++i) op[i] = xp[i] * scale + shift;
    }
  }

  if (track_any({&x, &gamma, &beta})) {
    auto node = std::make_shared<BatchNormNode>();
    node->n = n;
    node->c = c;
    node->h = h;
    node->w = w;
    node->training = training;
    node->mean = std::move(mean);
    node->invstd = std::move(invstd);
    node->inputs = {x.impl(), gamma.impl(), beta.impl()};
    attach(out, std::move(node));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Elementwise and structural ops.

struct ReluNode : detail::Node {
  std::shared_ptr<TensorImpl> saved_out;
  void backward(TensorImpl& out) override {
    TensorImpl& x = *inputs[0];
    if (!x.requires_grad) return;
    std::vector<float>& dx = grad_of(x);
    const std::vector<float>& y = saved_out->data;
    for (size_t i = 0; i < dx.size(); ++i)
      if (y[i] > 0.f) dx[i] += out.grad[i];
  }
};

inline Tensor relu(const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  const float* xp = x.data();
  float* op = out.data();
  int64_t n = x.numel();
  for (int64_t i = 0; i < n; ++i) op[i] = xp[i] > 0.f ? xp[i] : 0.f;
  if (track_any({&x})) {
    auto node = std::make_shared<ReluNode>();
    node->inputs = {x.impl()};
    node->saved_out = out.impl();
    attach(out, std::move(node));
  }
  return out;
}

struct SigmoidNode : detail::Node {
  std::shared_ptr<TensorImpl> saved_out;
  void backward(TensorImpl& out) override {
    TensorImpl& x = *inputs[0];
    if (!x.requires_grad) return;
    std::vector<float>& dx = grad_of(x);
    const std::vector<float>& y = saved_out->data;
    for (size_t i = 0; i < dx.size(); ++i)
      dx[i] += out.grad[i] * y[i] * (1.f - y[i]);
  }
};

inline Tensor sigmoid(const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  const float* xp = x.data();
  float* op = out.data();
  int64_t n = x.numel();
  for (int64_t i = 0; i < n; ++i) {
    float v = xp[i];
    op[i] = v >= 0.f ? 1.f / (1.f + std::exp(-v))
                     : std::exp(v) / (1.f + std::exp(v));
  }
  if (track_any({&x})) {
    auto node = std::make_shared<SigmoidNode>();
    node->inputs = {x.impl()};
    node->saved_out = out.impl();
    attach(out, std::move(node));
  }
  return out;
}

struct AddNode : detail::Node {
  void backward(TensorImpl& out) override {
    for (int k = 0; k < 2; ++k) {
      TensorImpl& t = *inputs[static_cast<size_t>(k)];
      if (!t.requires_grad) continue;
      std::vector<float>& g = grad_of(t);
      for (size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i];
    }
  }
};

inline Tensor add(const Tensor& a, const Tensor& b) {
  check(a.shape() == b.shape(), ErrorKind::Shape,
        strf("add: shape mismatch %s vs %s", shape_str(a.shape()).c_str(),
             shape_str(b.shape()).c_str()));
  Tensor out = Tensor::zeros(a.shape());
  const float* ap = a.data();
  const float* bp = b.data();
  float* op = out.data();
  int64_t n = a.numel();
  for (int64_t i = 0; i < n; ++i) op[i] = ap[i] + bp[i];
  if (track_any({&a, &b})) {
    auto node = std::make_shared<AddNode>();
    node->inputs = {a.impl(), b.impl()};
    attach(out, std::move(node));
  }
  return out;
}

struct MulNode : detail::Node {
  void backward(TensorImpl& out) override {
    TensorImpl& a = *inputs[0];
    TensorImpl& b = *inputs[1];
    if (a.requires_grad) {
      std::vector<float>& g = grad_of(a);
      for (size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i] * b.data[i];
    }
    if (b.requires_grad) {
      std::vector<float>& g = grad_of(b);
      for (size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i] * a.data[i];
    }
  }
};

inline Tensor mul(const Tensor& a, const Tensor& b) {
  check(a.shape() == b.shape(), ErrorKind::Shape,
        strf("mul: shape mismatch %s vs %s", shape_str(a.shape()).c_str(),
             shape_str(b.shape()).c_str()));
  Tensor out = Tensor::zeros(a.shape());
  const float* ap = a.data();
  const float* bp = b.data();
  float* op = out.data();
  int64_t n = a.numel();
  for (int64_t i = 0; i < n; ++i) op[i] = ap[i] * bp[i];
  if (track_any({&a, &b})) {
    auto node = std::make_shared<MulNode>();
    node->inputs = {a.impl(), b.impl()};
    attach(out, std::move(node));
  }
  return out;
}

struct ScaleNode : detail::Node {
  float s;
  void backward(TensorImpl& out) override {
    TensorImpl& x = *inputs[0];
    if (!x.requires_grad) return;
    std::vector<float>& dx = grad_of(x);
    for (size_t i = 0; i < dx.size(); ++i) dx[i] += s * out.grad[i];
  }
};

inline Tensor scale(const Tensor& x, float s) {
  Tensor out = Tensor::zeros(x.shape());
  const float* xp = x.data();
  float* op = out.data();
  int64_t n = x.numel();
  for (int64_t i = 0; i < n; ++i) op[i] = s * xp[i];
  if (track_any({&x})) {
    auto node = std::make_shared<ScaleNode>();
    node->s = s;
    node->inputs = {x.impl()};
    attach(out, std::move(node));
  }
  return out;
}

struct ConcatNode : detail::Node {
  int n, h, w;
  std::vector<int> channels;
  void backward(TensorImpl& out) override {
    int64_t plane = static_cast<int64_t>(h) * w;
    int co = 0;
    for (int c : channels) co += c;
    int off = 0;
    for (size_t k = 0; k < inputs.size(); ++k) {
      TensorImpl& t = *inputs[k];
      int ck = channels[k];
      if (t.requires_grad) {
        std::vector<float>& g = grad_of(t);
        for (int b = 0; b < n; ++b) {
          const float* src = out.grad.data() +
                             (static_cast<int64_t>(b) * co + off) * plane;
          float* dst = g.data() + static_cast<int64_t>(b) * ck * plane;
          for (int64_t i = 0; i < static_cast<int64_t>(ck) * plane; ++i)
            dst[i] += src[i];
        }
      }
      off += ck;
    }
  }
};

inline Tensor concat_channels(const std::vector<Tensor>& xs) {
  check(!xs.empty(), ErrorKind::InvalidArgument, "concat_channels: no inputs");
  int n = static_cast<int>(xs[0].dim(0));
  int h = static_cast<int>(xs[0].dim(2));
  int w = static_cast<int>(xs[0].dim(3));
  int co = 0;
  for (const Tensor& t : xs) {
    check(t.ndim() == 4 && static_cast<int>(t.dim(0)) == n &&
              static_cast<int>(t.dim(2)) == h && static_cast<int>(t.dim(3)) == w,
          ErrorKind::Shape, "concat_channels: inputs must agree on N, H, W");
    co += static_cast<int>(t.dim(1));
  }
  Tensor out = Tensor::zeros({n, co, h, w});
  int64_t plane = static_cast<int64_t>(h) * w;
  int off = 0;
  for (const Tensor& t : xs) {
    int ck = static_cast<int>(t.dim(1));
    for (int b = 0; b < n; ++b)
      std::memcpy(out.data() + (static_cast<int64_t>(b) * co + off) * plane,
                  t.data() + static_cast<int64_t>(b) * ck * plane,
                  sizeof(float) * static_cast<size_t>(ck * plane));
    off += ck;
  }
  bool want = false;
  if (grad_enabled())
    for (const Tensor& t : xs) want = want || t.requires_grad();
  if (want) {
    auto node = std::make_shared<ConcatNode>();
    node->n = n;
    node->h = h;
    node->w = w;
    for (const Tensor& t : xs) {
      node->channels.push_back(static_cast<int>(t.dim(1)));
      node->inputs.push_back(t.impl());
    }
    attach(out, std::move(node));
  }
  return out;
}

struct MulGateNode : detail::Node {
  int n, c, h, w;
  void backward(TensorImpl& out) override {
    TensorImpl& x = *inputs[0];
    TensorImpl& g = *inputs[1];
    int64_t plane = static_cast<int64_t>(h) * w;
    if (x.requires_grad) {
      std::vector<float>& dx = grad_of(x);
      for (int b = 0; b < n; ++b) {
        const float* gp = g.data.data() + static_cast<int64_t>(b) * plane;
        for (int ch = 0; ch < c; ++ch) {
          const float* go = out.grad.data() +
                            (static_cast<int64_t>(b) * c + ch) * plane;
          float* dxp = dx.data() + (static_cast<int64_t>(b) * c + ch) * plane;
          for (int64_t i = 0; i < plane; ++i) dxp[i] += go[i] * gp[i];
        }
      }
    }
    if (g.requires_grad) {
      std::vector<float>& dg = grad_of(g);
      for (int b = 0; b < n; ++b) {
        float* dgp = dg.data() + static_cast<int64_t>(b) * plane;
        for (int ch = 0; ch < c; ++ch) {
          const float* go = out.grad.data() +
                            (static_cast<int64_t>(b) * c + ch) * plane;
          const float* xp = x.data.data() +
                            (static_cast<int64_t>(b) * c + ch) * plane;
          for (int64_t i = 0; i < plane; ++i) dgp[i] += go[i] * xp[i];
        }
      }
    }
  }
};

// x: [N,C,H,W], gate: [N,1,H,W] broadcast across channels.
inline Tensor mul_gate(const Tensor& x, const Tensor& gate) {
  check(x.ndim() == 4 && gate.ndim() == 4 && gate.dim(1) == 1 &&
            gate.dim(0) == x.dim(0) && gate.dim(2) == x.dim(2) &&
            gate.dim(3) == x.dim(3),
        ErrorKind::Shape, "mul_gate: gate must be [N,1,H,W] matching input");
  int n = static_cast<int>(x.dim(0)), c = static_cast<int>(x.dim(1));
  int h = static_cast<int>(x.dim(2)), w = static_cast<int>(x.dim(3));
  int64_t plane = static_cast<int64_t>(h) * w;
  Tensor out = Tensor::zeros(x.shape());
  for (int b = 0; b < n; ++b) {
    const float* gp = gate.data() + static_cast<int64_t>(b) * plane;
    for (int ch = 0; ch < c; ++ch) {
      const float* xp = x.data() + (static_cast<int64_t>(b) * c + ch) * plane;
      float* op = out.data() + (static_cast<int64_t>(b) * c + ch) * plane;
      for (int64_t i = 0; i < plane; ++i) op[i] = xp[i] * gp[i];
    }
  }
  if (track_any({&x, &gate})) {
    auto node = std::make_shared<MulGateNode>();
    node->n = n;
    node->c = c;
    node->h = h;
    node->w = w;
    node->inputs = {x.impl(), gate.impl()};
    attach(out, std::move(node));
  }
  return out;
}

struct ChannelMeanNode : detail::Node {
  int n, c, h, w;
  void backward(TensorImpl& out) override {
    TensorImpl& x = *inputs[0];
    if (!x.requires_grad) return;
    std::vector<float>& dx = grad_of(x);
    int64_t plane = static_cast<int64_t>(h) * w;
    float inv = 1.f / static_cast<float>(c);
    for (int b = 0; b < n; ++b) {
      const float* go = out.grad.data() + static_cast<int64_t>(b) * plane;
      for (int ch = 0; ch < c; ++ch) {
        float* dxp = dx.data() + (static_cast<int64_t>(b) * c + ch) * plane;
        for (int64_t i = 0; i < plane; ++i) dxp[i] += go[i] * inv;
      }
    }
  }
};

inline Tensor channel_mean(const Tensor& x) {
  check(x.ndim() == 4, ErrorKind::Shape, "channel_mean expects a 4-D input");
  int n = static_cast<int>(x.dim(0)), c = static_cast<int>(x.dim(1));
  int h = static_cast<int>(x.dim(2)), w = static_cast<int>(x.dim(3));
  int64_t plane = static_cast<int64_t>(h) * w;
  Tensor out = Tensor::zeros({n, 1, h, w});
  for (int b = 0; b < n; ++b) {
    float* op = out.data() + static_cast<int64_t>(b) * plane;
    for (int ch = 0; ch < c; ++ch) {
      const float* xp = x.data() + (static_cast<int64_t>(b) * c + ch) * plane;
      for (int64_t i = 0; i < plane; ++i) op[i] += xp[i];
    }
    float inv = 1.f / static_cast<float>(c);
    for (int64_t i = 0; i < plane; ++i) op[i] *= inv;
  }
  if (track_any({&x})) {
    auto node = std::make_shared<ChannelMeanNode>();
    node->n = n;
    node->c = c;
    node->h = h;
    node->w = w;
    node->inputs = {x.impl()};
    attach(out, std::move(node));
  }
  return out;
}

struct ChannelMaxNode : detail::Node {
  int n, c, h, w;
  std::vector<int32_t> argmax;  // winning channel per (b, pixel)
  void backward(TensorImpl& out) override {
    TensorImpl& x = *inputs[0];
    if (!x.requires_grad) return;
    std::vector<float>& dx = grad_of(x);
    int64_t plane = static_cast<int64_t>(h) * w;
    for (int b = 0; b < n; ++b) {
      const float* go = out.grad.data() + static_cast<int64_t>(b) * plane;
      const int32_t* am = argmax.data() + static_cast<int64_t>(b) * plane;
      for (int64_t i = 0; i < plane; ++i)
        dx[(static_cast<int64_t>(b) * c + am[i]) * plane + i] += go[i];
    }
  }
};

// Ties go to the lowest channel index.
inline Tensor channel_max(const Tensor& x) {
  check(x.ndim() == 4, ErrorKind::Shape, "channel_max expects a 4-D input");
  int n = static_cast<int>(x.dim(0)), c = static_cast<int>(x.dim(1));
  int h = static_cast<int>(x.dim(2)), w = static_cast<int>(x.dim(3));
  int64_t plane = static_cast<int64_t>(h) * w;
  Tensor out = Tensor::zeros({n, 1, h, w});
  std::vector<int32_t> argmax(static_cast<size_t>(n * plane), 0);
  for (int b = 0; b < n; ++b) {
    float* op = out.data() + static_cast<int64_t>(b) * plane;
    int32_t* am = argmax.data() + static_cast<int64_t>(b) * plane;
    const float* x0 = x.data() + static_cast<int64_t>(b) * c * plane;
    for (int64_t i = 0; i < plane; ++i) {
      float best = x0[i];
      int32_t bi = 0;
      for (int ch = 1; ch < c; ++ch) {
        float v = x0[static_cast<int64_t>(ch) * plane + i];
        if (v > best) {
          best = v;
          bi = ch;
        }
      }
      op[i] = best;
      am[i] = bi;
    }
  }
  if (track_any({&x})) {
    auto node = std::make_shared<ChannelMaxNode>();
    node->n = n;
    node->c = c;
    node->h = h;
    node->w = w;
    node->argmax = std::move(argmax);
    node->inputs = {x.impl()};
    attach(out, std::move(node));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Max pooling.

struct MaxPool2dNode : detail::Node {
  int n, c, h, w, ho, wo;
  std::vector<int32_t> argmax;  // linear index into the input plane
  void backward(TensorImpl& out) override {
    TensorImpl& x = *inputs[0];
    if (!x.requires_grad) return;
    std::vector<float>& dx = grad_of(x);
    int64_t iplane = static_cast<int64_t>(h) * w;
    int64_t oplane = static_cast<int64_t>(ho) * wo;
    for (int64_t bc = 0; bc < static_cast<int64_t>(n) * c; ++bc) {
      const float* go = out.grad.data() + bc * oplane;
      const int32_t* am = argmax.data() + bc * oplane;
      float* dxp = dx.data() + bc * iplane;
      for (int64_t i = 0; i < oplane; ++i) dxp[am[i]] += go[i];
    }
  }
};

// Out-of-bounds window cells are treated as absent; ties keep the first
// candidate in scan order.
inline Tensor max_pool2d(const Tensor& x, int kernel, int stride, int pad) {
  check(x.ndim() == 4, ErrorKind::Shape, "max_pool2d expects a 4-D input");
  check(kernel >= 1 && stride >= 1 && pad >= 0 && pad < kernel,
        ErrorKind::InvalidArgument, "max_pool2d: bad kernel/stride/pad");
  int n = static_cast<int>(x.dim(0)), c = static_cast<int>(x.dim(1));
  int h = static_cast<int>(x.dim(2)), w = static_cast<int>(x.dim(3));
  int ho = (h + 2 * pad - kernel) / stride + 1;
  int wo = (w + 2 * pad - kernel) / stride + 1;
  check(ho >= 1 && wo >= 1, ErrorKind::Shape, "max_pool2d: empty output");
  Tensor out = Tensor::zeros({n, c, ho, wo});
  int64_t iplane = static_cast<int64_t>(h) * w;
  int64_t oplane = static_cast<int64_t>(ho) * wo;
  std::vector<int32_t> argmax(static_cast<size_t>(static_cast<int64_t>(n) * c * oplane));
  for (int64_t bc = 0; bc < static_cast<int64_t>(n) * c; ++bc) {
    const float* xp = x.data() + bc * iplane;
    float* op = out.data() + bc * oplane;
    int32_t* am = argmax.data() + bc * oplane;
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) {
        float best = 0.f;
        int32_t bi = -1;
        for (int ky = 0; ky < kernel; ++ky) {
          int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < kernel; ++kx) {
            int ix = ox * stride - pad + kx;
            if (ix < 0 || ix >= w) continue;
            float v = xp[static_cast<int64_t>(iy) * w + ix];
            if (bi < 0 || v > best) {
              best = v;
              bi = static_cast<int32_t>(iy * w + ix);
            }
          }
        }
        op[static_cast<int64_t>(oy) * wo + ox] = best;
        am[static_cast<int64_t>(oy) * wo + ox] = bi;
      }
  }
  if (track_any({&x})) {
    auto node = std::make_shared<MaxPool2dNode>();
    node->n = n;
    node->c = c;
    node->h = h;
    node->w = w;
    node->ho = ho;
    node->wo = wo;
    node->argmax = std::move(argmax);
    node->inputs = {x.impl()};
    attach(out, std::move(node));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bilinear 2x upsampling, half-pixel centers.

struct Upsample2xNode : detail::Node {
  int n, c, h, w;
  void backward(TensorImpl& out) override {
    TensorImpl& x = *inputs[0];
    if (!x.requires_grad) return;
    std::vector<float>& dx = grad_of(x);
    int ho = 2 * h, wo = 2 * w;
    int64_t iplane = static_cast<int64_t>(h) * w;
    int64_t oplane = static_cast<int64_t>(ho) * wo;
    for (int64_t bc = 0; bc < static_cast<int64_t>(n) * c; ++bc) {
      const float* go = out.grad.data() + bc * oplane;
      float* dxp = dx.data() + bc * iplane;
      for (int oy = 0; oy < ho; ++oy) {
        float sy = (oy + 0.5f) * 0.5f - 0.5f;
        int y0 = static_cast<int>(std::floor(sy));
        float wy = sy - y0;
        int y0c = std::clamp(y0, 0, h - 1);
        int y1c = std::clamp(y0 + 1, 0, h - 1);
        for (int ox = 0; ox < wo; ++ox) {
          float sx = (ox + 0.5f) * 0.5f - 0.5f;
          int x0 = static_cast<int>(std::floor(sx));
          float wx = sx - x0;
          int x0c = std::clamp(x0, 0, w - 1);
          int x1c = std::clamp(x0 + 1, 0, w - 1);
          float g = go[static_cast<int64_t>(oy) * wo + ox];
          dxp[static_cast<int64_t>(y0c) * w + x0c] += g * (1 - wy) * (1 - wx);
          dxp[static_cast<int64_t>(y0c) * w + x1c] += g * (1 - wy) * wx;
          dxp[static_cast<int64_t>(y1c) * w + x0c] += g * wy * (1 - wx);
          dxp[static_cast<int64_t>(y1c) * w + x1c] += g * wy * wx;
        }
      }
    }
  }
};

inline Tensor upsample_bilinear_2x(const Tensor& x) {
  check(x.ndim() == 4, ErrorKind::Shape, "upsample expects a 4-D input");
  int n = static_cast<int>(x.dim(0)), c = static_cast<int>(x.dim(1));
  int h = static_cast<int>(x.dim(2)), w = static_cast<int>(x.dim(3));
  int ho = 2 * h, wo = 2 * w;
  Tensor out = Tensor::zeros({n, c, ho, wo});
  int64_t iplane = static_cast<int64_t>(h) * w;
  int64_t oplane = static_cast<int64_t>(ho) * wo;
  for (int64_t bc = 0; bc < static_cast<int64_t>(n) * c; ++bc) {
    const float* xp = x.data() + bc * iplane;
    float* op = out.data() + bc * oplane;
    for (int oy = 0; oy < ho; ++oy) {
      float sy = (oy + 0.5f) * 0.5f - 0.5f;
      int y0 = static_cast<int>(std::floor(sy));
      float wy = sy - y0;
      int y0c = std::clamp(y0, 0, h - 1);
      int y1c = std::clamp(y0 + 1, 0, h - 1);
      const float* r0 = xp + static_cast<int64_t>(y0c) * w;
      const float* r1 = xp + static_cast<int64_t>(y1c) * w;
      for (int ox = 0; ox < wo; ++ox) {
        float sx = (ox + 0.5f) * 0.5f - 0.5f;
        int x0 = static_cast<int>(std::floor(sx));
        float wx = sx - x0;
        int x0c = std::clamp(x0, 0, w - 1);
        int x1c = std::clamp(x0 + 1, 0, w - 1);
        op[static_cast<int64_t>(oy) * wo + ox] =
            (1 - wy) * ((1 - wx) * r0[x0c] + wx * r0[x1c]) +
            wy * ((1 - wx) * r1[x0c] + wx * r1[x1c]);
      }
    }
  }
  if (track_any({&x})) {
    auto node = std::make_shared<Upsample2xNode>();
    node->n = n;
    node->c = c;
    node->h = h;
    node->w = w;
    node->inputs = {x.impl()};
    attach(out, std::move(node));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reductions.

struct ReduceSumNode : detail::Node {
  void backward(TensorImpl& out) override {
    TensorImpl& x = *inputs[0];
    if (!x.requires_grad) return;
    std::vector<float>& dx = grad_of(x);
    float g = out.grad[0];
    for (float& v : dx) v += g;
  }
};

inline Tensor reduce_sum(const Tensor& x) {
  double acc = 0.0;
  const float* xp = x.data();
  int64_t n = x.numel();
  for (int64_t i = 0; i < n; ++i) acc += xp[i];
  Tensor out = Tensor::from({1}, {static_cast<float>(acc)});
  if (track_any({&x})) {
    auto node = std::make_shared<ReduceSumNode>();
    node->inputs = {x.impl()};
    attach(out, std::move(node));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Weighted softmax cross-entropy with an ignore label, averaged over the
// number of contributing pixels.

struct CeStats {
  int64_t counted = 0;
  int64_t ignored = 0;
  bool all_ignored = false;
};

struct WeightedCeNode : detail::Node {
  int n, k, h, w;
  std::vector<int32_t> targets;
  std::vector<float> weights;
  int ignore_index;
  int64_t counted;

  void backward(TensorImpl& out) override {
    TensorImpl& x = *inputs[0];
    if (!x.requires_grad || counted == 0) return;
    std::vector<float>& dx = grad_of(x);
    const float gscale = out.grad[0] / static_cast<float>(counted);
    const int64_t plane = static_cast<int64_t>(h) * w;
    const int64_t cstride = plane;
    for (int b = 0; b < n; ++b) {
      const float* xb = x.data.data() + static_cast<int64_t>(b) * k * plane;
      float* dxb = dx.data() + static_cast<int64_t>(b) * k * plane;
      const int32_t* tb = targets.data() + static_cast<int64_t>(b) * plane;
      for (int64_t i = 0; i < plane; ++i) {
        int32_t t = tb[i];
        if (t == ignore_index) continue;
        double mx = xb[i];
        for (int c = 1; c < k; ++c)
          mx = std::max(mx, static_cast<double>(xb[c * cstride + i]));
        double denom = 0.0;
        for (int c = 0; c < k; ++c)
          denom += std::exp(static_cast<double>(xb[c * cstride + i]) - mx);
        float wt = weights[static_cast<size_t>(t)] * gscale;
        for (int c = 0; c < k; ++c) {
          double p = std::exp(static_cast<double>(xb[c * cstride + i]) - mx) / denom;
          dxb[c * cstride + i] +=
              wt * static_cast<float>(p - (c == t ? 1.0 : 0.0));
        }
      }
    }
  }
};

inline Tensor weighted_cross_entropy(const Tensor& logits,
                                     const std::vector<int32_t>& targets,
                                     const std::vector<float>& class_weights,
                                     int ignore_index, CeStats* stats = nullptr) {
  check(logits.ndim() == 4, ErrorKind::Shape,
        "cross-entropy expects [N,K,H,W] logits");
  int n = static_cast<int>(logits.dim(0)), k = static_cast<int>(logits.dim(1));
  int h = static_cast<int>(logits.dim(2)), w = static_cast<int>(logits.dim(3));
  check(static_cast<int64_t>(targets.size()) ==
            static_cast<int64_t>(n) * h * w,
        ErrorKind::Shape, "cross-entropy: target size must be N*H*W");
  check(static_cast<int>(class_weights.size()) == k, ErrorKind::Shape,
        strf("cross-entropy: expected %d class weights, got %zu", k,
             class_weights.size()));
  check(ignore_index < 0 || ignore_index >= k, ErrorKind::InvalidArgument,
        "cross-entropy: ignore_index must lie outside [0, num_classes)");
  for (float wv : class_weights)
    check(wv >= 0.f && std::isfinite(wv), ErrorKind::InvalidArgument,
          "cross-entropy: class weights must be finite and non-negative");

  const int64_t plane = static_cast<int64_t>(h) * w;
  double total = 0.0;
  int64_t counted = 0, ignored = 0;
  for (int b = 0; b < n; ++b) {
    const float* xb = logits.data() + static_cast<int64_t>(b) * k * plane;
    const int32_t* tb = targets.data() + static_cast<int64_t>(b) * plane;
    for (int64_t i = 0; i < plane; ++i) {
      int32_t t = tb[i];
      if (t == ignore_index) {
        ++ignored;
        continue;
      }
      check(t >= 0 && t < k, ErrorKind::Data,
            strf("cross-entropy: target %d outside [0, %d)", t, k));
      double mx = xb[i];
      for (int c = 1; c < k; ++c)
        mx = std::max(mx, static_cast<double>(xb[c * plane + i]));
      double denom = 0.0;
      for (int c = 0; c < k; ++c)
        denom += std::exp(static_cast<double>(xb[c * plane + i]) - mx);
      double lse = mx + std::log(denom);
      total += static_cast<double>(class_weights[static_cast<size_t>(t)]) *
               (lse - static_cast<double>(xb[t * plane + i]));
      ++counted;
    }
  }
  if (stats) {
    stats->counted = counted;
    stats->ignored = ignored;
    stats->all_ignored = counted == 0;
  }
  float loss = counted == 0 ? 0.f : static_cast<float>(total / counted);
  Tensor out = Tensor::from({1}, {loss});
  if (track_any({&logits})) {
    auto node = std::make_shared<WeightedCeNode>();
    node->n = n;
    node->k = k;
    node->h = h;
    node->w = w;
    node->targets = targets;
    node->weights = class_weights;
    node->ignore_index = ignore_index;
    node->counted = counted;
    node->inputs = {logits.impl()};
    attach(out, std::move(node));
  }
  return out;
}

}  // namespace ops
}  // namespace sdrnet
