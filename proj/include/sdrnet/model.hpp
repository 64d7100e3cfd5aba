#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sdrnet/dilation.hpp"
#include "sdrnet/nn.hpp"
#include "sdrnet/ops.hpp"

namespace sdrnet {

enum class Backbone { Resnet50Style, Resnet18Style };

inline const char* backbone_name(Backbone b) {
  return b == Backbone::Resnet50Style ? "resnet50-style" : "resnet18-style";
}

struct ModelConfig {
  int num_classes = 6;
  int in_channels = 3;
  int input_size = 256;
  Backbone backbone = Backbone::Resnet50Style;
  bool pretrained_encoder1 = false;
  bool pretrained_encoder2 = false;
  std::string pretrained_path;
  bool use_attention = true;
  bool use_drb = true;
  bool stacked = true;
  DilationSchedule drb_schedule{{1, 2, 5}, 3};
  bool drb_fuse_sum = false;        // sum layer outputs instead of concat
  bool drb_allow_gridding = false;  // keep a failing schedule, with a warning
  bool deconv_upsample = false;     // transposed conv instead of bilinear
  int attention_kernel = 7;
  int base_width = 64;
};

inline void validate_model_config(const ModelConfig& c) {
  check(c.num_classes >= 2, ErrorKind::Config,
        strf("num_classes must be >= 2, got %d", c.num_classes));
  check(c.in_channels >= 1, ErrorKind::Config,
        strf("in_channels must be >= 1, got %d", c.in_channels));
  check(c.input_size >= 32 && c.input_size % 32 == 0, ErrorKind::Config,
        strf("input_size must be a positive multiple of 32, got %d",
             c.input_size));
  check(c.base_width >= 8 && c.base_width % 4 == 0, ErrorKind::Config,
        strf("base_width must be >= 8 and divisible by 4, got %d",
             c.base_width));
  check(c.attention_kernel >= 1 && c.attention_kernel % 2 == 1,
        ErrorKind::Config,
        strf("attention_kernel must be odd, got %d", c.attention_kernel));
  if (c.pretrained_encoder1 || c.pretrained_encoder2)
    check(!c.pretrained_path.empty(), ErrorKind::Config,
          "pretrained encoders require pretrained_path");
  if (c.use_drb) {
    validate_schedule(c.drb_schedule);
    if (!c.drb_allow_gridding)
      check(check_gridding(c.drb_schedule).passes, ErrorKind::Config,
            "drb_schedule fails the gridding check (set "
            "drb_allow_gridding to override)");
  }
}

// ---------------------------------------------------------------------------
// Building blocks.

// Gate from channel-wise average and max maps: sigmoid(conv([avg;max])),
// multiplied back onto the feature.
class SpatialAttention : public nn::Module {
 public:
  SpatialAttention(int kernel, Rng& rng)
      : conv(2, 1, kernel, 1, (kernel - 1) / 2, 1, true, rng) {
    add_child("conv", &conv);
  }

  Tensor gate(const Tensor& x) const {
    Tensor pooled =
        ops::concat_channels({ops::channel_mean(x), ops::channel_max(x)});
    return ops::sigmoid(conv.forward(pooled));
  }
  Tensor forward(const Tensor& x) const { return ops::mul_gate(x, gate(x)); }

  nn::Conv2d conv;
};

// One dilated layer with its residual shortcut.
class DilatedUnit : public nn::Module {
 public:
  DilatedUnit(int channels, int kernel, int rate, Rng& rng)
      : conv(channels, channels, kernel, 1, rate * (kernel - 1) / 2, rate,
             false, rng),
        bn(channels) {
    add_child("conv", &conv);
    add_child("bn", &bn);
  }
  Tensor forward(const Tensor& x) {
    return ops::add(x, ops::relu(bn.forward(conv.forward(x))));
  }
  nn::Conv2d conv;
  nn::BatchNorm2d bn;
};

// Serial chain of dilated residual layers on a reduced channel count, fused
// back to the block's input width. Wide inputs are first projected down so
// the dilated 3x3 convs stay affordable; the trailing 1x1 restores C, which
// the fusion projection must do anyway.
class Drb : public nn::Module {
 public:
  Drb(int channels, const DilationSchedule& schedule, bool fuse_sum, Rng& rng)
      : fuse_sum_(fuse_sum) {
    int reduced = channels >= 32 ? std::max(8, channels / 4) : channels;
    if (reduced != channels) {
      entry_ = std::make_unique<nn::ConvBnRelu>(channels, reduced, 1, 1, 0, 1, rng);
      add_child("entry", entry_.get());
    }
    for (size_t i = 0; i < schedule.rates.size(); ++i) {
      layers_.push_back(std::make_unique<DilatedUnit>(
          reduced, schedule.kernel_size, schedule.rates[i], rng));
      add_child("layer" + std::to_string(i + 1), layers_.back().get());
    }
    int fuse_in = fuse_sum ? reduced
                           : reduced * static_cast<int>(schedule.rates.size());
    fuse_ = std::make_unique<nn::ConvBnRelu>(fuse_in, channels, 1, 1, 0, 1, rng);
    add_child("fuse", fuse_.get());
  }

  Tensor forward(const Tensor& x) {
    Tensor h = entry_ ? entry_->forward(x) : x;
    std::vector<Tensor> outs;
    for (auto& layer : layers_) {
      h = layer->forward(h);
      outs.push_back(h);
    }
    Tensor merged;
    if (fuse_sum_) {
      merged = outs[0];
      for (size_t i = 1; i < outs.size(); ++i) merged = ops::add(merged, outs[i]);
    } else {
      merged = ops::concat_channels(outs);
    }
    return fuse_->forward(merged);
  }

  std::unique_ptr<nn::ConvBnRelu> entry_;
  std::vector<std::unique_ptr<DilatedUnit>> layers_;
  std::unique_ptr<nn::ConvBnRelu> fuse_;
  bool fuse_sum_;
};

class Bottleneck : public nn::Module {
 public:
  static constexpr int kExpansion = 4;
  Bottleneck(int in, int planes, int stride, Rng& rng)
      : conv1(in, planes, 1, 1, 0, 1, false, rng),
        bn1(planes),
        conv2(planes, planes, 3, stride, 1, 1, false, rng),
        bn2(planes),
        conv3(planes, planes * kExpansion, 1, 1, 0, 1, false, rng),
        bn3(planes * kExpansion) {
    add_child("conv1", &conv1);
    add_child("bn1", &bn1);
    add_child("conv2", &conv2);
    add_child("bn2", &bn2);
    add_child("conv3", &conv3);
    add_child("bn3", &bn3);
    if (stride != 1 || in != planes * kExpansion) {
      down_conv_ = std::make_unique<nn::Conv2d>(in, planes * kExpansion, 1,
                                                stride, 0, 1, false, rng);
      down_bn_ = std::make_unique<nn::BatchNorm2d>(planes * kExpansion);
      add_child("down_conv", down_conv_.get());
      add_child("down_bn", down_bn_.get());
    }
  }
  Tensor forward(const Tensor& x) {
    Tensor idt = down_conv_ ? down_bn_->forward(down_conv_->forward(x)) : x;
    Tensor h = ops::relu(bn1.forward(conv1.forward(x)));
    h = ops::relu(bn2.forward(conv2.forward(h)));
    h = bn3.forward(conv3.forward(h));
    return ops::relu(ops::add(h, idt));
  }

  nn::Conv2d conv1;
  nn::BatchNorm2d bn1;
  nn::Conv2d conv2;
  nn::BatchNorm2d bn2;
  nn::Conv2d conv3;
  nn::BatchNorm2d bn3;
  std::unique_ptr<nn::Conv2d> down_conv_;
  std::unique_ptr<nn::BatchNorm2d> down_bn_;
};

class BasicBlock : public nn::Module {
 public:
  static constexpr int kExpansion = 1;
  BasicBlock(int in, int planes, int stride, Rng& rng)
      : conv1(in, planes, 3, stride, 1, 1, false, rng),
        bn1(planes),
        conv2(planes, planes, 3, 1, 1, 1, false, rng),
        bn2(planes) {
    add_child("conv1", &conv1);
    add_child("bn1", &bn1);
    add_child("conv2", &conv2);
    add_child("bn2", &bn2);
    if (stride != 1 || in != planes) {
      down_conv_ = std::make_unique<nn::Conv2d>(in, planes, 1, stride, 0, 1,
                                                false, rng);
      down_bn_ = std::make_unique<nn::BatchNorm2d>(planes);
      add_child("down_conv", down_conv_.get());
      add_child("down_bn", down_bn_.get());
    }
  }
  Tensor forward(const Tensor& x) {
    Tensor idt = down_conv_ ? down_bn_->forward(down_conv_->forward(x)) : x;
    Tensor h = ops::relu(bn1.forward(conv1.forward(x)));
    h = bn2.forward(conv2.forward(h));
    return ops::relu(ops::add(h, idt));
  }

  nn::Conv2d conv1;
  nn::BatchNorm2d bn1;
  nn::Conv2d conv2;
  nn::BatchNorm2d bn2;
  std::unique_ptr<nn::Conv2d> down_conv_;
  std::unique_ptr<nn::BatchNorm2d> down_bn_;
};

class ResidualStage : public nn::Module {
 public:
  ResidualStage(int in, int planes, int blocks, int stride, bool bottleneck,
                Rng& rng) {
    int expansion = bottleneck ? Bottleneck::kExpansion : BasicBlock::kExpansion;
    out_channels_ = planes * expansion;
    for (int i = 0; i < blocks; ++i) {
      int s = i == 0 ? stride : 1;
      int c = i == 0 ? in : out_channels_;
      if (bottleneck)
        blocks_.push_back(std::make_unique<Bottleneck>(c, planes, s, rng));
      else
        blocks_.push_back(std::make_unique<BasicBlock>(c, planes, s, rng));
      add_child(std::to_string(i), blocks_.back().get());
    }
    bottleneck_ = bottleneck;
  }
  Tensor forward(const Tensor& x) {
    Tensor h = x;
    for (auto& b : blocks_) {
      if (bottleneck_)
        h = static_cast<Bottleneck*>(b.get())->forward(h);
      else
        h = static_cast<BasicBlock*>(b.get())->forward(h);
    }
    return h;
  }
  int out_channels() const { return out_channels_; }

 private:
  std::vector<std::unique_ptr<nn::Module>> blocks_;
  int out_channels_ = 0;
  bool bottleneck_ = false;
};

// 2x upsample, fuse the skip, then two 3x3 conv+BN+ReLU.
class DecoderBlock : public nn::Module {
 public:
  DecoderBlock(int in, int skip, int out, bool deconv, Rng& rng) {
    if (deconv) {
      up_ = std::make_unique<nn::ConvTranspose2d>(in, in, 2, rng);
      add_child("up", up_.get());
    }
    c1_ = std::make_unique<nn::ConvBnRelu>(in + skip, out, 3, 1, 1, 1, rng);
    c2_ = std::make_unique<nn::ConvBnRelu>(out, out, 3, 1, 1, 1, rng);
    add_child("conv1", c1_.get());
    add_child("conv2", c2_.get());
  }
  Tensor forward(const Tensor& below, const Tensor& skip) {
    Tensor u = up_ ? up_->forward(below) : ops::upsample_bilinear_2x(below);
    if (skip.defined()) {
      check(u.dim(2) == skip.dim(2) && u.dim(3) == skip.dim(3), ErrorKind::Shape,
            "decoder skip spatial dimensions do not match the upsampled path");
      u = ops::concat_channels({u, skip});
    }
    return c2_->forward(c1_->forward(u));
  }

 private:
  std::unique_ptr<nn::ConvTranspose2d> up_;
  std::unique_ptr<nn::ConvBnRelu> c1_, c2_;
};

// ---------------------------------------------------------------------------
// The stacked network.

struct ModelOutput {
  Tensor main;
  Tensor inter;  // undefined when the model is not stacked
};

class SdrNet : public nn::Module {
 public:
  explicit SdrNet(const ModelConfig& cfg, uint64_t seed = 0) : cfg_(cfg) {
    validate_model_config(cfg);
    if (cfg.use_drb && !check_gridding(cfg.drb_schedule).passes)
      warnings_.push_back(
          "drb_schedule fails the gridding check; composed kernels leave "
          "uncovered offsets");
    Rng rng(seed, 1);
    const bool bneck = cfg.backbone == Backbone::Resnet50Style;
    const int e = bneck ? Bottleneck::kExpansion : BasicBlock::kExpansion;
    const std::vector<int> depths =
        bneck ? std::vector<int>{3, 4, 6, 3} : std::vector<int>{2, 2, 2, 2};
    const int w = cfg.base_width;
    const int floor_w = std::max(w / 2, 4);
    auto dec_widths = [&](int c, int count) {
      std::vector<int> out;
      for (int i = 0; i < count; ++i)
        out.push_back(std::max(c >> (2 + i), floor_w));
      return out;
    };

    stem1_ = std::make_unique<nn::ConvBnRelu>(cfg.in_channels, w, 7, 2, 3, 1, rng);
    stage("enc1.block1", stem1_.get());
    enc1_[0] = std::make_unique<ResidualStage>(w, w, depths[0], 1, bneck, rng);
    stage("enc1.block2", enc1_[0].get());
    enc1_[1] = std::make_unique<ResidualStage>(e * w, 2 * w, depths[1], 2, bneck, rng);
    stage("enc1.block3", enc1_[1].get());
    enc1_[2] = std::make_unique<ResidualStage>(2 * e * w, 4 * w, depths[2], 2, bneck, rng);
    stage("enc1.block4", enc1_[2].get());
    enc1_[3] = std::make_unique<ResidualStage>(4 * e * w, 8 * w, depths[3], 2, bneck, rng);
    stage("enc1.block5", enc1_[3].get());
    const int c5 = 8 * e * w;

    if (cfg.use_attention) {
      att1_[0] = std::make_unique<SpatialAttention>(cfg.attention_kernel, rng);
      stage("att1.3", att1_[0].get());
      att1_[1] = std::make_unique<SpatialAttention>(cfg.attention_kernel, rng);
      stage("att1.4", att1_[1].get());
      att1_[2] = std::make_unique<SpatialAttention>(cfg.attention_kernel, rng);
      stage("att1.5", att1_[2].get());
    }
    if (cfg.use_drb) {
      drb1_ = std::make_unique<Drb>(c5, cfg.drb_schedule, cfg.drb_fuse_sum, rng);
      stage("drb1", drb1_.get());
    }

    std::vector<int> d1 = dec_widths(c5, 5);
    const int skips1[5] = {4 * e * w, 2 * e * w, e * w, w, 0};
    int below = c5;
    for (int i = 0; i < 5; ++i) {
      dec1_[i] = std::make_unique<DecoderBlock>(below, skips1[i], d1[i],
                                                cfg.deconv_upsample, rng);
      stage("dec1.block" + std::to_string(i + 1), dec1_[i].get());
      below = d1[i];
    }

    head1_ = std::make_unique<nn::Conv2d>(d1[4], cfg.num_classes, 1, 1, 0, 1,
                                          true, rng);
    stage(cfg.stacked ? "head_inter" : "head_main", head1_.get());

    if (cfg.stacked) {
      stem2_ = std::make_unique<nn::ConvBnRelu>(d1[4], w, 7, 2, 3, 1, rng);
      stage("enc2.block1", stem2_.get());
      enc2_[0] = std::make_unique<ResidualStage>(w, w, depths[0], 1, bneck, rng);
      stage("enc2.block2", enc2_[0].get());
      enc2_[1] = std::make_unique<ResidualStage>(e * w, 2 * w, depths[1], 2, bneck, rng);
      stage("enc2.block3", enc2_[1].get());
      enc2_[2] = std::make_unique<ResidualStage>(2 * e * w, 4 * w, depths[2], 2, bneck, rng);
      stage("enc2.block4", enc2_[2].get());
      const int c25 = 4 * e * w;

      if (cfg.use_attention) {
        att2_[0] = std::make_unique<SpatialAttention>(cfg.attention_kernel, rng);
        stage("att2.2", att2_[0].get());
        att2_[1] = std::make_unique<SpatialAttention>(cfg.attention_kernel, rng);
        stage("att2.3", att2_[1].get());
        att2_[2] = std::make_unique<SpatialAttention>(cfg.attention_kernel, rng);
        stage("att2.4", att2_[2].get());
      }
      if (cfg.use_drb) {
        drb2_ = std::make_unique<Drb>(c25, cfg.drb_schedule, cfg.drb_fuse_sum, rng);
        stage("drb2", drb2_.get());
      }

      std::vector<int> d2 = dec_widths(c25, 4);
      const int skips2[4] = {2 * e * w, e * w, w, 0};
      below = c25;
      for (int i = 0; i < 4; ++i) {
        dec2_[i] = std::make_unique<DecoderBlock>(below, skips2[i], d2[i],
                                                  cfg.deconv_upsample, rng);
        stage("dec2.block" + std::to_string(i + 1), dec2_[i].get());
        below = d2[i];
      }
      head2_ = std::make_unique<nn::Conv2d>(d2[3], cfg.num_classes, 1, 1, 0, 1,
                                            true, rng);
      stage("head_main", head2_.get());
    }
  }

  const ModelConfig& config() const { return cfg_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  const std::vector<std::pair<std::string, nn::Module*>>& stages() const {
    return stages_;
  }

  ModelOutput forward(const Tensor& x) {
    check(x.defined() && x.ndim() == 4, ErrorKind::Shape,
          "forward expects an [N,C,H,W] batch");
    check(static_cast<int>(x.dim(1)) == cfg_.in_channels, ErrorKind::Shape,
          strf("forward: expected %d input channels, got %d", cfg_.in_channels,
               static_cast<int>(x.dim(1))));
    check(x.dim(2) % 32 == 0 && x.dim(3) % 32 == 0 && x.dim(2) >= 32 &&
              x.dim(3) >= 32,
          ErrorKind::Shape,
          strf("forward: spatial dims %lldx%lld must be positive multiples of 32",
               static_cast<long long>(x.dim(2)),
               static_cast<long long>(x.dim(3))));
    check(x.all_finite(), ErrorKind::Data,
          "forward: input contains NaN or Inf values");

    Tensor x1, x2, x3, x4, x5;
    {
      ProfileStage ps("enc1.block1");
      x1 = stem1_->forward(x);
    }
    {
      ProfileStage ps("enc1.block2");
      x2 = enc1_[0]->forward(ops::max_pool2d(x1, 3, 2, 1));
    }
    {
      ProfileStage ps("enc1.block3");
      x3 = enc1_[1]->forward(x2);
    }
    {
      ProfileStage ps("enc1.block4");
      x4 = enc1_[2]->forward(x3);
    }
    {
      ProfileStage ps("enc1.block5");
      x5 = enc1_[3]->forward(x4);
    }

    Tensor a3 = x3, a4 = x4, a5 = x5;
    if (cfg_.use_attention) {
      {
        ProfileStage ps("att1.3");
        a3 = att1_[0]->forward(x3);
      }
      {
        ProfileStage ps("att1.4");
        a4 = att1_[1]->forward(x4);
      }
      {
        ProfileStage ps("att1.5");
        a5 = att1_[2]->forward(x5);
      }
    }
    Tensor bottom = a5;
    if (cfg_.use_drb) {
      ProfileStage ps("drb1");
      bottom = drb1_->forward(a5);
    }

    Tensor d = bottom;
    const Tensor* skips[5] = {&a4, &a3, &x2, &x1, nullptr};
    for (int i = 0; i < 5; ++i) {
      ProfileStage ps("dec1.block" + std::to_string(i + 1));
      d = dec1_[i]->forward(d, skips[i] ? *skips[i] : Tensor());
    }

    Tensor logits1;
    {
      ProfileStage ps(cfg_.stacked ? "head_inter" : "head_main");
      logits1 = head1_->forward(d);
    }
    if (!cfg_.stacked) return {logits1, Tensor()};

    Tensor t1, t2, t3, t4;
    {
      ProfileStage ps("enc2.block1");
      t1 = stem2_->forward(d);
    }
    {
      ProfileStage ps("enc2.block2");
      t2 = enc2_[0]->forward(ops::max_pool2d(t1, 3, 2, 1));
    }
    {
      ProfileStage ps("enc2.block3");
      t3 = enc2_[1]->forward(t2);
    }
    {
      ProfileStage ps("enc2.block4");
      t4 = enc2_[2]->forward(t3);
    }

    Tensor g2 = t2, g3 = t3, g4 = t4;
    if (cfg_.use_attention) {
      {
        ProfileStage ps("att2.2");
        g2 = att2_[0]->forward(t2);
      }
      {
        ProfileStage ps("att2.3");
        g3 = att2_[1]->forward(t3);
      }
      {
        ProfileStage ps("att2.4");
        g4 = att2_[2]->forward(t4);
      }
    }
    Tensor bottom2 = g4;
    if (cfg_.use_drb) {
      ProfileStage ps("drb2");
      bottom2 = drb2_->forward(g4);
    }

    Tensor u = bottom2;
    const Tensor* skips2[4] = {&g3, &g2, &t1, nullptr};
    for (int i = 0; i < 4; ++i) {
      ProfileStage ps("dec2.block" + std::to_string(i + 1));
      u = dec2_[i]->forward(u, skips2[i] ? *skips2[i] : Tensor());
    }
    Tensor logits2;
    {
      ProfileStage ps("head_main");
      logits2 = head2_->forward(u);
    }
    return {logits2, logits1};
  }

 private:
  void stage(const std::string& name, nn::Module* m) {
    add_child(name, m);
    stages_.emplace_back(name, m);
  }

  ModelConfig cfg_;
  std::vector<std::string> warnings_;
  std::vector<std::pair<std::string, nn::Module*>> stages_;

  std::unique_ptr<nn::ConvBnRelu> stem1_, stem2_;
  std::unique_ptr<ResidualStage> enc1_[4];
  std::unique_ptr<ResidualStage> enc2_[3];
  std::unique_ptr<SpatialAttention> att1_[3];
  std::unique_ptr<SpatialAttention> att2_[3];
  std::unique_ptr<Drb> drb1_, drb2_;
  std::unique_ptr<DecoderBlock> dec1_[5];
  std::unique_ptr<DecoderBlock> dec2_[4];
  std::unique_ptr<nn::Conv2d> head1_, head2_;
};

inline std::unique_ptr<SdrNet> build_model(const ModelConfig& cfg,
                                           uint64_t seed = 0) {
  return std::make_unique<SdrNet>(cfg, seed);
}

// ---------------------------------------------------------------------------
// Summaries.

struct ModelSummary {
  struct Stage {
    std::string name;
    int64_t params = 0;
    int64_t flops = 0;
  };
  int64_t parameter_count = 0;
  int64_t parameter_bytes = 0;
  int64_t flops_estimate = 0;  // 2 * convolution multiply-accumulates
  std::vector<Stage> per_stage;
};

// Parameter totals come from registry traversal; FLOPs from a profiled
// single-image forward in evaluation mode at the configured input size.
inline ModelSummary summarize(SdrNet& model) {
  const ModelConfig& cfg = model.config();
  bool was_training = model.training();
  model.set_training(false);
  MacProfiler prof;
  mac_profiler() = &prof;
  {
    NoGradGuard ng;
    Tensor probe =
        Tensor::zeros({1, cfg.in_channels, cfg.input_size, cfg.input_size});
    model.forward(probe);
  }
  mac_profiler() = nullptr;
  model.set_training(was_training);

  ModelSummary s;
  for (const auto& [name, module] : model.stages()) {
    ModelSummary::Stage st;
    st.name = name;
    st.params = module->parameter_count();
    for (const auto& [pname, macs] : prof.stages)
      if (pname == name) st.flops = 2 * macs;
    s.per_stage.push_back(st);
    s.parameter_count += st.params;
    s.flops_estimate += st.flops;
  }
  s.parameter_bytes = s.parameter_count * 4;
  return s;
}

inline std::string summary_table(const ModelSummary& s) {
  std::string out;
  out += strf("%-14s %14s %18s\n", "stage", "params", "flops");
  for (const auto& st : s.per_stage)
    out += strf("%-14s %14lld %18lld\n", st.name.c_str(),
                static_cast<long long>(st.params),
                static_cast<long long>(st.flops));
  out += strf("%-14s %14lld %18lld\n", "total",
              static_cast<long long>(s.parameter_count),
              static_cast<long long>(s.flops_estimate));
  out += strf("parameter_bytes %lld\n", static_cast<long long>(s.parameter_bytes));
  return out;
}

inline std::string summary_machine(const ModelSummary& s) {
  std::string out;
  out += strf("parameter_count=%lld\n", static_cast<long long>(s.parameter_count));
  out += strf("parameter_bytes=%lld\n", static_cast<long long>(s.parameter_bytes));
  out += strf("flops_estimate=%lld\n", static_cast<long long>(s.flops_estimate));
  for (const auto& st : s.per_stage)
    out += strf("stage.%s.params=%lld\nstage.%s.flops=%lld\n", st.name.c_str(),
                static_cast<long long>(st.params), st.name.c_str(),
                static_cast<long long>(st.flops));
  return out;
}

}  // namespace sdrnet
