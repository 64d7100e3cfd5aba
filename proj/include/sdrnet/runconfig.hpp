#pragma once

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sdrnet/loss.hpp"
#include "sdrnet/model.hpp"

namespace sdrnet {

struct TrainConfig {
  int batch_size = 5;
  int64_t max_iter = 1000;
  double base_lr = 1e-3;
  double weight_decay = 2e-5;
  double poly_power = 0.9;
  bool amsgrad = true;
  uint64_t seed = 0;
  int64_t checkpoint_every = 0;  // 0: only the final checkpoint
};

inline void validate_train_config(const TrainConfig& c) {
  check(c.batch_size >= 1, ErrorKind::Config, "batch_size must be >= 1");
  check(c.max_iter >= 1, ErrorKind::Config, "max_iter must be >= 1");
  check(c.base_lr > 0.0, ErrorKind::Config, "base_lr must be positive");
  check(c.weight_decay >= 0.0, ErrorKind::Config,
        "weight_decay must be non-negative");
  check(c.poly_power >= 0.0, ErrorKind::Config,
        "poly_power must be non-negative");
  check(c.checkpoint_every >= 0, ErrorKind::Config,
        "checkpoint_every must be >= 0");
}

enum class ClassWeighting { Uniform, InverseFrequency };

struct DataConfig {
  std::string train_dir;
  std::string val_dir;
  std::string augment = "default";  // default | none | policy file path
};

// Everything one run needs, from one file. Unknown keys are rejected so a
// typo cannot silently fall back to a default.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  LossConfig loss;  // class_weights empty until validate_run_config
  ClassWeighting weighting = ClassWeighting::Uniform;
  DataConfig data;
};

namespace detail {

inline bool parse_bool_value(const std::string& v, bool& out) {
  if (v == "true") {
    out = true;
    return true;
  }
  if (v == "false") {
    out = false;
    return true;
  }
  return false;
}

inline bool parse_i64_value(const std::string& v, int64_t& out) {
  if (v.empty()) return false;
  char* end = nullptr;
  long long r = std::strtoll(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size()) return false;
  out = r;
  return true;
}

inline bool parse_double_value(const std::string& v, double& out) {
  if (v.empty()) return false;
  char* end = nullptr;
  double r = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size()) return false;
  out = r;
  return true;
}

inline bool parse_list_value(const std::string& v, std::vector<double>& out) {
  out.clear();
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    double d;
    if (!parse_double_value(item, d)) return false;
    out.push_back(d);
  }
  return !out.empty();
}

}  // namespace detail

inline RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  cfg.loss.class_weights.clear();

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  std::string section;
  std::vector<std::string> seen_keys;

  auto bad = [&](const std::string& msg) -> void {
    fail(ErrorKind::Parse, strf("line %d: %s", line_no, msg.c_str()));
  };

  while (std::getline(in, line)) {
    ++line_no;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    size_t e = line.find_last_not_of(" \t\r");
    std::string tok = line.substr(b, e - b + 1);

    if (tok.front() == '[') {
      if (tok == "[model]" || tok == "[train]" || tok == "[loss]" ||
          tok == "[data]")
        section = tok.substr(1, tok.size() - 2);
      else
        bad(strf("unknown section '%s'", tok.c_str()));
      continue;
    }

    size_t eq = tok.find('=');
    if (eq == std::string::npos) bad("expected 'key = value'");
    auto trim = [](std::string s) {
      size_t a = s.find_first_not_of(" \t");
      if (a == std::string::npos) return std::string();
      size_t z = s.find_last_not_of(" \t");
      return s.substr(a, z - a + 1);
    };
    std::string key = trim(tok.substr(0, eq));
    std::string value = trim(tok.substr(eq + 1));
    if (key.empty()) bad("empty key");
    if (section.empty()) bad(strf("key '%s' outside any section", key.c_str()));
    std::string qual = section + "." + key;
    for (const std::string& s : seen_keys)
      if (s == qual) bad(strf("duplicate key '%s'", qual.c_str()));
    seen_keys.push_back(qual);

    bool ok = true;
    int64_t i = 0;
    double d = 0.0;
    std::vector<double> list;
    if (section == "model") {
      ModelConfig& m = cfg.model;
      if (key == "num_classes")
        ok = detail::parse_i64_value(value, i), m.num_classes = static_cast<int>(i);
      else if (key == "in_channels")
        ok = detail::parse_i64_value(value, i), m.in_channels = static_cast<int>(i);
      else if (key == "input_size")
        ok = detail::parse_i64_value(value, i), m.input_size = static_cast<int>(i);
      else if (key == "backbone") {
        if (value == "resnet50")
          m.backbone = Backbone::Resnet50Style;
        else if (value == "resnet18")
          m.backbone = Backbone::Resnet18Style;
        else
          ok = false;
      } else if (key == "pretrained_encoder1")
        ok = detail::parse_bool_value(value, m.pretrained_encoder1);
      else if (key == "pretrained_encoder2")
        ok = detail::parse_bool_value(value, m.pretrained_encoder2);
      else if (key == "pretrained_path")
        m.pretrained_path = value;
      else if (key == "use_attention")
        ok = detail::parse_bool_value(value, m.use_attention);
      else if (key == "use_drb")
        ok = detail::parse_bool_value(value, m.use_drb);
      else if (key == "stacked")
        ok = detail::parse_bool_value(value, m.stacked);
      else if (key == "drb_rates") {
        ok = detail::parse_list_value(value, list);
        if (ok) {
          m.drb_schedule.rates.clear();
          for (double r : list)
            m.drb_schedule.rates.push_back(static_cast<int>(r));
        }
      } else if (key == "drb_kernel")
        ok = detail::parse_i64_value(value, i),
        m.drb_schedule.kernel_size = static_cast<int>(i);
      else if (key == "drb_fuse") {
        if (value == "concat")
          m.drb_fuse_sum = false;
        else if (value == "sum")
          m.drb_fuse_sum = true;
        else
          ok = false;
      } else if (key == "drb_allow_gridding")
        ok = detail::parse_bool_value(value, m.drb_allow_gridding);
      else if (key == "deconv_upsample")
        ok = detail::parse_bool_value(value, m.deconv_upsample);
      else if (key == "attention_kernel")
        ok = detail::parse_i64_value(value, i),
        m.attention_kernel = static_cast<int>(i);
      else if (key == "base_width")
        ok = detail::parse_i64_value(value, i), m.base_width = static_cast<int>(i);
      else
        bad(strf("unknown key '%s' in [model]", key.c_str()));
    } else if (section == "train") {
      TrainConfig& t = cfg.train;
      if (key == "batch_size")
        ok = detail::parse_i64_value(value, i), t.batch_size = static_cast<int>(i);
      else if (key == "max_iter")
        ok = detail::parse_i64_value(value, i), t.max_iter = i;
      else if (key == "base_lr")
        ok = detail::parse_double_value(value, d), t.base_lr = d;
      else if (key == "weight_decay")
        ok = detail::parse_double_value(value, d), t.weight_decay = d;
      else if (key == "poly_power")
        ok = detail::parse_double_value(value, d), t.poly_power = d;
      else if (key == "amsgrad")
        ok = detail::parse_bool_value(value, t.amsgrad);
      else if (key == "seed")
        ok = detail::parse_i64_value(value, i), t.seed = static_cast<uint64_t>(i);
      else if (key == "checkpoint_every")
        ok = detail::parse_i64_value(value, i), t.checkpoint_every = i;
      else
        bad(strf("unknown key '%s' in [train]", key.c_str()));
    } else if (section == "loss") {
      LossConfig& l = cfg.loss;
      if (key == "class_weights") {
        if (value == "uniform") {
          l.class_weights.clear();
        } else {
          ok = detail::parse_list_value(value, list);
          if (ok) {
            l.class_weights.clear();
            for (double w : list) l.class_weights.push_back(static_cast<float>(w));
          }
        }
      } else if (key == "weighting") {
        if (value == "uniform")
          cfg.weighting = ClassWeighting::Uniform;
        else if (value == "inverse_frequency")
          cfg.weighting = ClassWeighting::InverseFrequency;
        else
          ok = false;
      } else if (key == "alpha")
        ok = detail::parse_double_value(value, d), l.alpha = static_cast<float>(d);
      else if (key == "beta")
        ok = detail::parse_double_value(value, d), l.beta = static_cast<float>(d);
      else if (key == "ignore_index")
        ok = detail::parse_i64_value(value, i), l.ignore_index = static_cast<int>(i);
      else
        bad(strf("unknown key '%s' in [loss]", key.c_str()));
    } else {  // data
      DataConfig& dc = cfg.data;
      if (key == "train_dir")
        dc.train_dir = value;
      else if (key == "val_dir")
        dc.val_dir = value;
      else if (key == "augment")
        dc.augment = value;
      else
        bad(strf("unknown key '%s' in [data]", key.c_str()));
    }
    if (!ok) bad(strf("bad value '%s' for key '%s'", value.c_str(), key.c_str()));
  }
  return cfg;
}

// Cross-field validation; fills the class-weight vector when the file left
// it to the weighting policy.
inline void validate_run_config(RunConfig& cfg) {
  validate_model_config(cfg.model);
  validate_train_config(cfg.train);
  if (cfg.loss.class_weights.empty())
    cfg.loss.class_weights.assign(static_cast<size_t>(cfg.model.num_classes),
                                  1.f);
  validate_loss_config(cfg.loss, cfg.model.num_classes);
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), ErrorKind::Data, strf("cannot open config: %s", path.c_str()));
  std::ostringstream ss;
  ss << in.rdbuf();
  RunConfig cfg = parse_run_config(ss.str());
  validate_run_config(cfg);
  return cfg;
}

inline std::string model_config_text(const ModelConfig& m) {
  std::string rates;
  for (size_t i = 0; i < m.drb_schedule.rates.size(); ++i)
    rates += strf("%s%d", i ? "," : "", m.drb_schedule.rates[i]);
  std::string out = "[model]\n";
  out += strf("num_classes = %d\n", m.num_classes);
  out += strf("in_channels = %d\n", m.in_channels);
  out += strf("input_size = %d\n", m.input_size);
  out += strf("backbone = %s\n",
              m.backbone == Backbone::Resnet50Style ? "resnet50" : "resnet18");
  out += strf("use_attention = %s\n", m.use_attention ? "true" : "false");
  out += strf("use_drb = %s\n", m.use_drb ? "true" : "false");
  out += strf("stacked = %s\n", m.stacked ? "true" : "false");
  out += strf("drb_rates = %s\n", rates.c_str());
  out += strf("drb_kernel = %d\n", m.drb_schedule.kernel_size);
  out += strf("drb_fuse = %s\n", m.drb_fuse_sum ? "sum" : "concat");
  out += strf("drb_allow_gridding = %s\n",
              m.drb_allow_gridding ? "true" : "false");
  out += strf("deconv_upsample = %s\n", m.deconv_upsample ? "true" : "false");
  out += strf("attention_kernel = %d\n", m.attention_kernel);
  out += strf("base_width = %d\n", m.base_width);
  return out;
}

inline std::string run_config_text(const RunConfig& cfg) {
  std::string out = model_config_text(cfg.model);
  out += "\n[train]\n";
  out += strf("batch_size = %d\n", cfg.train.batch_size);
  out += strf("max_iter = %lld\n", static_cast<long long>(cfg.train.max_iter));
  out += strf("base_lr = %.9g\n", cfg.train.base_lr);
  out += strf("weight_decay = %.9g\n", cfg.train.weight_decay);
  out += strf("poly_power = %.9g\n", cfg.train.poly_power);
  out += strf("amsgrad = %s\n", cfg.train.amsgrad ? "true" : "false");
  out += strf("seed = %llu\n", static_cast<unsigned long long>(cfg.train.seed));
  out += strf("checkpoint_every = %lld\n",
              static_cast<long long>(cfg.train.checkpoint_every));
  out += "\n[loss]\n";
  std::string weights;
  for (size_t i = 0; i < cfg.loss.class_weights.size(); ++i)
    weights += strf("%s%.9g", i ? "," : "",
                    static_cast<double>(cfg.loss.class_weights[i]));
  out += strf("class_weights = %s\n",
              weights.empty() ? "uniform" : weights.c_str());
  out += strf("weighting = %s\n", cfg.weighting == ClassWeighting::Uniform
                                      ? "uniform"
                                      : "inverse_frequency");
  out += strf("alpha = %.9g\n", static_cast<double>(cfg.loss.alpha));
  out += strf("beta = %.9g\n", static_cast<double>(cfg.loss.beta));
  out += strf("ignore_index = %d\n", cfg.loss.ignore_index);
  out += "\n[data]\n";
  out += strf("train_dir = %s\n", cfg.data.train_dir.c_str());
  out += strf("val_dir = %s\n", cfg.data.val_dir.c_str());
  out += strf("augment = %s\n", cfg.data.augment.c_str());
  return out;
}

}  // namespace sdrnet
