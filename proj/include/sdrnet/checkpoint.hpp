#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "sdrnet/model.hpp"
#include "sdrnet/runconfig.hpp"

namespace sdrnet {

// Checkpoint container: magic, format version, the model config as the same
// structured text the run config uses, then named float arrays covering
// every parameter and buffer. Loads are strict by default: missing, extra,
// or reshaped arrays are errors, never silent partial restores.
constexpr char kCheckpointMagic[4] = {'S', 'D', 'R', 'N'};
constexpr uint32_t kCheckpointVersion = 1;

struct CheckpointArray {
  std::string name;
  Shape shape;
  std::vector<float> data;
};

struct Checkpoint {
  ModelConfig config;
  std::vector<CheckpointArray> arrays;

  const CheckpointArray* find(const std::string& name) const {
    for (const CheckpointArray& a : arrays)
      if (a.name == name) return &a;
    return nullptr;
  }
};

namespace detail {

inline void write_raw(std::FILE* f, const void* p, size_t n,
                      const std::string& path) {
  check(std::fwrite(p, 1, n, f) == n, ErrorKind::Data,
        strf("short write to %s", path.c_str()));
}

inline void read_raw(std::FILE* f, void* p, size_t n, const std::string& path) {
  check(std::fread(p, 1, n, f) == n, ErrorKind::Data,
        strf("truncated checkpoint: %s", path.c_str()));
}

template <class T>
void write_pod(std::FILE* f, T v, const std::string& path) {
  write_raw(f, &v, sizeof(T), path);
}

template <class T>
T read_pod(std::FILE* f, const std::string& path) {
  T v;
  read_raw(f, &v, sizeof(T), path);
  return v;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const SdrNet& model) {
  std::string tmp = path + ".tmp";
  {
    std::FILE* f = std::fopen(tmp.c_str(), "wb");
    check(f != nullptr, ErrorKind::Data,
          strf("cannot open %s for writing", tmp.c_str()));
    FileCloser closer{f};

    detail::write_raw(f, kCheckpointMagic, 4, tmp);
    detail::write_pod<uint32_t>(f, kCheckpointVersion, tmp);
    std::string cfg = model_config_text(model.config());
    detail::write_pod<uint64_t>(f, cfg.size(), tmp);
    detail::write_raw(f, cfg.data(), cfg.size(), tmp);

    auto params = model.named_parameters();
    auto buffers = model.named_buffers();
    detail::write_pod<uint32_t>(
        f, static_cast<uint32_t>(params.size() + buffers.size()), tmp);
    auto write_array = [&](const std::string& name, const Tensor& t) {
      detail::write_pod<uint32_t>(f, static_cast<uint32_t>(name.size()), tmp);
      detail::write_raw(f, name.data(), name.size(), tmp);
      detail::write_pod<uint32_t>(f, static_cast<uint32_t>(t.ndim()), tmp);
      for (int64_t d : t.shape()) detail::write_pod<int64_t>(f, d, tmp);
      detail::write_raw(f, t.data(), sizeof(float) * static_cast<size_t>(t.numel()),
                        tmp);
    };
    for (const auto& p : params) write_array(p.name, p.tensor);
    for (const auto& b : buffers) write_array(b.name, b.tensor);
  }
  check(std::rename(tmp.c_str(), path.c_str()) == 0, ErrorKind::Data,
        strf("cannot move %s into place", tmp.c_str()));
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  check(f != nullptr, ErrorKind::Data,
        strf("cannot open checkpoint: %s", path.c_str()));
  FileCloser closer{f};

  char magic[4];
  detail::read_raw(f, magic, 4, path);
  check(std::memcmp(magic, kCheckpointMagic, 4) == 0, ErrorKind::Data,
        strf("%s is not a checkpoint file", path.c_str()));
  uint32_t version = detail::read_pod<uint32_t>(f, path);
  check(version == kCheckpointVersion, ErrorKind::Data,
        strf("unsupported checkpoint version %u", version));

  uint64_t cfg_len = detail::read_pod<uint64_t>(f, path);
  check(cfg_len < (1u << 20), ErrorKind::Data, "unreasonable config size");
  std::string cfg_text(static_cast<size_t>(cfg_len), '\0');
  detail::read_raw(f, cfg_text.data(), cfg_text.size(), path);

  Checkpoint ck;
  RunConfig rc = parse_run_config(cfg_text);
  validate_run_config(rc);
  ck.config = rc.model;

  uint32_t count = detail::read_pod<uint32_t>(f, path);
  ck.arrays.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    CheckpointArray a;
    uint32_t name_len = detail::read_pod<uint32_t>(f, path);
    check(name_len < 4096, ErrorKind::Data, "unreasonable array name length");
    a.name.assign(static_cast<size_t>(name_len), '\0');
    detail::read_raw(f, a.name.data(), a.name.size(), path);
    uint32_t ndim = detail::read_pod<uint32_t>(f, path);
    check(ndim >= 1 && ndim <= 8, ErrorKind::Data,
          strf("array '%s' has %u dims", a.name.c_str(), ndim));
    int64_t numel = 1;
    for (uint32_t d = 0; d < ndim; ++d) {
      int64_t dim = detail::read_pod<int64_t>(f, path);
      check(dim >= 1 && dim <= (1 << 28), ErrorKind::Data,
            strf("array '%s' has dim %lld", a.name.c_str(),
                 static_cast<long long>(dim)));
      a.shape.push_back(dim);
      numel *= dim;
    }
    check(numel <= (1ll << 31), ErrorKind::Data, "array too large");
    a.data.resize(static_cast<size_t>(numel));
    detail::read_raw(f, a.data.data(), sizeof(float) * a.data.size(), path);
    ck.arrays.push_back(std::move(a));
  }
  return ck;
}

// Copies every model parameter and buffer from the checkpoint, requiring an
// exact one-to-one match of names and shapes.
inline void apply_checkpoint(SdrNet& model, const Checkpoint& ck) {
  auto params = model.named_parameters();
  auto buffers = model.named_buffers();
  size_t expected = params.size() + buffers.size();
  check(ck.arrays.size() == expected, ErrorKind::Data,
        strf("checkpoint has %d arrays, model expects %d",
             static_cast<int>(ck.arrays.size()), static_cast<int>(expected)));
  auto apply_one = [&](const std::string& name, Tensor t) {
    const CheckpointArray* a = ck.find(name);
    check(a != nullptr, ErrorKind::Data,
          strf("checkpoint is missing array '%s'", name.c_str()));
    check(a->shape == t.shape(), ErrorKind::Data,
          strf("array '%s' is %s but the model wants %s", name.c_str(),
               shape_str(a->shape).c_str(), shape_str(t.shape()).c_str()));
    std::memcpy(t.data(), a->data.data(), sizeof(float) * a->data.size());
  };
  for (const auto& p : params) apply_one(p.name, p.tensor);
  for (const auto& b : buffers) apply_one(b.name, b.tensor);
}

inline std::unique_ptr<SdrNet> make_model(const Checkpoint& ck,
                                          uint64_t seed = 0) {
  auto model = build_model(ck.config, seed);
  apply_checkpoint(*model, ck);
  return model;
}

// Partial restore for warm-starting encoders: copies checkpoint arrays
// under the requested prefix into same-named, same-shaped model tensors.
inline int apply_prefix(SdrNet& model, const Checkpoint& ck,
                        const std::string& prefix) {
  int applied = 0;
  auto try_apply = [&](const std::string& name, Tensor t) {
    if (name.rfind(prefix, 0) != 0) return;
    const CheckpointArray* a = ck.find(name);
    check(a != nullptr, ErrorKind::Data,
          strf("pretrained source lacks array '%s'", name.c_str()));
    check(a->shape == t.shape(), ErrorKind::Data,
          strf("pretrained array '%s' is %s but the model wants %s",
               name.c_str(), shape_str(a->shape).c_str(),
               shape_str(t.shape()).c_str()));
    std::memcpy(t.data(), a->data.data(), sizeof(float) * a->data.size());
    ++applied;
  };
  for (const auto& p : model.named_parameters()) try_apply(p.name, p.tensor);
  for (const auto& b : model.named_buffers()) try_apply(b.name, b.tensor);
  check(applied > 0, ErrorKind::Data,
        strf("no model arrays under prefix '%s'", prefix.c_str()));
  return applied;
}

// Honors the pretrained_encoder* flags by warm-starting from another
// checkpoint at cfg.pretrained_path.
inline void load_pretrained_encoders(SdrNet& model) {
  const ModelConfig& cfg = model.config();
  if (!cfg.pretrained_encoder1 && !cfg.pretrained_encoder2) return;
  check(!cfg.pretrained_path.empty(), ErrorKind::Config,
        "pretrained encoders requested but pretrained_path is empty");
  check(!cfg.pretrained_encoder2 || cfg.stacked, ErrorKind::Config,
        "pretrained_encoder2 requires a stacked model");
  Checkpoint src = load_checkpoint(cfg.pretrained_path);
  if (cfg.pretrained_encoder1) apply_prefix(model, src, "enc1.");
  if (cfg.pretrained_encoder2) {
    check(cfg.stacked, ErrorKind::Config,
          "pretrained_encoder2 requires a stacked model");
    apply_prefix(model, src, "enc2.");
  }
}

}  // namespace sdrnet
