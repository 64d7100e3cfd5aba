#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "sdrnet/class_map.hpp"
#include "sdrnet/image.hpp"
#include "sdrnet/rng.hpp"

namespace sdrnet {

// Deterministic, visually distinct color per class: a small fixed table
// first, then golden-ratio hues. Used for synthetic masks and for
// colorizing predictions when no standard palette applies.
inline std::array<uint8_t, 3> synthetic_class_color(int index) {
  static constexpr std::array<uint8_t, 3> kBase[] = {
      {200, 200, 200}, {30, 60, 220},  {60, 200, 220}, {40, 180, 60},
      {230, 220, 40},  {220, 50, 50},  {150, 60, 200}, {240, 140, 30},
      {90, 120, 90},   {250, 160, 200}, {20, 20, 120},  {130, 220, 130},
  };
  constexpr int n = static_cast<int>(sizeof(kBase) / sizeof(kBase[0]));
  if (index < n) return kBase[index];
  double h = std::fmod(0.61803398875 * index, 1.0) * 6.0;
  double f = h - std::floor(h);
  auto u8 = [](double v) { return static_cast<uint8_t>(v * 255.0 + 0.5); };
  double p = 0.25, q = 0.95 * (1.0 - 0.7 * f), t = 0.95 * (0.3 + 0.7 * f);
  switch (static_cast<int>(h)) {
    case 0: return {u8(0.95), u8(t), u8(p)};
    case 1: return {u8(q), u8(0.95), u8(p)};
    case 2: return {u8(p), u8(0.95), u8(t)};
    case 3: return {u8(p), u8(q), u8(0.95)};
    case 4: return {u8(t), u8(p), u8(0.95)};
    default: return {u8(0.95), u8(p), u8(q)};
  }
}

inline ClassMap make_synthetic_class_map(int num_classes) {
  check(num_classes >= 2, ErrorKind::InvalidArgument,
        "synthetic class map needs at least 2 classes");
  ClassMap m;
  for (int i = 0; i < num_classes; ++i) {
    std::array<uint8_t, 3> c = synthetic_class_color(i);
    // Nudge until distinct from earlier entries and from the ignore color.
    auto taken = [&](const std::array<uint8_t, 3>& col) {
      if (col == m.ignore_color) return true;
      for (const ClassEntry& e : m.entries)
        if (e.color == col) return true;
      return false;
    };
    while (taken(c)) c[2] = static_cast<uint8_t>(c[2] + 1);
    m.entries.push_back({strf("class%d", i), c, i});
  }
  m.ignore_index = 255;
  validate_class_map(m);
  return m;
}

namespace detail {

inline void paint(ImageU8& image, IndexMask& mask, int64_t y, int64_t x,
                  int cls, const std::array<uint8_t, 3>& color, Rng& rng) {
  mask.at(y, x) = cls;
  for (int c = 0; c < 3; ++c) {
    double v = static_cast<double>(color[static_cast<size_t>(c)]) +
               rng.uniform(-18.f, 18.f);
    image.at(y, x, c) = clamp_u8(v);
  }
}

}  // namespace detail

// Procedural scenes with exact ground truth: a class-0 background plus one
// rectangle, ellipse, or stripe per remaining class, colored by the class
// palette with per-pixel noise. Every class appears in every sample.
inline std::vector<Sample> make_synthetic_dataset(int count, int size,
                                                  int num_classes,
                                                  uint64_t seed) {
  check(count >= 1, ErrorKind::InvalidArgument, "count must be >= 1");
  check(size >= 16, ErrorKind::InvalidArgument, "size must be >= 16");
  check(num_classes >= 2, ErrorKind::InvalidArgument,
        "num_classes must be >= 2");

  std::vector<Sample> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    Rng rng(hash_combine(seed, static_cast<uint64_t>(i)), 13);
    Sample s;
    s.source_id = strf("synth-%04d", i);
    s.image = make_image(size, size, 3);
    s.mask = make_mask(size, size, 0);

    std::array<uint8_t, 3> bg = synthetic_class_color(0);
    for (int64_t y = 0; y < size; ++y)
      for (int64_t x = 0; x < size; ++x)
        detail::paint(s.image, s.mask, y, x, 0, bg, rng);

    for (int cls = 1; cls < num_classes; ++cls) {
      std::array<uint8_t, 3> col = synthetic_class_color(cls);
      int64_t kind = rng.uniform_int(0, 2);
      if (kind == 0) {  // rectangle
        int64_t h = rng.uniform_int(size / 8, size / 2);
        int64_t w = rng.uniform_int(size / 8, size / 2);
        int64_t y0 = rng.uniform_int(0, size - h);
        int64_t x0 = rng.uniform_int(0, size - w);
        for (int64_t y = y0; y < y0 + h; ++y)
          for (int64_t x = x0; x < x0 + w; ++x)
            detail::paint(s.image, s.mask, y, x, cls, col, rng);
      } else if (kind == 1) {  // ellipse
        int64_t ry = rng.uniform_int(size / 10, size / 3);
        int64_t rx = rng.uniform_int(size / 10, size / 3);
        int64_t cy = rng.uniform_int(ry, size - 1 - ry);
        int64_t cx = rng.uniform_int(rx, size - 1 - rx);
        for (int64_t y = cy - ry; y <= cy + ry; ++y)
          for (int64_t x = cx - rx; x <= cx + rx; ++x) {
            double ny = static_cast<double>(y - cy) / static_cast<double>(ry);
            double nx = static_cast<double>(x - cx) / static_cast<double>(rx);
            if (ny * ny + nx * nx <= 1.0)
              detail::paint(s.image, s.mask, y, x, cls, col, rng);
          }
      } else {  // stripe
        int64_t thick = rng.uniform_int(std::max<int64_t>(2, size / 12),
                                        std::max<int64_t>(3, size / 5));
        bool horizontal = rng.uniform_int(0, 1) == 0;
        int64_t pos = rng.uniform_int(0, size - thick);
        for (int64_t a = pos; a < pos + thick; ++a)
          for (int64_t b = 0; b < size; ++b) {
            int64_t y = horizontal ? a : b;
            int64_t x = horizontal ? b : a;
            detail::paint(s.image, s.mask, y, x, cls, col, rng);
          }
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace sdrnet
