#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sdrnet/image.hpp"

namespace sdrnet {

struct ClassEntry {
  std::string name;
  std::array<uint8_t, 3> color{};
  int index = 0;
};

// Translation table between mask colors and class indices. Indices are
// contiguous from zero; the ignore value sits outside that range and has its
// own color (boundary/undefined pixels).
struct ClassMap {
  std::vector<ClassEntry> entries;
  int ignore_index = 255;
  std::array<uint8_t, 3> ignore_color{0, 0, 0};
  std::vector<int> excluded_from_oa;

  int num_classes() const { return static_cast<int>(entries.size()); }

  const ClassEntry& entry(int index) const {
    check(index >= 0 && index < num_classes(), ErrorKind::Data,
          strf("class index %d out of range [0, %d)", index, num_classes()));
    return entries[static_cast<size_t>(index)];
  }

  // -1 when the color is not in the table and is not the ignore color;
  // ignore_index when it is.
  int index_of_color(uint8_t r, uint8_t g, uint8_t b) const {
    for (const ClassEntry& e : entries)
      if (e.color[0] == r && e.color[1] == g && e.color[2] == b) return e.index;
    if (ignore_color[0] == r && ignore_color[1] == g && ignore_color[2] == b)
      return ignore_index;
    return -1;
  }

  bool is_excluded(int index) const {
    for (int e : excluded_from_oa)
      if (e == index) return true;
    return false;
  }
};

inline void validate_class_map(const ClassMap& m) {
  check(!m.entries.empty(), ErrorKind::Config, "class map has no classes");
  for (size_t i = 0; i < m.entries.size(); ++i) {
    check(m.entries[i].index == static_cast<int>(i), ErrorKind::Config,
          strf("class indices must be contiguous from 0; entry %d has index %d",
               static_cast<int>(i), m.entries[i].index));
    for (size_t j = i + 1; j < m.entries.size(); ++j)
      check(m.entries[i].color != m.entries[j].color, ErrorKind::Config,
            strf("classes '%s' and '%s' share a color",
                 m.entries[i].name.c_str(), m.entries[j].name.c_str()));
    check(m.entries[i].color != m.ignore_color, ErrorKind::Config,
          strf("class '%s' uses the ignore color", m.entries[i].name.c_str()));
  }
  check(m.ignore_index < 0 || m.ignore_index >= m.num_classes(),
        ErrorKind::Config,
        strf("ignore_index %d collides with the class range", m.ignore_index));
  for (int e : m.excluded_from_oa)
    check(e >= 0 && e < m.num_classes(), ErrorKind::Config,
          strf("excluded class index %d out of range", e));
}

// The ISPRS 2D labeling palette. Clutter is scored per class but excluded
// from overall accuracy; black marks undefined/eroded-boundary pixels.
inline ClassMap isprs_class_map() {
  ClassMap m;
  m.entries = {
      {"Impervious", {255, 255, 255}, 0},
      {"Building", {0, 0, 255}, 1},
      {"LowVeg", {0, 255, 255}, 2},
      {"Tree", {0, 255, 0}, 3},
      {"Car", {255, 255, 0}, 4},
      {"Clutter", {255, 0, 0}, 5},
  };
  m.ignore_index = 255;
  m.ignore_color = {0, 0, 0};
  m.excluded_from_oa = {5};
  return m;
}

inline IndexMask encode_mask(const ImageU8& rgb, const ClassMap& map) {
  check(rgb.channels == 3, ErrorKind::Data,
        strf("encode_mask expects an RGB mask, got %d channels", rgb.channels));
  IndexMask out = make_mask(rgb.height, rgb.width);
  for (int64_t y = 0; y < rgb.height; ++y)
    for (int64_t x = 0; x < rgb.width; ++x) {
      uint8_t r = rgb.at(y, x, 0), g = rgb.at(y, x, 1), b = rgb.at(y, x, 2);
      int idx = map.index_of_color(r, g, b);
      check(idx != -1, ErrorKind::Data,
            strf("unknown mask color (%d,%d,%d) at pixel (%lld,%lld)", r, g, b,
                 static_cast<long long>(y), static_cast<long long>(x)));
      out.at(y, x) = idx;
    }
  return out;
}

inline ImageU8 decode_mask(const IndexMask& mask, const ClassMap& map) {
  ImageU8 out = make_image(mask.height, mask.width, 3);
  for (int64_t y = 0; y < mask.height; ++y)
    for (int64_t x = 0; x < mask.width; ++x) {
      int32_t v = mask.at(y, x);
      const std::array<uint8_t, 3>* color = nullptr;
      if (v == map.ignore_index) {
        color = &map.ignore_color;
      } else {
        check(v >= 0 && v < map.num_classes(), ErrorKind::Data,
              strf("mask index %d at pixel (%lld,%lld) out of range", v,
                   static_cast<long long>(y), static_cast<long long>(x)));
        color = &map.entries[static_cast<size_t>(v)].color;
      }
      out.at(y, x, 0) = (*color)[0];
      out.at(y, x, 1) = (*color)[1];
      out.at(y, x, 2) = (*color)[2];
    }
  return out;
}

}  // namespace sdrnet
