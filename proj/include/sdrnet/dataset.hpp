#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "sdrnet/class_map.hpp"
#include "sdrnet/image.hpp"

namespace sdrnet {

// Samples live on disk as `<id>_r<row>_c<col>_img.png` plus a sibling
// `_mask.png` (grayscale class indices). Optionally also `_color.png`, a
// decoded visualization that loaders ignore.
inline std::string sample_stem(const Sample& s) {
  return strf("%s_r%06lld_c%06lld", s.source_id.c_str(),
              static_cast<long long>(s.row), static_cast<long long>(s.col));
}

inline void write_sample_dir(const std::string& dir,
                             const std::vector<Sample>& samples,
                             const ClassMap* color_map = nullptr) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  check(!ec, ErrorKind::Data, strf("cannot create directory %s", dir.c_str()));
  for (const Sample& s : samples) {
    std::string stem = (fs::path(dir) / sample_stem(s)).string();
    write_png(stem + "_img.png", s.image);
    write_mask_png(stem + "_mask.png", s.mask);
    if (color_map) write_png(stem + "_color.png", decode_mask(s.mask, *color_map));
  }
}

inline std::vector<Sample> load_sample_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  check(fs::is_directory(dir), ErrorKind::Data,
        strf("not a directory: %s", dir.c_str()));
  std::vector<std::string> stems;
  const std::string img_suffix = "_img.png";
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::string name = entry.path().filename().string();
    if (name.size() > img_suffix.size() &&
        name.compare(name.size() - img_suffix.size(), img_suffix.size(),
                     img_suffix) == 0)
      stems.push_back(name.substr(0, name.size() - img_suffix.size()));
  }
  check(!stems.empty(), ErrorKind::Data,
        strf("no *_img.png samples in %s", dir.c_str()));
  std::sort(stems.begin(), stems.end());

  std::vector<Sample> out;
  out.reserve(stems.size());
  for (const std::string& stem : stems) {
    std::string base = (fs::path(dir) / stem).string();
    Sample s;
    s.image = read_png(base + "_img.png");
    s.mask = read_mask_png(base + "_mask.png");
    check(s.mask.height == s.image.height && s.mask.width == s.image.width,
          ErrorKind::Data, strf("image/mask size mismatch for %s", stem.c_str()));
    // Recover provenance from `<id>_r######_c######`.
    s.source_id = stem;
    size_t rpos = stem.rfind("_r");
    size_t cpos = stem.rfind("_c");
    if (rpos != std::string::npos && cpos != std::string::npos && cpos > rpos) {
      char* end = nullptr;
      long long row = std::strtoll(stem.c_str() + rpos + 2, &end, 10);
      long long col = std::strtoll(stem.c_str() + cpos + 2, &end, 10);
      s.source_id = stem.substr(0, rpos);
      s.row = row;
      s.col = col;
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace sdrnet
