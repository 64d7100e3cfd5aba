#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "sdrnet/image.hpp"
#include "sdrnet/tensor.hpp"

namespace sdrnet {

// Fixed-size sliding windows over a frame. Edge windows are shifted inward
// so every window lies fully inside the image; nothing is ever padded.
struct TilePlan {
  int64_t image_height = 0;
  int64_t image_width = 0;
  int tile = 256;
  int stride = 256;
  std::vector<std::pair<int64_t, int64_t>> windows;  // (row, col) anchors
};

namespace detail {

inline std::vector<int64_t> anchor_axis(int64_t extent, int tile, int stride) {
  std::vector<int64_t> anchors;
  int64_t last = extent - tile;
  for (int64_t a = 0;; a += stride) {
    anchors.push_back(std::min(a, last));
    if (a >= last) break;
  }
  anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());
  return anchors;
}

}  // namespace detail

inline TilePlan plan_tiles(int64_t height, int64_t width, int tile,
                           int stride) {
  check(height >= 1 && width >= 1, ErrorKind::InvalidArgument,
        strf("image dims must be positive, got %lldx%lld",
             static_cast<long long>(height), static_cast<long long>(width)));
  check(tile >= 1 && tile <= std::min(height, width),
        ErrorKind::InvalidArgument,
        strf("tile %d must be in [1, min(%lld, %lld)]", tile,
             static_cast<long long>(height), static_cast<long long>(width)));
  check(stride >= 1 && stride <= tile, ErrorKind::InvalidArgument,
        strf("stride %d must be in [1, tile=%d]", stride, tile));

  TilePlan plan;
  plan.image_height = height;
  plan.image_width = width;
  plan.tile = tile;
  plan.stride = stride;
  std::vector<int64_t> rows = detail::anchor_axis(height, tile, stride);
  std::vector<int64_t> cols = detail::anchor_axis(width, tile, stride);
  for (int64_t r : rows)
    for (int64_t c : cols) plan.windows.emplace_back(r, c);
  return plan;
}

inline std::vector<Sample> extract(const ImageU8& image, const IndexMask& mask,
                                   const TilePlan& plan,
                                   const std::string& source_id) {
  check(image.height == plan.image_height && image.width == plan.image_width,
        ErrorKind::Data,
        strf("image is %lldx%lld but the plan covers %lldx%lld",
             static_cast<long long>(image.height),
             static_cast<long long>(image.width),
             static_cast<long long>(plan.image_height),
             static_cast<long long>(plan.image_width)));
  check(mask.height == image.height && mask.width == image.width,
        ErrorKind::Data,
        strf("mask is %lldx%lld but the image is %lldx%lld",
             static_cast<long long>(mask.height),
             static_cast<long long>(mask.width),
             static_cast<long long>(image.height),
             static_cast<long long>(image.width)));

  std::vector<Sample> out;
  out.reserve(plan.windows.size());
  for (auto [row, col] : plan.windows) {
    Sample s;
    s.source_id = source_id;
    s.row = row;
    s.col = col;
    s.image = make_image(plan.tile, plan.tile, image.channels);
    s.mask = make_mask(plan.tile, plan.tile);
    for (int64_t y = 0; y < plan.tile; ++y) {
      for (int64_t x = 0; x < plan.tile; ++x) {
        for (int c = 0; c < image.channels; ++c)
          s.image.at(y, x, c) = image.at(row + y, col + x, c);
        s.mask.at(y, x) = mask.at(row + y, col + x);
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

struct TilePrediction {
  int64_t row = 0;
  int64_t col = 0;
  Tensor logits;  // num_classes x tile x tile
};

// Reassembles per-window logits into a full frame; pixels covered by several
// windows take the mean of the overlapping logits.
inline Tensor stitch(const std::vector<TilePrediction>& predictions,
                     const TilePlan& plan, int num_classes) {
  check(num_classes >= 1, ErrorKind::InvalidArgument,
        "num_classes must be positive");
  std::map<std::pair<int64_t, int64_t>, const TilePrediction*> by_anchor;
  for (const TilePrediction& p : predictions) {
    check(p.logits.defined() && p.logits.ndim() == 3 &&
              p.logits.dim(0) == num_classes && p.logits.dim(1) == plan.tile &&
              p.logits.dim(2) == plan.tile,
          ErrorKind::Data,
          strf("tile logits at (%lld,%lld) must be %dx%dx%d",
               static_cast<long long>(p.row), static_cast<long long>(p.col),
               num_classes, plan.tile, plan.tile));
    bool inserted = by_anchor.emplace(std::make_pair(p.row, p.col), &p).second;
    check(inserted, ErrorKind::Data,
          strf("duplicate prediction for window (%lld,%lld)",
               static_cast<long long>(p.row), static_cast<long long>(p.col)));
  }

  int64_t hw = plan.image_height * plan.image_width;
  Tensor out = Tensor::zeros({num_classes, plan.image_height, plan.image_width});
  std::vector<int32_t> cover(static_cast<size_t>(hw), 0);
  for (auto [row, col] : plan.windows) {
    auto it = by_anchor.find({row, col});
    check(it != by_anchor.end(), ErrorKind::Data,
          strf("missing prediction for window (%lld,%lld)",
               static_cast<long long>(row), static_cast<long long>(col)));
    const Tensor& t = it->second->logits;
    for (int k = 0; k < num_classes; ++k) {
      const float* src = t.data() + static_cast<int64_t>(k) * plan.tile * plan.tile;
      float* dst = out.data() + static_cast<int64_t>(k) * hw;
      for (int64_t y = 0; y < plan.tile; ++y)
        for (int64_t x = 0; x < plan.tile; ++x)
          dst[(row + y) * plan.image_width + (col + x)] +=
              src[y * plan.tile + x];
    }
    for (int64_t y = 0; y < plan.tile; ++y)
      for (int64_t x = 0; x < plan.tile; ++x)
        ++cover[static_cast<size_t>((row + y) * plan.image_width + (col + x))];
  }
  for (int64_t i = 0; i < hw; ++i) {
    // plan_tiles guarantees full coverage, so every count is >= 1.
    float inv = 1.f / static_cast<float>(cover[static_cast<size_t>(i)]);
    for (int k = 0; k < num_classes; ++k)
      out.data()[static_cast<int64_t>(k) * hw + i] *= inv;
  }
  return out;
}

}  // namespace sdrnet
