#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "sdrnet/image.hpp"
#include "sdrnet/rng.hpp"

namespace sdrnet {

// ---------------------------------------------------------------------------
// Exact index permutations. Geometric transforms apply to image and mask
// identically; these four are lossless.

inline ImageU8 hflip(const ImageU8& im) {
  ImageU8 out = make_image(im.height, im.width, im.channels);
  for (int64_t y = 0; y < im.height; ++y)
    for (int64_t x = 0; x < im.width; ++x)
      for (int c = 0; c < im.channels; ++c)
        out.at(y, x, c) = im.at(y, im.width - 1 - x, c);
  return out;
}

inline IndexMask hflip(const IndexMask& m) {
  IndexMask out = make_mask(m.height, m.width);
  for (int64_t y = 0; y < m.height; ++y)
    for (int64_t x = 0; x < m.width; ++x)
      out.at(y, x) = m.at(y, m.width - 1 - x);
  return out;
}

inline ImageU8 vflip(const ImageU8& im) {
  ImageU8 out = make_image(im.height, im.width, im.channels);
  for (int64_t y = 0; y < im.height; ++y)
    for (int64_t x = 0; x < im.width; ++x)
      for (int c = 0; c < im.channels; ++c)
        out.at(y, x, c) = im.at(im.height - 1 - y, x, c);
  return out;
}

inline IndexMask vflip(const IndexMask& m) {
  IndexMask out = make_mask(m.height, m.width);
  for (int64_t y = 0; y < m.height; ++y)
    for (int64_t x = 0; x < m.width; ++x)
      out.at(y, x) = m.at(m.height - 1 - y, x);
  return out;
}

// Clockwise quarter turn: pixel (r, c) of an HxW input lands at (c, H-1-r)
// in the WxH output.
inline ImageU8 rot90cw(const ImageU8& im) {
  ImageU8 out = make_image(im.width, im.height, im.channels);
  for (int64_t y = 0; y < out.height; ++y)
    for (int64_t x = 0; x < out.width; ++x)
      for (int c = 0; c < im.channels; ++c)
        out.at(y, x, c) = im.at(im.height - 1 - x, y, c);
  return out;
}

inline IndexMask rot90cw(const IndexMask& m) {
  IndexMask out = make_mask(m.width, m.height);
  for (int64_t y = 0; y < out.height; ++y)
    for (int64_t x = 0; x < out.width; ++x)
      out.at(y, x) = m.at(m.height - 1 - x, y);
  return out;
}

inline ImageU8 transpose(const ImageU8& im) {
  ImageU8 out = make_image(im.width, im.height, im.channels);
  for (int64_t y = 0; y < out.height; ++y)
    for (int64_t x = 0; x < out.width; ++x)
      for (int c = 0; c < im.channels; ++c) out.at(y, x, c) = im.at(x, y, c);
  return out;
}

inline IndexMask transpose(const IndexMask& m) {
  IndexMask out = make_mask(m.width, m.height);
  for (int64_t y = 0; y < out.height; ++y)
    for (int64_t x = 0; x < out.width; ++x) out.at(y, x) = m.at(x, y);
  return out;
}

// ---------------------------------------------------------------------------
// Resampling transforms. The image is sampled bilinearly, the mask with
// nearest neighbor; source coordinates falling outside the frame yield 0 in
// the image and the ignore value in the mask.

namespace detail {

inline float bilinear_u8(const ImageU8& im, double sy, double sx, int c) {
  if (sy < 0.0 || sx < 0.0 || sy > static_cast<double>(im.height - 1) ||
      sx > static_cast<double>(im.width - 1))
    return 0.f;
  int64_t y0 = static_cast<int64_t>(std::floor(sy));
  int64_t x0 = static_cast<int64_t>(std::floor(sx));
  int64_t y1 = std::min(y0 + 1, im.height - 1);
  int64_t x1 = std::min(x0 + 1, im.width - 1);
  double fy = sy - static_cast<double>(y0);
  double fx = sx - static_cast<double>(x0);
  double v = (1 - fy) * ((1 - fx) * im.at(y0, x0, c) + fx * im.at(y0, x1, c)) +
             fy * ((1 - fx) * im.at(y1, x0, c) + fx * im.at(y1, x1, c));
  return static_cast<float>(v);
}

inline int32_t nearest_mask(const IndexMask& m, double sy, double sx,
                            int32_t ignore) {
  int64_t y = static_cast<int64_t>(std::lround(sy));
  int64_t x = static_cast<int64_t>(std::lround(sx));
  if (y < 0 || x < 0 || y >= m.height || x >= m.width) return ignore;
  return m.at(y, x);
}

}  // namespace detail

// Zoom about the center by `scale` and translate by (dy, dx) pixels, via
// inverse mapping so every output pixel is defined.
inline void shift_scale(ImageU8& image, IndexMask& mask, double scale,
                        double dy, double dx, int32_t ignore) {
  check(scale > 0.0, ErrorKind::InvalidArgument, "scale must be positive");
  ImageU8 src_im = image;
  IndexMask src_mask = mask;
  double cy = static_cast<double>(image.height - 1) / 2.0;
  double cx = static_cast<double>(image.width - 1) / 2.0;
  for (int64_t y = 0; y < image.height; ++y)
    for (int64_t x = 0; x < image.width; ++x) {
      double sy = (static_cast<double>(y) - cy - dy) / scale + cy;
      double sx = (static_cast<double>(x) - cx - dx) / scale + cx;
      for (int c = 0; c < image.channels; ++c)
        image.at(y, x, c) =
            detail::clamp_u8(detail::bilinear_u8(src_im, sy, sx, c));
      mask.at(y, x) = detail::nearest_mask(src_mask, sy, sx, ignore);
    }
}

// Per-axis monotone piecewise-linear warp: each of `steps` cells stretches
// or shrinks by up to `magnitude`, renormalized so the frame edges stay
// fixed (no pixels are exposed).
inline void grid_distortion(ImageU8& image, IndexMask& mask, int steps,
                            double magnitude, Rng& rng, int32_t ignore) {
  check(steps >= 1, ErrorKind::InvalidArgument, "steps must be >= 1");
  check(magnitude >= 0.0 && magnitude < 1.0, ErrorKind::InvalidArgument,
        "magnitude must be in [0, 1)");
  auto warped_axis = [&](int64_t extent) {
    std::vector<double> cum(static_cast<size_t>(steps) + 1, 0.0);
    for (int i = 0; i < steps; ++i) {
      double u = 2.0 * rng.next_double() - 1.0;
      cum[static_cast<size_t>(i) + 1] =
          cum[static_cast<size_t>(i)] + 1.0 + u * magnitude;
    }
    double norm = static_cast<double>(extent) / cum.back();
    for (double& v : cum) v *= norm;
    return cum;
  };
  std::vector<double> cy = warped_axis(image.height);
  std::vector<double> cx = warped_axis(image.width);
  auto invert = [&](const std::vector<double>& cum, int64_t extent, double p) {
    double cell = static_cast<double>(extent) / steps;
    size_t i = 0;
    while (i + 2 < cum.size() && p >= cum[i + 1]) ++i;
    double span = cum[i + 1] - cum[i];
    return cell * (static_cast<double>(i) + (p - cum[i]) / span);
  };

  ImageU8 src_im = image;
  IndexMask src_mask = mask;
  for (int64_t y = 0; y < image.height; ++y) {
    double sy = invert(cy, image.height, static_cast<double>(y));
    for (int64_t x = 0; x < image.width; ++x) {
      double sx = invert(cx, image.width, static_cast<double>(x));
      for (int c = 0; c < image.channels; ++c)
        image.at(y, x, c) =
            detail::clamp_u8(detail::bilinear_u8(src_im, sy, sx, c));
      mask.at(y, x) = detail::nearest_mask(src_mask, sy, sx, ignore);
    }
  }
}

// ---------------------------------------------------------------------------
// Photometric transforms touch the image only.

inline void adjust_brightness(ImageU8& image, double delta) {
  for (uint8_t& v : image.pixels)
    v = detail::clamp_u8(static_cast<double>(v) + delta * 255.0);
}

inline void adjust_contrast(ImageU8& image, double factor) {
  for (uint8_t& v : image.pixels)
    v = detail::clamp_u8((static_cast<double>(v) - 128.0) * factor + 128.0);
}

inline void color_jitter(ImageU8& image, const std::vector<double>& gains) {
  check(static_cast<int>(gains.size()) == image.channels,
        ErrorKind::InvalidArgument, "one gain per channel required");
  for (int64_t y = 0; y < image.height; ++y)
    for (int64_t x = 0; x < image.width; ++x)
      for (int c = 0; c < image.channels; ++c)
        image.at(y, x, c) = detail::clamp_u8(
            static_cast<double>(image.at(y, x, c)) * gains[static_cast<size_t>(c)]);
}

// ---------------------------------------------------------------------------
// Declarative policy.

enum class AugmentKind {
  HorizontalFlip,
  VerticalFlip,
  Rotate90,
  Transpose,
  Scale,
  ShiftScale,
  GridDistortion,
  ColorJitter,
  Contrast,
  Brightness,
};

struct AugmentOp {
  AugmentKind kind;
  float probability = 0.5f;
  // Strength knob: max zoom/shift fraction, distortion amplitude, or
  // photometric range, depending on the kind. Unused by the permutations.
  float magnitude = 0.1f;
};

struct AugmentPolicy {
  std::vector<AugmentOp> ops;
  int32_t ignore_index = 255;
  int distortion_steps = 4;
};

inline AugmentPolicy identity_policy() { return {}; }

// The full training-time menu: flips, quarter rotations, transposition,
// zoom, shift-scale and grid distortion, plus photometric jitter.
inline AugmentPolicy default_policy() {
  AugmentPolicy p;
  p.ops = {
      {AugmentKind::HorizontalFlip, 0.5f, 0.f},
      {AugmentKind::VerticalFlip, 0.5f, 0.f},
      {AugmentKind::Rotate90, 0.5f, 0.f},
      {AugmentKind::Transpose, 0.5f, 0.f},
      {AugmentKind::Scale, 0.5f, 0.1f},
      {AugmentKind::ShiftScale, 0.5f, 0.1f},
      {AugmentKind::GridDistortion, 0.5f, 0.15f},
      {AugmentKind::ColorJitter, 0.5f, 0.1f},
      {AugmentKind::Contrast, 0.5f, 0.1f},
      {AugmentKind::Brightness, 0.5f, 0.1f},
  };
  return p;
}

inline Sample augment(const Sample& sample, uint64_t seed,
                      const AugmentPolicy& policy) {
  Sample out = sample;
  Rng rng(seed, 11);
  for (const AugmentOp& op : policy.ops) {
    if (rng.next_double() >= static_cast<double>(op.probability)) continue;
    double m = op.magnitude;
    switch (op.kind) {
      case AugmentKind::HorizontalFlip:
        out.image = hflip(out.image);
        out.mask = hflip(out.mask);
        break;
      case AugmentKind::VerticalFlip:
        out.image = vflip(out.image);
        out.mask = vflip(out.mask);
        break;
      case AugmentKind::Rotate90: {
        int64_t quarters = rng.uniform_int(1, 3);
        for (int64_t q = 0; q < quarters; ++q) {
          out.image = rot90cw(out.image);
          out.mask = rot90cw(out.mask);
        }
        break;
      }
      case AugmentKind::Transpose:
        out.image = transpose(out.image);
        out.mask = transpose(out.mask);
        break;
      case AugmentKind::Scale: {
        double s = 1.0 + m * (2.0 * rng.next_double() - 1.0);
        shift_scale(out.image, out.mask, s, 0.0, 0.0, policy.ignore_index);
        break;
      }
      case AugmentKind::ShiftScale: {
        double s = 1.0 + m * (2.0 * rng.next_double() - 1.0);
        double dy = m * (2.0 * rng.next_double() - 1.0) *
                    static_cast<double>(out.image.height);
        double dx = m * (2.0 * rng.next_double() - 1.0) *
                    static_cast<double>(out.image.width);
        shift_scale(out.image, out.mask, s, dy, dx, policy.ignore_index);
        break;
      }
      case AugmentKind::GridDistortion:
        grid_distortion(out.image, out.mask, policy.distortion_steps, m, rng,
                        policy.ignore_index);
        break;
      case AugmentKind::ColorJitter: {
        std::vector<double> gains(static_cast<size_t>(out.image.channels));
        for (double& g : gains) g = 1.0 + m * (2.0 * rng.next_double() - 1.0);
        color_jitter(out.image, gains);
        break;
      }
      case AugmentKind::Contrast:
        adjust_contrast(out.image, 1.0 + m * (2.0 * rng.next_double() - 1.0));
        break;
      case AugmentKind::Brightness:
        adjust_brightness(out.image, m * (2.0 * rng.next_double() - 1.0));
        break;
    }
  }
  return out;
}

inline const char* augment_kind_name(AugmentKind k) {
  switch (k) {
    case AugmentKind::HorizontalFlip: return "hflip";
    case AugmentKind::VerticalFlip: return "vflip";
    case AugmentKind::Rotate90: return "rotate90";
    case AugmentKind::Transpose: return "transpose";
    case AugmentKind::Scale: return "scale";
    case AugmentKind::ShiftScale: return "shift_scale";
    case AugmentKind::GridDistortion: return "grid_distortion";
    case AugmentKind::ColorJitter: return "color_jitter";
    case AugmentKind::Contrast: return "contrast";
    case AugmentKind::Brightness: return "brightness";
  }
  return "?";
}

// Policy files are line oriented: `<kind> <probability> [magnitude]`, one
// transform per line, '#' comments.
inline AugmentPolicy parse_augment_policy(const std::string& text) {
  AugmentPolicy p;
  p.ops.clear();
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;
    AugmentOp op{AugmentKind::HorizontalFlip, 0.5f, 0.1f};
    bool known = false;
    for (AugmentKind k :
         {AugmentKind::HorizontalFlip, AugmentKind::VerticalFlip,
          AugmentKind::Rotate90, AugmentKind::Transpose, AugmentKind::Scale,
          AugmentKind::ShiftScale, AugmentKind::GridDistortion,
          AugmentKind::ColorJitter, AugmentKind::Contrast,
          AugmentKind::Brightness}) {
      if (kind == augment_kind_name(k)) {
        op.kind = k;
        known = true;
      }
    }
    check(known, ErrorKind::Parse,
          strf("line %d: unknown transform '%s'", line_no, kind.c_str()));
    check(static_cast<bool>(ls >> op.probability), ErrorKind::Parse,
          strf("line %d: missing or bad probability", line_no));
    check(op.probability >= 0.f && op.probability <= 1.f, ErrorKind::Parse,
          strf("line %d: probability must be in [0, 1]", line_no));
    std::string mag;
    if (ls >> mag) {
      char* end = nullptr;
      double m = std::strtod(mag.c_str(), &end);
      check(end != mag.c_str() && *end == '\0' && std::isfinite(m) && m >= 0.0,
            ErrorKind::Parse,
            strf("line %d: bad magnitude '%s'", line_no, mag.c_str()));
      op.magnitude = static_cast<float>(m);
      std::string extra;
      check(!(ls >> extra), ErrorKind::Parse,
            strf("line %d: unexpected token '%s'", line_no, extra.c_str()));
    }
    p.ops.push_back(op);
  }
  return p;
}

// Per-sample augmentation seed: a pure function of the run seed, the
// sample's provenance, and the epoch, so any parallel schedule reproduces
// the sequential stream.
inline uint64_t augment_seed(uint64_t run_seed, const std::string& provenance,
                             int64_t epoch) {
  return hash_combine(hash_combine(run_seed, fnv1a64(provenance)),
                      static_cast<uint64_t>(epoch));
}

}  // namespace sdrnet
