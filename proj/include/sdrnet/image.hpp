#pragma once

#include <png.h>

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "sdrnet/common.hpp"

namespace sdrnet {

// Interleaved row-major H x W x C byte image, C in {1, 3}.
struct ImageU8 {
  int64_t height = 0;
  int64_t width = 0;
  int channels = 0;
  std::vector<uint8_t> pixels;

  int64_t numel() const { return height * width * channels; }
  uint8_t& at(int64_t y, int64_t x, int c) {
    return pixels[static_cast<size_t>((y * width + x) * channels + c)];
  }
  uint8_t at(int64_t y, int64_t x, int c) const {
    return pixels[static_cast<size_t>((y * width + x) * channels + c)];
  }
};

inline ImageU8 make_image(int64_t height, int64_t width, int channels,
                          uint8_t fill = 0) {
  check(height >= 1 && width >= 1, ErrorKind::InvalidArgument,
        strf("image dims must be positive, got %lldx%lld",
             static_cast<long long>(height), static_cast<long long>(width)));
  check(channels == 1 || channels == 3, ErrorKind::InvalidArgument,
        strf("image channels must be 1 or 3, got %d", channels));
  ImageU8 im;
  im.height = height;
  im.width = width;
  im.channels = channels;
  im.pixels.assign(static_cast<size_t>(im.numel()), fill);
  return im;
}

// Row-major H x W grid of class indices (or the ignore value).
struct IndexMask {
  int64_t height = 0;
  int64_t width = 0;
  std::vector<int32_t> values;

  int64_t numel() const { return height * width; }
  int32_t& at(int64_t y, int64_t x) {
    return values[static_cast<size_t>(y * width + x)];
  }
  int32_t at(int64_t y, int64_t x) const {
    return values[static_cast<size_t>(y * width + x)];
  }
};

inline IndexMask make_mask(int64_t height, int64_t width, int32_t fill = 0) {
  check(height >= 1 && width >= 1, ErrorKind::InvalidArgument,
        strf("mask dims must be positive, got %lldx%lld",
             static_cast<long long>(height), static_cast<long long>(width)));
  IndexMask m;
  m.height = height;
  m.width = width;
  m.values.assign(static_cast<size_t>(height * width), fill);
  return m;
}

// One training/evaluation unit: an image crop, its label mask, and where it
// came from. Augmentation seeds and error diagnostics key off the provenance.
struct Sample {
  ImageU8 image;
  IndexMask mask;
  std::string source_id;
  int64_t row = 0;  // window anchor in the source frame
  int64_t col = 0;

  std::string provenance() const {
    return strf("%s@%lld,%lld", source_id.c_str(),
                static_cast<long long>(row), static_cast<long long>(col));
  }
};

namespace detail {

inline uint8_t clamp_u8(double v) {
  if (v <= 0.0) return 0;
  if (v >= 255.0) return 255;
  return static_cast<uint8_t>(v + 0.5);
}

}  // namespace detail

// Reads 8-bit grayscale or RGB PNGs; palette images expand to RGB, 16-bit
// depths narrow to 8, and any alpha channel is dropped.
inline ImageU8 read_png(const std::string& path) {
  FileCloser file;
  file.f = std::fopen(path.c_str(), "rb");
  check(file.f != nullptr, ErrorKind::Data,
        strf("cannot open image file: %s", path.c_str()));

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  check(png != nullptr, ErrorKind::Runtime, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(ErrorKind::Runtime, "png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::Data, strf("failed to decode PNG: %s", path.c_str()));
  }

  png_init_io(png, file.f);
  png_read_info(png, info);

  png_byte color_type = png_get_color_type(png, info);
  png_byte bit_depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  int64_t height = png_get_image_height(png, info);
  int64_t width = png_get_image_width(png, info);
  int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::Data,
         strf("unsupported channel count %d in %s", channels, path.c_str()));
  }

  ImageU8 im = make_image(height, width, channels);
  std::vector<png_bytep> rows(static_cast<size_t>(height));
  for (int64_t y = 0; y < height; ++y)
    rows[static_cast<size_t>(y)] = im.pixels.data() + y * width * channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return im;
}

inline void write_png(const std::string& path, const ImageU8& im) {
  check(im.channels == 1 || im.channels == 3, ErrorKind::InvalidArgument,
        strf("write_png supports 1 or 3 channels, got %d", im.channels));
  check(im.height >= 1 && im.width >= 1 &&
            static_cast<int64_t>(im.pixels.size()) == im.numel(),
        ErrorKind::InvalidArgument, "write_png: malformed image");

  FileCloser file;
  file.f = std::fopen(path.c_str(), "wb");
  check(file.f != nullptr, ErrorKind::Data,
        strf("cannot open file for writing: %s", path.c_str()));

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  check(png != nullptr, ErrorKind::Runtime, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail(ErrorKind::Runtime, "png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::Data, strf("failed to encode PNG: %s", path.c_str()));
  }

  png_init_io(png, file.f);
  png_set_IHDR(png, info, static_cast<png_uint_32>(im.width),
               static_cast<png_uint_32>(im.height), 8,
               im.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(static_cast<size_t>(im.height));
  for (int64_t y = 0; y < im.height; ++y)
    rows[static_cast<size_t>(y)] = const_cast<png_bytep>(
        im.pixels.data() + y * im.width * im.channels);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// Index masks travel as grayscale PNGs: one byte per pixel, the ignore value
// included. Values above 255 do not fit and are rejected.
inline void write_mask_png(const std::string& path, const IndexMask& m) {
  ImageU8 im = make_image(m.height, m.width, 1);
  for (int64_t i = 0; i < m.numel(); ++i) {
    int32_t v = m.values[static_cast<size_t>(i)];
    check(v >= 0 && v <= 255, ErrorKind::Data,
          strf("mask value %d does not fit a grayscale PNG", v));
    im.pixels[static_cast<size_t>(i)] = static_cast<uint8_t>(v);
  }
  write_png(path, im);
}

inline IndexMask read_mask_png(const std::string& path) {
  ImageU8 im = read_png(path);
  check(im.channels == 1, ErrorKind::Data,
        strf("mask PNG must be grayscale: %s", path.c_str()));
  IndexMask m = make_mask(im.height, im.width);
  for (int64_t i = 0; i < m.numel(); ++i)
    m.values[static_cast<size_t>(i)] = im.pixels[static_cast<size_t>(i)];
  return m;
}

}  // namespace sdrnet
