// Copyright 2026 The dictps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <png.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dictps {

/// Row-major, channel-interleaved float image. Row 0 is the top row.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<float> data;

  Image() = default;
  Image(int w, int h, int c, float fill = 0.0f)
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  float& at(int x, int y, int c = 0) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  float at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * height;
  }
};

// ---------------------------------------------------------------------------
// PFM (portable float map), little-endian, rows stored bottom-to-top.
// ---------------------------------------------------------------------------

inline void write_pfm(const Image& img, const std::filesystem::path& path) {
  if (img.channels != 1 && img.channels != 3) {
    throw std::invalid_argument("write_pfm: 1 or 3 channels only");
  }
  static_assert(std::endian::native == std::endian::little);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("write_pfm: cannot open " + path.string());
  out << (img.channels == 3 ? "PF" : "Pf") << "\n"
      << img.width << " " << img.height << "\n-1.0\n";
  const std::size_t row = static_cast<std::size_t>(img.width) * img.channels;
  for (int y = img.height - 1; y >= 0; --y) {
    out.write(reinterpret_cast<const char*>(img.data.data() +
                                            static_cast<std::size_t>(y) * row),
              static_cast<std::streamsize>(row * sizeof(float)));
  }
  if (!out) throw std::runtime_error("write_pfm: write failed");
}

inline Image read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_pfm: cannot open " + path.string());
  std::string magic;
  int w = 0, h = 0;
  double scale = 0.0;
  in >> magic >> w >> h >> scale;
  if ((magic != "PF" && magic != "Pf") || w <= 0 || h <= 0 || scale == 0.0) {
    throw std::runtime_error("read_pfm: bad header in " + path.string());
  }
  if (scale > 0.0) {
    throw std::runtime_error("read_pfm: big-endian PFM not supported");
  }
  in.get();  // single whitespace byte after the scale line
  Image img(w, h, magic == "PF" ? 3 : 1);
  const std::size_t row = static_cast<std::size_t>(w) * img.channels;
  for (int y = h - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(img.data.data() +
                                    static_cast<std::size_t>(y) * row),
            static_cast<std::streamsize>(row * sizeof(float)));
  }
  if (!in) throw std::runtime_error("read_pfm: truncated data");
  return img;
}

// ---------------------------------------------------------------------------
// PNG (8- or 16-bit input; 8-bit output for previews and plots).
// ---------------------------------------------------------------------------

namespace detail {

struct PngCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

}  // namespace detail

/// Reads an 8- or 16-bit gray/RGB PNG as raw normalized values in [0, 1]
/// (no linearization applied).
inline Image read_png(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, detail::PngCloser> fp(
      std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw std::runtime_error("read_png: cannot open " + path.string());

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("read_png: libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("read_png: decode error in " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_set_strip_alpha(png);
  if (png_get_bit_depth(png, info) == 16) png_set_swap(png);
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int depth = png_get_bit_depth(png, info);
  const int ch = static_cast<int>(png_get_channels(png, info));
  if (ch != 1 && ch != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("read_png: unsupported channel count");
  }

  std::vector<png_byte> rowbuf(png_get_rowbytes(png, info));
  Image img(w, h, ch);
  const double denom = depth == 16 ? 65535.0 : 255.0;
  for (int y = 0; y < h; ++y) {
    png_read_row(png, rowbuf.data(), nullptr);
    if (depth == 16) {
      const auto* p = reinterpret_cast<const std::uint16_t*>(rowbuf.data());
      for (int i = 0; i < w * ch; ++i) {
        img.data[(static_cast<std::size_t>(y) * w * ch) + i] =
            static_cast<float>(p[i] / denom);
      }
    } else {
      for (int i = 0; i < w * ch; ++i) {
        img.data[(static_cast<std::size_t>(y) * w * ch) + i] =
            static_cast<float>(rowbuf[static_cast<std::size_t>(i)] / denom);
      }
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

/// Writes an 8-bit PNG; input values are clipped to [0, 1].
inline void write_png8(const Image& img, const std::filesystem::path& path) {
  if (img.channels != 1 && img.channels != 3) {
    throw std::invalid_argument("write_png8: 1 or 3 channels only");
  }
  std::unique_ptr<std::FILE, detail::PngCloser> fp(
      std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw std::runtime_error("write_png8: cannot open " + path.string());

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("write_png8: libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("write_png8: encode error");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8,
               img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<png_byte> row(static_cast<std::size_t>(img.width) * img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int i = 0; i < img.width * img.channels; ++i) {
      const float v =
          img.data[static_cast<std::size_t>(y) * img.width * img.channels + i];
      row[static_cast<std::size_t>(i)] = static_cast<png_byte>(
          std::lround(std::min(1.0f, std::max(0.0f, v)) * 255.0f));
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

/// Declared transfer function of integer image input.
struct Linearization {
  enum class Kind { kLinear, kSrgb, kGamma } kind = Kind::kLinear;
  double gamma = 2.2;
  double white_level = 1.0;  // normalized value mapping to intensity 1
};

inline double apply_linearization(double v, const Linearization& lin) {
  switch (lin.kind) {
    case Linearization::Kind::kSrgb:
      v = v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
      break;
    case Linearization::Kind::kGamma:
      v = std::pow(v, lin.gamma);
      break;
    case Linearization::Kind::kLinear:
      break;
  }
  return v / lin.white_level;
}

}  // namespace dictps
