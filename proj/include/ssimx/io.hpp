// Copyright Contributors to the ssimx Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <png.h>

#include <json.hpp>

#include "ssimx/error.hpp"
#include "ssimx/image.hpp"

namespace ssimx {
namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw io_error("cannot open '" + path + "'");
  return f;
}

inline float swap_float(float v) {
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  u = ((u & 0xff000000u) >> 24) | ((u & 0x00ff0000u) >> 8) |
      ((u & 0x0000ff00u) << 8) | ((u & 0x000000ffu) << 24);
  std::memcpy(&v, &u, 4);
  return v;
}

inline Image load_png(const std::string& path) {
  FilePtr file = open_file(path, "rb");

  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw format_error("'" + path + "' is not a PNG file");
  }

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw io_error("libpng initialization failed");
  }

  std::vector<unsigned char> pixels;
  std::vector<png_bytep> rows;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw format_error("failed to decode PNG '" + path + "'");
  }

  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_byte bit_depth = png_get_bit_depth(png, info);
  const png_byte color_type = png_get_color_type(png, info);
  if (bit_depth == 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw format_error("'" + path + "': 16-bit PNG is not supported, expected 8-bit");
  }
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_read_update_info(png, info);

  const int h = static_cast<int>(png_get_image_height(png, info));
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int ch = png_get_channels(png, info);
  if (ch != 1 && ch != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw format_error("'" + path + "': expected grayscale or RGB PNG, got " +
                       std::to_string(ch) + " channels");
  }

  pixels.resize(static_cast<std::size_t>(h) * w * ch);
  rows.resize(h);
  for (int y = 0; y < h; ++y) {
    rows[y] = pixels.data() + static_cast<std::size_t>(y) * w * ch;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Image img(h, w, ch);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    img.raw()[i] = pixels[i] / 255.0;
  }
  return img;
}

inline int pgm_next_token(std::FILE* f, char* buf, int cap) {
  int c;
  do {
    c = std::fgetc(f);
    if (c == '#') {
      while (c != EOF && c != '\n') c = std::fgetc(f);
    }
  } while (c == ' ' || c == '\t' || c == '\n' || c == '\r');
  int n = 0;
  while (c != EOF && !std::isspace(c) && n < cap - 1) {
    buf[n++] = static_cast<char>(c);
    c = std::fgetc(f);
  }
  buf[n] = '\0';
  return n;
}

inline Image load_pgm(const std::string& path) {
  FilePtr file = open_file(path, "rb");
  char tok[64];
  if (!pgm_next_token(file.get(), tok, sizeof tok) ||
      (std::strcmp(tok, "P5") != 0 && std::strcmp(tok, "P2") != 0)) {
    throw format_error("'" + path + "' is not a PGM file");
  }
  const bool binary = std::strcmp(tok, "P5") == 0;

  auto read_int = [&](const char* what) {
    if (!pgm_next_token(file.get(), tok, sizeof tok)) {
      throw format_error("'" + path + "': truncated PGM header (" + what + ")");
    }
    return std::atoi(tok);
  };
  const int w = read_int("width");
  const int h = read_int("height");
  const int maxval = read_int("maxval");
  if (w < 1 || h < 1) throw format_error("'" + path + "': bad PGM dimensions");
  if (maxval != 255) {
    throw format_error("'" + path + "': expected 8-bit PGM (maxval 255), got maxval " +
                       std::to_string(maxval));
  }

  Image img(h, w, 1);
  if (binary) {
    std::vector<unsigned char> row(w);
    for (int y = 0; y < h; ++y) {
      if (std::fread(row.data(), 1, row.size(), file.get()) != row.size()) {
        throw format_error("'" + path + "': truncated PGM data");
      }
      for (int x = 0; x < w; ++x) img.at(y, x) = row[x] / 255.0;
    }
  } else {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!pgm_next_token(file.get(), tok, sizeof tok)) {
          throw format_error("'" + path + "': truncated PGM data");
        }
        img.at(y, x) = std::atoi(tok) / 255.0;
      }
    }
  }
  return img;
}

}  // namespace detail

/// Loads an 8-bit grayscale or RGB image (PNG or PGM, detected by magic
/// bytes) with intensities divided by 255 into [0, 1].
inline Image load_image(const std::string& path) {
  detail::FilePtr probe = detail::open_file(path, "rb");
  unsigned char magic[2] = {0, 0};
  std::size_t got = std::fread(magic, 1, 2, probe.get());
  probe.reset();
  if (got == 2 && magic[0] == 0x89 && magic[1] == 'P') return detail::load_png(path);
  if (got == 2 && magic[0] == 'P' && (magic[1] == '5' || magic[1] == '2')) {
    return detail::load_pgm(path);
  }
  throw format_error("'" + path + "': unrecognized image format, expected PNG or PGM");
}

/// Writes an 8-bit PNG, quantizing values with round(clamp(v, 0, 1) * 255).
inline void save_png(const Image& img, const std::string& path) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw argument_error("save_png: image must have 1 or 3 channels");
  }
  detail::FilePtr file = detail::open_file(path, "wb");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw io_error("libpng initialization failed");
  }

  const int h = img.height(), w = img.width(), ch = img.channels();
  std::vector<unsigned char> pixels(static_cast<std::size_t>(h) * w * ch);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const double v = std::clamp(img.raw()[i], 0.0, 1.0);
    pixels[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) {
    rows[y] = pixels.data() + static_cast<std::size_t>(y) * w * ch;
  }

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw io_error("failed to write PNG '" + path + "'");
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, w, h, 8,
               ch == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

/// Writes a float map as PFM ("Pf" for 1 channel, "PF" for 3), scanlines
/// bottom-to-top, scale sign encoding host endianness.
inline void save_pfm(const Image& img, const std::string& path) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw argument_error("save_pfm: image must have 1 or 3 channels");
  }
  detail::FilePtr file = detail::open_file(path, "wb");
  const int h = img.height(), w = img.width(), ch = img.channels();
  const char* type = ch == 1 ? "Pf" : "PF";
  const double scale = std::endian::native == std::endian::little ? -1.0 : 1.0;
  std::fprintf(file.get(), "%s\n%d %d\n%.1f\n", type, w, h, scale);

  std::vector<float> row(static_cast<std::size_t>(w) * ch);
  for (int y = h - 1; y >= 0; --y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        row[static_cast<std::size_t>(x) * ch + c] = static_cast<float>(img.at(y, x, c));
      }
    }
    if (std::fwrite(row.data(), sizeof(float), row.size(), file.get()) != row.size()) {
      throw io_error("failed to write PFM '" + path + "'");
    }
  }
}

inline Image load_pfm(const std::string& path) {
  detail::FilePtr file = detail::open_file(path, "rb");
  char tok[64];
  if (!detail::pgm_next_token(file.get(), tok, sizeof tok) ||
      (std::strcmp(tok, "Pf") != 0 && std::strcmp(tok, "PF") != 0)) {
    throw format_error("'" + path + "' is not a PFM file");
  }
  const int ch = std::strcmp(tok, "PF") == 0 ? 3 : 1;
  auto read_num = [&](const char* what) {
    if (!detail::pgm_next_token(file.get(), tok, sizeof tok)) {
      throw format_error("'" + path + "': truncated PFM header (" + what + ")");
    }
    return std::atof(tok);
  };
  const int w = static_cast<int>(read_num("width"));
  const int h = static_cast<int>(read_num("height"));
  const double scale = read_num("scale");
  if (w < 1 || h < 1 || scale == 0.0) throw format_error("'" + path + "': bad PFM header");
  const bool file_little = scale < 0.0;
  const bool host_little = std::endian::native == std::endian::little;

  Image img(h, w, ch);
  std::vector<float> row(static_cast<std::size_t>(w) * ch);
  for (int y = h - 1; y >= 0; --y) {
    if (std::fread(row.data(), sizeof(float), row.size(), file.get()) != row.size()) {
      throw format_error("'" + path + "': truncated PFM data");
    }
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        float v = row[static_cast<std::size_t>(x) * ch + c];
        if (file_little != host_little) v = detail::swap_float(v);
        img.at(y, x, c) = v;
      }
    }
  }
  return img;
}

/// Serializes a channel stack as a single-channel PFM of channel-major
/// planes (height h*c) plus a JSON sidecar {h, w, c} at path + ".json".
inline void save_channel_stack(const ChannelStack& stack, const std::string& path) {
  const int h = stack.height(), w = stack.width(), ch = stack.channels();
  Image planes(h * ch, w, 1);
  for (int c = 0; c < ch; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        planes.at(c * h + y, x) = stack.at(y, x, c);
      }
    }
  }
  save_pfm(planes, path);
  nlohmann::json sidecar{{"h", h}, {"w", w}, {"c", ch}};
  std::ofstream out(path + ".json");
  if (!out) throw io_error("cannot open '" + path + ".json'");
  out << sidecar.dump(2) << "\n";
}

inline ChannelStack load_channel_stack(const std::string& path) {
  std::ifstream in(path + ".json");
  if (!in) throw io_error("cannot open '" + path + ".json'");
  nlohmann::json sidecar;
  try {
    in >> sidecar;
  } catch (const nlohmann::json::exception& e) {
    throw format_error("bad channel-stack sidecar '" + path + ".json': " + e.what());
  }
  const int h = sidecar.at("h").get<int>();
  const int w = sidecar.at("w").get<int>();
  const int ch = sidecar.at("c").get<int>();
  Image planes = load_pfm(path);
  if (planes.channels() != 1 || planes.height() != h * ch || planes.width() != w) {
    throw format_error("channel-stack PFM '" + path + "' does not match its sidecar");
  }
  ChannelStack stack(h, w, ch);
  for (int c = 0; c < ch; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        stack.at(y, x, c) = planes.at(c * h + y, x);
      }
    }
  }
  return stack;
}

}  // namespace ssimx
