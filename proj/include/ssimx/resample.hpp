// Copyright Contributors to the ssimx Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>

#include "ssimx/error.hpp"
#include "ssimx/image.hpp"

namespace ssimx {

/// Replicates every pixel into an r x r block.
inline Image upsample_nearest(const Image& img, int r) {
  if (r < 1) throw argument_error("upsample_nearest: factor must be at least 1");
  if (r == 1) return img;
  const int h = img.height(), w = img.width(), ch = img.channels();
  Image out(h * r, w * r, ch);
  for (int y = 0; y < h * r; ++y) {
    for (int x = 0; x < w * r; ++x) {
      for (int c = 0; c < ch; ++c) out.at(y, x, c) = img.at(y / r, x / r, c);
    }
  }
  return out;
}

/// Rearranges an H x W x r^2 stack into an (H r) x (W r) x 1 image:
///   out(y r + dy, x r + dx) = stack(y, x, dy r + dx)
/// with the r x r block filled row-major from the channel axis.
inline Image pixel_shuffle(const ChannelStack& stack, int r) {
  if (r < 1) throw argument_error("pixel_shuffle: factor must be at least 1");
  if (stack.channels() != r * r) {
    throw dimension_error("pixel_shuffle: stack has " + std::to_string(stack.channels()) +
                          " channels, expected r^2 = " + std::to_string(r * r));
  }
  const int h = stack.height(), w = stack.width();
  Image out(h * r, w * r, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int dy = 0; dy < r; ++dy) {
        for (int dx = 0; dx < r; ++dx) {
          out.at(y * r + dy, x * r + dx) = stack.at(y, x, dy * r + dx);
        }
      }
    }
  }
  return out;
}

/// Exact inverse of pixel_shuffle.
inline ChannelStack space_to_depth(const Image& img, int r) {
  if (r < 1) throw argument_error("space_to_depth: factor must be at least 1");
  if (img.channels() != 1) {
    throw dimension_error("space_to_depth: image must be single-channel");
  }
  if (img.height() % r != 0 || img.width() % r != 0) {
    throw dimension_error("space_to_depth: dimensions not divisible by " + std::to_string(r));
  }
  const int h = img.height() / r, w = img.width() / r;
  ChannelStack stack(h, w, r * r);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int dy = 0; dy < r; ++dy) {
        for (int dx = 0; dx < r; ++dx) {
          stack.at(y, x, dy * r + dx) = img.at(y * r + dy, x * r + dx);
        }
      }
    }
  }
  return stack;
}

/// Averages each r x r block; inverse of upsample_nearest on its range.
inline Image block_mean_downsample(const Image& img, int r) {
  if (r < 1) throw argument_error("block_mean_downsample: factor must be at least 1");
  if (img.height() % r != 0 || img.width() % r != 0) {
    throw dimension_error("block_mean_downsample: dimensions not divisible by " +
                          std::to_string(r));
  }
  const int h = img.height() / r, w = img.width() / r, ch = img.channels();
  Image out(h, w, ch);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        // extended precision so blocks of identical values average back exactly
        long double sum = 0.0L;
        for (int dy = 0; dy < r; ++dy) {
          for (int dx = 0; dx < r; ++dx) sum += img.at(y * r + dy, x * r + dx, c);
        }
        out.at(y, x, c) = static_cast<double>(sum / (static_cast<long double>(r) * r));
      }
    }
  }
  return out;
}

/// Bilinear upsampling with the align-corners = false convention:
/// source coordinate = (dst + 0.5)/r - 0.5, edges replicated.
inline Image upsample_bilinear(const Image& img, int r) {
  if (r < 1) throw argument_error("upsample_bilinear: factor must be at least 1");
  if (r == 1) return img;
  const int h = img.height(), w = img.width(), ch = img.channels();
  Image out(h * r, w * r, ch);
  for (int y = 0; y < h * r; ++y) {
    const double sv = std::clamp((y + 0.5) / r - 0.5, 0.0, static_cast<double>(h - 1));
    const int y0 = std::min(static_cast<int>(sv), h - 2 >= 0 ? h - 2 : 0);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fv = sv - y0;
    for (int x = 0; x < w * r; ++x) {
      const double su = std::clamp((x + 0.5) / r - 0.5, 0.0, static_cast<double>(w - 1));
      const int x0 = std::min(static_cast<int>(su), w - 2 >= 0 ? w - 2 : 0);
      const int x1 = std::min(x0 + 1, w - 1);
      const double fu = su - x0;
      for (int c = 0; c < ch; ++c) {
        out.at(y, x, c) = (1.0 - fv) * ((1.0 - fu) * img.at(y0, x0, c) + fu * img.at(y0, x1, c)) +
                          fv * ((1.0 - fu) * img.at(y1, x0, c) + fu * img.at(y1, x1, c));
      }
    }
  }
  return out;
}

}  // namespace ssimx
