// Copyright Contributors to the ssimx Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ssimx/error.hpp"

namespace ssimx {

/// Dense H x W x C grid of doubles, row-major with interleaved channels.
///
/// Images loaded from files carry intensities normalized to [0, 1] with 1 or
/// 3 channels; the container itself accepts any channel count so it also
/// serves as storage for loss maps, gradients, and channel stacks.
class Image {
public:
  Image() = default;

  Image(int height, int width, int channels, double fill = 0.0)
      : height_(height), width_(width), channels_(channels) {
    if (height < 1 || width < 1 || channels < 1) {
      throw dimension_error("Image dimensions must be positive, got " +
                            std::to_string(height) + "x" + std::to_string(width) +
                            "x" + std::to_string(channels));
    }
    data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
  }

  static Image from_data(int height, int width, int channels, std::vector<double> data) {
    Image img(height, width, channels);
    if (data.size() != img.data_.size()) {
      throw dimension_error("Image data size " + std::to_string(data.size()) +
                            " does not match shape");
    }
    img.data_ = std::move(data);
    return img;
  }

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * width_; }

  double& at(int y, int x, int c = 0) { return data_[index(y, x, c)]; }
  double at(int y, int x, int c = 0) const { return data_[index(y, x, c)]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  bool same_shape(const Image& other) const {
    return height_ == other.height_ && width_ == other.width_ &&
           channels_ == other.channels_;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](double v) { return std::isfinite(v); });
  }

  double mean() const {
    double sum = 0.0;
    for (double v : data_) sum += v;
    return data_.empty() ? 0.0 : sum / static_cast<double>(data_.size());
  }

private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// Stack of r^2 channel planes destined for pixel-shuffle rearrangement.
using ChannelStack = Image;

/// Border handling for windowed statistics.
///
/// `reflect` mirrors without repeating the edge sample (index -1 maps to 1),
/// `replicate` clamps to the edge.
enum class Padding { reflect, replicate };

/// Maps an out-of-range index into [0, n) under the given padding mode.
inline int pad_index(int i, int n, Padding mode) {
  if (mode == Padding::replicate) {
    return std::clamp(i, 0, n - 1);
  }
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

/// Per-pixel windowed first and second moments of an image pair.
///
/// Variances use the population convention E[x^2] - E[x]^2 over the window
/// and are clamped at zero against rounding.
struct WindowStatsMap {
  Image mu_x;
  Image mu_y;
  Image var_x;
  Image var_y;
  Image cov_xy;
};

inline void check_window(const Image& a, const Image& b, int window) {
  if (!a.same_shape(b)) {
    throw dimension_error("window_stats: image shapes differ");
  }
  if (window < 1 || window % 2 == 0) {
    throw argument_error("window_stats: window must be a positive odd size, got " +
                         std::to_string(window));
  }
  if (window > a.height() || window > a.width()) {
    throw dimension_error("window_stats: window " + std::to_string(window) +
                          " exceeds image " + std::to_string(a.height()) + "x" +
                          std::to_string(a.width()));
  }
}

/// Box-window means, variances, and covariance of (a, b) at every pixel.
inline WindowStatsMap window_stats(const Image& a, const Image& b, int window = 3,
                                   Padding padding = Padding::reflect) {
  check_window(a, b, window);
  const int h = a.height(), w = a.width(), ch = a.channels();
  const int r = window / 2;
  const double inv_area = 1.0 / (static_cast<double>(window) * window);

  WindowStatsMap s{Image(h, w, ch), Image(h, w, ch), Image(h, w, ch),
                   Image(h, w, ch), Image(h, w, ch)};

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
        for (int dy = -r; dy <= r; ++dy) {
          const int yy = pad_index(y + dy, h, padding);
          for (int dx = -r; dx <= r; ++dx) {
            const int xx = pad_index(x + dx, w, padding);
            const double va = a.at(yy, xx, c);
            const double vb = b.at(yy, xx, c);
            sa += va;
            sb += vb;
            saa += va * va;
            sbb += vb * vb;
            sab += va * vb;
          }
        }
        const double mx = sa * inv_area;
        const double my = sb * inv_area;
        // second moments below fp-noise scale snap to zero so identical
        // windows yield exact identities downstream
        constexpr double kNoise = 1e-15;
        const double vx = saa * inv_area - mx * mx;
        const double vy = sbb * inv_area - my * my;
        const double cxy = sab * inv_area - mx * my;
        s.mu_x.at(y, x, c) = mx;
        s.mu_y.at(y, x, c) = my;
        s.var_x.at(y, x, c) = vx < kNoise ? 0.0 : vx;
        s.var_y.at(y, x, c) = vy < kNoise ? 0.0 : vy;
        s.cov_xy.at(y, x, c) = std::abs(cxy) < kNoise ? 0.0 : cxy;
      }
    }
  }
  return s;
}

}  // namespace ssimx
