// Copyright Contributors to the ssimx Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <string>

#include <json.hpp>

#include "ssimx/error.hpp"
#include "ssimx/image.hpp"
#include "ssimx/ssim.hpp"

namespace ssimx {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
};

/// Row-major 3x3 matrix; just enough linear algebra for pinhole geometry.
struct Mat3 {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Mat3 identity() { return {}; }

  double operator()(int r, int c) const { return m[r * 3 + c]; }
  double& operator()(int r, int c) { return m[r * 3 + c]; }

  Vec3 operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }

  Mat3 operator*(const Mat3& o) const {
    Mat3 out;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        out(r, c) = (*this)(r, 0) * o(0, c) + (*this)(r, 1) * o(1, c) +
                    (*this)(r, 2) * o(2, c);
      }
    }
    return out;
  }

  Mat3 transpose() const {
    Mat3 out;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) out(r, c) = (*this)(c, r);
    }
    return out;
  }

  double det() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
  }

  static Mat3 rotation_x(double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    Mat3 r;
    r.m = {1, 0, 0, 0, c, -s, 0, s, c};
    return r;
  }
  static Mat3 rotation_y(double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    Mat3 r;
    r.m = {c, 0, s, 0, 1, 0, -s, 0, c};
    return r;
  }
  static Mat3 rotation_z(double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    Mat3 r;
    r.m = {c, -s, 0, s, c, 0, 0, 0, 1};
    return r;
  }
};

/// Pinhole intrinsics; pixel (0, 0) is the center of the top-left pixel.
struct CameraIntrinsics {
  double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;

  void validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) {
      throw argument_error("CameraIntrinsics: focal lengths must be positive");
    }
  }

  /// Back-projected ray through pixel (u, v) at unit depth (z = 1).
  Vec3 ray(double u, double v) const { return {(u - cx) / fx, (v - cy) / fy, 1.0}; }
};

/// Rigid transform X' = R X + t with an orthonormal, right-handed R.
class Pose {
public:
  Pose() = default;

  Pose(const Mat3& rotation, const Vec3& translation)
      : rotation_(rotation), translation_(translation) {
    const Mat3 rtr = rotation.transpose() * rotation;
    double err = 0.0;
    const Mat3 eye = Mat3::identity();
    for (int i = 0; i < 9; ++i) err = std::max(err, std::abs(rtr.m[i] - eye.m[i]));
    if (err > 1e-9 || std::abs(rotation.det() - 1.0) > 1e-9) {
      throw argument_error("Pose: rotation must be orthonormal with determinant +1");
    }
  }

  static Pose identity() { return {}; }

  static Pose from_translation(double tx, double ty, double tz) {
    return Pose(Mat3::identity(), {tx, ty, tz});
  }

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }

  Pose inverse() const {
    const Mat3 rt = rotation_.transpose();
    return Pose(rt, -(rt * translation_));
  }

private:
  Mat3 rotation_;
  Vec3 translation_;
};

inline void to_json(nlohmann::json& j, const Pose& p) {
  j = nlohmann::json{
      {"rotation", p.rotation().m},
      {"translation", {p.translation().x, p.translation().y, p.translation().z}}};
}

inline void from_json(const nlohmann::json& j, Pose& p) {
  Mat3 r;
  const auto rot = j.at("rotation").get<std::array<double, 9>>();
  r.m = rot;
  const auto t = j.at("translation").get<std::array<double, 3>>();
  p = Pose(r, {t[0], t[1], t[2]});
}

inline void to_json(nlohmann::json& j, const CameraIntrinsics& k) {
  j = nlohmann::json{{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}};
}

inline void from_json(const nlohmann::json& j, CameraIntrinsics& k) {
  k.fx = j.at("fx").get<double>();
  k.fy = j.at("fy").get<double>();
  k.cx = j.at("cx").get<double>();
  k.cy = j.at("cy").get<double>();
  k.validate();
}

inline Pose load_pose(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
    return j.get<Pose>();
  } catch (const std::exception& e) {
    throw format_error("bad pose file '" + path + "': " + e.what());
  }
}

inline CameraIntrinsics load_intrinsics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
    return j.get<CameraIntrinsics>();
  } catch (const std::exception& e) {
    throw format_error("bad intrinsics file '" + path + "': " + e.what());
  }
}

/// Per-pixel positive depth in meters with its reciprocal disparity view.
class DepthMap {
public:
  DepthMap() = default;

  explicit DepthMap(Image depth) : depth_(std::move(depth)) {
    if (depth_.channels() != 1) {
      throw dimension_error("DepthMap: depth must be a single-channel grid");
    }
    for (double v : depth_.raw()) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw argument_error("DepthMap: depth must be positive and finite");
      }
    }
  }

  static DepthMap constant(int height, int width, double depth) {
    return DepthMap(Image(height, width, 1, depth));
  }

  const Image& depth() const { return depth_; }
  double at(int y, int x) const { return depth_.at(y, x); }
  int height() const { return depth_.height(); }
  int width() const { return depth_.width(); }

  Image disparity() const {
    Image d = depth_;
    for (double& v : d.raw()) v = 1.0 / v;
    return d;
  }

private:
  Image depth_;
};

// ---------------------------------------------------------------------------
// Projection

struct ProjectResult {
  double u = 0.0, v = 0.0;
  double depth = 0.0;  ///< z in the target camera frame
  bool valid = false;  ///< false when the point lands behind the camera
  double du_dd = 0.0;  ///< d(u)/d(source depth)
  double dv_dd = 0.0;
};

/// Back-projects pixel (u, v) at the given depth, applies the pose, and
/// reprojects. Behind-camera points (z <= 1e-9) come back invalid.
inline ProjectResult project(double u, double v, double depth, const CameraIntrinsics& k,
                             const Pose& t) {
  k.validate();
  if (!(depth > 0.0)) throw argument_error("project: depth must be positive");
  const Vec3 ray = k.ray(u, v);
  const Vec3 q = t.rotation() * ray;  // dY/d(depth)
  const Vec3 Y = q * depth + t.translation();

  ProjectResult out;
  out.depth = Y.z;
  if (Y.z <= 1e-9) return out;
  out.valid = true;
  const double inv_z = 1.0 / Y.z;
  out.u = k.fx * Y.x * inv_z + k.cx;
  out.v = k.fy * Y.y * inv_z + k.cy;
  out.du_dd = k.fx * (q.x * Y.z - Y.x * q.z) * inv_z * inv_z;
  out.dv_dd = k.fy * (q.y * Y.z - Y.y * q.z) * inv_z * inv_z;
  return out;
}

// ---------------------------------------------------------------------------
// Bilinear sampling

struct SampleResult {
  double value = 0.0;
  double du = 0.0;  ///< exact derivative of the bilinear surface along u
  double dv = 0.0;
  bool valid = false;
};

/// Samples one channel at continuous (u, v); coordinates outside
/// [0, W-1] x [0, H-1] are invalid data, not an error.
inline SampleResult sample_bilinear(const Image& src, double u, double v, int channel) {
  SampleResult out;
  const int h = src.height(), w = src.width();
  if (!std::isfinite(u) || !std::isfinite(v)) return out;
  // coordinates a rounding error outside the grid snap back onto it
  constexpr double kEdge = 1e-9;
  if (u < 0.0 && u > -kEdge) u = 0.0;
  if (v < 0.0 && v > -kEdge) v = 0.0;
  if (u > w - 1 && u < w - 1 + kEdge) u = w - 1;
  if (v > h - 1 && v < h - 1 + kEdge) v = h - 1;
  if (u < 0.0 || v < 0.0 || u > w - 1 || v > h - 1) return out;
  int x0 = static_cast<int>(std::floor(u));
  int y0 = static_cast<int>(std::floor(v));
  if (x0 > w - 2) x0 = w - 2;  // u == w-1 lands on the last cell
  if (y0 > h - 2) y0 = h - 2;
  if (x0 < 0) x0 = 0;  // single-column / single-row images
  if (y0 < 0) y0 = 0;
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fu = u - x0;
  const double fv = v - y0;

  const double i00 = src.at(y0, x0, channel);
  const double i01 = src.at(y0, x1, channel);
  const double i10 = src.at(y1, x0, channel);
  const double i11 = src.at(y1, x1, channel);

  out.valid = true;
  out.value = (1.0 - fv) * ((1.0 - fu) * i00 + fu * i01) +
              fv * ((1.0 - fu) * i10 + fu * i11);
  out.du = (1.0 - fv) * (i01 - i00) + fv * (i11 - i10);
  out.dv = (1.0 - fu) * (i10 - i00) + fu * (i11 - i01);
  return out;
}

struct SampleGrid {
  Image values;      ///< coords shape x src channels
  Image grad_u;      ///< d(value)/du per channel
  Image grad_v;
  Image valid_mask;  ///< single channel, 1 where in bounds
};

/// Samples every (u, v) pair of a coordinate grid across all channels.
inline SampleGrid bilinear_sample(const Image& src, const Image& coords_u,
                                  const Image& coords_v) {
  if (!coords_u.same_shape(coords_v) || coords_u.channels() != 1) {
    throw dimension_error("bilinear_sample: coordinate grids must be matching H x W grids");
  }
  const int h = coords_u.height(), w = coords_u.width(), ch = src.channels();
  SampleGrid out{Image(h, w, ch), Image(h, w, ch), Image(h, w, ch), Image(h, w, 1)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool valid = true;
      for (int c = 0; c < ch; ++c) {
        const SampleResult s = sample_bilinear(src, coords_u.at(y, x), coords_v.at(y, x), c);
        out.values.at(y, x, c) = s.value;
        out.grad_u.at(y, x, c) = s.du;
        out.grad_v.at(y, x, c) = s.dv;
        valid = valid && s.valid;
      }
      out.valid_mask.at(y, x) = valid ? 1.0 : 0.0;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Warping

struct WarpResult {
  Image image;       ///< synthesized view, 0 at invalid pixels
  Image valid_mask;  ///< 1 where the projection landed in bounds with positive depth
};

/// Inverse-warps `src` into the target frame: each target pixel projects
/// through its depth and samples the source bilinearly.
///
/// When `dvalue_dlogdepth` is given it receives the per-channel derivative
/// of the warped value with respect to the log of the target depth at the
/// same pixel (zero at invalid pixels).
inline WarpResult warp(const Image& src, const DepthMap& depth_tgt, const CameraIntrinsics& k,
                       const Pose& t, Image* dvalue_dlogdepth = nullptr) {
  const int h = depth_tgt.height(), w = depth_tgt.width(), ch = src.channels();
  WarpResult out{Image(h, w, ch), Image(h, w, 1)};
  if (dvalue_dlogdepth) *dvalue_dlogdepth = Image(h, w, ch);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double d = depth_tgt.at(y, x);
      const ProjectResult pr = project(x, y, d, k, t);
      if (!pr.valid) continue;
      bool valid = true;
      for (int c = 0; c < ch; ++c) {
        const SampleResult s = sample_bilinear(src, pr.u, pr.v, c);
        valid = valid && s.valid;
        if (!valid) break;
        out.image.at(y, x, c) = s.value;
        if (dvalue_dlogdepth) {
          // chain: d(value)/d(log d) = (dI/du du/dd + dI/dv dv/dd) * d
          dvalue_dlogdepth->at(y, x, c) = (s.du * pr.du_dd + s.dv * pr.dv_dd) * d;
        }
      }
      if (valid) {
        out.valid_mask.at(y, x) = 1.0;
      } else {
        for (int c = 0; c < ch; ++c) {
          out.image.at(y, x, c) = 0.0;
          if (dvalue_dlogdepth) dvalue_dlogdepth->at(y, x, c) = 0.0;
        }
      }
    }
  }
  return out;
}

/// Shrinks a validity mask so that a pixel survives only if every window
/// member (under the same padding as the window statistics) is valid.
inline Image erode_mask(const Image& mask, int window, Padding padding) {
  const int h = mask.height(), w = mask.width();
  const int r = window / 2;
  Image out(h, w, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool ok = true;
      for (int dy = -r; dy <= r && ok; ++dy) {
        const int yy = pad_index(y + dy, h, padding);
        for (int dx = -r; dx <= r; ++dx) {
          if (mask.at(yy, pad_index(x + dx, w, padding)) == 0.0) {
            ok = false;
            break;
          }
        }
      }
      out.at(y, x) = ok ? 1.0 : 0.0;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Photometric loss

/// Everything the min-reprojection loss computes, kept for the depth-fit
/// gradient chain: warped views, eroded residual validity, and the
/// per-pixel winner masks of the minimum.
struct PhotometricResult {
  LossReport report;
  WarpResult warped_prev;
  WarpResult warped_next;
  Image valid_prev;   ///< residual validity (warp mask eroded by the window)
  Image valid_next;
  Image winner_prev;  ///< 1 where the prev-view residual enters the reduction
  Image winner_next;
};

inline PhotometricResult photometric_detail(const Image& i_t, const Image& i_prev,
                                            const Image& i_next, const DepthMap& d,
                                            const Pose& t_prev, const Pose& t_next,
                                            const CameraIntrinsics& k, LossKind residual_kind,
                                            const SsimConfig& config,
                                            Image* dprev_dlogdepth = nullptr,
                                            Image* dnext_dlogdepth = nullptr) {
  if (residual_kind == LossKind::mae) {
    throw argument_error("photometric_loss: residual kind must be baseline, m, or a");
  }
  if (!i_t.same_shape(i_prev) || !i_t.same_shape(i_next)) {
    throw dimension_error("photometric_loss: frame shapes differ");
  }
  if (d.height() != i_t.height() || d.width() != i_t.width()) {
    throw dimension_error("photometric_loss: depth shape differs from frames");
  }

  PhotometricResult res;
  res.warped_prev = warp(i_prev, d, k, t_prev, dprev_dlogdepth);
  res.warped_next = warp(i_next, d, k, t_next, dnext_dlogdepth);
  res.valid_prev = erode_mask(res.warped_prev.valid_mask, config.window, config.padding);
  res.valid_next = erode_mask(res.warped_next.valid_mask, config.window, config.padding);

  const Image r_prev = residual_map(residual_kind, i_t, res.warped_prev.image, config);
  const Image r_next = residual_map(residual_kind, i_t, res.warped_next.image, config);

  const int h = i_t.height(), w = i_t.width();
  res.winner_prev = Image(h, w, 1);
  res.winner_next = Image(h, w, 1);
  res.report.map = Image(h, w, 1);

  double sum = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool vp = res.valid_prev.at(y, x) != 0.0;
      const bool vn = res.valid_next.at(y, x) != 0.0;
      if (!vp && !vn) continue;
      double r;
      if (vp && (!vn || r_prev.at(y, x) <= r_next.at(y, x))) {
        r = r_prev.at(y, x);
        res.winner_prev.at(y, x) = 1.0;
      } else {
        r = r_next.at(y, x);
        res.winner_next.at(y, x) = 1.0;
      }
      res.report.map.at(y, x) = r;
      sum += r;
      ++n;
    }
  }
  if (n == 0) {
    throw degenerate_input_error("photometric_loss: no pixel is valid in either view");
  }
  res.report.n_valid = n;
  res.report.scalar = sum / static_cast<double>(n);
  return res;
}

/// Min-reprojection photometric loss: the per-pixel minimum of the two
/// neighbor-view residuals, mean-reduced over pixels valid in at least one
/// view.
inline LossReport photometric_loss(const Image& i_t, const Image& i_prev, const Image& i_next,
                                   const DepthMap& d, const Pose& t_prev, const Pose& t_next,
                                   const CameraIntrinsics& k, LossKind residual_kind,
                                   const SsimConfig& config) {
  return photometric_detail(i_t, i_prev, i_next, d, t_prev, t_next, k, residual_kind, config)
      .report;
}

// ---------------------------------------------------------------------------
// Edge-aware smoothness

/// Mean over pixels of |dx d| exp(-|dx I|) + |dy d| exp(-|dy I|) with
/// forward differences on the disparity d = 1/D; image gradients are
/// channel-averaged. The optional flag divides disparity by its mean first.
inline LossReport smoothness_loss(const DepthMap& depth, const Image& img,
                                  bool normalize_mean_disparity = false) {
  if (depth.height() != img.height() || depth.width() != img.width()) {
    throw dimension_error("smoothness_loss: shapes differ");
  }
  Image disp = depth.disparity();
  if (normalize_mean_disparity) {
    const double m = disp.mean();
    for (double& v : disp.raw()) v /= m;
  }

  const int h = img.height(), w = img.width(), ch = img.channels();
  LossReport report;
  report.map = Image(h, w, 1);
  double sum = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double term = 0.0;
      if (x + 1 < w) {
        double gi = 0.0;
        for (int c = 0; c < ch; ++c) gi += std::abs(img.at(y, x + 1, c) - img.at(y, x, c));
        term += std::abs(disp.at(y, x + 1) - disp.at(y, x)) * std::exp(-gi / ch);
      }
      if (y + 1 < h) {
        double gi = 0.0;
        for (int c = 0; c < ch; ++c) gi += std::abs(img.at(y + 1, x, c) - img.at(y, x, c));
        term += std::abs(disp.at(y + 1, x) - disp.at(y, x)) * std::exp(-gi / ch);
      }
      report.map.at(y, x) = term;
      sum += term;
    }
  }
  report.n_valid = img.pixel_count();
  report.scalar = sum / static_cast<double>(report.n_valid);
  return report;
}

/// Gradient of the (unnormalized) smoothness scalar with respect to the
/// disparity grid; subgradient 0 at exactly flat differences.
inline Image smoothness_grad_disparity(const DepthMap& depth, const Image& img) {
  if (depth.height() != img.height() || depth.width() != img.width()) {
    throw dimension_error("smoothness_grad_disparity: shapes differ");
  }
  const Image disp = depth.disparity();
  const int h = img.height(), w = img.width(), ch = img.channels();
  const double inv_n = 1.0 / static_cast<double>(img.pixel_count());
  Image grad(h, w, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x + 1 < w) {
        double gi = 0.0;
        for (int c = 0; c < ch; ++c) gi += std::abs(img.at(y, x + 1, c) - img.at(y, x, c));
        const double s = detail::sign(disp.at(y, x + 1) - disp.at(y, x)) *
                         std::exp(-gi / ch) * inv_n;
        grad.at(y, x + 1) += s;
        grad.at(y, x) -= s;
      }
      if (y + 1 < h) {
        double gi = 0.0;
        for (int c = 0; c < ch; ++c) gi += std::abs(img.at(y + 1, x, c) - img.at(y, x, c));
        const double s = detail::sign(disp.at(y + 1, x) - disp.at(y, x)) *
                         std::exp(-gi / ch) * inv_n;
        grad.at(y + 1, x) += s;
        grad.at(y, x) -= s;
      }
    }
  }
  return grad;
}

}  // namespace ssimx
