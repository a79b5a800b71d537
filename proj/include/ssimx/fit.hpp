// Copyright Contributors to the ssimx Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssimx/error.hpp"
#include "ssimx/geometry.hpp"
#include "ssimx/grad.hpp"
#include "ssimx/image.hpp"
#include "ssimx/ssim.hpp"

namespace ssimx {

// ---------------------------------------------------------------------------
// Synthetic two-view scenes

enum class SceneKind { plane, slanted, step };

inline SceneKind scene_kind_from_string(const std::string& name) {
  if (name == "plane") return SceneKind::plane;
  if (name == "slanted") return SceneKind::slanted;
  if (name == "step") return SceneKind::step;
  throw argument_error("unknown scene kind '" + name + "'");
}

inline std::string to_string(SceneKind kind) {
  switch (kind) {
    case SceneKind::plane: return "plane";
    case SceneKind::slanted: return "slanted";
    case SceneKind::step: return "step";
  }
  throw argument_error("unknown scene kind");
}

/// Procedural band-limited texture over surface coordinates, smooth enough
/// for bilinear resampling yet textured in both directions.
struct TextureSpec {
  std::uint32_t seed = 1;
  double frequency = 0.28;  ///< base frequency in cycles per meter

  void validate() const {
    if (!(frequency > 0.0)) {
      throw argument_error("TextureSpec: frequency must be positive (texture may not be constant)");
    }
  }
};

/// Synthetic scene: a textured surface seen from three cameras related by
/// the given ego-motion (prev at T^-1, target at identity, next at T).
struct SceneSpec {
  SceneKind kind = SceneKind::plane;
  int height = 64;
  int width = 96;
  CameraIntrinsics intrinsics{100.0, 100.0, 47.5, 31.5};
  Pose pose = Pose::from_translation(0.1, 0.0, 0.0);  ///< T_{t -> t+1}
  double z0 = 10.0;        ///< plane depth (plane/slanted), meters
  double slope_x = 0.0;    ///< slanted: z = z0 + slope_x x + slope_y y
  double slope_y = 0.0;
  double z_left = 8.0;     ///< step: depth left of the split
  double z_right = 12.0;
  double split_x = 0.0;    ///< step boundary in world x, meters
  TextureSpec texture;
  bool scale_free = false; ///< poses carry no metric scale; evaluation median-scales

  void validate() const {
    intrinsics.validate();
    texture.validate();
    if (height < 2 || width < 2) throw argument_error("SceneSpec: resolution too small");
    if (kind != SceneKind::step && !(z0 > 0.0)) {
      throw argument_error("SceneSpec: plane depth must be positive");
    }
    if (kind == SceneKind::step && (!(z_left > 0.0) || !(z_right > 0.0))) {
      throw argument_error("SceneSpec: step depths must be positive");
    }
  }
};

inline void to_json(nlohmann::json& j, const SceneSpec& s) {
  j = nlohmann::json{{"kind", to_string(s.kind)},
                     {"resolution", {{"h", s.height}, {"w", s.width}}},
                     {"intrinsics", s.intrinsics},
                     {"pose", s.pose},
                     {"texture", {{"seed", s.texture.seed}, {"frequency", s.texture.frequency}}},
                     {"scale_free", s.scale_free}};
  switch (s.kind) {
    case SceneKind::plane:
      j["depth"] = {{"z0", s.z0}};
      break;
    case SceneKind::slanted:
      j["depth"] = {{"z0", s.z0}, {"slope_x", s.slope_x}, {"slope_y", s.slope_y}};
      break;
    case SceneKind::step:
      j["depth"] = {{"z_left", s.z_left}, {"z_right", s.z_right}, {"split_x", s.split_x}};
      break;
  }
}

inline void from_json(const nlohmann::json& j, SceneSpec& s) {
  s = SceneSpec{};
  s.kind = scene_kind_from_string(j.at("kind").get<std::string>());
  s.height = j.at("resolution").at("h").get<int>();
  s.width = j.at("resolution").at("w").get<int>();
  s.intrinsics = j.at("intrinsics").get<CameraIntrinsics>();
  s.pose = j.at("pose").get<Pose>();
  if (j.contains("texture")) {
    s.texture.seed = j["texture"].value("seed", s.texture.seed);
    s.texture.frequency = j["texture"].value("frequency", s.texture.frequency);
  }
  s.scale_free = j.value("scale_free", false);
  const auto& d = j.at("depth");
  switch (s.kind) {
    case SceneKind::plane:
      s.z0 = d.at("z0").get<double>();
      break;
    case SceneKind::slanted:
      s.z0 = d.at("z0").get<double>();
      s.slope_x = d.value("slope_x", 0.0);
      s.slope_y = d.value("slope_y", 0.0);
      break;
    case SceneKind::step:
      s.z_left = d.at("z_left").get<double>();
      s.z_right = d.at("z_right").get<double>();
      s.split_x = d.value("split_x", 0.0);
      break;
  }
  s.validate();
}

inline SceneSpec load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
    return j.get<SceneSpec>();
  } catch (const std::exception& e) {
    throw format_error("bad scene file '" + path + "': " + e.what());
  }
}

namespace detail {

// Smooth texture value at surface point (x, y); range stays inside (0, 1).
struct ProceduralTexture {
  double f = 0.3;
  double p1 = 0.0, p2 = 0.0, p3 = 0.0;

  explicit ProceduralTexture(const TextureSpec& spec) : f(spec.frequency) {
    std::mt19937 rng(spec.seed);
    std::uniform_real_distribution<double> phase(0.0, 1.0);
    p1 = phase(rng);
    p2 = phase(rng);
    p3 = phase(rng);
  }

  double operator()(double x, double y) const {
    // band limit keeps worst-case bilinear resampling error under 1e-3
    constexpr double tau = 6.283185307179586;
    return 0.5 + 0.20 * std::sin(tau * (f * x + p1)) * std::cos(tau * (0.75 * f * y + p2)) +
           0.07 * std::sin(tau * (1.15 * f * x + 0.55 * f * y + p3));
  }
};

// Depth along the pixel ray of a camera at `cam` (t-frame -> camera frame)
// to the scene surface, and the hit point in the t-frame. Returns false if
// the ray misses or hits behind the camera.
inline bool intersect_surface(const SceneSpec& spec, const Pose& cam, const Vec3& ray,
                              double* depth, Vec3* hit) {
  const Mat3 a = cam.rotation().transpose();
  const Vec3 dir = a * ray;                    // d X_t / d depth
  const Vec3 origin = -(a * cam.translation());  // camera center in t-frame

  auto solve_plane = [&](const Vec3& n, double offset, double* s) {
    const double denom = n.dot(dir);
    if (std::abs(denom) < 1e-12) return false;
    *s = (offset - n.dot(origin)) / denom;
    return *s > 1e-9;
  };

  switch (spec.kind) {
    case SceneKind::plane: {
      if (!solve_plane({0, 0, 1}, spec.z0, depth)) return false;
      *hit = origin + dir * *depth;
      return true;
    }
    case SceneKind::slanted: {
      // z = z0 + slope_x x + slope_y y  <=>  (-sx, -sy, 1) . X = z0
      if (!solve_plane({-spec.slope_x, -spec.slope_y, 1.0}, spec.z0, depth)) return false;
      *hit = origin + dir * *depth;
      return true;
    }
    case SceneKind::step: {
      double s_l = 0.0, s_r = 0.0;
      bool ok_l = solve_plane({0, 0, 1}, spec.z_left, &s_l);
      bool ok_r = solve_plane({0, 0, 1}, spec.z_right, &s_r);
      Vec3 h_l, h_r;
      if (ok_l) {
        h_l = origin + dir * s_l;
        ok_l = h_l.x < spec.split_x;
      }
      if (ok_r) {
        h_r = origin + dir * s_r;
        ok_r = h_r.x >= spec.split_x;
      }
      if (!ok_l && !ok_r) return false;
      if (ok_l && (!ok_r || s_l <= s_r)) {
        *depth = s_l;
        *hit = h_l;
      } else {
        *depth = s_r;
        *hit = h_r;
      }
      return true;
    }
  }
  return false;
}

inline Image render_view(const SceneSpec& spec, const Pose& cam, const ProceduralTexture& tex,
                         Image* depth_out) {
  Image img(spec.height, spec.width, 1);
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      double depth = 0.0;
      Vec3 hit;
      if (!intersect_surface(spec, cam, spec.intrinsics.ray(x, y), &depth, &hit)) {
        throw argument_error("render_scene: surface behind camera at pixel (" +
                             std::to_string(x) + ", " + std::to_string(y) + ")");
      }
      img.at(y, x) = tex(hit.x, hit.y);
      if (depth_out) depth_out->at(y, x) = depth;
    }
  }
  return img;
}

}  // namespace detail

/// A rendered scene: the three frames, ground-truth target depth, the two
/// ego-motions, and the intrinsics.
struct RenderedScene {
  Image i_t;
  Image i_prev;
  Image i_next;
  DepthMap d_gt;
  Pose t_prev;  ///< T_{t -> t-1}
  Pose t_next;  ///< T_{t -> t+1}
  CameraIntrinsics k;
};

/// Renders the scene analytically; the target view, neighbor views, and
/// ground-truth depth are mutually consistent, so inverse-warping a
/// neighbor under d_gt reconstructs the target up to resampling error.
inline RenderedScene render_scene(const SceneSpec& spec) {
  spec.validate();
  const detail::ProceduralTexture tex(spec.texture);
  RenderedScene out;
  out.k = spec.intrinsics;
  out.t_next = spec.pose;
  out.t_prev = spec.pose.inverse();

  Image depth(spec.height, spec.width, 1);
  out.i_t = detail::render_view(spec, Pose::identity(), tex, &depth);
  out.d_gt = DepthMap(std::move(depth));
  out.i_prev = detail::render_view(spec, out.t_prev, tex, nullptr);
  out.i_next = detail::render_view(spec, out.t_next, tex, nullptr);
  return out;
}

// ---------------------------------------------------------------------------
// Depth metrics

/// Standard monocular-depth error and accuracy statistics over valid pixels.
struct DepthMetrics {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;
  double rmse_log = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  std::size_t n_valid = 0;
};

inline void to_json(nlohmann::json& j, const DepthMetrics& m) {
  j = nlohmann::json{{"abs_rel", m.abs_rel}, {"sq_rel", m.sq_rel},
                     {"rmse", m.rmse},       {"rmse_log", m.rmse_log},
                     {"delta1", m.delta1},   {"delta2", m.delta2},
                     {"delta3", m.delta3},   {"n_valid", m.n_valid}};
}

namespace detail {

inline double median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + n / 2, v.end());
  double hi = v[n / 2];
  if (n % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + n / 2 - 1, v.end());
  return 0.5 * (v[n / 2 - 1] + hi);
}

}  // namespace detail

/// Evaluates predicted depth against ground truth up to `cap` meters.
///
/// Pixels with ground truth outside (1e-3, cap] are excluded; predictions
/// are clamped into that range. A pixel counts as accurate at threshold T
/// when max(d/d*, d*/d) < T (strict, so the exact boundary does not count).
inline DepthMetrics evaluate_depth(const DepthMap& d, const DepthMap& d_gt, double cap = 80.0,
                                   bool median_scale = false) {
  if (d.height() != d_gt.height() || d.width() != d_gt.width()) {
    throw dimension_error("evaluate_depth: shapes differ");
  }
  constexpr double kMinDepth = 1e-3;

  std::vector<double> pred, gt;
  pred.reserve(d.depth().size());
  gt.reserve(d.depth().size());
  for (std::size_t i = 0; i < d.depth().size(); ++i) {
    const double g = d_gt.depth().raw()[i];
    if (g > kMinDepth && g <= cap) {
      pred.push_back(d.depth().raw()[i]);
      gt.push_back(g);
    }
  }
  if (pred.empty()) {
    throw degenerate_input_error("evaluate_depth: no pixel has ground truth in range");
  }

  if (median_scale) {
    const double scale = detail::median(gt) / detail::median(pred);
    for (double& p : pred) p *= scale;
  }

  DepthMetrics m;
  m.n_valid = pred.size();
  double se = 0.0, se_log = 0.0;
  std::size_t d1 = 0, d2 = 0, d3 = 0;
  const double t1 = 1.25, t2 = 1.25 * 1.25, t3 = 1.25 * 1.25 * 1.25;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = std::clamp(pred[i], kMinDepth, cap);
    const double g = gt[i];
    const double diff = p - g;
    m.abs_rel += std::abs(diff) / g;
    m.sq_rel += diff * diff / g;
    se += diff * diff;
    const double dl = std::log(p) - std::log(g);
    se_log += dl * dl;
    const double ratio = std::max(p / g, g / p);
    if (ratio < t1) ++d1;
    if (ratio < t2) ++d2;
    if (ratio < t3) ++d3;
  }
  const double n = static_cast<double>(m.n_valid);
  m.abs_rel /= n;
  m.sq_rel /= n;
  m.rmse = std::sqrt(se / n);
  m.rmse_log = std::sqrt(se_log / n);
  m.delta1 = static_cast<double>(d1) / n;
  m.delta2 = static_cast<double>(d2) / n;
  m.delta3 = static_cast<double>(d3) / n;
  return m;
}

// ---------------------------------------------------------------------------
// Depth fitting

/// Settings for the direct depth-grid optimization.
struct FitConfig {
  LossKind kind = LossKind::loss_a;
  SsimConfig ssim;
  double smoothness_weight = 1e-3;
  double step_size = 1.0;   ///< initial step on the pixel-count-scaled gradient
  int iterations = 500;
  double init_depth = 20.0; ///< constant initialization, meters

  void validate() const {
    ssim.validate();
    if (kind == LossKind::mae) {
      throw argument_error("FitConfig: residual kind must be baseline, m, or a");
    }
    if (smoothness_weight < 0.0) throw argument_error("FitConfig: smoothness weight < 0");
    if (!(step_size > 0.0)) throw argument_error("FitConfig: step size must be positive");
    if (iterations < 0) throw argument_error("FitConfig: iteration budget must be >= 0");
    if (!(init_depth > 0.0)) throw argument_error("FitConfig: init depth must be positive");
  }
};

inline void to_json(nlohmann::json& j, const FitConfig& c) {
  j = nlohmann::json{{"kind", to_string(c.kind)},
                     {"ssim", c.ssim},
                     {"smoothness_weight", c.smoothness_weight},
                     {"step_size", c.step_size},
                     {"iterations", c.iterations},
                     {"init_depth", c.init_depth}};
}

inline void from_json(const nlohmann::json& j, FitConfig& c) {
  c = FitConfig{};
  if (j.contains("kind")) c.kind = loss_kind_from_string(j["kind"].get<std::string>());
  if (j.contains("ssim")) c.ssim = j["ssim"].get<SsimConfig>();
  c.smoothness_weight = j.value("smoothness_weight", c.smoothness_weight);
  c.step_size = j.value("step_size", c.step_size);
  c.iterations = j.value("iterations", c.iterations);
  c.init_depth = j.value("init_depth", c.init_depth);
  c.validate();
}

struct FitResult {
  DepthMap depth;
  std::vector<double> history;  ///< loss at initialization, then per accepted step
  std::size_t iterations_run = 0;
};

namespace detail {

struct FitEval {
  double loss = 0.0;
  Image grad_z;  // d(loss)/d(log depth), filled only by the full evaluation
};

inline double fit_loss_only(const Image& i_t, const Image& i_prev, const Image& i_next,
                            const CameraIntrinsics& k, const Pose& t_prev, const Pose& t_next,
                            const FitConfig& cfg, const Image& z) {
  Image depth = z;
  for (double& v : depth.raw()) v = std::exp(v);
  const DepthMap d{std::move(depth)};
  const double photo =
      photometric_loss(i_t, i_prev, i_next, d, t_prev, t_next, k, cfg.kind, cfg.ssim).scalar;
  if (cfg.smoothness_weight == 0.0) return photo;
  return photo + cfg.smoothness_weight * smoothness_loss(d, i_t).scalar;
}

inline FitEval fit_eval(const Image& i_t, const Image& i_prev, const Image& i_next,
                        const CameraIntrinsics& k, const Pose& t_prev, const Pose& t_next,
                        const FitConfig& cfg, const Image& z) {
  const int h = z.height(), w = z.width();
  Image depth = z;
  for (double& v : depth.raw()) v = std::exp(v);
  const DepthMap d{std::move(depth)};

  Image dprev_dz, dnext_dz;
  const PhotometricResult photo = photometric_detail(
      i_t, i_prev, i_next, d, t_prev, t_next, k, cfg.kind, cfg.ssim, &dprev_dz, &dnext_dz);

  FitEval out;
  out.loss = photo.report.scalar;
  out.grad_z = Image(h, w, 1);

  const double n = static_cast<double>(photo.report.n_valid);
  for (const auto& [winner, warped, dwarp_dz] :
       {std::tie(photo.winner_prev, photo.warped_prev, dprev_dz),
        std::tie(photo.winner_next, photo.warped_next, dnext_dz)}) {
    const GradientPair g =
        grad_loss_weighted(cfg.kind, i_t, warped.image, cfg.ssim, winner, n);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int c = 0; c < i_t.channels(); ++c) {
          acc += g.grad_b.at(y, x, c) * dwarp_dz.at(y, x, c);
        }
        out.grad_z.at(y, x) += acc;
      }
    }
  }

  if (cfg.smoothness_weight > 0.0) {
    out.loss += cfg.smoothness_weight * smoothness_loss(d, i_t).scalar;
    const Image gs = smoothness_grad_disparity(d, i_t);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        // disparity = exp(-z), so d(disp)/dz = -disp
        out.grad_z.at(y, x) -= cfg.smoothness_weight * gs.at(y, x) / d.at(y, x);
      }
    }
  }
  return out;
}

}  // namespace detail

namespace detail {

// Nearest upsampling of a block-constant log-depth grid to full resolution.
inline Image expand_level(const Image& coarse, int factor, int h, int w) {
  Image z(h, w, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) z.at(y, x) = coarse.at(y / factor, x / factor);
  }
  return z;
}

}  // namespace detail

/// Gradient descent on a log-depth grid against the photometric +
/// smoothness objective, with step halving on any loss increase.
///
/// The descent runs coarse to fine: the grid starts block-constant and each
/// level doubles its resolution, always scoring the same full-resolution
/// objective (the coarse gradient is the block sum of the per-pixel one).
/// The plain per-pixel descent stalls in kink-dominated local minima of the
/// minimum-of-residuals objective; riding the coarse modes first follows
/// its smooth large-scale valley. Accepted steps never increase the loss,
/// so the recorded history is non-increasing across levels too. Throws
/// divergence_error if the loss ever evaluates non-finite.
inline FitResult fit_depth(const Image& i_t, const Image& i_prev, const Image& i_next,
                           const CameraIntrinsics& k, const Pose& t_prev, const Pose& t_next,
                           const FitConfig& cfg) {
  cfg.validate();
  const int h = i_t.height(), w = i_t.width();

  std::vector<int> factors{1};
  while (h / (2 * factors.back()) >= 4 && w / (2 * factors.back()) >= 4) {
    factors.push_back(2 * factors.back());
  }
  std::reverse(factors.begin(), factors.end());  // coarsest first

  Image z(h, w, 1, std::log(cfg.init_depth));
  detail::FitEval cur = detail::fit_eval(i_t, i_prev, i_next, k, t_prev, t_next, cfg, z);
  if (!std::isfinite(cur.loss)) {
    throw divergence_error(0, "fit_depth: non-finite loss at initialization");
  }

  FitResult result;
  result.history.push_back(cur.loss);
  int used = 0;

  for (std::size_t level = 0; level < factors.size(); ++level) {
    const int r = factors[level];
    const int hc = (h + r - 1) / r, wc = (w + r - 1) / r;
    const int remaining_levels = static_cast<int>(factors.size() - level);
    const int budget = (cfg.iterations - used) / remaining_levels +
                       (level + 1 == factors.size() ? (cfg.iterations - used) % remaining_levels
                                                    : 0);
    Image zc(hc, wc, 1);
    for (int y = 0; y < hc; ++y) {
      for (int x = 0; x < wc; ++x) zc.at(y, x) = z.at(std::min(y * r, h - 1), std::min(x * r, w - 1));
    }
    const double scale = static_cast<double>(hc) * wc;
    double step = cfg.step_size;
    const double step_cap = cfg.step_size * 64.0;

    for (int it = 0; it < budget; ++it) {
      Image gc(hc, wc, 1);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) gc.at(y / r, x / r) += cur.grad_z.at(y, x);
      }
      Image trial(hc, wc, 1);
      double trial_loss = 0.0;
      bool accepted = false;
      while (step > 1e-14) {
        for (std::size_t i = 0; i < zc.size(); ++i) {
          trial.raw()[i] = zc.raw()[i] - step * scale * gc.raw()[i];
        }
        trial_loss = detail::fit_loss_only(i_t, i_prev, i_next, k, t_prev, t_next, cfg,
                                           detail::expand_level(trial, r, h, w));
        if (std::isfinite(trial_loss) && trial_loss <= cur.loss) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;  // no descent at any step size: level converged

      zc = trial;
      z = detail::expand_level(zc, r, h, w);
      cur = detail::fit_eval(i_t, i_prev, i_next, k, t_prev, t_next, cfg, z);
      ++used;
      if (!std::isfinite(cur.loss)) {
        throw divergence_error(static_cast<std::size_t>(used), "fit_depth: non-finite loss");
      }
      result.history.push_back(cur.loss);
      result.iterations_run = static_cast<std::size_t>(used);
      step = std::min(step * 1.25, step_cap);
    }
  }

  Image depth = std::move(z);
  for (double& v : depth.raw()) v = std::exp(v);
  result.depth = DepthMap(std::move(depth));
  return result;
}

inline FitResult fit_depth(const RenderedScene& scene, const FitConfig& cfg) {
  return fit_depth(scene.i_t, scene.i_prev, scene.i_next, scene.k, scene.t_prev, scene.t_next,
                   cfg);
}

// ---------------------------------------------------------------------------
// Side-by-side loss comparison

struct CompareEntry {
  std::string name;
  FitConfig config;
};

inline void write_history_csv(const std::vector<double>& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open '" + path + "'");
  out << "iter,loss\n";
  char line[64];
  for (std::size_t i = 0; i < history.size(); ++i) {
    std::snprintf(line, sizeof line, "%zu,%.17g\n", i, history[i]);
    out << line;
  }
}

/// Fits the scene once per config from identical initialization and reports
/// metrics and loss histories side by side. When `out_dir` is non-empty the
/// histories are written there as CSV and the report carries their paths.
inline nlohmann::json compare_losses(const SceneSpec& spec,
                                     const std::vector<CompareEntry>& configs,
                                     const std::string& out_dir = "") {
  if (configs.size() < 2) {
    throw argument_error("compare_losses: need at least 2 configs");
  }
  const RenderedScene scene = render_scene(spec);

  nlohmann::json report{{"scene", spec}, {"runs", nlohmann::json::array()}};
  for (const auto& entry : configs) {
    const FitResult fit = fit_depth(scene, entry.config);
    const DepthMetrics metrics =
        evaluate_depth(fit.depth, scene.d_gt, 80.0, spec.scale_free);
    nlohmann::json run{{"name", entry.name},
                       {"config", entry.config},
                       {"metrics", metrics},
                       {"final_loss", fit.history.back()},
                       {"iterations", fit.iterations_run}};
    if (!out_dir.empty()) {
      const std::string csv = out_dir + "/" + entry.name + "_history.csv";
      write_history_csv(fit.history, csv);
      run["history_csv"] = csv;
    }
    report["runs"].push_back(std::move(run));
  }
  return report;
}

}  // namespace ssimx
