// Copyright Contributors to the ssimx Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssimx/error.hpp"
#include "ssimx/image.hpp"

namespace ssimx {

/// Weights, exponents, and stabilizing constants of the SSIM loss family.
///
/// Defaults follow the settings that perform best in practice: window 3,
/// kappa = w = 0.85, unit exponents, additive weights (0.4, 0.5, 0.5, 0.7),
/// and c1 = (0.01 D)^2, c2 = (0.03 D)^2, c3 = c2 / 2 for unit dynamic range.
struct SsimConfig {
  double alpha = 1.0;  ///< luminance exponent
  double beta = 1.0;   ///< contrast exponent
  double gamma = 1.0;  ///< structure exponent
  double w_l = 0.5;    ///< additive luminance weight
  double w_c = 0.5;    ///< additive contrast weight
  double w_s = 0.7;    ///< additive structure weight
  double kappa = 0.85; ///< SSIM share of the baseline residual blend
  double w = 0.85;     ///< SSIM share of the multiplicative loss blend
  double w_1 = 0.4;    ///< MAE weight of the additive loss
  int window = 3;
  Padding padding = Padding::reflect;
  double c1 = 1e-4;
  double c2 = 9e-4;
  double c3 = 4.5e-4;

  void validate() const {
    if (alpha < 0 || beta < 0 || gamma < 0 || w_l < 0 || w_c < 0 || w_s < 0 || w_1 < 0) {
      throw argument_error("SsimConfig: exponents and weights must be nonnegative");
    }
    if (kappa < 0 || kappa > 1 || w < 0 || w > 1) {
      throw argument_error("SsimConfig: kappa and w must lie in [0, 1]");
    }
    if (c1 <= 0 || c2 <= 0 || c3 <= 0) {
      throw argument_error("SsimConfig: stabilizing constants must be positive");
    }
    if (window < 1 || window % 2 == 0) {
      throw argument_error("SsimConfig: window must be a positive odd size");
    }
  }
};

inline void to_json(nlohmann::json& j, const SsimConfig& c) {
  j = nlohmann::json{{"alpha", c.alpha},   {"beta", c.beta}, {"gamma", c.gamma},
                     {"w_l", c.w_l},       {"w_c", c.w_c},   {"w_s", c.w_s},
                     {"kappa", c.kappa},   {"w", c.w},       {"w_1", c.w_1},
                     {"window", c.window}, {"c1", c.c1},     {"c2", c.c2},
                     {"c3", c.c3}};
}

inline void from_json(const nlohmann::json& j, SsimConfig& c) {
  c = SsimConfig{};
  c.alpha = j.value("alpha", c.alpha);
  c.beta = j.value("beta", c.beta);
  c.gamma = j.value("gamma", c.gamma);
  c.w_l = j.value("w_l", c.w_l);
  c.w_c = j.value("w_c", c.w_c);
  c.w_s = j.value("w_s", c.w_s);
  c.kappa = j.value("kappa", c.kappa);
  c.w = j.value("w", c.w);
  c.w_1 = j.value("w_1", c.w_1);
  c.window = j.value("window", c.window);
  c.c1 = j.value("c1", c.c1);
  c.c2 = j.value("c2", c.c2);
  c.c3 = j.value("c3", c.c3);
}

/// Per-pixel luminance, contrast, and structure similarity maps.
struct ComponentMaps {
  Image L;
  Image C;
  Image S;
};

/// Per-pixel loss map with its mean reduction over valid pixels.
struct LossReport {
  double scalar = 0.0;
  Image map;
  std::size_t n_valid = 0;
};

/// The loss variants shared by the gradient and photometric machinery.
enum class LossKind { mae, residual_baseline, loss_m, loss_a };

inline std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::mae: return "mae";
    case LossKind::residual_baseline: return "baseline";
    case LossKind::loss_m: return "m";
    case LossKind::loss_a: return "a";
  }
  throw argument_error("unknown loss kind");
}

inline LossKind loss_kind_from_string(const std::string& name) {
  if (name == "mae") return LossKind::mae;
  if (name == "baseline" || name == "residual_baseline") return LossKind::residual_baseline;
  if (name == "m" || name == "loss_m") return LossKind::loss_m;
  if (name == "a" || name == "loss_a") return LossKind::loss_a;
  throw argument_error("unknown loss kind '" + name + "'");
}

namespace detail {

inline double pow_term(double base, double e) {
  if (e == 0.0) return 1.0;
  if (e == 1.0) return base;
  return std::pow(base, e);
}

inline bool is_integer(double v) { return std::nearbyint(v) == v; }

inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// (1 + S)/2 clamped into [0, 1] against the 1e-9 Cauchy-Schwarz slack.
inline double structure_shift(double s) {
  return std::clamp(0.5 * (1.0 + s), 0.0, 1.0);
}

}  // namespace detail

/// Luminance, contrast, and structure similarity from windowed moments:
///   L = (2 mu_x mu_y + c1) / (mu_x^2 + mu_y^2 + c1)
///   C = (2 sd_x sd_y + c2) / (var_x + var_y + c2)
///   S = (cov_xy + c3) / (sd_x sd_y + c3)
inline ComponentMaps components(const WindowStatsMap& stats, const SsimConfig& config) {
  config.validate();
  const Image& mx = stats.mu_x;
  ComponentMaps cm{Image(mx.height(), mx.width(), mx.channels()),
                   Image(mx.height(), mx.width(), mx.channels()),
                   Image(mx.height(), mx.width(), mx.channels())};
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double mux = stats.mu_x.raw()[i];
    const double muy = stats.mu_y.raw()[i];
    const double vx = stats.var_x.raw()[i];
    const double vy = stats.var_y.raw()[i];
    const double cxy = stats.cov_xy.raw()[i];
    if (!std::isfinite(mux) || !std::isfinite(muy) || !std::isfinite(vx) ||
        !std::isfinite(vy) || !std::isfinite(cxy)) {
      throw numeric_error("components: non-finite window statistics");
    }
    const double sxsy = std::sqrt(vx * vy);
    cm.L.raw()[i] = (2.0 * mux * muy + config.c1) / (mux * mux + muy * muy + config.c1);
    cm.C.raw()[i] = (2.0 * sxsy + config.c2) / (vx + vy + config.c2);
    cm.S.raw()[i] = (cxy + config.c3) / (sxsy + config.c3);
  }
  return cm;
}

/// Classic multiplicative similarity L^alpha * C^beta * S^gamma.
inline Image ssim_classic(const ComponentMaps& cm, const SsimConfig& config) {
  config.validate();
  const bool integer_gamma = detail::is_integer(config.gamma);
  Image out(cm.L.height(), cm.L.width(), cm.L.channels());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double s = cm.S.raw()[i];
    if (!integer_gamma && s < 0.0) {
      throw numeric_error("ssim_classic: non-integer gamma requires nonnegative S");
    }
    out.raw()[i] = detail::pow_term(cm.L.raw()[i], config.alpha) *
                   detail::pow_term(cm.C.raw()[i], config.beta) *
                   detail::pow_term(s, config.gamma);
  }
  return out;
}

/// Multiplicative loss 1 - L^alpha * C^beta * ((1 + S)/2)^gamma.
///
/// The structure shift keeps the base nonnegative, so any gamma >= 0 is
/// valid and the map stays in [0, 1].
inline Image ssim_m(const ComponentMaps& cm, const SsimConfig& config) {
  config.validate();
  Image out(cm.L.height(), cm.L.width(), cm.L.channels());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.raw()[i] = 1.0 - detail::pow_term(cm.L.raw()[i], config.alpha) *
                             detail::pow_term(cm.C.raw()[i], config.beta) *
                             detail::pow_term(detail::structure_shift(cm.S.raw()[i]),
                                              config.gamma);
  }
  return out;
}

/// Additive loss w_l (1 - L) + w_c (1 - C) + w_s (1 - (1 + S)/2).
inline Image ssim_a(const ComponentMaps& cm, const SsimConfig& config) {
  config.validate();
  Image out(cm.L.height(), cm.L.width(), cm.L.channels());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.raw()[i] = config.w_l * (1.0 - cm.L.raw()[i]) +
                   config.w_c * (1.0 - cm.C.raw()[i]) +
                   config.w_s * (1.0 - detail::structure_shift(cm.S.raw()[i]));
  }
  return out;
}

namespace detail {

// Channel-mean per-pixel |a - b|.
inline Image mae_map(const Image& a, const Image& b) {
  Image out(a.height(), a.width(), 1);
  const int ch = a.channels();
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      double sum = 0.0;
      for (int c = 0; c < ch; ++c) sum += std::abs(a.at(y, x, c) - b.at(y, x, c));
      out.at(y, x) = sum / ch;
    }
  }
  return out;
}

// Channel-mean reduction of a per-channel map to a single plane.
inline Image channel_mean(const Image& m) {
  if (m.channels() == 1) return m;
  Image out(m.height(), m.width(), 1);
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      double sum = 0.0;
      for (int c = 0; c < m.channels(); ++c) sum += m.at(y, x, c);
      out.at(y, x) = sum / m.channels();
    }
  }
  return out;
}

inline LossReport reduce_full(Image map) {
  LossReport report;
  report.n_valid = map.pixel_count();
  double sum = 0.0;
  for (double v : map.raw()) sum += v;
  report.scalar = sum / static_cast<double>(report.n_valid);
  report.map = std::move(map);
  return report;
}

}  // namespace detail

/// Per-pixel residual map of one loss variant, channel-mean reduced:
///   mae:      |a - b|
///   baseline: (kappa/2)(1 - L C S) + (1 - kappa)|a - b|
///   m:        (1 - w)|a - b| + w (1 - L^a C^b ((1+S)/2)^g)
///   a:        w_1 |a - b| + w_l(1-L) + w_c(1-C) + w_s(1-(1+S)/2)
inline Image residual_map(LossKind kind, const Image& a, const Image& b,
                          const SsimConfig& config) {
  if (!a.same_shape(b)) throw dimension_error("residual_map: image shapes differ");
  config.validate();
  if (kind == LossKind::mae) return detail::mae_map(a, b);

  const WindowStatsMap stats = window_stats(a, b, config.window, config.padding);
  const ComponentMaps cm = components(stats, config);
  const Image mae = detail::mae_map(a, b);

  Image ssim_term(a.height(), a.width(), 1);
  double mae_weight = 0.0;
  switch (kind) {
    case LossKind::residual_baseline: {
      SsimConfig unit = config;
      unit.alpha = unit.beta = unit.gamma = 1.0;
      Image half_dssim = detail::channel_mean(ssim_classic(cm, unit));
      for (double& v : half_dssim.raw()) v = 0.5 * config.kappa * (1.0 - v);
      ssim_term = std::move(half_dssim);
      mae_weight = 1.0 - config.kappa;
      break;
    }
    case LossKind::loss_m: {
      Image m = detail::channel_mean(ssim_m(cm, config));
      for (double& v : m.raw()) v *= config.w;
      ssim_term = std::move(m);
      mae_weight = 1.0 - config.w;
      break;
    }
    case LossKind::loss_a: {
      ssim_term = detail::channel_mean(ssim_a(cm, config));
      mae_weight = config.w_1;
      break;
    }
    default:
      throw argument_error("residual_map: unknown loss kind");
  }
  for (std::size_t i = 0; i < ssim_term.size(); ++i) {
    ssim_term.raw()[i] += mae_weight * mae.raw()[i];
  }
  return ssim_term;
}

/// Baseline residual (kappa/2)(1 - SSIM) + (1 - kappa)|a - b| at unit
/// exponents, mean-reduced over all pixels.
inline LossReport residual_baseline(const Image& a, const Image& b, const SsimConfig& config) {
  return detail::reduce_full(residual_map(LossKind::residual_baseline, a, b, config));
}

/// Combined multiplicative loss (1 - w) MAE + w ssim_m, mean-reduced.
inline LossReport loss_m(const Image& a, const Image& b, const SsimConfig& config) {
  return detail::reduce_full(residual_map(LossKind::loss_m, a, b, config));
}

/// Combined additive loss w_1 MAE + ssim_a, mean-reduced.
inline LossReport loss_a(const Image& a, const Image& b, const SsimConfig& config) {
  return detail::reduce_full(residual_map(LossKind::loss_a, a, b, config));
}

/// Mean-reduced report for any loss kind.
inline LossReport loss_report(LossKind kind, const Image& a, const Image& b,
                              const SsimConfig& config) {
  return detail::reduce_full(residual_map(kind, a, b, config));
}

// ---------------------------------------------------------------------------
// Toy surfaces: loss as a function of a combined luminance/contrast factor
// x in [0, 1] and a structure value y in [-1, 1].

enum class SweepVariant { classic, m, a };

inline SweepVariant sweep_variant_from_string(const std::string& name) {
  if (name == "classic") return SweepVariant::classic;
  if (name == "m") return SweepVariant::m;
  if (name == "a") return SweepVariant::a;
  throw argument_error("unknown sweep variant '" + name + "'");
}

struct SweepGrid {
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<double> values;  // row-major over (y, x)

  double value(int yi, int xi) const { return values[yi * xs.size() + xi]; }
};

/// Closed-form surface value at one grid point.
inline double sweep_value(SweepVariant variant, const SsimConfig& config, double x, double y) {
  switch (variant) {
    case SweepVariant::classic:
      if (!detail::is_integer(config.gamma) && y < 0.0) {
        throw numeric_error("sweep: non-integer gamma requires nonnegative structure");
      }
      return detail::pow_term(x, config.alpha) * detail::pow_term(y, config.gamma);
    case SweepVariant::m:
      return 1.0 - detail::pow_term(x, config.alpha) *
                       detail::pow_term(0.5 * (1.0 + y), config.gamma);
    case SweepVariant::a:
      return config.w_c * (1.0 - x) + config.w_s * (1.0 - 0.5 * (1.0 + y));
  }
  throw argument_error("unknown sweep variant");
}

/// Samples a variant over [x0, x1] x [y0, y1] on a resolution^2 grid.
inline SweepGrid sweep_surface(SweepVariant variant, const SsimConfig& config,
                               double x0 = 0.0, double x1 = 1.0, double y0 = -1.0,
                               double y1 = 1.0, int resolution = 101) {
  if (resolution < 2) {
    throw argument_error("sweep_surface: resolution must be at least 2");
  }
  config.validate();
  SweepGrid grid;
  grid.xs.resize(resolution);
  grid.ys.resize(resolution);
  for (int i = 0; i < resolution; ++i) {
    const double t = static_cast<double>(i) / (resolution - 1);
    grid.xs[i] = x0 + t * (x1 - x0);
    grid.ys[i] = y0 + t * (y1 - y0);
  }
  grid.values.reserve(static_cast<std::size_t>(resolution) * resolution);
  for (double y : grid.ys) {
    for (double x : grid.xs) {
      grid.values.push_back(sweep_value(variant, config, x, y));
    }
  }
  return grid;
}

/// Preset surfaces matching the four toy panels: (a) unit exponents,
/// (b) even structure exponent without the shift (non-unique minimum),
/// (c) large exponents (flat away from the optimum), (d) additive form.
struct SweepPreset {
  SweepVariant variant;
  SsimConfig config;
};

inline SweepPreset sweep_preset(const std::string& name) {
  SsimConfig cfg;
  if (name == "fig2a") {
    cfg.alpha = 1.0;
    cfg.gamma = 1.0;
    return {SweepVariant::m, cfg};
  }
  if (name == "fig2b") {
    cfg.alpha = 1.0;
    cfg.gamma = 2.0;
    return {SweepVariant::classic, cfg};
  }
  if (name == "fig2c") {
    cfg.alpha = 3.0;
    cfg.gamma = 3.0;
    return {SweepVariant::m, cfg};
  }
  if (name == "fig2d") {
    cfg.w_c = 0.5;
    cfg.w_s = 0.7;
    return {SweepVariant::a, cfg};
  }
  throw argument_error("unknown sweep preset '" + name + "', expected fig2a..fig2d");
}

/// Writes a sweep as CSV with header `x,y,value`, one row per grid point.
inline void write_sweep_csv(const SweepGrid& grid, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open '" + path + "'");
  out << "x,y,value\n";
  char line[128];
  for (std::size_t yi = 0; yi < grid.ys.size(); ++yi) {
    for (std::size_t xi = 0; xi < grid.xs.size(); ++xi) {
      std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", grid.xs[xi], grid.ys[yi],
                    grid.values[yi * grid.xs.size() + xi]);
      out << line;
    }
  }
}

}  // namespace ssimx
