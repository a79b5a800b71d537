// Copyright Contributors to the ssimx Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssimx/error.hpp"
#include "ssimx/image.hpp"
#include "ssimx/ssim.hpp"

namespace ssimx {

/// Gradient of a scalar loss with respect to both input images.
struct GradientPair {
  Image grad_a;
  Image grad_b;
};

/// Partial derivatives of a per-pixel loss with respect to (L, C, S).
struct ComponentPartials {
  double dL = 0.0;
  double dC = 0.0;
  double dS = 0.0;
};

namespace detail {

// d(x^e)/dx with the e = 0 and e = 1 cases handled exactly.
inline double pow_deriv(double base, double e) {
  if (e == 0.0) return 0.0;
  if (e == 1.0) return 1.0;
  return e * std::pow(base, e - 1.0);
}

// Derivative of the clamped structure shift (1 + S)/2; zero outside [-1, 1].
inline double structure_shift_deriv(double s) {
  return (s >= -1.0 && s <= 1.0) ? 0.5 : 0.0;
}

inline double mae_weight(LossKind kind, const SsimConfig& cfg) {
  switch (kind) {
    case LossKind::mae: return 1.0;
    case LossKind::residual_baseline: return 1.0 - cfg.kappa;
    case LossKind::loss_m: return 1.0 - cfg.w;
    case LossKind::loss_a: return cfg.w_1;
  }
  throw argument_error("unknown loss kind");
}

}  // namespace detail

/// Partials of the multiplicative loss 1 - L^a C^b ((1+S)/2)^g.
inline ComponentPartials ssim_m_partials(const SsimConfig& cfg, double L, double C, double S) {
  const double sp = detail::structure_shift(S);
  const double pl = detail::pow_term(L, cfg.alpha);
  const double pc = detail::pow_term(C, cfg.beta);
  const double ps = detail::pow_term(sp, cfg.gamma);
  ComponentPartials p;
  p.dL = -detail::pow_deriv(L, cfg.alpha) * pc * ps;
  p.dC = -pl * detail::pow_deriv(C, cfg.beta) * ps;
  p.dS = -pl * pc * detail::pow_deriv(sp, cfg.gamma) * detail::structure_shift_deriv(S);
  return p;
}

/// Partials of the additive loss: constant (-w_l, -w_c, -w_s/2) inside the
/// component ranges, independent of (L, C, S).
inline ComponentPartials ssim_a_partials(const SsimConfig& cfg, double /*L*/, double /*C*/,
                                         double S) {
  return {-cfg.w_l, -cfg.w_c, -cfg.w_s * detail::structure_shift_deriv(S)};
}

namespace detail {

// Partials of the SSIM-side term of each loss kind (MAE handled separately).
inline ComponentPartials loss_partials(LossKind kind, const SsimConfig& cfg, double L,
                                       double C, double S) {
  switch (kind) {
    case LossKind::mae:
      return {};
    case LossKind::residual_baseline: {
      const double k2 = 0.5 * cfg.kappa;
      return {-k2 * C * S, -k2 * L * S, -k2 * L * C};
    }
    case LossKind::loss_m: {
      ComponentPartials p = ssim_m_partials(cfg, L, C, S);
      return {cfg.w * p.dL, cfg.w * p.dC, cfg.w * p.dS};
    }
    case LossKind::loss_a:
      return ssim_a_partials(cfg, L, C, S);
  }
  throw argument_error("unknown loss kind");
}

// Adjoint of the box average: scatters g back through the padded tap map.
inline void scatter_box(const Image& g, int window, Padding padding, Image& acc) {
  const int h = g.height(), w = g.width(), ch = g.channels();
  const int r = window / 2;
  const double inv_area = 1.0 / (static_cast<double>(window) * window);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        const double v = g.at(y, x, c) * inv_area;
        if (v == 0.0) continue;
        for (int dy = -r; dy <= r; ++dy) {
          const int yy = pad_index(y + dy, h, padding);
          for (int dx = -r; dx <= r; ++dx) {
            acc.at(yy, pad_index(x + dx, w, padding), c) += v;
          }
        }
      }
    }
  }
}

}  // namespace detail

/// Exact gradient of the weighted mean loss (1/n) sum_p weight_p * loss_p
/// with respect to both images, via the chain rule through the windowed
/// moments. `weights` is a single-channel per-pixel coefficient map.
inline GradientPair grad_loss_weighted(LossKind kind, const Image& a, const Image& b,
                                       const SsimConfig& config, const Image& weights,
                                       double n) {
  if (!a.same_shape(b)) throw dimension_error("grad_loss: image shapes differ");
  if (weights.height() != a.height() || weights.width() != a.width() ||
      weights.channels() != 1) {
    throw dimension_error("grad_loss: weight map must be a single-channel H x W grid");
  }
  if (n <= 0) throw argument_error("grad_loss: pixel count must be positive");
  config.validate();

  const int h = a.height(), w = a.width(), ch = a.channels();
  GradientPair out{Image(h, w, ch), Image(h, w, ch)};

  // Pointwise MAE part; subgradient 0 at exact ties.
  const double maew = detail::mae_weight(kind, config);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double coef = weights.at(y, x) / (n * ch);
      if (coef == 0.0) continue;
      for (int c = 0; c < ch; ++c) {
        const double s = detail::sign(a.at(y, x, c) - b.at(y, x, c));
        out.grad_a.at(y, x, c) += coef * maew * s;
        out.grad_b.at(y, x, c) -= coef * maew * s;
      }
    }
  }
  if (kind == LossKind::mae) return out;

  const int win = config.window;
  check_window(a, b, win);

  // Raw second moments alongside the stats so the clamp state is known.
  const WindowStatsMap st = window_stats(a, b, win, config.padding);

  Image g_mx(h, w, ch), g_my(h, w, ch), g_pxx(h, w, ch), g_pyy(h, w, ch), g_pxy(h, w, ch);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double coef = weights.at(y, x) / (n * ch);
      if (coef == 0.0) continue;
      for (int c = 0; c < ch; ++c) {
        const double mx = st.mu_x.at(y, x, c);
        const double my = st.mu_y.at(y, x, c);
        const double vx = st.var_x.at(y, x, c);
        const double vy = st.var_y.at(y, x, c);
        const double cxy = st.cov_xy.at(y, x, c);

        // variance snapped to zero means the chain through it is flat
        const bool open_x = vx > 0.0;
        const bool open_y = vy > 0.0;

        const double sxsy = std::sqrt(vx * vy);
        const double NL = 2.0 * mx * my + config.c1;
        const double DL = mx * mx + my * my + config.c1;
        const double NC = 2.0 * sxsy + config.c2;
        const double DC = vx + vy + config.c2;
        const double NS = cxy + config.c3;
        const double DS = sxsy + config.c3;

        const double L = NL / DL, C = NC / DC, S = NS / DS;
        const ComponentPartials g = detail::loss_partials(kind, config, L, C, S);

        const double dLdmx = 2.0 * (my * DL - NL * mx) / (DL * DL);
        const double dLdmy = 2.0 * (mx * DL - NL * my) / (DL * DL);
        // Subgradient 0 for the sqrt factor at zero variance.
        const double dsxsy_dvx = sxsy > 0.0 ? vy / (2.0 * sxsy) : 0.0;
        const double dsxsy_dvy = sxsy > 0.0 ? vx / (2.0 * sxsy) : 0.0;
        const double dCdvx = (2.0 * dsxsy_dvx * DC - NC) / (DC * DC);
        const double dCdvy = (2.0 * dsxsy_dvy * DC - NC) / (DC * DC);
        const double dSdc = 1.0 / DS;
        const double dSdvx = -NS * dsxsy_dvx / (DS * DS);
        const double dSdvy = -NS * dsxsy_dvy / (DS * DS);

        const double via_vx = g.dC * dCdvx + g.dS * dSdvx;
        const double via_vy = g.dC * dCdvy + g.dS * dSdvy;
        const double via_c = g.dS * dSdc;

        g_mx.at(y, x, c) = coef * (g.dL * dLdmx + (open_x ? via_vx * -2.0 * mx : 0.0) +
                                   via_c * -my);
        g_my.at(y, x, c) = coef * (g.dL * dLdmy + (open_y ? via_vy * -2.0 * my : 0.0) +
                                   via_c * -mx);
        g_pxx.at(y, x, c) = coef * (open_x ? via_vx : 0.0);
        g_pyy.at(y, x, c) = coef * (open_y ? via_vy : 0.0);
        g_pxy.at(y, x, c) = coef * via_c;
      }
    }
  }

  Image s_mx(h, w, ch), s_my(h, w, ch), s_pxx(h, w, ch), s_pyy(h, w, ch), s_pxy(h, w, ch);
  detail::scatter_box(g_mx, win, config.padding, s_mx);
  detail::scatter_box(g_my, win, config.padding, s_my);
  detail::scatter_box(g_pxx, win, config.padding, s_pxx);
  detail::scatter_box(g_pyy, win, config.padding, s_pyy);
  detail::scatter_box(g_pxy, win, config.padding, s_pxy);

  for (std::size_t i = 0; i < out.grad_a.size(); ++i) {
    out.grad_a.raw()[i] += s_mx.raw()[i] + 2.0 * a.raw()[i] * s_pxx.raw()[i] +
                           b.raw()[i] * s_pxy.raw()[i];
    out.grad_b.raw()[i] += s_my.raw()[i] + 2.0 * b.raw()[i] * s_pyy.raw()[i] +
                           a.raw()[i] * s_pxy.raw()[i];
  }
  return out;
}

/// Gradient of the mean-reduced loss over all pixels.
inline GradientPair grad_loss(LossKind kind, const Image& a, const Image& b,
                              const SsimConfig& config) {
  Image ones(a.height(), a.width(), 1, 1.0);
  return grad_loss_weighted(kind, a, b, config, ones,
                            static_cast<double>(a.pixel_count()));
}

/// Central finite-difference gradient of an arbitrary scalar image
/// functional: (f(a + eps e_i) - f(a - eps e_i)) / (2 eps) per entry.
inline Image fd_gradient(const std::function<double(const Image&)>& loss_fn, const Image& a,
                         double eps = 1e-6) {
  if (!(eps > 0.0)) throw argument_error("fd_gradient: eps must be positive");
  Image grad(a.height(), a.width(), a.channels());
  Image probe = a;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double v = a.raw()[i];
    probe.raw()[i] = v + eps;
    const double fp = loss_fn(probe);
    probe.raw()[i] = v - eps;
    const double fm = loss_fn(probe);
    probe.raw()[i] = v;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw numeric_error("fd_gradient: non-finite loss evaluation");
    }
    grad.raw()[i] = (fp - fm) / (2.0 * eps);
  }
  return grad;
}

/// Result of checking an analytic gradient against the FD oracle.
struct GradCheck {
  double max_rel_err = 0.0;
  std::size_t n_checked = 0;
  std::size_t n_masked = 0;  ///< entries skipped for sitting on an MAE kink
};

/// Compares the analytic gradient of a loss kind with central finite
/// differences over both images.
///
/// Entries whose pointwise difference |a - b| is within 10 eps of the MAE
/// kink are masked. The elementwise relative error uses a denominator
/// floored at the larger of 1e-5 and 1e-3 times the peak gradient
/// magnitude, so near-zero entries are compared against the gradient scale
/// rather than FD roundoff.
///
/// `analytic_override` substitutes a precomputed (possibly perturbed)
/// gradient pair; the self-test hook of the gradcheck harness uses it.
inline GradCheck gradcheck(LossKind kind, const Image& a, const Image& b,
                           const SsimConfig& config, double eps = 1e-6,
                           const GradientPair* analytic_override = nullptr) {
  const GradientPair analytic =
      analytic_override ? *analytic_override : grad_loss(kind, a, b, config);
  const Image fd_a = fd_gradient(
      [&](const Image& probe) { return loss_report(kind, probe, b, config).scalar; }, a, eps);
  const Image fd_b = fd_gradient(
      [&](const Image& probe) { return loss_report(kind, a, probe, config).scalar; }, b, eps);

  const bool has_mae = detail::mae_weight(kind, config) > 0.0;
  auto masked = [&](std::size_t i) {
    return has_mae && std::abs(a.raw()[i] - b.raw()[i]) < 10.0 * eps;
  };

  GradCheck out;
  double gmax = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (masked(i)) continue;
    gmax = std::max({gmax, std::abs(analytic.grad_a.raw()[i]), std::abs(fd_a.raw()[i]),
                     std::abs(analytic.grad_b.raw()[i]), std::abs(fd_b.raw()[i])});
  }
  const double floor = std::max(1e-5, 1e-3 * gmax);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (masked(i)) {
      out.n_masked += 2;
      continue;
    }
    const double ea = std::abs(analytic.grad_a.raw()[i] - fd_a.raw()[i]) /
                      std::max({floor, std::abs(analytic.grad_a.raw()[i]),
                                std::abs(fd_a.raw()[i])});
    const double eb = std::abs(analytic.grad_b.raw()[i] - fd_b.raw()[i]) /
                      std::max({floor, std::abs(analytic.grad_b.raw()[i]),
                                std::abs(fd_b.raw()[i])});
    out.max_rel_err = std::max({out.max_rel_err, ea, eb});
    out.n_checked += 2;
  }
  return out;
}

/// One loss configuration to profile in the smoothness report.
struct GradReportConfig {
  std::string name;
  LossKind kind = LossKind::loss_a;
  SsimConfig config;
};

/// Per-config statistics of gradient magnitudes for an image pair: min,
/// max, mean of |g| over both image gradients, the fraction of entries
/// below the dead threshold, and the same fraction for the per-pixel
/// component partials.
inline nlohmann::json gradient_smoothness_report(
    const Image& a, const Image& b, const std::vector<GradReportConfig>& configs,
    double dead_threshold = 1e-8) {
  if (configs.size() < 2) {
    throw argument_error("gradient_smoothness_report: need at least 2 configs");
  }
  nlohmann::json report{{"shape",
                         {{"h", a.height()}, {"w", a.width()}, {"c", a.channels()}}},
                        {"dead_threshold", dead_threshold},
                        {"configs", nlohmann::json::array()}};

  for (const auto& entry : configs) {
    const GradientPair gp = grad_loss(entry.kind, a, b, entry.config);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0, sum = 0.0;
    std::size_t dead = 0, count = 0;
    for (const Image* g : {&gp.grad_a, &gp.grad_b}) {
      for (double v : g->raw()) {
        const double m = std::abs(v);
        lo = std::min(lo, m);
        hi = std::max(hi, m);
        sum += m;
        if (m < dead_threshold) ++dead;
        ++count;
      }
    }

    const ComponentMaps cm =
        components(window_stats(a, b, entry.config.window, entry.config.padding),
                   entry.config);
    std::size_t dead_l = 0, dead_c = 0, dead_s = 0;
    for (std::size_t i = 0; i < cm.L.size(); ++i) {
      const ComponentPartials p = detail::loss_partials(
          entry.kind, entry.config, cm.L.raw()[i], cm.C.raw()[i], cm.S.raw()[i]);
      if (std::abs(p.dL) < dead_threshold) ++dead_l;
      if (std::abs(p.dC) < dead_threshold) ++dead_c;
      if (std::abs(p.dS) < dead_threshold) ++dead_s;
    }
    const double inv = 1.0 / static_cast<double>(cm.L.size());

    report["configs"].push_back(
        {{"name", entry.name.empty() ? to_string(entry.kind) : entry.name},
         {"kind", to_string(entry.kind)},
         {"config", entry.config},
         {"grad_abs", {{"min", lo}, {"max", hi}, {"mean", sum / count}}},
         {"dead_fraction", static_cast<double>(dead) / count},
         {"component_dead_fraction",
          {{"L", dead_l * inv}, {"C", dead_c * inv}, {"S", dead_s * inv}}}});
  }
  return report;
}

}  // namespace ssimx
