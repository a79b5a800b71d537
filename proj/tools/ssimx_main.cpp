// Copyright Contributors to the ssimx Project
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: compare, sweep, gradcheck, warp, fit, upsample,
// eval. JSON goes to stdout, bulk data to files. Exit codes: 1 usage,
// 2 data, 3 numeric.

#include <cstdint>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ssimx/ssimx.hpp"

namespace {

using nlohmann::json;

ssimx::Image load_any_image(const std::string& path) {
  if (path.size() > 4 && path.substr(path.size() - 4) == ".pfm") {
    return ssimx::load_pfm(path);
  }
  return ssimx::load_image(path);
}

ssimx::Image random_image(int h, int w, int ch, std::mt19937& rng) {
  ssimx::Image img(h, w, ch);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (double& v : img.raw()) v = uni(rng);
  return img;
}

struct SsimFlags {
  ssimx::SsimConfig cfg;

  void attach(CLI::App* cmd) {
    cmd->add_option("--alpha", cfg.alpha, "luminance exponent");
    cmd->add_option("--beta", cfg.beta, "contrast exponent");
    cmd->add_option("--gamma", cfg.gamma, "structure exponent");
    cmd->add_option("--wl", cfg.w_l, "additive luminance weight");
    cmd->add_option("--wc", cfg.w_c, "additive contrast weight");
    cmd->add_option("--ws", cfg.w_s, "additive structure weight");
    cmd->add_option("--w1", cfg.w_1, "MAE weight of the additive loss");
    cmd->add_option("--kappa", cfg.kappa, "SSIM share of the baseline residual");
    cmd->add_option("--w", cfg.w, "SSIM share of the multiplicative loss");
    cmd->add_option("--window", cfg.window, "odd SSIM window size");
  }
};

int run_compare(const std::string& path_a, const std::string& path_b,
                const std::string& loss, const SsimFlags& flags, const std::string& out_map,
                const std::string& out_grad_a, const std::string& out_grad_b) {
  const ssimx::Image a = load_any_image(path_a);
  const ssimx::Image b = load_any_image(path_b);
  const ssimx::LossKind kind = ssimx::loss_kind_from_string(loss);
  const ssimx::LossReport report = ssimx::loss_report(kind, a, b, flags.cfg);
  if (!out_map.empty()) ssimx::save_pfm(report.map, out_map);
  if (!out_grad_a.empty() || !out_grad_b.empty()) {
    const ssimx::GradientPair grad = ssimx::grad_loss(kind, a, b, flags.cfg);
    if (!out_grad_a.empty()) ssimx::save_pfm(grad.grad_a, out_grad_a);
    if (!out_grad_b.empty()) ssimx::save_pfm(grad.grad_b, out_grad_b);
  }
  json out{{"variant", ssimx::to_string(kind)},
           {"config", flags.cfg},
           {"scalar", report.scalar},
           {"n_valid", report.n_valid}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_sweep(const std::string& variant, const std::string& preset, const SsimFlags& flags,
              const std::string& out_csv, int resolution, double xmin, double xmax,
              double ymin, double ymax) {
  ssimx::SweepVariant v;
  ssimx::SsimConfig cfg = flags.cfg;
  if (!preset.empty()) {
    const ssimx::SweepPreset p = ssimx::sweep_preset(preset);
    v = p.variant;
    cfg = p.config;
  } else if (!variant.empty()) {
    v = ssimx::sweep_variant_from_string(variant);
  } else {
    throw ssimx::argument_error("sweep: pass --variant or --preset");
  }
  const ssimx::SweepGrid grid = ssimx::sweep_surface(v, cfg, xmin, xmax, ymin, ymax, resolution);
  ssimx::write_sweep_csv(grid, out_csv);
  json out{{"out", out_csv},
           {"rows", grid.values.size()},
           {"resolution", resolution},
           {"config", cfg}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_gradcheck(std::uint32_t seed, std::vector<std::string> sizes,
                  std::vector<std::string> losses, double eps, bool force_bug) {
  if (sizes.empty()) sizes = {"12x12"};
  if (losses.empty()) losses = {"mae", "baseline", "m", "a"};
  constexpr double kThreshold = 1e-5;

  std::mt19937 rng(seed);
  json results = json::array();
  bool pass = true;
  for (const std::string& size_str : sizes) {
    int h = 12, w = 12;
    if (std::sscanf(size_str.c_str(), "%dx%d", &h, &w) != 2 || h < 3 || w < 3) {
      throw ssimx::argument_error("gradcheck: --size must look like 12x12");
    }
    const ssimx::Image a = random_image(h, w, 1, rng);
    const ssimx::Image b = random_image(h, w, 1, rng);
    for (const std::string& name : losses) {
      const ssimx::LossKind kind = ssimx::loss_kind_from_string(name);
      ssimx::SsimConfig cfg;
      ssimx::GradientPair analytic = ssimx::grad_loss(kind, a, b, cfg);
      if (force_bug) analytic.grad_a.raw()[0] += 1e-3;  // self-test hook
      const ssimx::GradCheck check = ssimx::gradcheck(kind, a, b, cfg, eps, &analytic);
      const bool ok = check.max_rel_err < kThreshold;
      pass = pass && ok;
      results.push_back({{"kind", ssimx::to_string(kind)},
                         {"size", size_str},
                         {"max_rel_err", check.max_rel_err},
                         {"n_checked", check.n_checked},
                         {"n_masked", check.n_masked},
                         {"pass", ok}});
    }
  }
  json out{{"seed", seed},           {"eps", eps},       {"threshold", kThreshold},
           {"results", results},     {"pass", pass}};
  std::cout << out.dump(2) << "\n";
  return pass ? 0 : 3;
}

int run_warp(const std::string& src_path, const std::string& depth_path, double const_depth,
             const std::string& pose_path, const std::string& intrinsics_path,
             const std::string& out_path, const std::string& out_mask) {
  const ssimx::Image src = load_any_image(src_path);
  ssimx::DepthMap depth =
      depth_path.empty()
          ? ssimx::DepthMap::constant(src.height(), src.width(), const_depth)
          : ssimx::DepthMap(ssimx::load_pfm(depth_path));
  const ssimx::Pose pose = ssimx::load_pose(pose_path);
  ssimx::CameraIntrinsics k{static_cast<double>(std::max(src.width(), src.height())),
                            static_cast<double>(std::max(src.width(), src.height())),
                            (src.width() - 1) / 2.0, (src.height() - 1) / 2.0};
  if (!intrinsics_path.empty()) k = ssimx::load_intrinsics(intrinsics_path);

  const ssimx::WarpResult result = ssimx::warp(src, depth, k, pose);
  ssimx::save_pfm(result.image, out_path);
  if (!out_mask.empty()) ssimx::save_pfm(result.valid_mask, out_mask);

  double valid = 0.0;
  for (double v : result.valid_mask.raw()) valid += v;
  json out{{"out", out_path},
           {"h", result.image.height()},
           {"w", result.image.width()},
           {"valid_fraction", valid / result.valid_mask.pixel_count()}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_fit(const std::string& scene_path, std::vector<std::string> losses,
            const SsimFlags& flags, const std::string& out_dir, int iterations,
            double step, double init_depth, double smoothness) {
  const ssimx::SceneSpec spec = ssimx::load_scene(scene_path);
  if (losses.empty()) losses = {"a"};

  auto make_config = [&](const std::string& name) {
    ssimx::FitConfig cfg;
    cfg.kind = ssimx::loss_kind_from_string(name);
    cfg.ssim = flags.cfg;
    cfg.iterations = iterations;
    cfg.step_size = step;
    cfg.smoothness_weight = smoothness;
    cfg.init_depth = init_depth;
    return cfg;
  };

  if (losses.size() == 1) {
    const ssimx::FitConfig cfg = make_config(losses[0]);
    const ssimx::RenderedScene scene = ssimx::render_scene(spec);
    const ssimx::FitResult fit = ssimx::fit_depth(scene, cfg);
    const ssimx::DepthMetrics metrics =
        ssimx::evaluate_depth(fit.depth, scene.d_gt, 80.0, spec.scale_free);

    const std::string depth_path = out_dir + "/depth.pfm";
    const std::string history_path = out_dir + "/history.csv";
    ssimx::save_pfm(fit.depth.depth(), depth_path);
    ssimx::write_history_csv(fit.history, history_path);

    json out{{"loss", losses[0]},        {"config", cfg},
             {"metrics", metrics},       {"final_loss", fit.history.back()},
             {"iterations", fit.iterations_run}, {"depth_pfm", depth_path},
             {"history_csv", history_path}};
    std::cout << out.dump(2) << "\n";
    return 0;
  }

  std::vector<ssimx::CompareEntry> entries;
  for (const std::string& name : losses) entries.push_back({name, make_config(name)});
  const json report = ssimx::compare_losses(spec, entries, out_dir);
  std::cout << report.dump(2) << "\n";
  return 0;
}

int run_upsample(const std::string& mode, int r, const std::string& in_path,
                 const std::string& out_path) {
  ssimx::Image result;
  json in_shape;
  if (mode == "shuffle") {
    const ssimx::ChannelStack stack = ssimx::load_channel_stack(in_path);
    in_shape = {{"h", stack.height()}, {"w", stack.width()}, {"c", stack.channels()}};
    result = ssimx::pixel_shuffle(stack, r);
  } else {
    const ssimx::Image img = load_any_image(in_path);
    in_shape = {{"h", img.height()}, {"w", img.width()}, {"c", img.channels()}};
    if (mode == "nearest") {
      result = ssimx::upsample_nearest(img, r);
    } else if (mode == "bilinear") {
      result = ssimx::upsample_bilinear(img, r);
    } else {
      throw ssimx::argument_error("upsample: mode must be nearest, shuffle, or bilinear");
    }
  }
  ssimx::save_pfm(result, out_path);
  json out{{"mode", mode},
           {"r", r},
           {"in", in_shape},
           {"out", {{"h", result.height()}, {"w", result.width()}, {"c", result.channels()}}},
           {"out_path", out_path}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_eval(const std::string& pred_path, const std::string& gt_path, double cap,
             bool median_scale) {
  const ssimx::DepthMap pred{ssimx::load_pfm(pred_path)};
  const ssimx::DepthMap gt{ssimx::load_pfm(gt_path)};
  const ssimx::DepthMetrics m = ssimx::evaluate_depth(pred, gt, cap, median_scale);
  std::cout << json(m).dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decomposed SSIM losses, photometric depth fitting, and sub-pixel upsampling"};
  app.require_subcommand(1);

  // compare
  std::string cmp_a, cmp_b, cmp_loss = "a", cmp_out_map, cmp_grad_a, cmp_grad_b;
  SsimFlags cmp_flags;
  CLI::App* compare = app.add_subcommand("compare", "loss between two images");
  compare->add_option("a", cmp_a, "first image (PNG/PGM)")->required();
  compare->add_option("b", cmp_b, "second image (PNG/PGM)")->required();
  compare->add_option("--loss", cmp_loss, "baseline | m | a | mae");
  compare->add_option("--out-map", cmp_out_map, "write the per-pixel loss map as PFM");
  compare->add_option("--out-grad-a", cmp_grad_a, "write d(loss)/d(a) as PFM");
  compare->add_option("--out-grad-b", cmp_grad_b, "write d(loss)/d(b) as PFM");
  cmp_flags.attach(compare);

  // sweep
  std::string sw_variant, sw_preset, sw_out;
  int sw_res = 101;
  double sw_xmin = 0.0, sw_xmax = 1.0, sw_ymin = -1.0, sw_ymax = 1.0;
  SsimFlags sw_flags;
  CLI::App* sweep = app.add_subcommand("sweep", "toy loss surface as CSV");
  sweep->add_option("--variant", sw_variant, "classic | m | a");
  sweep->add_option("--preset", sw_preset, "fig2a | fig2b | fig2c | fig2d");
  sweep->add_option("--out", sw_out, "output CSV path")->required();
  sweep->add_option("--resolution", sw_res, "grid points per axis");
  sweep->add_option("--xmin", sw_xmin);
  sweep->add_option("--xmax", sw_xmax);
  sweep->add_option("--ymin", sw_ymin);
  sweep->add_option("--ymax", sw_ymax);
  sw_flags.attach(sweep);

  // gradcheck
  std::uint32_t gc_seed = 1234;
  std::vector<std::string> gc_sizes;
  std::vector<std::string> gc_losses;
  double gc_eps = 1e-6;
  bool gc_force_bug = false;
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "analytic vs finite-difference gradients");
  gradcheck->add_option("--seed", gc_seed);
  gradcheck->add_option("--size", gc_sizes, "image sizes, e.g. 12x12 (repeatable)");
  gradcheck->add_option("--losses", gc_losses, "subset of mae baseline m a");
  gradcheck->add_option("--eps", gc_eps, "finite-difference step");
  gradcheck->add_flag("--force-bug", gc_force_bug,
                      "perturb one gradient term; the check must then fail");

  // warp
  std::string wp_src, wp_depth, wp_pose, wp_k, wp_out, wp_out_mask;
  double wp_const_depth = 0.0;
  CLI::App* warp = app.add_subcommand("warp", "inverse-warp a source frame through depth + pose");
  warp->add_option("--src", wp_src, "source image")->required();
  warp->add_option("--depth", wp_depth, "target depth map (PFM)");
  warp->add_option("--const-depth", wp_const_depth, "constant target depth in meters");
  warp->add_option("--pose", wp_pose, "pose JSON {rotation[9], translation[3]}")->required();
  warp->add_option("--intrinsics", wp_k, "intrinsics JSON {fx, fy, cx, cy}");
  warp->add_option("--out", wp_out, "warped image (PFM)")->required();
  warp->add_option("--out-mask", wp_out_mask, "validity mask (PFM)");

  // fit
  std::string ft_scene, ft_out_dir = ".";
  std::vector<std::string> ft_losses;
  int ft_iters = 500;
  double ft_step = 1.0, ft_init_depth = 20.0, ft_smooth = 1e-3;
  SsimFlags ft_flags;
  CLI::App* fit = app.add_subcommand("fit", "fit a depth grid to a synthetic scene");
  fit->add_option("--scene", ft_scene, "scene JSON")->required();
  fit->add_option("--loss", ft_losses, "baseline | m | a (repeat to compare)");
  fit->add_option("--out-dir", ft_out_dir, "where depth/history files go");
  fit->add_option("--iterations", ft_iters);
  fit->add_option("--step", ft_step, "initial step size");
  fit->add_option("--init-depth", ft_init_depth, "constant depth initialization (meters)");
  fit->add_option("--smoothness", ft_smooth, "edge-aware smoothness weight");
  ft_flags.attach(fit);

  // upsample
  std::string up_mode, up_in, up_out;
  int up_r = 2;
  CLI::App* upsample = app.add_subcommand("upsample", "nearest / bilinear / pixel-shuffle");
  upsample->add_option("--mode", up_mode, "nearest | shuffle | bilinear")->required();
  upsample->add_option("--r", up_r, "integer upscale factor")->required();
  upsample->add_option("--in", up_in, "input image or channel stack")->required();
  upsample->add_option("--out", up_out, "output PFM")->required();

  // eval
  std::string ev_pred, ev_gt;
  double ev_cap = 80.0;
  bool ev_median = false;
  CLI::App* eval = app.add_subcommand("eval", "depth error/accuracy metrics");
  eval->add_option("--pred", ev_pred, "predicted depth (PFM)")->required();
  eval->add_option("--gt", ev_gt, "ground-truth depth (PFM)")->required();
  eval->add_option("--cap", ev_cap, "evaluation depth cap in meters");
  eval->add_flag("--median-scale", ev_median, "median-scale predictions before scoring");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand(compare)) {
      return run_compare(cmp_a, cmp_b, cmp_loss, cmp_flags, cmp_out_map, cmp_grad_a, cmp_grad_b);
    }
    if (app.got_subcommand(sweep)) {
      return run_sweep(sw_variant, sw_preset, sw_flags, sw_out, sw_res, sw_xmin, sw_xmax,
                       sw_ymin, sw_ymax);
    }
    if (app.got_subcommand(gradcheck)) {
      return run_gradcheck(gc_seed, gc_sizes, gc_losses, gc_eps, gc_force_bug);
    }
    if (app.got_subcommand(warp)) {
      if (wp_depth.empty() && !(wp_const_depth > 0.0)) {
        throw ssimx::argument_error("warp: pass --depth or a positive --const-depth");
      }
      return run_warp(wp_src, wp_depth, wp_const_depth, wp_pose, wp_k, wp_out, wp_out_mask);
    }
    if (app.got_subcommand(fit)) {
      return run_fit(ft_scene, ft_losses, ft_flags, ft_out_dir, ft_iters, ft_step,
                     ft_init_depth, ft_smooth);
    }
    if (app.got_subcommand(upsample)) {
      return run_upsample(up_mode, up_r, up_in, up_out);
    }
    if (app.got_subcommand(eval)) {
      return run_eval(ev_pred, ev_gt, ev_cap, ev_median);
    }
  } catch (const ssimx::argument_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ssimx::numeric_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ssimx::divergence_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ssimx::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
