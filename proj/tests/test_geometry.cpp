// Copyright Contributors to the ssimx Project
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ssimx/geometry.hpp"
#include "ssimx/grad.hpp"

using namespace ssimx;

namespace {

const CameraIntrinsics kCam{100.0, 100.0, 47.5, 31.5};

// Smooth single-channel test pattern; strictly inside (0, 1).
Image sinusoid_image(int h, int w, double fx = 0.05, double fy = 0.035) {
  Image img(h, w, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.at(y, x) = 0.5 + 0.3 * std::sin(2 * M_PI * fx * x) * std::cos(2 * M_PI * fy * y) +
                     0.1 * std::sin(2 * M_PI * (0.7 * fx * x + 0.9 * fy * y));
    }
  }
  return img;
}

}  // namespace

TEST(Project, IdentityPoseIsIdentityOnCoordinates) {
  for (double depth : {0.5, 2.0, 25.0}) {
    const ProjectResult r = project(13.0, 7.0, depth, kCam, Pose::identity());
    ASSERT_TRUE(r.valid);
    EXPECT_NEAR(r.u, 13.0, 1e-9);
    EXPECT_NEAR(r.v, 7.0, 1e-9);
    EXPECT_NEAR(r.depth, depth, 1e-9);
  }
}

TEST(Project, PureXTranslationClosedForm) {
  const double tx = 0.25, depth = 5.0;
  const Pose t = Pose::from_translation(tx, 0.0, 0.0);
  const ProjectResult r = project(20.0, 11.0, depth, kCam, t);
  ASSERT_TRUE(r.valid);
  EXPECT_NEAR(r.u, 20.0 + kCam.fx * tx / depth, 1e-9);
  EXPECT_NEAR(r.v, 11.0, 1e-9);
  EXPECT_NEAR(r.depth, depth, 1e-9);
}

TEST(Project, ZTranslationAtPrincipalPoint) {
  const Pose t = Pose::from_translation(0.0, 0.0, 3.0);
  const ProjectResult r = project(kCam.cx, kCam.cy, 10.0, kCam, t);
  ASSERT_TRUE(r.valid);
  EXPECT_NEAR(r.u, kCam.cx, 1e-9);
  EXPECT_NEAR(r.v, kCam.cy, 1e-9);
  EXPECT_NEAR(r.depth, 13.0, 1e-9);
}

TEST(Project, BehindCameraIsInvalid) {
  const Pose t = Pose::from_translation(0.0, 0.0, -11.0);
  EXPECT_FALSE(project(kCam.cx, kCam.cy, 10.0, kCam, t).valid);
  EXPECT_THROW(project(10.0, 10.0, 0.0, kCam, Pose::identity()), argument_error);
  EXPECT_THROW(project(10.0, 10.0, -1.0, kCam, Pose::identity()), argument_error);
}

TEST(Project, ForwardBackwardComposition) {
  const Pose t{Mat3::rotation_y(0.02) * Mat3::rotation_x(-0.01), {0.3, -0.1, 0.2}};
  const Pose t_inv = t.inverse();
  for (double u : {5.0, 40.0, 90.0}) {
    for (double v : {3.0, 30.0, 60.0}) {
      const ProjectResult fwd = project(u, v, 8.0, kCam, t);
      ASSERT_TRUE(fwd.valid);
      const ProjectResult back = project(fwd.u, fwd.v, fwd.depth, kCam, t_inv);
      ASSERT_TRUE(back.valid);
      EXPECT_NEAR(back.u, u, 1e-6);
      EXPECT_NEAR(back.v, v, 1e-6);
      EXPECT_NEAR(back.depth, 8.0, 1e-6);
    }
  }
}

TEST(Project, DepthJacobianMatchesFd) {
  const Pose t{Mat3::rotation_y(0.03), {0.2, 0.05, -0.1}};
  const double d = 6.0, eps = 1e-5;
  const ProjectResult r = project(30.0, 20.0, d, kCam, t);
  const ProjectResult rp = project(30.0, 20.0, d + eps, kCam, t);
  const ProjectResult rm = project(30.0, 20.0, d - eps, kCam, t);
  EXPECT_NEAR(r.du_dd, (rp.u - rm.u) / (2 * eps), 1e-6);
  EXPECT_NEAR(r.dv_dd, (rp.v - rm.v) / (2 * eps), 1e-6);
}

TEST(Pose, RejectsNonRotations) {
  Mat3 scaled = Mat3::identity();
  scaled(0, 0) = 1.1;
  EXPECT_THROW(Pose(scaled, {0, 0, 0}), argument_error);

  Mat3 mirror = Mat3::identity();
  mirror(0, 0) = -1.0;  // determinant -1
  EXPECT_THROW(Pose(mirror, {0, 0, 0}), argument_error);
}

TEST(Pose, JsonRoundTripAndLoader) {
  const Pose t{Mat3::rotation_z(0.1), {0.5, -0.25, 1.5}};
  const nlohmann::json j = t;
  const Pose back = j.get<Pose>();
  for (int i = 0; i < 9; ++i) EXPECT_EQ(back.rotation().m[i], t.rotation().m[i]);
  EXPECT_EQ(back.translation().x, t.translation().x);

  const std::string path =
      (std::filesystem::temp_directory_path() / "ssimx_pose.json").string();
  std::ofstream(path) << j.dump();
  const Pose loaded = load_pose(path);
  EXPECT_EQ(loaded.translation().z, t.translation().z);
  EXPECT_THROW(load_pose("/nonexistent/pose.json"), io_error);

  std::ofstream(path) << "{\"rotation\": [1,2,3]}";
  EXPECT_THROW(load_pose(path), format_error);
}

TEST(Intrinsics, JsonLoaderAndValidation) {
  const std::string path =
      (std::filesystem::temp_directory_path() / "ssimx_k.json").string();
  std::ofstream(path) << R"({"fx": 100, "fy": 90, "cx": 47.5, "cy": 31.5})";
  const CameraIntrinsics k = load_intrinsics(path);
  EXPECT_EQ(k.fy, 90.0);
  std::ofstream(path) << R"({"fx": -1, "fy": 90, "cx": 0, "cy": 0})";
  EXPECT_THROW(load_intrinsics(path), format_error);
}

TEST(DepthMap, InvariantsAndDisparity) {
  EXPECT_THROW(DepthMap(Image(4, 4, 1, 0.0)), argument_error);
  EXPECT_THROW(DepthMap(Image(4, 4, 1, -2.0)), argument_error);
  EXPECT_THROW(DepthMap(Image(4, 4, 3, 1.0)), dimension_error);

  Image positive = oracle::random_image(6, 6, 1, 7);
  for (double& v : positive.raw()) v += 0.1;
  const DepthMap d(positive);
  const Image disp = d.disparity();
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 6; ++x) {
      EXPECT_NEAR(disp.at(y, x) * d.at(y, x), 1.0, 1e-12);
    }
  }
}

TEST(BilinearSample, NodesAndMidpoints) {
  Image src(2, 2, 1);
  src.at(0, 0) = 0.0;
  src.at(0, 1) = 1.0;
  src.at(1, 0) = 0.25;
  src.at(1, 1) = 0.75;
  EXPECT_EQ(sample_bilinear(src, 0, 0, 0).value, 0.0);
  EXPECT_EQ(sample_bilinear(src, 1, 0, 0).value, 1.0);
  EXPECT_EQ(sample_bilinear(src, 0.5, 0.0, 0).value, 0.5);
  EXPECT_TRUE(sample_bilinear(src, 1.0, 1.0, 0).valid);
  EXPECT_FALSE(sample_bilinear(src, -0.01, 0.0, 0).valid);
  EXPECT_FALSE(sample_bilinear(src, 0.0, 1.01, 0).valid);
  EXPECT_FALSE(sample_bilinear(src, std::nan(""), 0.0, 0).valid);
}

TEST(BilinearSample, SpatialGradientMatchesFd) {
  const Image src = sinusoid_image(16, 16);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> cell(0.25, 0.75);
  std::uniform_int_distribution<int> xi(1, 13), yi(1, 13);
  const double eps = 1e-7;
  for (int trial = 0; trial < 200; ++trial) {
    const double u = xi(rng) + cell(rng);  // stay inside one bilinear cell
    const double v = yi(rng) + cell(rng);
    const SampleResult s = sample_bilinear(src, u, v, 0);
    const double fdu = (sample_bilinear(src, u + eps, v, 0).value -
                        sample_bilinear(src, u - eps, v, 0).value) /
                       (2 * eps);
    const double fdv = (sample_bilinear(src, u, v + eps, 0).value -
                        sample_bilinear(src, u, v - eps, 0).value) /
                       (2 * eps);
    EXPECT_NEAR(s.du, fdu, 1e-6 * std::max(1.0, std::abs(fdu)));
    EXPECT_NEAR(s.dv, fdv, 1e-6 * std::max(1.0, std::abs(fdv)));
  }
}

TEST(BilinearSample, GridApi) {
  const Image src = sinusoid_image(8, 8);
  Image cu(3, 3, 1), cv(3, 3, 1);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 3; ++x) {
      cu.at(y, x) = 1.5 + x;
      cv.at(y, x) = 2.5 + y;
    }
  }
  cu.at(2, 2) = 50.0;  // out of bounds
  const SampleGrid grid = bilinear_sample(src, cu, cv);
  EXPECT_EQ(grid.valid_mask.at(0, 0), 1.0);
  EXPECT_EQ(grid.valid_mask.at(2, 2), 0.0);
  EXPECT_EQ(grid.values.at(2, 2), 0.0);
  EXPECT_EQ(grid.values.at(1, 1), sample_bilinear(src, 2.5, 3.5, 0).value);
}

TEST(Warp, IdentityPoseReproducesSource) {
  const Image src = sinusoid_image(12, 16);
  const DepthMap d = DepthMap::constant(12, 16, 4.0);
  const WarpResult r = warp(src, d, kCam, Pose::identity());
  for (std::size_t i = 0; i < src.size(); ++i) {
    EXPECT_NEAR(r.image.raw()[i], src.raw()[i], 1e-12);
  }
  for (double v : r.valid_mask.raw()) EXPECT_EQ(v, 1.0);
}

TEST(Warp, FrontoParallelPlaneIsExactShift) {
  // f tx / d = 100 * 0.2 / 10 = 2 pixels: the warped image must equal the
  // source re-indexed by two columns
  const Image src = sinusoid_image(20, 30);
  const DepthMap d = DepthMap::constant(20, 30, 10.0);
  const Pose t = Pose::from_translation(0.2, 0.0, 0.0);
  const WarpResult r = warp(src, d, kCam, t);
  double se = 0.0;
  int n = 0;
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 28; ++x) {
      ASSERT_EQ(r.valid_mask.at(y, x), 1.0);
      const double diff = r.image.at(y, x) - src.at(y, x + 2);
      se += diff * diff;
      ++n;
    }
    EXPECT_EQ(r.valid_mask.at(y, 29), 0.0);  // shifted out of bounds
  }
  EXPECT_LT(std::sqrt(se / n), 1e-6);
}

TEST(Warp, FractionalShiftMatchesManualLerp) {
  const Image src = sinusoid_image(10, 14);
  const DepthMap d = DepthMap::constant(10, 14, 8.0);
  const Pose t = Pose::from_translation(0.04, 0.0, 0.0);  // shift 0.5 px
  const WarpResult r = warp(src, d, kCam, t);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 13; ++x) {
      EXPECT_NEAR(r.image.at(y, x), 0.5 * (src.at(y, x) + src.at(y, x + 1)), 1e-12);
    }
  }
}

TEST(Warp, AllOutOfBoundsGivesEmptyMask) {
  const Image src = sinusoid_image(8, 8);
  const DepthMap d = DepthMap::constant(8, 8, 1.0);
  const WarpResult r = warp(src, d, kCam, Pose::from_translation(50.0, 0.0, 0.0));
  for (double v : r.valid_mask.raw()) EXPECT_EQ(v, 0.0);
}

TEST(Warp, ValidityIsMonotoneInTranslation) {
  const Image src = sinusoid_image(16, 16);
  const DepthMap d = DepthMap::constant(16, 16, 10.0);
  const WarpResult big = warp(src, d, kCam, Pose::from_translation(0.5, 0.0, 0.0));
  const WarpResult small = warp(src, d, kCam, Pose::from_translation(0.25, 0.0, 0.0));
  for (std::size_t i = 0; i < big.valid_mask.size(); ++i) {
    if (big.valid_mask.raw()[i] == 1.0) {
      EXPECT_EQ(small.valid_mask.raw()[i], 1.0);
    }
  }
}

TEST(ErodeMask, ShrinksByWindowRadius) {
  Image mask(6, 8, 1, 1.0);
  mask.at(3, 4) = 0.0;
  const Image eroded = erode_mask(mask, 3, Padding::reflect);
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      EXPECT_EQ(eroded.at(3 + dy, 4 + dx), 0.0);
    }
  }
  EXPECT_EQ(eroded.at(0, 0), 1.0);
  EXPECT_EQ(eroded.at(3, 6), 1.0);
}

TEST(Photometric, StaticSceneIdentityPosesGiveZero) {
  const Image img = sinusoid_image(16, 20);
  const DepthMap d = DepthMap::constant(16, 20, 5.0);
  const LossReport r = photometric_loss(img, img, img, d, Pose::identity(),
                                        Pose::identity(), kCam, LossKind::loss_a, {});
  EXPECT_LE(r.scalar, 1e-9);
  EXPECT_EQ(r.n_valid, img.pixel_count());
}

TEST(Photometric, SingleValidViewEqualsItsResidualMean) {
  const Image img = sinusoid_image(16, 20);
  const DepthMap d = DepthMap::constant(16, 20, 10.0);
  const Pose small = Pose::from_translation(0.1, 0.0, 0.0);
  const Pose huge = Pose::from_translation(100.0, 0.0, 0.0);  // fully invalid view
  const SsimConfig cfg;

  const PhotometricResult res = photometric_detail(
      img, img, img, d, /*t_prev=*/huge, /*t_next=*/small, kCam, LossKind::loss_a, cfg);
  for (double v : res.valid_prev.raw()) EXPECT_EQ(v, 0.0);

  const WarpResult wn = warp(img, d, kCam, small);
  const Image rn = residual_map(LossKind::loss_a, img, wn.image, cfg);
  const Image valid = erode_mask(wn.valid_mask, cfg.window, cfg.padding);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < rn.size(); ++i) {
    if (valid.raw()[i] != 0.0) {
      sum += rn.raw()[i];
      ++n;
    }
  }
  ASSERT_GT(n, 0u);
  EXPECT_DOUBLE_EQ(res.report.scalar, sum / static_cast<double>(n));
  EXPECT_EQ(res.report.n_valid, n);
}

TEST(Photometric, MinNeverExceedsEitherViewOnCommonValidSet) {
  const Image img = sinusoid_image(20, 24);
  const DepthMap d = DepthMap::constant(20, 24, 10.0);
  const Pose next = Pose::from_translation(0.15, 0.0, 0.0);
  const Pose prev = next.inverse();
  const SsimConfig cfg;

  const PhotometricResult res =
      photometric_detail(img, img, img, d, prev, next, kCam, LossKind::loss_a, cfg);
  const Image rp = residual_map(LossKind::loss_a, img, res.warped_prev.image, cfg);
  const Image rn = residual_map(LossKind::loss_a, img, res.warped_next.image, cfg);

  double min_sum = 0.0, p_sum = 0.0, n_sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < rp.size(); ++i) {
    if (res.valid_prev.raw()[i] != 0.0 && res.valid_next.raw()[i] != 0.0) {
      min_sum += std::min(rp.raw()[i], rn.raw()[i]);
      p_sum += rp.raw()[i];
      n_sum += rn.raw()[i];
      ++n;
    }
  }
  ASSERT_GT(n, 0u);
  EXPECT_LE(min_sum / n, p_sum / n + 1e-15);
  EXPECT_LE(min_sum / n, n_sum / n + 1e-15);
}

TEST(Photometric, NoValidPixelsIsDegenerateError) {
  const Image img = sinusoid_image(8, 8);
  const DepthMap d = DepthMap::constant(8, 8, 1.0);
  const Pose huge = Pose::from_translation(100.0, 0.0, 0.0);
  EXPECT_THROW(
      photometric_loss(img, img, img, d, huge, huge, kCam, LossKind::loss_a, {}),
      degenerate_input_error);
}

TEST(Photometric, MaeResidualKindRejected) {
  const Image img = sinusoid_image(8, 8);
  const DepthMap d = DepthMap::constant(8, 8, 1.0);
  EXPECT_THROW(photometric_loss(img, img, img, d, Pose::identity(), Pose::identity(), kCam,
                                LossKind::mae, {}),
               argument_error);
}

TEST(Smoothness, ConstantDisparityIsZero) {
  const Image img = sinusoid_image(10, 10);
  const DepthMap d = DepthMap::constant(10, 10, 7.0);
  EXPECT_EQ(smoothness_loss(d, img).scalar, 0.0);
}

TEST(Smoothness, RampOnConstantImage) {
  const int h = 8, w = 12;
  const double slope = 0.01;
  Image depth(h, w, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) depth.at(y, x) = 1.0 / (0.5 + slope * x);
  }
  const DepthMap d(depth);
  const Image img(h, w, 1, 0.25);
  const LossReport r = smoothness_loss(d, img);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x + 1 < w; ++x) {
      EXPECT_NEAR(r.map.at(y, x), slope, 1e-12);  // |d/dx disp| * exp(0)
    }
    EXPECT_EQ(r.map.at(y, w - 1), 0.0);
  }
}

TEST(Smoothness, EdgeDampensThePenalty) {
  const int h = 6, w = 10, edge_col = 4;
  const double slope = 0.02;
  Image depth(h, w, 1);
  Image img(h, w, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      depth.at(y, x) = 1.0 / (0.4 + slope * x);
      img.at(y, x) = x <= edge_col ? 0.0 : 1.0;  // |dx I| = 1 at the edge column
    }
  }
  const LossReport r = smoothness_loss(DepthMap(depth), img);
  EXPECT_NEAR(r.map.at(2, edge_col), slope * std::exp(-1.0), 1e-12);
  EXPECT_NEAR(r.map.at(2, 1), slope, 1e-12);
}

TEST(Smoothness, ShiftInvarianceAndLinearScaling) {
  const Image img = sinusoid_image(9, 9);
  Image disp = oracle::random_image(9, 9, 1, 77);
  for (double& v : disp.raw()) v = 0.2 + 0.5 * v;

  auto depth_of = [](const Image& disparity) {
    Image d = disparity;
    for (double& v : d.raw()) v = 1.0 / v;
    return DepthMap(d);
  };

  const double base = smoothness_loss(depth_of(disp), img).scalar;

  Image shifted = disp;
  for (double& v : shifted.raw()) v += 0.35;
  EXPECT_NEAR(smoothness_loss(depth_of(shifted), img).scalar, base, 1e-12);

  Image scaled = disp;
  for (double& v : scaled.raw()) v *= 3.0;
  EXPECT_NEAR(smoothness_loss(depth_of(scaled), img).scalar, 3.0 * base, 1e-12);
}

TEST(Smoothness, MeanNormalizationFlagChangesValue) {
  const Image img = sinusoid_image(9, 9);
  Image disp = oracle::random_image(9, 9, 1, 78);
  for (double& v : disp.raw()) v = 0.2 + 0.5 * v;
  Image d = disp;
  for (double& v : d.raw()) v = 1.0 / v;
  const DepthMap depth(d);
  const double raw = smoothness_loss(depth, img).scalar;
  const double normalized = smoothness_loss(depth, img, true).scalar;
  EXPECT_NE(raw, normalized);
}

TEST(Smoothness, DisparityGradientMatchesFd) {
  const Image img = sinusoid_image(7, 9);
  Image disp = oracle::random_image(7, 9, 1, 79);
  for (double& v : disp.raw()) v = 0.3 + 0.4 * v;
  Image depth_img = disp;
  for (double& v : depth_img.raw()) v = 1.0 / v;
  const DepthMap depth(depth_img);

  const Image analytic = smoothness_grad_disparity(depth, img);
  const Image fd = fd_gradient(
      [&](const Image& d_probe) {
        Image inv = d_probe;
        for (double& v : inv.raw()) v = 1.0 / v;
        return smoothness_loss(DepthMap(inv), img).scalar;
      },
      disp, 1e-7);
  for (std::size_t i = 0; i < disp.size(); ++i) {
    EXPECT_NEAR(analytic.raw()[i], fd.raw()[i], 1e-6);
  }
}
