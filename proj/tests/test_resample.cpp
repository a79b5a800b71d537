// Copyright Contributors to the ssimx Project
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ssimx/resample.hpp"

using namespace ssimx;

TEST(UpsampleNearest, FactorOneIsIdentity) {
  const Image img = oracle::random_image(3, 4, 1, 1);
  const Image out = upsample_nearest(img, 1);
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_EQ(out.raw()[i], img.raw()[i]);
}

TEST(UpsampleNearest, SinglePixelReplication) {
  Image img(1, 1, 1, 0.42);
  const Image out = upsample_nearest(img, 3);
  ASSERT_EQ(out.height(), 3);
  ASSERT_EQ(out.width(), 3);
  for (double v : out.raw()) EXPECT_EQ(v, 0.42);
}

TEST(UpsampleNearest, TwoByTwoBlocks) {
  Image img(2, 2, 1);
  img.at(0, 0) = 0.1;
  img.at(0, 1) = 0.2;
  img.at(1, 0) = 0.3;
  img.at(1, 1) = 0.4;
  const Image out = upsample_nearest(img, 2);
  ASSERT_EQ(out.height(), 4);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      EXPECT_EQ(out.at(y, x), img.at(y / 2, x / 2));
    }
  }
  EXPECT_THROW(upsample_nearest(img, 0), argument_error);
}

TEST(PixelShuffle, DefinitionOnOneByOneStack) {
  ChannelStack stack(1, 1, 4);
  stack.at(0, 0, 0) = 0.11;  // a
  stack.at(0, 0, 1) = 0.22;  // b
  stack.at(0, 0, 2) = 0.33;  // c
  stack.at(0, 0, 3) = 0.44;  // d
  const Image out = pixel_shuffle(stack, 2);
  EXPECT_EQ(out.at(0, 0), 0.11);
  EXPECT_EQ(out.at(0, 1), 0.22);
  EXPECT_EQ(out.at(1, 0), 0.33);
  EXPECT_EQ(out.at(1, 1), 0.44);
}

TEST(PixelShuffle, FactorOneIsIdentity) {
  const ChannelStack stack = oracle::random_image(4, 5, 1, 2);
  const Image out = pixel_shuffle(stack, 1);
  for (std::size_t i = 0; i < stack.size(); ++i) EXPECT_EQ(out.raw()[i], stack.raw()[i]);
}

TEST(PixelShuffle, MatchesIndexFormulaOracle) {
  const int r = 3;
  const ChannelStack stack = oracle::random_image(3, 5, 9, 3);
  const Image out = pixel_shuffle(stack, r);
  ASSERT_EQ(out.height(), 9);
  ASSERT_EQ(out.width(), 15);
  for (int oy = 0; oy < 9; ++oy) {
    for (int ox = 0; ox < 15; ++ox) {
      const int y = oy / r, dy = oy % r;
      const int x = ox / r, dx = ox % r;
      EXPECT_EQ(out.at(oy, ox), stack.at(y, x, dy * r + dx));
    }
  }
}

TEST(PixelShuffle, WrongChannelCountRejected) {
  const ChannelStack stack = oracle::random_image(2, 2, 5, 4);
  EXPECT_THROW(pixel_shuffle(stack, 2), dimension_error);
}

TEST(SpaceToDepth, RoundTripsAreExact) {
  for (int r : {2, 3, 4}) {
    const ChannelStack stack = oracle::random_image(3, 4, r * r, 10 + r);
    const ChannelStack back = space_to_depth(pixel_shuffle(stack, r), r);
    ASSERT_TRUE(back.same_shape(stack));
    for (std::size_t i = 0; i < stack.size(); ++i) EXPECT_EQ(back.raw()[i], stack.raw()[i]);

    const Image img = oracle::random_image(3 * r, 4 * r, 1, 20 + r);
    const Image round = pixel_shuffle(space_to_depth(img, r), r);
    for (std::size_t i = 0; i < img.size(); ++i) EXPECT_EQ(round.raw()[i], img.raw()[i]);
  }
}

TEST(SpaceToDepth, TwoByTwoBlockOrder) {
  Image img(2, 2, 1);
  img.at(0, 0) = 0.5;
  img.at(0, 1) = 0.6;
  img.at(1, 0) = 0.7;
  img.at(1, 1) = 0.8;
  const ChannelStack stack = space_to_depth(img, 2);
  ASSERT_EQ(stack.height(), 1);
  ASSERT_EQ(stack.channels(), 4);
  EXPECT_EQ(stack.at(0, 0, 0), 0.5);
  EXPECT_EQ(stack.at(0, 0, 1), 0.6);
  EXPECT_EQ(stack.at(0, 0, 2), 0.7);
  EXPECT_EQ(stack.at(0, 0, 3), 0.8);
  EXPECT_THROW(space_to_depth(oracle::random_image(3, 3, 1, 1), 2), dimension_error);
}

TEST(PixelShuffle, PreservesValueMultiset) {
  const ChannelStack stack = oracle::random_image(4, 6, 4, 30);
  const Image out = pixel_shuffle(stack, 2);
  std::vector<double> before = stack.raw();
  std::vector<double> after = out.raw();
  std::sort(before.begin(), before.end());
  std::sort(after.begin(), after.end());
  EXPECT_EQ(before, after);
}

TEST(UpsampleNearest, MultipliesValueCounts) {
  const Image img = oracle::random_image(3, 3, 1, 31);
  const Image out = upsample_nearest(img, 2);
  for (double v : img.raw()) {
    EXPECT_EQ(std::count(out.raw().begin(), out.raw().end(), v), 4);
  }
}

TEST(BlockMean, InvertsNearestUpsamplingExactly) {
  for (int r : {2, 3, 4}) {
    const Image img = oracle::random_image(5, 7, 1, 40 + r);
    const Image round = block_mean_downsample(upsample_nearest(img, r), r);
    ASSERT_TRUE(round.same_shape(img));
    for (std::size_t i = 0; i < img.size(); ++i) EXPECT_EQ(round.raw()[i], img.raw()[i]);
  }
  EXPECT_THROW(block_mean_downsample(oracle::random_image(5, 5, 1, 50), 2), dimension_error);
}

TEST(UpsampleBilinear, ConstantAndRangePreservation) {
  const Image flat(3, 3, 1, 0.6);
  const Image up = upsample_bilinear(flat, 2);
  ASSERT_EQ(up.height(), 6);
  for (double v : up.raw()) EXPECT_NEAR(v, 0.6, 1e-15);

  const Image img = oracle::random_image(4, 4, 1, 60);
  const auto [lo, hi] = std::minmax_element(img.raw().begin(), img.raw().end());
  for (double v : upsample_bilinear(img, 3).raw()) {
    EXPECT_GE(v, *lo - 1e-15);
    EXPECT_LE(v, *hi + 1e-15);
  }
}

TEST(UpsampleBilinear, InterpolatesMidpoints) {
  Image img(1, 2, 1);
  img.at(0, 0) = 0.0;
  img.at(0, 1) = 1.0;
  const Image up = upsample_bilinear(img, 2);
  // source coords for the 4 output columns: -0.25, 0.25, 0.75, 1.25 (clamped)
  EXPECT_EQ(up.at(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(up.at(0, 1), 0.25);
  EXPECT_DOUBLE_EQ(up.at(0, 2), 0.75);
  EXPECT_EQ(up.at(0, 3), 1.0);
}
