#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "drowsegate/imgcore.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace drowsegate;

namespace {

ColorImage solid_rgb(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return {GrayImage::Constant(h, w, r), GrayImage::Constant(h, w, g), GrayImage::Constant(h, w, b)};
}

}  // namespace

TEST(Grayscale, WhiteAndBlackAreFixedPoints) {
  EXPECT_EQ(to_grayscale(solid_rgb(3, 2, 255, 255, 255))(1, 2), 255);
  EXPECT_EQ(to_grayscale(solid_rgb(3, 2, 0, 0, 0))(0, 0), 0);
}

TEST(Grayscale, LumaWeights) {
  // 0.299*100 + 0.587*150 + 0.114*200 = 140.75
  EXPECT_EQ(to_grayscale(solid_rgb(1, 1, 100, 150, 200))(0, 0), 141);
}

TEST(Grayscale, ChannelSizeMismatchThrows) {
  ColorImage rgb = solid_rgb(4, 4, 1, 2, 3);
  rgb.b = GrayImage::Zero(4, 5);
  try {
    to_grayscale(rgb);
    FAIL() << "expected InvalidInput";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidInput);
  }
}

TEST(GaussianKernel, NormalizedWithRadiusThreeSigma) {
  const Eigen::VectorXd k = gaussian_kernel(1.5);
  EXPECT_EQ(k.size(), 2 * 5 + 1);
  EXPECT_NEAR(k.sum(), 1.0, 1e-12);
  for (int i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(k(i), k(10 - i));
  EXPECT_THROW(gaussian_kernel(0.0), Error);
  EXPECT_THROW(gaussian_kernel(-1.0), Error);
}

TEST(GaussianSmooth, ConstantImageUnchanged) {
  const GrayImage img = GrayImage::Constant(13, 17, 50);
  for (double sigma : {0.5, 1.0, 3.0, 10.0}) {
    EXPECT_TRUE((gaussian_smooth(img, sigma) == 50).all()) << sigma;
  }
}

TEST(GaussianSmooth, ImpulseResponseIsKernelProduct) {
  GrayImage img = GrayImage::Zero(15, 15);
  img(7, 7) = 255;
  const Eigen::VectorXd k = gaussian_kernel(1.0);
  const int r = static_cast<int>(k.size() / 2);
  const GrayImage out = gaussian_smooth(img, 1.0);
  EXPECT_NEAR(out(7, 7), 255.0 * k(r) * k(r), 0.5);
  EXPECT_NEAR(out(7, 8), 255.0 * k(r) * k(r + 1), 0.5);
}

TEST(GaussianSmooth, SinglePixelImage) {
  const GrayImage img = GrayImage::Constant(1, 1, 77);
  EXPECT_EQ(gaussian_smooth(img, 2.0)(0, 0), 77);
}

TEST(GaussianSmooth, StaysWithinInputRange) {
  std::mt19937 rng(3);
  GrayImage img = fixtures::random_image(rng, 20, 20);
  img = img.max(std::uint8_t{40}).min(std::uint8_t{180});
  const GrayImage out = gaussian_smooth(img, 2.0);
  EXPECT_GE(out.minCoeff(), 40);
  EXPECT_LE(out.maxCoeff(), 180);
}

TEST(GaussianSmooth, RejectsNonPositiveSigma) { EXPECT_THROW(gaussian_smooth(GrayImage::Zero(4, 4), 0.0), Error); }

TEST(Gradients, HorizontalRamp) {
  GrayImage img(6, 8);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 8; ++x) img(y, x) = static_cast<std::uint8_t>(x);
  const Gradients g = gradients(img);
  EXPECT_TRUE((g.gx == 1.0).all());
  EXPECT_TRUE((g.gy == 0.0).all());
}

TEST(Gradients, LinearFieldInterior) {
  GrayImage img(10, 10);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x) img(y, x) = static_cast<std::uint8_t>(3 * x + 7 * y);
  const Gradients g = gradients(img);
  for (int y = 1; y < 9; ++y) {
    for (int x = 1; x < 9; ++x) {
      EXPECT_DOUBLE_EQ(g.gx(y, x), 3.0);
      EXPECT_DOUBLE_EQ(g.gy(y, x), 7.0);
    }
  }
}

TEST(Gradients, ConstantIsZero) {
  const Gradients g = gradients(GrayImage::Constant(5, 5, 90));
  EXPECT_TRUE((g.gx == 0.0).all());
  EXPECT_TRUE((g.gy == 0.0).all());
}

TEST(Gradients, VerticalStepPeaksAtBothSides) {
  const int k = 5;
  GrayImage img = GrayImage::Zero(7, 10);
  img.rightCols(10 - k).setConstant(255);
  const Gradients g = gradients(img);
  EXPECT_DOUBLE_EQ(g.gx(3, k - 1), 127.5);
  EXPECT_DOUBLE_EQ(g.gx(3, k), 127.5);
  EXPECT_DOUBLE_EQ(g.gx(3, k - 2), 0.0);
  EXPECT_DOUBLE_EQ(g.gx(3, k + 1), 0.0);
}

TEST(Gradients, OneSidedOnBorder) {
  GrayImage img(3, 3);
  img << 0, 10, 40, 0, 10, 40, 0, 10, 40;
  const Gradients g = gradients(img);
  EXPECT_DOUBLE_EQ(g.gx(1, 0), 10.0);
  EXPECT_DOUBLE_EQ(g.gx(1, 2), 30.0);
  EXPECT_DOUBLE_EQ(g.gx(1, 1), 20.0);
}

TEST(Gradients, TooSmallThrows) {
  EXPECT_THROW(gradients(GrayImage::Zero(2, 5)), Error);
  EXPECT_THROW(gradients(GrayImage::Zero(5, 2)), Error);
}

TEST(Integral, AllOnes) {
  const IntegralImage ii(GrayImage::Ones(4, 4));
  EXPECT_EQ(ii.sum({0, 0, 4, 4}), 16);
  EXPECT_EQ(ii.squared_sum({0, 0, 4, 4}), 16);
}

TEST(Integral, ZeroFirstRowAndColumn) {
  std::mt19937 rng(11);
  const IntegralImage ii(fixtures::random_image(rng, 9, 6));
  EXPECT_EQ(ii.width(), 9);
  EXPECT_EQ(ii.height(), 6);
  EXPECT_TRUE((ii.sums().row(0) == 0).all());
  EXPECT_TRUE((ii.sums().col(0) == 0).all());
  EXPECT_TRUE((ii.squared_sums().row(0) == 0).all());
  EXPECT_TRUE((ii.squared_sums().col(0) == 0).all());
}

TEST(Integral, MatchesNaiveSumsOnRandomImages) {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const GrayImage img = fixtures::random_image(rng, 8, 8);
    const IntegralImage ii(img);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x)
        for (int h = 1; y + h <= 8; ++h)
          for (int w = 1; x + w <= 8; ++w) {
            const Rect r{x, y, w, h};
            ASSERT_EQ(ii.sum(r), oracle::rect_sum(img, r));
            ASSERT_EQ(ii.squared_sum(r), oracle::rect_sum(img, r, true));
          }
  }
}

TEST(Integral, LargeSaturatedImageDoesNotOverflow) {
  const GrayImage img = GrayImage::Constant(1024, 2048, 255);
  const IntegralImage ii(img);
  EXPECT_EQ(ii.sum({0, 0, 2048, 1024}), 2048LL * 1024 * 255);
  EXPECT_EQ(ii.squared_sum({0, 0, 2048, 1024}), 2048LL * 1024 * 255 * 255);
}

TEST(Crop, FullRectIsIdentity) {
  std::mt19937 rng(5);
  const GrayImage img = fixtures::random_image(rng, 7, 5);
  EXPECT_TRUE((crop(img, Rect{0, 0, 7, 5}) == img).all());
}

TEST(Crop, CopiesSubregion) {
  std::mt19937 rng(6);
  const GrayImage img = fixtures::random_image(rng, 10, 10);
  const GrayImage c = crop(img, Rect{3, 2, 4, 5});
  ASSERT_EQ(width(c), 4);
  ASSERT_EQ(height(c), 5);
  EXPECT_EQ(c(0, 0), img(2, 3));
  EXPECT_EQ(c(4, 3), img(6, 6));
}

TEST(Crop, OutOfBoundsThrows) {
  const GrayImage img = GrayImage::Zero(10, 10);
  EXPECT_THROW(crop(img, Rect{5, 5, 6, 1}), Error);
  EXPECT_THROW(crop(img, Rect{-1, 0, 3, 3}), Error);
  EXPECT_THROW(crop(img, Rect{0, 0, 0, 3}), Error);
}

TEST(Resize, ConstantStaysConstant) {
  const GrayImage img = GrayImage::Constant(7, 9, 123);
  EXPECT_TRUE((resize_bilinear(img, 31, 4) == 123).all());
  EXPECT_TRUE((resize_bilinear(img, 1, 1) == 123).all());
}

TEST(Resize, MidpointRounds) {
  GrayImage img(1, 2);
  img << 0, 255;
  const GrayImage out = resize_bilinear(img, 3, 1);
  ASSERT_EQ(width(out), 3);
  EXPECT_EQ(out(0, 0), 0);
  EXPECT_EQ(out(0, 1), 128);
  EXPECT_EQ(out(0, 2), 255);
}

TEST(Resize, CornersAreAligned) {
  std::mt19937 rng(8);
  const GrayImage img = fixtures::random_image(rng, 6, 5);
  const GrayImage out = resize_bilinear(img, 23, 17);
  EXPECT_EQ(out(0, 0), img(0, 0));
  EXPECT_EQ(out(0, 22), img(0, 5));
  EXPECT_EQ(out(16, 0), img(4, 0));
  EXPECT_EQ(out(16, 22), img(4, 5));
}

TEST(Resize, InvalidTargetThrows) { EXPECT_THROW(resize_bilinear(GrayImage::Zero(3, 3), 0, 2), Error); }

TEST(Purity, RepeatedCallsAreByteIdentical) {
  std::mt19937 rng(9);
  const GrayImage img = fixtures::random_image(rng, 16, 12);
  EXPECT_TRUE((gaussian_smooth(img, 1.3) == gaussian_smooth(img, 1.3)).all());
  EXPECT_TRUE((resize_bilinear(img, 40, 30) == resize_bilinear(img, 40, 30)).all());
}
