#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "support.hpp"
#include "tdiv/preprocess.hpp"

using namespace tdiv;

namespace {

// Catmull-Rom spline through p0..p3, evaluated at fraction f between p1 and p2.
double catmull_rom(double p0, double p1, double p2, double p3, double f) {
  return 0.5 * (2.0 * p1 + (-p0 + p2) * f + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * f * f +
                (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * f * f * f);
}

double resize_oracle(const Frame& in, std::size_t out_h, std::size_t out_w, std::size_t y, std::size_t x) {
  auto sample = [&](long r, long c) {
    r = std::clamp(r, 0L, static_cast<long>(in.height()) - 1);
    c = std::clamp(c, 0L, static_cast<long>(in.width()) - 1);
    return static_cast<double>(in.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c), 0));
  };
  const double sy = (y + 0.5) * static_cast<double>(in.height()) / static_cast<double>(out_h) - 0.5;
  const double sx = (x + 0.5) * static_cast<double>(in.width()) / static_cast<double>(out_w) - 0.5;
  const long by = static_cast<long>(std::floor(sy));
  const long bx = static_cast<long>(std::floor(sx));
  double rows[4];
  for (long k = 0; k < 4; ++k) {
    const long r = by - 1 + k;
    rows[k] = catmull_rom(sample(r, bx - 1), sample(r, bx), sample(r, bx + 1), sample(r, bx + 2), sx - bx);
  }
  return std::clamp(catmull_rom(rows[0], rows[1], rows[2], rows[3], sy - by), 0.0, 1.0);
}

NormStats stats3() { return {{0.43, 0.4, 0.37}, {0.23, 0.22, 0.24}}; }

}  // namespace

TEST(CubicWeight, KernelShape) {
  EXPECT_EQ(cubic_weight(0.0), 1.0);
  EXPECT_EQ(cubic_weight(1.0), 0.0);
  EXPECT_EQ(cubic_weight(2.0), 0.0);
  EXPECT_EQ(cubic_weight(-0.5), cubic_weight(0.5));
  EXPECT_NEAR(cubic_weight(0.5), 0.5625, 1e-15);
  EXPECT_NEAR(cubic_weight(1.5), -0.0625, 1e-15);
  for (double f : {0.0, 0.1, 0.37, 0.5, 0.9})
    EXPECT_NEAR(cubic_weight(1 + f) + cubic_weight(f) + cubic_weight(1 - f) + cubic_weight(2 - f), 1.0, 1e-14);
}

TEST(Resize, SameSizeIsIdentity) {
  const auto f = tdiv::test::random_sequence(1, {9, 7, 3}, 1)[0];
  EXPECT_EQ(bicubic_resize(f, 9, 7), f);
}

TEST(Resize, ConstantStaysConstant) {
  const Frame f = Frame::filled({5, 6, 3}, 0.3f);
  const Frame r = bicubic_resize(f, 13, 11);
  EXPECT_EQ(r.shape(), (FrameShape{13, 11, 3}));
  for (float v : r.data()) EXPECT_NEAR(v, 0.3f, 1e-6);
}

TEST(Resize, MatchesCatmullRomOracle) {
  const Frame small({2, 2, 1}, {0.1f, 0.9f, 0.4f, 0.6f});
  const Frame big = bicubic_resize(small, 4, 4);
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x) EXPECT_NEAR(big.at(y, x, 0), resize_oracle(small, 4, 4, y, x), 1e-6);

  const auto f = tdiv::test::random_sequence(1, {7, 5, 1}, 2)[0];
  for (auto [h, w] : {std::pair{14, 10}, std::pair{3, 4}, std::pair{11, 13}}) {
    const Frame r = bicubic_resize(f, h, w);
    for (std::size_t y = 0; y < r.height(); ++y)
      for (std::size_t x = 0; x < r.width(); ++x) EXPECT_NEAR(r.at(y, x, 0), resize_oracle(f, h, w, y, x), 1e-6);
  }
}

// Shifting the input by one pixel shifts a 2x upsampled output by two, away
// from the clamped border.
TEST(Resize, TranslationEquivariance) {
  const auto wide = tdiv::test::random_sequence(1, {16, 17, 1}, 3)[0];
  std::vector<float> a, b;
  for (std::size_t y = 0; y < 16; ++y)
    for (std::size_t x = 0; x < 16; ++x) {
      a.push_back(wide.at(y, x, 0));
      b.push_back(wide.at(y, x + 1, 0));
    }
  const Frame ra = bicubic_resize(Frame({16, 16, 1}, a), 32, 32);
  const Frame rb = bicubic_resize(Frame({16, 16, 1}, b), 32, 32);
  for (std::size_t y = 4; y < 28; ++y)
    for (std::size_t x = 4; x < 26; ++x) EXPECT_NEAR(rb.at(y, x, 0), ra.at(y, x + 2, 0), 1e-6);
}

TEST(Resize, Errors) {
  const Frame f = Frame::filled({4, 4, 1}, 0.0f);
  EXPECT_THROW(bicubic_resize(f, 0, 4), std::invalid_argument);
}

TEST(Crop, CenterOffsets) {
  EXPECT_EQ(center_crop_offset(128, 128, 112), (CropOffset{8, 8}));
  EXPECT_EQ(center_crop_offset(10, 7, 5), (CropOffset{2, 1}));
  EXPECT_THROW(center_crop_offset(100, 128, 112), std::invalid_argument);
  EXPECT_THROW(center_crop_offset(8, 8, 0), std::invalid_argument);

  const auto f = tdiv::test::random_sequence(1, {6, 6, 2}, 4)[0];
  const Frame c = center_crop(f, 2);
  for (std::size_t y = 0; y < 2; ++y)
    for (std::size_t x = 0; x < 2; ++x)
      for (std::size_t ch = 0; ch < 2; ++ch) EXPECT_EQ(c.at(y, x, ch), f.at(y + 2, x + 2, ch));
}

TEST(Normalize, IdentityAndRoundTrip) {
  const auto seq = tdiv::test::random_sequence(3, {5, 5, 3}, 5);
  const auto id = normalize(seq, {{0, 0, 0}, {1, 1, 1}});
  for (std::size_t k = 0; k < 3; ++k) {
    const auto src = seq[k].data();
    const auto dst = id.frame(k);
    for (std::size_t i = 0; i < src.size(); ++i) EXPECT_EQ(dst[i], static_cast<double>(src[i]));
  }
  const auto n = normalize(seq, stats3());
  EXPECT_NEAR(n.frame(1)[4], (seq[1].data()[4] - 0.4) / 0.22, 1e-15);
  const auto back = denormalize(n, stats3());
  for (std::size_t k = 0; k < 3; ++k) {
    const auto src = seq[k].data();
    for (std::size_t i = 0; i < src.size(); ++i) EXPECT_NEAR(back.frame(k)[i], src[i], 1e-12);
  }
}

TEST(Normalize, RejectsBadStats) {
  const auto seq = tdiv::test::random_sequence(1, {4, 4, 3}, 6);
  EXPECT_THROW(normalize(seq, {{0.5}, {0.2}}), std::invalid_argument);
  EXPECT_THROW(normalize(seq, {{0, 0, 0}, {1, 0, 1}}), std::invalid_argument);
  EXPECT_THROW(normalize(seq, {{0, NAN, 0}, {1, 1, 1}}), std::invalid_argument);
}

TEST(Pipeline, ShapesAndCrop) {
  const auto seq = tdiv::test::moving_shapes(3, 64, 64, 3);
  const auto a = run_pipeline(seq, PipelineAlgo::A, stats3());
  const auto b = run_pipeline(seq, PipelineAlgo::B, stats3());
  EXPECT_EQ(a.tensor.frames, 3u);
  EXPECT_EQ(a.tensor.shape, (FrameShape{112, 112, 3}));
  EXPECT_EQ(b.tensor.shape, (FrameShape{112, 112, 3}));
  ASSERT_TRUE(a.crop.has_value());
  EXPECT_EQ(*a.crop, (CropOffset{8, 8}));
  EXPECT_FALSE(b.crop.has_value());
  EXPECT_TRUE(a.warnings.empty());
  EXPECT_NE(a.tensor.data, b.tensor.data);
}

TEST(Pipeline, AgreeOnConstantInput) {
  const FrameSequence seq(std::vector<Frame>(2, Frame::filled({64, 64, 3}, 0.6f)));
  const auto a = run_pipeline(seq, PipelineAlgo::A, stats3());
  const auto b = run_pipeline(seq, PipelineAlgo::B, stats3());
  ASSERT_EQ(a.tensor.data.size(), b.tensor.data.size());
  for (std::size_t i = 0; i < a.tensor.data.size(); ++i) EXPECT_NEAR(a.tensor.data[i], b.tensor.data[i], 1e-6);
}

TEST(Pipeline, WarnsOnOtherSizesAndIsThreadStable) {
  const auto seq = tdiv::test::random_sequence(4, {48, 40, 3}, 7);
  const auto one = run_pipeline(seq, PipelineAlgo::B, stats3(), 1);
  const auto many = run_pipeline(seq, PipelineAlgo::B, stats3(), 4);
  ASSERT_EQ(one.warnings.size(), 1u);
  EXPECT_NE(one.warnings[0].find("48x40"), std::string::npos);
  EXPECT_EQ(one.tensor.data, many.tensor.data);
}
