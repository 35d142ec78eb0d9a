#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "support.hpp"
#include "tdiv/artifact_synth.hpp"
#include "tdiv/temporal_diversity.hpp"

using namespace tdiv;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Exhaustive evaluation of every pair, then reduction.
struct Oracle {
  std::vector<double> per_frame;
  std::vector<std::size_t> best;
  double aggregate = 0.0;
};

template <typename F>
Oracle brute_force(const FrameSequence& seq, F&& f, bool minimum) {
  const std::size_t n = seq.size();
  std::vector<std::vector<double>> table(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) table[i][j] = f(seq[i], seq[j]);
  Oracle o;
  double total = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < i; ++j) {
      if (minimum ? table[i][j] < table[i][best] : table[i][j] > table[i][best]) best = j;
    }
    o.per_frame.push_back(table[i][best]);
    o.best.push_back(best + 1);
    total += table[i][best];
  }
  o.aggregate = total / static_cast<double>(n);
  return o;
}

}  // namespace

TEST(TDistance, AbaExample) {
  const Frame a = Frame::filled({2, 2, 1}, 0.0f);
  const Frame b = Frame::filled({2, 2, 1}, 1.0f);
  const FrameSequence seq({a, b, a});
  auto d = [&](const Frame& x, const Frame& y) { return x == y ? 0.0 : 0.2; };
  const auto r = t_distance(seq, d);
  ASSERT_EQ(r.per_frame.size(), 2u);
  EXPECT_EQ(r.per_frame[0], (FrameMatch{2, 1, 0.2}));
  EXPECT_EQ(r.per_frame[1], (FrameMatch{3, 1, 0.0}));
  EXPECT_NEAR(r.aggregate, 0.2 / 3.0, 1e-15);
}

TEST(TDistance, TiesGoToEarliestFrame) {
  const Frame a = Frame::filled({2, 2, 1}, 0.5f);
  const FrameSequence seq({a, a, a, a});
  const auto r = t_distance(seq, [](const Frame& x, const Frame& y) { return l1_mean(x, y); });
  for (const auto& m : r.per_frame) EXPECT_EQ(m.best_match, 1u);
  EXPECT_EQ(r.aggregate, 0.0);
}

TEST(TDistance, RequiresTwoFrames) {
  const FrameSequence one({Frame::filled({12, 12, 1}, 0.0f)});
  EXPECT_THROW(t_dssim(one), std::invalid_argument);
  EXPECT_THROW(t_psnr(one), std::invalid_argument);
}

TEST(TSimilarity, TwoDistinctFramesGiveHalfPsnr) {
  const Frame a = Frame::filled({4, 4, 1}, 0.0f);
  const Frame b = Frame::filled({4, 4, 1}, 0.5f);
  const auto r = t_psnr(FrameSequence({a, b}));
  EXPECT_DOUBLE_EQ(r.aggregate, psnr(a, b) / 2.0);
}

TEST(TSimilarity, DuplicateGivesInfinity) {
  const auto seq = tdiv::test::random_sequence(5, {8, 8, 1}, 3);
  std::vector<Frame> frames = seq.frames();
  frames.push_back(frames[2]);
  const auto r = t_psnr(FrameSequence(frames));
  EXPECT_EQ(r.aggregate, kInf);
  EXPECT_EQ(r.per_frame.back().value, kInf);
  EXPECT_EQ(r.per_frame.back().best_match, 3u);
}

TEST(TDistance, MatchesBruteForceOnRandomSequences) {
  SplitMix64 rng(99);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t n = 2 + rng.below(14);
    const auto seq = tdiv::test::random_sequence(n, {16, 16, 1}, rng.next());
    auto dd = [](const Frame& x, const Frame& y) { return dssim(x, y); };
    auto ps = [](const Frame& x, const Frame& y) { return psnr(x, y); };
    const Oracle od = brute_force(seq, dd, true);
    const Oracle op = brute_force(seq, ps, false);
    const auto rd = t_dssim(seq);
    const auto rp = t_psnr(seq);
    EXPECT_NEAR(rd.aggregate, od.aggregate, 1e-12);
    EXPECT_NEAR(rp.aggregate, op.aggregate, 1e-12);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      EXPECT_NEAR(rd.per_frame[i].value, od.per_frame[i], 1e-12);
      EXPECT_EQ(rd.per_frame[i].best_match, od.best[i]);
      EXPECT_EQ(rp.per_frame[i].best_match, op.best[i]);
    }
  }
}

TEST(TDiversity, LumaAndPerChannelModes) {
  const auto rgb = tdiv::test::moving_shapes(4, 16, 16, 3);
  const auto luma = t_dssim(rgb);
  const auto gray = t_dssim(to_grayscale(rgb));
  EXPECT_EQ(luma.aggregate, gray.aggregate);
  DiversityOptions per_channel;
  per_channel.color = ColorMode::per_channel_mean;
  const auto pc = t_dssim(rgb, {}, per_channel);
  auto d = [](const Frame& x, const Frame& y) { return dssim(x, y); };
  EXPECT_NEAR(pc.aggregate, brute_force(rgb, d, true).aggregate, 1e-12);
}

TEST(TDiversity, ThreadCountDoesNotChangeBits) {
  const auto seq = tdiv::test::random_sequence(20, {16, 16, 1}, 21);
  DiversityOptions one, many;
  one.threads = 1;
  many.threads = 7;
  const auto a = t_dssim(seq, {}, one);
  const auto b = t_dssim(seq, {}, many);
  EXPECT_EQ(a.aggregate, b.aggregate);
  for (std::size_t i = 0; i < a.per_frame.size(); ++i) EXPECT_EQ(a.per_frame[i], b.per_frame[i]);
}

TEST(Curve, LoopingDropsToZeroAfterPeriod) {
  const auto base = tdiv::test::moving_shapes(8, 16, 16);
  const auto looped = synthesize(base, ArtifactMode::looping_fwd);
  const auto curve = per_timestep_curve(t_dssim(looped));
  ASSERT_EQ(curve.size(), 15u);
  for (const auto& p : curve) {
    if (p.t >= 9)
      EXPECT_EQ(p.value, 0.0) << "t=" << p.t;
    else
      EXPECT_GT(p.value, 0.0) << "t=" << p.t;
  }
}

TEST(Curve, ConstantSequenceIsFlatZero) {
  const FrameSequence seq(std::vector<Frame>(6, Frame::filled({12, 12, 1}, 0.4f)));
  for (const auto& p : per_timestep_curve(t_dssim(seq))) EXPECT_EQ(p.value, 0.0);
}

TEST(DistanceMatrix, BasicEntries) {
  const Frame a = Frame::filled({3, 3, 1}, 0.0f);
  const Frame b = Frame::filled({3, 3, 1}, 0.5f);
  const auto m = distance_matrix(FrameSequence({a, b, a}));
  EXPECT_EQ(m.size(), 3u);
  EXPECT_EQ(m.at(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(m.at(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(m.at(0, 1), 0.5);
  EXPECT_EQ(m.at(2, 0), 0.0);
  EXPECT_THROW(m.at(3, 0), std::out_of_range);
  const auto zero = distance_matrix(FrameSequence(std::vector<Frame>(4, a)));
  EXPECT_EQ(zero.max(), 0.0);
}

TEST(DistanceMatrix, LoopingHasZeroBandAtPeriod) {
  const auto base = tdiv::test::moving_shapes(5, 16, 16);
  const auto m = distance_matrix(synthesize(base, ArtifactMode::looping_fwd));
  for (std::size_t i = 5; i < 10; ++i) EXPECT_EQ(m.at(i, i - 5), 0.0);
  EXPECT_GT(m.at(6, 5), 0.0);
}
