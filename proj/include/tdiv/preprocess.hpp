#pragma once

// Classifier-input preparation: bicubic resize, per-channel normalization
// and center crop, chained into the two resize/crop pipelines.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tdiv/frame.hpp"
#include "tdiv/parallel.hpp"

namespace tdiv {

// Catmull-Rom cubic convolution kernel (a = -0.5).
inline double cubic_weight(double x, double a = -0.5) {
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

namespace detail {

struct ResampleTaps {
  std::vector<std::array<std::size_t, 4>> index;
  std::vector<std::array<double, 4>> weight;
};

// Half-pixel-center mapping src = (dst + 0.5) * in / out - 0.5, with
// out-of-range taps clamped to the border sample.
inline ResampleTaps resample_taps(std::size_t in, std::size_t out) {
  ResampleTaps taps;
  taps.index.resize(out);
  taps.weight.resize(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  const auto last = static_cast<std::ptrdiff_t>(in) - 1;
  for (std::size_t d = 0; d < out; ++d) {
    const double src = (static_cast<double>(d) + 0.5) * scale - 0.5;
    const double base = std::floor(src);
    for (int k = 0; k < 4; ++k) {
      const double pos = base + (k - 1);
      const auto i = std::clamp(static_cast<std::ptrdiff_t>(pos), std::ptrdiff_t{0}, last);
      taps.index[d][k] = static_cast<std::size_t>(i);
      taps.weight[d][k] = cubic_weight(src - pos);
    }
  }
  return taps;
}

}  // namespace detail

inline Frame bicubic_resize(const Frame& frame, std::size_t out_h, std::size_t out_w) {
  if (out_h == 0 || out_w == 0) throw std::invalid_argument("resize target must be at least 1x1");
  const std::size_t ch = frame.channels();
  const std::size_t in_w = frame.width();
  const auto rows = detail::resample_taps(frame.height(), out_h);
  const auto cols = detail::resample_taps(in_w, out_w);
  const auto src = frame.data();

  std::vector<double> horizontal(frame.height() * out_w * ch);
  for (std::size_t y = 0; y < frame.height(); ++y) {
    for (std::size_t x = 0; x < out_w; ++x) {
      for (std::size_t c = 0; c < ch; ++c) {
        double v = 0.0;
        for (int k = 0; k < 4; ++k) v += cols.weight[x][k] * src[(y * in_w + cols.index[x][k]) * ch + c];
        horizontal[(y * out_w + x) * ch + c] = v;
      }
    }
  }
  std::vector<float> out(out_h * out_w * ch);
  for (std::size_t y = 0; y < out_h; ++y) {
    for (std::size_t x = 0; x < out_w; ++x) {
      for (std::size_t c = 0; c < ch; ++c) {
        double v = 0.0;
        for (int k = 0; k < 4; ++k) v += rows.weight[y][k] * horizontal[(rows.index[y][k] * out_w + x) * ch + c];
        out[(y * out_w + x) * ch + c] = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return Frame({out_h, out_w, ch}, std::move(out));
}

struct CropOffset {
  std::size_t y = 0;
  std::size_t x = 0;

  friend bool operator==(const CropOffset&, const CropOffset&) = default;
};

inline CropOffset center_crop_offset(std::size_t height, std::size_t width, std::size_t size) {
  if (size == 0) throw std::invalid_argument("crop size must be positive");
  if (size > height || size > width)
    throw std::invalid_argument("crop size " + std::to_string(size) + " exceeds frame " + std::to_string(height) + "x" +
                                std::to_string(width));
  return {(height - size) / 2, (width - size) / 2};
}

inline Frame center_crop(const Frame& frame, std::size_t size) {
  const CropOffset o = center_crop_offset(frame.height(), frame.width(), size);
  const std::size_t ch = frame.channels();
  const auto src = frame.data();
  std::vector<float> out;
  out.reserve(size * size * ch);
  for (std::size_t y = 0; y < size; ++y) {
    const auto row = src.subspan(((o.y + y) * frame.width() + o.x) * ch, size * ch);
    out.insert(out.end(), row.begin(), row.end());
  }
  return Frame({size, size, ch}, std::move(out));
}

inline FrameTensor center_crop(const FrameTensor& t, std::size_t size) {
  const CropOffset o = center_crop_offset(t.shape.height, t.shape.width, size);
  const std::size_t ch = t.shape.channels;
  FrameTensor out{t.frames, {size, size, ch}, {}};
  out.data.reserve(t.frames * size * size * ch);
  for (std::size_t k = 0; k < t.frames; ++k) {
    const auto f = t.frame(k);
    for (std::size_t y = 0; y < size; ++y) {
      const auto row = f.subspan(((o.y + y) * t.shape.width + o.x) * ch, size * ch);
      out.data.insert(out.data.end(), row.begin(), row.end());
    }
  }
  return out;
}

// Per-channel classifier statistics. There are no defaults: they belong to
// whichever network consumes the tensors.
struct NormStats {
  std::vector<double> mean;
  std::vector<double> stddev;

  void validate(std::size_t channels) const {
    if (mean.size() != channels || stddev.size() != channels)
      throw std::invalid_argument("normalization stats have " + std::to_string(mean.size()) + " means and " +
                                  std::to_string(stddev.size()) + " stds for " + std::to_string(channels) + " channels");
    for (std::size_t c = 0; c < channels; ++c) {
      if (!std::isfinite(mean[c])) throw std::invalid_argument("normalization mean must be finite");
      if (!(stddev[c] > 0.0) || !std::isfinite(stddev[c]))
        throw std::invalid_argument("normalization std must be positive, got " + std::to_string(stddev[c]));
    }
  }
};

inline FrameTensor normalize(const FrameSequence& seq, const NormStats& stats) {
  const FrameShape s = seq.shape();
  stats.validate(s.channels);
  FrameTensor out{seq.size(), s, std::vector<double>(seq.size() * s.elements())};
  for (std::size_t k = 0; k < seq.size(); ++k) {
    const auto src = seq[k].data();
    auto dst = out.frame(k);
    for (std::size_t i = 0; i < src.size(); ++i) {
      const std::size_t c = i % s.channels;
      dst[i] = (static_cast<double>(src[i]) - stats.mean[c]) / stats.stddev[c];
    }
  }
  return out;
}

inline FrameTensor denormalize(const FrameTensor& t, const NormStats& stats) {
  stats.validate(t.shape.channels);
  FrameTensor out = t;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const std::size_t c = i % t.shape.channels;
    out.data[i] = out.data[i] * stats.stddev[c] + stats.mean[c];
  }
  return out;
}

enum class PipelineAlgo { A, B };

inline constexpr std::size_t kPipelineOutput = 112;
inline constexpr std::size_t kPipelineResizeA = 128;
inline constexpr std::size_t kPipelineNativeSize = 64;

struct PipelineResult {
  FrameTensor tensor;
  std::optional<CropOffset> crop;  // set for algorithm A
  std::vector<std::string> warnings;
};

// A: resize to 128, normalize, center-crop to 112.
// B: resize straight to 112, normalize.
inline PipelineResult run_pipeline(const FrameSequence& seq, PipelineAlgo algo, const NormStats& stats,
                                   unsigned threads = 0) {
  const FrameShape s = seq.shape();
  stats.validate(s.channels);
  PipelineResult result;
  if (s.height != kPipelineNativeSize || s.width != kPipelineNativeSize)
    result.warnings.push_back("input frames are " + std::to_string(s.height) + "x" + std::to_string(s.width) +
                              ", pipelines are defined for 64x64");
  const std::size_t target = algo == PipelineAlgo::A ? kPipelineResizeA : kPipelineOutput;
  std::vector<Frame> resized(seq.size());
  parallel_for(0, seq.size(), threads, [&](std::size_t k) { resized[k] = bicubic_resize(seq[k], target, target); });
  FrameTensor t = normalize(FrameSequence(std::move(resized), seq.frame_rate()), stats);
  if (algo == PipelineAlgo::A) {
    result.crop = center_crop_offset(target, target, kPipelineOutput);
    t = center_crop(t, kPipelineOutput);
  }
  result.tensor = std::move(t);
  return result;
}

}  // namespace tdiv
