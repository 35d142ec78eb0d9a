#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdiv/frame.hpp"
#include "tdiv/frame_metrics.hpp"
#include "tdiv/parallel.hpp"

namespace tdiv {

// Best preceding match for one frame. Indices are 1-based, as in the JSON
// report: frame `t` (t >= 2) matched frame `best_match` < t.
struct FrameMatch {
  std::size_t t = 0;
  std::size_t best_match = 0;
  double value = 0.0;

  friend bool operator==(const FrameMatch&, const FrameMatch&) = default;
};

// Result of a temporal-diversity sweep over N frames.
//
// aggregate = (1/N) * sum of the N-1 per-frame values. The divisor is the
// full sequence length, not the number of terms.
struct DiversityReport {
  std::string metric;
  double aggregate = 0.0;
  std::vector<FrameMatch> per_frame;
};

enum class ColorMode {
  luma,               // RGB frames are converted to BT.601 luma first
  per_channel_mean,   // SSIM averaged over channels; PSNR from the pooled MSE
};

struct DiversityOptions {
  ColorMode color = ColorMode::luma;
  unsigned threads = 0;
};

namespace detail {

enum class Extremum { min, max };

template <typename Score>
DiversityReport sweep(std::size_t n, Score&& score, Extremum mode, std::string name, unsigned threads) {
  if (n < 2) throw std::invalid_argument("temporal diversity needs at least 2 frames, got " + std::to_string(n));
  DiversityReport report;
  report.metric = std::move(name);
  report.per_frame.resize(n - 1);
  parallel_for(1, n, threads, [&](std::size_t i) {
    std::size_t best_j = 0;
    double best = score(i, 0);
    for (std::size_t j = 1; j < i; ++j) {
      if (mode == Extremum::max && best == std::numeric_limits<double>::infinity()) break;
      const double v = score(i, j);
      if (mode == Extremum::min ? v < best : v > best) {
        best = v;
        best_j = j;
      }
    }
    report.per_frame[i - 1] = FrameMatch{i + 1, best_j + 1, best};
  });
  double sum = 0.0;
  for (const FrameMatch& m : report.per_frame) sum += m.value;
  report.aggregate = sum / static_cast<double>(n);
  return report;
}

inline FrameSequence prepare_for_metric(const FrameSequence& seq, ColorMode color) {
  return color == ColorMode::luma ? to_grayscale(seq) : seq;
}

}  // namespace detail

// For every frame, the smallest distance to any preceding frame (ties go to
// the earliest frame), averaged with the 1/N normalization.
template <typename Distance>
DiversityReport t_distance(const FrameSequence& seq, Distance&& d, std::string name = "t-d", unsigned threads = 0) {
  return detail::sweep(
      seq.size(), [&](std::size_t i, std::size_t j) { return static_cast<double>(d(seq[i], seq[j])); },
      detail::Extremum::min, std::move(name), threads);
}

// Dual of t_distance: largest similarity to any preceding frame. A single
// infinite per-frame value makes the aggregate infinite.
template <typename Similarity>
DiversityReport t_similarity(const FrameSequence& seq, Similarity&& s, std::string name = "t-s",
                             unsigned threads = 0) {
  return detail::sweep(
      seq.size(), [&](std::size_t i, std::size_t j) { return static_cast<double>(s(seq[i], seq[j])); },
      detail::Extremum::max, std::move(name), threads);
}

// t-DSSIM: higher means more temporally diverse.
inline DiversityReport t_dssim(const FrameSequence& seq, const SsimParams& params = {},
                               const DiversityOptions& options = {}) {
  params.validate();
  if (seq.size() < 2)
    throw std::invalid_argument("temporal diversity needs at least 2 frames, got " + std::to_string(seq.size()));
  const FrameSequence frames = detail::prepare_for_metric(seq, options.color);
  std::vector<SsimFrameStats> stats(frames.size());
  parallel_for(0, frames.size(), options.threads,
               [&](std::size_t k) { stats[k] = ssim_stats(frames[k], params); });
  return detail::sweep(
      frames.size(),
      [&](std::size_t i, std::size_t j) {
        return 0.5 * (1.0 - ssim(frames[i], stats[i], frames[j], stats[j], params));
      },
      detail::Extremum::min, "t-dssim", options.threads);
}

// t-PSNR: lower means more temporally diverse; +inf as soon as any frame
// repeats an earlier one exactly.
inline DiversityReport t_psnr(const FrameSequence& seq, const DiversityOptions& options = {}) {
  const FrameSequence frames = detail::prepare_for_metric(seq, options.color);
  return t_similarity(frames, [](const Frame& a, const Frame& b) { return psnr(a, b); }, "t-psnr",
                      options.threads);
}

struct CurvePoint {
  std::size_t t = 0;
  double value = 0.0;
};

// Per-timestep summands of the aggregate, ordered by frame index.
inline std::vector<CurvePoint> per_timestep_curve(const DiversityReport& report) {
  std::vector<CurvePoint> curve;
  curve.reserve(report.per_frame.size());
  for (const FrameMatch& m : report.per_frame) curve.push_back({m.t, m.value});
  std::sort(curve.begin(), curve.end(), [](const CurvePoint& a, const CurvePoint& b) { return a.t < b.t; });
  return curve;
}

// Symmetric N x N frame-distance table with a zero diagonal. Only the strict
// lower triangle is stored.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n) : n_(n), values_(n * (n - (n > 0 ? 1 : 0)) / 2, 0.0) {}

  std::size_t size() const { return n_; }

  double at(std::size_t i, std::size_t j) const {
    if (i >= n_ || j >= n_) throw std::out_of_range("distance matrix index out of range");
    if (i == j) return 0.0;
    return i > j ? values_[index(i, j)] : values_[index(j, i)];
  }

  void set(std::size_t i, std::size_t j, double v) {
    if (i <= j || i >= n_) throw std::out_of_range("distance matrix stores i > j only");
    if (!(v >= 0.0)) throw std::invalid_argument("distances must be non-negative");
    values_[index(i, j)] = v;
  }

  double max() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, v);
    return m;
  }

 private:
  static std::size_t index(std::size_t i, std::size_t j) { return i * (i - 1) / 2 + j; }

  std::size_t n_ = 0;
  std::vector<double> values_;
};

template <typename Distance>
DistanceMatrix distance_matrix(const FrameSequence& seq, Distance&& d, unsigned threads = 0) {
  DistanceMatrix m(seq.size());
  parallel_for(1, seq.size(), threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < i; ++j) m.set(i, j, static_cast<double>(d(seq[i], seq[j])));
  });
  return m;
}

inline DistanceMatrix distance_matrix(const FrameSequence& seq, unsigned threads = 0) {
  return distance_matrix(seq, [](const Frame& a, const Frame& b) { return l1_mean(a, b); }, threads);
}

}  // namespace tdiv
