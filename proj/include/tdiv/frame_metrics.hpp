#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdiv/frame.hpp"

namespace tdiv {

// Gaussian-window SSIM parameters for unit dynamic range. Defaults are the
// reference constants: 11-tap window, sigma 1.5, K1 = 0.01, K2 = 0.03.
struct SsimParams {
  std::size_t window_size = 11;
  double window_sigma = 1.5;
  double c1 = 0.01 * 0.01;
  double c2 = 0.03 * 0.03;

  void validate() const {
    if (window_size < 3 || window_size % 2 == 0)
      throw std::invalid_argument("SSIM window size must be odd and >= 3, got " + std::to_string(window_size));
    if (!(window_sigma > 0.0)) throw std::invalid_argument("SSIM window sigma must be positive");
    if (!(c1 > 0.0) || !(c2 > 0.0)) throw std::invalid_argument("SSIM constants c1, c2 must be positive");
  }
};

namespace detail {

inline void require_same_shape(const Frame& a, const Frame& b) {
  if (a.shape() != b.shape())
    throw std::invalid_argument("frame shape mismatch: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
}

inline std::vector<double> gaussian_window(const SsimParams& p) {
  std::vector<double> w(p.window_size);
  const double center = static_cast<double>(p.window_size / 2);
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double d = static_cast<double>(i) - center;
    w[i] = std::exp(-(d * d) / (2.0 * p.window_sigma * p.window_sigma));
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

// Separable "valid" filtering of value(y, x) over an h x w plane. The result
// has (h - n + 1) x (w - n + 1) entries, row-major.
template <typename Value>
std::vector<double> filter_valid(std::size_t h, std::size_t w, const std::vector<double>& window, Value&& value) {
  const std::size_t n = window.size();
  const std::size_t out_h = h - n + 1;
  const std::size_t out_w = w - n + 1;
  std::vector<double> rows(h * out_w, 0.0);
  std::vector<double> row(w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) row[x] = value(y, x);
    double* dst = &rows[y * out_w];
    for (std::size_t k = 0; k < n; ++k) {
      const double g = window[k];
      const double* src = &row[k];
      for (std::size_t x = 0; x < out_w; ++x) dst[x] += g * src[x];
    }
  }
  std::vector<double> out(out_h * out_w, 0.0);
  for (std::size_t y = 0; y < out_h; ++y) {
    double* dst = &out[y * out_w];
    for (std::size_t k = 0; k < n; ++k) {
      const double g = window[k];
      const double* src = &rows[(y + k) * out_w];
      for (std::size_t x = 0; x < out_w; ++x) dst[x] += g * src[x];
    }
  }
  return out;
}

}  // namespace detail

// Windowed first and second moments of one frame, reusable across every
// pairing of that frame in an O(N^2) sweep.
struct SsimFrameStats {
  FrameShape shape;
  std::size_t out_h = 0;
  std::size_t out_w = 0;
  std::vector<std::vector<double>> mean;     // per channel
  std::vector<std::vector<double>> sq_mean;  // per channel, E[x^2]
};

inline SsimFrameStats ssim_stats(const Frame& f, const SsimParams& p) {
  p.validate();
  if (f.height() < p.window_size || f.width() < p.window_size)
    throw std::invalid_argument("frame " + to_string(f.shape()) + " is smaller than the SSIM window (" +
                                std::to_string(p.window_size) + ")");
  const auto window = detail::gaussian_window(p);
  SsimFrameStats s;
  s.shape = f.shape();
  s.out_h = f.height() - p.window_size + 1;
  s.out_w = f.width() - p.window_size + 1;
  const std::size_t ch = f.channels();
  const auto data = f.data();
  for (std::size_t c = 0; c < ch; ++c) {
    auto px = [&](std::size_t y, std::size_t x) -> double { return data[(y * f.width() + x) * ch + c]; };
    s.mean.push_back(detail::filter_valid(f.height(), f.width(), window, px));
    s.sq_mean.push_back(detail::filter_valid(f.height(), f.width(), window, [&](std::size_t y, std::size_t x) {
      const double v = px(y, x);
      return v * v;
    }));
  }
  return s;
}

// SSIM from precomputed moments. Multi-channel frames give the mean of the
// per-channel SSIM values.
inline double ssim(const Frame& a, const SsimFrameStats& sa, const Frame& b, const SsimFrameStats& sb,
                   const SsimParams& p) {
  detail::require_same_shape(a, b);
  const auto window = detail::gaussian_window(p);
  const std::size_t ch = a.channels();
  const std::size_t w = a.width();
  const auto da = a.data();
  const auto db = b.data();
  double total = 0.0;
  for (std::size_t c = 0; c < ch; ++c) {
    const auto cross = detail::filter_valid(a.height(), w, window, [&](std::size_t y, std::size_t x) {
      const std::size_t i = (y * w + x) * ch + c;
      return static_cast<double>(da[i]) * static_cast<double>(db[i]);
    });
    const auto& mu_a = sa.mean[c];
    const auto& mu_b = sb.mean[c];
    const auto& sq_a = sa.sq_mean[c];
    const auto& sq_b = sb.sq_mean[c];
    double sum = 0.0;
    for (std::size_t i = 0; i < cross.size(); ++i) {
      const double ma = mu_a[i];
      const double mb = mu_b[i];
      const double var_a = sq_a[i] - ma * ma;
      const double var_b = sq_b[i] - mb * mb;
      const double cov = cross[i] - ma * mb;
      const double num = (2.0 * (ma * mb) + p.c1) * (2.0 * cov + p.c2);
      const double den = (ma * ma + mb * mb + p.c1) * (var_a + var_b + p.c2);
      sum += num / den;
    }
    total += sum / static_cast<double>(cross.size());
  }
  return total / static_cast<double>(ch);
}

inline double ssim(const Frame& a, const Frame& b, const SsimParams& p = {}) {
  detail::require_same_shape(a, b);
  return ssim(a, ssim_stats(a, p), b, ssim_stats(b, p), p);
}

inline double dssim(const Frame& a, const Frame& b, const SsimParams& p = {}) {
  return 0.5 * (1.0 - ssim(a, b, p));
}

inline double mse(const Frame& a, const Frame& b) {
  detail::require_same_shape(a, b);
  const auto da = a.data();
  const auto db = b.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = static_cast<double>(da[i]) - static_cast<double>(db[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(da.size());
}

// Peak value is 1 for unit-range frames; identical frames give +inf.
inline double psnr_from_mse(double mse_value) {
  if (mse_value == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse_value);
}

inline double psnr(const Frame& a, const Frame& b) { return psnr_from_mse(mse(a, b)); }

inline double l1_mean(const Frame& a, const Frame& b) {
  detail::require_same_shape(a, b);
  const auto da = a.data();
  const auto db = b.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i)
    sum += std::abs(static_cast<double>(da[i]) - static_cast<double>(db[i]));
  return sum / static_cast<double>(da.size());
}

}  // namespace tdiv
