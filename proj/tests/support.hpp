#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "tdiv/frame.hpp"
#include "tdiv/rng.hpp"

namespace tdiv::test {

// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<unsigned> counter{0};
    const auto base = std::filesystem::temp_directory_path();
    const std::uint64_t tag = mix64(reinterpret_cast<std::uintptr_t>(this) ^ (static_cast<std::uint64_t>(::getpid()) << 32) ^ counter.fetch_add(1));
    path_ = base / ("tdiv_test_" + std::to_string(tag));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Frame random_frame(const FrameShape& shape, SplitMix64& rng) {
  std::vector<float> data(shape.elements());
  for (float& v : data) v = static_cast<float>(rng.uniform());
  return Frame(shape, std::move(data));
}

inline FrameSequence random_sequence(std::size_t n, const FrameShape& shape, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<Frame> frames;
  for (std::size_t k = 0; k < n; ++k) frames.push_back(random_frame(shape, rng));
  return FrameSequence(std::move(frames));
}

// A bright square and a disc moving over a gradient background.
inline FrameSequence moving_shapes(std::size_t n, std::size_t h, std::size_t w, std::size_t channels = 1) {
  std::vector<Frame> frames;
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<float> data(h * w * channels);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double sx = 2.0 + 3.0 * static_cast<double>(k);
        const double sy = 4.0 + 1.5 * static_cast<double>(k);
        const bool square = x >= sx && x < sx + 8.0 && y >= sy && y < sy + 8.0;
        const double cx = static_cast<double>(w) - 8.0 - 2.0 * static_cast<double>(k);
        const double cy = static_cast<double>(h) / 2.0;
        const bool disc = (x - cx) * (x - cx) + (y - cy) * (y - cy) < 20.0;
        for (std::size_t c = 0; c < channels; ++c) {
          double v = 0.1 + 0.3 * static_cast<double>(x + y) / static_cast<double>(h + w) + 0.1 * static_cast<double>(c);
          if (square) v = 0.95;
          if (disc) v = 0.05 + 0.2 * static_cast<double>(c);
          data[(y * w + x) * channels + c] = static_cast<float>(v);
        }
      }
    }
    frames.emplace_back(FrameShape{h, w, channels}, std::move(data));
  }
  return FrameSequence(std::move(frames));
}

}  // namespace tdiv::test
