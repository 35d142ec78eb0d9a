#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tdiv {

struct FrameShape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;

  constexpr std::size_t pixels() const { return height * width; }
  constexpr std::size_t elements() const { return height * width * channels; }
  friend constexpr bool operator==(const FrameShape&, const FrameShape&) = default;
};

inline std::string to_string(const FrameShape& s) {
  return std::to_string(s.height) + "x" + std::to_string(s.width) + "x" + std::to_string(s.channels);
}

// A single image with values in [0, 1], stored row-major with interleaved
// channels. Immutable once constructed.
class Frame {
 public:
  Frame() = default;

  Frame(FrameShape shape, std::vector<float> data) : shape_(shape), data_(std::move(data)) {
    if (shape_.height == 0 || shape_.width == 0 || shape_.channels == 0)
      throw std::invalid_argument("frame dimensions must be positive, got " + to_string(shape_));
    if (data_.size() != shape_.elements())
      throw std::invalid_argument("frame data length " + std::to_string(data_.size()) +
                                  " does not match shape " + to_string(shape_));
    for (std::size_t i = 0; i < data_.size(); ++i) {
      const float v = data_[i];
      if (!(v >= 0.0f && v <= 1.0f))
        throw std::invalid_argument("pixel value " + std::to_string(v) + " at element " +
                                    std::to_string(i) + " outside [0, 1]");
    }
  }

  static Frame filled(FrameShape shape, float value) {
    return Frame(shape, std::vector<float>(shape.elements(), value));
  }

  const FrameShape& shape() const { return shape_; }
  std::size_t height() const { return shape_.height; }
  std::size_t width() const { return shape_.width; }
  std::size_t channels() const { return shape_.channels; }
  std::size_t size() const { return data_.size(); }
  std::span<const float> data() const { return data_; }

  float at(std::size_t y, std::size_t x, std::size_t c = 0) const {
    return data_[(y * shape_.width + x) * shape_.channels + c];
  }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  FrameShape shape_;
  std::vector<float> data_;
};

// Ordered, non-empty list of equally shaped frames.
class FrameSequence {
 public:
  FrameSequence() = default;

  explicit FrameSequence(std::vector<Frame> frames, std::optional<double> frame_rate = std::nullopt)
      : frames_(std::move(frames)), frame_rate_(frame_rate) {
    if (frames_.empty()) throw std::invalid_argument("frame sequence must contain at least one frame");
    const FrameShape& first = frames_.front().shape();
    for (std::size_t i = 1; i < frames_.size(); ++i) {
      if (frames_[i].shape() != first)
        throw std::invalid_argument("frame " + std::to_string(i + 1) + " has shape " +
                                    to_string(frames_[i].shape()) + ", expected " + to_string(first));
    }
  }

  std::size_t size() const { return frames_.size(); }
  bool empty() const { return frames_.empty(); }
  const FrameShape& shape() const { return frames_.front().shape(); }
  const Frame& operator[](std::size_t i) const { return frames_[i]; }
  const std::vector<Frame>& frames() const { return frames_; }
  std::optional<double> frame_rate() const { return frame_rate_; }

  auto begin() const { return frames_.begin(); }
  auto end() const { return frames_.end(); }

 private:
  std::vector<Frame> frames_;
  std::optional<double> frame_rate_;
};

// Frame-major tensor without a value-range constraint (K x H x W x C),
// used for normalized classifier inputs.
struct FrameTensor {
  std::size_t frames = 0;
  FrameShape shape;
  std::vector<double> data;

  std::size_t frame_elements() const { return shape.elements(); }
  std::span<const double> frame(std::size_t k) const {
    return std::span<const double>(data).subspan(k * frame_elements(), frame_elements());
  }
  std::span<double> frame(std::size_t k) {
    return std::span<double>(data).subspan(k * frame_elements(), frame_elements());
  }
};

inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

// BT.601 luma of an RGB frame; gray frames are returned unchanged.
inline Frame to_grayscale(const Frame& frame) {
  if (frame.channels() == 1) return frame;
  if (frame.channels() != 3)
    throw std::invalid_argument("grayscale conversion needs 1 or 3 channels, got " +
                                std::to_string(frame.channels()));
  const auto src = frame.data();
  std::vector<float> out(frame.shape().pixels());
  for (std::size_t p = 0; p < out.size(); ++p) {
    const double luma = kLumaR * src[3 * p] + kLumaG * src[3 * p + 1] + kLumaB * src[3 * p + 2];
    out[p] = static_cast<float>(std::clamp(luma, 0.0, 1.0));
  }
  return Frame({frame.height(), frame.width(), 1}, std::move(out));
}

inline FrameSequence to_grayscale(const FrameSequence& seq) {
  if (seq.shape().channels == 1) return seq;
  std::vector<Frame> frames;
  frames.reserve(seq.size());
  for (const Frame& f : seq) frames.push_back(to_grayscale(f));
  return FrameSequence(std::move(frames), seq.frame_rate());
}

// Extracts channel `c` as a single-channel frame.
inline Frame channel_plane(const Frame& frame, std::size_t c) {
  if (c >= frame.channels()) throw std::out_of_range("channel index out of range");
  if (frame.channels() == 1) return frame;
  const auto src = frame.data();
  std::vector<float> out(frame.shape().pixels());
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = src[p * frame.channels() + c];
  return Frame({frame.height(), frame.width(), 1}, std::move(out));
}

}  // namespace tdiv
