#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdiv/frame.hpp"
#include "tdiv/parallel.hpp"
#include "tdiv/rng.hpp"

namespace tdiv {

enum class ArtifactMode {
  looping_fwd,  // base ++ base
  looping_bwd,  // base ++ reverse(base); the boundary frame appears twice
  freezing,     // base ++ N copies of the last frame
};

// Doubles the clip by appending its artifact counterpart. Every appended
// frame is an exact copy of some frame of `base`.
inline FrameSequence synthesize(const FrameSequence& base, ArtifactMode mode) {
  if (base.empty()) throw std::invalid_argument("artifact synthesis needs a non-empty base clip");
  std::vector<Frame> out(base.frames());
  out.reserve(2 * base.size());
  switch (mode) {
    case ArtifactMode::looping_fwd:
      out.insert(out.end(), base.begin(), base.end());
      break;
    case ArtifactMode::looping_bwd:
      out.insert(out.end(), base.frames().rbegin(), base.frames().rend());
      break;
    case ArtifactMode::freezing:
      out.insert(out.end(), base.size(), base.frames().back());
      break;
  }
  return FrameSequence(std::move(out), base.frame_rate());
}

struct NoiseSpec {
  double mean = 0.0;
  double variance = 0.03;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(variance >= 0.0) || !std::isfinite(variance))
      throw std::invalid_argument("noise variance must be finite and >= 0");
    if (!std::isfinite(mean)) throw std::invalid_argument("noise mean must be finite");
  }
};

// Adds independent N(mean, variance) noise to every pixel and channel, then
// clamps to [0, 1]. Each draw is keyed by (seed, frame, element), so the
// output is a pure function of (seq, spec).
inline FrameSequence add_noise(const FrameSequence& seq, const NoiseSpec& spec, unsigned threads = 0) {
  spec.validate();
  const double sigma = std::sqrt(spec.variance);
  std::vector<Frame> frames(seq.size());
  parallel_for(0, seq.size(), threads, [&](std::size_t k) {
    const auto src = seq[k].data();
    std::vector<float> data(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) {
      const double v = static_cast<double>(src[i]) + spec.mean + sigma * keyed_normal(spec.seed, k, i);
      data[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
    frames[k] = Frame(seq[k].shape(), std::move(data));
  });
  return FrameSequence(std::move(frames), seq.frame_rate());
}

}  // namespace tdiv
