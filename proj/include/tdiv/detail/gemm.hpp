#pragma once

// Register-blocked single-precision GEMM used by the 3D convolutions.
//
// Every output element is accumulated in ascending reduction order with
// the same vector instruction sequence, whatever the tiling, so results are
// bitwise independent of how column blocks are split across threads.

#include <algorithm>
#include <cstddef>
#include <cstring>
#include <vector>

namespace tdiv::detail {

inline constexpr std::size_t kGemmMr = 12;  // rows per micro-tile
inline constexpr std::size_t kGemmNr = 32;  // columns per micro-tile
inline constexpr std::size_t kGemmKc = 256; // reduction chunk

// The library builds with -ffp-contract=off so scalar metric code evaluates
// exactly as written; the micro-kernel opts back into fused multiply-add.
#if defined(__GNUC__) && !defined(__clang__)
#define TDIV_FUSED_MULTIPLY_ADD __attribute__((optimize("fp-contract=fast")))
#else
#define TDIV_FUSED_MULTIPLY_ADD
#endif

using f32x16 = float __attribute__((vector_size(64)));

inline f32x16 load16(const float* p) {
  f32x16 v;
  std::memcpy(&v, p, sizeof(v));
  return v;
}

inline void store16(float* p, f32x16 v) { std::memcpy(p, &v, sizeof(v)); }

// c[MR x NR] (row stride ldc) += a_panel[kc x MR] * b_panel[kc x NR].
TDIV_FUSED_MULTIPLY_ADD inline void gemm_micro_kernel(std::size_t kc, const float* a, const float* b, float* c, std::size_t ldc) {
#if defined(__clang__)
#pragma clang fp contract(fast)
#endif
  f32x16 acc[kGemmMr][2];
  for (std::size_t i = 0; i < kGemmMr; ++i) {
    acc[i][0] = load16(c + i * ldc);
    acc[i][1] = load16(c + i * ldc + 16);
  }
  for (std::size_t k = 0; k < kc; ++k) {
    const f32x16 b0 = load16(b + k * kGemmNr);
    const f32x16 b1 = load16(b + k * kGemmNr + 16);
    const float* ak = a + k * kGemmMr;
    for (std::size_t i = 0; i < kGemmMr; ++i) {
      const float s = ak[i];
      acc[i][0] += s * b0;
      acc[i][1] += s * b1;
    }
  }
  for (std::size_t i = 0; i < kGemmMr; ++i) {
    store16(c + i * ldc, acc[i][0]);
    store16(c + i * ldc + 16, acc[i][1]);
  }
}

// Weight matrix whose reduction axis is split into `segments` equal slices
// (one per temporal tap), each cut into chunks of at most kGemmKc.
struct PackedWeights {
  struct Chunk {
    std::size_t segment = 0;
    std::size_t offset = 0;  // within the segment
    std::size_t length = 0;
    std::size_t data_offset = 0;
  };

  std::size_t rows = 0;
  std::size_t segments = 0;
  std::size_t segment_length = 0;
  std::size_t row_blocks = 0;
  std::vector<Chunk> chunks;
  std::vector<float> data;

  const float* panel(const Chunk& chunk, std::size_t row_block) const {
    return data.data() + chunk.data_offset + row_block * kGemmMr * chunk.length;
  }
};

// value(row, segment, k) gives the weight for reduction index k of a segment.
template <typename Value>
PackedWeights pack_weights(std::size_t rows, std::size_t segments, std::size_t segment_length, Value&& value) {
  PackedWeights p;
  p.rows = rows;
  p.segments = segments;
  p.segment_length = segment_length;
  p.row_blocks = (rows + kGemmMr - 1) / kGemmMr;
  std::size_t offset = 0;
  for (std::size_t s = 0; s < segments; ++s) {
    for (std::size_t k0 = 0; k0 < segment_length; k0 += kGemmKc) {
      const std::size_t len = std::min(kGemmKc, segment_length - k0);
      p.chunks.push_back({s, k0, len, offset});
      offset += p.row_blocks * kGemmMr * len;
    }
  }
  p.data.assign(offset, 0.0f);
  for (const auto& chunk : p.chunks) {
    for (std::size_t rb = 0; rb < p.row_blocks; ++rb) {
      float* dst = p.data.data() + chunk.data_offset + rb * kGemmMr * chunk.length;
      for (std::size_t k = 0; k < chunk.length; ++k) {
        for (std::size_t i = 0; i < kGemmMr; ++i) {
          const std::size_t row = rb * kGemmMr + i;
          dst[k * kGemmMr + i] = row < rows ? value(row, chunk.segment, chunk.offset + k) : 0.0f;
        }
      }
    }
  }
  return p;
}

}  // namespace tdiv::detail
