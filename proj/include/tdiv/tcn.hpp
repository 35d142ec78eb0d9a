#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <span>
#include <utility>
#include <vector>

#include "tdiv/detail/gemm.hpp"
#include "tdiv/detail/scratch.hpp"
#include "tdiv/frame.hpp"
#include "tdiv/mdp.hpp"
#include "tdiv/parallel.hpp"
#include "tdiv/rng.hpp"

namespace tdiv {

enum class TemporalPadding {
  causal,     // all (k_t - 1) * d_t padding frames go before the sequence
  symmetric,  // split evenly; breaks causality, kept for negative controls
};

// One Conv3D row of the discriminator. The temporal stride is always 1 so
// every layer preserves the sequence length.
struct TcnLayerConfig {
  std::size_t filters = 1;
  std::array<std::size_t, 3> kernel{1, 1, 1};  // (k_t, k_h, k_w)
  std::array<std::size_t, 2> spatial_stride{1, 1};
  std::size_t temporal_dilation = 1;
  std::array<std::size_t, 2> spatial_padding{0, 0};
  bool batchnorm = false;
  bool activation = false;
  TemporalPadding temporal_padding = TemporalPadding::causal;

  std::size_t temporal_padding_total() const { return (kernel[0] - 1) * temporal_dilation; }
  std::size_t pad_before() const {
    const std::size_t total = temporal_padding_total();
    return temporal_padding == TemporalPadding::causal ? total : total / 2;
  }

  void validate() const {
    if (filters == 0) throw std::invalid_argument("layer needs at least one filter");
    for (std::size_t k : kernel)
      if (k == 0) throw std::invalid_argument("kernel extents must be >= 1");
    if (spatial_stride[0] == 0 || spatial_stride[1] == 0) throw std::invalid_argument("spatial stride must be >= 1");
    if (temporal_dilation == 0) throw std::invalid_argument("temporal dilation must be >= 1");
  }

  friend bool operator==(const TcnLayerConfig&, const TcnLayerConfig&) = default;
};

// Discriminator architecture: trunk rows followed by a single head row. The
// head row is instantiated twice, once for rewards and once for Q-values.
struct TcnConfig {
  std::size_t input_channels = 3;
  std::size_t input_height = 64;
  std::size_t input_width = 64;
  double leaky_slope = 0.2;
  std::vector<TcnLayerConfig> layers;

  std::span<const TcnLayerConfig> trunk() const {
    return std::span<const TcnLayerConfig>(layers).first(layers.size() - 1);
  }
  const TcnLayerConfig& head() const { return layers.back(); }

  void validate() const {
    if (layers.size() < 1) throw std::invalid_argument("architecture needs at least a head row");
    if (input_channels == 0 || input_height == 0 || input_width == 0)
      throw std::invalid_argument("input dimensions must be positive");
    for (const auto& l : layers) l.validate();
    if (head().filters != 1) throw std::invalid_argument("head rows must have exactly one filter");
  }
};

// Causal variant of the video discriminator: 64/128/256 filters with
// (3,4,4) kernels and temporal dilations 1/2/4, then a (1,4,4) head.
inline TcnConfig default_config(std::size_t channels = 3, std::size_t height = 64, std::size_t width = 64) {
  TcnConfig c;
  c.input_channels = channels;
  c.input_height = height;
  c.input_width = width;
  const std::array<std::size_t, 3> filters{64, 128, 256};
  const std::array<std::size_t, 3> dilations{1, 2, 4};
  for (std::size_t i = 0; i < 3; ++i)
    c.layers.push_back({filters[i], {3, 4, 4}, {2, 2}, dilations[i], {1, 1}, true, true, TemporalPadding::causal});
  c.layers.push_back({1, {1, 4, 4}, {2, 2}, 1, {1, 1}, false, false, TemporalPadding::causal});
  return c;
}

// Output spatial size of a strided convolution, or 0 when the padded input is
// smaller than the kernel.
constexpr std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t pad) {
  return in + 2 * pad < kernel ? 0 : (in + 2 * pad - kernel) / stride + 1;
}

// (height, width) after each row, heads included.
inline std::vector<std::pair<std::size_t, std::size_t>> spatial_trace(const TcnConfig& config) {
  std::vector<std::pair<std::size_t, std::size_t>> trace;
  std::size_t h = config.input_height;
  std::size_t w = config.input_width;
  for (const auto& l : config.layers) {
    h = conv_output_extent(h, l.kernel[1], l.spatial_stride[0], l.spatial_padding[0]);
    w = conv_output_extent(w, l.kernel[2], l.spatial_stride[1], l.spatial_padding[1]);
    trace.emplace_back(h, w);
  }
  return trace;
}

struct ReceptiveFieldReport {
  std::vector<std::size_t> per_layer;  // cumulative frames after each row
  std::size_t total_frames = 1;
};

// total = 1 + sum over rows of (k_t - 1) * d_t.
inline ReceptiveFieldReport receptive_field(const TcnConfig& config) {
  config.validate();
  ReceptiveFieldReport r;
  std::size_t span = 1;
  for (const auto& l : config.layers) {
    span += (l.kernel[0] - 1) * l.temporal_dilation;
    r.per_layer.push_back(span);
  }
  r.total_frames = span;
  return r;
}

struct BatchNormParams {
  std::vector<float> scale;
  std::vector<float> shift;
  std::vector<float> mean;
  std::vector<float> var;
  float eps = 1e-5f;

  friend bool operator==(const BatchNormParams&, const BatchNormParams&) = default;
};

struct ConvLayer {
  TcnLayerConfig config;
  std::size_t in_channels = 0;
  std::vector<float> weights;  // (filters, in_channels, k_t, k_h, k_w)
  std::vector<float> bias;     // (filters)
  BatchNormParams bn;          // empty unless config.batchnorm

  std::size_t weight_count() const {
    return config.filters * in_channels * config.kernel[0] * config.kernel[1] * config.kernel[2];
  }
  std::size_t weight_index(std::size_t o, std::size_t i, std::size_t t, std::size_t y, std::size_t x) const {
    return (((o * in_channels + i) * config.kernel[0] + t) * config.kernel[1] + y) * config.kernel[2] + x;
  }

  void validate() const {
    config.validate();
    if (in_channels == 0) throw std::invalid_argument("layer input channel count must be positive");
    if (weights.size() != weight_count())
      throw std::invalid_argument("weight tensor has " + std::to_string(weights.size()) + " values, expected " +
                                  std::to_string(weight_count()));
    if (bias.size() != config.filters) throw std::invalid_argument("bias length must equal the filter count");
    if (config.batchnorm) {
      const std::size_t n = config.filters;
      if (bn.scale.size() != n || bn.shift.size() != n || bn.mean.size() != n || bn.var.size() != n)
        throw std::invalid_argument("batchnorm parameters must have one entry per filter");
      for (std::size_t o = 0; o < n; ++o) {
        if (!(static_cast<double>(bn.var[o]) + bn.eps > 0.0))
          throw std::invalid_argument("batchnorm variance + epsilon must be positive");
      }
    }
  }

  friend bool operator==(const ConvLayer&, const ConvLayer&) = default;
};

// Causal video discriminator: a shared trunk feeding parallel reward and
// Q-value heads.
struct TcnModel {
  std::size_t input_channels = 3;
  std::size_t input_height = 64;
  std::size_t input_width = 64;
  double leaky_slope = 0.2;
  std::vector<ConvLayer> trunk;
  ConvLayer reward_head;
  ConvLayer q_head;

  TcnConfig config() const {
    TcnConfig c{input_channels, input_height, input_width, leaky_slope, {}};
    for (const auto& l : trunk) c.layers.push_back(l.config);
    c.layers.push_back(reward_head.config);
    return c;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    auto add = [&](const ConvLayer& l) {
      n += l.weights.size() + l.bias.size() + l.bn.scale.size() + l.bn.shift.size();
    };
    for (const auto& l : trunk) add(l);
    add(reward_head);
    add(q_head);
    return n;
  }

  void validate() const {
    std::size_t channels = input_channels;
    std::size_t h = input_height;
    std::size_t w = input_width;
    auto check_layer = [&](const ConvLayer& l, const char* name) {
      l.validate();
      if (l.in_channels != channels)
        throw std::invalid_argument(std::string(name) + " expects " + std::to_string(l.in_channels) +
                                    " input channels but receives " + std::to_string(channels));
    };
    for (const auto& l : trunk) {
      check_layer(l, "trunk layer");
      channels = l.config.filters;
      h = conv_output_extent(h, l.config.kernel[1], l.config.spatial_stride[0], l.config.spatial_padding[0]);
      w = conv_output_extent(w, l.config.kernel[2], l.config.spatial_stride[1], l.config.spatial_padding[1]);
      if (h == 0 || w == 0) throw std::invalid_argument("input is spatially too small for the trunk");
    }
    check_layer(reward_head, "reward head");
    check_layer(q_head, "q head");
    if (reward_head.config != q_head.config) throw std::invalid_argument("reward and q heads must share a geometry");
    if (reward_head.config.filters != 1) throw std::invalid_argument("heads must have one filter");
    const auto& hc = reward_head.config;
    if (conv_output_extent(h, hc.kernel[1], hc.spatial_stride[0], hc.spatial_padding[0]) == 0 ||
        conv_output_extent(w, hc.kernel[2], hc.spatial_stride[1], hc.spatial_padding[1]) == 0)
      throw std::invalid_argument("input is spatially too small for the heads");
  }

  friend bool operator==(const TcnModel&, const TcnModel&) = default;
};

namespace detail {

inline ConvLayer make_layer(const TcnLayerConfig& config, std::size_t in_channels) {
  ConvLayer l;
  l.config = config;
  l.in_channels = in_channels;
  l.weights.assign(l.weight_count(), 0.0f);
  l.bias.assign(config.filters, 0.0f);
  if (config.batchnorm) {
    l.bn.scale.assign(config.filters, 1.0f);
    l.bn.shift.assign(config.filters, 0.0f);
    l.bn.mean.assign(config.filters, 0.0f);
    l.bn.var.assign(config.filters, 1.0f);
    l.bn.eps = 1e-5f;
  }
  return l;
}

}  // namespace detail

// All-zero weights and biases, identity batchnorm.
inline TcnModel make_model(const TcnConfig& config) {
  config.validate();
  TcnModel m;
  m.input_channels = config.input_channels;
  m.input_height = config.input_height;
  m.input_width = config.input_width;
  m.leaky_slope = config.leaky_slope;
  std::size_t channels = config.input_channels;
  for (const auto& l : config.trunk()) {
    m.trunk.push_back(detail::make_layer(l, channels));
    channels = l.filters;
  }
  m.reward_head = detail::make_layer(config.head(), channels);
  m.q_head = detail::make_layer(config.head(), channels);
  m.validate();
  return m;
}

// He-normal weights, N(0, 2 / fan_in), drawn from one SplitMix64 stream in
// layer order (trunk, reward head, q head). Biases start at zero.
inline TcnModel init_model(const TcnConfig& config, std::uint64_t seed) {
  TcnModel m = make_model(config);
  SplitMix64 rng(seed);
  auto fill = [&](ConvLayer& l) {
    const double fan_in = static_cast<double>(l.in_channels * l.config.kernel[0] * l.config.kernel[1] * l.config.kernel[2]);
    const double std_dev = std::sqrt(2.0 / fan_in);
    for (float& w : l.weights) w = static_cast<float>(std_dev * rng.normal());
  };
  for (auto& l : m.trunk) fill(l);
  fill(m.reward_head);
  fill(m.q_head);
  return m;
}

struct TcnOutput {
  RewardTrace rewards;
  QTrace q;
};

// Forward-only inference engine. Construction packs the weights once; the
// engine is safe to share between threads, and scratch memory is pooled
// across forward passes.
class TcnEngine {
 public:
  explicit TcnEngine(const TcnModel& model) : model_(model) {
    model_.validate();
    for (const auto& l : model_.trunk) trunk_.push_back(prepare(l.config, l.in_channels, {&l}));
    head_ = prepare(model_.reward_head.config, model_.reward_head.in_channels, {&model_.reward_head, &model_.q_head});
  }

  const TcnModel& model() const { return model_; }

  TcnOutput forward(const FrameSequence& seq, unsigned threads = 0) const {
    const FrameShape& s = seq.shape();
    if (s.channels != model_.input_channels)
      throw std::invalid_argument("channel mismatch: model expects " + std::to_string(model_.input_channels) +
                                  ", sequence has " + std::to_string(s.channels));
    if (s.height != model_.input_height || s.width != model_.input_width)
      throw std::invalid_argument("spatial size mismatch: model expects " + std::to_string(model_.input_height) + "x" +
                                  std::to_string(model_.input_width) + ", sequence has " + std::to_string(s.height) +
                                  "x" + std::to_string(s.width));

    const std::size_t frames = seq.size();
    Activation act{s.channels, frames, s.height, s.width, scratch_->acquire(s.channels * frames * s.pixels())};
    for (std::size_t t = 0; t < frames; ++t) {
      const auto src = seq[t].data();
      for (std::size_t p = 0; p < s.pixels(); ++p)
        for (std::size_t c = 0; c < s.channels; ++c)
          act.data[(c * frames + t) * s.pixels() + p] = src[p * s.channels + c];
    }

    for (const auto& layer : trunk_) act = run_layer(layer, act, threads);
    const Activation heads = run_layer(head_, act, threads);

    const std::size_t plane = heads.height * heads.width;
    std::vector<double> rewards(frames);
    std::vector<double> q(frames);
    for (std::size_t t = 0; t < frames; ++t) {
      rewards[t] = spatial_mean(&heads.data[(0 * frames + t) * plane], plane);
      q[t] = spatial_mean(&heads.data[(1 * frames + t) * plane], plane);
    }
    return {RewardTrace(std::move(rewards)), QTrace(std::move(q))};
  }

 private:
  // Channel-major activations: (channels, frames, height, width).
  struct Activation {
    std::size_t channels = 0;
    std::size_t frames = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    detail::ScratchPool::Lease data;
  };

  struct PreparedLayer {
    TcnLayerConfig config;
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    detail::PackedWeights weights;
    std::vector<float> bias;
    std::vector<float> bn_mul;  // folded inference-mode batchnorm
    std::vector<float> bn_add;
  };

  // Stacks the output channels of `layers` (same geometry) into one GEMM.
  static PreparedLayer prepare(const TcnLayerConfig& config, std::size_t in_channels,
                               std::vector<const ConvLayer*> layers) {
    PreparedLayer p;
    p.config = config;
    p.in_channels = in_channels;
    const std::size_t kh = config.kernel[1];
    const std::size_t kw = config.kernel[2];
    const std::size_t taps = kh * kw;
    std::vector<std::pair<const ConvLayer*, std::size_t>> rows;
    for (const ConvLayer* l : layers)
      for (std::size_t o = 0; o < l->config.filters; ++o) rows.emplace_back(l, o);
    p.out_channels = rows.size();
    p.weights = detail::pack_weights(rows.size(), config.kernel[0], in_channels * taps,
                                     [&](std::size_t row, std::size_t kt, std::size_t k) {
                                       const auto [l, o] = rows[row];
                                       const std::size_t ci = k / taps;
                                       const std::size_t ky = (k % taps) / kw;
                                       const std::size_t kx = k % kw;
                                       return l->weights[l->weight_index(o, ci, kt, ky, kx)];
                                     });
    for (const auto& [l, o] : rows) {
      p.bias.push_back(l->bias[o]);
      if (config.batchnorm) {
        const double mul = static_cast<double>(l->bn.scale[o]) / std::sqrt(static_cast<double>(l->bn.var[o]) + l->bn.eps);
        p.bn_mul.push_back(static_cast<float>(mul));
        p.bn_add.push_back(static_cast<float>(l->bn.shift[o] - mul * l->bn.mean[o]));
      }
    }
    return p;
  }

  static double spatial_mean(const float* values, std::size_t n) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += values[i];
    return sum / static_cast<double>(n);
  }

  Activation run_layer(const PreparedLayer& layer, const Activation& in, unsigned threads) const {
    constexpr std::size_t nr = detail::kGemmNr;
    constexpr std::size_t mr = detail::kGemmMr;
    const auto& cfg = layer.config;
    const std::size_t kh = cfg.kernel[1];
    const std::size_t kw = cfg.kernel[2];
    const std::size_t sh = cfg.spatial_stride[0];
    const std::size_t sw = cfg.spatial_stride[1];
    const std::size_t ph = cfg.spatial_padding[0];
    const std::size_t pw = cfg.spatial_padding[1];
    const std::size_t out_h = conv_output_extent(in.height, kh, sh, cfg.spatial_padding[0]);
    const std::size_t out_w = conv_output_extent(in.width, kw, sw, cfg.spatial_padding[1]);
    const std::size_t frames = in.frames;
    const std::size_t plane = out_h * out_w;
    const std::size_t col_blocks = (plane + nr - 1) / nr;
    const std::size_t seg_rows = layer.in_channels * kh * kw;
    const auto& packed = layer.weights;
    const std::size_t rows_padded = packed.row_blocks * mr;

    // Each input plane is copied into a zero-bordered plane with one extra
    // zero slot at the end, so every (tap, output column) pair maps to a
    // fixed offset and padding needs no branch.
    const std::size_t taps = kh * kw;
    const std::size_t cols_padded = col_blocks * nr;
    const std::size_t padded_w = in.width + 2 * pw;
    const std::size_t padded_h = in.height + 2 * ph;
    const std::size_t zero_slot = padded_h * padded_w;
    std::vector<std::uint32_t> gather(taps * cols_padded, static_cast<std::uint32_t>(zero_slot));
    for (std::size_t ky = 0; ky < kh; ++ky) {
      for (std::size_t kx = 0; kx < kw; ++kx) {
        std::uint32_t* g = &gather[(ky * kw + kx) * cols_padded];
        for (std::size_t sp = 0; sp < plane; ++sp)
          g[sp] = static_cast<std::uint32_t>(((sp / out_w) * sh + ky) * padded_w + (sp % out_w) * sw + kx);
      }
    }

    // Spatial patches of every input frame, already in GEMM panel layout:
    // (frame, column block, ci * kh * kw, nr).
    auto patches = scratch_->acquire(frames * col_blocks * seg_rows * nr);
    parallel_for(0, frames, threads, [&](std::size_t f) {
      std::vector<float> padded(zero_slot + 1, 0.0f);
      for (std::size_t ci = 0; ci < layer.in_channels; ++ci) {
        const float* src = &in.data[(ci * frames + f) * in.height * in.width];
        for (std::size_t y = 0; y < in.height; ++y)
          std::copy_n(src + y * in.width, in.width, &padded[(y + ph) * padded_w + pw]);
        for (std::size_t cb = 0; cb < col_blocks; ++cb) {
          float* dst = &patches[((f * col_blocks + cb) * seg_rows + ci * taps) * nr];
          for (std::size_t tap = 0; tap < taps; ++tap, dst += nr) {
            const std::uint32_t* g = &gather[tap * cols_padded + cb * nr];
            for (std::size_t lane = 0; lane < nr; ++lane) dst[lane] = padded[g[lane]];
          }
        }
      }
    });

    // Accumulators in tile layout: (frame, column block, padded row, nr).
    const std::size_t tile_span = rows_padded * nr;
    auto acc = scratch_->acquire(frames * col_blocks * tile_span);
    const std::size_t blocks = frames * col_blocks;
    constexpr std::size_t kGroup = 4;
    const std::ptrdiff_t pad_before = static_cast<std::ptrdiff_t>(cfg.pad_before());
    const std::ptrdiff_t dilation = static_cast<std::ptrdiff_t>(cfg.temporal_dilation);

    parallel_for(0, (blocks + kGroup - 1) / kGroup, threads, [&](std::size_t g) {
      const std::size_t b0 = g * kGroup;
      const std::size_t b1 = std::min(blocks, b0 + kGroup);
      for (std::size_t b = b0; b < b1; ++b) {
        float* tile = &acc[b * tile_span];
        for (std::size_t r = 0; r < rows_padded; ++r)
          std::fill_n(tile + r * nr, nr, r < layer.out_channels ? layer.bias[r] : 0.0f);
      }
      for (const auto& chunk : packed.chunks) {
        for (std::size_t b = b0; b < b1; ++b) {
          const std::size_t t = b / col_blocks;
          const std::size_t cb = b % col_blocks;
          // Input frame read by this temporal tap; zero padding outside [0, T).
          const std::ptrdiff_t src =
              static_cast<std::ptrdiff_t>(t) - pad_before + static_cast<std::ptrdiff_t>(chunk.segment) * dilation;
          if (src < 0 || src >= static_cast<std::ptrdiff_t>(frames)) continue;
          const float* panel =
              &patches[((static_cast<std::size_t>(src) * col_blocks + cb) * seg_rows + chunk.offset) * nr];
          float* tile = &acc[b * tile_span];
          for (std::size_t rb = 0; rb < packed.row_blocks; ++rb)
            detail::gemm_micro_kernel(chunk.length, packed.panel(chunk, rb), panel, tile + rb * mr * nr, nr);
        }
      }
    });

    Activation out{layer.out_channels, frames, out_h, out_w, scratch_->acquire(layer.out_channels * frames * plane)};
    const float slope = static_cast<float>(model_.leaky_slope);
    parallel_for(0, frames, threads, [&](std::size_t t) {
      for (std::size_t cb = 0; cb < col_blocks; ++cb) {
        const std::size_t sp0 = cb * nr;
        const std::size_t lanes = std::min(nr, plane - sp0);
        const float* tile = &acc[(t * col_blocks + cb) * tile_span];
        for (std::size_t o = 0; o < layer.out_channels; ++o) {
          const float* row = tile + o * nr;
          float* dst = &out.data[(o * frames + t) * plane + sp0];
          const float mul = cfg.batchnorm ? layer.bn_mul[o] : 1.0f;
          const float add = cfg.batchnorm ? layer.bn_add[o] : 0.0f;
          for (std::size_t lane = 0; lane < lanes; ++lane) {
            float v = row[lane];
            if (cfg.batchnorm) v = v * mul + add;
            if (cfg.activation) v = v < 0.0f ? v * slope : v;
            dst[lane] = v;
          }
        }
      }
    });
    return out;
  }

  TcnModel model_;
  std::vector<PreparedLayer> trunk_;
  PreparedLayer head_;
  // Shared so engine copies stay cheap; leases are handed out under a lock.
  std::shared_ptr<detail::ScratchPool> scratch_ = std::make_shared<detail::ScratchPool>();
};

inline TcnOutput forward(const TcnModel& model, const FrameSequence& seq, unsigned threads = 0) {
  return TcnEngine(model).forward(seq, threads);
}

// ---------------------------------------------------------------------------
// Causality verification

struct CausalityViolation {
  std::size_t trial = 0;
  std::size_t cutoff = 0;         // outputs 0..cutoff must be unaffected
  std::size_t perturbed_frame = 0;
  std::size_t output_index = 0;
  std::string head;               // "reward" or "q"
};

struct CausalityReport {
  std::size_t trials = 0;
  std::vector<CausalityViolation> violations;

  bool causal() const { return violations.empty(); }
};

namespace detail {

inline bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

// Copy of `seq` with one element of frame `frame` replaced by a different
// value drawn from `rng`.
inline FrameSequence perturb_element(const FrameSequence& seq, std::size_t frame, std::size_t element, SplitMix64& rng) {
  std::vector<Frame> frames = seq.frames();
  std::vector<float> data(frames[frame].data().begin(), frames[frame].data().end());
  const float old = data[element];
  float v = static_cast<float>(rng.uniform());
  if (v == old) v = old < 0.5f ? old + 0.5f : old - 0.5f;
  data[element] = v;
  frames[frame] = Frame(seq.shape(), std::move(data));
  return FrameSequence(std::move(frames), seq.frame_rate());
}

}  // namespace detail

// Randomized black-box causality check. Each trial picks a cutoff t < K-1,
// perturbs one element of a frame after t, reruns the full forward pass and
// requires both heads' outputs 0..t to be bitwise unchanged.
inline CausalityReport check_causality(const TcnEngine& engine, const FrameSequence& seq, std::size_t trials,
                                       std::uint64_t seed, unsigned threads = 0) {
  const std::size_t k = seq.size();
  if (k < 2) throw std::invalid_argument("causality check needs at least 2 frames");
  const TcnOutput base = engine.forward(seq, threads);
  SplitMix64 rng(seed);
  CausalityReport report;
  report.trials = trials;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const std::size_t cutoff = rng.below(k - 1);
    const std::size_t frame = cutoff + 1 + rng.below(k - 1 - cutoff);
    const std::size_t element = rng.below(seq.shape().elements());
    const TcnOutput out = engine.forward(detail::perturb_element(seq, frame, element, rng), threads);
    for (std::size_t t = 0; t <= cutoff; ++t) {
      if (!detail::same_bits(out.rewards[t], base.rewards[t]))
        report.violations.push_back({trial, cutoff, frame, t, "reward"});
      if (!detail::same_bits(out.q[t], base.q[t])) report.violations.push_back({trial, cutoff, frame, t, "q"});
    }
  }
  return report;
}

inline CausalityReport check_causality(const TcnModel& model, const FrameSequence& seq, std::size_t trials,
                                       std::uint64_t seed, unsigned threads = 0) {
  return check_causality(TcnEngine(model), seq, trials, seed, threads);
}

// Which outputs (either head) change when every element of `frame` is
// replaced with fresh random values.
inline std::vector<bool> frame_influence(const TcnEngine& engine, const FrameSequence& seq, std::size_t frame,
                                         std::uint64_t seed, unsigned threads = 0) {
  if (frame >= seq.size()) throw std::out_of_range("frame index out of range");
  const TcnOutput base = engine.forward(seq, threads);
  SplitMix64 rng(seed);
  std::vector<float> data(seq.shape().elements());
  for (float& v : data) v = static_cast<float>(rng.uniform());
  std::vector<Frame> frames = seq.frames();
  frames[frame] = Frame(seq.shape(), std::move(data));
  const TcnOutput out = engine.forward(FrameSequence(std::move(frames)), threads);
  std::vector<bool> changed(seq.size());
  for (std::size_t t = 0; t < seq.size(); ++t)
    changed[t] = !detail::same_bits(out.rewards[t], base.rewards[t]) || !detail::same_bits(out.q[t], base.q[t]);
  return changed;
}

struct SensitivityReport {
  std::size_t trials = 0;
  std::size_t sensitive = 0;  // trials where some output at index >= frame changed

  double rate() const { return trials == 0 ? 0.0 : static_cast<double>(sensitive) / static_cast<double>(trials); }
};

// Converse of the causality check: a one-element perturbation of frame f
// should reach at least one output at index >= f.
inline SensitivityReport probe_sensitivity(const TcnEngine& engine, const FrameSequence& seq, std::size_t trials,
                                           std::uint64_t seed, unsigned threads = 0) {
  const TcnOutput base = engine.forward(seq, threads);
  SplitMix64 rng(seed);
  SensitivityReport report;
  report.trials = trials;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const std::size_t frame = rng.below(seq.size());
    const std::size_t element = rng.below(seq.shape().elements());
    const TcnOutput out = engine.forward(detail::perturb_element(seq, frame, element, rng), threads);
    for (std::size_t t = frame; t < seq.size(); ++t) {
      if (!detail::same_bits(out.rewards[t], base.rewards[t]) || !detail::same_bits(out.q[t], base.q[t])) {
        ++report.sensitive;
        break;
      }
    }
  }
  return report;
}

}  // namespace tdiv
