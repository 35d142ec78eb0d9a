#pragma once

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <span>
#include <string>
#include <vector>

#include "tdiv/error.hpp"
#include "tdiv/frame.hpp"

namespace tdiv {

enum class SequenceFormat { png_dir, raw_fvr };

// raw_fvr layout: "FVR1", then N, H, W, C as little-endian uint32, then
// N*H*W*C little-endian float32 values (frame-major, row-major, channels
// interleaved).
inline constexpr std::array<char, 4> kFvrMagic{'F', 'V', 'R', '1'};
inline constexpr std::size_t kFvrHeaderBytes = 20;

namespace detail {

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<unsigned char>((v >> (8 * b)) & 0xffu));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xffffffffu) throw std::invalid_argument(std::string(what) + " does not fit in 32 bits");
  return static_cast<std::uint32_t>(v);
}

inline std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

inline void write_file(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

template <typename Value>
std::vector<unsigned char> encode_fvr(std::size_t frames, const FrameShape& shape, std::span<const Value> values) {
  std::vector<unsigned char> out;
  out.reserve(kFvrHeaderBytes + values.size() * 4);
  out.insert(out.end(), kFvrMagic.begin(), kFvrMagic.end());
  put_u32(out, checked_u32(frames, "frame count"));
  put_u32(out, checked_u32(shape.height, "height"));
  put_u32(out, checked_u32(shape.width, "width"));
  put_u32(out, checked_u32(shape.channels, "channel count"));
  for (const Value v : values) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

struct FvrHeader {
  std::size_t frames;
  FrameShape shape;
};

inline FvrHeader decode_fvr_header(const std::vector<unsigned char>& bytes, const std::string& name) {
  if (bytes.size() < kFvrHeaderBytes)
    throw InputError(name + ": corrupt header, file has " + std::to_string(bytes.size()) +
                     " bytes, header needs " + std::to_string(kFvrHeaderBytes));
  if (std::memcmp(bytes.data(), kFvrMagic.data(), kFvrMagic.size()) != 0)
    throw InputError(name + ": corrupt header, bad magic at offset 0");
  FvrHeader h{get_u32(&bytes[4]), {get_u32(&bytes[8]), get_u32(&bytes[12]), get_u32(&bytes[16])}};
  const std::array<std::size_t, 4> dims{h.frames, h.shape.height, h.shape.width, h.shape.channels};
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (dims[i] == 0)
      throw InputError(name + ": corrupt header, zero dimension at offset " + std::to_string(4 + 4 * i));
  }
  const std::uint64_t count = static_cast<std::uint64_t>(h.frames) * h.shape.height * h.shape.width * h.shape.channels;
  const std::uint64_t expected = kFvrHeaderBytes + count * 4;
  if (count > (1ULL << 40) || expected != bytes.size())
    throw InputError(name + ": corrupt header, dimensions imply " + std::to_string(expected) +
                     " bytes but file has " + std::to_string(bytes.size()));
  return h;
}

inline float fvr_value(const std::vector<unsigned char>& bytes, std::size_t index) {
  return std::bit_cast<float>(get_u32(&bytes[kFvrHeaderBytes + 4 * index]));
}

}  // namespace detail

inline void save_raw_fvr(const FrameSequence& seq, const std::filesystem::path& path) {
  std::vector<float> values;
  values.reserve(seq.size() * seq.shape().elements());
  for (const Frame& f : seq) values.insert(values.end(), f.data().begin(), f.data().end());
  detail::write_file(path, detail::encode_fvr<float>(seq.size(), seq.shape(), values));
}

// Tensors are written with the same layout; values are narrowed to float32
// and may lie outside [0, 1].
inline void save_raw_fvr(const FrameTensor& tensor, const std::filesystem::path& path) {
  detail::write_file(path, detail::encode_fvr<double>(tensor.frames, tensor.shape, tensor.data));
}

inline FrameSequence load_raw_fvr(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw InputError("no such file: " + path.string());
  const auto bytes = detail::read_file(path);
  const auto header = detail::decode_fvr_header(bytes, path.string());
  const std::size_t per_frame = header.shape.elements();
  std::vector<Frame> frames;
  frames.reserve(header.frames);
  for (std::size_t k = 0; k < header.frames; ++k) {
    std::vector<float> data(per_frame);
    for (std::size_t i = 0; i < per_frame; ++i) {
      const std::size_t index = k * per_frame + i;
      const float v = detail::fvr_value(bytes, index);
      if (!(v >= 0.0f && v <= 1.0f))
        throw InputError(path.string() + ": value " + std::to_string(v) + " outside [0, 1] at byte offset " +
                         std::to_string(kFvrHeaderBytes + 4 * index) + " (frame " + std::to_string(k + 1) + ")");
      data[i] = v;
    }
    frames.emplace_back(header.shape, std::move(data));
  }
  return FrameSequence(std::move(frames));
}

// Relaxed-range reader for normalized tensors.
inline FrameTensor load_raw_fvr_tensor(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw InputError("no such file: " + path.string());
  const auto bytes = detail::read_file(path);
  const auto header = detail::decode_fvr_header(bytes, path.string());
  FrameTensor t{header.frames, header.shape, {}};
  t.data.resize(header.frames * header.shape.elements());
  for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] = detail::fvr_value(bytes, i);
  return t;
}

inline std::string png_frame_name(std::size_t index) {
  char name[32];
  std::snprintf(name, sizeof(name), "frame_%05zu.png", index);
  return name;
}

inline Frame read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str()))
    throw InputError("cannot decode " + path.string() + ": " + image.message);
  // The simplified API would re-encode 16-bit data through a gamma curve.
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    throw InputError(path.string() + ": only 8-bit PNG frames are supported");
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const std::size_t channels = color ? 3 : 1;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  png_color background{0, 0, 0};
  if (!png_image_finish_read(&image, &background, buffer.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw InputError("cannot decode " + path.string() + ": " + msg);
  }
  std::vector<float> data(buffer.size());
  std::transform(buffer.begin(), buffer.end(), data.begin(), [](png_byte v) { return static_cast<float>(v) / 255.0f; });
  return Frame({image.height, image.width, channels}, std::move(data));
}

inline void write_png(const Frame& frame, const std::filesystem::path& path) {
  if (frame.channels() != 1 && frame.channels() != 3)
    throw std::invalid_argument("png frames need 1 or 3 channels, got " + std::to_string(frame.channels()));
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = detail::checked_u32(frame.width(), "width");
  image.height = detail::checked_u32(frame.height(), "height");
  image.format = frame.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<png_byte> buffer(frame.size());
  const auto src = frame.data();
  for (std::size_t i = 0; i < buffer.size(); ++i)
    buffer[i] = static_cast<png_byte>(std::lround(static_cast<double>(src[i]) * 255.0));
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, buffer.data(), 0, nullptr))
    throw std::runtime_error("cannot write " + path.string() + ": " + image.message);
}

inline FrameSequence load_png_dir(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::exists(dir)) throw InputError("no such directory: " + dir.string());
  if (!fs::is_directory(dir)) throw InputError("not a directory: " + dir.string());

  static const std::regex pattern(R"(frame_(\d{5,})\.png)");
  std::map<std::size_t, fs::path> indexed;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && std::regex_match(name, m, pattern))
      indexed.emplace(std::stoull(m[1].str()), entry.path());
  }
  if (indexed.empty()) throw InputError(dir.string() + ": empty directory, no frame_%05d.png files");

  std::size_t expected = 1;
  for (const auto& [index, path] : indexed) {
    if (index != expected) throw InputError(dir.string() + ": gap at index " + std::to_string(expected));
    ++expected;
  }

  std::vector<Frame> frames;
  frames.reserve(indexed.size());
  for (const auto& [index, path] : indexed) {
    Frame f = read_png(path);
    if (!frames.empty() && f.shape() != frames.front().shape())
      throw InputError(dir.string() + ": frame shape mismatch at index " + std::to_string(index) + " (" +
                       to_string(f.shape()) + " vs " + to_string(frames.front().shape()) + ")");
    frames.push_back(std::move(f));
  }
  return FrameSequence(std::move(frames));
}

inline void save_png_dir(const FrameSequence& seq, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (seq.shape().channels != 1 && seq.shape().channels != 3)
    throw std::invalid_argument("png_dir supports 1 or 3 channels, got " + std::to_string(seq.shape().channels));
  if (!fs::exists(dir) && !fs::create_directory(dir))
    throw std::runtime_error("cannot create directory " + dir.string());
  for (std::size_t k = 0; k < seq.size(); ++k) write_png(seq[k], dir / png_frame_name(k + 1));
}

inline FrameSequence load_sequence(const std::filesystem::path& path, SequenceFormat format) {
  return format == SequenceFormat::png_dir ? load_png_dir(path) : load_raw_fvr(path);
}

inline void save_sequence(const FrameSequence& seq, const std::filesystem::path& path, SequenceFormat format) {
  if (format == SequenceFormat::png_dir)
    save_png_dir(seq, path);
  else
    save_raw_fvr(seq, path);
}

// Directories are PNG frame dumps; anything else is read as raw_fvr.
inline SequenceFormat detect_format(const std::filesystem::path& path) {
  return std::filesystem::is_directory(path) ? SequenceFormat::png_dir : SequenceFormat::raw_fvr;
}

}  // namespace tdiv
