#pragma once

// Versioned JSON model files. Tensors are nested arrays in their natural
// shape, or references into a little-endian float32 sidecar file.

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "tdiv/error.hpp"
#include "tdiv/tcn.hpp"
#include "tdiv/video_io.hpp"

namespace tdiv {

inline constexpr const char* kModelFormat = "tdiv-tcn";
inline constexpr int kModelVersion = 1;

enum class TensorStorage { inline_json, sidecar };

namespace detail {

using json = nlohmann::json;

inline json nest(const std::vector<float>& data, const std::vector<std::size_t>& shape, std::size_t dim,
                 std::size_t& pos) {
  json a = json::array();
  if (dim + 1 == shape.size()) {
    for (std::size_t i = 0; i < shape[dim]; ++i) a.push_back(static_cast<double>(data[pos++]));
    return a;
  }
  for (std::size_t i = 0; i < shape[dim]; ++i) a.push_back(nest(data, shape, dim + 1, pos));
  return a;
}

inline void flatten(const json& j, const std::vector<std::size_t>& shape, std::size_t dim, std::vector<float>& out,
                    const std::string& where) {
  if (!j.is_array() || j.size() != shape[dim])
    throw InputError(where + ": expected an array of length " + std::to_string(shape[dim]) + " at depth " +
                     std::to_string(dim));
  for (const json& e : j) {
    if (dim + 1 == shape.size()) {
      if (!e.is_number()) throw InputError(where + ": tensor entries must be numbers");
      out.push_back(static_cast<float>(e.get<double>()));
    } else {
      flatten(e, shape, dim + 1, out, where);
    }
  }
}

class TensorWriter {
 public:
  explicit TensorWriter(TensorStorage storage) : storage_(storage) {}

  json put(const std::vector<float>& data, const std::vector<std::size_t>& shape, const std::string& where) {
    for (float v : data)
      if (!std::isfinite(v)) throw std::invalid_argument(where + " contains a non-finite value");
    if (storage_ == TensorStorage::sidecar) {
      json ref{{"shape", shape}, {"offset", sidecar_.size() / 4}};
      for (float v : data) put_u32(sidecar_, std::bit_cast<std::uint32_t>(v));
      return ref;
    }
    std::size_t pos = 0;
    return nest(data, shape, 0, pos);
  }

  const std::vector<unsigned char>& sidecar() const { return sidecar_; }

 private:
  TensorStorage storage_;
  std::vector<unsigned char> sidecar_;
};

class TensorReader {
 public:
  explicit TensorReader(std::vector<unsigned char> sidecar) : sidecar_(std::move(sidecar)) {}

  std::vector<float> get(const json& j, const std::vector<std::size_t>& shape, const std::string& where) const {
    std::size_t count = 1;
    for (std::size_t s : shape) count *= s;
    std::vector<float> out;
    out.reserve(count);
    if (j.is_object()) {
      if (!j.contains("offset") || !j.contains("shape")) throw InputError(where + ": sidecar reference needs shape and offset");
      if (j.at("shape").get<std::vector<std::size_t>>() != shape) throw InputError(where + ": tensor shape mismatch");
      const std::size_t offset = j.at("offset").get<std::size_t>();
      if ((offset + count) * 4 > sidecar_.size())
        throw InputError(where + ": sidecar reference past end of file (offset " + std::to_string(offset) + ")");
      for (std::size_t i = 0; i < count; ++i)
        out.push_back(std::bit_cast<float>(get_u32(&sidecar_[(offset + i) * 4])));
      return out;
    }
    if (shape.empty() || count == 0) throw InputError(where + ": empty tensor");
    flatten(j, shape, 0, out, where);
    return out;
  }

 private:
  std::vector<unsigned char> sidecar_;
};

inline json layer_to_json(const ConvLayer& l, TensorWriter& w, const std::string& name) {
  const auto& c = l.config;
  json j{{"filters", c.filters},
         {"in_channels", l.in_channels},
         {"kernel", c.kernel},
         {"stride", {1, c.spatial_stride[0], c.spatial_stride[1]}},
         {"temporal_dilation", c.temporal_dilation},
         {"spatial_padding", c.spatial_padding},
         {"temporal_padding", c.temporal_padding == TemporalPadding::causal ? "causal" : "symmetric"},
         {"batchnorm", c.batchnorm},
         {"activation", c.activation}};
  j["weights"] = w.put(l.weights, {c.filters, l.in_channels, c.kernel[0], c.kernel[1], c.kernel[2]}, name + ".weights");
  j["bias"] = w.put(l.bias, {c.filters}, name + ".bias");
  if (c.batchnorm) {
    j["bn"] = {{"scale", w.put(l.bn.scale, {c.filters}, name + ".bn.scale")},
               {"shift", w.put(l.bn.shift, {c.filters}, name + ".bn.shift")},
               {"mean", w.put(l.bn.mean, {c.filters}, name + ".bn.mean")},
               {"var", w.put(l.bn.var, {c.filters}, name + ".bn.var")},
               {"eps", static_cast<double>(l.bn.eps)}};
  }
  return j;
}

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw InputError(where + ": missing field \"" + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InputError(where + ": field \"" + key + "\" has the wrong type");
  }
}

inline ConvLayer layer_from_json(const json& j, const TensorReader& r, const std::string& where) {
  if (!j.is_object()) throw InputError(where + ": layer must be an object");
  ConvLayer l;
  auto& c = l.config;
  c.filters = field<std::size_t>(j, "filters", where);
  l.in_channels = field<std::size_t>(j, "in_channels", where);
  c.kernel = field<std::array<std::size_t, 3>>(j, "kernel", where);
  const auto stride = field<std::array<std::size_t, 3>>(j, "stride", where);
  if (stride[0] != 1) throw InputError(where + ": temporal stride must be 1");
  c.spatial_stride = {stride[1], stride[2]};
  c.temporal_dilation = field<std::size_t>(j, "temporal_dilation", where);
  c.spatial_padding = field<std::array<std::size_t, 2>>(j, "spatial_padding", where);
  const auto padding = field<std::string>(j, "temporal_padding", where);
  if (padding == "causal") c.temporal_padding = TemporalPadding::causal;
  else if (padding == "symmetric") c.temporal_padding = TemporalPadding::symmetric;
  else throw InputError(where + ": unknown temporal_padding \"" + padding + "\"");
  c.batchnorm = field<bool>(j, "batchnorm", where);
  c.activation = field<bool>(j, "activation", where);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(where + ": " + e.what());
  }
  if (!j.contains("weights") || !j.contains("bias")) throw InputError(where + ": missing weights or bias");
  l.weights = r.get(j["weights"], {c.filters, l.in_channels, c.kernel[0], c.kernel[1], c.kernel[2]}, where + ".weights");
  l.bias = r.get(j["bias"], {c.filters}, where + ".bias");
  if (c.batchnorm) {
    if (!j.contains("bn")) throw InputError(where + ": batchnorm layer without \"bn\" parameters");
    const json& bn = j["bn"];
    const std::string w = where + ".bn";
    for (const char* key : {"scale", "shift", "mean", "var"})
      if (!bn.contains(key)) throw InputError(w + ": missing field \"" + key + "\"");
    l.bn.scale = r.get(bn["scale"], {c.filters}, w + ".scale");
    l.bn.shift = r.get(bn["shift"], {c.filters}, w + ".shift");
    l.bn.mean = r.get(bn["mean"], {c.filters}, w + ".mean");
    l.bn.var = r.get(bn["var"], {c.filters}, w + ".var");
    l.bn.eps = static_cast<float>(field<double>(bn, "eps", w));
  }
  return l;
}

}  // namespace detail

// JSON document plus the sidecar bytes (empty for inline storage).
struct EncodedModel {
  nlohmann::json document;
  std::vector<unsigned char> sidecar;
};

inline EncodedModel encode_model(const TcnModel& model, TensorStorage storage = TensorStorage::inline_json,
                                 const std::string& sidecar_name = {}) {
  model.validate();
  detail::TensorWriter w(storage);
  nlohmann::json j{{"format", kModelFormat},
                   {"version", kModelVersion},
                   {"input", {{"channels", model.input_channels},
                              {"height", model.input_height},
                              {"width", model.input_width}}},
                   {"leaky_slope", model.leaky_slope}};
  j["trunk"] = nlohmann::json::array();
  for (std::size_t i = 0; i < model.trunk.size(); ++i)
    j["trunk"].push_back(detail::layer_to_json(model.trunk[i], w, "trunk[" + std::to_string(i) + "]"));
  j["reward_head"] = detail::layer_to_json(model.reward_head, w, "reward_head");
  j["q_head"] = detail::layer_to_json(model.q_head, w, "q_head");
  if (storage == TensorStorage::sidecar) j["sidecar"] = sidecar_name;
  return {std::move(j), w.sidecar()};
}

inline TcnModel decode_model(const nlohmann::json& j, std::vector<unsigned char> sidecar = {}) {
  const std::string where = "model";
  if (!j.is_object()) throw InputError("model file must hold a JSON object");
  if (detail::field<std::string>(j, "format", where) != kModelFormat)
    throw InputError("not a tdiv model file (format field)");
  const int version = detail::field<int>(j, "version", where);
  if (version != kModelVersion) throw InputError("unsupported model version " + std::to_string(version));
  const detail::TensorReader r(std::move(sidecar));
  TcnModel m;
  if (!j.contains("input")) throw InputError("model: missing field \"input\"");
  const auto& in = j["input"];
  m.input_channels = detail::field<std::size_t>(in, "channels", "model.input");
  m.input_height = detail::field<std::size_t>(in, "height", "model.input");
  m.input_width = detail::field<std::size_t>(in, "width", "model.input");
  m.leaky_slope = detail::field<double>(j, "leaky_slope", where);
  if (!j.contains("trunk") || !j["trunk"].is_array()) throw InputError("model: \"trunk\" must be an array");
  for (std::size_t i = 0; i < j["trunk"].size(); ++i)
    m.trunk.push_back(detail::layer_from_json(j["trunk"][i], r, "trunk[" + std::to_string(i) + "]"));
  if (!j.contains("reward_head") || !j.contains("q_head")) throw InputError("model: missing head layers");
  m.reward_head = detail::layer_from_json(j["reward_head"], r, "reward_head");
  m.q_head = detail::layer_from_json(j["q_head"], r, "q_head");
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("model: ") + e.what());
  }
  return m;
}

// Sidecar storage writes `<path>.bin` next to the JSON file and records its
// file name, so the pair can be moved together.
inline void save_model(const TcnModel& model, const std::filesystem::path& path,
                       TensorStorage storage = TensorStorage::inline_json) {
  const std::filesystem::path bin = path.string() + ".bin";
  const EncodedModel e = encode_model(model, storage, bin.filename().string());
  const std::string text = e.document.dump() + "\n";
  detail::write_file(path, std::vector<unsigned char>(text.begin(), text.end()));
  if (storage == TensorStorage::sidecar) detail::write_file(bin, e.sidecar);
}

inline TcnModel load_model(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("model file " + path.string() + " is not valid JSON: " + e.what());
  }
  std::vector<unsigned char> sidecar;
  if (j.is_object() && j.contains("sidecar")) {
    if (!j["sidecar"].is_string()) throw InputError("model: \"sidecar\" must be a file name");
    sidecar = detail::read_file(path.parent_path() / j["sidecar"].get<std::string>());
  }
  return decode_model(j, std::move(sidecar));
}

}  // namespace tdiv
