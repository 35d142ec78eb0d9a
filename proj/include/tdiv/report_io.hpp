#pragma once

// JSON, CSV and PGM renderings of metric results. Non-finite numbers are
// written as the strings "inf" / "-inf" / "nan" in JSON and bare in CSV.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tdiv/temporal_diversity.hpp"

namespace tdiv {

// Shortest text that reads back to the same double.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

inline nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

inline nlohmann::json json_numbers(std::span<const double> values) {
  nlohmann::json a = nlohmann::json::array();
  for (double v : values) a.push_back(json_number(v));
  return a;
}

inline nlohmann::json to_json(const DiversityReport& r) {
  nlohmann::json per_frame = nlohmann::json::array();
  for (const FrameMatch& m : r.per_frame)
    per_frame.push_back({{"t", m.t}, {"best_match", m.best_match}, {"value", json_number(m.value)}});
  return {{"metric", r.metric}, {"aggregate", json_number(r.aggregate)}, {"per_frame", std::move(per_frame)}};
}

inline std::string curve_csv(const std::vector<CurvePoint>& curve) {
  std::string out = "t,value\n";
  for (const CurvePoint& p : curve) out += std::to_string(p.t) + "," + format_number(p.value) + "\n";
  return out;
}

// Full symmetric N x N table, one row per line.
inline std::string matrix_csv(const DistanceMatrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (j > 0) out += ',';
      out += format_number(m.at(i, j));
    }
    out += '\n';
  }
  return out;
}

// Binary PGM of the lower triangle, 255 at the largest distance. Cells above
// the diagonal are left black.
inline std::vector<unsigned char> matrix_pgm(const DistanceMatrix& m) {
  const std::size_t n = m.size();
  const std::string header = "P5\n" + std::to_string(n) + " " + std::to_string(n) + "\n255\n";
  std::vector<unsigned char> out(header.begin(), header.end());
  const double peak = m.max();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = j < i && peak > 0.0 ? m.at(i, j) / peak : 0.0;
      out.push_back(static_cast<unsigned char>(std::lround(v * 255.0)));
    }
  }
  return out;
}

}  // namespace tdiv
