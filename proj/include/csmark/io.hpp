// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "csmark/censoring.hpp"
#include "csmark/grid.hpp"
#include "csmark/sim.hpp"

namespace csmark {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Locale-independent shortest round-trip formatting.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& context) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ParseError(context + ": cannot parse number '" + std::string(s) + "'");
  return v;
}

namespace detail {

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  return in;
}

inline std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace detail

/// Observation CSV: header "t,z", one row per observation, z == 0 meaning
/// censored-without-mark.
inline void write_observations_csv(const std::string& path,
                                   std::span<const Observation> data) {
  auto out = detail::open_out(path);
  out << "t,z\n";
  for (const auto& obs : data)
    out << format_double(obs.t) << ',' << format_double(obs.z) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

inline std::vector<Observation> read_observations_csv(const std::string& path) {
  auto in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line) || detail::strip_cr(line) != "t,z")
    throw ParseError(path + ":1: expected header 't,z'");
  std::vector<Observation> data;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view sv = detail::strip_cr(line);
    if (sv.empty()) continue;
    const auto comma = sv.find(',');
    if (comma == std::string_view::npos)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected 't,z' row");
    const std::string ctx = path + ":" + std::to_string(lineno);
    data.push_back({parse_double(sv.substr(0, comma), ctx),
                    parse_double(sv.substr(comma + 1), ctx)});
  }
  return data;
}

/// Latent-truth CSV "x,y,t" written by the simulator for diagnostics.
inline void write_latent_csv(const std::string& path,
                             std::span<const SimRecord> records) {
  auto out = detail::open_out(path);
  out << "x,y,t\n";
  for (const auto& r : records)
    out << format_double(r.x) << ',' << format_double(r.y) << ','
        << format_double(r.t) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

/// Cell-weight CSV: K rows of J comma-separated values; row k of the grid on
/// line k.
inline void write_bin_weights_csv(const std::string& path, const GridSpec& grid,
                                  const BinWeights& w) {
  if (w.size() != static_cast<std::size_t>(grid.p))
    throw std::invalid_argument("weights do not match the grid");
  auto out = detail::open_out(path);
  for (int k = 0; k < grid.k_bins; ++k) {
    for (int j = 0; j < grid.j_bins; ++j) {
      if (j) out << ',';
      out << format_double(w.theta[static_cast<std::size_t>(grid.index_of(j, k))]);
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

/// Reads a cell-weight CSV; returns the weights and the inferred (J, K).
inline std::pair<BinWeights, std::pair<int, int>> read_bin_weights_csv(
    const std::string& path) {
  auto in = detail::open_in(path);
  std::string line;
  std::vector<std::vector<double>> rows;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view sv = detail::strip_cr(line);
    if (sv.empty()) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    const std::string ctx = path + ":" + std::to_string(lineno);
    while (pos <= sv.size()) {
      const auto comma = sv.find(',', pos);
      const auto end = comma == std::string_view::npos ? sv.size() : comma;
      row.push_back(parse_double(sv.substr(pos, end - pos), ctx));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError(ctx + ": ragged row (" + std::to_string(row.size()) +
                       " columns, expected " + std::to_string(rows.front().size()) + ")");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path + ": empty weight file");
  const int j_bins = static_cast<int>(rows.front().size());
  const int k_bins = static_cast<int>(rows.size());
  BinWeights w;
  w.theta.reserve(static_cast<std::size_t>(j_bins) * k_bins);
  for (const auto& row : rows)
    for (double v : row) w.theta.push_back(v);
  return {std::move(w), {j_bins, k_bins}};
}

/// Binary 8-bit portable graymap (P5).
inline void write_pgm(const std::string& path, int width, int height,
                      std::span<const std::uint8_t> pixels) {
  if (static_cast<std::size_t>(width) * static_cast<std::size_t>(height) !=
      pixels.size())
    throw std::invalid_argument("pixel buffer does not match dimensions");
  auto out = detail::open_out(path);
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace csmark
