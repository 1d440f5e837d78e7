#pragma once

// Sliding-window inputs for ID-pattern detectors: w x 29 identifier bit grids
// and fixed-length identifier sequences. A window is labeled 1 when any frame
// inside it is an attack.

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "canids/core.hpp"
#include "canids/csv.hpp"

namespace canids {

inline constexpr std::size_t kGridWindow = 29;
inline constexpr std::size_t kSequenceWindow = 16;

struct BitGrid {
  std::vector<IdBits> rows;  // row i = id_bits of frame window_start_index + i
  int label = 0;
  std::size_t window_start_index = 0;

  std::uint8_t bit(std::size_t i, std::size_t j) const { return rows[i][j]; }
};

struct IdSequence {
  std::vector<std::uint32_t> ids;
  int label = 0;
  std::size_t window_start_index = 0;
};

/// Number of complete windows: floor((n - window) / step) + 1, or 0 when n < window.
inline std::size_t window_count(std::size_t n, std::size_t window, std::size_t step) {
  if (window == 0 || step == 0) throw ValidationError("window and step must be >= 1");
  return n < window ? 0 : (n - window) / step + 1;
}

namespace detail {

/// Calls visit(start, label) for each complete window. Labels come from a
/// prefix count of attack frames.
template <class Visit>
void for_each_window(const LabeledLog& log, std::size_t window, std::size_t step, const char* what, Visit&& visit) {
  const auto count = window_count(log.size(), window, step);
  if (count == 0) {
    warn(std::string(what) + ": log of " + std::to_string(log.size()) + " frames is shorter than window " +
         std::to_string(window));
    return;
  }
  std::vector<std::size_t> attacks(log.size() + 1, 0);
  for (std::size_t i = 0; i < log.size(); ++i) attacks[i + 1] = attacks[i] + (log.frames[i].is_attack() ? 1 : 0);
  for (std::size_t w = 0; w < count; ++w) {
    const auto s = w * step;
    visit(s, attacks[s + window] - attacks[s] > 0 ? 1 : 0);
  }
}

}  // namespace detail

/// Stacks the identifier bits of consecutive frames. step = window gives the
/// original non-overlapping frames; step = 1 slides one frame at a time.
inline std::vector<BitGrid> build_bit_grids(const LabeledLog& log, std::size_t window = kGridWindow,
                                            std::size_t step = 1) {
  std::vector<BitGrid> out;
  out.reserve(window_count(log.size(), window, step));
  detail::for_each_window(log, window, step, "bit grids", [&](std::size_t s, int label) {
    BitGrid g;
    g.label = label;
    g.window_start_index = s;
    g.rows.reserve(window);
    for (std::size_t i = 0; i < window; ++i) g.rows.push_back(id_bits(log.frames[s + i].frame));
    out.push_back(std::move(g));
  });
  return out;
}

inline std::vector<IdSequence> build_id_sequences(const LabeledLog& log, std::size_t window = kSequenceWindow,
                                                  std::size_t step = 1) {
  std::vector<IdSequence> out;
  out.reserve(window_count(log.size(), window, step));
  detail::for_each_window(log, window, step, "id sequences", [&](std::size_t s, int label) {
    IdSequence q;
    q.label = label;
    q.window_start_index = s;
    q.ids.reserve(window);
    for (std::size_t i = 0; i < window; ++i) q.ids.push_back(log.frames[s + i].frame.id());
    out.push_back(std::move(q));
  });
  return out;
}

// ---- persistence -----------------------------------------------------------
//
// Grid file: uint64 LE count, uint32 LE window, then ceil(window*29/8) bytes
// per grid. Bits are row-major, MSB-first within each byte.

namespace detail {

template <class T>
void put_le(std::ostream& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.put(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF));
}

template <class T>
T get_le(std::istream& in) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = in.get();
    if (c == EOF) throw ParseError(0, "truncated grid file header");
    v |= static_cast<std::uint64_t>(c) << (8 * i);
  }
  return static_cast<T>(v);
}

}  // namespace detail

inline std::size_t packed_grid_bytes(std::size_t window) { return (window * kIdBits + 7) / 8; }

inline std::vector<std::uint8_t> pack_grid(const BitGrid& g) {
  std::vector<std::uint8_t> out(packed_grid_bytes(g.rows.size()), 0);
  std::size_t k = 0;
  for (const auto& row : g.rows)
    for (auto b : row) {
      if (b) out[k / 8] |= static_cast<std::uint8_t>(0x80u >> (k % 8));
      ++k;
    }
  return out;
}

inline void write_bit_grids(const std::vector<BitGrid>& grids, std::size_t window, std::ostream& out) {
  detail::put_le<std::uint64_t>(out, grids.size());
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(window));
  for (const auto& g : grids) {
    if (g.rows.size() != window) throw ValidationError("grid height differs from declared window");
    const auto bytes = pack_grid(g);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
}

/// Reads packed grids; labels and start indices are not part of this file.
inline std::vector<BitGrid> read_bit_grids(std::istream& in) {
  const auto count = detail::get_le<std::uint64_t>(in);
  const auto window = detail::get_le<std::uint32_t>(in);
  std::vector<BitGrid> out;
  std::vector<std::uint8_t> buf(packed_grid_bytes(window));
  for (std::uint64_t n = 0; n < count; ++n) {
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
      throw ParseError(0, "truncated grid file");
    BitGrid g;
    g.rows.resize(window);
    for (std::size_t k = 0; k < window * kIdBits; ++k)
      g.rows[k / kIdBits][k % kIdBits] = (buf[k / 8] >> (7 - k % 8)) & 1u;
    out.push_back(std::move(g));
  }
  return out;
}

/// Label vector file: window_start_index,label per grid.
inline void write_window_labels(const std::vector<BitGrid>& grids, std::ostream& out) {
  out << "window_start_index,label\n";
  for (const auto& g : grids) out << g.window_start_index << ',' << g.label << '\n';
}

inline void write_id_sequences(const std::vector<IdSequence>& seqs, std::ostream& out) {
  out << "window_start_index,label";
  const auto w = seqs.empty() ? 0 : seqs.front().ids.size();
  for (std::size_t i = 0; i < w; ++i) out << ",id" << i;
  out << '\n';
  for (const auto& q : seqs) {
    out << q.window_start_index << ',' << q.label;
    for (auto id : q.ids) out << ',' << id;
    out << '\n';
  }
}

}  // namespace canids
