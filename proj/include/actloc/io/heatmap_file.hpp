#pragma once

// Binary heatmap file, one per frame:
//   header: grid_w, grid_h, N, R, W, H  (u32 little-endian each)
//   center: grid_h * grid_w * N f32, then size: * 2 f32, then offset: * 2 f32
// Tensors are row-major over the grid, channel-last, little-endian.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "actloc/detect.hpp"
#include "actloc/errors.hpp"

namespace actloc::io {

namespace detail {

static_assert(std::endian::native == std::endian::little, "heatmap I/O assumes a little-endian host");

inline std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw ParseError("truncated heatmap header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void write_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline void read_f32(std::istream& in, std::vector<float>& v) {
  if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float))))
    throw ParseError("truncated heatmap tensor");
}

}  // namespace detail

inline HeatmapSet read_heatmaps(std::istream& in) {
  std::uint32_t hdr[6];
  for (auto& v : hdr) v = detail::read_u32(in);
  for (auto v : hdr)
    if (v == 0 || v > (1u << 20)) throw InputError("heatmap header field out of range");
  HeatmapSet h(static_cast<int>(hdr[0]), static_cast<int>(hdr[1]), static_cast<int>(hdr[2]),
               static_cast<int>(hdr[3]), static_cast<int>(hdr[4]), static_cast<int>(hdr[5]));
  detail::read_f32(in, h.center);
  detail::read_f32(in, h.size);
  detail::read_f32(in, h.offset);
  h.validate();
  return h;
}

inline HeatmapSet read_heatmaps(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  return read_heatmaps(in);
}

inline void write_heatmaps(std::ostream& out, const HeatmapSet& h) {
  for (int v : {h.grid_w, h.grid_h, h.num_classes, h.down_ratio, h.image_w, h.image_h})
    detail::write_u32(out, static_cast<std::uint32_t>(v));
  for (const auto* t : {&h.center, &h.size, &h.offset})
    out.write(reinterpret_cast<const char*>(t->data()), static_cast<std::streamsize>(t->size() * sizeof(float)));
}

inline void write_heatmaps(const std::string& path, const HeatmapSet& h) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  write_heatmaps(out, h);
}

}  // namespace actloc::io
