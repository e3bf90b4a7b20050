#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "actloc/errors.hpp"

namespace actloc {

// Planar (channel-major) raster of real-valued samples.
// Sample (x, y, c) lives at data[(c * height + y) * width + x].
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  std::size_t plane_size() const noexcept {
    return static_cast<std::size_t>(width) * height;
  }
  std::size_t offset(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(c) * height + y) * width + x;
  }
  double& at(int x, int y, int c = 0) noexcept { return data[offset(x, y, c)]; }
  double at(int x, int y, int c = 0) const noexcept { return data[offset(x, y, c)]; }

  std::span<double> plane(int c) noexcept {
    return {data.data() + c * plane_size(), plane_size()};
  }
  std::span<const double> plane(int c) const noexcept {
    return {data.data() + c * plane_size(), plane_size()};
  }

  bool same_shape(const Image& o) const noexcept {
    return width == o.width && height == o.height && channels == o.channels;
  }

  friend bool operator==(const Image&, const Image&) = default;
};

// One video image. Pixel intensities lie in [0, range].
struct Frame : Image {
  std::int64_t index = 0;

  Frame() = default;
  Frame(int w, int h, int c, std::int64_t idx = 0, double fill = 0.0)
      : Image(w, h, c, fill), index(idx) {}
  Frame(Image img, std::int64_t idx) : Image(std::move(img)), index(idx) {}

  friend bool operator==(const Frame&, const Frame&) = default;
};

inline void validate_frame(const Image& f, double range = 255.0) {
  if (f.width <= 0 || f.height <= 0)
    throw InputError("frame dimensions must be positive");
  if (f.channels != 1 && f.channels != 3)
    throw InputError("frame must have 1 or 3 channels, got " + std::to_string(f.channels));
  if (f.data.size() != f.plane_size() * f.channels)
    throw InputError("frame buffer size does not match its dimensions");
  for (double v : f.data)
    if (!(v >= 0.0 && v <= range)) throw InputError("pixel value outside [0, L]");
}

// Widen interleaved 8-bit samples (HWC) into a planar frame.
inline Frame frame_from_interleaved(std::span<const std::uint8_t> bytes, int w, int h, int c,
                                    std::int64_t index = 0) {
  if (bytes.size() != static_cast<std::size_t>(w) * h * c)
    throw InputError("interleaved buffer size mismatch");
  Frame f(w, h, c, index);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch)
        f.at(x, y, ch) = bytes[(static_cast<std::size_t>(y) * w + x) * c + ch];
  return f;
}

// One-pixel translation. (0, 0) is the identity candidate.
struct ShiftDirection {
  int dx = 0;
  int dy = 0;

  ShiftDirection inverse() const noexcept { return {-dx, -dy}; }
  friend bool operator==(const ShiftDirection&, const ShiftDirection&) = default;
};

// Identity first, then the 8 unit shifts in (dy, dx) ascending scan order.
inline constexpr std::array<ShiftDirection, 9> kShiftCandidates{{
    {0, 0},
    {-1, -1}, {0, -1}, {1, -1},
    {-1, 0},           {1, 0},
    {-1, 1},  {0, 1},  {1, 1},
}};

// out(x, y) = in(x - dx, y - dy), sources outside the frame replicate the edge.
template <typename ImageT>
ImageT shift_frame(const ImageT& in, ShiftDirection dir) {
  ImageT out = in;
  if (dir.dx == 0 && dir.dy == 0) return out;
  const int w = in.width, h = in.height;
  for (int c = 0; c < in.channels; ++c) {
    const double* src = in.data.data() + c * in.plane_size();
    double* dst = out.data.data() + c * out.plane_size();
    for (int y = 0; y < h; ++y) {
      const int sy = std::clamp(y - dir.dy, 0, h - 1);
      const double* srow = src + static_cast<std::size_t>(sy) * w;
      double* drow = dst + static_cast<std::size_t>(y) * w;
      for (int x = 0; x < w; ++x) drow[x] = srow[std::clamp(x - dir.dx, 0, w - 1)];
    }
  }
  return out;
}

}  // namespace actloc
