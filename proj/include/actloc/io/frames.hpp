#pragma once

// Frame sources and map dumps.
//   * PNG directories: files named %06d.png, read in index order.
//   * Raw planar stream: width u32-LE, height u32-LE, channels u8, then
//     frames of width*height*channels bytes, channel-major.
// Requires libpng.

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "actloc/errors.hpp"
#include "actloc/image.hpp"

namespace actloc::io {

namespace fs = std::filesystem;

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline void png_throw(png_structp, png_const_charp msg) { throw InputError(std::string("png: ") + msg); }
inline void png_quiet(png_structp, png_const_charp) {}

}  // namespace detail

// 8-bit gray or RGB; palette and 16-bit images are converted, alpha dropped.
inline Frame read_png(const std::string& path, std::int64_t index = 0) {
  detail::FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw InputError("cannot open '" + path + "'");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, detail::png_throw, detail::png_quiet);
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};

  png_init_io(png, fp.get());
  png_read_info(png, info);
  const png_byte color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int c = png_get_channels(png, info);
  if (c != 1 && c != 3) throw InputError("unsupported channel count in '" + path + "'");
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(w) * h * c);
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) rows[y] = buf.data() + static_cast<std::size_t>(y) * w * c;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  return frame_from_interleaved(buf, w, h, c, index);
}

// Writes samples after mapping [lo, hi] linearly to [0, 255] (rounded, clamped).
inline void write_png(const std::string& path, const Image& img, double lo = 0.0, double hi = 255.0) {
  if (img.channels != 1 && img.channels != 3) throw InputError("PNG output needs 1 or 3 channels");
  detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw InputError("cannot write '" + path + "'");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, detail::png_throw, detail::png_quiet);
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};

  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const double scale = 255.0 / (hi - lo);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width) * img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        const double v = std::round((img.at(x, y, c) - lo) * scale);
        row[static_cast<std::size_t>(x) * img.channels + c] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
}

// Similarity maps are exported with [-1, 1] mapped onto [0, 255].
inline void write_map_png(const std::string& path, const Image& map) { write_png(path, map, -1.0, 1.0); }

inline std::string frame_filename(std::int64_t index, const std::string& prefix = "",
                                  const std::string& ext = ".png") {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06lld", static_cast<long long>(index));
  return prefix + buf + ext;
}

// Indices of the %06d.png files in a directory, ascending.
inline std::vector<std::int64_t> list_png_frames(const std::string& dir) {
  if (!fs::is_directory(dir)) throw InputError("'" + dir + "' is not a directory");
  std::vector<std::int64_t> idx;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.size() != 10 || name.substr(6) != ".png") continue;
    if (!std::all_of(name.begin(), name.begin() + 6, [](char ch) { return ch >= '0' && ch <= '9'; })) continue;
    idx.push_back(std::stoll(name.substr(0, 6)));
  }
  std::sort(idx.begin(), idx.end());
  return idx;
}

inline std::vector<Frame> read_png_dir(const std::string& dir) {
  std::vector<Frame> frames;
  for (std::int64_t i : list_png_frames(dir)) {
    frames.push_back(read_png((fs::path(dir) / frame_filename(i)).string(), i));
    if (!frames.back().same_shape(frames.front()))
      throw InputError("frame " + frame_filename(i) + " differs in size from the first frame");
  }
  return frames;
}

class RawFrameReader {
 public:
  explicit RawFrameReader(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw InputError("cannot open '" + path + "'");
    unsigned char hdr[9];
    if (!in_.read(reinterpret_cast<char*>(hdr), 9)) throw ParseError("truncated raw stream header");
    auto u32 = [&](int o) {
      return static_cast<std::uint32_t>(hdr[o]) | (static_cast<std::uint32_t>(hdr[o + 1]) << 8) |
             (static_cast<std::uint32_t>(hdr[o + 2]) << 16) | (static_cast<std::uint32_t>(hdr[o + 3]) << 24);
    };
    width_ = static_cast<int>(u32(0));
    height_ = static_cast<int>(u32(4));
    channels_ = hdr[8];
    if (width_ <= 0 || height_ <= 0 || (channels_ != 1 && channels_ != 3))
      throw InputError("invalid raw stream header");
    buf_.resize(static_cast<std::size_t>(width_) * height_ * channels_);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }

  std::optional<Frame> next() {
    in_.read(reinterpret_cast<char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
    const auto got = static_cast<std::size_t>(in_.gcount());
    if (got == 0) return std::nullopt;
    if (got != buf_.size()) throw ParseError("truncated frame " + std::to_string(count_) + " in raw stream");
    Frame f(width_, height_, channels_, count_++);
    std::copy(buf_.begin(), buf_.end(), f.data.begin());
    return f;
  }

 private:
  std::ifstream in_;
  int width_ = 0, height_ = 0, channels_ = 0;
  std::int64_t count_ = 0;
  std::vector<std::uint8_t> buf_;
};

inline void write_raw_stream(const std::string& path, const std::vector<Frame>& frames) {
  if (frames.empty()) throw InputError("no frames to write");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  const Frame& f0 = frames.front();
  auto put32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  put32(static_cast<std::uint32_t>(f0.width));
  put32(static_cast<std::uint32_t>(f0.height));
  out.put(static_cast<char>(f0.channels));
  for (const Frame& f : frames) {
    if (!f.same_shape(f0)) throw InputError("raw stream frames must share one shape");
    for (double v : f.data) out.put(static_cast<char>(static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0))));
  }
}

// A directory of PNGs or a raw stream file, chosen by path type.
inline std::vector<Frame> read_frames(const std::string& path) {
  if (fs::is_directory(path)) return read_png_dir(path);
  RawFrameReader reader(path);
  std::vector<Frame> frames;
  while (auto f = reader.next()) frames.push_back(std::move(*f));
  return frames;
}

}  // namespace actloc::io
