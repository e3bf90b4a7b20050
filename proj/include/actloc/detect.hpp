#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "actloc/box.hpp"
#include "actloc/errors.hpp"

namespace actloc {

// One frame-level candidate: a box and a score for every action class.
struct Detection {
  Box box;
  std::vector<double> scores;
  std::int64_t frame = 0;

  double score(int c) const { return scores[static_cast<std::size_t>(c)]; }
  friend bool operator==(const Detection&, const Detection&) = default;
};

// Detections indexed by frame number.
using FrameDetections = std::vector<std::vector<Detection>>;

// Keypoint detector outputs for one frame. All tensors are row-major over
// the grid and channel-last: element (i, j, ch) sits at (j * grid_w + i) * C + ch,
// where i is the column and j the row.
struct HeatmapSet {
  int grid_w = 0;
  int grid_h = 0;
  int num_classes = 0;
  int down_ratio = 1;
  int image_w = 0;
  int image_h = 0;
  std::vector<float> center;  // grid_w * grid_h * num_classes, scores in [0, 1]
  std::vector<float> size;    // grid_w * grid_h * 2, (width, height) in input pixels
  std::vector<float> offset;  // grid_w * grid_h * 2, (dx, dy) in cells, each in [0, 1)

  HeatmapSet() = default;
  HeatmapSet(int gw, int gh, int n, int r, int w, int h)
      : grid_w(gw), grid_h(gh), num_classes(n), down_ratio(r), image_w(w), image_h(h),
        center(static_cast<std::size_t>(gw) * gh * n, 0.0f),
        size(static_cast<std::size_t>(gw) * gh * 2, 0.0f),
        offset(static_cast<std::size_t>(gw) * gh * 2, 0.0f) {}

  std::size_t cell(int i, int j) const noexcept {
    return static_cast<std::size_t>(j) * grid_w + i;
  }
  float& heat(int i, int j, int c) noexcept { return center[cell(i, j) * num_classes + c]; }
  float heat(int i, int j, int c) const noexcept { return center[cell(i, j) * num_classes + c]; }

  void validate() const {
    if (grid_w <= 0 || grid_h <= 0 || num_classes <= 0 || down_ratio <= 0 || image_w <= 0 ||
        image_h <= 0)
      throw InputError("heatmap header fields must be positive");
    auto consistent = [r = down_ratio](int grid, int full) {
      return grid == full / r || grid == (full + r - 1) / r;
    };
    if (!consistent(grid_w, image_w) || !consistent(grid_h, image_h))
      throw InputError("heatmap grid does not match image size / down ratio");
    const std::size_t cells = static_cast<std::size_t>(grid_w) * grid_h;
    if (center.size() != cells * num_classes || size.size() != cells * 2 ||
        offset.size() != cells * 2)
      throw InputError("heatmap tensor sizes do not match the grid");
    for (float v : center)
      if (!(v >= 0.0f && v <= 1.0f)) throw InputError("center score outside [0, 1]");
    for (float v : size)
      if (!(v >= 0.0f) || !std::isfinite(v)) throw InputError("negative or non-finite size");
    for (float v : offset)
      if (!(v >= 0.0f && v < 1.0f)) throw InputError("offset outside [0, 1)");
  }
};

struct DecodeOptions {
  double score_floor = 0.05;
  int max_per_class = 20;
  // Dense: the score vector is the full class column at the peak cell.
  // Sparse: only the peak class is non-zero.
  bool dense_scores = false;
};

namespace detail {

// Strict maximum under the order (value desc, scan index asc): equal
// neighbours that come later in scan order do not block a peak.
inline bool is_peak(const HeatmapSet& h, int i, int j, int c) {
  const float v = h.heat(i, j, c);
  for (int dj = -1; dj <= 1; ++dj) {
    const int nj = j + dj;
    if (nj < 0 || nj >= h.grid_h) continue;
    for (int di = -1; di <= 1; ++di) {
      const int ni = i + di;
      if ((di == 0 && dj == 0) || ni < 0 || ni >= h.grid_w) continue;
      const float n = h.heat(ni, nj, c);
      if (n > v) return false;
      if (n == v && h.cell(ni, nj) < h.cell(i, j)) return false;
    }
  }
  return true;
}

}  // namespace detail

// Turns center/size/offset maps into class-scored boxes: per class, the
// local maxima at or above the floor, best `max_per_class` first. Output is
// ordered by class, then by descending score.
inline std::vector<Detection> decode_heatmaps(const HeatmapSet& h, const DecodeOptions& opt = {},
                                              std::int64_t frame = 0) {
  h.validate();
  if (opt.max_per_class < 0) throw InputError("max_per_class must be non-negative");
  struct Peak {
    std::size_t cell;
    int i, j;
    float score;
  };
  std::vector<Detection> out;
  std::vector<Peak> peaks;
  const double r = h.down_ratio;
  for (int c = 0; c < h.num_classes; ++c) {
    peaks.clear();
    for (int j = 0; j < h.grid_h; ++j)
      for (int i = 0; i < h.grid_w; ++i) {
        const float v = h.heat(i, j, c);
        if (v >= opt.score_floor && v > 0.0f && detail::is_peak(h, i, j, c))
          peaks.push_back({h.cell(i, j), i, j, v});
      }
    std::stable_sort(peaks.begin(), peaks.end(),
                     [](const Peak& a, const Peak& b) { return a.score > b.score; });
    if (peaks.size() > static_cast<std::size_t>(opt.max_per_class))
      peaks.resize(static_cast<std::size_t>(opt.max_per_class));
    for (const Peak& p : peaks) {
      const double cx = (p.i + static_cast<double>(h.offset[p.cell * 2])) * r;
      const double cy = (p.j + static_cast<double>(h.offset[p.cell * 2 + 1])) * r;
      const double hw = static_cast<double>(h.size[p.cell * 2]) / 2.0;
      const double hh = static_cast<double>(h.size[p.cell * 2 + 1]) / 2.0;
      Detection d;
      d.frame = frame;
      d.box = clamp_box({cx - hw, cy - hh, cx + hw, cy + hh}, h.image_w, h.image_h);
      d.scores.assign(static_cast<std::size_t>(h.num_classes), 0.0);
      if (opt.dense_scores) {
        for (int k = 0; k < h.num_classes; ++k) d.scores[k] = h.center[p.cell * h.num_classes + k];
      } else {
        d.scores[c] = p.score;
      }
      out.push_back(std::move(d));
    }
  }
  return out;
}

// Indices of the detections greedy NMS keeps for class `c`, in descending
// class-c score (ties: earlier index first). A candidate is dropped when its
// IoU with an already kept box exceeds `iou_thresh`.
inline std::vector<std::size_t> nms_indices(std::span<const Detection> dets, int c,
                                            double iou_thresh, std::size_t top_n) {
  if (!(iou_thresh >= 0.0 && iou_thresh <= 1.0)) throw InputError("nms threshold outside [0, 1]");
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].score(c) > dets[b].score(c);
  });
  std::vector<std::size_t> kept;
  for (std::size_t idx : order) {
    if (kept.size() >= top_n) break;
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return iou(dets[idx].box, dets[k].box) > iou_thresh;
    });
    if (!suppressed) kept.push_back(idx);
  }
  return kept;
}

inline std::vector<Detection> nms(std::span<const Detection> dets, int c, double iou_thresh,
                                  std::size_t top_n) {
  std::vector<Detection> out;
  for (std::size_t i : nms_indices(dets, c, iou_thresh, top_n)) out.push_back(dets[i]);
  return out;
}

}  // namespace actloc
