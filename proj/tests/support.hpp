#pragma once

// Test-only reference implementations and random instance builders. The
// references are written from the definitions, one pixel / cell / box at a
// time, and share nothing with the library beyond its data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "actloc/actloc.hpp"

namespace testsupport {

using namespace actloc;

inline Frame random_frame(Rng& rng, int w, int h, int c, std::int64_t index = 0) {
  Frame f(w, h, c, index);
  for (double& v : f.data) v = std::floor(rng.uniform(0.0, 256.0));
  return f;
}

// Smooth-ish texture: random blocks plus per-pixel noise, so every 7x7 patch
// has variance and one-pixel shifts are distinguishable.
inline Frame textured_frame(Rng& rng, int w, int h, int c) {
  Frame f(w, h, c);
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double block = static_cast<double>(mix64(static_cast<std::uint64_t>((y / 3) * 977 + (x / 3) * 131 + ch)) % 160);
        f.at(x, y, ch) = block + std::floor(rng.uniform(0.0, 96.0));
      }
  return f;
}

// Windowed SSIM at one pixel, straight from the definition.
inline double ssim_at(const Image& a, const Image& b, int x, int y, int c, const SsimParams& p) {
  const int r = p.window / 2;
  std::vector<double> pa, pb;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) {
      const int sx = std::min(std::max(x + dx, 0), a.width - 1);
      const int sy = std::min(std::max(y + dy, 0), a.height - 1);
      pa.push_back(a.at(sx, sy, c));
      pb.push_back(b.at(sx, sy, c));
    }
  const double n = static_cast<double>(pa.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    ma += pa[i];
    mb += pb[i];
  }
  ma /= n;
  mb /= n;
  double va = 0, vb = 0, cov = 0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    va += (pa[i] - ma) * (pa[i] - ma);
    vb += (pb[i] - mb) * (pb[i] - mb);
    cov += (pa[i] - ma) * (pb[i] - mb);
  }
  va /= n - 1;
  vb /= n - 1;
  cov /= n - 1;
  return ((2 * ma * mb + p.c1) * (2 * cov + p.c2)) / ((ma * ma + mb * mb + p.c1) * (va + vb + p.c2));
}

// Largest |library - reference| over the whole map.
inline double ssim_max_error(const Image& a, const Image& b, const SsimParams& p) {
  const TemporalMap m = ssim_map(a, b, p);
  double worst = 0.0;
  for (int c = 0; c < a.channels; ++c)
    for (int y = 0; y < a.height; ++y)
      for (int x = 0; x < a.width; ++x)
        worst = std::max(worst, std::abs(m.at(x, y, c) - ssim_at(a, b, x, y, c, p)));
  return worst;
}

inline HeatmapSet random_heatmaps(Rng& rng, int gw, int gh, int n, int r, bool quantized) {
  HeatmapSet h(gw, gh, n, r, gw * r, gh * r);
  for (float& v : h.center) {
    const double u = rng.uniform01();
    v = quantized ? static_cast<float>(std::floor(u * 5.0) / 4.0 > 1.0 ? 1.0 : std::floor(u * 5.0) / 4.0)
                  : static_cast<float>(u < 0.3 ? 0.0 : u);
  }
  for (float& v : h.size) v = static_cast<float>(rng.uniform(0.0, 40.0));
  for (float& v : h.offset) v = static_cast<float>(rng.uniform(0.0, 0.999));
  return h;
}

// Every cell checked against its full 3x3 neighbourhood; equal neighbours
// earlier in row-major order win.
inline std::vector<Detection> decode_reference(const HeatmapSet& h, const DecodeOptions& opt, std::int64_t frame) {
  std::vector<Detection> out;
  for (int c = 0; c < h.num_classes; ++c) {
    struct P {
      int i, j;
      float v;
    };
    std::vector<P> peaks;
    for (int j = 0; j < h.grid_h; ++j)
      for (int i = 0; i < h.grid_w; ++i) {
        const float v = h.center[(static_cast<std::size_t>(j) * h.grid_w + i) * h.num_classes + c];
        if (!(v > 0.0f) || v < opt.score_floor) continue;
        bool peak = true;
        for (int nj = j - 1; nj <= j + 1; ++nj)
          for (int ni = i - 1; ni <= i + 1; ++ni) {
            if (ni < 0 || nj < 0 || ni >= h.grid_w || nj >= h.grid_h || (ni == i && nj == j)) continue;
            const float u = h.center[(static_cast<std::size_t>(nj) * h.grid_w + ni) * h.num_classes + c];
            const bool earlier = nj < j || (nj == j && ni < i);
            if (u > v || (u == v && earlier)) peak = false;
          }
        if (peak) peaks.push_back({i, j, v});
      }
    // Insertion sort by score, keeping scan order among equal scores.
    for (std::size_t a = 1; a < peaks.size(); ++a)
      for (std::size_t b = a; b > 0 && peaks[b].v > peaks[b - 1].v; --b) std::swap(peaks[b], peaks[b - 1]);
    for (std::size_t k = 0; k < peaks.size() && k < static_cast<std::size_t>(opt.max_per_class); ++k) {
      const std::size_t cell = static_cast<std::size_t>(peaks[k].j) * h.grid_w + peaks[k].i;
      const double cx = (peaks[k].i + static_cast<double>(h.offset[cell * 2])) * h.down_ratio;
      const double cy = (peaks[k].j + static_cast<double>(h.offset[cell * 2 + 1])) * h.down_ratio;
      const double hw = static_cast<double>(h.size[cell * 2]) / 2.0;
      const double hh = static_cast<double>(h.size[cell * 2 + 1]) / 2.0;
      auto cl = [](double v, double hi) { return v < 0.0 ? 0.0 : (v > hi ? hi : v); };
      Detection d;
      d.frame = frame;
      d.box = {cl(cx - hw, h.image_w), cl(cy - hh, h.image_h), cl(cx + hw, h.image_w), cl(cy + hh, h.image_h)};
      d.scores.assign(static_cast<std::size_t>(h.num_classes), 0.0);
      if (opt.dense_scores)
        for (int q = 0; q < h.num_classes; ++q) d.scores[q] = h.center[cell * h.num_classes + q];
      else
        d.scores[c] = peaks[k].v;
      out.push_back(d);
    }
  }
  return out;
}

inline double rect_iou(const Box& a, const Box& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0 || ih <= 0) return 0.0;
  const double inter = iw * ih;
  return inter / ((a.x2 - a.x1) * (a.y2 - a.y1) + (b.x2 - b.x1) * (b.y2 - b.y1) - inter);
}

// Repeatedly take the best remaining box and strike out its overlaps.
inline std::vector<std::size_t> nms_reference(const std::vector<Detection>& d, int c, double th, std::size_t top_n) {
  std::vector<bool> alive(d.size(), true);
  std::vector<std::size_t> kept;
  while (kept.size() < top_n) {
    std::size_t best = d.size();
    for (std::size_t i = 0; i < d.size(); ++i)
      if (alive[i] && (best == d.size() || d[i].scores[c] > d[best].scores[c])) best = i;
    if (best == d.size()) break;
    kept.push_back(best);
    alive[best] = false;
    for (std::size_t i = 0; i < d.size(); ++i)
      if (alive[i] && rect_iou(d[i].box, d[best].box) > th) alive[i] = false;
  }
  return kept;
}

inline Box random_box(Rng& rng, double w, double h, double min_side = 4.0, double max_side = 60.0) {
  const double bw = rng.uniform(min_side, max_side), bh = rng.uniform(min_side, max_side);
  const double x = rng.uniform(0.0, w - bw), y = rng.uniform(0.0, h - bh);
  return {x, y, x + bw, y + bh};
}

// Random detection stream: a few drifting objects (so tubes actually form)
// plus clutter. Scores are quantized now and then to provoke ties.
inline FrameDetections random_stream(Rng& rng, int frames, int classes, int max_objects = 5, int max_dets = 8) {
  struct Obj {
    Box box;
    double vx, vy;
    int label;
  };
  std::vector<Obj> objs;
  const int n_obj = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_objects)));
  for (int i = 0; i < n_obj; ++i)
    objs.push_back({random_box(rng, 120, 120, 10, 30), rng.uniform(-3, 3), rng.uniform(-3, 3),
                    static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)))});
  const bool coarse = rng.bernoulli(0.3);
  auto score = [&]() {
    const double s = rng.uniform01();
    return coarse ? std::round(s * 4.0) / 4.0 : s;
  };
  FrameDetections out(static_cast<std::size_t>(frames));
  for (int t = 0; t < frames; ++t) {
    auto& dets = out[static_cast<std::size_t>(t)];
    for (Obj& o : objs) {
      o.box = {o.box.x1 + o.vx, o.box.y1 + o.vy, o.box.x2 + o.vx, o.box.y2 + o.vy};
      if (dets.size() >= static_cast<std::size_t>(max_dets) || rng.bernoulli(0.25)) continue;
      Detection d;
      d.frame = t;
      const double j = rng.uniform(-2, 2);
      d.box = {o.box.x1 + j, o.box.y1 - j, o.box.x2 + j, o.box.y2 + j};
      d.scores.assign(static_cast<std::size_t>(classes), 0.0);
      for (double& s : d.scores) s = score() * 0.5;
      d.scores[static_cast<std::size_t>(o.label)] = score();
      dets.push_back(d);
    }
    const int clutter = static_cast<int>(rng.below(3));
    for (int k = 0; k < clutter && dets.size() < static_cast<std::size_t>(max_dets); ++k) {
      Detection d;
      d.frame = t;
      d.box = random_box(rng, 120, 120, 5, 30);
      d.scores.assign(static_cast<std::size_t>(classes), 0.0);
      for (double& s : d.scores) s = score();
      dets.push_back(d);
    }
  }
  return out;
}


// Small random evaluation problem: ground-truth tubes over a couple of
// videos, noisy per-frame detections and noisy / spurious predicted tubes.
struct EvalInstance {
  GroundTruth gt;
  VideoDetections frame_preds;
  std::vector<Tube> tubes;
};

inline Tube random_track(Rng& rng, const std::string& video, int label, int frames) {
  Tube t{video, label, 1.0, {}};
  const int len = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(frames - 2)));
  const int start = static_cast<int>(rng.below(static_cast<std::uint64_t>(frames - len + 1)));
  Box b = random_box(rng, 80, 80, 10, 30);
  const double vx = rng.uniform(-2, 2), vy = rng.uniform(-2, 2);
  for (int f = start; f < start + len; ++f) {
    t.boxes.push_back({f, b, false, 1.0});
    b = {b.x1 + vx, b.y1 + vy, b.x2 + vx, b.y2 + vy};
  }
  return t;
}

inline EvalInstance random_eval_instance(Rng& rng, int classes = 2, int frames = 12) {
  EvalInstance in;
  in.gt.num_classes = classes;
  const bool coarse = rng.bernoulli(0.4);
  auto score = [&]() { return coarse ? std::round(rng.uniform01() * 4.0) / 4.0 : rng.uniform01(); };
  auto jitter = [&](const Box& b, double s) {
    return Box{b.x1 + rng.normal(0, s), b.y1 + rng.normal(0, s), b.x2 + rng.normal(0, s), b.y2 + rng.normal(0, s)};
  };
  const int videos = 1 + static_cast<int>(rng.below(2));
  for (int v = 0; v < videos; ++v) {
    const std::string name = "v" + std::to_string(v);
    FrameDetections& fd = in.frame_preds[name];
    fd.resize(static_cast<std::size_t>(frames));
    const int n_gt = 1 + static_cast<int>(rng.below(3));
    for (int g = 0; g < n_gt; ++g) {
      const int label = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
      const Tube gt = random_track(rng, name, label, frames);
      in.gt.tubes.push_back(gt);
      for (const TubeBox& tb : gt.boxes) {
        if (rng.bernoulli(0.2)) continue;
        Detection d{jitter(tb.box, 3.0), std::vector<double>(static_cast<std::size_t>(classes), 0.0), tb.t};
        d.scores[static_cast<std::size_t>(rng.bernoulli(0.8) ? label : rng.below(static_cast<std::uint64_t>(classes)))] = score();
        fd[static_cast<std::size_t>(tb.t)].push_back(d);
      }
      if (rng.bernoulli(0.8)) {
        Tube p = gt;
        p.score = score();
        if (rng.bernoulli(0.2)) p.label = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
        if (p.boxes.size() > 2 && rng.bernoulli(0.5)) p.boxes.erase(p.boxes.begin());
        for (TubeBox& tb : p.boxes) tb.box = jitter(tb.box, 2.5);
        in.tubes.push_back(p);
      }
    }
    const int clutter = static_cast<int>(rng.below(6));
    for (int k = 0; k < clutter; ++k) {
      const int t = static_cast<int>(rng.below(static_cast<std::uint64_t>(frames)));
      Detection d{random_box(rng, 80, 80, 5, 30), std::vector<double>(static_cast<std::size_t>(classes), 0.0), t};
      d.scores[rng.below(static_cast<std::uint64_t>(classes))] = score();
      fd[static_cast<std::size_t>(t)].push_back(d);
    }
    const int spurious = static_cast<int>(rng.below(3));
    for (int k = 0; k < spurious; ++k) {
      Tube p = random_track(rng, name, static_cast<int>(rng.below(static_cast<std::uint64_t>(classes))), frames);
      p.score = score();
      in.tubes.push_back(p);
    }
  }
  return in;
}

}  // namespace testsupport
