#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "actloc/box.hpp"
#include "actloc/detect.hpp"
#include "actloc/errors.hpp"
#include "actloc/eval.hpp"
#include "actloc/image.hpp"
#include "actloc/random.hpp"

namespace actloc::sim {

struct Waypoint {
  std::int64_t t = 0;
  double x = 0.0;  // top-left corner
  double y = 0.0;
};

enum class Motion { kConstantVelocity, kWaypoints };

struct Actor {
  int label = 0;
  std::int64_t start = 0;  // first frame, inclusive
  std::int64_t end = 0;    // last frame, inclusive
  double w = 10.0, h = 10.0;
  Motion motion = Motion::kConstantVelocity;
  double x0 = 0.0, y0 = 0.0;  // top-left at `start`
  double vx = 0.0, vy = 0.0;  // pixels per frame
  std::vector<Waypoint> waypoints;  // ascending t

  // Top-left corner at frame t.
  std::pair<double, double> position(std::int64_t t) const {
    if (motion == Motion::kConstantVelocity) {
      const double dt = static_cast<double>(t - start);
      return {x0 + vx * dt, y0 + vy * dt};
    }
    if (t <= waypoints.front().t) return {waypoints.front().x, waypoints.front().y};
    for (std::size_t i = 1; i < waypoints.size(); ++i) {
      const Waypoint& a = waypoints[i - 1];
      const Waypoint& b = waypoints[i];
      if (t <= b.t) {
        const double f = static_cast<double>(t - a.t) / static_cast<double>(b.t - a.t);
        return {a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f};
      }
    }
    return {waypoints.back().x, waypoints.back().y};
  }

  Box box(std::int64_t t) const {
    const auto [x, y] = position(t);
    return {x, y, x + w, y + h};
  }
};

struct Occlusion {
  int actor = 0;
  std::int64_t start = 0;  // inclusive
  std::int64_t end = 0;    // inclusive
};

struct Scenario {
  std::string video = "sim";
  int frames = 30;
  int width = 256;
  int height = 256;
  int channels = 3;
  int num_classes = 1;
  std::vector<Actor> actors;
  std::vector<Occlusion> occlusions;
  ShiftDirection drift;  // global camera translation per frame, in pixels

  void validate() const {
    if (frames <= 0 || width <= 0 || height <= 0) throw InputError("scenario dimensions must be positive");
    if (channels != 1 && channels != 3) throw InputError("scenario channels must be 1 or 3");
    if (num_classes <= 0) throw InputError("scenario needs at least one class");
    for (const Actor& a : actors) {
      if (a.label < 0 || a.label >= num_classes) throw InputError("actor label out of range");
      if (a.start < 0 || a.end < a.start || a.end >= frames)
        throw InputError("actor lifetime outside the scenario");
      if (!(a.w > 0.0) || !(a.h > 0.0)) throw InputError("actor size must be positive");
      if (a.motion == Motion::kWaypoints) {
        if (a.waypoints.empty()) throw InputError("waypoint motion without waypoints");
        for (std::size_t i = 1; i < a.waypoints.size(); ++i)
          if (a.waypoints[i].t <= a.waypoints[i - 1].t)
            throw InputError("waypoint times must increase");
      }
    }
    for (const Occlusion& o : occlusions) {
      if (o.actor < 0 || o.actor >= static_cast<int>(actors.size()))
        throw InputError("occlusion refers to an unknown actor");
      const Actor& a = actors[static_cast<std::size_t>(o.actor)];
      if (o.start > o.end || o.start < a.start || o.end > a.end)
        throw InputError("occlusion interval outside the actor lifetime");
    }
  }

  bool occluded(std::size_t actor, std::int64_t t) const {
    for (const Occlusion& o : occlusions)
      if (static_cast<std::size_t>(o.actor) == actor && t >= o.start && t <= o.end) return true;
    return false;
  }
};

struct NoiseParams {
  double p_miss = 0.0;
  double jitter_sigma = 0.0;  // pixels, per corner coordinate
  double fp_rate = 0.0;       // expected false positives per frame
  double s_lo = 0.6;          // peak class score range
  double s_hi = 0.95;
  double off_class_max = 0.0;  // other classes draw from [0, off_class_max * peak]

  void validate() const {
    if (!(p_miss >= 0.0 && p_miss <= 1.0)) throw InputError("p_miss must lie in [0, 1]");
    if (!(jitter_sigma >= 0.0)) throw InputError("jitter sigma must be >= 0");
    if (!(fp_rate >= 0.0)) throw InputError("false-positive rate must be >= 0");
    if (!(s_lo >= 0.0 && s_lo <= s_hi && s_hi <= 1.0)) throw InputError("score range must satisfy 0 <= lo <= hi <= 1");
    if (!(off_class_max >= 0.0 && off_class_max <= 1.0)) throw InputError("off-class fraction must lie in [0, 1]");
  }
};

// One annotation tube per actor, in actor order.
inline GroundTruth render_ground_truth(const Scenario& s) {
  s.validate();
  GroundTruth gt;
  gt.num_classes = s.num_classes;
  for (std::size_t i = 0; i < s.actors.size(); ++i) {
    const Actor& a = s.actors[i];
    Tube tube{s.video, a.label, 1.0, {}};
    for (std::int64_t t = a.start; t <= a.end; ++t) {
      const Box b = a.box(t);
      if (b.x1 < 0.0 || b.y1 < 0.0 || b.x2 > s.width || b.y2 > s.height)
        throw InputError("actor " + std::to_string(i) + " leaves the frame at t=" + std::to_string(t));
      tube.boxes.push_back({t, b, false, 1.0});
    }
    gt.tubes.push_back(std::move(tube));
  }
  return gt;
}

namespace detail {

inline double texture(std::uint64_t seed, std::uint64_t salt, std::int64_t x, std::int64_t y, int c) {
  std::uint64_t h = mix64(seed ^ mix64(salt));
  h = mix64(h ^ static_cast<std::uint64_t>(x));
  h = mix64(h ^ static_cast<std::uint64_t>(y));
  h = mix64(h ^ static_cast<std::uint64_t>(c));
  return static_cast<double>(h % 256);
}

}  // namespace detail

// Background noise texture fixed in world coordinates (so camera drift is an
// exact translation) with each actor drawn as a rectangle carrying its own
// texture, which moves with the actor.
inline std::vector<Frame> render_frames(const Scenario& s, std::uint64_t seed) {
  s.validate();
  std::vector<Frame> frames;
  frames.reserve(static_cast<std::size_t>(s.frames));
  for (int t = 0; t < s.frames; ++t) {
    Frame f(s.width, s.height, s.channels, t);
    const std::int64_t ox = static_cast<std::int64_t>(t) * s.drift.dx;
    const std::int64_t oy = static_cast<std::int64_t>(t) * s.drift.dy;
    for (int c = 0; c < s.channels; ++c)
      for (int y = 0; y < s.height; ++y)
        for (int x = 0; x < s.width; ++x) f.at(x, y, c) = detail::texture(seed, 0, x - ox, y - oy, c);
    for (std::size_t i = 0; i < s.actors.size(); ++i) {
      const Actor& a = s.actors[i];
      if (t < a.start || t > a.end) continue;
      const Box b = a.box(t);
      const auto bx = static_cast<std::int64_t>(std::floor(b.x1));
      const auto by = static_cast<std::int64_t>(std::floor(b.y1));
      const int x_lo = std::max(0, static_cast<int>(std::ceil(b.x1)));
      const int y_lo = std::max(0, static_cast<int>(std::ceil(b.y1)));
      const int x_hi = std::min(s.width, static_cast<int>(std::ceil(b.x2)));
      const int y_hi = std::min(s.height, static_cast<int>(std::ceil(b.y2)));
      for (int c = 0; c < s.channels; ++c)
        for (int y = y_lo; y < y_hi; ++y)
          for (int x = x_lo; x < x_hi; ++x)
            f.at(x, y, c) = detail::texture(seed, i + 1, x - bx, y - by, c);
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

// Noisy detector output for a scenario, index = frame. Per frame: every
// visible actor is dropped with p_miss (always when occluded), otherwise its
// corners get Gaussian jitter and its score vector peaks at the true class;
// then a Poisson number of false positives with random boxes and classes.
inline FrameDetections synth_detections(const Scenario& s, const NoiseParams& noise, std::uint64_t seed) {
  noise.validate();
  const GroundTruth gt = render_ground_truth(s);
  Rng rng(seed);
  const auto C = static_cast<std::size_t>(s.num_classes);
  const double W = s.width, H = s.height;

  auto scores_for = [&](int label) {
    std::vector<double> v(C, 0.0);
    const double peak = rng.uniform(noise.s_lo, noise.s_hi);
    for (std::size_t c = 0; c < C; ++c)
      if (static_cast<int>(c) != label && noise.off_class_max > 0.0)
        v[c] = rng.uniform(0.0, noise.off_class_max * peak);
    v[static_cast<std::size_t>(label)] = peak;
    return v;
  };

  FrameDetections out(static_cast<std::size_t>(s.frames));
  for (std::int64_t t = 0; t < s.frames; ++t) {
    auto& dets = out[static_cast<std::size_t>(t)];
    for (std::size_t i = 0; i < s.actors.size(); ++i) {
      const Actor& a = s.actors[i];
      if (t < a.start || t > a.end) continue;
      const bool miss = rng.bernoulli(noise.p_miss);
      if (miss || s.occluded(i, t)) continue;
      Box b = gt.tubes[i].boxes[static_cast<std::size_t>(t - a.start)].box;
      if (noise.jitter_sigma > 0.0) {
        const double x1 = b.x1 + rng.normal(0.0, noise.jitter_sigma);
        const double y1 = b.y1 + rng.normal(0.0, noise.jitter_sigma);
        const double x2 = b.x2 + rng.normal(0.0, noise.jitter_sigma);
        const double y2 = b.y2 + rng.normal(0.0, noise.jitter_sigma);
        b = clamp_box({std::min(x1, x2), std::min(y1, y2), std::max(x1, x2), std::max(y1, y2)}, W, H);
      }
      dets.push_back({b, scores_for(a.label), t});
    }
    const int fps = rng.poisson(noise.fp_rate);
    for (int k = 0; k < fps; ++k) {
      const double bw = rng.uniform(0.1, 0.4) * W;
      const double bh = rng.uniform(0.1, 0.4) * H;
      const double x = rng.uniform(0.0, W - bw);
      const double y = rng.uniform(0.0, H - bh);
      const int label = static_cast<int>(rng.below(C));
      dets.push_back({{x, y, x + bw, y + bh}, scores_for(label), t});
    }
  }
  return out;
}

// Detector-like heatmaps for a set of boxes: a Gaussian bump per box at its
// center cell, with the matching size and sub-cell offset written there.
inline HeatmapSet synth_heatmaps(std::span<const Detection> dets, int image_w, int image_h,
                                 int num_classes, int down_ratio = 4) {
  const int gw = (image_w + down_ratio - 1) / down_ratio;
  const int gh = (image_h + down_ratio - 1) / down_ratio;
  HeatmapSet h(gw, gh, num_classes, down_ratio, image_w, image_h);
  for (const Detection& d : dets) {
    const int c = argmax_lowest(d.scores);
    const double cx = (d.box.x1 + d.box.x2) / 2.0 / down_ratio;
    const double cy = (d.box.y1 + d.box.y2) / 2.0 / down_ratio;
    const int ci = std::clamp(static_cast<int>(cx), 0, gw - 1);
    const int cj = std::clamp(static_cast<int>(cy), 0, gh - 1);
    const double sigma = std::max(1.0, std::min(d.box.width(), d.box.height()) / down_ratio / 6.0);
    const int rad = static_cast<int>(std::ceil(3 * sigma));
    for (int j = std::max(0, cj - rad); j <= std::min(gh - 1, cj + rad); ++j)
      for (int i = std::max(0, ci - rad); i <= std::min(gw - 1, ci + rad); ++i) {
        const double g = d.scores[static_cast<std::size_t>(c)] *
                         std::exp(-((i - ci) * (i - ci) + (j - cj) * (j - cj)) / (2 * sigma * sigma));
        float& v = h.heat(i, j, c);
        v = std::max(v, static_cast<float>(g));
      }
    const std::size_t cell = h.cell(ci, cj);
    h.size[cell * 2] = static_cast<float>(d.box.width());
    h.size[cell * 2 + 1] = static_cast<float>(d.box.height());
    h.offset[cell * 2] = static_cast<float>(std::clamp(cx - ci, 0.0, 0.999));
    h.offset[cell * 2 + 1] = static_cast<float>(std::clamp(cy - cj, 0.0, 0.999));
  }
  return h;
}

}  // namespace actloc::sim
