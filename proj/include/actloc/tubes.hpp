#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "actloc/box.hpp"
#include "actloc/detect.hpp"
#include "actloc/errors.hpp"

namespace actloc {

struct TubeBox {
  std::int64_t t = 0;
  Box box;
  bool extrapolated = false;
  double score = 0.0;  // class confidence at this frame (held when extrapolated)

  friend bool operator==(const TubeBox&, const TubeBox&) = default;
};

struct ActionTube {
  std::int64_t id = 0;
  int label = 0;
  double score = 0.0;
  std::vector<double> class_energy;
  std::vector<TubeBox> boxes;
  int tau = 0;            // consecutive extrapolated frames at the tail
  int matched_count = 0;  // real (non-extrapolated) entries
  std::vector<double> last_scores;  // score vector of the most recent matched detection

  const Box& last_box() const { return boxes.back().box; }
  std::int64_t first_t() const { return boxes.front().t; }
  std::int64_t last_t() const { return boxes.back().t; }

  friend bool operator==(const ActionTube&, const ActionTube&) = default;
};

struct LinkerConfig {
  double lambda = 0.5;       // minimum IoU with the tube's last box
  int k = 5;                 // maximum consecutive extrapolated frames
  int n = 10;                // maximum new tubes per class per frame
  bool box_pred = false;     // BOXP: constant-velocity box during extrapolation
  bool extrapolate = true;   // EXPLT
  double spawn_floor = 0.05;
  double nms_iou = 0.45;     // suppression threshold when spawning
  double frame_w = 0.0;      // predicted boxes are clamped to the frame when > 0
  double frame_h = 0.0;

  void validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw InputError("lambda must lie in [0, 1]");
    if (k < 0) throw InputError("k must be >= 0");
    if (n < 1) throw InputError("n must be >= 1");
    if (!(nms_iou >= 0.0 && nms_iou <= 1.0)) throw InputError("nms iou must lie in [0, 1]");
  }
};

inline int argmax_lowest(std::span<const double> v) {
  int best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  return best;
}

// Constant-velocity corner extrapolation, prev + (prev - prev2). Falls back
// to holding `prev` when clamping leaves a degenerate box.
inline Box predict_bbox(const Box& prev, const Box& prev2, double frame_w = 0.0,
                        double frame_h = 0.0) {
  Box b{prev.x1 + (prev.x1 - prev2.x1), prev.y1 + (prev.y1 - prev2.y1),
        prev.x2 + (prev.x2 - prev2.x2), prev.y2 + (prev.y2 - prev2.y2)};
  if (frame_w > 0.0 && frame_h > 0.0) b = clamp_box(b, frame_w, frame_h);
  if (!(b.x1 <= b.x2 && b.y1 <= b.y2)) return prev;
  return b;
}

// Accumulates class evidence; the label is the argmax and the score the
// mean matched-detection score of that class.
inline std::pair<double, int> update_label(ActionTube& tube, std::span<const double> det_scores) {
  if (det_scores.size() != tube.class_energy.size())
    throw InputError("score vector length " + std::to_string(det_scores.size()) +
                     " does not match class count " + std::to_string(tube.class_energy.size()));
  for (std::size_t i = 0; i < det_scores.size(); ++i) tube.class_energy[i] += det_scores[i];
  tube.matched_count += 1;
  tube.label = argmax_lowest(tube.class_energy);
  tube.score = tube.class_energy[static_cast<std::size_t>(tube.label)] / tube.matched_count;
  tube.last_scores.assign(det_scores.begin(), det_scores.end());
  return {tube.score, tube.label};
}

// Drops trailing extrapolated entries.
inline void trim_extrapolated(ActionTube& tube) {
  while (!tube.boxes.empty() && tube.boxes.back().extrapolated) tube.boxes.pop_back();
  tube.tau = 0;
}

// New tubes from detections no tube claimed. A detection competes only under
// its own best class; per class, NMS keeps at most cfg.n above the floor.
// Ids are handed out from `next_id` in class order, then NMS order.
inline std::vector<ActionTube> spawn(std::span<const Detection> unassigned, const LinkerConfig& cfg,
                                     std::int64_t& next_id) {
  std::vector<ActionTube> out;
  if (unassigned.empty()) return out;
  const std::size_t num_classes = unassigned.front().scores.size();
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::vector<Detection> eligible;
    for (const Detection& d : unassigned) {
      const double s = d.scores[c];
      if (static_cast<std::size_t>(argmax_lowest(d.scores)) == c && s > 0.0 && s >= cfg.spawn_floor)
        eligible.push_back(d);
    }
    for (const Detection& d :
         nms(eligible, static_cast<int>(c), cfg.nms_iou, static_cast<std::size_t>(cfg.n))) {
      ActionTube tube;
      tube.id = next_id++;
      tube.class_energy.assign(num_classes, 0.0);
      update_label(tube, d.scores);
      tube.boxes.push_back({d.frame, d.box, false, d.scores[static_cast<std::size_t>(tube.label)]});
      out.push_back(std::move(tube));
    }
  }
  return out;
}

// Online tube generator. Feed frames in ascending order; each call sees only
// the detections of that frame and the tubes built so far.
class Linker {
 public:
  explicit Linker(LinkerConfig cfg) : cfg_(cfg) { cfg_.validate(); }

  const LinkerConfig& config() const noexcept { return cfg_; }
  const std::vector<ActionTube>& live() const noexcept { return live_; }
  const std::vector<ActionTube>& finished() const noexcept { return finished_; }
  std::int64_t last_frame() const noexcept { return last_t_; }

  // Frames skipped between calls are processed as frames without detections.
  void step(std::int64_t t, std::span<const Detection> dets) {
    if (started_ && t <= last_t_)
      throw InputError("frame " + std::to_string(t) + " arrived after frame " +
                       std::to_string(last_t_));
    for (const Detection& d : dets) {
      if (d.frame != t)
        throw InputError("detection tagged frame " + std::to_string(d.frame) +
                         " passed to step for frame " + std::to_string(t));
      if (num_classes_ == 0) num_classes_ = d.scores.size();
      if (d.scores.size() != num_classes_ || num_classes_ == 0)
        throw InputError("inconsistent score vector length");
    }
    if (started_)
      for (std::int64_t gap = last_t_ + 1; gap < t; ++gap) advance(gap, {});
    advance(t, dets);
    started_ = true;
  }

  // Live and terminated tubes as they would be emitted now (trailing
  // extrapolation trimmed), ordered by id.
  std::vector<ActionTube> snapshot() const {
    std::vector<ActionTube> all = finished_;
    all.insert(all.end(), live_.begin(), live_.end());
    for (ActionTube& tube : all) trim_extrapolated(tube);
    std::sort(all.begin(), all.end(),
              [](const ActionTube& a, const ActionTube& b) { return a.id < b.id; });
    return all;
  }

 private:
  void advance(std::int64_t t, std::span<const Detection> dets) {
    std::vector<std::size_t> order(live_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (live_[a].score != live_[b].score) return live_[a].score > live_[b].score;
      return live_[a].id < live_[b].id;
    });

    std::vector<bool> consumed(dets.size(), false);
    std::vector<bool> terminate(live_.size(), false);
    for (std::size_t ti : order) {
      ActionTube& tube = live_[ti];
      const auto c = static_cast<std::size_t>(tube.label);
      double best_score = 0.0;
      std::size_t best = dets.size();
      for (std::size_t i = 0; i < dets.size(); ++i) {
        if (consumed[i]) continue;
        if (iou(dets[i].box, tube.last_box()) >= cfg_.lambda && best_score < dets[i].scores[c]) {
          best = i;
          best_score = dets[i].scores[c];
        }
      }
      if (best < dets.size()) {
        consumed[best] = true;
        update_label(tube, dets[best].scores);
        tube.boxes.push_back(
            {t, dets[best].box, false, dets[best].scores[static_cast<std::size_t>(tube.label)]});
        tube.tau = 0;
      } else if (cfg_.extrapolate && tube.tau < cfg_.k) {
        Box next = tube.last_box();
        if (cfg_.box_pred && tube.boxes.size() >= 2)
          next = predict_bbox(tube.last_box(), tube.boxes[tube.boxes.size() - 2].box, cfg_.frame_w,
                              cfg_.frame_h);
        const double held = tube.last_scores[static_cast<std::size_t>(tube.label)];
        tube.boxes.push_back({t, next, true, held});
        tube.tau += 1;
      } else {
        terminate[ti] = true;
      }
    }

    std::vector<ActionTube> still_live;
    for (std::size_t i = 0; i < live_.size(); ++i) {
      if (terminate[i]) {
        trim_extrapolated(live_[i]);
        finished_.push_back(std::move(live_[i]));
      } else {
        still_live.push_back(std::move(live_[i]));
      }
    }
    live_ = std::move(still_live);

    std::vector<Detection> unassigned;
    for (std::size_t i = 0; i < dets.size(); ++i)
      if (!consumed[i]) unassigned.push_back(dets[i]);
    for (ActionTube& tube : spawn(unassigned, cfg_, next_id_)) live_.push_back(std::move(tube));
    last_t_ = t;
  }

  LinkerConfig cfg_;
  std::vector<ActionTube> live_;
  std::vector<ActionTube> finished_;
  std::int64_t next_id_ = 0;
  std::int64_t last_t_ = -1;
  std::size_t num_classes_ = 0;
  bool started_ = false;
};

// Folds the linker over per-frame detections (index = frame number) and
// returns every tube, live or terminated, trimmed and ordered by id.
inline std::vector<ActionTube> run_stream(const FrameDetections& frames, const LinkerConfig& cfg) {
  Linker linker(cfg);
  for (std::size_t t = 0; t < frames.size(); ++t)
    linker.step(static_cast<std::int64_t>(t), frames[t]);
  return linker.snapshot();
}

}  // namespace actloc
