#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "actloc/box.hpp"
#include "actloc/detect.hpp"
#include "actloc/errors.hpp"
#include "actloc/tubes.hpp"

namespace actloc {

// Evaluation-side tube: used for both annotations and predictions.
// `boxes` is sorted by frame with no duplicate frames.
struct Tube {
  std::string video;
  int label = 0;
  double score = 0.0;
  std::vector<TubeBox> boxes;

  friend bool operator==(const Tube&, const Tube&) = default;
};

struct GroundTruth {
  int num_classes = 0;
  std::vector<Tube> tubes;

  // Annotated ranges must be contiguous and boxes valid.
  void validate() const {
    if (num_classes <= 0) throw InputError("ground truth needs a positive class count");
    for (const Tube& tube : tubes) {
      if (tube.label < 0 || tube.label >= num_classes)
        throw InputError("ground-truth label out of range");
      if (tube.boxes.empty()) throw InputError("ground-truth tube without boxes");
      for (std::size_t i = 0; i < tube.boxes.size(); ++i) {
        if (!tube.boxes[i].box.valid()) throw InputError("invalid ground-truth box");
        if (i > 0 && tube.boxes[i].t != tube.boxes[i - 1].t + 1)
          throw InputError("ground-truth tube frame range is not contiguous");
      }
    }
  }

  std::vector<int> classes_present() const {
    std::vector<int> cls;
    for (const Tube& t : tubes) cls.push_back(t.label);
    std::sort(cls.begin(), cls.end());
    cls.erase(std::unique(cls.begin(), cls.end()), cls.end());
    return cls;
  }
};

// Per-frame detections of several videos, keyed by video name.
using VideoDetections = std::map<std::string, FrameDetections>;

struct PRCurve {
  std::vector<std::pair<double, double>> points;  // (recall, precision) in rank order
  double ap = 0.0;
};

// All-point interpolated AP over ranked TP/FP flags: the area under the
// precision envelope (running max from the right) of the PR curve.
inline PRCurve average_precision(const std::vector<bool>& is_tp, std::size_t num_positives) {
  PRCurve curve;
  if (num_positives == 0) return curve;
  std::size_t tp = 0;
  for (std::size_t i = 0; i < is_tp.size(); ++i) {
    if (is_tp[i]) ++tp;
    curve.points.emplace_back(static_cast<double>(tp) / num_positives,
                              static_cast<double>(tp) / static_cast<double>(i + 1));
  }
  std::vector<double> rec{0.0}, prec{0.0};
  for (const auto& [r, p] : curve.points) {
    rec.push_back(r);
    prec.push_back(p);
  }
  rec.push_back(1.0);
  prec.push_back(0.0);
  for (std::size_t i = prec.size() - 1; i > 0; --i) prec[i - 1] = std::max(prec[i - 1], prec[i]);
  double ap = 0.0;
  for (std::size_t i = 0; i + 1 < rec.size(); ++i)
    if (rec[i + 1] != rec[i]) ap += (rec[i + 1] - rec[i]) * prec[i + 1];
  curve.ap = std::clamp(ap, 0.0, 1.0);
  return curve;
}

namespace detail {

inline void check_class(const GroundTruth& gt, int c) {
  if (c < 0 || c >= gt.num_classes)
    throw InputError("unknown class " + std::to_string(c) + " (class count " +
                     std::to_string(gt.num_classes) + ")");
}

// Pick the unmatched candidate with the highest overlap >= thresh; ties go
// to the lower index. Returns candidates.size() when nothing qualifies.
template <typename Overlap>
std::size_t best_unmatched(std::size_t count, const std::vector<bool>& used, double thresh,
                           Overlap&& overlap) {
  std::size_t best = count;
  double best_iou = -1.0;
  for (std::size_t g = 0; g < count; ++g) {
    if (used[g]) continue;
    const double o = overlap(g);
    if (o >= thresh && o > best_iou) {
      best = g;
      best_iou = o;
    }
  }
  return best;
}

}  // namespace detail

// Frame-level AP for class c. Predictions with a positive class-c score are
// pooled across all frames and videos.
inline PRCurve frame_ap(const VideoDetections& preds, const GroundTruth& gt, int c,
                        double iou_thresh = 0.5) {
  detail::check_class(gt, c);
  if (!(iou_thresh > 0.0 && iou_thresh <= 1.0)) throw InputError("iou threshold outside (0, 1]");

  std::map<std::pair<std::string, std::int64_t>, std::vector<Box>> gt_boxes;
  std::size_t npos = 0;
  for (const Tube& tube : gt.tubes) {
    if (tube.label != c) continue;
    for (const TubeBox& tb : tube.boxes) {
      gt_boxes[{tube.video, tb.t}].push_back(tb.box);
      ++npos;
    }
  }

  struct Pred {
    const std::string* video;
    std::int64_t frame;
    const Box* box;
    double score;
  };
  std::vector<Pred> pool;
  for (const auto& [video, frames] : preds)
    for (std::size_t t = 0; t < frames.size(); ++t)
      for (const Detection& d : frames[t]) {
        if (c >= static_cast<int>(d.scores.size())) throw InputError("score vector too short");
        if (d.score(c) > 0.0) pool.push_back({&video, static_cast<std::int64_t>(t), &d.box, d.score(c)});
      }
  std::stable_sort(pool.begin(), pool.end(), [](const Pred& a, const Pred& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.frame < b.frame;
  });

  std::map<std::pair<std::string, std::int64_t>, std::vector<bool>> used;
  std::vector<bool> tp_flags;
  tp_flags.reserve(pool.size());
  for (const Pred& p : pool) {
    const auto key = std::make_pair(*p.video, p.frame);
    auto it = gt_boxes.find(key);
    if (it == gt_boxes.end()) {
      tp_flags.push_back(false);
      continue;
    }
    auto& u = used.try_emplace(key, it->second.size(), false).first->second;
    const std::size_t g = detail::best_unmatched(it->second.size(), u, iou_thresh,
                                                 [&](std::size_t i) { return iou(*p.box, it->second[i]); });
    if (g < it->second.size()) {
      u[g] = true;
      tp_flags.push_back(true);
    } else {
      tp_flags.push_back(false);
    }
  }
  return average_precision(tp_flags, npos);
}

// Spatio-temporal overlap: temporal IoU of the frame ranges times the mean
// per-frame box IoU over the shared frames (a frame missing a box scores 0).
inline double tube_iou(const Tube& a, const Tube& b) {
  if (a.boxes.empty() || b.boxes.empty()) return 0.0;
  const std::int64_t a0 = a.boxes.front().t, a1 = a.boxes.back().t;
  const std::int64_t b0 = b.boxes.front().t, b1 = b.boxes.back().t;
  const std::int64_t lo = std::max(a0, b0), hi = std::min(a1, b1);
  if (hi < lo) return 0.0;
  const double inter = static_cast<double>(hi - lo + 1);
  const double uni = static_cast<double>(std::max(a1, b1) - std::min(a0, b0) + 1);

  double spatial = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.boxes.size() && j < b.boxes.size()) {
    const std::int64_t ta = a.boxes[i].t, tb = b.boxes[j].t;
    if (ta < tb) {
      ++i;
    } else if (tb < ta) {
      ++j;
    } else {
      if (ta >= lo && ta <= hi) spatial += iou(a.boxes[i].box, b.boxes[j].box);
      ++i;
      ++j;
    }
  }
  return (inter / uni) * (spatial / inter);
}

// Video-level AP for class c: predicted tubes ranked by score, each matched
// to the same-video annotation of class c with the highest tube IoU.
inline PRCurve video_ap(std::span<const Tube> preds, const GroundTruth& gt, int c,
                        double st_iou_thresh) {
  detail::check_class(gt, c);
  if (!(st_iou_thresh > 0.0 && st_iou_thresh <= 1.0))
    throw InputError("tube iou threshold outside (0, 1]");
  std::vector<const Tube*> targets;
  for (const Tube& t : gt.tubes)
    if (t.label == c) targets.push_back(&t);

  std::vector<const Tube*> ranked;
  for (const Tube& t : preds)
    if (t.label == c) ranked.push_back(&t);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Tube* a, const Tube* b) { return a->score > b->score; });

  std::vector<bool> used(targets.size(), false);
  std::vector<bool> flags;
  for (const Tube* p : ranked) {
    const std::size_t g = detail::best_unmatched(targets.size(), used, st_iou_thresh, [&](std::size_t i) {
      return targets[i]->video == p->video ? tube_iou(*p, *targets[i]) : -1.0;
    });
    if (g < targets.size()) {
      used[g] = true;
      flags.push_back(true);
    } else {
      flags.push_back(false);
    }
  }
  return average_precision(flags, targets.size());
}

struct MapReport {
  double v_map_02 = 0.0;
  double v_map_05 = 0.0;
  double v_map_075 = 0.0;
  double v_map_05_095 = 0.0;  // mean over thresholds 0.50, 0.55, ..., 0.95
  double f_map_05 = 0.0;
  std::vector<int> classes;   // classes present in the annotations
};

inline std::array<double, 10> coco_thresholds() {
  std::array<double, 10> th{};
  for (int i = 0; i < 10; ++i) th[static_cast<std::size_t>(i)] = 0.5 + 0.05 * i;
  return th;
}

inline double mean_video_ap(std::span<const Tube> tubes, const GroundTruth& gt,
                            std::span<const int> classes, double thresh) {
  if (classes.empty()) return 0.0;
  double total = 0.0;
  for (int c : classes) total += video_ap(tubes, gt, c, thresh).ap;
  return total / static_cast<double>(classes.size());
}

inline double mean_frame_ap(const VideoDetections& preds, const GroundTruth& gt,
                            std::span<const int> classes, double thresh) {
  if (classes.empty()) return 0.0;
  double total = 0.0;
  for (int c : classes) total += frame_ap(preds, gt, c, thresh).ap;
  return total / static_cast<double>(classes.size());
}

// f-mAP@0.5 and v-mAP at 0.2 / 0.5 / 0.75 / 0.5:0.95, each an unweighted
// mean over the classes that have annotations.
inline MapReport map_suite(const VideoDetections& frame_preds, std::span<const Tube> tubes,
                           const GroundTruth& gt) {
  gt.validate();
  MapReport r;
  r.classes = gt.classes_present();
  r.f_map_05 = mean_frame_ap(frame_preds, gt, r.classes, 0.5);
  r.v_map_02 = mean_video_ap(tubes, gt, r.classes, 0.2);
  r.v_map_05 = mean_video_ap(tubes, gt, r.classes, 0.5);
  r.v_map_075 = mean_video_ap(tubes, gt, r.classes, 0.75);
  double sum = 0.0;
  for (double th : coco_thresholds()) sum += mean_video_ap(tubes, gt, r.classes, th);
  r.v_map_05_095 = sum / 10.0;
  return r;
}

// Linker output to evaluation tubes. With include_extrapolated off,
// extrapolated entries are removed from the geometry.
inline Tube to_eval_tube(const ActionTube& t, const std::string& video,
                         bool include_extrapolated = true) {
  Tube out{video, t.label, t.score, {}};
  for (const TubeBox& b : t.boxes)
    if (include_extrapolated || !b.extrapolated) out.boxes.push_back(b);
  return out;
}

inline std::vector<Tube> to_eval_tubes(std::span<const ActionTube> tubes, const std::string& video,
                                       bool include_extrapolated = true) {
  std::vector<Tube> out;
  for (const ActionTube& t : tubes) {
    Tube e = to_eval_tube(t, video, include_extrapolated);
    if (!e.boxes.empty()) out.push_back(std::move(e));
  }
  return out;
}

// Per-frame boxes of the tubes as detections scored with their per-frame
// class confidence, for frame-level scoring of linker output.
inline VideoDetections detections_from_tubes(std::span<const Tube> tubes, int num_classes,
                                             bool include_extrapolated) {
  VideoDetections out;
  for (const Tube& tube : tubes) {
    FrameDetections& frames = out[tube.video];
    for (const TubeBox& b : tube.boxes) {
      if (b.extrapolated && !include_extrapolated) continue;
      if (frames.size() <= static_cast<std::size_t>(b.t)) frames.resize(static_cast<std::size_t>(b.t) + 1);
      Detection d;
      d.box = b.box;
      d.frame = b.t;
      d.scores.assign(static_cast<std::size_t>(num_classes), 0.0);
      d.scores[static_cast<std::size_t>(tube.label)] = b.score;
      frames[static_cast<std::size_t>(b.t)].push_back(std::move(d));
    }
  }
  return out;
}

}  // namespace actloc
