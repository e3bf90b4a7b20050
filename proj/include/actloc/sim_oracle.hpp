#pragma once

// Brute-force reference implementations used as equivalence oracles.
// Nothing here calls into the linker or evaluator code it checks; only the
// plain data types are shared.

#include <cstdint>
#include <string>
#include <vector>

#include "actloc/detect.hpp"
#include "actloc/eval.hpp"
#include "actloc/tubes.hpp"

namespace actloc::sim {

namespace oracle_detail {

inline double overlap(const Box& a, const Box& b) {
  const double left = a.x1 > b.x1 ? a.x1 : b.x1;
  const double right = a.x2 < b.x2 ? a.x2 : b.x2;
  const double top = a.y1 > b.y1 ? a.y1 : b.y1;
  const double bottom = a.y2 < b.y2 ? a.y2 : b.y2;
  const double iw = right - left;
  const double ih = bottom - top;
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  auto area = [](const Box& r) {
    const double w = r.x2 - r.x1 > 0.0 ? r.x2 - r.x1 : 0.0;
    const double h = r.y2 - r.y1 > 0.0 ? r.y2 - r.y1 : 0.0;
    return w * h;
  };
  const double inter = iw * ih;
  const double uni = area(a) + area(b) - inter;
  if (!(uni > 0.0)) return 0.0;
  return inter / uni;
}

inline int first_max(const std::vector<double>& v) {
  int best = 0;
  for (int i = 0; i < static_cast<int>(v.size()); ++i)
    if (v[static_cast<std::size_t>(i)] > v[static_cast<std::size_t>(best)]) best = i;
  return best;
}

}  // namespace oracle_detail

// Straight scan over all tubes and detections, one frame at a time.
inline std::vector<ActionTube> oracle_link(const FrameDetections& frames, const LinkerConfig& cfg) {
  using oracle_detail::first_max;
  using oracle_detail::overlap;

  struct Slot {
    ActionTube tube;
    bool alive = true;
  };
  std::vector<Slot> slots;
  std::int64_t next_id = 0;

  auto absorb = [](ActionTube& tube, const std::vector<double>& s) {
    for (std::size_t i = 0; i < s.size(); ++i) tube.class_energy[i] += s[i];
    tube.matched_count += 1;
    tube.label = first_max(tube.class_energy);
    tube.score = tube.class_energy[static_cast<std::size_t>(tube.label)] / tube.matched_count;
    tube.last_scores = s;
  };
  auto drop_tail = [](ActionTube& tube) {
    while (!tube.boxes.empty() && tube.boxes.back().extrapolated) tube.boxes.pop_back();
    tube.tau = 0;
  };

  for (std::size_t ft = 0; ft < frames.size(); ++ft) {
    const auto t = static_cast<std::int64_t>(ft);
    const std::vector<Detection>& dets = frames[ft];
    std::vector<bool> taken(dets.size(), false);

    // Visit live tubes by (score desc, id asc) via repeated selection.
    std::vector<bool> visited(slots.size(), false);
    std::vector<std::size_t> to_kill;
    while (true) {
      std::size_t pick = slots.size();
      for (std::size_t j = 0; j < slots.size(); ++j) {
        if (!slots[j].alive || visited[j]) continue;
        if (pick == slots.size()) {
          pick = j;
          continue;
        }
        const ActionTube& a = slots[j].tube;
        const ActionTube& b = slots[pick].tube;
        if (a.score > b.score || (a.score == b.score && a.id < b.id)) pick = j;
      }
      if (pick == slots.size()) break;
      visited[pick] = true;

      ActionTube& tube = slots[pick].tube;
      const int c = tube.label;
      const Box prev = tube.boxes.back().box;
      double s = 0.0;
      int m = -1;
      for (std::size_t i = 0; i < dets.size(); ++i) {
        if (taken[i]) continue;
        const double sc = dets[i].scores[static_cast<std::size_t>(c)];
        if (overlap(dets[i].box, prev) >= cfg.lambda && s < sc) {
          s = sc;
          m = static_cast<int>(i);
        }
      }
      if (m >= 0) {
        const Detection& d = dets[static_cast<std::size_t>(m)];
        taken[static_cast<std::size_t>(m)] = true;
        absorb(tube, d.scores);
        TubeBox tb;
        tb.t = t;
        tb.box = d.box;
        tb.extrapolated = false;
        tb.score = d.scores[static_cast<std::size_t>(tube.label)];
        tube.boxes.push_back(tb);
        tube.tau = 0;
      } else if (cfg.extrapolate && tube.tau < cfg.k) {
        Box next = prev;
        if (cfg.box_pred && tube.boxes.size() > 1) {
          const Box older = tube.boxes[tube.boxes.size() - 2].box;
          Box p;
          p.x1 = prev.x1 + (prev.x1 - older.x1);
          p.y1 = prev.y1 + (prev.y1 - older.y1);
          p.x2 = prev.x2 + (prev.x2 - older.x2);
          p.y2 = prev.y2 + (prev.y2 - older.y2);
          if (cfg.frame_w > 0.0 && cfg.frame_h > 0.0) {
            auto lim = [](double v, double hi) { return v < 0.0 ? 0.0 : (v > hi ? hi : v); };
            p.x1 = lim(p.x1, cfg.frame_w);
            p.x2 = lim(p.x2, cfg.frame_w);
            p.y1 = lim(p.y1, cfg.frame_h);
            p.y2 = lim(p.y2, cfg.frame_h);
          }
          if (p.x1 <= p.x2 && p.y1 <= p.y2) next = p;
        }
        TubeBox tb;
        tb.t = t;
        tb.box = next;
        tb.extrapolated = true;
        tb.score = tube.last_scores[static_cast<std::size_t>(tube.label)];
        tube.boxes.push_back(tb);
        tube.tau += 1;
      } else {
        to_kill.push_back(pick);
      }
    }
    for (std::size_t j : to_kill) {
      slots[j].alive = false;
      drop_tail(slots[j].tube);
    }

    // Spawn from leftovers: per class, greedy suppression by selection.
    if (dets.empty()) continue;
    const std::size_t num_classes = dets.front().scores.size();
    for (std::size_t c = 0; c < num_classes; ++c) {
      std::vector<std::size_t> pool;
      for (std::size_t i = 0; i < dets.size(); ++i) {
        if (taken[i]) continue;
        const double sc = dets[i].scores[c];
        if (static_cast<std::size_t>(first_max(dets[i].scores)) == c && sc > 0.0 && sc >= cfg.spawn_floor)
          pool.push_back(i);
      }
      int made = 0;
      while (!pool.empty() && made < cfg.n) {
        std::size_t top = 0;
        for (std::size_t q = 1; q < pool.size(); ++q)
          if (dets[pool[q]].scores[c] > dets[pool[top]].scores[c]) top = q;
        const Detection& d = dets[pool[top]];
        std::vector<std::size_t> rest;
        for (std::size_t q = 0; q < pool.size(); ++q)
          if (q != top && !(overlap(dets[pool[q]].box, d.box) > cfg.nms_iou)) rest.push_back(pool[q]);
        pool = rest;

        ActionTube tube;
        tube.id = next_id++;
        tube.class_energy.assign(num_classes, 0.0);
        absorb(tube, d.scores);
        TubeBox tb;
        tb.t = t;
        tb.box = d.box;
        tb.score = d.scores[static_cast<std::size_t>(tube.label)];
        tube.boxes.push_back(tb);
        slots.push_back({std::move(tube), true});
        ++made;
      }
    }
  }

  // Slots are already in id order.
  std::vector<ActionTube> out;
  for (Slot& s : slots) {
    drop_tail(s.tube);
    out.push_back(std::move(s.tube));
  }
  return out;
}

namespace oracle_detail {

// Sum over true positives of the best precision at any rank whose recall is
// at least that TP's recall, divided by the number of positives.
inline double interpolated_ap(const std::vector<int>& tp, std::size_t npos) {
  if (npos == 0) return 0.0;
  const std::size_t n = tp.size();
  std::vector<double> precision(n), recall(n);
  int hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    hits += tp[i];
    precision[i] = static_cast<double>(hits) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(hits) / static_cast<double>(npos);
  }
  double ap = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!tp[i]) continue;
    double best = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (recall[j] >= recall[i] && precision[j] > best) best = precision[j];
    ap += best / static_cast<double>(npos);
  }
  return ap;
}

}  // namespace oracle_detail

// Frame-level AP by brute force: selection-order ranking and a flat scan of
// every annotation box for each prediction.
inline double oracle_ap(const VideoDetections& preds, const GroundTruth& gt, int c, double thresh) {
  struct P {
    std::string video;
    std::int64_t frame;
    Box box;
    double score;
    std::size_t order;
  };
  struct G {
    std::string video;
    std::int64_t frame;
    Box box;
    bool used;
  };
  std::vector<P> ps;
  for (const auto& [video, frames] : preds)
    for (std::size_t t = 0; t < frames.size(); ++t)
      for (const Detection& d : frames[t]) {
        const double sc = d.scores[static_cast<std::size_t>(c)];
        if (sc > 0.0) ps.push_back({video, static_cast<std::int64_t>(t), d.box, sc, ps.size()});
      }
  std::vector<G> gs;
  for (const Tube& tube : gt.tubes)
    if (tube.label == c)
      for (const TubeBox& b : tube.boxes) gs.push_back({tube.video, b.t, b.box, false});

  std::vector<bool> done(ps.size(), false);
  std::vector<int> tp;
  for (std::size_t round = 0; round < ps.size(); ++round) {
    std::size_t k = ps.size();
    for (std::size_t i = 0; i < ps.size(); ++i) {
      if (done[i]) continue;
      if (k == ps.size()) {
        k = i;
        continue;
      }
      const P& a = ps[i];
      const P& b = ps[k];
      if (a.score > b.score || (a.score == b.score && (a.frame < b.frame ||
                                                       (a.frame == b.frame && a.order < b.order))))
        k = i;
    }
    done[k] = true;
    double best = -1.0;
    std::size_t hit = gs.size();
    for (std::size_t g = 0; g < gs.size(); ++g) {
      if (gs[g].used || gs[g].video != ps[k].video || gs[g].frame != ps[k].frame) continue;
      const double o = oracle_detail::overlap(ps[k].box, gs[g].box);
      if (o >= thresh && o > best) {
        best = o;
        hit = g;
      }
    }
    if (hit < gs.size()) gs[hit].used = true;
    tp.push_back(hit < gs.size() ? 1 : 0);
  }
  return oracle_detail::interpolated_ap(tp, gs.size());
}

// Tube overlap by direct per-frame summation over the shared frame range.
inline double oracle_tube_iou(const Tube& a, const Tube& b) {
  if (a.boxes.empty() || b.boxes.empty()) return 0.0;
  auto lo_hi = [](const Tube& x) {
    std::int64_t lo = x.boxes[0].t, hi = x.boxes[0].t;
    for (const TubeBox& tb : x.boxes) {
      if (tb.t < lo) lo = tb.t;
      if (tb.t > hi) hi = tb.t;
    }
    return std::pair{lo, hi};
  };
  const auto [a0, a1] = lo_hi(a);
  const auto [b0, b1] = lo_hi(b);
  const std::int64_t lo = a0 > b0 ? a0 : b0;
  const std::int64_t hi = a1 < b1 ? a1 : b1;
  if (hi < lo) return 0.0;
  const std::int64_t span_lo = a0 < b0 ? a0 : b0;
  const std::int64_t span_hi = a1 > b1 ? a1 : b1;
  double sum = 0.0;
  for (std::int64_t t = lo; t <= hi; ++t) {
    const Box* ba = nullptr;
    const Box* bb = nullptr;
    for (const TubeBox& tb : a.boxes)
      if (tb.t == t) ba = &tb.box;
    for (const TubeBox& tb : b.boxes)
      if (tb.t == t) bb = &tb.box;
    if (ba && bb) sum += oracle_detail::overlap(*ba, *bb);
  }
  const double shared = static_cast<double>(hi - lo + 1);
  return (shared / static_cast<double>(span_hi - span_lo + 1)) * (sum / shared);
}

// Video-level AP by brute force.
inline double oracle_video_ap(const std::vector<Tube>& preds, const GroundTruth& gt, int c,
                              double thresh) {
  std::vector<std::size_t> cand;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i].label == c) cand.push_back(i);
  std::vector<std::size_t> targets;
  for (std::size_t g = 0; g < gt.tubes.size(); ++g)
    if (gt.tubes[g].label == c) targets.push_back(g);
  std::vector<bool> used(targets.size(), false), done(cand.size(), false);
  std::vector<int> tp;
  for (std::size_t round = 0; round < cand.size(); ++round) {
    std::size_t k = cand.size();
    for (std::size_t i = 0; i < cand.size(); ++i) {
      if (done[i]) continue;
      if (k == cand.size() || preds[cand[i]].score > preds[cand[k]].score) k = i;
    }
    done[k] = true;
    const Tube& p = preds[cand[k]];
    double best = -1.0;
    std::size_t hit = targets.size();
    for (std::size_t g = 0; g < targets.size(); ++g) {
      const Tube& gtube = gt.tubes[targets[g]];
      if (used[g] || gtube.video != p.video) continue;
      const double o = oracle_tube_iou(p, gtube);
      if (o >= thresh && o > best) {
        best = o;
        hit = g;
      }
    }
    if (hit < targets.size()) used[hit] = true;
    tp.push_back(hit < targets.size() ? 1 : 0);
  }
  return oracle_detail::interpolated_ap(tp, targets.size());
}

}  // namespace actloc::sim
