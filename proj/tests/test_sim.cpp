#include <gtest/gtest.h>

#include <algorithm>

#include "support.hpp"

using namespace actloc;
using sim::Actor;
using sim::Scenario;

namespace {

Actor mover(int label, std::int64_t start, std::int64_t end, double x0, double y0, double vx, double vy,
            double size = 10) {
  Actor a;
  a.label = label;
  a.start = start;
  a.end = end;
  a.x0 = x0;
  a.y0 = y0;
  a.vx = vx;
  a.vy = vy;
  a.w = a.h = size;
  return a;
}

Scenario one_actor(Actor a, int frames = 20) {
  Scenario s;
  s.frames = frames;
  s.width = s.height = 64;
  s.num_classes = 2;
  s.actors.push_back(std::move(a));
  return s;
}

}  // namespace

TEST(GroundTruth, StaticActor) {
  const auto gt = sim::render_ground_truth(one_actor(mover(0, 0, 9, 5, 5, 0, 0), 10));
  ASSERT_EQ(gt.tubes.size(), 1u);
  ASSERT_EQ(gt.tubes[0].boxes.size(), 10u);
  for (const TubeBox& b : gt.tubes[0].boxes) EXPECT_EQ(b.box, (Box{5, 5, 15, 15}));
}

TEST(GroundTruth, ConstantVelocity) {
  const auto gt = sim::render_ground_truth(one_actor(mover(1, 0, 9, 0, 0, 2, 0), 10));
  EXPECT_EQ(gt.tubes[0].boxes[5].box, (Box{10, 0, 20, 10}));
  EXPECT_EQ(gt.tubes[0].label, 1);
  EXPECT_EQ(gt.tubes[0].boxes[5].t, 5);
}

TEST(GroundTruth, WaypointInterpolation) {
  Actor a = mover(0, 2, 17, 0, 0, 0, 0, 8);
  a.motion = sim::Motion::kWaypoints;
  a.waypoints = {{2, 0, 0}, {7, 20, 10}, {17, 40, 50}};
  const auto gt = sim::render_ground_truth(one_actor(a));
  const auto& boxes = gt.tubes[0].boxes;
  ASSERT_EQ(boxes.size(), 16u);
  for (const TubeBox& b : boxes) {
    const double t = static_cast<double>(b.t);
    const double x = t <= 7 ? 20.0 * (t - 2) / 5 : 20 + 20.0 * (t - 7) / 10;
    const double y = t <= 7 ? 10.0 * (t - 2) / 5 : 10 + 40.0 * (t - 7) / 10;
    EXPECT_NEAR(b.box.x1, x, 1e-12);
    EXPECT_NEAR(b.box.y1, y, 1e-12);
    EXPECT_NEAR(b.box.x2 - b.box.x1, 8, 1e-12);
  }
  EXPECT_EQ(boxes.back().box.x1, 40.0);
}

TEST(GroundTruth, OutOfBoundsThrows) {
  EXPECT_THROW(sim::render_ground_truth(one_actor(mover(0, 0, 19, 40, 0, 2, 0))), InputError);
  EXPECT_THROW(sim::render_ground_truth(one_actor(mover(0, 0, 5, -1, 0, 0, 0))), InputError);
}

TEST(Scenario, Validation) {
  Scenario s = one_actor(mover(0, 0, 9, 0, 0, 0, 0));
  s.occlusions.push_back({0, 8, 12});
  EXPECT_THROW(s.validate(), InputError);
  s.occlusions = {{1, 2, 3}};
  EXPECT_THROW(s.validate(), InputError);
  Scenario bad_label = one_actor(mover(2, 0, 9, 0, 0, 0, 0));
  EXPECT_THROW(bad_label.validate(), InputError);
  sim::NoiseParams n;
  n.p_miss = 1.5;
  EXPECT_THROW(n.validate(), InputError);
}

TEST(Frames, Deterministic) {
  Scenario s = one_actor(mover(0, 0, 9, 5, 5, 1, 1), 10);
  s.drift = {1, 0};
  const auto a = sim::render_frames(s, 3), b = sim::render_frames(s, 3), c = sim::render_frames(s, 4);
  ASSERT_EQ(a.size(), 10u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].data, b[i].data);
  EXPECT_NE(a[0].data, c[0].data);
}

TEST(Frames, StaticSceneGivesUnitMap) {
  Scenario s;
  s.frames = 3;
  s.width = s.height = 32;
  const auto f = sim::render_frames(s, 5);
  const TemporalMap m = ssim_map(f[1], f[0]);
  for (double v : m.data) ASSERT_NEAR(v, 1.0, 1e-9);
}

TEST(Frames, DriftRecoveredEveryFrame) {
  Scenario s;
  s.frames = 12;
  s.width = s.height = 48;
  s.drift = {1, 0};
  const auto f = sim::render_frames(s, 9);
  for (std::size_t t = 1; t < f.size(); ++t) {
    const auto sel = select_candidate(f[t], f[t - 1]);
    ASSERT_EQ(sel.dir, (ShiftDirection{-1, 0})) << "frame " << t;
  }
  s.drift = {0, -1};
  const auto g = sim::render_frames(s, 9);
  for (std::size_t t = 1; t < g.size(); ++t) ASSERT_EQ(select_candidate(g[t], g[t - 1]).dir, (ShiftDirection{0, 1}));
}

TEST(Frames, MovingActorLowersMap) {
  Scenario s = one_actor(mover(0, 0, 9, 10, 20, 3, 0, 16), 10);
  const auto f = sim::render_frames(s, 2);
  const TemporalMap m = ssim_map(f[5], f[4]);
  const Box b = s.actors[0].box(5);
  std::vector<double> inside, outside;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) {
      const bool in = x >= b.x1 && x < b.x2 && y >= b.y1 && y < b.y2;
      const bool far = x < b.x1 - 12 || x >= b.x2 + 12 || y < b.y1 - 12 || y >= b.y2 + 12;
      if (in) inside.push_back(m.at(x, y, 0));
      else if (far) outside.push_back(m.at(x, y, 0));
    }
  auto median = [](std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
  };
  EXPECT_LT(median(inside), median(outside));
}

TEST(Detections, NoiselessEqualsGroundTruth) {
  Scenario s = one_actor(mover(1, 3, 15, 2, 2, 2, 1));
  s.actors.push_back(mover(0, 0, 19, 30, 30, 0, 0));
  const auto gt = sim::render_ground_truth(s);
  const auto dets = sim::synth_detections(s, {}, 1);
  ASSERT_EQ(dets.size(), 20u);
  for (std::size_t t = 0; t < dets.size(); ++t) {
    std::size_t expected = 0;
    for (const Tube& tube : gt.tubes)
      for (const TubeBox& b : tube.boxes)
        if (b.t == static_cast<std::int64_t>(t)) {
          ++expected;
          const bool found = std::any_of(dets[t].begin(), dets[t].end(), [&](const Detection& d) {
            return d.box == b.box && argmax_lowest(d.scores) == tube.label;
          });
          EXPECT_TRUE(found) << "frame " << t;
        }
    EXPECT_EQ(dets[t].size(), expected);
  }
}

TEST(Detections, OcclusionAlwaysDrops) {
  Scenario s = one_actor(mover(0, 0, 19, 5, 5, 1, 0));
  s.occlusions.push_back({0, 4, 6});
  const auto dets = sim::synth_detections(s, {}, 1);
  for (std::size_t t = 0; t < dets.size(); ++t) EXPECT_EQ(dets[t].size(), t >= 4 && t <= 6 ? 0u : 1u);
}

TEST(Detections, FullMissLeavesOnlyFalsePositives) {
  Scenario s = one_actor(mover(0, 0, 19, 5, 5, 1, 0));
  sim::NoiseParams n;
  n.p_miss = 1.0;
  EXPECT_EQ(sim::synth_detections(s, n, 1), FrameDetections(20));
  n.fp_rate = 2.0;
  const auto dets = sim::synth_detections(s, n, 1);
  const Box truth0 = s.actors[0].box(0);
  std::size_t total = 0;
  for (const auto& f : dets) {
    total += f.size();
    for (const Detection& d : f) EXPECT_NE(d.box, truth0);
  }
  EXPECT_GT(total, 0u);
}

TEST(Detections, MissRate) {
  Scenario s;
  s.frames = 1000;
  s.width = s.height = 64;
  for (int i = 0; i < 10; ++i) s.actors.push_back(mover(0, 0, 999, 5, 5, 0, 0));
  sim::NoiseParams n;
  n.p_miss = 0.3;
  const auto dets = sim::synth_detections(s, n, 17);
  std::size_t kept = 0;
  for (const auto& f : dets) kept += f.size();
  EXPECT_NEAR(1.0 - static_cast<double>(kept) / 10000.0, 0.3, 0.02);
}

TEST(Detections, ReproducibleAndBounded) {
  Scenario s = one_actor(mover(0, 0, 19, 5, 5, 1, 0.5));
  sim::NoiseParams n;
  n.p_miss = 0.2;
  n.jitter_sigma = 3;
  n.fp_rate = 1;
  n.off_class_max = 0.3;
  const auto a = sim::synth_detections(s, n, 5);
  EXPECT_EQ(a, sim::synth_detections(s, n, 5));
  EXPECT_NE(a, sim::synth_detections(s, n, 6));
  for (const auto& f : a)
    for (const Detection& d : f) {
      EXPECT_GE(d.box.x1, 0.0);
      EXPECT_LE(d.box.x2, 64.0);
      EXPECT_LE(d.box.x1, d.box.x2);
      EXPECT_EQ(d.scores.size(), 2u);
    }
}

TEST(Heatmaps, DecodeRecoversBoxes) {
  Scenario s = one_actor(mover(1, 0, 0, 8, 12, 0, 0, 16));
  s.actors.push_back(mover(0, 0, 0, 36, 36, 0, 0, 20));
  const auto dets = sim::synth_detections(s, {}, 1)[0];
  const HeatmapSet h = sim::synth_heatmaps(dets, 64, 64, 2, 4);
  const auto decoded = decode_heatmaps(h);
  ASSERT_EQ(decoded.size(), 2u);
  for (const Detection& d : dets) {
    double best = 0;
    for (const Detection& e : decoded)
      if (argmax_lowest(e.scores) == argmax_lowest(d.scores)) best = std::max(best, iou(d.box, e.box));
    EXPECT_GT(best, 0.9);
  }
}

TEST(OracleLink, NoiselessSingleActorOneTube) {
  const Scenario s = one_actor(mover(0, 0, 19, 5, 5, 1, 1));
  const auto dets = sim::synth_detections(s, {}, 1);
  const auto tubes = sim::oracle_link(dets, {});
  ASSERT_EQ(tubes.size(), 1u);
  EXPECT_EQ(tubes[0].boxes.size(), 20u);
  EXPECT_EQ(tubes, run_stream(dets, {}));
}

TEST(OracleLink, OneFrameGapFragments) {
  Scenario s = one_actor(mover(0, 0, 19, 5, 5, 0.5, 0));
  s.occlusions.push_back({0, 9, 9});
  const auto dets = sim::synth_detections(s, {}, 1);
  LinkerConfig on, off;
  off.extrapolate = false;
  EXPECT_EQ(sim::oracle_link(dets, on).size(), 1u);
  EXPECT_EQ(sim::oracle_link(dets, off).size(), 2u);
  EXPECT_EQ(run_stream(dets, off), sim::oracle_link(dets, off));
}

TEST(OracleAp, EvalExamples) {
  GroundTruth gt;
  gt.num_classes = 1;
  gt.tubes.push_back({"v", 0, 1.0, {{0, {0, 0, 10, 10}, false, 1.0}}});
  gt.tubes.push_back({"v", 0, 1.0, {{1, {0, 0, 10, 10}, false, 1.0}}});
  VideoDetections preds;
  preds["v"].resize(2);
  preds["v"][0].push_back({{0, 0, 10, 10}, {0.9}, 0});
  preds["v"][1].push_back({{40, 40, 50, 50}, {0.8}, 1});
  EXPECT_DOUBLE_EQ(sim::oracle_ap(preds, gt, 0, 0.5), 0.5);
  EXPECT_EQ(sim::oracle_ap(detections_from_tubes(gt.tubes, 1, true), gt, 0, 0.5), 1.0);
  EXPECT_EQ(sim::oracle_ap({}, gt, 0, 0.5), 0.0);
}
