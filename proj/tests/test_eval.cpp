#include <gtest/gtest.h>

#include "support.hpp"

using namespace actloc;

namespace {

Tube track(const std::string& video, int label, int first, int last, Box b, double score = 1.0) {
  Tube t{video, label, score, {}};
  for (int f = first; f <= last; ++f) t.boxes.push_back({f, b, false, score});
  return t;
}

VideoDetections as_detections(const std::vector<Tube>& tubes, int classes) {
  return detections_from_tubes(tubes, classes, true);
}

}  // namespace

TEST(AveragePrecision, AllPointEnvelope) {
  const auto pr = average_precision(std::vector<bool>{true, false}, 2);
  EXPECT_DOUBLE_EQ(pr.ap, 0.5);
  ASSERT_EQ(pr.points.size(), 2u);
  EXPECT_EQ(pr.points[0], (std::pair<double, double>{0.5, 1.0}));
  EXPECT_EQ(pr.points[1], (std::pair<double, double>{0.5, 0.5}));
  EXPECT_DOUBLE_EQ(average_precision(std::vector<bool>{false, true}, 1).ap, 0.5);
  EXPECT_EQ(average_precision(std::vector<bool>{}, 3).ap, 0.0);
  EXPECT_EQ(average_precision(std::vector<bool>{true}, 0).ap, 0.0);
}

TEST(FrameAp, TwoGroundTruthOneHitOneMiss) {
  GroundTruth gt;
  gt.num_classes = 1;
  gt.tubes.push_back(track("v", 0, 0, 0, {0, 0, 10, 10}));
  gt.tubes.push_back(track("v", 0, 1, 1, {0, 0, 10, 10}));
  VideoDetections preds;
  preds["v"].resize(2);
  preds["v"][0].push_back({{0, 0, 10, 10}, {0.9}, 0});
  preds["v"][1].push_back({{50, 50, 60, 60}, {0.8}, 1});
  const auto pr = frame_ap(preds, gt, 0, 0.5);
  EXPECT_DOUBLE_EQ(pr.ap, 0.5);
  EXPECT_DOUBLE_EQ(sim::oracle_ap(preds, gt, 0, 0.5), 0.5);
}

TEST(FrameAp, PerfectPredictions) {
  GroundTruth gt;
  gt.num_classes = 2;
  gt.tubes.push_back(track("v", 0, 0, 4, {0, 0, 10, 10}));
  gt.tubes.push_back(track("v", 1, 2, 6, {20, 20, 40, 40}));
  EXPECT_EQ(frame_ap(as_detections(gt.tubes, 2), gt, 0, 0.5).ap, 1.0);
  EXPECT_EQ(frame_ap(as_detections(gt.tubes, 2), gt, 1, 0.5).ap, 1.0);
}

TEST(FrameAp, UnknownClassThrows) {
  GroundTruth gt;
  gt.num_classes = 2;
  EXPECT_THROW(frame_ap({}, gt, 2, 0.5), InputError);
  EXPECT_THROW(video_ap({}, gt, -1, 0.5), InputError);
}

TEST(FrameAp, RankingOnlyDependence) {
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    auto in = testsupport::random_eval_instance(rng);
    const double before = frame_ap(in.frame_preds, in.gt, 0, 0.5).ap;
    for (auto& [_, frames] : in.frame_preds)
      for (auto& f : frames)
        for (auto& d : f)
          for (double& s : d.scores)
            if (s > 0) s = 0.5 + s * s / 4;
    ASSERT_NEAR(frame_ap(in.frame_preds, in.gt, 0, 0.5).ap, before, 1e-12);
  }
}

TEST(FrameAp, FalsePositiveNeverHelps) {
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    auto in = testsupport::random_eval_instance(rng);
    const double before = frame_ap(in.frame_preds, in.gt, 1, 0.5).ap;
    auto& frames = in.frame_preds.begin()->second;
    frames[0].push_back({{500, 500, 510, 510}, {0.0, rng.uniform(0.01, 1.0)}, 0});
    ASSERT_LE(frame_ap(in.frame_preds, in.gt, 1, 0.5).ap, before + 1e-12);
  }
}

TEST(FrameAp, MatchesOracle) {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto in = testsupport::random_eval_instance(rng);
    for (int c = 0; c < 2; ++c)
      for (double th : {0.3, 0.5, 0.7})
        ASSERT_NEAR(frame_ap(in.frame_preds, in.gt, c, th).ap, sim::oracle_ap(in.frame_preds, in.gt, c, th), 1e-9)
            << "instance " << i;
  }
}

TEST(FrameAp, FiftyPredictionsTenGroundTruth) {
  Rng rng(4);
  GroundTruth gt;
  gt.num_classes = 1;
  VideoDetections preds;
  preds["v"].resize(10);
  for (int t = 0; t < 10; ++t) {
    const Box b = testsupport::random_box(rng, 100, 100, 10, 40);
    gt.tubes.push_back(track("v", 0, t, t, b));
    for (int k = 0; k < 5; ++k) {
      const double j = rng.uniform(-8, 8);
      preds["v"][t].push_back({{b.x1 + j, b.y1, b.x2 + j, b.y2}, {rng.uniform01()}, t});
    }
  }
  EXPECT_NEAR(frame_ap(preds, gt, 0, 0.5).ap, sim::oracle_ap(preds, gt, 0, 0.5), 1e-9);
}

TEST(TubeIou, Examples) {
  const Tube a = track("v", 0, 0, 9, {0, 0, 10, 10});
  const Tube b = track("v", 0, 5, 14, {0, 0, 10, 10});
  EXPECT_EQ(tube_iou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(tube_iou(a, b), 1.0 / 3.0);
  EXPECT_EQ(tube_iou(a, track("v", 0, 10, 12, {0, 0, 10, 10})), 0.0);
}

TEST(TubeIou, MatchesDirectSummation) {
  Rng rng(5);
  for (int i = 0; i < 300; ++i) {
    const Tube a = testsupport::random_track(rng, "v", 0, 20), b = testsupport::random_track(rng, "v", 0, 20);
    const double v = tube_iou(a, b);
    ASSERT_NEAR(v, sim::oracle_tube_iou(a, b), 1e-12);
    ASSERT_EQ(v, tube_iou(b, a));
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
  }
}

TEST(VideoAp, SinglePairThresholds) {
  GroundTruth gt;
  gt.num_classes = 1;
  gt.tubes.push_back(track("v", 0, 0, 9, {0, 0, 10, 10}));
  // Temporal IoU 0.5 and spatial IoU 0.8 give 0.4.
  const std::vector<Tube> pred = {track("v", 0, 5, 14, {0, 0, 10, 10})};
  std::vector<Tube> p = pred;
  for (TubeBox& b : p[0].boxes) b.box = {0, 0, 10, 8};
  p[0].boxes.erase(p[0].boxes.begin() + 5, p[0].boxes.end());
  ASSERT_NEAR(tube_iou(p[0], gt.tubes[0]), 0.4, 1e-12);
  EXPECT_EQ(video_ap(p, gt, 0, 0.2).ap, 1.0);
  EXPECT_EQ(video_ap(p, gt, 0, 0.5).ap, 0.0);
}

TEST(VideoAp, OtherVideoNeverMatches) {
  GroundTruth gt;
  gt.num_classes = 1;
  gt.tubes.push_back(track("a", 0, 0, 9, {0, 0, 10, 10}));
  const std::vector<Tube> pred = {track("b", 0, 0, 9, {0, 0, 10, 10})};
  EXPECT_EQ(video_ap(pred, gt, 0, 0.5).ap, 0.0);
}

TEST(VideoAp, MatchesOracle) {
  Rng rng(6);
  for (int i = 0; i < 200; ++i) {
    const auto in = testsupport::random_eval_instance(rng);
    for (int c = 0; c < 2; ++c)
      for (double th : {0.2, 0.5, 0.75})
        ASSERT_NEAR(video_ap(in.tubes, in.gt, c, th).ap, sim::oracle_video_ap(in.tubes, in.gt, c, th), 1e-9)
            << "instance " << i;
  }
}

TEST(MapSuite, PerfectAndEmpty) {
  GroundTruth gt;
  gt.num_classes = 3;
  gt.tubes.push_back(track("v", 0, 0, 9, {0, 0, 10, 10}));
  gt.tubes.push_back(track("v", 2, 3, 8, {30, 30, 60, 60}));
  const MapReport perfect = map_suite(as_detections(gt.tubes, 3), gt.tubes, gt);
  for (double v : {perfect.f_map_05, perfect.v_map_02, perfect.v_map_05, perfect.v_map_075, perfect.v_map_05_095})
    EXPECT_EQ(v, 1.0);
  EXPECT_EQ(perfect.classes, (std::vector<int>{0, 2}));
  const MapReport empty = map_suite({}, {}, gt);
  for (double v : {empty.f_map_05, empty.v_map_02, empty.v_map_05, empty.v_map_075, empty.v_map_05_095})
    EXPECT_EQ(v, 0.0);
}

TEST(MapSuite, AbsentClassesExcluded) {
  GroundTruth gt;
  gt.num_classes = 4;
  gt.tubes.push_back(track("v", 1, 0, 4, {0, 0, 10, 10}));
  std::vector<Tube> preds = gt.tubes;
  preds.push_back(track("v", 3, 0, 4, {50, 50, 60, 60}));
  EXPECT_EQ(map_suite(as_detections(preds, 4), preds, gt).v_map_05, 1.0);
}

TEST(MapSuite, MatchesOraclePipeline) {
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    const auto in = testsupport::random_eval_instance(rng);
    const MapReport r = map_suite(in.frame_preds, in.tubes, in.gt);
    const auto cls = in.gt.classes_present();
    auto mean = [&](auto fn) {
      double s = 0;
      for (int c : cls) s += fn(c);
      return s / static_cast<double>(cls.size());
    };
    EXPECT_NEAR(r.f_map_05, mean([&](int c) { return sim::oracle_ap(in.frame_preds, in.gt, c, 0.5); }), 1e-9);
    EXPECT_NEAR(r.v_map_075, mean([&](int c) { return sim::oracle_video_ap(in.tubes, in.gt, c, 0.75); }), 1e-9);
    double coco = 0;
    for (int k = 0; k < 10; ++k)
      coco += mean([&](int c) { return sim::oracle_video_ap(in.tubes, in.gt, c, 0.5 + 0.05 * k); });
    EXPECT_NEAR(r.v_map_05_095, coco / 10, 1e-9);
  }
}

TEST(GroundTruth, Validation) {
  GroundTruth gt;
  gt.num_classes = 1;
  Tube t = track("v", 0, 0, 3, {0, 0, 10, 10});
  t.boxes.erase(t.boxes.begin() + 1);
  gt.tubes.push_back(t);
  EXPECT_THROW(gt.validate(), InputError);
}

TEST(EvalTubes, ExtrapolatedFramesFlag) {
  ActionTube t;
  t.id = 0;
  t.label = 0;
  t.score = 0.7;
  t.boxes = {{0, {0, 0, 10, 10}, false, 0.7}, {1, {0, 0, 10, 10}, true, 0.7}, {2, {0, 0, 10, 10}, false, 0.7}};
  EXPECT_EQ(to_eval_tube(t, "v", true).boxes.size(), 3u);
  EXPECT_EQ(to_eval_tube(t, "v", false).boxes.size(), 2u);
  const auto dets = detections_from_tubes(std::vector<Tube>{to_eval_tube(t, "v")}, 2, false);
  EXPECT_EQ(dets.at("v")[1].size(), 0u);
  EXPECT_EQ(dets.at("v")[2][0].scores, (std::vector<double>{0.7, 0.0}));
}
