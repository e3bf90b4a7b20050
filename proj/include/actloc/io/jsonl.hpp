#pragma once

// JSON Lines readers and writers.
//
// Detections, one line per frame:
//   {"frame": int, "dets": [{"box": [x1,y1,x2,y2], "scores": [f, ...]}], "video": str?}
// Tubes, one line per tube (ground truth adds "video"):
//   {"id": int, "class": int, "score": f,
//    "frames": [{"t": int, "box": [f,f,f,f], "extrapolated": bool, "score": f?}]}
//
// Doubles are written with round-trip precision.

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "actloc/detect.hpp"
#include "actloc/errors.hpp"
#include "actloc/eval.hpp"
#include "actloc/sim.hpp"
#include "actloc/tubes.hpp"

namespace actloc::io {

using nlohmann::json;

namespace detail {

inline Box box_from_json(const json& j, std::size_t line) {
  if (!j.is_array() || j.size() != 4) throw SchemaError("box must be an array of 4 numbers", line);
  Box b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  if (!b.valid()) throw SchemaError("box corners must satisfy x1 <= x2, y1 <= y2", line);
  return b;
}

inline json box_to_json(const Box& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (std::all_of(text.begin(), text.end(), [](unsigned char ch) { return std::isspace(ch); }))
      continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line);
    }
    try {
      fn(j, line);
    } catch (const json::exception& e) {
      throw SchemaError(e.what(), line);
    }
  }
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  return out;
}

}  // namespace detail

// Reads detection lines grouped by video ("" when the key is absent). When
// `num_classes` is 0 the first score vector fixes the class count.
inline VideoDetections read_video_detections(std::istream& in, std::size_t num_classes = 0) {
  VideoDetections out;
  detail::for_each_line(in, [&](const json& j, std::size_t line) {
    if (!j.is_object() || !j.contains("frame") || !j.contains("dets"))
      throw SchemaError("detection line needs 'frame' and 'dets'", line);
    const auto frame = j.at("frame").get<std::int64_t>();
    if (frame < 0) throw SchemaError("negative frame index", line);
    const std::string video = j.value("video", std::string{});
    FrameDetections& frames = out[video];
    if (frames.size() <= static_cast<std::size_t>(frame)) frames.resize(static_cast<std::size_t>(frame) + 1);
    for (const json& d : j.at("dets")) {
      Detection det;
      det.frame = frame;
      det.box = detail::box_from_json(d.at("box"), line);
      det.scores = d.at("scores").get<std::vector<double>>();
      if (num_classes == 0) num_classes = det.scores.size();
      if (det.scores.size() != num_classes || num_classes == 0)
        throw SchemaError("score vector has " + std::to_string(det.scores.size()) +
                              " entries, expected " + std::to_string(num_classes),
                          line);
      frames[static_cast<std::size_t>(frame)].push_back(std::move(det));
    }
  });
  return out;
}

inline FrameDetections read_detections(std::istream& in, std::size_t num_classes = 0) {
  VideoDetections v = read_video_detections(in, num_classes);
  if (v.empty()) return {};
  if (v.size() > 1) throw SchemaError("detections span several videos; use read_video_detections");
  return std::move(v.begin()->second);
}

inline FrameDetections read_detections(const std::string& path, std::size_t num_classes = 0) {
  auto in = detail::open_in(path);
  return read_detections(in, num_classes);
}

inline void write_frame_line(std::ostream& out, std::int64_t frame, std::span<const Detection> dets,
                             const std::string& video = {}) {
  json j;
  j["frame"] = frame;
  if (!video.empty()) j["video"] = video;
  j["dets"] = json::array();
  for (const Detection& d : dets)
    j["dets"].push_back({{"box", detail::box_to_json(d.box)}, {"scores", d.scores}});
  out << j.dump() << '\n';
}

// Empty frames are written too, so the frame count survives a round trip.
inline void write_detections(std::ostream& out, const FrameDetections& frames,
                             const std::string& video = {}) {
  for (std::size_t t = 0; t < frames.size(); ++t)
    write_frame_line(out, static_cast<std::int64_t>(t), frames[t], video);
}

inline json tube_to_json(std::int64_t id, int label, double score, std::span<const TubeBox> boxes,
                         const std::string& video = {}) {
  json j;
  j["id"] = id;
  j["class"] = label;
  j["score"] = score;
  if (!video.empty()) j["video"] = video;
  j["frames"] = json::array();
  for (const TubeBox& b : boxes)
    j["frames"].push_back({{"t", b.t},
                           {"box", detail::box_to_json(b.box)},
                           {"extrapolated", b.extrapolated},
                           {"score", b.score}});
  return j;
}

inline void write_tubes(std::ostream& out, std::span<const ActionTube> tubes,
                        const std::string& video = {}) {
  for (const ActionTube& t : tubes)
    out << tube_to_json(t.id, t.label, t.score, t.boxes, video).dump() << '\n';
}

inline void write_tubes(std::ostream& out, std::span<const Tube> tubes) {
  std::int64_t id = 0;
  for (const Tube& t : tubes) out << tube_to_json(id++, t.label, t.score, t.boxes, t.video).dump() << '\n';
}

// Tube lines as evaluation tubes; boxes are sorted by frame and duplicate
// frames rejected.
inline std::vector<Tube> read_tubes(std::istream& in) {
  std::vector<Tube> out;
  detail::for_each_line(in, [&](const json& j, std::size_t line) {
    if (!j.is_object() || !j.contains("class") || !j.contains("frames"))
      throw SchemaError("tube line needs 'class' and 'frames'", line);
    Tube tube;
    tube.video = j.value("video", std::string{});
    tube.label = j.at("class").get<int>();
    if (tube.label < 0) throw SchemaError("negative class index", line);
    tube.score = j.value("score", 1.0);
    for (const json& f : j.at("frames")) {
      TubeBox b;
      b.t = f.at("t").get<std::int64_t>();
      b.box = detail::box_from_json(f.at("box"), line);
      b.extrapolated = f.value("extrapolated", false);
      b.score = f.value("score", tube.score);
      tube.boxes.push_back(b);
    }
    std::stable_sort(tube.boxes.begin(), tube.boxes.end(),
                     [](const TubeBox& a, const TubeBox& b) { return a.t < b.t; });
    for (std::size_t i = 1; i < tube.boxes.size(); ++i)
      if (tube.boxes[i].t == tube.boxes[i - 1].t) throw SchemaError("duplicate frame in tube", line);
    out.push_back(std::move(tube));
  });
  return out;
}

inline std::vector<Tube> read_tubes(const std::string& path) {
  auto in = detail::open_in(path);
  return read_tubes(in);
}

// Ground truth is the tube schema; the class count is either given or taken
// as one more than the largest label.
inline GroundTruth read_ground_truth(std::istream& in, int num_classes = 0) {
  GroundTruth gt;
  gt.tubes = read_tubes(in);
  int max_label = -1;
  for (const Tube& t : gt.tubes) max_label = std::max(max_label, t.label);
  gt.num_classes = num_classes > 0 ? num_classes : max_label + 1;
  if (gt.num_classes <= max_label) throw SchemaError("ground-truth label exceeds class count");
  if (!gt.tubes.empty()) gt.validate();
  return gt;
}

inline GroundTruth read_ground_truth(const std::string& path, int num_classes = 0) {
  auto in = detail::open_in(path);
  return read_ground_truth(in, num_classes);
}

inline void write_ground_truth(std::ostream& out, const GroundTruth& gt) { write_tubes(out, gt.tubes); }

// ---- simulator scenario files -------------------------------------------

struct ScenarioFile {
  sim::Scenario scenario;
  sim::NoiseParams noise;
  std::uint64_t seed = 0;
};

inline ScenarioFile scenario_from_json(const json& j) {
  ScenarioFile f;
  sim::Scenario& s = f.scenario;
  try {
    s.video = j.value("video", s.video);
    s.frames = j.value("frames", s.frames);
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.channels = j.value("channels", s.channels);
    s.num_classes = j.value("classes", s.num_classes);
    if (j.contains("drift")) {
      const auto d = j.at("drift").get<std::vector<int>>();
      if (d.size() != 2 || std::abs(d[0]) > 1 || std::abs(d[1]) > 1)
        throw SchemaError("drift must be [dx, dy] with components in {-1, 0, 1}");
      s.drift = {d[0], d[1]};
    }
    for (const json& a : j.value("actors", json::array())) {
      sim::Actor actor;
      actor.label = a.at("class").get<int>();
      actor.start = a.at("start").get<std::int64_t>();
      actor.end = a.at("end").get<std::int64_t>();
      const auto size = a.at("size").get<std::vector<double>>();
      if (size.size() != 2) throw SchemaError("actor size must be [w, h]");
      actor.w = size[0];
      actor.h = size[1];
      if (a.contains("waypoints")) {
        actor.motion = sim::Motion::kWaypoints;
        for (const json& w : a.at("waypoints")) {
          const auto v = w.get<std::vector<double>>();
          if (v.size() != 3) throw SchemaError("waypoint must be [t, x, y]");
          actor.waypoints.push_back({static_cast<std::int64_t>(v[0]), v[1], v[2]});
        }
      } else {
        const auto pos = a.at("position").get<std::vector<double>>();
        if (pos.size() != 2) throw SchemaError("actor position must be [x, y]");
        actor.x0 = pos[0];
        actor.y0 = pos[1];
        const auto vel = a.value("velocity", std::vector<double>{0.0, 0.0});
        if (vel.size() != 2) throw SchemaError("actor velocity must be [vx, vy]");
        actor.vx = vel[0];
        actor.vy = vel[1];
      }
      s.actors.push_back(std::move(actor));
    }
    for (const json& o : j.value("occlusions", json::array()))
      s.occlusions.push_back({o.at("actor").get<int>(), o.at("start").get<std::int64_t>(),
                              o.at("end").get<std::int64_t>()});
    if (j.contains("noise")) {
      const json& n = j.at("noise");
      f.noise.p_miss = n.value("p_miss", f.noise.p_miss);
      f.noise.jitter_sigma = n.value("jitter_sigma", f.noise.jitter_sigma);
      f.noise.fp_rate = n.value("fp_rate", f.noise.fp_rate);
      f.noise.off_class_max = n.value("off_class_max", f.noise.off_class_max);
      if (n.contains("score_range")) {
        const auto r = n.at("score_range").get<std::vector<double>>();
        if (r.size() != 2) throw SchemaError("score_range must be [lo, hi]");
        f.noise.s_lo = r[0];
        f.noise.s_hi = r[1];
      }
    }
    f.seed = j.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw SchemaError(std::string("scenario: ") + e.what());
  }
  s.validate();
  f.noise.validate();
  return f;
}

inline ScenarioFile read_scenario(const std::string& path) {
  auto in = detail::open_in(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scenario '") + path + "': " + e.what());
  }
  return scenario_from_json(j);
}

}  // namespace actloc::io
