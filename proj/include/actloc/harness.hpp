#pragma once

// Latency benchmark and parameter sweeps over simulated scenarios.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "actloc/config.hpp"
#include "actloc/detect.hpp"
#include "actloc/eval.hpp"
#include "actloc/io/jsonl.hpp"
#include "actloc/sim.hpp"
#include "actloc/temporal.hpp"
#include "actloc/tubes.hpp"

namespace actloc {

struct StageStats {
  double mean = 0.0, p50 = 0.0, p95 = 0.0;  // milliseconds per frame
};

inline StageStats summarize(std::vector<double> ms) {
  StageStats s;
  if (ms.empty()) return s;
  s.mean = std::accumulate(ms.begin(), ms.end(), 0.0) / static_cast<double>(ms.size());
  std::sort(ms.begin(), ms.end());
  auto rank = [&](double q) {
    const auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(ms.size()))) - 1;
    return ms[std::min(idx, ms.size() - 1)];
  };
  s.p50 = rank(0.50);
  s.p95 = rank(0.95);
  return s;
}

struct TimingReport {
  TemporalMode mode = TemporalMode::kSsMap;
  int frames = 0;
  StageStats temporal;  // shift-candidate selection + map; zero when the mode is none
  StageStats decode;
  StageStats linking;
  StageStats overall;
  double fps = 0.0;     // 1000 / overall mean
};

struct BenchInput {
  std::vector<Frame> frames;
  std::vector<HeatmapSet> heatmaps;  // one per frame, same length as frames
};

// 256x256x3 scene with three moving actors and detector-like heatmaps.
inline BenchInput default_bench_input(int num_frames = 60, std::uint64_t seed = 7) {
  sim::Scenario s;
  s.frames = num_frames;
  s.num_classes = 3;
  s.drift = {1, 0};
  const int last = num_frames - 1;
  s.actors.push_back({0, 0, last, 40, 60, sim::Motion::kConstantVelocity, 20, 30, 1.0, 0.5, {}});
  s.actors.push_back({1, 0, last, 50, 50, sim::Motion::kConstantVelocity, 180, 150, -1.0, 0.0, {}});
  s.actors.push_back({2, 0, last, 30, 70, sim::Motion::kConstantVelocity, 120, 20, 0.0, 1.0, {}});
  sim::NoiseParams noise;
  noise.p_miss = 0.1;
  noise.jitter_sigma = 1.5;
  noise.fp_rate = 0.5;
  BenchInput in;
  in.frames = sim::render_frames(s, seed);
  const FrameDetections dets = sim::synth_detections(s, noise, seed);
  for (const auto& frame_dets : dets)
    in.heatmaps.push_back(sim::synth_heatmaps(frame_dets, s.width, s.height, s.num_classes, 4));
  return in;
}

// Runs warm-up frames, then `timed_frames` frames through temporal
// extraction, heatmap decoding and tube linking, cycling over the
// preloaded input. No I/O happens inside the timed region.
inline TimingReport run_bench(const BenchInput& input, const PipelineConfig& cfg, TemporalMode mode,
                              int timed_frames = 500, int warmup = 20) {
  if (input.frames.empty() || input.frames.size() != input.heatmaps.size())
    throw InputError("benchmark needs one heatmap set per frame");
  if (timed_frames < 1) throw InputError("benchmark needs at least one timed frame");
  using clock = std::chrono::steady_clock;
  auto ms_since = [](clock::time_point a, clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
  };

  TemporalOptions topt = cfg.temporal;
  topt.mode = mode;
  TemporalExtractor extractor(topt);
  Linker linker(cfg.link);
  std::vector<double> t_temporal, t_decode, t_link, t_total;
  double sink = 0.0;

  const std::size_t n = input.frames.size();
  for (int i = 0; i < warmup + timed_frames; ++i) {
    Frame frame = input.frames[static_cast<std::size_t>(i) % n];
    frame.index = i;
    const auto t0 = clock::now();
    if (mode != TemporalMode::kNone) {
      const CascadedInput net_in = extractor.push(frame);
      sink += net_in.data.back();
    }
    const auto t1 = clock::now();
    const auto dets = decode_heatmaps(input.heatmaps[static_cast<std::size_t>(i) % n], cfg.decode, i);
    const auto t2 = clock::now();
    linker.step(i, dets);
    const auto t3 = clock::now();
    if (i >= warmup) {
      t_temporal.push_back(mode == TemporalMode::kNone ? 0.0 : ms_since(t0, t1));
      t_decode.push_back(ms_since(t1, t2));
      t_link.push_back(ms_since(t2, t3));
      t_total.push_back(ms_since(t0, t3));
    }
  }
  volatile double keep = sink;
  (void)keep;

  TimingReport r;
  r.mode = mode;
  r.frames = timed_frames;
  r.temporal = summarize(std::move(t_temporal));
  r.decode = summarize(std::move(t_decode));
  r.linking = summarize(std::move(t_link));
  r.overall = summarize(std::move(t_total));
  r.fps = r.overall.mean > 0.0 ? 1000.0 / r.overall.mean : std::numeric_limits<double>::infinity();
  return r;
}

// Mean per-frame cost of linking a stream with no detections at all.
inline double empty_stream_link_ms(const LinkerConfig& cfg, int frames = 500) {
  using clock = std::chrono::steady_clock;
  Linker linker(cfg);
  const auto t0 = clock::now();
  for (int i = 0; i < frames; ++i) linker.step(i, {});
  return std::chrono::duration<double, std::milli>(clock::now() - t0).count() / frames;
}

// ---- sweeps ----------------------------------------------------------------

enum class SweepParam { kLambda, kK, kFrameGap, kExplt, kBoxp };

inline SweepParam parse_sweep_param(std::string_view s) {
  if (s == "lambda") return SweepParam::kLambda;
  if (s == "k") return SweepParam::kK;
  if (s == "frame_gap") return SweepParam::kFrameGap;
  if (s == "explt") return SweepParam::kExplt;
  if (s == "boxp") return SweepParam::kBoxp;
  throw InputError("unknown sweep parameter '" + std::string(s) + "'");
}

// "a,b,c" or "lo:hi:step" (inclusive). Booleans accept off/on style words.
inline std::vector<std::string> parse_sweep_values(const std::string& spec) {
  std::vector<std::string> out;
  if (spec.find(':') != std::string::npos) {
    const auto c1 = spec.find(':');
    const auto c2 = spec.find(':', c1 + 1);
    if (c2 == std::string::npos) throw InputError("range must be lo:hi:step");
    const double lo = detail::to_double("range", spec.substr(0, c1));
    const double hi = detail::to_double("range", spec.substr(c1 + 1, c2 - c1 - 1));
    const double step = detail::to_double("range", spec.substr(c2 + 1));
    if (!(step > 0.0)) throw InputError("range step must be positive");
    for (int i = 0;; ++i) {
      const double v = lo + step * i;
      if (v > hi + 1e-9) break;
      char buf[32];
      std::snprintf(buf, sizeof buf, "%g", v);
      out.emplace_back(buf);
    }
  } else {
    std::size_t start = 0;
    while (start <= spec.size()) {
      const auto comma = spec.find(',', start);
      std::string tok(detail::trim(spec.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
      if (!tok.empty()) out.push_back(tok);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  if (out.empty()) throw InputError("sweep range is empty");
  return out;
}

struct SweepRow {
  std::string value;
  MapReport report;
  // Mean SS-map value on background minus on actor pixels (frame_gap sweeps
  // only; NaN otherwise). Larger means a stronger motion cue.
  double motion_contrast = std::numeric_limits<double>::quiet_NaN();
};

// Detections -> linker -> evaluation for one configuration.
inline MapReport evaluate_scenario(const io::ScenarioFile& sf, const PipelineConfig& cfg) {
  const GroundTruth gt = sim::render_ground_truth(sf.scenario);
  const FrameDetections dets = sim::synth_detections(sf.scenario, sf.noise, sf.seed);
  LinkerConfig link = cfg.link;
  if (link.frame_w <= 0.0 || link.frame_h <= 0.0) {
    link.frame_w = sf.scenario.width;
    link.frame_h = sf.scenario.height;
  }
  const auto tubes = run_stream(dets, link);
  const auto eval_tubes = to_eval_tubes(tubes, sf.scenario.video, cfg.eval.include_extrapolated);
  const VideoDetections frame_preds =
      cfg.eval.fmap_from_tubes
          ? detections_from_tubes(eval_tubes, sf.scenario.num_classes, cfg.eval.include_extrapolated)
          : VideoDetections{{sf.scenario.video, dets}};
  return map_suite(frame_preds, eval_tubes, gt);
}

// Background-minus-actor mean of the temporal map for a rendered scenario.
inline double motion_contrast(const io::ScenarioFile& sf, const PipelineConfig& cfg, int gap) {
  const auto frames = sim::render_frames(sf.scenario, sf.seed);
  const GroundTruth gt = sim::render_ground_truth(sf.scenario);
  TemporalOptions topt = cfg.temporal;
  topt.mode = TemporalMode::kSsMap;
  topt.frame_gap = gap;
  TemporalExtractor extractor(topt);
  double bg = 0.0, fg = 0.0;
  std::size_t nbg = 0, nfg = 0;
  for (const Frame& f : frames) {
    const CascadedInput in = extractor.push(f);
    if (f.index < gap) continue;
    std::vector<char> mask(f.plane_size(), 0);
    for (const Tube& tube : gt.tubes)
      for (const TubeBox& tb : tube.boxes) {
        if (tb.t != f.index) continue;
        for (int y = std::max(0, static_cast<int>(tb.box.y1)); y < std::min(f.height, static_cast<int>(std::ceil(tb.box.y2))); ++y)
          for (int x = std::max(0, static_cast<int>(tb.box.x1)); x < std::min(f.width, static_cast<int>(std::ceil(tb.box.x2))); ++x)
            mask[static_cast<std::size_t>(y) * f.width + x] = 1;
      }
    for (int c = f.channels; c < in.channels; ++c) {
      const auto plane = in.plane(c);
      for (std::size_t i = 0; i < plane.size(); ++i) {
        if (mask[i]) {
          fg += plane[i];
          ++nfg;
        } else {
          bg += plane[i];
          ++nbg;
        }
      }
    }
  }
  if (nbg == 0 || nfg == 0) return 0.0;
  return bg / static_cast<double>(nbg) - fg / static_cast<double>(nfg);
}

inline std::vector<SweepRow> run_sweep(SweepParam param, const std::vector<std::string>& values,
                                       const io::ScenarioFile& sf, const PipelineConfig& base) {
  if (values.empty()) throw InputError("sweep range is empty");
  std::vector<SweepRow> rows;
  for (const std::string& v : values) {
    PipelineConfig cfg = base;
    std::map<std::string, std::string> kv;
    switch (param) {
      case SweepParam::kLambda: kv["link.lambda"] = v; break;
      case SweepParam::kK: kv["link.k"] = v; break;
      case SweepParam::kFrameGap: kv["temporal.frame_gap"] = v; break;
      case SweepParam::kExplt: kv["link.explt"] = v; break;
      case SweepParam::kBoxp: kv["link.boxp"] = v; break;
    }
    cfg.apply(kv);
    cfg.validate();
    SweepRow row;
    row.value = v;
    row.report = evaluate_scenario(sf, cfg);
    if (param == SweepParam::kFrameGap) row.motion_contrast = motion_contrast(sf, cfg, cfg.temporal.frame_gap);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace actloc
