// actloc: command-line front end for the localization pipeline.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "actloc/actloc.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace actloc;

namespace {

struct ConfigFlags {
  std::string path;
  std::map<std::string, std::string> values;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& flags) {
  cmd->add_option("--config", flags.path, "Config file (key = value lines)");
  for (const std::string& key : PipelineConfig::keys())
    cmd->add_option_function<std::string>(
           "--" + key, [&flags, key](const std::string& v) { flags.values[key] = v; }, "Config key " + key)
        ->group("Config keys");
}

PipelineConfig load_config(const ConfigFlags& flags) {
  std::string path = flags.path;
  if (path.empty())
    if (const char* env = std::getenv(kConfigEnvVar)) path = env;
  const auto file_kv = path.empty() ? std::map<std::string, std::string>{} : read_config_file(path);
  return resolve_config(file_kv, flags.values);
}

// "-" means standard output.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
    file_.open(path);
    if (!file_) throw InputError("cannot write '" + path + "'");
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

Image channels_from(const Image& img, int first) {
  Image out(img.width, img.height, img.channels - first);
  std::copy(img.data.begin() + static_cast<std::ptrdiff_t>(first * img.plane_size()), img.data.end(),
            out.data.begin());
  return out;
}

// Reads every frame, reporting each unreadable or missing file before failing.
std::vector<Frame> load_frames_checked(const std::string& path) {
  if (!fs::is_directory(path)) return io::read_frames(path);
  const auto indices = io::list_png_frames(path);
  if (indices.empty()) throw InputError("no %06d.png frames in '" + path + "'");
  std::vector<std::string> errors;
  for (std::size_t i = 1; i < indices.size(); ++i)
    for (auto m = indices[i - 1] + 1; m < indices[i]; ++m)
      errors.push_back((fs::path(path) / io::frame_filename(m)).string() + ": missing frame");
  std::vector<Frame> frames;
  for (auto idx : indices) {
    const std::string file = (fs::path(path) / io::frame_filename(idx)).string();
    try {
      frames.push_back(io::read_png(file, idx));
      if (!frames.back().same_shape(frames.front())) errors.push_back(file + ": size differs from the first frame");
    } catch (const std::exception& e) {
      errors.push_back(file + ": " + e.what());
    }
  }
  if (!errors.empty()) {
    for (const auto& e : errors) std::cerr << "actloc: " << e << '\n';
    throw InputError(std::to_string(errors.size()) + " bad frame file(s)");
  }
  return frames;
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

void print_report_tsv(std::ostream& out, const MapReport& r) {
  out << "v-mAP@0.2\tv-mAP@0.5\tv-mAP@0.75\tv-mAP@0.5:0.95\tf-mAP@0.5\n"
      << fixed(r.v_map_02) << '\t' << fixed(r.v_map_05) << '\t' << fixed(r.v_map_075) << '\t'
      << fixed(r.v_map_05_095) << '\t' << fixed(r.f_map_05) << '\n';
}

json report_json(const MapReport& r) {
  return {{"v_map", {{"0.2", r.v_map_02}, {"0.5", r.v_map_05}, {"0.75", r.v_map_075}, {"0.5:0.95", r.v_map_05_095}}},
          {"f_map", {{"0.5", r.f_map_05}}},
          {"classes", r.classes}};
}

json stats_json(const StageStats& s) { return {{"mean_ms", s.mean}, {"p50_ms", s.p50}, {"p95_ms", s.p95}}; }

// ---- subcommands -----------------------------------------------------------

int cmd_preprocess(const PipelineConfig& cfg, const std::string& frames_path, const std::string& out_dir) {
  const auto frames = load_frames_checked(frames_path);
  fs::create_directories(out_dir);
  std::ofstream manifest(fs::path(out_dir) / "manifest.tsv");
  if (!manifest) throw InputError("cannot write manifest in '" + out_dir + "'");
  manifest << "frame\tpast\tdx\tdy\tmean_ssim\n";
  TemporalExtractor extractor(cfg.temporal);
  for (const Frame& f : frames) {
    const std::int64_t past = extractor.buffered() == 0 ? f.index : extractor.past_for_next().index;
    const CascadedInput in = extractor.push(f);
    manifest << f.index << '\t' << past << '\t' << in.dir.dx << '\t' << in.dir.dy << '\t';
    const auto file = (fs::path(out_dir) / io::frame_filename(f.index, "map_")).string();
    switch (cfg.temporal.mode) {
      case TemporalMode::kSsMap:
        io::write_map_png(file, channels_from(in, f.channels));
        manifest << std::setprecision(17) << in.mean_ssim;
        break;
      case TemporalMode::kDsim:
        io::write_png(file, channels_from(in, f.channels), 0.0, 1.0);
        manifest << std::setprecision(17) << in.mean_ssim;
        break;
      case TemporalMode::kRawPrev:
        io::write_png(file, channels_from(in, f.channels));
        manifest << '-';
        break;
      case TemporalMode::kNone:
        manifest << '-';
        break;
    }
    manifest << '\n';
  }
  std::cerr << "preprocessed " << frames.size() << " frames (" << to_string(cfg.temporal.mode) << ")\n";
  return 0;
}

int cmd_decode(const PipelineConfig& cfg, const std::string& dir, const std::string& out_path) {
  if (!fs::is_directory(dir)) throw InputError("'" + dir + "' is not a directory");
  std::map<std::int64_t, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.size() == 10 && name.substr(6) == ".bin" &&
        std::all_of(name.begin(), name.begin() + 6, [](char c) { return c >= '0' && c <= '9'; }))
      files[std::stoll(name.substr(0, 6))] = e.path().string();
  }
  FrameDetections frames;
  for (const auto& [t, file] : files) {
    HeatmapSet h;
    try {
      h = io::read_heatmaps(file);
    } catch (const std::exception& e) {
      throw InputError(file + ": " + e.what());
    }
    if (cfg.num_classes > 0 && h.num_classes != cfg.num_classes)
      throw InputError(file + ": heatmap has " + std::to_string(h.num_classes) + " classes, expected " +
                       std::to_string(cfg.num_classes));
    frames.resize(static_cast<std::size_t>(t) + 1);
    frames[static_cast<std::size_t>(t)] = decode_heatmaps(h, cfg.decode, t);
  }
  Output out(out_path);
  io::write_detections(out.stream(), frames);
  return 0;
}

int cmd_link(const PipelineConfig& cfg, const std::string& det_path, const std::string& out_path,
             const std::string& online_path) {
  auto in = io::detail::open_in(det_path);
  const VideoDetections videos = io::read_video_detections(in, static_cast<std::size_t>(cfg.num_classes));
  Output out(out_path);
  std::optional<Output> online;
  if (!online_path.empty()) online.emplace(online_path);
  for (const auto& [video, frames] : videos) {
    Linker linker(cfg.link);
    for (std::size_t t = 0; t < frames.size(); ++t) {
      linker.step(static_cast<std::int64_t>(t), frames[t]);
      if (online) {
        json line{{"frame", t}, {"tubes", json::array()}};
        if (!video.empty()) line["video"] = video;
        for (const ActionTube& tube : linker.snapshot())
          line["tubes"].push_back(io::tube_to_json(tube.id, tube.label, tube.score, tube.boxes));
        online->stream() << line.dump() << '\n' << std::flush;
      }
    }
    const auto tubes = linker.snapshot();
    io::write_tubes(out.stream(), tubes, video);
  }
  return 0;
}

int cmd_eval(const PipelineConfig& cfg, const std::string& tubes_path, const std::string& det_path,
             const std::string& gt_path, const std::string& format, const std::string& out_path) {
  VideoDetections dets;
  std::size_t det_classes = 0;
  if (!det_path.empty()) {
    auto in = io::detail::open_in(det_path);
    dets = io::read_video_detections(in, static_cast<std::size_t>(cfg.num_classes));
    for (const auto& [_, frames] : dets)
      for (const auto& f : frames)
        if (!f.empty() && det_classes == 0) det_classes = f.front().scores.size();
  } else if (!cfg.eval.fmap_from_tubes) {
    throw InputError("--detections is required unless eval.fmap_source = tubes");
  }
  GroundTruth gt = io::read_ground_truth(gt_path, cfg.num_classes);
  if (det_classes > 0) {
    if (cfg.num_classes == 0 && gt.num_classes > static_cast<int>(det_classes))
      throw InputError("class-count mismatch: ground truth uses " + std::to_string(gt.num_classes) +
                       " classes, detections carry " + std::to_string(det_classes));
    gt.num_classes = static_cast<int>(det_classes);
  }
  std::vector<Tube> tubes = io::read_tubes(tubes_path);
  for (Tube& t : tubes) {
    if (t.label < 0 || t.label >= gt.num_classes)
      throw InputError("class-count mismatch: tube label " + std::to_string(t.label) + " with " +
                       std::to_string(gt.num_classes) + " classes");
    if (!cfg.eval.include_extrapolated)
      std::erase_if(t.boxes, [](const TubeBox& b) { return b.extrapolated; });
  }
  std::erase_if(tubes, [](const Tube& t) { return t.boxes.empty(); });
  if (cfg.eval.fmap_from_tubes) dets = detections_from_tubes(tubes, gt.num_classes, cfg.eval.include_extrapolated);

  const MapReport r = map_suite(dets, tubes, gt);
  Output out(out_path);
  if (format == "json") out.stream() << report_json(r).dump(2) << '\n';
  else print_report_tsv(out.stream(), r);
  return 0;
}

BenchInput bench_input_from(const std::string& scenario, const std::string& frames_path,
                            const std::string& heatmap_dir, int frames, std::uint64_t seed) {
  if (!scenario.empty()) {
    const io::ScenarioFile sf = io::read_scenario(scenario);
    BenchInput in;
    in.frames = sim::render_frames(sf.scenario, sf.seed);
    for (const auto& d : sim::synth_detections(sf.scenario, sf.noise, sf.seed))
      in.heatmaps.push_back(
          sim::synth_heatmaps(d, sf.scenario.width, sf.scenario.height, sf.scenario.num_classes, 4));
    return in;
  }
  if (frames_path.empty()) return default_bench_input(frames, seed);
  BenchInput in;
  in.frames = load_frames_checked(frames_path);
  const Frame& f0 = in.frames.front();
  if (!heatmap_dir.empty()) {
    for (const Frame& f : in.frames)
      in.heatmaps.push_back(io::read_heatmaps((fs::path(heatmap_dir) / io::frame_filename(f.index, "", ".bin")).string()));
  } else {
    in.heatmaps.assign(in.frames.size(), sim::synth_heatmaps({}, f0.width, f0.height, 1, 4));
  }
  return in;
}

int cmd_bench(const PipelineConfig& cfg, const BenchInput& input, const std::vector<std::string>& modes,
              int timed, int warmup, const std::string& format) {
  if (timed < 500) std::cerr << "actloc: note: fewer than 500 timed frames\n";
  std::vector<TimingReport> reports;
  for (const auto& m : modes) reports.push_back(run_bench(input, cfg, parse_temporal_mode(m), timed, warmup));
  const double empty_link = empty_stream_link_ms(cfg.link, timed);
  if (format == "json") {
    json j = json::array();
    for (const auto& r : reports)
      j.push_back({{"mode", std::string(to_string(r.mode))},
                   {"frames", r.frames},
                   {"temporal", stats_json(r.temporal)},
                   {"decode", stats_json(r.decode)},
                   {"linking", stats_json(r.linking)},
                   {"overall", stats_json(r.overall)},
                   {"fps", r.fps}});
    std::cout << json{{"modes", j}, {"empty_stream_link_ms", empty_link}}.dump(2) << '\n';
    return 0;
  }
  std::cout << "mode\tstage\tmean_ms\tp50_ms\tp95_ms\n";
  for (const auto& r : reports) {
    const std::string mode(to_string(r.mode));
    auto row = [&](const char* stage, const StageStats& s) {
      std::cout << mode << '\t' << stage << '\t' << fixed(s.mean, 3) << '\t' << fixed(s.p50, 3) << '\t'
                << fixed(s.p95, 3) << '\n';
    };
    if (r.mode == TemporalMode::kNone) std::cout << mode << "\ttemporal\t-\t-\t-\n";
    else row("temporal", r.temporal);
    row("decode", r.decode);
    row("linking", r.linking);
    row("overall", r.overall);
    std::cout << mode << "\tfps\t" << fixed(r.fps, 1) << "\t-\t-\n";
  }
  std::cout << "-\tlinking_empty_stream\t" << fixed(empty_link, 4) << "\t-\t-\n";
  return 0;
}

int cmd_sweep(const PipelineConfig& cfg, const std::string& param, const std::string& values,
              const std::string& scenario, const std::string& format) {
  const SweepParam p = parse_sweep_param(param);
  const auto rows = run_sweep(p, parse_sweep_values(values), io::read_scenario(scenario), cfg);
  const bool contrast = p == SweepParam::kFrameGap;
  if (format == "json") {
    json j = json::array();
    for (const auto& r : rows) {
      json row = report_json(r.report);
      row[param] = r.value;
      if (contrast) row["motion_contrast"] = r.motion_contrast;
      j.push_back(row);
    }
    std::cout << j.dump(2) << '\n';
    return 0;
  }
  std::cout << param << "\tv-mAP@0.2\tv-mAP@0.5\tv-mAP@0.75\tv-mAP@0.5:0.95\tf-mAP@0.5"
            << (contrast ? "\tmotion_contrast" : "") << '\n';
  for (const auto& r : rows) {
    std::cout << r.value << '\t' << fixed(r.report.v_map_02) << '\t' << fixed(r.report.v_map_05) << '\t'
              << fixed(r.report.v_map_075) << '\t' << fixed(r.report.v_map_05_095) << '\t'
              << fixed(r.report.f_map_05);
    if (contrast) std::cout << '\t' << fixed(r.motion_contrast, 6);
    std::cout << '\n';
  }
  return 0;
}

int cmd_simulate(const std::string& scenario, const std::string& out_dir, std::optional<std::uint64_t> seed,
                 bool frames, bool heatmaps, int down_ratio) {
  io::ScenarioFile sf = io::read_scenario(scenario);
  if (seed) sf.seed = *seed;
  const sim::Scenario& s = sf.scenario;
  fs::create_directories(out_dir);
  const GroundTruth gt = sim::render_ground_truth(s);
  const FrameDetections dets = sim::synth_detections(s, sf.noise, sf.seed);
  {
    Output out((fs::path(out_dir) / "gt.jsonl").string());
    io::write_ground_truth(out.stream(), gt);
  }
  {
    Output out((fs::path(out_dir) / "detections.jsonl").string());
    io::write_detections(out.stream(), dets, s.video);
  }
  if (frames) {
    const auto dir = fs::path(out_dir) / "frames";
    fs::create_directories(dir);
    for (const Frame& f : sim::render_frames(s, sf.seed))
      io::write_png((dir / io::frame_filename(f.index)).string(), f);
  }
  if (heatmaps) {
    const auto dir = fs::path(out_dir) / "heatmaps";
    fs::create_directories(dir);
    for (std::size_t t = 0; t < dets.size(); ++t)
      io::write_heatmaps((dir / io::frame_filename(static_cast<std::int64_t>(t), "", ".bin")).string(),
                         sim::synth_heatmaps(dets[t], s.width, s.height, s.num_classes, down_ratio));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online spatio-temporal action localization pipeline"};
  app.require_subcommand(1);
  ConfigFlags flags;

  auto* pre = app.add_subcommand("preprocess", "Temporal maps and shift manifest for a frame sequence");
  std::string frames_path, out_dir;
  pre->add_option("--frames", frames_path, "Directory of %06d.png frames or raw planar stream")->required();
  pre->add_option("--out", out_dir, "Output directory")->required();

  auto* dec = app.add_subcommand("decode", "Heatmap files to detections JSONL");
  std::string heatmap_dir, out_path = "-";
  dec->add_option("--heatmaps", heatmap_dir, "Directory of %06d.bin heatmap files")->required();
  dec->add_option("--out", out_path, "Output file, '-' for stdout");

  auto* link = app.add_subcommand("link", "Build action tubes from detections");
  std::string det_path, online_path;
  link->add_option("--detections", det_path, "Detections JSONL")->required();
  link->add_option("--out", out_path, "Tubes JSONL, '-' for stdout");
  link->add_option("--emit-online", online_path, "Write the tube state after every frame to this file");

  auto* eval = app.add_subcommand("eval", "Frame and video mAP report");
  std::string tubes_path, gt_path, format = "tsv";
  eval->add_option("--tubes", tubes_path, "Predicted tubes JSONL")->required();
  eval->add_option("--detections", det_path, "Per-frame detections JSONL");
  eval->add_option("--gt", gt_path, "Ground-truth tubes JSONL")->required();
  eval->add_option("--format", format, "tsv or json")->check(CLI::IsMember({"tsv", "json"}));
  eval->add_option("--out", out_path, "Report file, '-' for stdout");

  auto* bench = app.add_subcommand("bench", "Per-stage latency benchmark");
  std::string modes = "none,ssmap", scenario, bench_frames, bench_heatmaps;
  int timed = 500, warmup = 20, input_frames = 60;
  std::uint64_t bench_seed = 7;
  bench->add_option("--modes", modes, "Comma-separated temporal modes");
  bench->add_option("--timed", timed, "Timed frames per mode")->check(CLI::PositiveNumber);
  bench->add_option("--warmup", warmup, "Warm-up frames per mode")->check(CLI::NonNegativeNumber);
  bench->add_option("--scenario", scenario, "Scenario JSON to render as input");
  bench->add_option("--frames", bench_frames, "Frame directory or raw stream as input");
  bench->add_option("--heatmaps", bench_heatmaps, "Heatmap directory matching --frames");
  bench->add_option("--input-frames", input_frames, "Length of the built-in input sequence")->check(CLI::PositiveNumber);
  bench->add_option("--seed", bench_seed, "Seed of the built-in input");
  bench->add_option("--format", format, "tsv or json")->check(CLI::IsMember({"tsv", "json"}));

  auto* sweep = app.add_subcommand("sweep", "Parameter sweep on a simulated scenario");
  std::string param, values;
  sweep->add_option("--param", param, "lambda, k, frame_gap, explt or boxp")->required();
  sweep->add_option("--values", values, "Comma list or lo:hi:step")->required();
  sweep->add_option("--scenario", scenario, "Scenario JSON")->required();
  sweep->add_option("--format", format, "tsv or json")->check(CLI::IsMember({"tsv", "json"}));

  auto* simulate = app.add_subcommand("simulate", "Render a scenario to ground truth, detections and frames");
  std::optional<std::uint64_t> sim_seed;
  bool sim_frames = false, sim_heatmaps = false;
  int down_ratio = 4;
  simulate->add_option("--scenario", scenario, "Scenario JSON")->required();
  simulate->add_option("--out", out_dir, "Output directory")->required();
  simulate->add_option("--seed", sim_seed, "Override the scenario seed");
  simulate->add_flag("--frames", sim_frames, "Also write rendered PNG frames");
  simulate->add_flag("--heatmaps", sim_heatmaps, "Also write synthetic heatmap files");
  simulate->add_option("--down-ratio", down_ratio, "Heatmap down ratio")->check(CLI::PositiveNumber);

  for (CLI::App* cmd : {pre, dec, link, eval, bench, sweep, simulate}) add_config_flags(cmd, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "actloc: error: " << e.what() << "\nRun with --help for more information.\n";
    return 2;
  }

  try {
    const PipelineConfig cfg = load_config(flags);
    if (*pre) return cmd_preprocess(cfg, frames_path, out_dir);
    if (*dec) return cmd_decode(cfg, heatmap_dir, out_path);
    if (*link) return cmd_link(cfg, det_path, out_path, online_path);
    if (*eval) return cmd_eval(cfg, tubes_path, det_path, gt_path, format, out_path);
    if (*bench) {
      std::vector<std::string> mode_list;
      std::stringstream ss(modes);
      for (std::string m; std::getline(ss, m, ',');)
        if (!m.empty()) mode_list.push_back(m);
      if (mode_list.empty()) throw InputError("--modes is empty");
      return cmd_bench(cfg, bench_input_from(scenario, bench_frames, bench_heatmaps, input_frames, bench_seed),
                       mode_list, timed, warmup, format);
    }
    if (*sweep) return cmd_sweep(cfg, param, values, scenario, format);
    if (*simulate) return cmd_simulate(scenario, out_dir, sim_seed, sim_frames, sim_heatmaps, down_ratio);
  } catch (const std::exception& e) {
    std::cerr << "actloc: error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
