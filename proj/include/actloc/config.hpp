#pragma once

// Pipeline configuration.
//
// Config files are plain `key = value` lines; `#` starts a comment and blank
// lines are ignored. Keys are the dotted names listed in PipelineConfig::keys().
// Precedence: command-line flags, then the config file, then defaults.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "actloc/detect.hpp"
#include "actloc/errors.hpp"
#include "actloc/ssim.hpp"
#include "actloc/temporal.hpp"
#include "actloc/tubes.hpp"

namespace actloc {

// Environment variable naming the default config file.
inline constexpr const char* kConfigEnvVar = "ACTLOC_CONFIG";

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw InputError("config key '" + key + "' expects a number, got '" + v + "'");
  }
}

inline long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw InputError("config key '" + key + "' expects an integer, got '" + v + "'");
  return out;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw InputError("config key '" + key + "' expects a boolean, got '" + v + "'");
}

}  // namespace detail

struct EvalConfig {
  bool include_extrapolated = true;  // extrapolated frames count in tube geometry
  bool fmap_from_tubes = false;      // score f-mAP on tube boxes instead of raw detections
};

struct PipelineConfig {
  TemporalOptions temporal;
  DecodeOptions decode;
  double nms_iou = 0.45;
  int top_n = 10;
  LinkerConfig link;
  EvalConfig eval;
  int num_classes = 0;  // 0: inferred from inputs

  static const std::vector<std::string>& keys() {
    static const std::vector<std::string> k = {
        "ssim.window",         "ssim.c1",           "ssim.c2",
        "ssim.L",              "temporal.mode",     "temporal.frame_gap",
        "temporal.topk",       "temporal.seed",     "detect.score_floor",
        "detect.max_per_class", "detect.nms_iou",   "detect.top_n",
        "detect.dense_scores", "link.lambda",       "link.k",
        "link.n",              "link.explt",        "link.boxp",
        "link.spawn_floor",    "link.frame_width",  "link.frame_height",
        "eval.include_extrapolated", "eval.fmap_source", "classes"};
    return k;
  }

  // Applies settings in a fixed key order so that ssim.L recomputes the
  // stabilizers before explicit ssim.c1 / ssim.c2 override them.
  void apply(const std::map<std::string, std::string>& kv) {
    for (const auto& [key, _] : kv)
      if (std::find(keys().begin(), keys().end(), key) == keys().end())
        throw InputError("unknown config key '" + key + "'");
    auto get = [&](const char* key) -> const std::string* {
      auto it = kv.find(key);
      return it == kv.end() ? nullptr : &it->second;
    };
    using detail::to_bool;
    using detail::to_double;
    using detail::to_int;
    if (auto v = get("ssim.L")) {
      const double L = to_double("ssim.L", *v);
      temporal.ssim = SsimParams::for_range(L, temporal.ssim.window);
    }
    if (auto v = get("ssim.window")) temporal.ssim.window = static_cast<int>(to_int("ssim.window", *v));
    if (auto v = get("ssim.c1")) temporal.ssim.c1 = to_double("ssim.c1", *v);
    if (auto v = get("ssim.c2")) temporal.ssim.c2 = to_double("ssim.c2", *v);
    if (auto v = get("temporal.mode")) temporal.mode = parse_temporal_mode(*v);
    if (auto v = get("temporal.frame_gap")) temporal.frame_gap = static_cast<int>(to_int("temporal.frame_gap", *v));
    if (auto v = get("temporal.topk")) temporal.topk = static_cast<int>(to_int("temporal.topk", *v));
    if (auto v = get("temporal.seed")) temporal.seed = static_cast<std::uint64_t>(to_int("temporal.seed", *v));
    if (auto v = get("detect.score_floor")) decode.score_floor = to_double("detect.score_floor", *v);
    if (auto v = get("detect.max_per_class")) decode.max_per_class = static_cast<int>(to_int("detect.max_per_class", *v));
    if (auto v = get("detect.dense_scores")) decode.dense_scores = to_bool("detect.dense_scores", *v);
    if (auto v = get("detect.nms_iou")) nms_iou = to_double("detect.nms_iou", *v);
    if (auto v = get("detect.top_n")) top_n = static_cast<int>(to_int("detect.top_n", *v));
    if (auto v = get("link.lambda")) link.lambda = to_double("link.lambda", *v);
    if (auto v = get("link.k")) link.k = static_cast<int>(to_int("link.k", *v));
    if (auto v = get("link.n")) link.n = static_cast<int>(to_int("link.n", *v));
    if (auto v = get("link.explt")) link.extrapolate = to_bool("link.explt", *v);
    if (auto v = get("link.boxp")) link.box_pred = to_bool("link.boxp", *v);
    if (auto v = get("link.spawn_floor")) link.spawn_floor = to_double("link.spawn_floor", *v);
    if (auto v = get("link.frame_width")) link.frame_w = to_double("link.frame_width", *v);
    if (auto v = get("link.frame_height")) link.frame_h = to_double("link.frame_height", *v);
    if (auto v = get("eval.include_extrapolated")) eval.include_extrapolated = to_bool("eval.include_extrapolated", *v);
    if (auto v = get("eval.fmap_source")) {
      if (*v == "detections") eval.fmap_from_tubes = false;
      else if (*v == "tubes") eval.fmap_from_tubes = true;
      else throw InputError("eval.fmap_source must be 'detections' or 'tubes'");
    }
    if (auto v = get("classes")) num_classes = static_cast<int>(to_int("classes", *v));
    link.nms_iou = nms_iou;
  }

  void validate() const {
    temporal.ssim.validate();
    if (temporal.frame_gap < 1) throw InputError("temporal.frame_gap must be >= 1");
    if (temporal.topk < 1 || temporal.topk > 9) throw InputError("temporal.topk must lie in [1, 9]");
    if (decode.max_per_class < 0) throw InputError("detect.max_per_class must be >= 0");
    if (!(nms_iou >= 0.0 && nms_iou <= 1.0)) throw InputError("detect.nms_iou must lie in [0, 1]");
    if (top_n < 1) throw InputError("detect.top_n must be >= 1");
    if (num_classes < 0) throw InputError("classes must be >= 0");
    link.validate();
  }
};

inline std::map<std::string, std::string> parse_config_text(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string value(detail::trim(line.substr(eq + 1)));
    if (key.empty()) throw ParseError("empty key", line_no);
    kv[key] = value;
  }
  return kv;
}

inline std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config '" + path + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

// Defaults, overridden by the file's entries, overridden by `flags`.
inline PipelineConfig resolve_config(const std::map<std::string, std::string>& file_kv,
                                     const std::map<std::string, std::string>& flags) {
  std::map<std::string, std::string> merged = file_kv;
  for (const auto& [k, v] : flags) merged[k] = v;
  PipelineConfig cfg;
  cfg.apply(merged);
  cfg.validate();
  return cfg;
}

}  // namespace actloc
