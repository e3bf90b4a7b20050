#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>

#include "actloc/errors.hpp"
#include "actloc/image.hpp"
#include "actloc/random.hpp"
#include "actloc/ssim.hpp"

namespace actloc {

struct CandidateScore {
  ShiftDirection dir;
  double mean_ssim = 0.0;
};

struct CandidateSelection {
  Frame frame;          // the selected shifted current frame
  ShiftDirection dir;
  double mean_ssim = 0.0;
  TemporalMap map;      // SSIM map of `frame` against the past frame
};

namespace detail {

inline void require_compatible(const Image& current, const Image& past) {
  require_same_shape(current, past);
}

// Score all nine candidates. When `best` is given, the winning candidate and
// its map are kept so the map does not have to be recomputed.
inline std::array<CandidateScore, 9> score_candidates(const Frame& current,
                                                      const SsimReference& past,
                                                      CandidateSelection* best) {
  std::array<CandidateScore, 9> scores{};
  TemporalMap scratch;
  for (std::size_t i = 0; i < kShiftCandidates.size(); ++i) {
    const ShiftDirection dir = kShiftCandidates[i];
    const double m = past.compute(current, scratch, dir);
    scores[i] = {dir, m};
    // Strictly greater keeps the earliest candidate on ties.
    if (best && (i == 0 || m > best->mean_ssim)) {
      best->dir = dir;
      best->mean_ssim = m;
      std::swap(best->map, scratch);
    }
  }
  return scores;
}

}  // namespace detail

// Picks, among the identity and the eight one-pixel shifts of `current`, the
// candidate with the highest mean SSIM against `past`. Ties favour the
// identity, then (dy, dx) scan order.
inline CandidateSelection select_candidate(const Frame& current, const Frame& past,
                                           const SsimParams& params = {}) {
  detail::require_compatible(current, past);
  SsimReference ref(past, params);
  CandidateSelection best;
  detail::score_candidates(current, ref, &best);
  best.frame = shift_frame(current, best.dir);
  return best;
}

inline std::array<CandidateScore, 9> rank_candidates(const Frame& current, const Frame& past,
                                                     const SsimParams& params = {}) {
  detail::require_compatible(current, past);
  SsimReference ref(past, params);
  auto scores = detail::score_candidates(current, ref, nullptr);
  std::stable_sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
    return a.mean_ssim > b.mean_ssim;
  });
  return scores;
}

// Uniform draw among the k best candidates. k = 1 is select_candidate.
inline CandidateSelection select_candidate_topk(const Frame& current, const Frame& past,
                                                const SsimParams& params, int k,
                                                std::uint64_t seed) {
  if (k < 1 || k > 9) throw InputError("top-k must lie in [1, 9], got " + std::to_string(k));
  if (k == 1) return select_candidate(current, past, params);
  const auto ranked = rank_candidates(current, past, params);
  Rng rng(seed);
  const ShiftDirection dir = ranked[rng.below(static_cast<std::uint64_t>(k))].dir;
  CandidateSelection sel;
  sel.frame = shift_frame(current, dir);
  sel.dir = dir;
  SsimReference ref(past, params);
  sel.mean_ssim = ref.compute(sel.frame, sel.map);
  return sel;
}

enum class TemporalMode { kSsMap, kDsim, kRawPrev, kNone };

inline std::string_view to_string(TemporalMode m) {
  switch (m) {
    case TemporalMode::kSsMap: return "ssmap";
    case TemporalMode::kDsim: return "dsim";
    case TemporalMode::kRawPrev: return "raw_prev";
    case TemporalMode::kNone: return "none";
  }
  return "?";
}

inline TemporalMode parse_temporal_mode(std::string_view s) {
  if (s == "ssmap") return TemporalMode::kSsMap;
  if (s == "dsim") return TemporalMode::kDsim;
  if (s == "raw_prev") return TemporalMode::kRawPrev;
  if (s == "none") return TemporalMode::kNone;
  throw InputError("unknown temporal mode '" + std::string(s) + "'");
}

// Network input: current frame channels first, temporal channels second.
struct CascadedInput : Image {
  ShiftDirection dir;
  double mean_ssim = 0.0;
};

inline Image concat_channels(const Image& first, const Image& second) {
  if (first.width != second.width || first.height != second.height)
    throw InputError("cannot concatenate images of different size");
  Image out(first.width, first.height, first.channels + second.channels);
  std::copy(first.data.begin(), first.data.end(), out.data.begin());
  std::copy(second.data.begin(), second.data.end(),
            out.data.begin() + static_cast<std::ptrdiff_t>(first.data.size()));
  return out;
}

struct TemporalOptions {
  TemporalMode mode = TemporalMode::kSsMap;
  SsimParams ssim;
  int frame_gap = 1;
  int topk = 1;
  std::uint64_t seed = 0;
};

// Builds the cascaded input for `current` given the already-chosen past frame.
inline CascadedInput build_cascaded_input(const Frame& current, const Frame& past,
                                          const TemporalOptions& opt = {}) {
  detail::require_compatible(current, past);
  CascadedInput out;
  switch (opt.mode) {
    case TemporalMode::kNone:
      static_cast<Image&>(out) = current;
      break;
    case TemporalMode::kRawPrev:
      static_cast<Image&>(out) = concat_channels(current, past);
      break;
    case TemporalMode::kSsMap:
    case TemporalMode::kDsim: {
      // Seed varies with the frame index so top-k draws differ across frames.
      CandidateSelection sel =
          opt.topk == 1 ? select_candidate(current, past, opt.ssim)
                        : select_candidate_topk(current, past, opt.ssim, opt.topk,
                                                opt.seed + static_cast<std::uint64_t>(current.index));
      const TemporalMap map = opt.mode == TemporalMode::kDsim ? to_dsim(std::move(sel.map))
                                                              : std::move(sel.map);
      static_cast<Image&>(out) = concat_channels(current, map);
      out.dir = sel.dir;
      out.mean_ssim = sel.mean_ssim;
      break;
    }
  }
  return out;
}

// Streaming front end: keeps the last max(gap, 2) frames and pairs each new
// frame with the one `gap` steps back. Until that many frames have been
// seen, the oldest buffered frame stands in (the first frame pairs with itself).
class TemporalExtractor {
 public:
  explicit TemporalExtractor(TemporalOptions opt) : opt_(std::move(opt)) {
    if (opt_.frame_gap < 1) throw InputError("frame gap must be >= 1");
    if (opt_.topk < 1 || opt_.topk > 9) throw InputError("top-k must lie in [1, 9]");
    opt_.ssim.validate();
  }

  const TemporalOptions& options() const noexcept { return opt_; }

  // Past frame that the next push(current) will be compared against.
  const Frame& past_for_next() const { return history_.size() >= static_cast<std::size_t>(opt_.frame_gap)
                                                  ? history_[history_.size() - opt_.frame_gap]
                                                  : history_.front(); }

  CascadedInput push(const Frame& current) {
    if (!history_.empty() && !history_.front().same_shape(current))
      throw InputError("frame shape changed mid-stream");
    const Frame& past = history_.empty() ? current : past_for_next();
    CascadedInput out = build_cascaded_input(current, past, opt_);
    history_.push_back(current);
    const std::size_t keep = static_cast<std::size_t>(std::max(opt_.frame_gap, 2));
    while (history_.size() > keep) history_.pop_front();
    return out;
  }

  std::size_t buffered() const noexcept { return history_.size(); }

 private:
  TemporalOptions opt_;
  std::deque<Frame> history_;
};

}  // namespace actloc
