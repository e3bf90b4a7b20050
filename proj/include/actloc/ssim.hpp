#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "actloc/errors.hpp"
#include "actloc/image.hpp"

namespace actloc {

struct SsimParams {
  int window = 7;
  double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  double c2 = (0.03 * 255.0) * (0.03 * 255.0);
  double range = 255.0;

  // Stabilizers follow the usual K1 = 0.01, K2 = 0.03 convention.
  static SsimParams for_range(double L, int window = 7) {
    return {window, (0.01 * L) * (0.01 * L), (0.03 * L) * (0.03 * L), L};
  }

  void validate() const {
    if (window < 3 || window % 2 == 0)
      throw InputError("ssim window must be odd and >= 3, got " + std::to_string(window));
    if (!(c1 > 0.0) || !(c2 > 0.0)) throw InputError("ssim stabilizers must be positive");
    if (!(range > 0.0)) throw InputError("dynamic range must be positive");
  }
};

// Per-pixel, per-channel similarity values with the source frame geometry.
struct TemporalMap : Image {
  using Image::Image;
  TemporalMap() = default;
  explicit TemporalMap(Image img) : Image(std::move(img)) {}
};

namespace detail {

inline void require_same_shape(const Image& a, const Image& b) {
  if (!a.same_shape(b))
    throw InputError("frame dimension mismatch: " + std::to_string(a.width) + "x" +
                     std::to_string(a.height) + "x" + std::to_string(a.channels) + " vs " +
                     std::to_string(b.width) + "x" + std::to_string(b.height) + "x" +
                     std::to_string(b.channels));
}

// Horizontal running window sums of a, a*a and a*b for one row. `pa` and
// `pb` are the rows padded by r on both sides (edge replicated).
inline void row_sums(const double* pa, const double* pb, int w, int r, double* sa, double* saa,
                     double* sab) {
  const int win = 2 * r + 1;
  double acc_a = 0.0, acc_aa = 0.0, acc_ab = 0.0;
  for (int i = 0; i < win; ++i) {
    acc_a += pa[i];
    acc_aa += pa[i] * pa[i];
    acc_ab += pa[i] * pb[i];
  }
  sa[0] = acc_a;
  saa[0] = acc_aa;
  sab[0] = acc_ab;
  for (int x = 1; x < w; ++x) {
    const int in = x + 2 * r, out = x - 1;
    acc_a += pa[in] - pa[out];
    acc_aa += pa[in] * pa[in] - pa[out] * pa[out];
    acc_ab += pa[in] * pb[in] - pa[out] * pb[out];
    sa[x] = acc_a;
    saa[x] = acc_aa;
    sab[x] = acc_ab;
  }
}

// Source column for each padded position of a row shifted by dx.
inline std::vector<int> padded_index(int w, int r, int dx) {
  std::vector<int> idx(static_cast<std::size_t>(w + 2 * r));
  for (int i = 0; i < w + 2 * r; ++i) idx[i] = std::clamp(std::clamp(i - r, 0, w - 1) - dx, 0, w - 1);
  return idx;
}

}  // namespace detail

// Window statistics of a fixed reference image, reused across every probe
// compared against it (the nine shift candidates share one past frame).
//
// Patch statistics are uniform-window sample estimates: mean over n = w^2
// samples, variance and covariance normalised by n - 1. Window sums use
// running sums over edge-replicated rows and columns, so the map has the
// frame's dimensions.
class SsimReference {
 public:
  SsimReference(const Image& ref, const SsimParams& params) : ref_(ref), params_(params) {
    params_.validate();
    if (ref.width <= 0 || ref.height <= 0 || ref.channels <= 0)
      throw InputError("empty reference image");
    const int w = ref.width, h = ref.height, r = params_.window / 2;
    const double n = static_cast<double>(params_.window) * params_.window;
    const double inv_n = 1.0 / n, inv_n1 = 1.0 / (n - 1.0);
    const std::size_t plane = ref.plane_size();
    sum_.resize(ref.data.size());
    mean_.resize(ref.data.size());
    mean_sq_.resize(ref.data.size());
    var_.resize(ref.data.size());
    const std::vector<int> idx = detail::padded_index(w, r, 0);
    std::vector<double> pad(idx.size());
    std::vector<double> hs(plane), hss(plane), hdummy(plane);
    std::vector<double> col(static_cast<std::size_t>(w)), col_sq(static_cast<std::size_t>(w));
    for (int c = 0; c < ref.channels; ++c) {
      const double* p = ref.data.data() + c * plane;
      for (int y = 0; y < h; ++y) {
        const double* row = p + static_cast<std::size_t>(y) * w;
        for (std::size_t i = 0; i < idx.size(); ++i) pad[i] = row[idx[i]];
        const std::size_t o = static_cast<std::size_t>(y) * w;
        detail::row_sums(pad.data(), pad.data(), w, r, hs.data() + o, hdummy.data() + o, hss.data() + o);
      }
      vertical(hs.data(), hss.data(), hss.data(), w, h, r, col, col_sq, col_sq,
               [&](int y, const double* ca, const double* caa, const double*) {
                 const std::size_t o = c * plane + static_cast<std::size_t>(y) * w;
                 for (int x = 0; x < w; ++x) {
                   const double s = ca[x];
                   const double mu = s * inv_n;
                   sum_[o + x] = s;
                   mean_[o + x] = mu;
                   mean_sq_[o + x] = mu * mu;
                   var_[o + x] = (caa[x] - (s * s) * inv_n) * inv_n1;
                 }
               });
    }
  }

  const Image& image() const noexcept { return ref_; }
  const SsimParams& params() const noexcept { return params_; }

  // SSIM of `probe` shifted by `dir` (see shift_frame) against the
  // reference, written into `out`. Returns the mean over all pixels and
  // channels.
  double compute(const Image& probe, TemporalMap& out, ShiftDirection dir = {}) const {
    detail::require_same_shape(probe, ref_);
    if (!out.same_shape(probe)) out = TemporalMap(Image(probe.width, probe.height, probe.channels));

    const int w = probe.width, h = probe.height, r = params_.window / 2;
    const double n = static_cast<double>(params_.window) * params_.window;
    const double inv_n = 1.0 / n;
    const double inv_n1 = 1.0 / (n - 1.0);
    const double c1 = params_.c1, c2 = params_.c2;
    const std::size_t plane = probe.plane_size();
    const std::vector<int> idx_a = detail::padded_index(w, r, dir.dx);
    const std::vector<int> idx_b = detail::padded_index(w, r, 0);

    pa_.resize(idx_a.size());
    pb_.resize(idx_b.size());
    ha_.resize(plane);
    haa_.resize(plane);
    hab_.resize(plane);
    col_a_.resize(static_cast<std::size_t>(w));
    col_aa_.resize(static_cast<std::size_t>(w));
    col_ab_.resize(static_cast<std::size_t>(w));

    double total = 0.0;
    for (int c = 0; c < probe.channels; ++c) {
      const double* a = probe.data.data() + c * plane;
      const double* b = ref_.data.data() + c * plane;
      for (int y = 0; y < h; ++y) {
        const double* arow = a + static_cast<std::size_t>(std::clamp(y - dir.dy, 0, h - 1)) * w;
        const double* brow = b + static_cast<std::size_t>(y) * w;
        for (std::size_t i = 0; i < idx_a.size(); ++i) {
          pa_[i] = arow[idx_a[i]];
          pb_[i] = brow[idx_b[i]];
        }
        const std::size_t o = static_cast<std::size_t>(y) * w;
        detail::row_sums(pa_.data(), pb_.data(), w, r, ha_.data() + o, haa_.data() + o, hab_.data() + o);
      }
      // Rows of the shifted probe repeat at the top/bottom edge; the
      // vertical window therefore indexes horizontal sums of shifted rows.
      const double* sb = sum_.data() + c * plane;
      const double* mb = mean_.data() + c * plane;
      const double* mb2 = mean_sq_.data() + c * plane;
      const double* vb = var_.data() + c * plane;
      double* o = out.data.data() + c * plane;
      double plane_total = 0.0;
      vertical(ha_.data(), haa_.data(), hab_.data(), w, h, r, col_a_, col_aa_, col_ab_,
               [&](int y, const double* ca, const double* caa, const double* cab) {
                 const std::size_t base = static_cast<std::size_t>(y) * w;
                 double row_total = 0.0;
                 for (int x = 0; x < w; ++x) {
                   const std::size_t i = base + x;
                   const double sa = ca[x];
                   const double mu_a = sa * inv_n;
                   const double var_a = (caa[x] - (sa * sa) * inv_n) * inv_n1;
                   const double cov = (cab[x] - (sa * sb[i]) * inv_n) * inv_n1;
                   const double num = (2.0 * (mu_a * mb[i]) + c1) * (2.0 * cov + c2);
                   const double den = (mu_a * mu_a + mb2[i] + c1) * (var_a + vb[i] + c2);
                   const double v = num / den;
                   o[i] = v;
                   row_total += v;
                 }
                 plane_total += row_total;
               });
      total += plane_total;
    }
    return total / static_cast<double>(probe.data.size());
  }

  TemporalMap map(const Image& probe, ShiftDirection dir = {}) const {
    TemporalMap out;
    compute(probe, out, dir);
    return out;
  }

 private:
  // Vertical running sums over edge-replicated rows of three horizontal-sum
  // planes; `emit(y, col_a, col_aa, col_ab)` sees the full window sums of row y.
  template <typename Emit>
  static void vertical(const double* ha, const double* haa, const double* hab, int w, int h, int r,
                       std::vector<double>& ca, std::vector<double>& caa, std::vector<double>& cab,
                       Emit&& emit) {
    std::fill(ca.begin(), ca.end(), 0.0);
    std::fill(caa.begin(), caa.end(), 0.0);
    if (&cab != &caa) std::fill(cab.begin(), cab.end(), 0.0);
    const bool distinct = &cab != &caa;
    for (int j = -r; j <= r; ++j) {
      const std::size_t o = static_cast<std::size_t>(std::clamp(j, 0, h - 1)) * w;
      for (int x = 0; x < w; ++x) {
        ca[x] += ha[o + x];
        caa[x] += haa[o + x];
        if (distinct) cab[x] += hab[o + x];
      }
    }
    emit(0, ca.data(), caa.data(), cab.data());
    for (int y = 1; y < h; ++y) {
      const std::size_t add = static_cast<std::size_t>(std::min(y + r, h - 1)) * w;
      const std::size_t sub = static_cast<std::size_t>(std::max(y - r - 1, 0)) * w;
      for (int x = 0; x < w; ++x) {
        ca[x] += ha[add + x] - ha[sub + x];
        caa[x] += haa[add + x] - haa[sub + x];
        if (distinct) cab[x] += hab[add + x] - hab[sub + x];
      }
      emit(y, ca.data(), caa.data(), cab.data());
    }
  }

  Image ref_;
  SsimParams params_;
  std::vector<double> sum_, mean_, mean_sq_, var_;
  mutable std::vector<double> pa_, pb_, ha_, haa_, hab_, col_a_, col_aa_, col_ab_;
};

// Windowed SSIM between two same-shaped images, one value per pixel and channel.
inline TemporalMap ssim_map(const Image& a, const Image& b, const SsimParams& params = {}) {
  detail::require_same_shape(a, b);
  return SsimReference(b, params).map(a);
}

// Structural dissimilarity, (1 - SSIM) / 2, in [0, 1].
inline TemporalMap to_dsim(TemporalMap m) {
  for (double& v : m.data) v = (1.0 - v) / 2.0;
  return m;
}

inline TemporalMap dsim_map(const Image& a, const Image& b, const SsimParams& params = {}) {
  return to_dsim(ssim_map(a, b, params));
}

inline double mean_value(const Image& m) {
  double total = 0.0;
  for (int c = 0; c < m.channels; ++c) {
    double plane_total = 0.0;
    for (double v : m.plane(c)) plane_total += v;
    total += plane_total;
  }
  return m.data.empty() ? 0.0 : total / static_cast<double>(m.data.size());
}

}  // namespace actloc
