#include "actlumos/enhance/enhance.hpp"

#include <atomic>
#include <cmath>

namespace actlumos::enhance {

namespace {

std::atomic<uint64_t> g_retinex_calls{0};

/// Separable box filter with border renormalization: each output is the mean
/// of the in-bounds window, so constant inputs are preserved exactly.
Mat<float> box_filter(const Mat<float>& in, int radius) {
  const int H = static_cast<int>(in.rows());
  const int W = static_cast<int>(in.cols());
  Mat<float> tmp(H, W), out(H, W);
  for (int h = 0; h < H; ++h) {
    for (int w = 0; w < W; ++w) {
      const int lo = std::max(0, w - radius), hi = std::min(W - 1, w + radius);
      float sum = 0.0f;
      for (int x = lo; x <= hi; ++x) sum += in(h, x);
      tmp(h, w) = sum / static_cast<float>(hi - lo + 1);
    }
  }
  for (int w = 0; w < W; ++w) {
    for (int h = 0; h < H; ++h) {
      const int lo = std::max(0, h - radius), hi = std::min(H - 1, h + radius);
      float sum = 0.0f;
      for (int y = lo; y <= hi; ++y) sum += tmp(y, w);
      out(h, w) = sum / static_cast<float>(hi - lo + 1);
    }
  }
  return out;
}

}  // namespace

void validate_params(const RetinexParams& p) {
  if (p.smoothing_radius < 1) throw Error("smoothing_radius must be >= 1");
  if (!(p.illum_gamma > 0.0 && p.illum_gamma <= 1.0)) throw Error("illum_gamma must be in (0,1]");
  if (!(p.epsilon > 0.0)) throw Error("epsilon must be positive");
}

Mat<float> estimate_illumination(const Volume<float>& clip, int t, int smoothing_radius) {
  if (clip.C != 3) throw Error("illumination estimation expects a 3-channel frame");
  if (t < 0 || t >= clip.T) throw Error("frame index out of range");
  if (smoothing_radius < 1) throw Error("smoothing_radius must be >= 1");
  Mat<float> init(clip.H, clip.W);
  for (int h = 0; h < clip.H; ++h)
    for (int w = 0; w < clip.W; ++w) {
      const Eigen::Index j = clip.col(t, h, w);
      init(h, w) = std::max(clip.m(0, j), std::max(clip.m(1, j), clip.m(2, j)));
    }
  return box_filter(init, smoothing_radius);
}

VideoClip retinex_enhance(const VideoClip& clip, const RetinexParams& params) {
  validate_params(params);
  g_retinex_calls.fetch_add(1, std::memory_order_relaxed);
  VideoClip out;
  out.fps_tag = clip.fps_tag;
  out.v = Volume<float>(clip.v.C, clip.v.T, clip.v.H, clip.v.W);
  for (int t = 0; t < clip.v.T; ++t) {
    const Mat<float> illum = estimate_illumination(clip.v, t, params.smoothing_radius);
    for (int h = 0; h < clip.v.H; ++h)
      for (int w = 0; w < clip.v.W; ++w) {
        const float divisor = std::max(static_cast<float>(std::pow(illum(h, w), params.illum_gamma)),
                                       static_cast<float>(params.epsilon));
        const Eigen::Index j = clip.v.col(t, h, w);
        for (int c = 0; c < clip.v.C; ++c)
          out.v.m(c, j) = std::clamp(clip.v.m(c, j) / divisor, 0.0f, 1.0f);
      }
  }
  return out;
}

VideoClip gamma_correct(const VideoClip& clip, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw Error("gamma must be in (0,1], got " + std::to_string(gamma));
  VideoClip out;
  out.fps_tag = clip.fps_tag;
  out.v = clip.v;
  out.v.m = clip.v.m.array().pow(static_cast<float>(gamma)).matrix();
  return out;
}

uint64_t retinex_call_count() { return g_retinex_calls.load(std::memory_order_relaxed); }

void reset_retinex_call_count() { g_retinex_calls.store(0, std::memory_order_relaxed); }

}  // namespace actlumos::enhance
