#include "actlumos/sampler/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace actlumos::sampler {

void validate_augment_params(const AugmentParams& p, int clip_frames) {
  if (!(p.crop_scale_lo > 0.0 && p.crop_scale_lo <= p.crop_scale_hi && p.crop_scale_hi <= 1.0))
    throw Error("crop_scale range must satisfy 0 < lo <= hi <= 1");
  if (p.flip_prob < 0.0 || p.flip_prob > 1.0) throw Error("flip_prob must be in [0,1]");
  if (p.fast_stride < 1 || p.slow_stride < 1) throw Error("strides must be >= 1");
  if (p.out_frames < 1) throw Error("out_frames must be >= 1");
  if ((p.out_frames - 1) * p.slow_stride + 1 > clip_frames)
    throw Error("clip too short: " + std::to_string(clip_frames) + " frames cannot cover out_frames=" +
                std::to_string(p.out_frames) + " at stride " + std::to_string(p.slow_stride));
}

DrawnAugment identity_augment(int height, int width) { return {false, 0, 0, height, width}; }

DrawnAugment draw_augment(const AugmentParams& p, int height, int width, Rng& rng) {
  DrawnAugment d;
  d.flip = rng.bernoulli(p.flip_prob);
  const double scale = rng.uniform(p.crop_scale_lo, p.crop_scale_hi);
  d.crop_h = std::max(2, static_cast<int>(std::lround(height * scale)));
  d.crop_w = std::max(2, static_cast<int>(std::lround(width * scale)));
  d.crop_y = static_cast<int>(rng.uniform_int(0, height - d.crop_h));
  d.crop_x = static_cast<int>(rng.uniform_int(0, width - d.crop_w));
  return d;
}

VideoClip spatial_augment(const VideoClip& clip, const DrawnAugment& d) {
  const int H = clip.v.H, W = clip.v.W;
  if (d.crop_h < 2 || d.crop_w < 2 || d.crop_y < 0 || d.crop_x < 0 || d.crop_y + d.crop_h > H ||
      d.crop_x + d.crop_w > W)
    throw Error("degenerate crop rectangle");

  // identity transform returns the input exactly (no resampling error)
  if (!d.flip && d.crop_h == H && d.crop_w == W && d.crop_y == 0 && d.crop_x == 0) return clip;

  VideoClip out;
  out.fps_tag = clip.fps_tag;
  out.v = Volume<float>(clip.v.C, clip.v.T, H, W);
  // align-corners bilinear sampling of the (possibly flipped) crop window
  const double sy = H > 1 ? static_cast<double>(d.crop_h - 1) / (H - 1) : 0.0;
  const double sx = W > 1 ? static_cast<double>(d.crop_w - 1) / (W - 1) : 0.0;
  for (int t = 0; t < clip.v.T; ++t) {
    for (int h = 0; h < H; ++h) {
      const double fy = d.crop_y + h * sy;
      const int y0 = std::min(static_cast<int>(fy), d.crop_y + d.crop_h - 1);
      const int y1 = std::min(y0 + 1, d.crop_y + d.crop_h - 1);
      const double wy = fy - y0;
      for (int w = 0; w < W; ++w) {
        const int wsrc = d.flip ? (W - 1 - w) : w;
        const double fx = d.crop_x + wsrc * sx;
        const int x0 = std::min(static_cast<int>(fx), d.crop_x + d.crop_w - 1);
        const int x1 = std::min(x0 + 1, d.crop_x + d.crop_w - 1);
        const double wx = fx - x0;
        for (int c = 0; c < clip.v.C; ++c) {
          const double v00 = clip.v.at(c, t, y0, x0), v01 = clip.v.at(c, t, y0, x1);
          const double v10 = clip.v.at(c, t, y1, x0), v11 = clip.v.at(c, t, y1, x1);
          const double val = (1 - wy) * ((1 - wx) * v00 + wx * v01) + wy * ((1 - wx) * v10 + wx * v11);
          out.v.at(c, t, h, w) = static_cast<float>(val);
        }
      }
    }
  }
  return out;
}

VideoClip temporal_sample(const VideoClip& clip, int stride, int start, int out_frames) {
  if (stride < 1 || out_frames < 1 || start < 0) throw Error("bad temporal sampling arguments");
  const int last = start + (out_frames - 1) * stride;
  if (last >= clip.v.T)
    throw Error("clip too short: temporal sample needs frame " + std::to_string(last) + " but clip has " +
                std::to_string(clip.v.T));
  VideoClip out;
  out.fps_tag = clip.fps_tag;
  out.v = Volume<float>(clip.v.C, out_frames, clip.v.H, clip.v.W);
  const Eigen::Index hw = static_cast<Eigen::Index>(clip.v.H) * clip.v.W;
  for (int j = 0; j < out_frames; ++j)
    out.v.m.middleCols(j * hw, hw) = clip.v.m.middleCols((start + j * stride) * hw, hw);
  return out;
}

const char* ssl_variant_name(SslVariant v) {
  switch (v) {
    case SslVariant::none: return "none";
    case SslVariant::spatial_only: return "spatial_only";
    case SslVariant::temporal_only: return "temporal_only";
    case SslVariant::both: return "both";
  }
  throw Error("bad ssl variant");
}

SslVariant ssl_variant_from_name(const std::string& name) {
  if (name == "none") return SslVariant::none;
  if (name == "spatial_only") return SslVariant::spatial_only;
  if (name == "temporal_only") return SslVariant::temporal_only;
  if (name == "both") return SslVariant::both;
  throw Error("unknown ssl variant '" + name + "'");
}

std::pair<VideoClip, VideoClip> two_view(const VideoClip& clip, const AugmentParams& p, Rng& rng) {
  return two_view_variant(clip, p, SslVariant::both, rng);
}

std::pair<VideoClip, VideoClip> two_view_variant(const VideoClip& clip, const AugmentParams& p,
                                                 SslVariant variant, Rng& rng) {
  validate_augment_params(p, clip.v.T);
  if (variant == SslVariant::none) throw Error("two_view called with ssl variant 'none'");
  const bool spatial = variant != SslVariant::temporal_only;
  const bool temporal = variant != SslVariant::spatial_only;

  const int fast_stride = p.fast_stride;
  const int slow_stride = temporal ? p.slow_stride : p.fast_stride;
  const int span_fast = (p.out_frames - 1) * fast_stride + 1;
  const int span_slow = (p.out_frames - 1) * slow_stride + 1;
  const int start_fast = static_cast<int>(rng.uniform_int(0, clip.v.T - span_fast));
  const int start_slow =
      temporal ? static_cast<int>(rng.uniform_int(0, clip.v.T - span_slow)) : start_fast;

  // draws happen in a fixed order so the stream position is deterministic
  const DrawnAugment a1 = spatial ? draw_augment(p, clip.v.H, clip.v.W, rng)
                                  : identity_augment(clip.v.H, clip.v.W);
  const DrawnAugment a2 = spatial ? draw_augment(p, clip.v.H, clip.v.W, rng)
                                  : identity_augment(clip.v.H, clip.v.W);

  VideoClip fast = spatial_augment(temporal_sample(clip, fast_stride, start_fast, p.out_frames), a1);
  VideoClip slow = spatial_augment(temporal_sample(clip, slow_stride, start_slow, p.out_frames), a2);
  return {std::move(fast), std::move(slow)};
}

std::vector<std::pair<uint32_t, int>> balanced_batch(const clipgen::SyntheticDataset& ds, int n_c, int n_v,
                                                     Rng& rng) {
  if (n_c < 1 || n_v < 1) throw Error("n_c and n_v must be positive");
  std::map<int, std::vector<uint32_t>> by_class;
  for (const clipgen::ClipRecord& r : ds.clips)
    if (r.split == clipgen::Split::train) by_class[r.class_id].push_back(r.id);

  std::vector<int> eligible;
  for (const auto& [cls, ids] : by_class)
    if (static_cast<int>(ids.size()) >= n_v) eligible.push_back(cls);
  if (static_cast<int>(eligible.size()) < n_c) {
    for (const auto& [cls, ids] : by_class)
      if (static_cast<int>(ids.size()) < n_v)
        throw Error("cannot build balanced batch: class " + std::to_string(cls) + " has only " +
                    std::to_string(ids.size()) + " train clips, need n_v=" + std::to_string(n_v));
    throw Error("cannot build balanced batch: only " + std::to_string(eligible.size()) +
                " classes available, need n_c=" + std::to_string(n_c));
  }

  rng.shuffle(eligible);
  eligible.resize(static_cast<size_t>(n_c));
  std::vector<std::pair<uint32_t, int>> out;
  for (int cls : eligible) {
    std::vector<uint32_t> ids = by_class[cls];
    rng.shuffle(ids);
    for (int v = 0; v < n_v; ++v) out.emplace_back(ids[static_cast<size_t>(v)], cls);
  }
  return out;
}

}  // namespace actlumos::sampler
