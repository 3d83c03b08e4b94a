#pragma once

#include <utility>
#include <vector>

#include "actlumos/clipgen/clipgen.hpp"
#include "actlumos/core/rng.hpp"
#include "actlumos/core/types.hpp"

namespace actlumos::sampler {

struct AugmentParams {
  double crop_scale_lo = 0.7;
  double crop_scale_hi = 1.0;
  double flip_prob = 0.5;
  int fast_stride = 1;
  int slow_stride = 2;
  int out_frames = 8;
};

void validate_augment_params(const AugmentParams& p, int clip_frames);

/// One concrete spatial augmentation: a flip decision plus a crop rectangle,
/// applied identically to every frame of a view.
struct DrawnAugment {
  bool flip = false;
  int crop_y = 0, crop_x = 0;
  int crop_h = 0, crop_w = 0;
};

DrawnAugment identity_augment(int height, int width);
DrawnAugment draw_augment(const AugmentParams& p, int height, int width, Rng& rng);

/// Flip + crop + bilinear resize back to the clip's own HxW; the same
/// transform is applied to all frames.
VideoClip spatial_augment(const VideoClip& clip, const DrawnAugment& drawn);

/// Frames start, start+stride, ..., start+(out_frames-1)*stride.
VideoClip temporal_sample(const VideoClip& clip, int stride, int start, int out_frames);

enum class SslVariant { none, spatial_only, temporal_only, both };

const char* ssl_variant_name(SslVariant v);
SslVariant ssl_variant_from_name(const std::string& name);

/// Fast/slow two-view construction: view 1 subsamples at fast_stride, view 2
/// at slow_stride, each with an independently drawn spatial augmentation.
std::pair<VideoClip, VideoClip> two_view(const VideoClip& clip, const AugmentParams& p, Rng& rng);

/// Ablation variants: spatial_only shares one temporal sampling between the
/// views; temporal_only disables the spatial augmentation.
std::pair<VideoClip, VideoClip> two_view_variant(const VideoClip& clip, const AugmentParams& p, SslVariant variant,
                                                 Rng& rng);

/// Class-balanced batch: n_c distinct classes, n_v distinct train clips each.
std::vector<std::pair<uint32_t, int>> balanced_batch(const clipgen::SyntheticDataset& ds, int n_c, int n_v,
                                                     Rng& rng);

}  // namespace actlumos::sampler
