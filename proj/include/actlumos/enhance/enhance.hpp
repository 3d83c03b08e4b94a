#pragma once

#include <cstdint>

#include "actlumos/core/types.hpp"

namespace actlumos::enhance {

struct RetinexParams {
  int smoothing_radius = 3;   // box-filter radius in pixels
  double illum_gamma = 0.8;   // exponent applied to the illumination map
  double epsilon = 1e-3;      // division guard
};

void validate_params(const RetinexParams& p);

/// Spatially varying illumination map of frame t: per-pixel max over the RGB
/// channels, then a border-renormalized box filter of the given radius.
/// Output values stay in [0,1].
Mat<float> estimate_illumination(const Volume<float>& clip, int t, int smoothing_radius);

/// x_out = clamp(x / max(T^illum_gamma, epsilon), 0, 1), with T the
/// illumination map of the same frame. Each frame is enhanced independently.
VideoClip retinex_enhance(const VideoClip& clip, const RetinexParams& params = {});

/// Pointwise x^gamma baseline; gamma must be in (0,1].
VideoClip gamma_correct(const VideoClip& clip, double gamma);

/// Number of retinex_enhance invocations in this process. The trainer uses
/// this to prove student code paths never touch the enhanced stream.
uint64_t retinex_call_count();
void reset_retinex_call_count();

}  // namespace actlumos::enhance
