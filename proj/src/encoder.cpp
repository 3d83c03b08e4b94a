#include "actlumos/encoder/encoder.hpp"

namespace actlumos::encoder {

FeatureShape output_shape(const EncoderConfig& cfg, int frames, int height, int width) {
  if (cfg.stages.empty()) throw Error("encoder config has no stages");
  int T = frames, H = height, W = width;
  for (size_t i = 0; i < cfg.stages.size(); ++i) {
    const StageSpec& s = cfg.stages[i];
    if (s.temporal_stride < 1 || s.spatial_stride < 1) throw Error("strides must be >= 1");
    if (T % s.temporal_stride != 0)
      throw Error("input " + shape_str(cfg.in_channels, frames, height, width) + " incompatible: stage " +
                  std::to_string(i) + " temporal stride " + std::to_string(s.temporal_stride) +
                  " requires frames divisible by it, computed T=" + std::to_string(T) + ", required multiple of " +
                  std::to_string(s.temporal_stride));
    if (H % s.spatial_stride != 0 || W % s.spatial_stride != 0)
      throw Error("input " + shape_str(cfg.in_channels, frames, height, width) + " incompatible: stage " +
                  std::to_string(i) + " spatial stride " + std::to_string(s.spatial_stride) +
                  " requires height/width divisible by it, computed " + std::to_string(H) + "x" +
                  std::to_string(W) + ", required multiples of " + std::to_string(s.spatial_stride));
    T /= s.temporal_stride;
    H /= s.spatial_stride;
    W /= s.spatial_stride;
  }
  return {cfg.out_channels(), T, H, W};
}

}  // namespace actlumos::encoder
