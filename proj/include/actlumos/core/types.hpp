#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace actlumos {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using MatF = Mat<float>;
using MatD = Mat<double>;
using VecF = Vec<float>;
using VecD = Vec<double>;

/// Generic failure raised by library preconditions and invariant checks.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A required input file (manifest, checkpoint, ...) does not exist.
struct MissingArtifact : Error {
  using Error::Error;
};

/// Invalid flag combination or out-of-range user parameter.
struct UsageError : Error {
  using Error::Error;
};

/// Clip geometry: frames x height x width.
struct ClipDims {
  int frames = 16;
  int height = 32;
  int width = 32;

  bool operator==(const ClipDims&) const = default;
};

/// Dense 4-D tensor [C, T, H, W]. Stored as a C x (T*H*W) matrix whose
/// column j holds all channels of voxel j, with j = (t*H + h)*W + w.
template <typename S>
struct Volume {
  int C = 0, T = 0, H = 0, W = 0;
  Mat<S> m;

  Volume() = default;
  Volume(int c, int t, int h, int w) : C(c), T(t), H(h), W(w), m(Mat<S>::Zero(c, static_cast<Eigen::Index>(t) * h * w)) {}

  Eigen::Index voxels() const { return static_cast<Eigen::Index>(T) * H * W; }
  Eigen::Index col(int t, int h, int w) const { return (static_cast<Eigen::Index>(t) * H + h) * W + w; }

  S& at(int c, int t, int h, int w) { return m(c, col(t, h, w)); }
  S at(int c, int t, int h, int w) const { return m(c, col(t, h, w)); }

  bool same_shape(const Volume& o) const { return C == o.C && T == o.T && H == o.H && W == o.W; }

  template <typename S2>
  Volume<S2> cast() const {
    Volume<S2> out;
    out.C = C;
    out.T = T;
    out.H = H;
    out.W = W;
    out.m = m.template cast<S2>();
    return out;
  }
};

using VolumeF = Volume<float>;
using VolumeD = Volume<double>;

/// RGB video clip with values in [0,1]. fps_tag is metadata only.
struct VideoClip {
  Volume<float> v;
  float fps_tag = 8.0f;

  int frames() const { return v.T; }
  int height() const { return v.H; }
  int width() const { return v.W; }
};

void validate_clip(const VideoClip& clip);

inline std::string shape_str(int c, int t, int h, int w) {
  return "[" + std::to_string(c) + "," + std::to_string(t) + "," + std::to_string(h) + "," + std::to_string(w) + "]";
}

}  // namespace actlumos
