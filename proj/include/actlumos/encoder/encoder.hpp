#pragma once

#include <string>
#include <vector>

#include "actlumos/core/params.hpp"
#include "actlumos/core/rng.hpp"
#include "actlumos/core/types.hpp"

namespace actlumos::encoder {

/// One factorized (2+1)-D block: a 1xkxk spatial convolution followed by a
/// kx1x1 temporal convolution, each stride-configurable.
struct StageSpec {
  int out_channels = 32;
  int temporal_stride = 1;
  int spatial_stride = 1;
};

struct EncoderConfig {
  int in_channels = 3;
  int spatial_kernel = 3;
  int temporal_kernel = 3;
  std::vector<StageSpec> stages = {{16, 2, 2}, {32, 1, 2}, {32, 1, 2}};

  int out_channels() const { return stages.empty() ? in_channels : stages.back().out_channels; }
};

struct FeatureShape {
  int C = 0, T = 0, H = 0, W = 0;
};

/// Output dims from the declared stride arithmetic; throws with the
/// computed-vs-required dims when a stride does not divide its input.
FeatureShape output_shape(const EncoderConfig& cfg, int frames, int height, int width);

template <typename S>
struct EncoderParams {
  struct Stage {
    Mat<S> w_sp;  // [Cout, k*k*Cin]
    Vec<S> b_sp;  // [Cout]
    Mat<S> w_t;   // [Cout, kt*Cout]
    Vec<S> b_t;   // [Cout]
  };
  std::vector<Stage> stages;

  static EncoderParams zeros(const EncoderConfig& cfg) {
    EncoderParams p;
    int cin = cfg.in_channels;
    for (const StageSpec& s : cfg.stages) {
      typename EncoderParams::Stage st;
      st.w_sp = Mat<S>::Zero(s.out_channels, cfg.spatial_kernel * cfg.spatial_kernel * cin);
      st.b_sp = Vec<S>::Zero(s.out_channels);
      st.w_t = Mat<S>::Zero(s.out_channels, cfg.temporal_kernel * s.out_channels);
      st.b_t = Vec<S>::Zero(s.out_channels);
      p.stages.push_back(std::move(st));
      cin = s.out_channels;
    }
    return p;
  }

  /// Fan-in scaled uniform init (He bound, rectifier-friendly), biases zero.
  static EncoderParams init(const EncoderConfig& cfg, Rng& rng) {
    EncoderParams p = zeros(cfg);
    for (auto& st : p.stages) {
      const double a_sp = std::sqrt(6.0 / static_cast<double>(st.w_sp.cols()));
      for (Eigen::Index i = 0; i < st.w_sp.size(); ++i)
        st.w_sp.data()[i] = static_cast<S>(rng.uniform(-a_sp, a_sp));
      const double a_t = std::sqrt(6.0 / static_cast<double>(st.w_t.cols()));
      for (Eigen::Index i = 0; i < st.w_t.size(); ++i) st.w_t.data()[i] = static_cast<S>(rng.uniform(-a_t, a_t));
    }
    return p;
  }

  void collect(const std::string& prefix, ParamRefs<S>& refs) {
    for (size_t i = 0; i < stages.size(); ++i) {
      const std::string base = prefix + ".stage" + std::to_string(i);
      refs.add(base + ".w_sp", stages[i].w_sp);
      refs.add(base + ".b_sp", stages[i].b_sp);
      refs.add(base + ".w_t", stages[i].w_t);
      refs.add(base + ".b_t", stages[i].b_t);
    }
  }
};

template <typename S>
struct EncoderTrace {
  struct Stage {
    int Tin = 0, Hin = 0, Win = 0;      // input dims of the spatial conv
    int Tmid = 0, Hout = 0, Wout = 0;   // dims after the spatial conv
    int Tout = 0;                       // frames after the temporal conv
    Mat<S> p_sp;                        // spatial im2col patches
    Volume<S> pre_sp;                   // spatial conv pre-activation
    Mat<S> p_t;                         // temporal im2col patches
    Volume<S> pre_t;                    // temporal conv pre-activation
  };
  std::vector<Stage> stages;
};

namespace detail {

/// Patch matrix for a 1xkxk convolution applied frame-by-frame.
/// Row block o = dy*k+dx holds the Cin channels at that kernel offset;
/// column q = (t*Hout + oh)*Wout + ow is one output voxel.
template <typename S>
Mat<S> im2col_spatial(const Volume<S>& x, int k, int stride, int Hout, int Wout) {
  const int pad = k / 2;
  const int Cin = x.C;
  Mat<S> P = Mat<S>::Zero(static_cast<Eigen::Index>(k) * k * Cin,
                          static_cast<Eigen::Index>(x.T) * Hout * Wout);
  for (int t = 0; t < x.T; ++t) {
    for (int oh = 0; oh < Hout; ++oh) {
      for (int dy = 0; dy < k; ++dy) {
        const int ih = oh * stride - pad + dy;
        if (ih < 0 || ih >= x.H) continue;
        for (int dx = 0; dx < k; ++dx) {
          // valid ow range for this kernel offset
          int ow_lo = 0;
          while (ow_lo * stride - pad + dx < 0) ++ow_lo;
          int ow_hi = Wout - 1;
          while (ow_hi >= 0 && ow_hi * stride - pad + dx >= x.W) --ow_hi;
          if (ow_hi < ow_lo) continue;
          const int count = ow_hi - ow_lo + 1;
          const Eigen::Index src_col = x.col(t, ih, ow_lo * stride - pad + dx);
          const Eigen::Index dst_col = (static_cast<Eigen::Index>(t) * Hout + oh) * Wout + ow_lo;
          const int o = dy * k + dx;
          Eigen::Map<const Mat<S>, 0, Eigen::OuterStride<>> src(
              x.m.data() + src_col * Cin, Cin, count, Eigen::OuterStride<>(static_cast<Eigen::Index>(Cin) * stride));
          P.block(static_cast<Eigen::Index>(o) * Cin, dst_col, Cin, count) = src;
        }
      }
    }
  }
  return P;
}

template <typename S>
void col2im_spatial_add(const Mat<S>& dP, Volume<S>& dx, int k, int stride, int Hout, int Wout) {
  const int pad = k / 2;
  const int Cin = dx.C;
  for (int t = 0; t < dx.T; ++t) {
    for (int oh = 0; oh < Hout; ++oh) {
      for (int dy = 0; dy < k; ++dy) {
        const int ih = oh * stride - pad + dy;
        if (ih < 0 || ih >= dx.H) continue;
        for (int dx_off = 0; dx_off < k; ++dx_off) {
          int ow_lo = 0;
          while (ow_lo * stride - pad + dx_off < 0) ++ow_lo;
          int ow_hi = Wout - 1;
          while (ow_hi >= 0 && ow_hi * stride - pad + dx_off >= dx.W) --ow_hi;
          if (ow_hi < ow_lo) continue;
          const int count = ow_hi - ow_lo + 1;
          const Eigen::Index dst_col = dx.col(t, ih, ow_lo * stride - pad + dx_off);
          const Eigen::Index src_col = (static_cast<Eigen::Index>(t) * Hout + oh) * Wout + ow_lo;
          const int o = dy * k + dx_off;
          Eigen::Map<Mat<S>, 0, Eigen::OuterStride<>> dst(
              dx.m.data() + dst_col * Cin, Cin, count, Eigen::OuterStride<>(static_cast<Eigen::Index>(Cin) * stride));
          dst += dP.block(static_cast<Eigen::Index>(o) * Cin, src_col, Cin, count);
        }
      }
    }
  }
}

/// Patch matrix for a kx1x1 temporal convolution. For a fixed output frame
/// and kernel offset the copy is one contiguous [Cin, H*W] block.
template <typename S>
Mat<S> im2col_temporal(const Volume<S>& x, int k, int stride, int Tout) {
  const int pad = k / 2;
  const int Cin = x.C;
  const Eigen::Index hw = static_cast<Eigen::Index>(x.H) * x.W;
  Mat<S> P = Mat<S>::Zero(static_cast<Eigen::Index>(k) * Cin, Tout * hw);
  for (int to = 0; to < Tout; ++to)
    for (int j = 0; j < k; ++j) {
      const int ti = to * stride - pad + j;
      if (ti < 0 || ti >= x.T) continue;
      P.block(static_cast<Eigen::Index>(j) * Cin, to * hw, Cin, hw) = x.m.middleCols(ti * hw, hw);
    }
  return P;
}

template <typename S>
void col2im_temporal_add(const Mat<S>& dP, Volume<S>& dx, int k, int stride, int Tout) {
  const int pad = k / 2;
  const int Cin = dx.C;
  const Eigen::Index hw = static_cast<Eigen::Index>(dx.H) * dx.W;
  for (int to = 0; to < Tout; ++to)
    for (int j = 0; j < k; ++j) {
      const int ti = to * stride - pad + j;
      if (ti < 0 || ti >= dx.T) continue;
      dx.m.middleCols(ti * hw, hw) += dP.block(static_cast<Eigen::Index>(j) * Cin, to * hw, Cin, hw);
    }
}

}  // namespace detail

/// Forward pass of the shared backbone: clip -> feature map [C,T,h,w].
/// Pass a trace to keep the activations needed by encode_backward.
template <typename S>
Volume<S> encode(const EncoderConfig& cfg, const EncoderParams<S>& params, const Volume<S>& clip,
                 EncoderTrace<S>* trace = nullptr) {
  if (clip.C != cfg.in_channels)
    throw Error("encoder expects " + std::to_string(cfg.in_channels) + " input channels, got " +
                std::to_string(clip.C));
  output_shape(cfg, clip.T, clip.H, clip.W);  // validates stride divisibility

  if (trace) trace->stages.assign(cfg.stages.size(), {});
  Volume<S> x = clip;
  for (size_t i = 0; i < cfg.stages.size(); ++i) {
    const StageSpec& spec = cfg.stages[i];
    const int Hout = x.H / spec.spatial_stride;
    const int Wout = x.W / spec.spatial_stride;
    const int Tout = x.T / spec.temporal_stride;
    const bool last = (i + 1 == cfg.stages.size());

    Mat<S> p_sp = detail::im2col_spatial(x, cfg.spatial_kernel, spec.spatial_stride, Hout, Wout);
    Volume<S> mid(spec.out_channels, x.T, Hout, Wout);
    mid.m.noalias() = params.stages[i].w_sp * p_sp;
    mid.m.colwise() += params.stages[i].b_sp;
    Volume<S> act_sp = mid;
    act_sp.m = act_sp.m.cwiseMax(S(0));

    Mat<S> p_t = detail::im2col_temporal(act_sp, cfg.temporal_kernel, spec.temporal_stride, Tout);
    Volume<S> out(spec.out_channels, Tout, Hout, Wout);
    out.m.noalias() = params.stages[i].w_t * p_t;
    out.m.colwise() += params.stages[i].b_t;

    if (trace) {
      auto& st = trace->stages[i];
      st.Tin = x.T;
      st.Hin = x.H;
      st.Win = x.W;
      st.Tmid = x.T;
      st.Hout = Hout;
      st.Wout = Wout;
      st.Tout = Tout;
      st.p_sp = std::move(p_sp);
      st.pre_sp = std::move(mid);
      st.p_t = std::move(p_t);
      st.pre_t = out;
    }
    if (!last) out.m = out.m.cwiseMax(S(0));  // final block stays linear before pooling
    x = std::move(out);
  }
  return x;
}

/// Accumulates parameter gradients for one clip; returns nothing (input
/// gradients are not needed, clips are data).
template <typename S>
void encode_backward(const EncoderConfig& cfg, const EncoderParams<S>& params, const EncoderTrace<S>& trace,
                     const Volume<S>& d_out, EncoderParams<S>& grads) {
  Volume<S> d = d_out;
  for (size_t ri = cfg.stages.size(); ri-- > 0;) {
    const StageSpec& spec = cfg.stages[ri];
    const auto& st = trace.stages[ri];
    const bool last = (ri + 1 == cfg.stages.size());

    // temporal conv
    Mat<S> d_pre_t = d.m;
    if (!last) d_pre_t = d_pre_t.cwiseProduct((st.pre_t.m.array() > S(0)).template cast<S>().matrix());
    grads.stages[ri].b_t += d_pre_t.rowwise().sum();
    grads.stages[ri].w_t.noalias() += d_pre_t * st.p_t.transpose();
    Mat<S> dP_t = params.stages[ri].w_t.transpose() * d_pre_t;
    Volume<S> d_act_sp(spec.out_channels, st.Tmid, st.Hout, st.Wout);
    detail::col2im_temporal_add(dP_t, d_act_sp, cfg.temporal_kernel, spec.temporal_stride, st.Tout);

    // spatial conv
    Mat<S> d_pre_sp =
        d_act_sp.m.cwiseProduct((st.pre_sp.m.array() > S(0)).template cast<S>().matrix());
    grads.stages[ri].b_sp += d_pre_sp.rowwise().sum();
    grads.stages[ri].w_sp.noalias() += d_pre_sp * st.p_sp.transpose();
    if (ri > 0) {
      Mat<S> dP_sp = params.stages[ri].w_sp.transpose() * d_pre_sp;
      const int cin = cfg.stages[ri - 1].out_channels;
      Volume<S> dx(cin, st.Tin, st.Hin, st.Win);
      detail::col2im_spatial_add(dP_sp, dx, cfg.spatial_kernel, spec.spatial_stride, st.Hout, st.Wout);
      d = std::move(dx);
    }
  }
}

/// Spatial average pooling: feature map [C,T,h,w] -> sequence [T,C].
template <typename S>
Mat<S> spatial_gap(const Volume<S>& fm) {
  const Eigen::Index hw = static_cast<Eigen::Index>(fm.H) * fm.W;
  Mat<S> seq(fm.T, fm.C);
  for (int t = 0; t < fm.T; ++t) seq.row(t) = fm.m.middleCols(t * hw, hw).rowwise().mean().transpose();
  return seq;
}

template <typename S>
Volume<S> spatial_gap_backward(const Mat<S>& d_seq, int C, int T, int H, int W) {
  const Eigen::Index hw = static_cast<Eigen::Index>(H) * W;
  Volume<S> dx(C, T, H, W);
  for (int t = 0; t < T; ++t)
    dx.m.middleCols(t * hw, hw).colwise() = (d_seq.row(t).transpose() / static_cast<S>(hw)).eval();
  return dx;
}

template <typename S>
struct EmbeddingTrace {
  Vec<S> unit;  // the returned embedding
  S norm = S(0);
  Eigen::Index voxels = 0;
};

/// Global average pooling over (t,h,w) followed by L2 normalization.
template <typename S>
Vec<S> clip_embedding(const Volume<S>& fm, EmbeddingTrace<S>* trace = nullptr) {
  Vec<S> pooled = fm.m.rowwise().mean();
  const S norm = pooled.norm();
  if (!(norm > S(1e-12)))
    throw Error("degenerate embedding: pooled feature vector has (near-)zero norm");
  Vec<S> unit = pooled / norm;
  if (trace) {
    trace->unit = unit;
    trace->norm = norm;
    trace->voxels = fm.voxels();
  }
  return unit;
}

template <typename S>
Volume<S> clip_embedding_backward(const EmbeddingTrace<S>& trace, const Vec<S>& d_unit, int C, int T, int H,
                                  int W) {
  const Vec<S> d_pooled = (d_unit - trace.unit * trace.unit.dot(d_unit)) / trace.norm;
  Volume<S> dx(C, T, H, W);
  dx.m.colwise() = (d_pooled / static_cast<S>(trace.voxels)).eval();
  return dx;
}

}  // namespace actlumos::encoder
