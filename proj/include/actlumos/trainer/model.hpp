#pragma once

#include <optional>

#include "actlumos/encoder/encoder.hpp"
#include "actlumos/fusion/fusion.hpp"
#include "actlumos/trainer/config.hpp"

namespace actlumos::trainer {

encoder::EncoderConfig make_encoder_config(const TrainConfig& c);

fusion::TemporalHeadConfig make_head_config(const TrainConfig& c, int num_classes, int seq_len);

/// Dual-stream teacher. The backbone parameters are shared between the dark
/// and retinex streams; gate/projection exist only for their fusion variant.
template <typename S>
struct TeacherModel {
  FusionVariant variant = FusionVariant::dff;
  encoder::EncoderConfig enc_cfg;
  fusion::TemporalHeadConfig head_cfg;
  encoder::EncoderParams<S> enc;
  fusion::GateParams<S> gate;
  fusion::StaticProjParams<S> proj;
  fusion::HeadParams<S> head;

  static TeacherModel zeros(FusionVariant variant, const encoder::EncoderConfig& ec,
                            const fusion::TemporalHeadConfig& hc) {
    TeacherModel m;
    m.variant = variant;
    m.enc_cfg = ec;
    m.head_cfg = hc;
    m.enc = encoder::EncoderParams<S>::zeros(ec);
    if (variant == FusionVariant::dff) m.gate = fusion::GateParams<S>::zeros(hc.model_dim);
    if (variant == FusionVariant::static_fusion) m.proj = fusion::StaticProjParams<S>::zeros(hc.model_dim);
    m.head = fusion::HeadParams<S>::zeros(hc);
    return m;
  }

  static TeacherModel init(FusionVariant variant, const encoder::EncoderConfig& ec,
                           const fusion::TemporalHeadConfig& hc, Rng& rng) {
    TeacherModel m = zeros(variant, ec, hc);
    Rng enc_rng = rng.stream("encoder");
    Rng fuse_rng = rng.stream("fusion");
    Rng head_rng = rng.stream("head");
    m.enc = encoder::EncoderParams<S>::init(ec, enc_rng);
    if (variant == FusionVariant::dff) m.gate = fusion::GateParams<S>::init(hc.model_dim, fuse_rng);
    if (variant == FusionVariant::static_fusion)
      m.proj = fusion::StaticProjParams<S>::init(hc.model_dim, fuse_rng);
    m.head = fusion::HeadParams<S>::init(hc, head_rng);
    return m;
  }

  ParamRefs<S> collect() {
    ParamRefs<S> refs;
    enc.collect("enc", refs);
    if (variant == FusionVariant::dff) gate.collect("gate", refs);
    if (variant == FusionVariant::static_fusion) proj.collect("proj", refs);
    head.collect("head", refs);
    return refs;
  }
};

/// Single-stream student: backbone plus the same temporal head, no fusion.
template <typename S>
struct StudentModel {
  encoder::EncoderConfig enc_cfg;
  fusion::TemporalHeadConfig head_cfg;
  encoder::EncoderParams<S> enc;
  fusion::HeadParams<S> head;

  static StudentModel zeros(const encoder::EncoderConfig& ec, const fusion::TemporalHeadConfig& hc) {
    StudentModel m;
    m.enc_cfg = ec;
    m.head_cfg = hc;
    m.enc = encoder::EncoderParams<S>::zeros(ec);
    m.head = fusion::HeadParams<S>::zeros(hc);
    return m;
  }

  static StudentModel init(const encoder::EncoderConfig& ec, const fusion::TemporalHeadConfig& hc, Rng& rng) {
    StudentModel m = zeros(ec, hc);
    Rng enc_rng = rng.stream("encoder");
    Rng head_rng = rng.stream("head");
    m.enc = encoder::EncoderParams<S>::init(ec, enc_rng);
    m.head = fusion::HeadParams<S>::init(hc, head_rng);
    return m;
  }

  ParamRefs<S> collect() {
    ParamRefs<S> refs;
    enc.collect("enc", refs);
    head.collect("head", refs);
    return refs;
  }
};

template <typename S>
struct TeacherClipTrace {
  encoder::FeatureShape fshape;
  encoder::EncoderTrace<S> enc_d, enc_r;
  Mat<S> seq_d, seq_r;
  encoder::EmbeddingTrace<S> emb_d, emb_r;
  bool has_emb = false;
  fusion::GateTrace<S> gate;
  Mat<S> gate_weights;
  fusion::StaticFuseTrace<S> sfuse;
  fusion::HeadTrace<S> head;
};

inline bool uses_dark(FusionVariant v) { return v != FusionVariant::retinex_only; }
inline bool uses_retinex(FusionVariant v) { return v != FusionVariant::dark_only; }

/// Forward one clip through the teacher. `ret` may be empty for dark_only.
/// When need_embeddings is set, per-stream unit embeddings are produced for
/// the streams the variant consumes.
template <typename S>
Vec<S> teacher_clip_forward(const TeacherModel<S>& m, const Volume<S>& dark, const Volume<S>& ret,
                            bool need_embeddings, TeacherClipTrace<S>* tr) {
  TeacherClipTrace<S> local;
  TeacherClipTrace<S>& t = tr ? *tr : local;
  const Volume<S>& shape_src = uses_dark(m.variant) ? dark : ret;
  const auto fs = encoder::output_shape(m.enc_cfg, shape_src.T, shape_src.H, shape_src.W);
  t.fshape = fs;
  t.has_emb = need_embeddings;

  Mat<S> fused;
  if (uses_dark(m.variant)) {
    Volume<S> fm = encoder::encode(m.enc_cfg, m.enc, dark, tr ? &t.enc_d : nullptr);
    t.seq_d = encoder::spatial_gap(fm);
    if (need_embeddings) encoder::clip_embedding(fm, &t.emb_d);
  }
  if (uses_retinex(m.variant)) {
    Volume<S> fm = encoder::encode(m.enc_cfg, m.enc, ret, tr ? &t.enc_r : nullptr);
    t.seq_r = encoder::spatial_gap(fm);
    if (need_embeddings) encoder::clip_embedding(fm, &t.emb_r);
  }

  switch (m.variant) {
    case FusionVariant::dark_only:
      fused = t.seq_d;
      break;
    case FusionVariant::retinex_only:
      fused = t.seq_r;
      break;
    case FusionVariant::static_fusion:
      fused = fusion::static_concat_fuse(m.proj, t.seq_d, t.seq_r, tr ? &t.sfuse : nullptr);
      break;
    case FusionVariant::dff: {
      t.gate_weights = fusion::dff_gate(m.gate, t.seq_d, t.seq_r, tr ? &t.gate : nullptr);
      fused = fusion::dff_fuse(t.seq_d, t.seq_r, t.gate_weights);
      break;
    }
  }
  return fusion::temporal_head(m.head_cfg, m.head, fused, tr ? &t.head : nullptr);
}

/// Backward for one teacher clip. d_emb_dark / d_emb_ret are gradients
/// w.r.t. the per-stream unit embeddings (pass nullptr when unused).
template <typename S>
void teacher_clip_backward(const TeacherModel<S>& m, const TeacherClipTrace<S>& t, const Vec<S>& d_logits,
                           const Vec<S>* d_emb_dark, const Vec<S>* d_emb_ret, TeacherModel<S>& grads) {
  Mat<S> d_fused = fusion::temporal_head_backward(m.head_cfg, m.head, t.head, d_logits, grads.head);

  Mat<S> d_seq_d = Mat<S>::Zero(t.seq_d.rows(), t.seq_d.cols());
  Mat<S> d_seq_r = Mat<S>::Zero(t.seq_r.rows(), t.seq_r.cols());
  switch (m.variant) {
    case FusionVariant::dark_only:
      d_seq_d = d_fused;
      break;
    case FusionVariant::retinex_only:
      d_seq_r = d_fused;
      break;
    case FusionVariant::static_fusion:
      fusion::static_concat_fuse_backward(m.proj, t.sfuse, d_fused, grads.proj, d_seq_d, d_seq_r);
      break;
    case FusionVariant::dff: {
      Mat<S> d_weights = Mat<S>::Zero(t.gate_weights.rows(), 2);
      fusion::dff_fuse_backward(t.seq_d, t.seq_r, t.gate_weights, d_fused, d_seq_d, d_seq_r, d_weights);
      fusion::dff_gate_backward(m.gate, t.gate, d_weights, grads.gate, d_seq_d, d_seq_r);
      break;
    }
  }

  const auto& fs = t.fshape;
  if (uses_dark(m.variant)) {
    Volume<S> d_fm = encoder::spatial_gap_backward(d_seq_d, fs.C, fs.T, fs.H, fs.W);
    if (d_emb_dark)
      d_fm.m += encoder::clip_embedding_backward(t.emb_d, *d_emb_dark, fs.C, fs.T, fs.H, fs.W).m;
    encoder::encode_backward(m.enc_cfg, m.enc, t.enc_d, d_fm, grads.enc);
  }
  if (uses_retinex(m.variant)) {
    Volume<S> d_fm = encoder::spatial_gap_backward(d_seq_r, fs.C, fs.T, fs.H, fs.W);
    if (d_emb_ret)
      d_fm.m += encoder::clip_embedding_backward(t.emb_r, *d_emb_ret, fs.C, fs.T, fs.H, fs.W).m;
    encoder::encode_backward(m.enc_cfg, m.enc, t.enc_r, d_fm, grads.enc);
  }
}

template <typename S>
struct StudentClipTrace {
  encoder::FeatureShape fshape;
  encoder::EncoderTrace<S> enc;
  fusion::HeadTrace<S> head;
};

template <typename S>
Vec<S> student_clip_forward(const StudentModel<S>& m, const Volume<S>& dark, StudentClipTrace<S>* tr) {
  const auto fs = encoder::output_shape(m.enc_cfg, dark.T, dark.H, dark.W);
  if (tr) tr->fshape = fs;
  Volume<S> fm = encoder::encode(m.enc_cfg, m.enc, dark, tr ? &tr->enc : nullptr);
  Mat<S> seq = encoder::spatial_gap(fm);
  return fusion::temporal_head(m.head_cfg, m.head, seq, tr ? &tr->head : nullptr);
}

template <typename S>
void student_clip_backward(const StudentModel<S>& m, const StudentClipTrace<S>& t, const Vec<S>& d_logits,
                           StudentModel<S>& grads, bool encoder_frozen = false) {
  Mat<S> d_seq = fusion::temporal_head_backward(m.head_cfg, m.head, t.head, d_logits, grads.head);
  if (encoder_frozen) return;
  const auto& fs = t.fshape;
  Volume<S> d_fm = encoder::spatial_gap_backward(d_seq, fs.C, fs.T, fs.H, fs.W);
  encoder::encode_backward(m.enc_cfg, m.enc, t.enc, d_fm, grads.enc);
}

template <typename S>
struct SslViewTrace {
  encoder::FeatureShape fshape;
  encoder::EncoderTrace<S> enc;
  encoder::EmbeddingTrace<S> emb;
};

template <typename S>
Vec<S> ssl_view_forward(const encoder::EncoderConfig& cfg, const encoder::EncoderParams<S>& params,
                        const Volume<S>& view, SslViewTrace<S>* tr) {
  const auto fs = encoder::output_shape(cfg, view.T, view.H, view.W);
  if (tr) tr->fshape = fs;
  Volume<S> fm = encoder::encode(cfg, params, view, tr ? &tr->enc : nullptr);
  encoder::EmbeddingTrace<S> local;
  encoder::EmbeddingTrace<S>& et = tr ? tr->emb : local;
  return encoder::clip_embedding(fm, &et);
}

template <typename S>
void ssl_view_backward(const encoder::EncoderConfig& cfg, const encoder::EncoderParams<S>& params,
                       const SslViewTrace<S>& t, const Vec<S>& d_emb, encoder::EncoderParams<S>& grads) {
  const auto& fs = t.fshape;
  Volume<S> d_fm = encoder::clip_embedding_backward(t.emb, d_emb, fs.C, fs.T, fs.H, fs.W);
  encoder::encode_backward(cfg, params, t.enc, d_fm, grads);
}

}  // namespace actlumos::trainer
