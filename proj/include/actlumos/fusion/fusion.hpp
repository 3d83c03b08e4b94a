#pragma once

#include <string>
#include <vector>

#include "actlumos/core/numeric.hpp"
#include "actlumos/core/params.hpp"
#include "actlumos/core/rng.hpp"
#include "actlumos/core/types.hpp"

namespace actlumos::fusion {

template <typename S>
void require_matching_sequences(const Mat<S>& a, const Mat<S>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error("stream sequences have mismatched shapes: [" + std::to_string(a.rows()) + "," +
                std::to_string(a.cols()) + "] vs [" + std::to_string(b.rows()) + "," + std::to_string(b.cols()) +
                "]");
}

// ---------------------------------------------------------------------------
// Dynamic Feature Fusion gate: per timestep, a 2-layer MLP on the concatenated
// stream features emits two logits whose softmax weights the convex fusion.
// ---------------------------------------------------------------------------

template <typename S>
struct GateParams {
  Mat<S> w1;  // [C, 2C]
  Vec<S> b1;  // [C]
  Mat<S> w2;  // [2, C]
  Vec<S> b2;  // [2]

  static GateParams zeros(int C) {
    GateParams p;
    p.w1 = Mat<S>::Zero(C, 2 * C);
    p.b1 = Vec<S>::Zero(C);
    p.w2 = Mat<S>::Zero(2, C);
    p.b2 = Vec<S>::Zero(2);
    return p;
  }

  /// The output bias starts dark-leaning (about 0.8/0.2): the raw stream is
  /// the one that trains from scratch, and the gate learns where to hand
  /// weight to the enhanced stream.
  static GateParams init(int C, Rng& rng) {
    GateParams p = zeros(C);
    const double a1 = 1.0 / std::sqrt(2.0 * C);
    for (Eigen::Index i = 0; i < p.w1.size(); ++i) p.w1.data()[i] = static_cast<S>(rng.uniform(-a1, a1));
    const double a2 = 1.0 / std::sqrt(static_cast<double>(C));
    for (Eigen::Index i = 0; i < p.w2.size(); ++i) p.w2.data()[i] = static_cast<S>(rng.uniform(-a2, a2));
    p.b2(0) = S(1.4);
    return p;
  }

  void collect(const std::string& prefix, ParamRefs<S>& refs) {
    refs.add(prefix + ".w1", w1);
    refs.add(prefix + ".b1", b1);
    refs.add(prefix + ".w2", w2);
    refs.add(prefix + ".b2", b2);
  }
};

template <typename S>
struct GateTrace {
  Mat<S> input;    // [T, 2C]
  Mat<S> pre_h;    // [T, C]
  Mat<S> weights;  // [T, 2]
};

/// Gate weights [T,2]; row t = softmax(MLP([dark_t ; ret_t])). The same MLP
/// parameters are applied at every timestep.
template <typename S>
Mat<S> dff_gate(const GateParams<S>& p, const Mat<S>& seq_dark, const Mat<S>& seq_ret,
                GateTrace<S>* trace = nullptr) {
  require_matching_sequences(seq_dark, seq_ret);
  const Eigen::Index T = seq_dark.rows(), C = seq_dark.cols();
  if (p.w1.cols() != 2 * C) throw Error("gate params built for C=" + std::to_string(p.w1.cols() / 2) +
                                        ", sequences have C=" + std::to_string(C));
  Mat<S> input(T, 2 * C);
  input.leftCols(C) = seq_dark;
  input.rightCols(C) = seq_ret;
  Mat<S> pre_h = input * p.w1.transpose();
  pre_h.rowwise() += p.b1.transpose();
  Mat<S> hidden = pre_h.cwiseMax(S(0));
  Mat<S> logits = hidden * p.w2.transpose();
  logits.rowwise() += p.b2.transpose();
  Mat<S> weights = rowwise_softmax(logits);
  if (trace) {
    trace->input = std::move(input);
    trace->pre_h = std::move(pre_h);
    trace->weights = weights;
  }
  return weights;
}

template <typename S>
void dff_gate_backward(const GateParams<S>& p, const GateTrace<S>& trace, const Mat<S>& d_weights,
                       GateParams<S>& grads, Mat<S>& d_seq_dark, Mat<S>& d_seq_ret) {
  const Eigen::Index T = trace.weights.rows();
  const Eigen::Index C = trace.pre_h.cols();
  Mat<S> d_logits(T, 2);
  for (Eigen::Index t = 0; t < T; ++t)
    d_logits.row(t) =
        softmax_backward<S>(trace.weights.row(t).transpose(), d_weights.row(t).transpose()).transpose();
  const Mat<S> hidden = trace.pre_h.cwiseMax(S(0));
  grads.w2.noalias() += d_logits.transpose() * hidden;
  grads.b2 += d_logits.colwise().sum().transpose();
  Mat<S> d_hidden = d_logits * p.w2;
  Mat<S> d_pre = d_hidden.cwiseProduct((trace.pre_h.array() > S(0)).template cast<S>().matrix());
  grads.w1.noalias() += d_pre.transpose() * trace.input;
  grads.b1 += d_pre.colwise().sum().transpose();
  Mat<S> d_input = d_pre * p.w1;
  d_seq_dark += d_input.leftCols(C);
  d_seq_ret += d_input.rightCols(C);
}

template <typename S>
void validate_gate_weights(const Mat<S>& weights) {
  if (weights.cols() != 2) throw Error("gate weights must have 2 columns");
  for (Eigen::Index t = 0; t < weights.rows(); ++t) {
    const double w0 = static_cast<double>(weights(t, 0));
    const double w1 = static_cast<double>(weights(t, 1));
    if (w0 < -1e-6 || w1 < -1e-6 || std::abs(w0 + w1 - 1.0) > 1e-6)
      throw Error("gate weight row " + std::to_string(t) + " violates the simplex invariant: (" +
                  std::to_string(w0) + ", " + std::to_string(w1) + ")");
  }
}

/// Per-timestep convex combination of the two streams.
template <typename S>
Mat<S> dff_fuse(const Mat<S>& seq_dark, const Mat<S>& seq_ret, const Mat<S>& weights) {
  require_matching_sequences(seq_dark, seq_ret);
  if (weights.rows() != seq_dark.rows()) throw Error("gate weights rows do not match sequence length");
  validate_gate_weights(weights);
  Mat<S> fused = seq_dark.array().colwise() * weights.col(0).array();
  fused.array() += seq_ret.array().colwise() * weights.col(1).array();
  return fused;
}

template <typename S>
void dff_fuse_backward(const Mat<S>& seq_dark, const Mat<S>& seq_ret, const Mat<S>& weights,
                       const Mat<S>& d_fused, Mat<S>& d_seq_dark, Mat<S>& d_seq_ret, Mat<S>& d_weights) {
  d_seq_dark.array() += d_fused.array().colwise() * weights.col(0).array();
  d_seq_ret.array() += d_fused.array().colwise() * weights.col(1).array();
  d_weights.col(0) += d_fused.cwiseProduct(seq_dark).rowwise().sum();
  d_weights.col(1) += d_fused.cwiseProduct(seq_ret).rowwise().sum();
}

// ---------------------------------------------------------------------------
// Static fusion baseline: concatenate the streams and project back to C with
// a learned linear map, so all fusion variants share the temporal head.
// ---------------------------------------------------------------------------

template <typename S>
struct StaticProjParams {
  Mat<S> w;  // [C, 2C]
  Vec<S> b;  // [C]

  static StaticProjParams zeros(int C) {
    StaticProjParams p;
    p.w = Mat<S>::Zero(C, 2 * C);
    p.b = Vec<S>::Zero(C);
    return p;
  }

  /// Starts as a dark-leaning blend plus a small symmetry-breaking jitter,
  /// mirroring the gate's starting point.
  static StaticProjParams init(int C, Rng& rng) {
    StaticProjParams p = zeros(C);
    for (int c = 0; c < C; ++c) {
      p.w(c, c) = S(0.8);
      p.w(c, C + c) = S(0.2);
    }
    for (Eigen::Index i = 0; i < p.w.size(); ++i) p.w.data()[i] += static_cast<S>(rng.uniform(-0.02, 0.02));
    return p;
  }

  void collect(const std::string& prefix, ParamRefs<S>& refs) {
    refs.add(prefix + ".w", w);
    refs.add(prefix + ".b", b);
  }
};

template <typename S>
struct StaticFuseTrace {
  Mat<S> input;  // [T, 2C]
};

template <typename S>
Mat<S> static_concat_fuse(const StaticProjParams<S>& p, const Mat<S>& seq_dark, const Mat<S>& seq_ret,
                          StaticFuseTrace<S>* trace = nullptr) {
  require_matching_sequences(seq_dark, seq_ret);
  const Eigen::Index C = seq_dark.cols();
  if (p.w.cols() != 2 * C) throw Error("static projection built for a different channel count");
  Mat<S> input(seq_dark.rows(), 2 * C);
  input.leftCols(C) = seq_dark;
  input.rightCols(C) = seq_ret;
  Mat<S> out = input * p.w.transpose();
  out.rowwise() += p.b.transpose();
  if (trace) trace->input = std::move(input);
  return out;
}

template <typename S>
void static_concat_fuse_backward(const StaticProjParams<S>& p, const StaticFuseTrace<S>& trace,
                                 const Mat<S>& d_out, StaticProjParams<S>& grads, Mat<S>& d_seq_dark,
                                 Mat<S>& d_seq_ret) {
  const Eigen::Index C = d_seq_dark.cols();
  grads.w.noalias() += d_out.transpose() * trace.input;
  grads.b += d_out.colwise().sum().transpose();
  Mat<S> d_input = d_out * p.w;
  d_seq_dark += d_input.leftCols(C);
  d_seq_ret += d_input.rightCols(C);
}

// ---------------------------------------------------------------------------
// Temporal head: learnable positional embedding, prepended CLS token, a small
// pre-norm transformer encoder, and a linear classifier on the CLS output.
// ---------------------------------------------------------------------------

struct TemporalHeadConfig {
  int model_dim = 32;
  int num_layers = 2;
  int num_heads = 4;
  int ff_mult = 4;
  int num_classes = 10;
  int seq_len = 8;
};

void validate_head_config(const TemporalHeadConfig& cfg);

template <typename S>
struct LayerNormParams {
  Vec<S> gamma, beta;
  static LayerNormParams make(int C) {
    LayerNormParams p;
    p.gamma = Vec<S>::Ones(C);
    p.beta = Vec<S>::Zero(C);
    return p;
  }
  static LayerNormParams zeros(int C) {
    LayerNormParams p;
    p.gamma = Vec<S>::Zero(C);
    p.beta = Vec<S>::Zero(C);
    return p;
  }
};

template <typename S>
struct LayerNormTrace {
  Mat<S> xhat;
  Vec<S> inv_std;
};

template <typename S>
Mat<S> layer_norm(const Mat<S>& x, const LayerNormParams<S>& p, LayerNormTrace<S>* trace) {
  constexpr double kEps = 1e-5;
  Mat<S> xhat(x.rows(), x.cols());
  Vec<S> inv_std(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const S mean = x.row(i).mean();
    const S var = (x.row(i).array() - mean).square().mean();
    const S is = S(1) / std::sqrt(var + S(kEps));
    xhat.row(i) = ((x.row(i).array() - mean) * is).matrix();
    inv_std(i) = is;
  }
  Mat<S> y = xhat.array().rowwise() * p.gamma.transpose().array();
  y.array().rowwise() += p.beta.transpose().array();
  if (trace) {
    trace->xhat = std::move(xhat);
    trace->inv_std = std::move(inv_std);
  }
  return y;
}

template <typename S>
Mat<S> layer_norm_backward(const LayerNormTrace<S>& trace, const LayerNormParams<S>& p, const Mat<S>& dy,
                           LayerNormParams<S>& grads) {
  grads.gamma += (dy.array() * trace.xhat.array()).colwise().sum().transpose().matrix();
  grads.beta += dy.colwise().sum().transpose();
  Mat<S> dxhat = dy.array().rowwise() * p.gamma.transpose().array();
  Mat<S> dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const S m1 = dxhat.row(i).mean();
    const S m2 = dxhat.row(i).cwiseProduct(trace.xhat.row(i)).mean();
    dx.row(i) = ((dxhat.row(i).array() - m1 - trace.xhat.row(i).array() * m2) * trace.inv_std(i)).matrix();
  }
  return dx;
}

template <typename S>
struct AttentionLayerParams {
  LayerNormParams<S> ln1, ln2;
  Mat<S> wq, wk, wv, wo;      // [C, C]
  Vec<S> bq, bk, bv, bo;      // [C]
  Mat<S> w_ff1;               // [ff, C]
  Vec<S> b_ff1;               // [ff]
  Mat<S> w_ff2;               // [C, ff]
  Vec<S> b_ff2;               // [C]
};

template <typename S>
struct HeadParams {
  Mat<S> pos;   // [T, C], learnable temporal positional embedding
  Vec<S> cls;   // [C], learnable CLS token
  std::vector<AttentionLayerParams<S>> layers;
  LayerNormParams<S> ln_final;
  Mat<S> w_out;  // [K, C]
  Vec<S> b_out;  // [K]

  static HeadParams zeros(const TemporalHeadConfig& cfg) {
    validate_head_config(cfg);
    const int C = cfg.model_dim, F = cfg.ff_mult * cfg.model_dim;
    HeadParams p;
    p.pos = Mat<S>::Zero(cfg.seq_len, C);
    p.cls = Vec<S>::Zero(C);
    p.layers.resize(static_cast<size_t>(cfg.num_layers));
    for (auto& l : p.layers) {
      l.ln1 = LayerNormParams<S>::zeros(C);
      l.ln2 = LayerNormParams<S>::zeros(C);
      l.wq = Mat<S>::Zero(C, C);
      l.wk = Mat<S>::Zero(C, C);
      l.wv = Mat<S>::Zero(C, C);
      l.wo = Mat<S>::Zero(C, C);
      l.bq = Vec<S>::Zero(C);
      l.bk = Vec<S>::Zero(C);
      l.bv = Vec<S>::Zero(C);
      l.bo = Vec<S>::Zero(C);
      l.w_ff1 = Mat<S>::Zero(F, C);
      l.b_ff1 = Vec<S>::Zero(F);
      l.w_ff2 = Mat<S>::Zero(C, F);
      l.b_ff2 = Vec<S>::Zero(C);
    }
    p.ln_final = LayerNormParams<S>::zeros(C);
    p.w_out = Mat<S>::Zero(cfg.num_classes, C);
    p.b_out = Vec<S>::Zero(cfg.num_classes);
    return p;
  }

  static HeadParams init(const TemporalHeadConfig& cfg, Rng& rng) {
    HeadParams p = zeros(cfg);
    const int C = cfg.model_dim;
    for (Eigen::Index i = 0; i < p.pos.size(); ++i) p.pos.data()[i] = static_cast<S>(0.02 * rng.normal());
    auto fill = [&rng](Mat<S>& m) {
      const double a = std::sqrt(6.0 / static_cast<double>(m.cols()));
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>(rng.uniform(-a, a));
    };
    for (auto& l : p.layers) {
      l.ln1 = LayerNormParams<S>::make(C);
      l.ln2 = LayerNormParams<S>::make(C);
      fill(l.wq);
      fill(l.wk);
      fill(l.wv);
      fill(l.wo);
      fill(l.w_ff1);
      fill(l.w_ff2);
    }
    p.ln_final = LayerNormParams<S>::make(C);
    fill(p.w_out);
    return p;
  }

  void collect(const std::string& prefix, ParamRefs<S>& refs) {
    refs.add(prefix + ".pos", pos);
    refs.add(prefix + ".cls", cls);
    for (size_t i = 0; i < layers.size(); ++i) {
      const std::string b = prefix + ".layer" + std::to_string(i);
      auto& l = layers[i];
      refs.add(b + ".ln1.g", l.ln1.gamma);
      refs.add(b + ".ln1.b", l.ln1.beta);
      refs.add(b + ".wq", l.wq);
      refs.add(b + ".bq", l.bq);
      refs.add(b + ".wk", l.wk);
      refs.add(b + ".bk", l.bk);
      refs.add(b + ".wv", l.wv);
      refs.add(b + ".bv", l.bv);
      refs.add(b + ".wo", l.wo);
      refs.add(b + ".bo", l.bo);
      refs.add(b + ".ln2.g", l.ln2.gamma);
      refs.add(b + ".ln2.b", l.ln2.beta);
      refs.add(b + ".ff1.w", l.w_ff1);
      refs.add(b + ".ff1.b", l.b_ff1);
      refs.add(b + ".ff2.w", l.w_ff2);
      refs.add(b + ".ff2.b", l.b_ff2);
    }
    refs.add(prefix + ".lnf.g", ln_final.gamma);
    refs.add(prefix + ".lnf.b", ln_final.beta);
    refs.add(prefix + ".out.w", w_out);
    refs.add(prefix + ".out.b", b_out);
  }
};

template <typename S>
struct HeadLayerTrace {
  Mat<S> x_in;                  // [N, C]
  LayerNormTrace<S> ln1;
  Mat<S> xn;                    // LN1 output
  Mat<S> q, k, v;               // [N, C]
  std::vector<Mat<S>> attn;     // per head [N, N] softmax rows
  Mat<S> concat;                // [N, C], heads concatenated
  Mat<S> x_mid;                 // after attention residual
  LayerNormTrace<S> ln2;
  Mat<S> x2n;                   // LN2 output
  Mat<S> ff_pre;                // [N, ff]
  Mat<S> x_out;
};

template <typename S>
struct HeadTrace {
  std::vector<HeadLayerTrace<S>> layers;
  LayerNormTrace<S> ln_final;
  Mat<S> x_final_in;
  Vec<S> cls_out;  // classifier input
};

/// Sequence [T,C] -> class logits [K].
template <typename S>
Vec<S> temporal_head(const TemporalHeadConfig& cfg, const HeadParams<S>& p, const Mat<S>& seq,
                     HeadTrace<S>* trace = nullptr) {
  validate_head_config(cfg);
  if (seq.rows() != cfg.seq_len)
    throw Error("sequence length " + std::to_string(seq.rows()) + " does not match positional embedding length " +
                std::to_string(cfg.seq_len));
  if (seq.cols() != cfg.model_dim)
    throw Error("sequence width " + std::to_string(seq.cols()) + " does not match model_dim " +
                std::to_string(cfg.model_dim));
  const int C = cfg.model_dim;
  const int N = cfg.seq_len + 1;
  const int dh = C / cfg.num_heads;
  const S scale = S(1) / std::sqrt(static_cast<S>(dh));

  Mat<S> x(N, C);
  x.row(0) = p.cls.transpose();
  x.bottomRows(cfg.seq_len) = seq + p.pos;

  if (trace) trace->layers.assign(p.layers.size(), {});
  for (size_t li = 0; li < p.layers.size(); ++li) {
    const auto& l = p.layers[li];
    HeadLayerTrace<S> lt;
    lt.x_in = x;
    lt.xn = layer_norm(x, l.ln1, &lt.ln1);
    lt.q = lt.xn * l.wq.transpose();
    lt.q.rowwise() += l.bq.transpose();
    lt.k = lt.xn * l.wk.transpose();
    lt.k.rowwise() += l.bk.transpose();
    lt.v = lt.xn * l.wv.transpose();
    lt.v.rowwise() += l.bv.transpose();
    lt.concat.resize(N, C);
    lt.attn.resize(static_cast<size_t>(cfg.num_heads));
    for (int h = 0; h < cfg.num_heads; ++h) {
      const auto qh = lt.q.middleCols(h * dh, dh);
      const auto kh = lt.k.middleCols(h * dh, dh);
      const auto vh = lt.v.middleCols(h * dh, dh);
      Mat<S> scores = qh * kh.transpose() * scale;
      lt.attn[static_cast<size_t>(h)] = rowwise_softmax(scores);
      lt.concat.middleCols(h * dh, dh) = lt.attn[static_cast<size_t>(h)] * vh;
    }
    Mat<S> proj = lt.concat * l.wo.transpose();
    proj.rowwise() += l.bo.transpose();
    lt.x_mid = x + proj;

    lt.x2n = layer_norm(lt.x_mid, l.ln2, &lt.ln2);
    lt.ff_pre = lt.x2n * l.w_ff1.transpose();
    lt.ff_pre.rowwise() += l.b_ff1.transpose();
    Mat<S> ff_act = lt.ff_pre.cwiseMax(S(0));
    Mat<S> ff_out = ff_act * l.w_ff2.transpose();
    ff_out.rowwise() += l.b_ff2.transpose();
    lt.x_out = lt.x_mid + ff_out;
    x = lt.x_out;
    if (trace) trace->layers[li] = std::move(lt);
  }

  LayerNormTrace<S> lnf;
  Mat<S> xf = layer_norm(x, p.ln_final, &lnf);
  Vec<S> cls_out = xf.row(0).transpose();
  Vec<S> logits = p.w_out * cls_out + p.b_out;
  if (trace) {
    trace->ln_final = std::move(lnf);
    trace->x_final_in = std::move(x);
    trace->cls_out = std::move(cls_out);
  }
  return logits;
}

/// Backpropagates d(loss)/d(logits); accumulates into grads and returns
/// d(loss)/d(seq).
template <typename S>
Mat<S> temporal_head_backward(const TemporalHeadConfig& cfg, const HeadParams<S>& p, const HeadTrace<S>& trace,
                              const Vec<S>& d_logits, HeadParams<S>& grads) {
  const int C = cfg.model_dim;
  const int N = cfg.seq_len + 1;
  const int dh = C / cfg.num_heads;
  const S scale = S(1) / std::sqrt(static_cast<S>(dh));

  grads.w_out.noalias() += d_logits * trace.cls_out.transpose();
  grads.b_out += d_logits;
  Mat<S> dxf = Mat<S>::Zero(N, C);
  dxf.row(0) = (p.w_out.transpose() * d_logits).transpose();
  Mat<S> dx = layer_norm_backward(trace.ln_final, p.ln_final, dxf, grads.ln_final);

  for (size_t li = p.layers.size(); li-- > 0;) {
    const auto& l = p.layers[li];
    const auto& lt = trace.layers[li];
    auto& gl = grads.layers[li];

    // feed-forward block
    Mat<S> d_ff_out = dx;  // residual: dx also flows to x_mid below
    Mat<S> ff_act = lt.ff_pre.cwiseMax(S(0));
    gl.w_ff2.noalias() += d_ff_out.transpose() * ff_act;
    gl.b_ff2 += d_ff_out.colwise().sum().transpose();
    Mat<S> d_act = d_ff_out * l.w_ff2;
    Mat<S> d_pre = d_act.cwiseProduct((lt.ff_pre.array() > S(0)).template cast<S>().matrix());
    gl.w_ff1.noalias() += d_pre.transpose() * lt.x2n;
    gl.b_ff1 += d_pre.colwise().sum().transpose();
    Mat<S> d_x2n = d_pre * l.w_ff1;
    Mat<S> d_x_mid = dx + layer_norm_backward(lt.ln2, l.ln2, d_x2n, gl.ln2);

    // attention block
    Mat<S> d_proj = d_x_mid;  // residual: d_x_mid also flows to x_in below
    gl.wo.noalias() += d_proj.transpose() * lt.concat;
    gl.bo += d_proj.colwise().sum().transpose();
    Mat<S> d_concat = d_proj * l.wo;
    Mat<S> dq(N, C), dk(N, C), dv(N, C);
    for (int h = 0; h < cfg.num_heads; ++h) {
      const auto vh = lt.v.middleCols(h * dh, dh);
      const auto qh = lt.q.middleCols(h * dh, dh);
      const auto kh = lt.k.middleCols(h * dh, dh);
      const Mat<S>& attn = lt.attn[static_cast<size_t>(h)];
      const auto d_oh = d_concat.middleCols(h * dh, dh);
      Mat<S> d_attn = d_oh * vh.transpose();
      dv.middleCols(h * dh, dh) = attn.transpose() * d_oh;
      Mat<S> d_scores(N, N);
      for (int i = 0; i < N; ++i)
        d_scores.row(i) =
            softmax_backward<S>(attn.row(i).transpose(), d_attn.row(i).transpose()).transpose();
      dq.middleCols(h * dh, dh) = d_scores * kh * scale;
      dk.middleCols(h * dh, dh) = d_scores.transpose() * qh * scale;
    }
    gl.wq.noalias() += dq.transpose() * lt.xn;
    gl.bq += dq.colwise().sum().transpose();
    gl.wk.noalias() += dk.transpose() * lt.xn;
    gl.bk += dk.colwise().sum().transpose();
    gl.wv.noalias() += dv.transpose() * lt.xn;
    gl.bv += dv.colwise().sum().transpose();
    Mat<S> d_xn = dq * l.wq + dk * l.wk + dv * l.wv;
    dx = d_x_mid + layer_norm_backward(lt.ln1, l.ln1, d_xn, gl.ln1);
  }

  grads.cls += dx.row(0).transpose();
  grads.pos += dx.bottomRows(cfg.seq_len);
  return dx.bottomRows(cfg.seq_len);
}

}  // namespace actlumos::fusion
