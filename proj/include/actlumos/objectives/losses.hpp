#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "actlumos/core/numeric.hpp"
#include "actlumos/core/types.hpp"

namespace actlumos::objectives {

/// Total plus named components; total is always the declared weighted sum.
struct LossValue {
  double total = 0.0;
  std::map<std::string, double> components;
};

enum class ViewTag { dark = 0, retinex = 1, fast = 2, slow = 3 };

/// A batch of unit-norm embeddings with labels; the currency of SupCon.
template <typename S>
struct EmbeddingBatch {
  Mat<S> embeddings;            // [B, C], rows unit-norm
  std::vector<int> labels;      // [B]
  std::vector<ViewTag> view_tags;
  std::vector<uint32_t> clip_ids;
};

template <typename S>
void validate_embedding_batch(const EmbeddingBatch<S>& b) {
  const Eigen::Index B = b.embeddings.rows();
  if (static_cast<Eigen::Index>(b.labels.size()) != B)
    throw Error("embedding batch has " + std::to_string(B) + " rows but " + std::to_string(b.labels.size()) +
                " labels");
  for (Eigen::Index i = 0; i < B; ++i) {
    const double n = static_cast<double>(b.embeddings.row(i).norm());
    if (std::abs(n - 1.0) > 1e-6)
      throw Error("embedding row " + std::to_string(i) + " is not unit-norm (|z| = " + std::to_string(n) + ")");
  }
}

/// P(i) = same-label indices excluding i; N(i) = different-label indices.
inline std::pair<std::vector<int>, std::vector<int>> positive_negative_sets(const std::vector<int>& labels,
                                                                            int anchor) {
  if (anchor < 0 || anchor >= static_cast<int>(labels.size())) throw Error("anchor index out of range");
  std::vector<int> pos, neg;
  for (int a = 0; a < static_cast<int>(labels.size()); ++a) {
    if (a == anchor) continue;
    (labels[a] == labels[anchor] ? pos : neg).push_back(a);
  }
  return {pos, neg};
}

/// Supervised contrastive loss over unit-norm rows z with integer labels.
///   L_i = -(1/|P(i)|) sum_{p in P(i)} log( exp(z_i.z_p/tau) / sum_{a!=i} exp(z_i.z_a/tau) )
///   L   = (1/B) sum_i L_i
/// Every anchor must have at least one positive. If d_z is given, the
/// gradient w.r.t. the rows of z is accumulated into it (same shape as z).
template <typename S>
S supcon_loss(const Mat<S>& z, const std::vector<int>& labels, S tau, Mat<S>* d_z = nullptr) {
  const Eigen::Index B = z.rows();
  if (!(tau > S(0))) throw Error("supcon temperature must be positive");
  if (B < 2) throw Error("supcon needs at least 2 embeddings");
  if (static_cast<Eigen::Index>(labels.size()) != B) throw Error("labels size does not match batch");

  const Mat<S> sim = (z * z.transpose()) / tau;
  Mat<S> g;  // d(loss)/d(sim)
  if (d_z) g = Mat<S>::Zero(B, B);

  S loss = S(0);
  for (Eigen::Index i = 0; i < B; ++i) {
    const auto [pos, neg] = positive_negative_sets(labels, static_cast<int>(i));
    if (pos.empty())
      throw Error("anchor " + std::to_string(i) +
                  " has no positives; SupCon batches must repeat each present class");
    // log-sum-exp over a != i
    S maxv = std::numeric_limits<S>::lowest();
    for (Eigen::Index a = 0; a < B; ++a)
      if (a != i) maxv = std::max(maxv, sim(i, a));
    S denom = S(0);
    for (Eigen::Index a = 0; a < B; ++a)
      if (a != i) denom += std::exp(sim(i, a) - maxv);
    const S lse = maxv + std::log(denom);

    S pos_sum = S(0);
    for (int p : pos) pos_sum += sim(i, p);
    loss += lse - pos_sum / static_cast<S>(pos.size());

    if (d_z) {
      const S wpos = S(1) / (static_cast<S>(pos.size()) * static_cast<S>(B));
      for (Eigen::Index a = 0; a < B; ++a)
        if (a != i) g(i, a) += std::exp(sim(i, a) - maxv) / denom / static_cast<S>(B);
      for (int p : pos) g(i, p) -= wpos;
    }
  }
  loss /= static_cast<S>(B);

  if (d_z) {
    // sim is symmetric in z: dL/dz = (G + G^T) z / tau
    d_z->noalias() += ((g + g.transpose()) * z) / tau;
  }
  return loss;
}

template <typename S>
LossValue supcon_loss(const EmbeddingBatch<S>& batch, S tau, Mat<S>* d_z = nullptr) {
  validate_embedding_batch(batch);
  const S v = supcon_loss(batch.embeddings, batch.labels, tau, d_z);
  LossValue out;
  out.total = static_cast<double>(v);
  out.components["supcon"] = out.total;
  return out;
}

/// Two-view InfoNCE over fast/slow rows (not necessarily normalized;
/// similarities are cosines). Anchor i uses its slow counterpart as the
/// positive and the 2(B-1) views of other clips as negatives.
template <typename S>
S ssl_loss(const Mat<S>& fast, const Mat<S>& slow, S tau, Mat<S>* d_fast = nullptr, Mat<S>* d_slow = nullptr) {
  const Eigen::Index B = fast.rows();
  if (!(tau > S(0))) throw Error("ssl temperature must be positive");
  if (B < 2) throw Error("ssl batch needs at least 2 clips (no negatives otherwise)");
  if (slow.rows() != B || slow.cols() != fast.cols()) throw Error("fast/slow batches have mismatched shapes");

  Mat<S> fhat(B, fast.cols()), shat(B, fast.cols());
  Vec<S> fnorm(B), snorm(B);
  for (Eigen::Index i = 0; i < B; ++i) {
    fnorm(i) = fast.row(i).norm();
    snorm(i) = slow.row(i).norm();
    if (!(fnorm(i) > S(1e-12)) || !(snorm(i) > S(1e-12)))
      throw Error("ssl row " + std::to_string(i) + " has (near-)zero norm; cosine similarity undefined");
    fhat.row(i) = fast.row(i) / fnorm(i);
    shat.row(i) = slow.row(i) / snorm(i);
  }
  const Mat<S> cff = fhat * fhat.transpose();  // cos(f_i, f_q)
  const Mat<S> cfs = fhat * shat.transpose();  // cos(f_i, s_q)

  Mat<S> dcff, dcfs;
  if (d_fast || d_slow) {
    dcff = Mat<S>::Zero(B, B);
    dcfs = Mat<S>::Zero(B, B);
  }

  S loss = S(0);
  for (Eigen::Index i = 0; i < B; ++i) {
    // terms: positive (f_i,s_i) then for q != i both (f_i,f_q) and (f_i,s_q)
    std::vector<S> terms;
    terms.reserve(static_cast<size_t>(2 * B - 1));
    terms.push_back(cfs(i, i) / tau);
    for (Eigen::Index q = 0; q < B; ++q) {
      if (q == i) continue;
      terms.push_back(cff(i, q) / tau);
      terms.push_back(cfs(i, q) / tau);
    }
    S maxv = terms[0];
    for (S t : terms) maxv = std::max(maxv, t);
    S denom = S(0);
    for (S t : terms) denom += std::exp(t - maxv);
    const S lse = maxv + std::log(denom);
    loss += lse - terms[0];

    if (d_fast || d_slow) {
      const S inv = S(1) / (static_cast<S>(B) * tau);
      size_t k = 0;
      const S a_pos = std::exp(terms[k] - maxv) / denom;
      dcfs(i, i) += (a_pos - S(1)) * inv;
      ++k;
      for (Eigen::Index q = 0; q < B; ++q) {
        if (q == i) continue;
        dcff(i, q) += std::exp(terms[k] - maxv) / denom * inv;
        ++k;
        dcfs(i, q) += std::exp(terms[k] - maxv) / denom * inv;
        ++k;
      }
    }
  }
  loss /= static_cast<S>(B);

  if (d_fast || d_slow) {
    // cosine backward: c = <u/|u|, v/|v|>, dc/du = (vhat - c*uhat)/|u|
    Mat<S> dfh = Mat<S>::Zero(B, fast.cols());
    Mat<S> dsh = Mat<S>::Zero(B, fast.cols());
    // cff contributions (note cff is used only in the upper loop rows; the
    // matrix itself is symmetric but dcff is not)
    dfh.noalias() += dcff * fhat;              // d/d fhat_i of sum_q dcff(i,q) <fhat_i, fhat_q>
    dfh.noalias() += dcff.transpose() * fhat;  // each fhat_q also appears as the second argument
    dfh.noalias() += dcfs * shat;
    dsh.noalias() += dcfs.transpose() * fhat;
    if (d_fast)
      for (Eigen::Index i = 0; i < B; ++i) {
        const Vec<S> dfh_i = dfh.row(i).transpose();
        const Vec<S> fh_i = fhat.row(i).transpose();
        d_fast->row(i) += ((dfh_i - fh_i * fh_i.dot(dfh_i)) / fnorm(i)).transpose();
      }
    if (d_slow)
      for (Eigen::Index i = 0; i < B; ++i) {
        const Vec<S> dsh_i = dsh.row(i).transpose();
        const Vec<S> sh_i = shat.row(i).transpose();
        d_slow->row(i) += ((dsh_i - sh_i * sh_i.dot(dsh_i)) / snorm(i)).transpose();
      }
  }
  return loss;
}

/// Cross-entropy with log-sum-exp stabilization.
template <typename S>
S ce_loss(const Vec<S>& logits, int label, Vec<S>* d_logits = nullptr) {
  if (label < 0 || label >= logits.size())
    throw Error("label " + std::to_string(label) + " out of range for " + std::to_string(logits.size()) +
                " classes");
  const S lse = logsumexp<S>(logits);
  if (d_logits) {
    Vec<S> p = (logits.array() - lse).exp();
    p(label) -= S(1);
    *d_logits += p;
  }
  return lse - logits(label);
}

/// tau^2 * KL(p_t^tau || p_s^tau); the teacher distribution is a constant
/// (no gradient flows to z_t).
template <typename S>
S kd_loss(const Vec<S>& z_t, const Vec<S>& z_s, S tau, Vec<S>* d_zs = nullptr) {
  if (!(tau > S(0))) throw Error("kd temperature must be positive");
  if (z_t.size() != z_s.size()) throw Error("teacher/student logits have different lengths");
  const Vec<S> ts = z_t / tau;
  const Vec<S> ss = z_s / tau;
  const S lse_t = logsumexp<S>(ts);
  const S lse_s = logsumexp<S>(ss);
  const Vec<S> pt = (ts.array() - lse_t).exp();
  const Vec<S> log_pt = ts.array() - lse_t;
  const Vec<S> log_ps = ss.array() - lse_s;
  const S kl = pt.dot((log_pt - log_ps).eval());
  if (d_zs) {
    const Vec<S> ps = (ss.array() - lse_s).exp();
    *d_zs += tau * (ps - pt);
  }
  return tau * tau * kl;
}

/// Teacher objective: mean CE over the logits batch plus lambda_sup * SupCon.
template <typename S>
LossValue teacher_loss(const std::vector<Vec<S>>& logits_batch, const std::vector<int>& labels,
                       const Mat<S>& embeddings, const std::vector<int>& emb_labels, S tau, S lambda_sup,
                       std::vector<Vec<S>>* d_logits = nullptr, Mat<S>* d_embeddings = nullptr) {
  if (logits_batch.size() != labels.size()) throw Error("teacher loss: logits/labels size mismatch");
  if (logits_batch.empty()) throw Error("teacher loss: empty batch");
  const S inv_n = S(1) / static_cast<S>(logits_batch.size());
  S ce = S(0);
  for (size_t i = 0; i < logits_batch.size(); ++i) {
    Vec<S> d = Vec<S>::Zero(logits_batch[i].size());
    ce += ce_loss(logits_batch[i], labels[i], d_logits ? &d : nullptr);
    if (d_logits) (*d_logits)[i] += d * inv_n;
  }
  ce *= inv_n;

  S sup = S(0);
  if (lambda_sup != S(0)) {
    Mat<S> d_emb = Mat<S>::Zero(embeddings.rows(), embeddings.cols());
    sup = supcon_loss(embeddings, emb_labels, tau, d_embeddings ? &d_emb : nullptr);
    if (d_embeddings) *d_embeddings += lambda_sup * d_emb;
  }

  LossValue out;
  out.components["ce"] = static_cast<double>(ce);
  out.components["supcon"] = static_cast<double>(sup);
  out.total = static_cast<double>(ce + lambda_sup * sup);
  return out;
}

/// Student objective: lambda_ce * CE + lambda_kd * KD for one sample.
template <typename S>
LossValue student_loss(const Vec<S>& z_t, const Vec<S>& z_s, int label, S tau, S lambda_ce, S lambda_kd,
                       Vec<S>* d_zs = nullptr) {
  Vec<S> d_ce = Vec<S>::Zero(z_s.size());
  Vec<S> d_kd = Vec<S>::Zero(z_s.size());
  const S ce = ce_loss(z_s, label, d_zs ? &d_ce : nullptr);
  const S kd = kd_loss(z_t, z_s, tau, d_zs ? &d_kd : nullptr);
  if (d_zs) *d_zs += lambda_ce * d_ce + lambda_kd * d_kd;
  LossValue out;
  out.components["ce"] = static_cast<double>(ce);
  out.components["kd"] = static_cast<double>(kd);
  out.total = static_cast<double>(lambda_ce * ce + lambda_kd * kd);
  return out;
}

}  // namespace actlumos::objectives
