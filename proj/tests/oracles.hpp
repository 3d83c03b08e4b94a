#pragma once

// Independent reference implementations used to freeze expected values.
// Deliberately written as direct scalar translations of the formulas, with
// no shared code with the library (no Eigen expressions, no log-sum-exp).

#include <cmath>
#include <vector>

namespace oracles {

using ld = long double;

inline ld dot(const std::vector<ld>& a, const std::vector<ld>& b) {
  ld s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline ld norm(const std::vector<ld>& a) { return std::sqrt(dot(a, a)); }

/// Eq.-style SupCon: per-anchor mean over positives of -log softmax over all
/// other batch members, averaged over anchors.
inline ld naive_supcon(const std::vector<std::vector<ld>>& z, const std::vector<int>& labels, ld tau) {
  const size_t B = z.size();
  ld total = 0;
  for (size_t i = 0; i < B; ++i) {
    ld denom = 0;
    for (size_t a = 0; a < B; ++a)
      if (a != i) denom += std::exp(dot(z[i], z[a]) / tau);
    ld anchor = 0;
    size_t npos = 0;
    for (size_t p = 0; p < B; ++p) {
      if (p == i || labels[p] != labels[i]) continue;
      anchor += -std::log(std::exp(dot(z[i], z[p]) / tau) / denom);
      ++npos;
    }
    total += anchor / static_cast<ld>(npos);
  }
  return total / static_cast<ld>(B);
}

/// Two-view InfoNCE with p(u,v) = exp(cos(u,v)/tau).
inline ld naive_ssl(const std::vector<std::vector<ld>>& fast, const std::vector<std::vector<ld>>& slow, ld tau) {
  const size_t B = fast.size();
  auto p = [&](const std::vector<ld>& u, const std::vector<ld>& v) {
    return std::exp(dot(u, v) / (norm(u) * norm(v)) / tau);
  };
  ld total = 0;
  for (size_t i = 0; i < B; ++i) {
    const ld pos = p(fast[i], slow[i]);
    ld denom = pos;
    for (size_t q = 0; q < B; ++q) {
      if (q == i) continue;
      denom += p(fast[i], fast[q]);
      denom += p(fast[i], slow[q]);
    }
    total += -std::log(pos / denom);
  }
  return total / static_cast<ld>(B);
}

inline ld naive_ce(const std::vector<ld>& logits, int label) {
  ld denom = 0;
  for (ld v : logits) denom += std::exp(v);
  return -std::log(std::exp(logits[static_cast<size_t>(label)]) / denom);
}

inline ld naive_kd(const std::vector<ld>& zt, const std::vector<ld>& zs, ld tau) {
  const size_t K = zt.size();
  std::vector<ld> pt(K), ps(K);
  ld st = 0, ss = 0;
  for (size_t k = 0; k < K; ++k) {
    pt[k] = std::exp(zt[k] / tau);
    ps[k] = std::exp(zs[k] / tau);
    st += pt[k];
    ss += ps[k];
  }
  ld kl = 0;
  for (size_t k = 0; k < K; ++k) {
    pt[k] /= st;
    ps[k] /= ss;
    kl += pt[k] * std::log(pt[k] / ps[k]);
  }
  return tau * tau * kl;
}

/// Brute-force border-renormalized 2-D box mean.
inline std::vector<std::vector<ld>> naive_box_mean(const std::vector<std::vector<ld>>& img, int radius) {
  const int H = static_cast<int>(img.size());
  const int W = static_cast<int>(img[0].size());
  std::vector<std::vector<ld>> out(static_cast<size_t>(H), std::vector<ld>(static_cast<size_t>(W), 0));
  for (int h = 0; h < H; ++h)
    for (int w = 0; w < W; ++w) {
      ld sum = 0;
      int count = 0;
      for (int y = std::max(0, h - radius); y <= std::min(H - 1, h + radius); ++y)
        for (int x = std::max(0, w - radius); x <= std::min(W - 1, w + radius); ++x) {
          sum += img[static_cast<size_t>(y)][static_cast<size_t>(x)];
          ++count;
        }
      out[static_cast<size_t>(h)][static_cast<size_t>(w)] = sum / count;
    }
  return out;
}

}  // namespace oracles
