#include "actlumos/trainer/verify.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "actlumos/clipgen/clipgen.hpp"
#include "actlumos/enhance/enhance.hpp"
#include "actlumos/fusion/fusion.hpp"
#include "actlumos/objectives/losses.hpp"
#include "actlumos/sampler/sampler.hpp"
#include "actlumos/trainer/gradcheck.hpp"

namespace actlumos::trainer {

namespace {

MatD unit_rows(MatD m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) m.row(i) /= m.row(i).norm();
  return m;
}

MatD random_mat(int r, int c, Rng& rng, double scale = 1.0) {
  MatD m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

}  // namespace

std::vector<VerifyCheck> run_verification(int grad_instances) {
  std::vector<VerifyCheck> checks;
  auto add = [&checks](const std::string& name, const std::function<std::pair<bool, std::string>()>& fn) {
    VerifyCheck c;
    c.name = name;
    try {
      auto [ok, detail] = fn();
      c.pass = ok;
      c.detail = detail;
    } catch (const std::exception& e) {
      c.pass = false;
      c.detail = std::string("exception: ") + e.what();
    }
    checks.push_back(std::move(c));
  };

  // gradient suite
  for (const std::string& name : grad_check_names()) {
    add("grad." + name, [name, grad_instances]() -> std::pair<bool, std::string> {
      const GradCheckReport r = grad_check_suite(name, grad_instances);
      std::ostringstream os;
      os << "max rel err " << r.max_rel_err << " over " << r.instances << " instances";
      return {r.pass, os.str()};
    });
  }

  // frozen loss oracles
  add("oracle.supcon_uniform_log15", []() -> std::pair<bool, std::string> {
    MatD z(16, 8);
    VecD e = VecD::Zero(8);
    e(0) = 1.0;
    for (int i = 0; i < 16; ++i) z.row(i) = e.transpose();
    std::vector<int> labels;
    for (int c = 0; c < 4; ++c)
      for (int v = 0; v < 4; ++v) labels.push_back(c);
    const double loss = objectives::supcon_loss<double>(z, labels, 0.1);
    return {near(loss, std::log(15.0), 1e-9), "got " + std::to_string(loss)};
  });
  add("oracle.supcon_two_class", []() -> std::pair<bool, std::string> {
    MatD z(4, 2);
    z << 1, 0, 1, 0, 0, 1, 0, 1;
    const double loss = objectives::supcon_loss<double>(z, {0, 0, 1, 1}, 0.1);
    return {near(loss, std::log(1.0 + 2.0 * std::exp(-10.0)), 1e-9), "got " + std::to_string(loss)};
  });
  add("oracle.ssl_micro", []() -> std::pair<bool, std::string> {
    MatD f(2, 2), s(2, 2);
    f << 1, 0, 0, 1;
    s << 1, 0, 0, 1;
    const double loss = objectives::ssl_loss<double>(f, s, 0.5);
    return {near(loss, std::log(1.0 + 2.0 * std::exp(-2.0)), 1e-9), "got " + std::to_string(loss)};
  });
  add("oracle.kd_worked_example", []() -> std::pair<bool, std::string> {
    VecD zt(2), zs(2);
    zt << 4, 0;
    zs << 0, 0;
    const double got = objectives::kd_loss<double>(zt, zs, 4.0);
    // independent recomputation
    const double pt0 = std::exp(1.0) / (std::exp(1.0) + 1.0);
    const double want = 16.0 * (pt0 * std::log(pt0 / 0.5) + (1 - pt0) * std::log((1 - pt0) / 0.5));
    return {near(got, want, 1e-3), "got " + std::to_string(got) + " want " + std::to_string(want)};
  });
  add("oracle.ce_uniform_logK", []() -> std::pair<bool, std::string> {
    const double loss = objectives::ce_loss<double>(VecD::Zero(10), 7);
    return {near(loss, std::log(10.0), 1e-9), "got " + std::to_string(loss)};
  });
  add("oracle.supcon_tau_limit", []() -> std::pair<bool, std::string> {
    Rng rng(3);
    const MatD z = unit_rows(random_mat(8, 5, rng));
    std::vector<int> labels = {0, 0, 0, 0, 1, 1, 1, 1};
    const double loss = objectives::supcon_loss<double>(z, labels, 1e6);
    return {near(loss, std::log(7.0), 1e-3), "got " + std::to_string(loss)};
  });
  add("oracle.ssl_orthonormal_closed_form", []() -> std::pair<bool, std::string> {
    MatD rows = MatD::Identity(4, 4);
    const double loss = objectives::ssl_loss<double>(rows, rows, 0.5);
    return {near(loss, std::log(1.0 + 6.0 * std::exp(-2.0)), 1e-9), "got " + std::to_string(loss)};
  });

  // batch construction
  add("batch.supcon_3pos_12neg", []() -> std::pair<bool, std::string> {
    std::vector<int> labels;
    for (int c = 0; c < 4; ++c)
      for (int v = 0; v < 4; ++v) labels.push_back(c);
    for (int i = 0; i < 16; ++i) {
      const auto [pos, neg] = objectives::positive_negative_sets(labels, i);
      if (pos.size() != 3 || neg.size() != 12) return {false, "anchor " + std::to_string(i)};
    }
    return {true, "16 anchors"};
  });
  add("batch.balanced_sampler_structure", []() -> std::pair<bool, std::string> {
    const auto ds = clipgen::generate_dataset(6, 8, {16, 32, 32}, 11);
    Rng rng(2);
    for (int draw = 0; draw < 1000; ++draw) {
      const auto batch = sampler::balanced_batch(ds, 4, 2, rng);
      std::map<int, int> per_class;
      for (const auto& [id, cls] : batch) ++per_class[cls];
      if (per_class.size() != 4) return {false, "draw " + std::to_string(draw)};
      for (const auto& [cls, count] : per_class)
        if (count != 2) return {false, "draw " + std::to_string(draw)};
    }
    return {true, "1000 draws"};
  });
  add("batch.supcon_rejects_lonely_anchor", []() -> std::pair<bool, std::string> {
    Rng rng(5);
    const MatD z = unit_rows(random_mat(4, 3, rng));
    try {
      objectives::supcon_loss<double>(z, {0, 1, 2, 3}, 0.1);
      return {false, "no error raised"};
    } catch (const Error&) {
      return {true, ""};
    }
  });

  // fusion invariants
  add("fusion.gate_simplex_1000", []() -> std::pair<bool, std::string> {
    Rng rng(4);
    auto gate = fusion::GateParams<double>::init(8, rng);
    for (int trial = 0; trial < 1000; ++trial) {
      const MatD d = random_mat(1, 8, rng, 3.0);
      const MatD r = random_mat(1, 8, rng, 3.0);
      const MatD w = fusion::dff_gate(gate, d, r);
      if (w(0, 0) < -1e-6 || w(0, 1) < -1e-6 || std::abs(w(0, 0) + w(0, 1) - 1.0) > 1e-6)
        return {false, "trial " + std::to_string(trial)};
    }
    return {true, "1000 evaluations"};
  });
  add("fusion.endpoint_exactness", []() -> std::pair<bool, std::string> {
    Rng rng(6);
    const MatD d = random_mat(5, 7, rng);
    const MatD r = random_mat(5, 7, rng);
    MatD w(5, 2);
    w.col(0).setOnes();
    w.col(1).setZero();
    if (fusion::dff_fuse(d, r, w) != d) return {false, "dark endpoint"};
    w.col(0).setZero();
    w.col(1).setOnes();
    if (fusion::dff_fuse(d, r, w) != r) return {false, "retinex endpoint"};
    return {true, ""};
  });
  add("fusion.convex_envelope", []() -> std::pair<bool, std::string> {
    Rng rng(7);
    auto gate = fusion::GateParams<double>::init(5, rng);
    for (int trial = 0; trial < 200; ++trial) {
      const MatD d = random_mat(6, 5, rng);
      const MatD r = random_mat(6, 5, rng);
      const MatD f = fusion::dff_fuse(d, r, fusion::dff_gate(gate, d, r));
      for (Eigen::Index i = 0; i < f.size(); ++i)
        if (f.data()[i] < std::min(d.data()[i], r.data()[i]) - 1e-9 ||
            f.data()[i] > std::max(d.data()[i], r.data()[i]) + 1e-9)
          return {false, "component escape at trial " + std::to_string(trial)};
    }
    return {true, "200 trials"};
  });

  // enhancement invariants
  add("retinex.finite_on_random_clips", []() -> std::pair<bool, std::string> {
    Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
      VideoClip c;
      c.v = Volume<float>(3, 4, 12, 12);
      for (Eigen::Index i = 0; i < c.v.m.size(); ++i)
        c.v.m.data()[i] = static_cast<float>(rng.uniform());
      const VideoClip out = enhance::retinex_enhance(c, {});
      if (!out.v.m.allFinite()) return {false, "non-finite at trial " + std::to_string(trial)};
    }
    return {true, "100 random clips"};
  });
  add("retinex.brightening", []() -> std::pair<bool, std::string> {
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
      VideoClip c;
      c.v = Volume<float>(3, 2, 10, 10);
      for (Eigen::Index i = 0; i < c.v.m.size(); ++i)
        c.v.m.data()[i] = static_cast<float>(rng.uniform());
      const VideoClip out = enhance::retinex_enhance(c, {});
      if (((out.v.m.array() + 1e-7f) < c.v.m.array()).any()) return {false, "darkened pixel"};
    }
    return {true, "pointwise output >= input"};
  });
  add("retinex.uniform_02_maps_to_1", []() -> std::pair<bool, std::string> {
    VideoClip c;
    c.v = Volume<float>(3, 2, 12, 12);
    c.v.m.setConstant(0.2f);
    enhance::RetinexParams p;
    p.illum_gamma = 1.0;
    const VideoClip out = enhance::retinex_enhance(c, p);
    const double lo = out.v.m.minCoeff(), hi = out.v.m.maxCoeff();
    return {near(lo, 1.0, 1e-6) && near(hi, 1.0, 1e-6), "range [" + std::to_string(lo) + "," +
                                                            std::to_string(hi) + "]"};
  });
  add("retinex.zero_input_stays_zero", []() -> std::pair<bool, std::string> {
    VideoClip c;
    c.v = Volume<float>(3, 2, 12, 12);
    c.v.m.setZero();
    const VideoClip out = enhance::retinex_enhance(c, {});
    return {out.v.m.allFinite() && out.v.m.maxCoeff() == 0.0f, ""};
  });
  add("enhance.gamma_identity_and_monotone", []() -> std::pair<bool, std::string> {
    Rng rng(10);
    VideoClip c;
    c.v = Volume<float>(3, 2, 8, 8);
    for (Eigen::Index i = 0; i < c.v.m.size(); ++i) c.v.m.data()[i] = static_cast<float>(rng.uniform());
    if (enhance::gamma_correct(c, 1.0).v.m != c.v.m) return {false, "identity"};
    const VideoClip g = enhance::gamma_correct(c, 0.5);
    for (int trial = 0; trial < 100; ++trial) {
      const Eigen::Index i = rng.uniform_int(0, c.v.m.size() - 1);
      const Eigen::Index j = rng.uniform_int(0, c.v.m.size() - 1);
      if (c.v.m.data()[i] < c.v.m.data()[j] && g.v.m.data()[i] > g.v.m.data()[j])
        return {false, "ordering broken"};
    }
    return {true, ""};
  });

  // generator invariants
  add("clipgen.determinism", []() -> std::pair<bool, std::string> {
    clipgen::IlluminationProfile p;
    p.noise_sigma = 0.01;
    const VideoClip a = clipgen::generate_clip(2, p, 123, {16, 32, 32});
    const VideoClip b = clipgen::generate_clip(2, p, 123, {16, 32, 32});
    return {a.v.m == b.v.m, ""};
  });
  add("clipgen.illumination_monotone", []() -> std::pair<bool, std::string> {
    clipgen::IlluminationProfile hi, lo;
    hi.base_level = 0.9;
    lo.base_level = 0.3;
    const VideoClip a = clipgen::generate_clip_prenoise(4, hi, 9, {16, 32, 32});
    const VideoClip b = clipgen::generate_clip_prenoise(4, lo, 9, {16, 32, 32});
    return {((b.v.m.array() <= a.v.m.array() + 1e-7f).all()), ""};
  });
  add("clipgen.classes_distinct", []() -> std::pair<bool, std::string> {
    clipgen::IlluminationProfile p;
    const VideoClip a = clipgen::generate_clip(0, p, 55, {16, 32, 32});
    const VideoClip b = clipgen::generate_clip(1, p, 55, {16, 32, 32});
    Eigen::Index diff = 0;
    for (Eigen::Index i = 0; i < a.v.m.size(); ++i)
      if (a.v.m.data()[i] != b.v.m.data()[i]) ++diff;
    const double frac = static_cast<double>(diff) / static_cast<double>(a.v.m.size());
    return {frac >= 0.01, std::to_string(100.0 * frac) + "% voxels differ"};
  });
  add("clipgen.split_arithmetic", []() -> std::pair<bool, std::string> {
    const auto ds = clipgen::generate_dataset(10, 40, {16, 32, 32}, 1);
    return {ds.clips.size() == 400 && ds.ids_in_split(clipgen::Split::train).size() == 280,
            std::to_string(ds.clips.size()) + " clips"};
  });

  // sampler invariants
  add("sampler.view_independence_chi_square", []() -> std::pair<bool, std::string> {
    sampler::AugmentParams p;
    Rng rng(14);
    int counts[2][2] = {{0, 0}, {0, 0}};
    const int n = 1000;
    for (int i = 0; i < n; ++i) {
      const auto a = sampler::draw_augment(p, 16, 16, rng);
      const auto b = sampler::draw_augment(p, 16, 16, rng);
      ++counts[a.flip ? 1 : 0][b.flip ? 1 : 0];
    }
    const double row0 = counts[0][0] + counts[0][1], row1 = counts[1][0] + counts[1][1];
    const double col0 = counts[0][0] + counts[1][0], col1 = counts[0][1] + counts[1][1];
    double chi2 = 0.0;
    const double table[2][2] = {{row0 * col0 / n, row0 * col1 / n}, {row1 * col0 / n, row1 * col1 / n}};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        chi2 += (counts[i][j] - table[i][j]) * (counts[i][j] - table[i][j]) / table[i][j];
    return {chi2 < 6.635, "chi2 = " + std::to_string(chi2)};
  });
  add("sampler.two_view_determinism", []() -> std::pair<bool, std::string> {
    clipgen::IlluminationProfile prof;
    const VideoClip c = clipgen::generate_clip(3, prof, 5, {16, 32, 32});
    sampler::AugmentParams p;
    Rng a(3), b(3);
    const auto [f1, s1] = sampler::two_view(c, p, a);
    const auto [f2, s2] = sampler::two_view(c, p, b);
    return {f1.v.m == f2.v.m && s1.v.m == s2.v.m, ""};
  });

  // numerical stability
  add("losses.stable_at_1e3_magnitudes", []() -> std::pair<bool, std::string> {
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
      const VecD a = random_mat(6, 1, rng, 1e3).col(0);
      const VecD b = random_mat(6, 1, rng, 1e3).col(0);
      if (!std::isfinite(objectives::ce_loss<double>(a, 0))) return {false, "ce"};
      if (!std::isfinite(objectives::kd_loss<double>(a, b, 4.0))) return {false, "kd"};
      const MatD f = random_mat(3, 4, rng, 1e3);
      const MatD s = random_mat(3, 4, rng, 1e3);
      if (!std::isfinite(objectives::ssl_loss<double>(f, s, 1e-3))) return {false, "ssl"};
    }
    return {true, ""};
  });
  add("losses.kd_nonnegative", []() -> std::pair<bool, std::string> {
    Rng rng(15);
    for (int trial = 0; trial < 1000; ++trial) {
      const VecD a = random_mat(5, 1, rng, 2.0).col(0);
      const VecD b = random_mat(5, 1, rng, 2.0).col(0);
      if (objectives::kd_loss<double>(a, b, 4.0) < -1e-12) return {false, "negative KL"};
    }
    return {true, "1000 pairs"};
  });
  add("losses.embedding_unit_norm_enforced", []() -> std::pair<bool, std::string> {
    objectives::EmbeddingBatch<double> batch;
    batch.embeddings = MatD::Constant(2, 3, 0.5);
    batch.labels = {0, 0};
    try {
      objectives::validate_embedding_batch(batch);
      return {false, "accepted non-unit rows"};
    } catch (const Error&) {
      return {true, ""};
    }
  });

  return checks;
}

}  // namespace actlumos::trainer
