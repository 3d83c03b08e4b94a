#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "actlumos/core/rng.hpp"
#include "actlumos/fusion/fusion.hpp"
#include "actlumos/trainer/gradcheck.hpp"

using namespace actlumos;
using namespace actlumos::fusion;

namespace {

MatD random_seq(int t, int c, Rng& rng, double scale = 1.0) {
  MatD m(t, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

}  // namespace

TEST_CASE("zeroed gate MLP yields (0.5, 0.5) at every timestep") {
  const int T = 8, C = 6;
  GateParams<double> p = GateParams<double>::zeros(C);
  Rng rng(1);
  const MatD w = dff_gate(p, random_seq(T, C, rng), random_seq(T, C, rng));
  for (int t = 0; t < T; ++t) {
    CHECK(w(t, 0) == doctest::Approx(0.5));
    CHECK(w(t, 1) == doctest::Approx(0.5));
  }
}

TEST_CASE("closed-form softmax: logits (ln 3, 0) -> (0.75, 0.25)") {
  // bias-only gate: zero weights, b2 = (ln 3, 0)
  const int C = 4;
  GateParams<double> p = GateParams<double>::zeros(C);
  p.b2(0) = std::log(3.0);
  Rng rng(2);
  const MatD w = dff_gate(p, random_seq(3, C, rng), random_seq(3, C, rng));
  for (int t = 0; t < 3; ++t) {
    CHECK(w(t, 0) == doctest::Approx(0.75).epsilon(1e-9));
    CHECK(w(t, 1) == doctest::Approx(0.25).epsilon(1e-9));
  }
}

TEST_CASE("permuting timesteps of both streams permutes gate rows identically") {
  const int T = 6, C = 5;
  Rng rng(3);
  GateParams<double> p = GateParams<double>::init(C, rng);
  const MatD d = random_seq(T, C, rng);
  const MatD r = random_seq(T, C, rng);
  const MatD w = dff_gate(p, d, r);

  std::vector<int> perm = {3, 0, 5, 1, 4, 2};
  MatD dp(T, C), rp(T, C);
  for (int t = 0; t < T; ++t) {
    dp.row(t) = d.row(perm[static_cast<size_t>(t)]);
    rp.row(t) = r.row(perm[static_cast<size_t>(t)]);
  }
  const MatD wp = dff_gate(p, dp, rp);
  for (int t = 0; t < T; ++t)
    CHECK((wp.row(t) - w.row(perm[static_cast<size_t>(t)])).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gate rows live on the 2-simplex for 1000 random inputs") {
  Rng rng(4);
  GateParams<double> p = GateParams<double>::init(8, rng);
  for (int trial = 0; trial < 1000; ++trial) {
    const MatD w = dff_gate(p, random_seq(1, 8, rng, 3.0), random_seq(1, 8, rng, 3.0));
    CHECK(w(0, 0) >= 0.0);
    CHECK(w(0, 1) >= 0.0);
    CHECK(std::abs(w(0, 0) + w(0, 1) - 1.0) <= 1e-6);
  }
}

TEST_CASE("gate shape mismatch raises") {
  Rng rng(5);
  GateParams<double> p = GateParams<double>::init(4, rng);
  CHECK_THROWS_AS(dff_gate(p, random_seq(3, 4, rng), random_seq(4, 4, rng)), Error);
  CHECK_THROWS_AS(dff_gate(p, random_seq(3, 4, rng), random_seq(3, 5, rng)), Error);
  CHECK_THROWS_AS(dff_gate(p, random_seq(3, 6, rng), random_seq(3, 6, rng)), Error);
}

TEST_CASE("fusion endpoints reproduce the pure streams exactly") {
  const int T = 5, C = 7;
  Rng rng(6);
  const MatD d = random_seq(T, C, rng);
  const MatD r = random_seq(T, C, rng);
  MatD w(T, 2);
  w.col(0).setOnes();
  w.col(1).setZero();
  CHECK(dff_fuse(d, r, w) == d);
  w.col(0).setZero();
  w.col(1).setOnes();
  CHECK(dff_fuse(d, r, w) == r);
}

TEST_CASE("equal weights on opposite streams cancel") {
  const int T = 4, C = 3;
  Rng rng(7);
  const MatD d = random_seq(T, C, rng);
  const MatD r = -d;
  MatD w = MatD::Constant(T, 2, 0.5);
  CHECK(dff_fuse(d, r, w).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fused components stay within the per-component min/max envelope") {
  Rng rng(8);
  GateParams<double> p = GateParams<double>::init(5, rng);
  for (int trial = 0; trial < 200; ++trial) {
    const MatD d = random_seq(6, 5, rng);
    const MatD r = random_seq(6, 5, rng);
    const MatD w = dff_gate(p, d, r);
    const MatD f = dff_fuse(d, r, w);
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      const double lo = std::min(d.data()[i], r.data()[i]);
      const double hi = std::max(d.data()[i], r.data()[i]);
      CHECK(f.data()[i] >= lo - 1e-9);
      CHECK(f.data()[i] <= hi + 1e-9);
    }
  }
}

TEST_CASE("weight rows off the simplex are rejected") {
  Rng rng(9);
  const MatD d = random_seq(3, 4, rng);
  const MatD r = random_seq(3, 4, rng);
  MatD w = MatD::Constant(3, 2, 0.5);
  w(1, 0) = 0.7;  // row sums to 1.2
  CHECK_THROWS_WITH_AS(dff_fuse(d, r, w), doctest::Contains("simplex"), Error);
  w(1, 0) = -0.2;
  w(1, 1) = 1.2;
  CHECK_THROWS_AS(dff_fuse(d, r, w), Error);
}

TEST_CASE("static fusion: selection and averaging projections") {
  const int T = 4, C = 5;
  Rng rng(10);
  const MatD d = random_seq(T, C, rng);
  const MatD r = random_seq(T, C, rng);

  StaticProjParams<double> sel = StaticProjParams<double>::zeros(C);
  for (int c = 0; c < C; ++c) sel.w(c, c) = 1.0;  // [I | 0]
  CHECK((static_concat_fuse(sel, d, r) - d).cwiseAbs().maxCoeff() < 1e-12);

  StaticProjParams<double> avg = StaticProjParams<double>::zeros(C);
  for (int c = 0; c < C; ++c) {
    avg.w(c, c) = 0.5;
    avg.w(c, C + c) = 0.5;
  }
  CHECK((static_concat_fuse(avg, d, r) - 0.5 * (d + r)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("static projection gradients match finite differences") {
  const int T = 3, C = 4;
  Rng rng(11);
  StaticProjParams<double> p = StaticProjParams<double>::init(C, rng);
  const MatD d = random_seq(T, C, rng);
  const MatD r = random_seq(T, C, rng);
  const MatD probe = random_seq(T, C, rng);

  ParamRefs<double> refs;
  p.collect("proj", refs);
  VecD flat = refs.flatten();
  auto loss = [&] {
    refs.unflatten(flat);
    return static_concat_fuse(p, d, r).cwiseProduct(probe).sum();
  };

  refs.unflatten(flat);
  StaticFuseTrace<double> trace;
  static_concat_fuse(p, d, r, &trace);
  StaticProjParams<double> grads = StaticProjParams<double>::zeros(C);
  MatD dd = MatD::Zero(T, C), dr = MatD::Zero(T, C);
  static_concat_fuse_backward(p, trace, probe, grads, dd, dr);
  ParamRefs<double> grefs;
  grads.collect("proj", grefs);
  const VecD analytic = grefs.flatten();

  const double h = 1e-4;
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    const double keep = flat(i);
    flat(i) = keep + h;
    const double up = loss();
    flat(i) = keep - h;
    const double down = loss();
    flat(i) = keep;
    const double fd = (up - down) / (2 * h);
    CHECK(std::abs(fd - analytic(i)) / std::max({std::abs(fd), std::abs(analytic(i)), 1e-6}) < 1e-4);
  }
}

TEST_CASE("temporal head: zeroed mixing weights make logits input-independent") {
  TemporalHeadConfig cfg{6, 2, 2, 2, 4, 5};
  Rng rng(12);
  HeadParams<double> p = HeadParams<double>::init(cfg, rng);
  for (auto& l : p.layers) {
    l.wo.setZero();
    l.bo.setZero();
    l.w_ff2.setZero();
    l.b_ff2.setZero();
  }
  const VecD a = temporal_head(cfg, p, random_seq(5, 6, rng));
  const VecD b = temporal_head(cfg, p, random_seq(5, 6, rng));
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(a.size() == 4);
}

TEST_CASE("head output shape is [K]") {
  TemporalHeadConfig cfg{8, 2, 4, 4, 10, 8};
  Rng rng(13);
  HeadParams<double> p = HeadParams<double>::init(cfg, rng);
  const VecD logits = temporal_head(cfg, p, random_seq(8, 8, rng));
  CHECK(logits.size() == 10);
  CHECK(logits.allFinite());
}

TEST_CASE("permuting timesteps changes logits when positions are distinct") {
  TemporalHeadConfig cfg{6, 1, 2, 2, 3, 4};
  Rng rng(14);
  HeadParams<double> p = HeadParams<double>::init(cfg, rng);
  const MatD seq = random_seq(4, 6, rng);
  MatD per(4, 6);
  per.row(0) = seq.row(3);
  per.row(1) = seq.row(2);
  per.row(2) = seq.row(1);
  per.row(3) = seq.row(0);
  const VecD a = temporal_head(cfg, p, seq);
  const VecD b = temporal_head(cfg, p, per);
  CHECK((a - b).cwiseAbs().maxCoeff() > 1e-8);
}

TEST_CASE("sequence length mismatch with the positional embedding raises") {
  TemporalHeadConfig cfg{6, 1, 2, 2, 3, 4};
  Rng rng(15);
  HeadParams<double> p = HeadParams<double>::init(cfg, rng);
  CHECK_THROWS_WITH_AS(temporal_head(cfg, p, random_seq(5, 6, rng)), doctest::Contains("positional"), Error);
}

TEST_CASE("head config validation") {
  CHECK_THROWS_AS(validate_head_config({7, 2, 2, 4, 10, 8}), Error);   // heads do not divide dim
  CHECK_THROWS_AS(validate_head_config({8, 0, 2, 4, 10, 8}), Error);   // no layers
  CHECK_NOTHROW(validate_head_config({8, 2, 2, 4, 10, 8}));
}

TEST_CASE("temporal head gradients match finite differences") {
  TemporalHeadConfig cfg{4, 1, 2, 2, 3, 3};
  Rng rng(16);
  HeadParams<double> p = HeadParams<double>::init(cfg, rng);
  const MatD seq = random_seq(3, 4, rng);
  const VecD probe = random_seq(3, 1, rng).col(0);

  ParamRefs<double> refs;
  p.collect("head", refs);
  VecD flat = refs.flatten();
  auto loss = [&] {
    refs.unflatten(flat);
    return temporal_head(cfg, p, seq).dot(probe);
  };

  refs.unflatten(flat);
  HeadTrace<double> trace;
  temporal_head(cfg, p, seq, &trace);
  HeadParams<double> grads = HeadParams<double>::zeros(cfg);
  temporal_head_backward(cfg, p, trace, probe, grads);
  ParamRefs<double> grefs;
  grads.collect("head", grefs);

  const auto result = actlumos::trainer::fd_compare(flat, loss, grefs.flatten());
  CHECK(result.max_rel_err < 1e-4);
  CHECK(result.skipped <= std::max<Eigen::Index>(2, result.checked / 50));
}
