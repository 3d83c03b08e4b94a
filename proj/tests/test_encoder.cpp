#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "actlumos/core/rng.hpp"
#include "actlumos/encoder/encoder.hpp"
#include "actlumos/trainer/gradcheck.hpp"

using namespace actlumos;
using namespace actlumos::encoder;

namespace {

VolumeD random_volume(int c, int t, int h, int w, Rng& rng, double lo = 0.0, double hi = 1.0) {
  VolumeD v(c, t, h, w);
  for (Eigen::Index i = 0; i < v.m.size(); ++i) v.m.data()[i] = rng.uniform(lo, hi);
  return v;
}

}  // namespace

TEST_CASE("paper-scale shape contract: [3,64,112,112] -> [512,8,7,7]") {
  EncoderConfig cfg;
  cfg.stages = {{64, 2, 4}, {256, 2, 2}, {512, 2, 2}};
  const FeatureShape s = output_shape(cfg, 64, 112, 112);
  CHECK(s.C == 512);
  CHECK(s.T == 8);
  CHECK(s.H == 7);
  CHECK(s.W == 7);
}

TEST_CASE("desk-scale default: [3,16,32,32] -> [32,8,4,4]") {
  const EncoderConfig cfg;  // defaults
  const FeatureShape s = output_shape(cfg, 16, 32, 32);
  CHECK(s.C == 32);
  CHECK(s.T == 8);
  CHECK(s.H == 4);
  CHECK(s.W == 4);
}

TEST_CASE("two-stage config from declared stride arithmetic") {
  EncoderConfig cfg;
  cfg.stages = {{16, 2, 4}, {32, 1, 2}};
  const FeatureShape s = output_shape(cfg, 16, 32, 32);
  CHECK(s.C == 32);
  CHECK(s.T == 8);
  CHECK(s.H == 4);
  CHECK(s.W == 4);

  Rng rng(1);
  EncoderParams<double> params = EncoderParams<double>::init(cfg, rng);
  const VolumeD clip = random_volume(3, 16, 32, 32, rng);
  const VolumeD fm = encode(cfg, params, clip);
  CHECK(fm.C == 32);
  CHECK(fm.T == 8);
  CHECK(fm.H == 4);
  CHECK(fm.W == 4);
}

TEST_CASE("incompatible input is rejected with computed-vs-required dims") {
  const EncoderConfig cfg;  // temporal strides (2,1,1)
  CHECK_THROWS_WITH_AS(output_shape(cfg, 15, 32, 32), doctest::Contains("temporal stride"), Error);
  CHECK_THROWS_WITH_AS(output_shape(cfg, 16, 30, 32), doctest::Contains("spatial stride"), Error);
  Rng rng(1);
  EncoderParams<double> params = EncoderParams<double>::init(cfg, rng);
  const VolumeD bad = random_volume(3, 15, 32, 32, rng);
  CHECK_THROWS_AS(encode(cfg, params, bad), Error);
}

TEST_CASE("shape contract holds for 20 random valid configs") {
  Rng rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    EncoderConfig cfg;
    const int n_stages = static_cast<int>(rng.uniform_int(1, 3));
    int t_prod = 1, s_prod = 1;
    cfg.stages.clear();
    for (int i = 0; i < n_stages; ++i) {
      const int ts = static_cast<int>(rng.uniform_int(1, 2));
      const int ss = static_cast<int>(rng.uniform_int(1, 2));
      t_prod *= ts;
      s_prod *= ss;
      cfg.stages.push_back({static_cast<int>(rng.uniform_int(2, 6)), ts, ss});
    }
    const int L = t_prod * static_cast<int>(rng.uniform_int(1, 3));
    const int H = s_prod * static_cast<int>(rng.uniform_int(2, 4));
    const int W = s_prod * static_cast<int>(rng.uniform_int(2, 4));
    const FeatureShape s = output_shape(cfg, L, H, W);
    CHECK(s.C == cfg.stages.back().out_channels);
    CHECK(s.T == L / t_prod);
    CHECK(s.H == H / s_prod);
    CHECK(s.W == W / s_prod);

    EncoderParams<double> params = EncoderParams<double>::init(cfg, rng);
    const VolumeD fm = encode(cfg, params, random_volume(3, L, H, W, rng));
    CHECK(fm.C == s.C);
    CHECK(fm.T == s.T);
    CHECK(fm.H == s.H);
    CHECK(fm.W == s.W);
  }
}

TEST_CASE("zero weights and biases give an all-zero feature map") {
  EncoderConfig cfg;
  cfg.stages = {{4, 2, 2}, {6, 1, 2}};
  EncoderParams<double> params = EncoderParams<double>::zeros(cfg);
  Rng rng(8);
  const VolumeD fm = encode(cfg, params, random_volume(3, 4, 8, 8, rng));
  CHECK(fm.m.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("spatial_gap: constants, single voxel, summation oracle") {
  VolumeD fm(3, 2, 2, 2);
  fm.m.setConstant(0.7);
  MatD seq = spatial_gap(fm);
  CHECK(seq.rows() == 2);
  CHECK(seq.cols() == 3);
  CHECK(seq.minCoeff() == doctest::Approx(0.7));
  CHECK(seq.maxCoeff() == doctest::Approx(0.7));

  fm.m.setZero();
  fm.at(1, 1, 0, 1) = 2.0;
  seq = spatial_gap(fm);
  CHECK(seq(1, 1) == doctest::Approx(2.0 / 4.0));
  CHECK(seq(0, 1) == doctest::Approx(0.0));

  Rng rng(9);
  const VolumeD rnd = random_volume(5, 3, 4, 4, rng, -1.0, 1.0);
  const MatD s2 = spatial_gap(rnd);
  for (int t = 0; t < rnd.T; ++t)
    for (int c = 0; c < rnd.C; ++c) {
      double direct = 0.0;
      for (int h = 0; h < rnd.H; ++h)
        for (int w = 0; w < rnd.W; ++w) direct += rnd.at(c, t, h, w);
      CHECK(s2(t, c) * rnd.H * rnd.W == doctest::Approx(direct).epsilon(1e-9));
    }
}

TEST_CASE("clip_embedding: axis vector, scale invariance, unit norm, degenerate error") {
  VolumeD fm(3, 1, 2, 2);
  fm.m.setZero();
  fm.m.row(0).setConstant(1.0);
  const VecD e = clip_embedding(fm);
  CHECK(e(0) == doctest::Approx(1.0));
  CHECK(e(1) == doctest::Approx(0.0));
  CHECK(e(2) == doctest::Approx(0.0));

  Rng rng(10);
  VolumeD rnd = random_volume(4, 2, 3, 3, rng, 0.1, 1.0);
  const VecD a = clip_embedding(rnd);
  VolumeD scaled = rnd;
  scaled.m *= 3.7;
  const VecD b = clip_embedding(scaled);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(a.norm() == doctest::Approx(1.0).epsilon(1e-6));

  VolumeD zero(4, 1, 2, 2);
  CHECK_THROWS_WITH_AS(clip_embedding(zero), doctest::Contains("degenerate"), Error);
}

TEST_CASE("weight sharing: one parameter set drives both streams") {
  EncoderConfig cfg;
  cfg.stages = {{4, 2, 2}, {6, 1, 2}};
  Rng rng(12);
  EncoderParams<double> params = EncoderParams<double>::init(cfg, rng);
  const VolumeD dark = random_volume(3, 4, 8, 8, rng);
  const VolumeD ret = random_volume(3, 4, 8, 8, rng);
  const VolumeD out_d1 = encode(cfg, params, dark);
  const VolumeD out_r1 = encode(cfg, params, ret);
  params.stages[0].w_sp(0, 0) += 0.25;
  const VolumeD out_d2 = encode(cfg, params, dark);
  const VolumeD out_r2 = encode(cfg, params, ret);
  CHECK(out_d1.m != out_d2.m);
  CHECK(out_r1.m != out_r2.m);
}

TEST_CASE("encoder gradient matches central finite differences on a 3-block toy config") {
  EncoderConfig cfg;
  cfg.stages = {{3, 1, 2}, {4, 2, 1}, {5, 1, 2}};
  Rng rng(14);
  EncoderParams<double> params = EncoderParams<double>::init(cfg, rng);
  const VolumeD clip = random_volume(3, 4, 8, 8, rng);
  const auto fs = output_shape(cfg, clip.T, clip.H, clip.W);
  VolumeD probe(fs.C, fs.T, fs.H, fs.W);
  for (Eigen::Index i = 0; i < probe.m.size(); ++i) probe.m.data()[i] = rng.uniform(-1.0, 1.0);

  ParamRefs<double> refs;
  params.collect("enc", refs);
  VecD flat = refs.flatten();

  auto loss = [&] {
    refs.unflatten(flat);
    const VolumeD fm = encode(cfg, params, clip);
    return fm.m.cwiseProduct(probe.m).sum();
  };

  refs.unflatten(flat);
  EncoderTrace<double> trace;
  encode(cfg, params, clip, &trace);
  EncoderParams<double> grads = EncoderParams<double>::zeros(cfg);
  encode_backward(cfg, params, trace, probe, grads);
  ParamRefs<double> grad_refs;
  grads.collect("enc", grad_refs);

  const auto result = actlumos::trainer::fd_compare(flat, loss, grad_refs.flatten());
  CHECK(result.max_rel_err < 1e-4);
  CHECK(result.skipped <= result.checked / 50);
}
