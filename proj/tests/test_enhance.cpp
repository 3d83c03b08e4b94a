#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "actlumos/clipgen/clipgen.hpp"
#include "actlumos/enhance/enhance.hpp"
#include "oracles.hpp"

using namespace actlumos;
using namespace actlumos::enhance;

namespace {

VideoClip uniform_clip(float r, float g, float b, int L = 4, int H = 16, int W = 16) {
  VideoClip c;
  c.v = Volume<float>(3, L, H, W);
  c.v.m.row(0).setConstant(r);
  c.v.m.row(1).setConstant(g);
  c.v.m.row(2).setConstant(b);
  return c;
}

}  // namespace

TEST_CASE("illumination of a uniform gray frame is the gray value") {
  const VideoClip c = uniform_clip(0.2f, 0.2f, 0.2f);
  const Mat<float> illum = estimate_illumination(c.v, 0, 3);
  CHECK(illum.minCoeff() == doctest::Approx(0.2).epsilon(1e-6));
  CHECK(illum.maxCoeff() == doctest::Approx(0.2).epsilon(1e-6));
}

TEST_CASE("illumination takes the max channel") {
  const VideoClip c = uniform_clip(0.1f, 0.5f, 0.3f);
  const Mat<float> illum = estimate_illumination(c.v, 0, 3);
  CHECK(illum.minCoeff() == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(illum.maxCoeff() == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("step edge smooths over the filter radius, against a brute-force oracle") {
  const int H = 16, W = 16, radius = 3;
  VideoClip c;
  c.v = Volume<float>(3, 1, H, W);
  for (int h = 0; h < H; ++h)
    for (int w = 0; w < W; ++w)
      for (int ch = 0; ch < 3; ++ch) c.v.at(ch, 0, h, w) = w < W / 2 ? 0.0f : 0.8f;

  std::vector<std::vector<oracles::ld>> img(H, std::vector<oracles::ld>(W));
  for (int h = 0; h < H; ++h)
    for (int w = 0; w < W; ++w) img[h][w] = w < W / 2 ? 0.0L : 0.8L;
  const auto expected = oracles::naive_box_mean(img, radius);

  const Mat<float> illum = estimate_illumination(c.v, 0, radius);
  for (int h = 0; h < H; ++h)
    for (int w = 0; w < W; ++w)
      CHECK(illum(h, w) == doctest::Approx(static_cast<double>(expected[h][w])).epsilon(1e-5));

  // ramp width equals the filter window
  CHECK(illum(8, 4) == doctest::Approx(0.0));
  CHECK(illum(8, 11) == doctest::Approx(0.8));
  CHECK(illum(8, 7) > 0.0);
  CHECK(illum(8, 8) < 0.8);
}

TEST_CASE("retinex maps a uniform 0.2 frame to 1.0 at illum_gamma=1") {
  const VideoClip c = uniform_clip(0.2f, 0.2f, 0.2f);
  RetinexParams p;
  p.illum_gamma = 1.0;
  const VideoClip out = retinex_enhance(c, p);
  CHECK(out.v.m.minCoeff() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(out.v.m.maxCoeff() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("all-zero input stays zero with no NaN or Inf") {
  const VideoClip c = uniform_clip(0.0f, 0.0f, 0.0f);
  const VideoClip out = retinex_enhance(c, {});
  CHECK(out.v.m.allFinite());
  CHECK(out.v.m.maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("retinex brightens: output >= input pointwise") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    clipgen::IlluminationProfile prof;
    prof.base_level = rng.uniform(0.05, 1.0);
    prof.noise_sigma = rng.uniform(0.0, 0.02);
    const VideoClip c = clipgen::generate_clip(static_cast<int>(rng.uniform_int(0, 9)), prof, rng.next_u64(),
                                               {8, 16, 16});
    const VideoClip out = retinex_enhance(c, {});
    CHECK(out.v.m.allFinite());
    CHECK((out.v.m.array() >= c.v.m.array() - 1e-7f).all());
  }
}

TEST_CASE("enhanced dark render lands near the bright render's mean") {
  clipgen::IlluminationProfile dark_prof, bright_prof;
  dark_prof.base_level = 0.1;
  bright_prof.base_level = 1.0;
  double worst = 0.0;
  for (int cls : {0, 4, 7}) {
    const VideoClip dark = clipgen::generate_clip(cls, dark_prof, 31, {16, 32, 32});
    const VideoClip bright = clipgen::generate_clip(cls, bright_prof, 31, {16, 32, 32});
    const VideoClip enhanced = retinex_enhance(dark, {});
    worst = std::max(worst, std::abs(static_cast<double>(enhanced.v.m.mean()) -
                                     static_cast<double>(bright.v.m.mean())));
  }
  CHECK(worst < 0.15);
}

TEST_CASE("frames are enhanced independently") {
  VideoClip c = uniform_clip(0.3f, 0.3f, 0.3f, 4);
  const VideoClip before = retinex_enhance(c, {});
  // mutate frame 2; frames 0,1,3 of the output must not change
  for (int h = 0; h < c.v.H; ++h)
    for (int w = 0; w < c.v.W; ++w) c.v.at(1, 2, h, w) = 0.9f;
  const VideoClip after = retinex_enhance(c, {});
  const Eigen::Index hw = static_cast<Eigen::Index>(c.v.H) * c.v.W;
  for (int t : {0, 1, 3})
    CHECK(before.v.m.middleCols(t * hw, hw) == after.v.m.middleCols(t * hw, hw));
  CHECK(before.v.m.middleCols(2 * hw, hw) != after.v.m.middleCols(2 * hw, hw));
}

TEST_CASE("gamma_correct basics") {
  const VideoClip c = uniform_clip(0.25f, 0.25f, 0.25f);
  const VideoClip id = gamma_correct(c, 1.0);
  CHECK(id.v.m == c.v.m);
  const VideoClip g = gamma_correct(c, 0.5);
  CHECK(g.v.m(0, 0) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK_THROWS_AS(gamma_correct(c, 0.0), Error);
  CHECK_THROWS_AS(gamma_correct(c, -0.5), Error);
  CHECK_THROWS_AS(gamma_correct(c, 1.5), Error);
}

TEST_CASE("gamma correction preserves pixel ordering") {
  Rng rng(4);
  VideoClip c;
  c.v = Volume<float>(3, 2, 8, 8);
  for (Eigen::Index i = 0; i < c.v.m.size(); ++i) c.v.m.data()[i] = static_cast<float>(rng.uniform());
  const VideoClip g = gamma_correct(c, 0.4);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index i = rng.uniform_int(0, c.v.m.size() - 1);
    const Eigen::Index j = rng.uniform_int(0, c.v.m.size() - 1);
    if (c.v.m.data()[i] < c.v.m.data()[j]) CHECK(g.v.m.data()[i] <= g.v.m.data()[j]);
  }
}

TEST_CASE("retinex params are validated") {
  RetinexParams p;
  p.smoothing_radius = 0;
  CHECK_THROWS_AS(validate_params(p), Error);
  p = {};
  p.epsilon = 0.0;
  CHECK_THROWS_AS(validate_params(p), Error);
  p = {};
  p.illum_gamma = 1.5;
  CHECK_THROWS_AS(validate_params(p), Error);
}

TEST_CASE("retinex call counter instruments every invocation") {
  const uint64_t before = retinex_call_count();
  const VideoClip c = uniform_clip(0.2f, 0.2f, 0.2f);
  retinex_enhance(c, {});
  retinex_enhance(c, {});
  CHECK(retinex_call_count() == before + 2);
}
