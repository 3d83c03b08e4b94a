#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "actlumos/clipgen/clipgen.hpp"

using namespace actlumos;
using namespace actlumos::clipgen;

namespace {

const ClipDims kDims{16, 32, 32};

IlluminationProfile bright() {
  IlluminationProfile p;
  p.base_level = 1.0;
  return p;
}

}  // namespace

TEST_CASE("generate_clip is deterministic") {
  const VideoClip a = generate_clip(0, bright(), 7, kDims);
  const VideoClip b = generate_clip(0, bright(), 7, kDims);
  CHECK(a.v.m == b.v.m);
  validate_clip(a);
}

TEST_CASE("noise changes the render, seed changes the render") {
  IlluminationProfile noisy = bright();
  noisy.noise_sigma = 0.01;
  const VideoClip a = generate_clip(0, bright(), 7, kDims);
  const VideoClip b = generate_clip(0, noisy, 7, kDims);
  const VideoClip c = generate_clip(0, bright(), 8, kDims);
  CHECK(a.v.m != b.v.m);
  CHECK(a.v.m != c.v.m);
}

TEST_CASE("multiplicative illumination bounds the mean") {
  for (int cls : {0, 3, 8}) {
    IlluminationProfile dim = bright();
    dim.base_level = 0.1;
    const VideoClip full = generate_clip(cls, bright(), 21, kDims);
    const VideoClip low = generate_clip(cls, dim, 21, kDims);
    CHECK(low.v.m.mean() <= 0.1 * full.v.m.mean() + 1e-6);
  }
}

TEST_CASE("distinct classes differ in at least 1% of voxels") {
  const VideoClip a = generate_clip(0, bright(), 55, kDims);
  const VideoClip b = generate_clip(1, bright(), 55, kDims);
  Eigen::Index differing = 0;
  for (Eigen::Index i = 0; i < a.v.m.size(); ++i)
    if (a.v.m.data()[i] != b.v.m.data()[i]) ++differing;
  CHECK(static_cast<double>(differing) / static_cast<double>(a.v.m.size()) >= 0.01);
}

TEST_CASE("every class pair is distinguishable") {
  for (int c1 = 0; c1 < motion_program_count(); ++c1)
    for (int c2 = c1 + 1; c2 < motion_program_count(); ++c2) {
      const VideoClip a = generate_clip(c1, bright(), 99, kDims);
      const VideoClip b = generate_clip(c2, bright(), 99, kDims);
      CHECK(a.v.m != b.v.m);
    }
}

TEST_CASE("illumination monotonicity holds pre-noise") {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const int cls = static_cast<int>(rng.uniform_int(0, motion_program_count() - 1));
    const uint64_t seed = rng.next_u64();
    IlluminationProfile hi = bright();
    hi.base_level = rng.uniform(0.5, 1.0);
    IlluminationProfile lo = hi;
    lo.base_level = hi.base_level * rng.uniform(0.2, 0.9);
    const VideoClip a = generate_clip_prenoise(cls, hi, seed, kDims);
    const VideoClip b = generate_clip_prenoise(cls, lo, seed, kDims);
    CHECK((b.v.m.array() <= a.v.m.array() + 1e-7f).all());
  }
}

TEST_CASE("modulation segments override the base level") {
  IlluminationProfile p = bright();
  p.modulation.push_back({4, 8, 0.05});
  CHECK(level_at(p, 3) == doctest::Approx(1.0));
  CHECK(level_at(p, 4) == doctest::Approx(0.05));
  CHECK(level_at(p, 7) == doctest::Approx(0.05));
  CHECK(level_at(p, 8) == doctest::Approx(1.0));
  CHECK(has_transition(p));
}

TEST_CASE("profile validation rejects bad segments") {
  IlluminationProfile p = bright();
  p.modulation.push_back({4, 8, 0.5});
  p.modulation.push_back({6, 10, 0.5});  // overlap
  CHECK_THROWS_AS(validate_profile(p, 16), Error);
  p.modulation = {{4, 4, 0.5}};  // empty
  CHECK_THROWS_AS(validate_profile(p, 16), Error);
  p.modulation = {{4, 20, 0.5}};  // past the end
  CHECK_THROWS_AS(validate_profile(p, 16), Error);
  p.modulation = {{4, 8, 1.5}};  // level out of range
  CHECK_THROWS_AS(validate_profile(p, 16), Error);
}

TEST_CASE("invalid class and dims are rejected with messages") {
  CHECK_THROWS_WITH_AS(generate_clip(motion_program_count(), bright(), 1, kDims),
                       doctest::Contains("invalid class_id"), Error);
  CHECK_THROWS_WITH_AS(generate_clip(0, bright(), 1, ClipDims{1, 32, 32}), doctest::Contains("below minimum"),
                       Error);
  CHECK_THROWS_WITH_AS(generate_clip(0, bright(), 1, ClipDims{16, 4, 32}), doctest::Contains("below minimum"),
                       Error);
}

TEST_CASE("generate_dataset: counts, balance, split sizes") {
  const SyntheticDataset ds = generate_dataset(10, 40, kDims, 1);
  CHECK(ds.clips.size() == 400);
  CHECK(ds.ids_in_split(Split::train).size() == 280);
  CHECK(ds.ids_in_split(Split::val).size() == 40);
  CHECK(ds.ids_in_split(Split::test).size() == 80);

  std::vector<int> per_class(10, 0);
  for (const ClipRecord& r : ds.clips) ++per_class[static_cast<size_t>(r.class_id)];
  for (int c : per_class) CHECK(c == 40);
}

TEST_CASE("generate_dataset is deterministic") {
  const SyntheticDataset a = generate_dataset(4, 8, kDims, 9);
  const SyntheticDataset b = generate_dataset(4, 8, kDims, 9);
  CHECK(a == b);
  const SyntheticDataset c = generate_dataset(4, 8, kDims, 10);
  CHECK_FALSE(a == c);
}

TEST_CASE("minimal dataset puts every class in every split") {
  const SyntheticDataset ds = generate_dataset(2, 4, kDims, 3);
  for (Split s : {Split::train, Split::val, Split::test}) {
    std::set<int> classes;
    for (uint32_t id : ds.ids_in_split(s)) classes.insert(ds.record(id).class_id);
    CHECK(classes == std::set<int>{0, 1});
  }
}

TEST_CASE("roughly half the clips carry an illumination transition") {
  const SyntheticDataset ds = generate_dataset(10, 40, kDims, 1);
  int transitions = 0;
  for (const ClipRecord& r : ds.clips)
    if (has_transition(r.profile)) ++transitions;
  CHECK(transitions > 140);
  CHECK(transitions < 260);
}

TEST_CASE("insufficient clips_per_class is rejected") {
  CHECK_THROWS_WITH_AS(generate_dataset(4, 2, kDims, 1), doctest::Contains("clips_per_class"), Error);
  CHECK_THROWS_AS(generate_dataset(1, 8, kDims, 1), Error);
  CHECK_THROWS_AS(generate_dataset(motion_program_count() + 1, 8, kDims, 1), Error);
}

TEST_CASE("manifest round-trip is exact") {
  const SyntheticDataset ds = generate_dataset(5, 8, kDims, 77);
  const std::string path = (std::filesystem::temp_directory_path() / "alm_ds_test.json").string();
  save_dataset(ds, path);
  const SyntheticDataset back = load_dataset(path);
  CHECK(back == ds);
  std::filesystem::remove(path);
}

TEST_CASE("manifest version and integrity errors") {
  namespace fs = std::filesystem;
  const SyntheticDataset ds = generate_dataset(3, 4, kDims, 5);
  const std::string path = (fs::temp_directory_path() / "alm_ds_bad.json").string();
  save_dataset(ds, path);

  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();

  {
    std::string tampered = text;
    tampered.replace(tampered.find("\"version\": 1"), 12, "\"version\": 9");
    std::ofstream out(path);
    out << tampered;
    out.close();
    CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("version"), Error);
  }
  {
    // duplicate a clip id
    std::string tampered = text;
    const size_t pos = tampered.find("\"id\": 1");
    tampered.replace(pos, 7, "\"id\": 0");
    std::ofstream out(path);
    out << tampered;
    out.close();
    CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("duplicate"), Error);
  }
  {
    std::ofstream out(path);
    out << "{ not json";
    out.close();
    CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("corrupt"), Error);
  }
  fs::remove(path);
  CHECK_THROWS_AS(load_dataset(path), MissingArtifact);
}

TEST_CASE("nearest-centroid on frame means beats chance at full light") {
  // sanity floor for the benchmark: per-frame mean brightness profiles carry
  // some class signal even for this trivial classifier
  const int K = 10, n_train = 16, n_test = 10;
  const ClipDims dims{16, 32, 32};
  std::vector<std::vector<double>> centroids(K, std::vector<double>(16, 0.0));
  Rng rng(5);
  for (int c = 0; c < K; ++c) {
    for (int i = 0; i < n_train; ++i) {
      const VideoClip clip = generate_clip(c, bright(), rng.next_u64(), dims);
      for (int t = 0; t < 16; ++t) {
        const Eigen::Index hw = static_cast<Eigen::Index>(32) * 32;
        centroids[c][t] += clip.v.m.middleCols(t * hw, hw).mean() / n_train;
      }
    }
  }
  int correct = 0, total = 0;
  for (int c = 0; c < K; ++c) {
    for (int i = 0; i < n_test; ++i) {
      const VideoClip clip = generate_clip(c, bright(), rng.next_u64(), dims);
      std::vector<double> feat(16);
      for (int t = 0; t < 16; ++t) {
        const Eigen::Index hw = static_cast<Eigen::Index>(32) * 32;
        feat[t] = clip.v.m.middleCols(t * hw, hw).mean();
      }
      int best = -1;
      double best_d = 1e18;
      for (int k = 0; k < K; ++k) {
        double d = 0;
        for (int t = 0; t < 16; ++t) d += (feat[t] - centroids[k][t]) * (feat[t] - centroids[k][t]);
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      correct += (best == c);
      ++total;
    }
  }
  CHECK(static_cast<double>(correct) / total > 0.15);  // chance is 0.10
}
