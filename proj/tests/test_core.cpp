#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "actlumos/core/array_io.hpp"
#include "actlumos/core/hash.hpp"
#include "actlumos/core/rng.hpp"
#include "actlumos/core/types.hpp"

using namespace actlumos;

TEST_CASE("rng is deterministic and stream-separated") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng base(7);
  Rng s1 = base.stream("batch");
  Rng s2 = base.stream("init");
  Rng s1b = Rng(7).stream("batch");
  CHECK(s1.next_u64() == s1b.next_u64());
  CHECK(s1.next_u64() != s2.next_u64());
}

TEST_CASE("rng state round-trips") {
  Rng a(3);
  for (int i = 0; i < 17; ++i) a.uniform();
  const std::string st = a.state();
  Rng b(999);
  b.set_state(st);
  for (int i = 0; i < 50; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("rng distributions stay in range") {
  Rng r(11);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform(0.25, 0.5);
    CHECK(u >= 0.25);
    CHECK(u < 0.5);
    const int64_t k = r.uniform_int(-3, 4);
    CHECK(k >= -3);
    CHECK(k <= 4);
  }
}

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("array dump round-trips and is row-major") {
  Volume<float> v(2, 1, 2, 3);
  float x = 0.0f;
  for (int c = 0; c < 2; ++c)
    for (int h = 0; h < 2; ++h)
      for (int w = 0; w < 3; ++w) v.at(c, 0, h, w) = x += 1.0f;

  const std::string path = (std::filesystem::temp_directory_path() / "alm_array_test.bin").string();
  write_volume(path, v);

  const ArrayDump dump = read_array(path);
  CHECK(dump.dtype == "f32");
  CHECK(dump.dims == std::vector<int>{2, 1, 2, 3});
  // row-major: c=0 block first, each row of w fastest
  CHECK(dump.values[0] == doctest::Approx(1.0));
  CHECK(dump.values[1] == doctest::Approx(2.0));
  CHECK(dump.values[3] == doctest::Approx(4.0));
  CHECK(dump.values[6] == doctest::Approx(7.0));

  const Volume<float> back = read_volume(path);
  CHECK(back.m == v.m);
  std::filesystem::remove(path);
}

TEST_CASE("array reader rejects foreign and truncated files") {
  namespace fs = std::filesystem;
  const std::string path = (fs::temp_directory_path() / "alm_array_bad.bin").string();
  {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    std::fputs("not an array\n", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(read_array(path), Error);
  fs::remove(path);
  CHECK_THROWS_AS(read_array(path), MissingArtifact);
}

TEST_CASE("volume cast preserves layout") {
  Volume<float> v(1, 2, 2, 2);
  v.at(0, 1, 1, 0) = 0.5f;
  const Volume<double> d = v.cast<double>();
  CHECK(d.at(0, 1, 1, 0) == doctest::Approx(0.5));
  CHECK(d.at(0, 0, 0, 0) == doctest::Approx(0.0));
}
