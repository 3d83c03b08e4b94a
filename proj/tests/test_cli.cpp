#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "actlumos/core/array_io.hpp"
#include "actlumos/core/hash.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(ACTLUMOS_BIN) + " " + args + " 2>&1";
  std::array<char, 4096> buf{};
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (fgets(buf.data(), buf.size(), pipe)) r.output += buf.data();
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("alm_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& sub) const { return (path / sub).string(); }
};

// small config shared by the training commands
const char* kTinyConfig = R"({
  "epochs": 2,
  "encoder": {"channels": [8, 16], "temporal_strides": [2, 1], "spatial_strides": [2, 2]},
  "head": {"num_heads": 4},
  "n_c": 2, "n_v": 2, "b_u": 4, "b_kd": 4,
  "augment": {"out_frames": 4}
})";

}  // namespace

TEST_CASE("gen-data: manifest on disk, idempotent hash, usage errors") {
  TempDir tmp;
  const std::string manifest = tmp.str("ds.json");
  const auto first =
      run("gen-data --classes 3 --per-class 4 --dims 8x16x16 --seed 1 --out " + manifest);
  CHECK(first.exit_code == 0);
  REQUIRE(fs::exists(manifest));
  const std::string hash1 = actlumos::sha256_file(manifest);

  const auto second =
      run("gen-data --classes 3 --per-class 4 --dims 8x16x16 --seed 1 --out " + manifest);
  CHECK(second.exit_code == 0);
  CHECK(actlumos::sha256_file(manifest) == hash1);

  CHECK(fs::exists(tmp.path / "run_manifest.json"));

  const auto bad = run("gen-data --classes 3 --per-class 2 --out " + tmp.str("bad.json"));
  CHECK(bad.exit_code == 2);  // insufficiency is a usage error
  CHECK(bad.output.find("clips_per_class") != std::string::npos);

  const auto bad_dims = run("gen-data --dims banana --out " + tmp.str("bad2.json"));
  CHECK(bad_dims.exit_code == 2);

  const auto unknown_flag = run("gen-data --frobnicate 7");
  CHECK(unknown_flag.exit_code == 2);
}

TEST_CASE("enhance writes array dumps in the documented format") {
  TempDir tmp;
  const std::string manifest = tmp.str("ds.json");
  REQUIRE(run("gen-data --classes 2 --per-class 4 --dims 8x16x16 --seed 3 --out " + manifest).exit_code == 0);

  const auto enh = run("enhance --in " + manifest + " --out " + tmp.str("enh") + " --mode retinex");
  CHECK(enh.exit_code == 0);
  const std::string one = tmp.str("enh/clip_00000.arr");
  REQUIRE(fs::exists(one));
  const actlumos::ArrayDump dump = actlumos::read_array(one);
  CHECK(dump.dtype == "f32");
  CHECK(dump.dims == std::vector<int>{3, 8, 16, 16});
  for (double v : dump.values) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }

  const auto gamma = run("enhance --in " + manifest + " --out " + tmp.str("gam") + " --mode gamma --gamma 0.5");
  CHECK(gamma.exit_code == 0);

  const auto bad_mode = run("enhance --in " + manifest + " --out x --mode sepia");
  CHECK(bad_mode.exit_code == 2);

  const auto missing = run("enhance --in " + tmp.str("nope.json") + " --out x --mode retinex");
  CHECK(missing.exit_code == 3);
}

TEST_CASE("train pipeline: teacher, ssl, distill, epoch line format, exit codes") {
  TempDir tmp;
  const std::string manifest = tmp.str("ds.json");
  const std::string config = tmp.str("config.json");
  {
    std::ofstream out(config);
    out << kTinyConfig;
  }
  REQUIRE(run("gen-data --classes 3 --per-class 6 --dims 8x16x16 --seed 4 --out " + manifest).exit_code == 0);

  // missing required upstream artifact flag
  const auto no_teacher = run("train --stage distill --data " + manifest + " --config " + config);
  CHECK(no_teacher.exit_code == 2);
  CHECK(no_teacher.output.find("--teacher-ckpt") != std::string::npos);

  // teacher
  const auto teacher = run("train --stage teacher --data " + manifest + " --config " + config +
                           " --seed 2 --out " + tmp.str("teacher"));
  CHECK(teacher.exit_code == 0);
  CHECK(teacher.output.find("epoch=1 stage=teacher loss=") != std::string::npos);
  CHECK(teacher.output.find("top1=") != std::string::npos);
  REQUIRE(fs::exists(tmp.str("teacher/checkpoint.alck")));
  CHECK(fs::exists(tmp.str("teacher/history.jsonl")));
  CHECK(fs::exists(tmp.str("teacher/run_manifest.json")));

  // fingerprints differ across fusion variants
  const auto teacher_static = run("train --stage teacher --fusion static --data " + manifest + " --config " +
                                  config + " --seed 2 --out " + tmp.str("teacher_static"));
  CHECK(teacher_static.exit_code == 0);
  std::string fp1 = teacher.output.substr(teacher.output.find("fingerprint="));
  std::string fp2 = teacher_static.output.substr(teacher_static.output.find("fingerprint="));
  CHECK(fp1 != fp2);

  // ssl
  const auto ssl = run("train --stage ssl --data " + manifest + " --config " + config + " --seed 2 --out " +
                       tmp.str("ssl"));
  CHECK(ssl.exit_code == 0);
  CHECK(ssl.output.find("stage=ssl") != std::string::npos);

  // distill with both checkpoints
  const auto distill = run("train --stage distill --data " + manifest + " --config " + config +
                           " --seed 2 --teacher-ckpt " + tmp.str("teacher/checkpoint.alck") + " --ssl-ckpt " +
                           tmp.str("ssl/checkpoint.alck") + " --out " + tmp.str("student"));
  CHECK(distill.exit_code == 0);
  CHECK(distill.output.find("stage=distill") != std::string::npos);

  // missing checkpoint artifact
  const auto missing = run("train --stage distill --data " + manifest + " --config " + config +
                           " --teacher-ckpt " + tmp.str("nope.alck"));
  CHECK(missing.exit_code == 3);

  // resume with a different config is a failure
  const auto resume_bad = run("train --stage teacher --data " + manifest + " --config " + config +
                              " --seed 3 --resume " + tmp.str("teacher/checkpoint.alck"));
  CHECK(resume_bad.exit_code == 1);
  CHECK(resume_bad.output.find("fingerprint") != std::string::npos);

  // idempotence: same flags and seed reproduce the checkpoint hash
  const auto again = run("train --stage teacher --data " + manifest + " --config " + config +
                         " --seed 2 --out " + tmp.str("teacher_again"));
  CHECK(again.exit_code == 0);
  CHECK(actlumos::sha256_file(tmp.str("teacher/checkpoint.alck")) ==
        actlumos::sha256_file(tmp.str("teacher_again/checkpoint.alck")));
}

TEST_CASE("ablate: unknown suite is a usage error; supcon suite emits tables") {
  TempDir tmp;
  const std::string manifest = tmp.str("ds.json");
  const std::string config = tmp.str("config.json");
  {
    std::ofstream out(config);
    out << kTinyConfig;
  }
  REQUIRE(run("gen-data --classes 3 --per-class 6 --dims 8x16x16 --seed 4 --out " + manifest).exit_code == 0);

  const auto bad = run("ablate --suite nonsense --data " + manifest);
  CHECK(bad.exit_code == 2);

  const auto missing = run("ablate --suite supcon --data " + tmp.str("nope.json"));
  CHECK(missing.exit_code == 3);

  const auto ok = run("ablate --suite supcon --data " + manifest + " --config " + config +
                      " --seeds 1,2 --out " + tmp.str("abl"));
  CHECK(ok.exit_code == 0);
  CHECK(fs::exists(tmp.str("abl/supcon.csv")));
  CHECK(fs::exists(tmp.str("abl/supcon_raw.csv")));
  CHECK(fs::exists(tmp.str("abl/supcon.txt")));
  CHECK(fs::exists(tmp.str("abl/run_manifest.json")));
  CHECK(ok.output.find("teacher-dff-supcon") != std::string::npos);

  // 2-row table: with vs without SupCon
  std::ifstream csv(tmp.str("abl/supcon.csv"));
  std::string line;
  int rows = 0;
  std::getline(csv, line);  // header
  while (std::getline(csv, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2);
}

TEST_CASE("verify runs the named check suite and reports counts") {
  const auto v = run("verify");
  CHECK(v.exit_code == 0);
  // one line per check, at least 25 named checks
  int checks = 0;
  size_t at = 0;
  while ((at = v.output.find("[ ok ]", at)) != std::string::npos) {
    ++checks;
    ++at;
  }
  CHECK(checks >= 25);
  CHECK(v.output.find("[FAIL]") == std::string::npos);
}

TEST_CASE("help and no-subcommand are usage-level outcomes") {
  CHECK(run("--help").exit_code == 0);
  CHECK(run("").exit_code == 2);
  CHECK(run("frobnicate").exit_code == 2);
}
