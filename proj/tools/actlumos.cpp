// actlumos: synthetic dark-video benchmark, dual-stream teacher training,
// self-supervised student pretraining, distillation, ablation tables and the
// verification gate, behind one command-line entry point.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "actlumos/clipgen/clipgen.hpp"
#include "actlumos/core/array_io.hpp"
#include "actlumos/core/hash.hpp"
#include "actlumos/enhance/enhance.hpp"
#include "actlumos/trainer/ablate.hpp"
#include "actlumos/trainer/trainer.hpp"
#include "actlumos/trainer/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace actlumos;

namespace {

// exit codes: 0 success, 1 failure (incl. verification), 2 usage, 3 missing artifact
constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitMissing = 3;

struct ManifestWriter {
  std::string command;
  json args = json::object();
  json inputs = json::object();
  json outputs = json::object();
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void add_output(const std::string& label, const std::string& path) {
    outputs[label] = {{"path", path}, {"sha256", sha256_file(path)}};
  }

  void write(const fs::path& dir) {
    fs::create_directories(dir);
    json j;
    j["command"] = command;
    j["args"] = args;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["wall_clock_sec"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ofstream out(dir / "run_manifest.json");
    out << j.dump(2) << "\n";
  }
};

ClipDims parse_dims(const std::string& spec) {
  ClipDims d;
  if (std::sscanf(spec.c_str(), "%dx%dx%d", &d.frames, &d.height, &d.width) != 3)
    throw UsageError("--dims expects LxHxW, got '" + spec + "'");
  return d;
}

std::vector<uint64_t> parse_seeds(const std::string& spec) {
  std::vector<uint64_t> seeds;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    seeds.push_back(std::stoull(item));
  }
  if (seeds.empty()) throw UsageError("--seeds expects a comma-separated list, got '" + spec + "'");
  return seeds;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("cannot open " + path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

trainer::TrainConfig load_base_config(const std::string& config_path) {
  trainer::TrainConfig cfg;
  if (!config_path.empty()) cfg = trainer::config_with_overrides(cfg, read_file(config_path));
  return cfg;
}

int cmd_gen_data(int classes, int per_class, const std::string& dims_spec, uint64_t seed,
                 const std::string& out_path) {
  ManifestWriter mw;
  mw.command = "gen-data";
  mw.args = {{"classes", classes}, {"per_class", per_class}, {"dims", dims_spec}, {"seed", seed}};
  const ClipDims dims = parse_dims(dims_spec);
  clipgen::SyntheticDataset ds;
  try {
    ds = clipgen::generate_dataset(classes, per_class, dims, seed);
  } catch (const Error& e) {
    throw UsageError(e.what());  // flag-driven preconditions are usage errors
  }
  const fs::path out(out_path);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  clipgen::save_dataset(ds, out_path);
  mw.add_output("manifest", out_path);
  mw.write(out.has_parent_path() ? out.parent_path() : fs::path("."));
  std::cout << "wrote " << out_path << " (" << ds.clips.size() << " clips, K=" << ds.num_classes
            << ", sha256=" << mw.outputs["manifest"]["sha256"].get<std::string>().substr(0, 12) << "...)\n";
  return kExitOk;
}

int cmd_enhance(const std::string& in_path, const std::string& out_dir, const std::string& mode, double gamma) {
  if (mode != "retinex" && mode != "gamma") throw UsageError("--mode must be retinex or gamma");
  ManifestWriter mw;
  mw.command = "enhance";
  mw.args = {{"mode", mode}, {"gamma", gamma}};
  mw.inputs["manifest"] = in_path;
  const auto ds = clipgen::load_dataset(in_path);
  fs::create_directories(out_dir);
  for (const auto& rec : ds.clips) {
    const VideoClip clip = ds.render(rec.id);
    const VideoClip enhanced =
        mode == "retinex" ? enhance::retinex_enhance(clip, {}) : enhance::gamma_correct(clip, gamma);
    std::ostringstream name;
    name << "clip_" << std::setw(5) << std::setfill('0') << rec.id << ".arr";
    const std::string path = (fs::path(out_dir) / name.str()).string();
    write_volume(path, enhanced.v);
  }
  // hash the directory listing deterministically: hash of per-file hashes
  std::string combined;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(out_dir))
    if (e.path().extension() == ".arr") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) combined += sha256_file(f.string());
  mw.outputs["tensors"] = {{"count", files.size()}, {"sha256", sha256_hex(combined)}};
  mw.write(out_dir);
  std::cout << "wrote " << files.size() << " enhanced tensors to " << out_dir << "\n";
  return kExitOk;
}

int cmd_train(const std::string& stage_name, const std::string& data_path, const std::string& out_dir,
              const std::string& config_path, const std::string& teacher_ckpt_path,
              const std::string& ssl_ckpt_path, const std::string& resume_path, const std::string& fusion,
              const std::string& ssl_variant, uint64_t seed, int epochs, double lr, bool freeze_encoder,
              bool quiet) {
  trainer::TrainConfig cfg;
  try {
    cfg = load_base_config(config_path);
    cfg.stage = trainer::stage_from_name(stage_name);
    if (!fusion.empty()) cfg.fusion_variant = trainer::fusion_variant_from_name(fusion);
    if (!ssl_variant.empty()) cfg.ssl_variant = sampler::ssl_variant_from_name(ssl_variant);
    if (seed != 0) cfg.seed = seed;
    if (epochs > 0) cfg.epochs = epochs;
    if (lr > 0) cfg.lr = lr;
    cfg.freeze_encoder = freeze_encoder;
    trainer::validate_config(cfg);
  } catch (const MissingArtifact&) {
    throw;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }

  if (cfg.stage == trainer::Stage::distill && teacher_ckpt_path.empty())
    throw UsageError("train --stage distill requires --teacher-ckpt");

  const auto ds = clipgen::load_dataset(data_path);

  ManifestWriter mw;
  mw.command = "train";
  mw.args = json::parse(trainer::config_to_json(cfg));
  mw.inputs["data"] = data_path;

  fs::create_directories(out_dir);
  std::ofstream history_file(fs::path(out_dir) / "history.jsonl");
  auto on_epoch = [&](const trainer::EpochRecord& r) {
    if (!quiet) std::cout << trainer::epoch_record_line(r) << "\n";
    json j;
    j["stage"] = r.stage;
    j["epoch"] = r.epoch;
    j["losses"] = r.losses;
    j["val_top1"] = r.val_top1;
    j["val_top5"] = r.val_top5;
    history_file << j.dump() << "\n";
    history_file.flush();
  };

  trainer::Checkpoint ckpt;
  if (!resume_path.empty()) {
    // resume only guards the fingerprint contract; training restarts clean
    const trainer::Checkpoint prev = trainer::load_checkpoint(resume_path);
    trainer::check_resume_fingerprint(prev, cfg);
  }
  switch (cfg.stage) {
    case trainer::Stage::teacher:
      ckpt = trainer::train_teacher(cfg, ds, on_epoch);
      break;
    case trainer::Stage::ssl:
      ckpt = trainer::pretrain_student_ssl(cfg, ds, on_epoch);
      break;
    case trainer::Stage::distill: {
      const trainer::Checkpoint teacher = trainer::load_checkpoint(teacher_ckpt_path);
      mw.inputs["teacher_ckpt"] = teacher_ckpt_path;
      std::optional<trainer::Checkpoint> ssl;
      if (!ssl_ckpt_path.empty()) {
        ssl = trainer::load_checkpoint(ssl_ckpt_path);
        mw.inputs["ssl_ckpt"] = ssl_ckpt_path;
      }
      ckpt = trainer::distill_student(cfg, ds, teacher, ssl ? &*ssl : nullptr, on_epoch);
      break;
    }
  }

  const std::string ckpt_path = (fs::path(out_dir) / "checkpoint.alck").string();
  trainer::save_checkpoint(ckpt, ckpt_path);
  history_file.close();
  mw.add_output("checkpoint", ckpt_path);
  mw.add_output("history", (fs::path(out_dir) / "history.jsonl").string());
  mw.write(out_dir);
  std::cout << "checkpoint " << ckpt_path << " fingerprint=" << ckpt.fingerprint.substr(0, 12) << "...\n";
  return kExitOk;
}

int cmd_ablate(const std::string& suite_name, const std::string& data_path, const std::string& out_dir,
               const std::string& config_path, const std::string& seeds_spec, int threads) {
  trainer::Suite suite;
  try {
    suite = trainer::suite_from_name(suite_name);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const std::vector<uint64_t> seeds = parse_seeds(seeds_spec);
  trainer::TrainConfig base = load_base_config(config_path);
  const auto ds = clipgen::load_dataset(data_path);

  ManifestWriter mw;
  mw.command = "ablate";
  mw.args = {{"suite", suite_name}, {"seeds", seeds_spec}, {"threads", trainer::resolve_threads(threads)}};
  mw.inputs["data"] = data_path;

  trainer::AblationRunner runner(ds, base, seeds, out_dir, threads);
  const trainer::SuiteResult result = runner.run(suite);
  trainer::write_suite_files(result, out_dir);
  std::cout << trainer::suite_text_table(result);

  for (const char* ext : {".csv", "_raw.csv", ".txt"})
    mw.add_output(suite_name + std::string(ext), (fs::path(out_dir) / (suite_name + std::string(ext))).string());
  mw.write(out_dir);
  return kExitOk;
}

int cmd_verify() {
  const auto checks = trainer::run_verification();
  size_t failed = 0;
  for (const auto& c : checks) {
    std::cout << (c.pass ? "[ ok ] " : "[FAIL] ") << c.name;
    if (!c.detail.empty()) std::cout << "  (" << c.detail << ")";
    std::cout << "\n";
    if (!c.pass) ++failed;
  }
  std::cout << checks.size() - failed << "/" << checks.size() << " checks passed\n";
  return failed == 0 ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"actlumos: dark-video teacher-student pipeline on a synthetic benchmark"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset manifest");
  int classes = 10, per_class = 40;
  std::string dims_spec = "16x32x32", gen_out = "dataset.json";
  uint64_t gen_seed = 1;
  gen->add_option("--classes", classes, "number of action classes");
  gen->add_option("--per-class", per_class, "clips per class");
  gen->add_option("--dims", dims_spec, "clip dims LxHxW");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "output manifest path");

  // enhance
  auto* enh = app.add_subcommand("enhance", "write enhanced tensors for every clip");
  std::string enh_in, enh_out = "enhanced", enh_mode = "retinex";
  double enh_gamma = 0.5;
  enh->add_option("--in", enh_in, "dataset manifest")->required();
  enh->add_option("--out", enh_out, "output directory");
  enh->add_option("--mode", enh_mode, "retinex|gamma");
  enh->add_option("--gamma", enh_gamma, "gamma for --mode gamma");

  // train
  auto* tr = app.add_subcommand("train", "run one training stage");
  std::string tr_stage, tr_data, tr_out = "run", tr_config, tr_teacher, tr_ssl, tr_resume, tr_fusion,
              tr_ssl_variant;
  uint64_t tr_seed = 0;
  int tr_epochs = 0;
  double tr_lr = 0;
  bool tr_freeze = false, tr_quiet = false;
  tr->add_option("--stage", tr_stage, "teacher|ssl|distill")->required();
  tr->add_option("--data", tr_data, "dataset manifest")->required();
  tr->add_option("--out", tr_out, "output directory");
  tr->add_option("--config", tr_config, "JSON config overriding defaults");
  tr->add_option("--teacher-ckpt", tr_teacher, "teacher checkpoint (distill)");
  tr->add_option("--ssl-ckpt", tr_ssl, "ssl checkpoint to initialize the student encoder");
  tr->add_option("--resume", tr_resume, "previous checkpoint; config fingerprints must match");
  tr->add_option("--fusion", tr_fusion, "dff|static|dark_only|retinex_only");
  tr->add_option("--ssl-variant", tr_ssl_variant, "none|spatial_only|temporal_only|both");
  tr->add_option("--seed", tr_seed, "training seed");
  tr->add_option("--epochs", tr_epochs, "epoch count");
  tr->add_option("--lr", tr_lr, "learning rate");
  tr->add_flag("--freeze-encoder", tr_freeze, "train the head only (linear probe)");
  tr->add_flag("--quiet", tr_quiet, "suppress per-epoch lines");

  // ablate
  auto* ab = app.add_subcommand("ablate", "run an ablation suite and emit tables");
  std::string ab_suite, ab_data, ab_out = "ablation", ab_config, ab_seeds = "1,2,3";
  int ab_threads = 0;
  ab->add_option("--suite", ab_suite, "kd|fusion|ssl|supcon")->required();
  ab->add_option("--data", ab_data, "dataset manifest")->required();
  ab->add_option("--out", ab_out, "output directory");
  ab->add_option("--config", ab_config, "JSON config overriding defaults");
  ab->add_option("--seeds", ab_seeds, "comma-separated seed list");
  ab->add_option("--threads", ab_threads, "worker cap (default: ACTLUMOS_THREADS or hardware)");

  // verify
  app.add_subcommand("verify", "run the gradient/oracle/invariant gate");

  try {
    app.parse(argc, argv);
    if (gen->parsed()) return cmd_gen_data(classes, per_class, dims_spec, gen_seed, gen_out);
    if (enh->parsed()) return cmd_enhance(enh_in, enh_out, enh_mode, enh_gamma);
    if (tr->parsed())
      return cmd_train(tr_stage, tr_data, tr_out, tr_config, tr_teacher, tr_ssl, tr_resume, tr_fusion,
                       tr_ssl_variant, tr_seed, tr_epochs, tr_lr, tr_freeze, tr_quiet);
    if (ab->parsed()) return cmd_ablate(ab_suite, ab_data, ab_out, ab_config, ab_seeds, ab_threads);
    return cmd_verify();
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return kExitOk;  // --help
    std::cerr << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const MissingArtifact& e) {
    std::cerr << "missing artifact: " << e.what() << "\n";
    return kExitMissing;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}
