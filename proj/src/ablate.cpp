#include "actlumos/trainer/ablate.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <thread>

namespace actlumos::trainer {

namespace fs = std::filesystem;

const char* suite_name(Suite s) {
  switch (s) {
    case Suite::kd: return "kd";
    case Suite::fusion: return "fusion";
    case Suite::ssl: return "ssl";
    case Suite::supcon: return "supcon";
  }
  throw Error("bad suite");
}

Suite suite_from_name(const std::string& name) {
  if (name == "kd") return Suite::kd;
  if (name == "fusion") return Suite::fusion;
  if (name == "ssl") return Suite::ssl;
  if (name == "supcon") return Suite::supcon;
  throw Error("unknown ablation suite '" + name + "' (expected kd|fusion|ssl|supcon)");
}

double median_of(std::vector<double> xs) {
  if (xs.empty()) throw Error("median of empty list");
  std::sort(xs.begin(), xs.end());
  const size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double RowResult::median(const std::string& split, const std::string& metric) const {
  std::vector<double> vals;
  for (const CellMetrics& c : per_seed) {
    const Metrics& m = split == "train" ? c.train : split == "val" ? c.val : c.test;
    vals.push_back(metric == "top1" ? m.top1 : m.top5);
  }
  return median_of(std::move(vals));
}

double RowResult::median_test_top1() const { return median("test", "top1"); }

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("ACTLUMOS_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

AblationRunner::AblationRunner(const clipgen::SyntheticDataset& ds, const TrainConfig& base,
                               std::vector<uint64_t> seeds, std::string out_dir, int threads)
    : ds_(&ds), base_(base), seeds_(std::move(seeds)), out_dir_(std::move(out_dir)),
      threads_(resolve_threads(threads)) {
  if (seeds_.empty()) throw Error("ablation needs at least one seed");
}

std::shared_ptr<const Checkpoint> AblationRunner::cached(const std::string& key) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = cache_.find(key);
  return it == cache_.end() ? nullptr : it->second;
}

std::shared_ptr<const Checkpoint> AblationRunner::insert(const std::string& key, Checkpoint ckpt) {
  auto sp = std::make_shared<const Checkpoint>(std::move(ckpt));
  {
    std::lock_guard<std::mutex> lock(mu_);
    cache_.emplace(key, sp);
  }
  if (!out_dir_.empty()) {
    const fs::path dir = fs::path(out_dir_) / "cells" / key;
    fs::create_directories(dir);
    save_checkpoint(*sp, (dir / "checkpoint.alck").string());
    std::ofstream hist(dir / "history.jsonl");
    hist << sp->history_json << "\n";
  }
  return sp;
}

namespace {

std::string teacher_key(FusionVariant v, bool with_supcon, uint64_t seed) {
  return std::string("teacher-") + fusion_variant_name(v) + (with_supcon ? "" : "-nosupcon") + "-seed" +
         std::to_string(seed);
}

std::string ssl_key(sampler::SslVariant v, uint64_t seed) {
  return std::string("ssl-") + sampler::ssl_variant_name(v) + "-seed" + std::to_string(seed);
}

std::string student_key(FusionVariant tv, const std::optional<sampler::SslVariant>& sv, bool probe,
                        uint64_t seed) {
  std::string tag = sv ? sampler::ssl_variant_name(*sv) : "nossl";
  if (probe) tag += "-probe";
  return std::string("student-from-") + fusion_variant_name(tv) + "-" + tag + "-seed" + std::to_string(seed);
}

}  // namespace

std::shared_ptr<const Checkpoint> AblationRunner::teacher(FusionVariant v, bool with_supcon, uint64_t seed) {
  const std::string key = teacher_key(v, with_supcon, seed);
  if (auto hit = cached(key)) return hit;
  TrainConfig cfg = base_;
  cfg.stage = Stage::teacher;
  cfg.fusion_variant = v;
  if (!with_supcon) cfg.lambda_sup = 0.0;
  cfg.seed = seed;
  return insert(key, train_teacher(cfg, *ds_));
}

std::shared_ptr<const Checkpoint> AblationRunner::ssl(sampler::SslVariant v, uint64_t seed) {
  const std::string key = ssl_key(v, seed);
  if (auto hit = cached(key)) return hit;
  TrainConfig cfg = base_;
  cfg.stage = Stage::ssl;
  cfg.ssl_variant = v;
  cfg.seed = seed;
  return insert(key, pretrain_student_ssl(cfg, *ds_));
}

std::shared_ptr<const Checkpoint> AblationRunner::student(FusionVariant tv,
                                                          std::optional<sampler::SslVariant> sv, bool probe,
                                                          uint64_t seed) {
  const std::string key = student_key(tv, sv, probe, seed);
  if (auto hit = cached(key)) return hit;
  const auto teacher_ckpt = teacher(tv, true, seed);
  std::shared_ptr<const Checkpoint> ssl_ckpt;
  if (sv) ssl_ckpt = ssl(*sv, seed);
  TrainConfig cfg = base_;
  cfg.stage = Stage::distill;
  cfg.seed = seed;
  cfg.freeze_encoder = probe;
  if (probe) cfg.lambda_kd = 0.0;  // SSL-only row: CE-trained linear probe
  return insert(key, distill_student(cfg, *ds_, *teacher_ckpt, ssl_ckpt.get()));
}

CellMetrics AblationRunner::evaluate_cell(const Checkpoint& ckpt) {
  CellMetrics m;
  m.train = evaluate(ckpt, *ds_, clipgen::Split::train);
  m.val = evaluate(ckpt, *ds_, clipgen::Split::val);
  m.test = evaluate(ckpt, *ds_, clipgen::Split::test);
  return m;
}

struct AblationRunner::Task {
  std::function<void()> fn;
};

void AblationRunner::run_phase(std::vector<Task>& tasks) {
  const int workers = std::min<int>(threads_, static_cast<int>(tasks.size()));
  if (workers <= 1) {
    for (Task& t : tasks) t.fn();
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr first_error = nullptr;
  std::mutex err_mu;
  auto worker = [&] {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        tasks[i].fn();
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

SuiteResult AblationRunner::run(Suite suite) {
  SuiteResult result;
  result.suite = suite_name(suite);
  result.seeds = seeds_;

  struct RowSpec {
    std::string name;
    std::function<std::shared_ptr<const Checkpoint>(uint64_t)> build;
  };
  std::vector<RowSpec> rows;
  std::vector<Task> phase1, phase2;

  
  switch (suite) {
    case Suite::kd:
      for (uint64_t s : seeds_) {
        phase1.push_back({[this, s] { teacher(FusionVariant::dff, true, s); }});
        phase1.push_back({[this, s] { ssl(sampler::SslVariant::both, s); }});
        phase2.push_back({[this, s] { student(FusionVariant::dff, sampler::SslVariant::both, true, s); }});
        phase2.push_back({[this, s] { student(FusionVariant::dff, sampler::SslVariant::both, false, s); }});
      }
      rows = {{"teacher-dff-supcon", [this](uint64_t s) { return teacher(FusionVariant::dff, true, s); }},
              {"student-ssl-only", [this](uint64_t s) { return student(FusionVariant::dff, sampler::SslVariant::both, true, s); }},
              {"student-ssl+kd", [this](uint64_t s) { return student(FusionVariant::dff, sampler::SslVariant::both, false, s); }}};
      break;
    case Suite::fusion: {
      const std::vector<FusionVariant> variants = {FusionVariant::dark_only, FusionVariant::retinex_only,
                                                   FusionVariant::static_fusion, FusionVariant::dff};
      for (uint64_t s : seeds_) {
        for (FusionVariant v : variants) phase1.push_back({[this, v, s] { teacher(v, true, s); }});
        phase1.push_back({[this, s] { ssl(sampler::SslVariant::both, s); }});
        for (FusionVariant v : variants) phase2.push_back({[this, v, s] { student(v, sampler::SslVariant::both, false, s); }});
      }
      for (FusionVariant v : variants)
        rows.push_back({std::string("teacher-") + fusion_variant_name(v),
                        [this, v](uint64_t s) { return teacher(v, true, s); }});
      for (FusionVariant v : variants)
        rows.push_back({std::string("student-from-") + fusion_variant_name(v),
                        [this, v](uint64_t s) { return student(v, sampler::SslVariant::both, false, s); }});
      break;
    }
    case Suite::ssl: {
      const std::vector<std::optional<sampler::SslVariant>> variants = {
          std::nullopt, sampler::SslVariant::spatial_only, sampler::SslVariant::temporal_only,
          sampler::SslVariant::both};
      for (uint64_t s : seeds_) {
        phase1.push_back({[this, s] { teacher(FusionVariant::dff, true, s); }});
        for (const auto& v : variants)
          if (v) phase1.push_back({[this, v, s] { ssl(*v, s); }});
        for (const auto& v : variants)
          phase2.push_back({[this, v, s] { student(FusionVariant::dff, v, false, s); }});
      }
      for (const auto& v : variants) {
        const std::string name = v ? std::string("student-ssl-") + sampler::ssl_variant_name(*v)
                                   : std::string("student-kd-only");
        rows.push_back({name, [this, v](uint64_t s) { return student(FusionVariant::dff, v, false, s); }});
      }
      break;
    }
    case Suite::supcon:
      for (uint64_t s : seeds_) {
        phase1.push_back({[this, s] { teacher(FusionVariant::dff, false, s); }});
        phase1.push_back({[this, s] { teacher(FusionVariant::dff, true, s); }});
      }
      rows = {{"teacher-dff-no-supcon", [this](uint64_t s) { return teacher(FusionVariant::dff, false, s); }},
              {"teacher-dff-supcon", [this](uint64_t s) { return teacher(FusionVariant::dff, true, s); }}};
      break;
  }

  run_phase(phase1);
  run_phase(phase2);

  for (const RowSpec& spec : rows) {
    RowResult row;
    row.name = spec.name;
    for (uint64_t s : seeds_) {
      const auto ckpt = spec.build(s);
      row.param_count = checkpoint_param_count(*ckpt);
      row.per_seed.push_back(evaluate_cell(*ckpt));
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

namespace {

void write_csv(const SuiteResult& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "row,params,train_top1,train_top5,val_top1,val_top5,test_top1,test_top5\n";
  out << std::fixed << std::setprecision(4);
  for (const RowResult& row : r.rows) {
    out << row.name << "," << row.param_count;
    for (const char* split : {"train", "val", "test"})
      for (const char* metric : {"top1", "top5"}) out << "," << row.median(split, metric);
    out << "\n";
  }
}

void write_raw_csv(const SuiteResult& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "row,seed,train_top1,train_top5,val_top1,val_top5,test_top1,test_top5\n";
  out << std::fixed << std::setprecision(4);
  for (const RowResult& row : r.rows)
    for (size_t i = 0; i < r.seeds.size(); ++i) {
      const CellMetrics& c = row.per_seed[i];
      out << row.name << "," << r.seeds[i] << "," << c.train.top1 << "," << c.train.top5 << "," << c.val.top1
          << "," << c.val.top5 << "," << c.test.top1 << "," << c.test.top5 << "\n";
    }
}

}  // namespace

std::string suite_text_table(const SuiteResult& r) {
  std::ostringstream os;
  os << "suite: " << r.suite << "  (median of " << r.seeds.size() << " seed" << (r.seeds.size() == 1 ? "" : "s")
     << ")\n";
  size_t name_w = 4;
  for (const RowResult& row : r.rows) name_w = std::max(name_w, row.name.size());
  os << std::left << std::setw(static_cast<int>(name_w) + 2) << "row" << std::right << std::setw(9) << "params"
     << std::setw(12) << "train-top1" << std::setw(12) << "train-top5" << std::setw(10) << "val-top1"
     << std::setw(10) << "val-top5" << std::setw(11) << "test-top1" << std::setw(11) << "test-top5" << "\n";
  os << std::fixed << std::setprecision(4);
  for (const RowResult& row : r.rows) {
    os << std::left << std::setw(static_cast<int>(name_w) + 2) << row.name << std::right << std::setw(9)
       << row.param_count;
    os << std::setw(12) << row.median("train", "top1") << std::setw(12) << row.median("train", "top5");
    os << std::setw(10) << row.median("val", "top1") << std::setw(10) << row.median("val", "top5");
    os << std::setw(11) << row.median("test", "top1") << std::setw(11) << row.median("test", "top5") << "\n";
  }
  return os.str();
}

void write_suite_files(const SuiteResult& r, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const fs::path base = fs::path(out_dir);
  write_csv(r, (base / (r.suite + ".csv")).string());
  write_raw_csv(r, (base / (r.suite + "_raw.csv")).string());
  std::ofstream txt(base / (r.suite + ".txt"));
  txt << suite_text_table(r);
}

}  // namespace actlumos::trainer
