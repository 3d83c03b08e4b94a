#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "actlumos/trainer/trainer.hpp"

namespace actlumos::trainer {

/// Ablation suites; each mirrors one of the paper-style tables:
/// kd (distillation pipeline), fusion (fusion strategies x teacher/student),
/// ssl (pretraining variants), supcon (teacher with/without SupCon).
enum class Suite { kd, fusion, ssl, supcon };

const char* suite_name(Suite s);
Suite suite_from_name(const std::string& name);

struct CellMetrics {
  Metrics train, val, test;
};

struct RowResult {
  std::string name;
  Eigen::Index param_count = 0;
  std::vector<CellMetrics> per_seed;  // aligned with SuiteResult::seeds

  double median_test_top1() const;
  double median(const std::string& split, const std::string& metric) const;
};

struct SuiteResult {
  std::string suite;
  std::vector<uint64_t> seeds;
  std::vector<RowResult> rows;
};

/// Worker-thread cap: ACTLUMOS_THREADS when set, hardware concurrency
/// otherwise, never below 1.
int resolve_threads(int requested = 0);

/// Trains and evaluates ablation cells with artifact-level memoization, so a
/// teacher shared by several suites is trained once per seed. Cells run in
/// parallel worker threads; each artifact is a pure function of its config.
class AblationRunner {
 public:
  AblationRunner(const clipgen::SyntheticDataset& ds, const TrainConfig& base, std::vector<uint64_t> seeds,
                 std::string out_dir = "", int threads = 0);

  SuiteResult run(Suite suite);

  /// Artifact access (trains on first use).
  std::shared_ptr<const Checkpoint> teacher(FusionVariant v, bool with_supcon, uint64_t seed);
  std::shared_ptr<const Checkpoint> ssl(sampler::SslVariant v, uint64_t seed);
  std::shared_ptr<const Checkpoint> student(FusionVariant teacher_variant,
                                            std::optional<sampler::SslVariant> ssl_variant, bool linear_probe,
                                            uint64_t seed);

  CellMetrics evaluate_cell(const Checkpoint& ckpt);

  const clipgen::SyntheticDataset& dataset() const { return *ds_; }

 private:
  struct Task;
  void run_phase(std::vector<Task>& tasks);
  std::shared_ptr<const Checkpoint> cached(const std::string& key) const;
  std::shared_ptr<const Checkpoint> insert(const std::string& key, Checkpoint ckpt);

  const clipgen::SyntheticDataset* ds_;
  TrainConfig base_;
  std::vector<uint64_t> seeds_;
  std::string out_dir_;
  int threads_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<const Checkpoint>> cache_;
};

void write_suite_files(const SuiteResult& result, const std::string& out_dir);
std::string suite_text_table(const SuiteResult& result);

double median_of(std::vector<double> xs);

}  // namespace actlumos::trainer
