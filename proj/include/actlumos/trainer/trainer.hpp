#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "actlumos/clipgen/clipgen.hpp"
#include "actlumos/trainer/checkpoint.hpp"
#include "actlumos/trainer/config.hpp"
#include "actlumos/trainer/model.hpp"

namespace actlumos::trainer {

/// Decoupled-weight-decay Adam over a flat parameter view. Moments are kept
/// in double regardless of the parameter scalar type.
template <typename S>
struct AdamW {
  double lr = 1e-3;
  double beta1 = 0.9, beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
  VecD m, v;
  int64_t t = 0;

  void step(ParamRefs<S>& params, const ParamRefs<S>& grads) {
    const Eigen::Index n = params.total_size();
    if (m.size() != n) {
      m = VecD::Zero(n);
      v = VecD::Zero(n);
      t = 0;
    }
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    Eigen::Index at = 0;
    for (size_t i = 0; i < params.entries.size(); ++i) {
      auto& pe = params.entries[i];
      const auto& ge = grads.entries[i];
      for (Eigen::Index k = 0; k < pe.size(); ++k) {
        const double g = static_cast<double>(ge.data[k]);
        m(at) = beta1 * m(at) + (1.0 - beta1) * g;
        v(at) = beta2 * v(at) + (1.0 - beta2) * g * g;
        const double mhat = m(at) / bc1;
        const double vhat = v(at) / bc2;
        double p = static_cast<double>(pe.data[k]);
        p -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * p);
        pe.data[k] = static_cast<S>(p);
        ++at;
      }
    }
  }
};

/// Top-1 / top-5 and per-class accuracy. Argmax ties break to the lowest
/// class index.
struct Metrics {
  double top1 = 0.0;
  double top5 = 0.0;
  std::vector<double> per_class;
  std::map<std::string, double> loss_components;
};

/// Rank of the true label under lowest-index tie-breaking; 0 means top-1.
int label_rank(const VecF& logits, int label);

/// Renders clips (and their retinex stream) once per id and reuses them.
class ClipCache {
 public:
  ClipCache(const clipgen::SyntheticDataset& ds, const enhance::RetinexParams& rp) : ds_(&ds), rp_(rp) {}

  const Volume<float>& dark(uint32_t id);
  const Volume<float>& retinex(uint32_t id);
  VideoClip dark_clip(uint32_t id);  // with fps metadata, for augmentation

 private:
  const clipgen::SyntheticDataset* ds_;
  enhance::RetinexParams rp_;
  std::unordered_map<uint32_t, Volume<float>> dark_, ret_;
};

/// One line per epoch: stage, epoch, loss components, validation metrics,
/// plus the per-step loss trace for determinism checks.
struct EpochRecord {
  std::string stage;
  int epoch = 0;
  std::map<std::string, double> losses;
  double val_top1 = 0.0, val_top5 = 0.0;
  std::vector<double> step_losses;
};

std::string epoch_record_line(const EpochRecord& r);
std::string history_to_json(const std::vector<EpochRecord>& hist);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Stage 0: dual-stream teacher with CE + lambda_sup * SupCon.
Checkpoint train_teacher(const TrainConfig& config, const clipgen::SyntheticDataset& ds,
                         const EpochCallback& on_epoch = nullptr);

/// Stage 1: two-view self-supervised pretraining of the student encoder on
/// the train split with labels stripped. Checkpoint holds encoder weights
/// only.
Checkpoint pretrain_student_ssl(const TrainConfig& config, const clipgen::SyntheticDataset& ds,
                                const EpochCallback& on_epoch = nullptr);

/// Stage 2: distillation fine-tuning of the single-stream student from a
/// frozen teacher; optionally initialized from an SSL checkpoint.
Checkpoint distill_student(const TrainConfig& config, const clipgen::SyntheticDataset& ds,
                           const Checkpoint& teacher_ckpt, const Checkpoint* ssl_ckpt,
                           const EpochCallback& on_epoch = nullptr);

/// Evaluates a teacher or distilled-student checkpoint on a dataset split.
Metrics evaluate(const Checkpoint& ckpt, const clipgen::SyntheticDataset& ds, clipgen::Split split);

/// Rebuilds the float models stored in a checkpoint.
TeacherModel<float> teacher_from_checkpoint(const Checkpoint& ckpt);
StudentModel<float> student_from_checkpoint(const Checkpoint& ckpt);

/// Raises on stage-resume with a different configuration.
void check_resume_fingerprint(const Checkpoint& ckpt, const TrainConfig& config);

Eigen::Index checkpoint_param_count(const Checkpoint& ckpt);

}  // namespace actlumos::trainer
