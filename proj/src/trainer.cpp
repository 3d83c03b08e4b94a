#include "actlumos/trainer/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "actlumos/objectives/losses.hpp"
#include "actlumos/sampler/sampler.hpp"

namespace actlumos::trainer {

using clipgen::Split;
using clipgen::SyntheticDataset;
using nlohmann::json;

encoder::EncoderConfig make_encoder_config(const TrainConfig& c) {
  encoder::EncoderConfig ec;
  ec.in_channels = 3;
  ec.stages.clear();
  for (size_t i = 0; i < c.encoder.channels.size(); ++i)
    ec.stages.push_back({c.encoder.channels[i], c.encoder.temporal_strides[i], c.encoder.spatial_strides[i]});
  return ec;
}

fusion::TemporalHeadConfig make_head_config(const TrainConfig& c, int num_classes, int seq_len) {
  fusion::TemporalHeadConfig hc;
  hc.model_dim = c.encoder.channels.back();
  hc.num_layers = c.head.num_layers;
  hc.num_heads = c.head.num_heads;
  hc.ff_mult = c.head.ff_mult;
  hc.num_classes = num_classes;
  hc.seq_len = seq_len;
  return hc;
}

int label_rank(const VecF& logits, int label) {
  int rank = 0;
  for (int k = 0; k < logits.size(); ++k) {
    if (k == label) continue;
    if (logits(k) > logits(label) || (logits(k) == logits(label) && k < label)) ++rank;
  }
  return rank;
}

const Volume<float>& ClipCache::dark(uint32_t id) {
  auto it = dark_.find(id);
  if (it != dark_.end()) return it->second;
  return dark_.emplace(id, ds_->render(id).v).first->second;
}

const Volume<float>& ClipCache::retinex(uint32_t id) {
  auto it = ret_.find(id);
  if (it != ret_.end()) return it->second;
  VideoClip clip;
  clip.v = dark(id);
  clip.fps_tag = ds_->fps;
  return ret_.emplace(id, enhance::retinex_enhance(clip, rp_).v).first->second;
}

VideoClip ClipCache::dark_clip(uint32_t id) {
  VideoClip clip;
  clip.v = dark(id);
  clip.fps_tag = ds_->fps;
  return clip;
}

std::string epoch_record_line(const EpochRecord& r) {
  std::ostringstream os;
  os << "epoch=" << r.epoch << " stage=" << r.stage;
  auto total = r.losses.find("total");
  if (total != r.losses.end()) os << " loss=" << total->second;
  for (const auto& [k, v] : r.losses)
    if (k != "total") os << " " << k << "=" << v;
  os << " top1=" << r.val_top1 << " top5=" << r.val_top5;
  return os.str();
}

std::string history_to_json(const std::vector<EpochRecord>& hist) {
  json arr = json::array();
  for (const EpochRecord& r : hist) {
    json j;
    j["stage"] = r.stage;
    j["epoch"] = r.epoch;
    j["losses"] = r.losses;
    j["val_top1"] = r.val_top1;
    j["val_top5"] = r.val_top5;
    j["step_losses"] = r.step_losses;
    arr.push_back(std::move(j));
  }
  return arr.dump();
}

namespace {

struct SplitLists {
  std::vector<uint32_t> train, val, test;
};

SplitLists split_lists(const SyntheticDataset& ds) {
  SplitLists s;
  s.train = ds.ids_in_split(Split::train);
  s.val = ds.ids_in_split(Split::val);
  s.test = ds.ids_in_split(Split::test);
  return s;
}

Metrics metrics_from_ranks(const std::vector<std::pair<int, int>>& label_rank_pairs, int num_classes,
                           double mean_ce) {
  Metrics m;
  m.per_class.assign(static_cast<size_t>(num_classes), 0.0);
  std::vector<int> counts(static_cast<size_t>(num_classes), 0);
  for (const auto& [label, rank] : label_rank_pairs) {
    ++counts[static_cast<size_t>(label)];
    if (rank == 0) {
      m.top1 += 1.0;
      m.per_class[static_cast<size_t>(label)] += 1.0;
    }
    if (rank < 5) m.top5 += 1.0;
  }
  const double n = static_cast<double>(label_rank_pairs.size());
  m.top1 /= n;
  m.top5 /= n;
  for (size_t c = 0; c < m.per_class.size(); ++c)
    if (counts[c] > 0) m.per_class[c] /= counts[c];
  m.loss_components["ce"] = mean_ce;
  return m;
}

Metrics evaluate_teacher_model(const TeacherModel<float>& model, const SyntheticDataset& ds,
                               const std::vector<uint32_t>& ids, ClipCache& cache) {
  if (ids.empty()) throw Error("evaluation split is empty");
  std::vector<std::pair<int, int>> lr;
  double ce = 0.0;
  static const Volume<float> kEmpty;
  for (uint32_t id : ids) {
    const auto& rec = ds.record(id);
    const Volume<float>& dark = uses_dark(model.variant) ? cache.dark(id) : kEmpty;
    const Volume<float>& ret = uses_retinex(model.variant) ? cache.retinex(id) : kEmpty;
    const VecF logits = teacher_clip_forward(model, dark, ret, false, (TeacherClipTrace<float>*)nullptr);
    lr.emplace_back(rec.class_id, label_rank(logits, rec.class_id));
    ce += objectives::ce_loss<float>(logits, rec.class_id);
  }
  return metrics_from_ranks(lr, ds.num_classes, ce / static_cast<double>(ids.size()));
}

Metrics evaluate_student_model(const StudentModel<float>& model, const SyntheticDataset& ds,
                               const std::vector<uint32_t>& ids, ClipCache& cache) {
  if (ids.empty()) throw Error("evaluation split is empty");
  const uint64_t retinex_before = enhance::retinex_call_count();
  std::vector<std::pair<int, int>> lr;
  double ce = 0.0;
  for (uint32_t id : ids) {
    const auto& rec = ds.record(id);
    const VecF logits = student_clip_forward(model, cache.dark(id), (StudentClipTrace<float>*)nullptr);
    lr.emplace_back(rec.class_id, label_rank(logits, rec.class_id));
    ce += objectives::ce_loss<float>(logits, rec.class_id);
  }
  if (enhance::retinex_call_count() != retinex_before)
    throw Error("single-stream contract violated: student evaluation touched the retinex path");
  return metrics_from_ranks(lr, ds.num_classes, ce / static_cast<double>(ids.size()));
}

Checkpoint make_checkpoint(const TrainConfig& config, const std::string& stage, int num_classes, int epoch,
                           const std::string& rng_state, const std::vector<EpochRecord>& history,
                           ParamRefs<float>& refs) {
  Checkpoint c;
  c.stage = stage;
  c.num_classes = num_classes;
  c.epoch = epoch;
  c.fingerprint = config_fingerprint(config);
  c.rng_state = rng_state;
  c.config_json = config_to_json(config);
  c.history_json = history_to_json(history);
  store_params(c, refs);
  return c;
}

}  // namespace

Checkpoint train_teacher(const TrainConfig& config, const SyntheticDataset& ds, const EpochCallback& on_epoch) {
  validate_config(config);
  if (config.stage != Stage::teacher)
    throw Error("train_teacher called with stage '" + std::string(stage_name(config.stage)) + "'");
  clipgen::validate_dataset(ds);

  const auto splits = split_lists(ds);
  const int K = ds.num_classes;
  const encoder::EncoderConfig enc_cfg = make_encoder_config(config);
  const auto fshape = encoder::output_shape(enc_cfg, ds.dims.frames, ds.dims.height, ds.dims.width);
  const fusion::TemporalHeadConfig head_cfg = make_head_config(config, K, fshape.T);

  Rng master(config.seed);
  Rng init_rng = master.stream("init");
  Rng batch_rng = master.stream("batch");

  TeacherModel<float> model = TeacherModel<float>::init(config.fusion_variant, enc_cfg, head_cfg, init_rng);
  TeacherModel<float> grads = TeacherModel<float>::zeros(config.fusion_variant, enc_cfg, head_cfg);
  ParamRefs<float> params = model.collect();
  ParamRefs<float> grad_refs = grads.collect();
  AdamW<float> opt;
  opt.lr = config.lr;
  opt.weight_decay = config.weight_decay;

  ClipCache cache(ds, config.retinex);
  const int batch_clips = config.n_c * config.n_v;
  const int steps_per_epoch = std::max(1, static_cast<int>(splits.train.size()) / batch_clips);
  const bool need_emb = config.lambda_sup > 0.0;
  const float tau = static_cast<float>(config.tau_supcon);
  const float lambda_sup = static_cast<float>(config.lambda_sup);

  std::vector<EpochRecord> history;
  static const Volume<float> kEmpty;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochRecord rec;
    rec.stage = "teacher";
    rec.epoch = epoch;
    double ep_total = 0.0, ep_ce = 0.0, ep_sup = 0.0;

    for (int step = 0; step < steps_per_epoch; ++step) {
      const auto batch = sampler::balanced_batch(ds, config.n_c, config.n_v, batch_rng);
      const size_t n = batch.size();
      std::vector<TeacherClipTrace<float>> traces(n);
      std::vector<VecF> logits_batch(n);
      std::vector<int> labels(n);
      // per-stream embeddings enter the SupCon batch in clip order,
      // dark view first, retinex view second (Table-style layout)
      std::vector<std::pair<size_t, bool>> emb_src;  // (clip index, is_retinex)
      for (size_t i = 0; i < n; ++i) {
        const auto [id, label] = batch[i];
        labels[i] = label;
        const Volume<float>& dark = uses_dark(model.variant) ? cache.dark(id) : kEmpty;
        const Volume<float>& ret = uses_retinex(model.variant) ? cache.retinex(id) : kEmpty;
        logits_batch[i] = teacher_clip_forward(model, dark, ret, need_emb, &traces[i]);
        if (need_emb) {
          if (uses_dark(model.variant)) emb_src.emplace_back(i, false);
          if (uses_retinex(model.variant)) emb_src.emplace_back(i, true);
        }
      }

      MatF Z;
      std::vector<int> emb_labels;
      if (need_emb) {
        Z.resize(static_cast<Eigen::Index>(emb_src.size()), fshape.C);
        for (size_t e = 0; e < emb_src.size(); ++e) {
          const auto [ci, is_ret] = emb_src[e];
          Z.row(static_cast<Eigen::Index>(e)) =
              (is_ret ? traces[ci].emb_r.unit : traces[ci].emb_d.unit).transpose();
          emb_labels.push_back(labels[ci]);
        }
      }

      std::vector<VecF> d_logits(n, VecF::Zero(K));
      MatF d_Z = MatF::Zero(Z.rows(), Z.cols());
      const auto loss = objectives::teacher_loss<float>(logits_batch, labels, Z, emb_labels, tau, lambda_sup,
                                                        &d_logits, need_emb ? &d_Z : nullptr);

      grad_refs.set_zero();
      std::vector<VecF> demb(emb_src.size());
      std::vector<const VecF*> demb_dark(n, nullptr), demb_ret(n, nullptr);
      for (size_t e = 0; e < emb_src.size(); ++e) {
        demb[e] = d_Z.row(static_cast<Eigen::Index>(e)).transpose();
        const auto [ci, is_ret] = emb_src[e];
        (is_ret ? demb_ret : demb_dark)[ci] = &demb[e];
      }
      for (size_t i = 0; i < n; ++i)
        teacher_clip_backward(model, traces[i], d_logits[i], demb_dark[i], demb_ret[i], grads);
      opt.step(params, grad_refs);

      rec.step_losses.push_back(loss.total);
      ep_total += loss.total;
      ep_ce += loss.components.at("ce");
      ep_sup += loss.components.at("supcon");
    }

    rec.losses["total"] = ep_total / steps_per_epoch;
    rec.losses["ce"] = ep_ce / steps_per_epoch;
    rec.losses["supcon"] = ep_sup / steps_per_epoch;
    const Metrics val = evaluate_teacher_model(model, ds, splits.val, cache);
    rec.val_top1 = val.top1;
    rec.val_top5 = val.top5;
    history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }

  return make_checkpoint(config, "teacher", K, config.epochs, batch_rng.state(), history, params);
}

Checkpoint pretrain_student_ssl(const TrainConfig& config, const SyntheticDataset& ds,
                                const EpochCallback& on_epoch) {
  validate_config(config);
  if (config.stage != Stage::ssl)
    throw Error("pretrain_student_ssl called with stage '" + std::string(stage_name(config.stage)) + "'");
  if (config.ssl_variant == sampler::SslVariant::none)
    throw Error("ssl stage requires ssl_variant in {spatial_only, temporal_only, both}");
  if (config.b_u < 2) throw Error("B_u must be at least 2 (the SSL loss needs negatives)");
  clipgen::validate_dataset(ds);
  sampler::validate_augment_params(config.augment, ds.dims.frames);

  // unlabeled pool: train split with labels stripped
  std::vector<uint32_t> pool = ds.ids_in_split(Split::train);
  if (static_cast<int>(pool.size()) < config.b_u)
    throw Error("unlabeled pool (" + std::to_string(pool.size()) + " clips) smaller than B_u=" +
                std::to_string(config.b_u));

  const encoder::EncoderConfig enc_cfg = make_encoder_config(config);
  encoder::output_shape(enc_cfg, config.augment.out_frames, ds.dims.height, ds.dims.width);
  const int C = enc_cfg.out_channels();

  Rng master(config.seed);
  Rng init_rng = master.stream("init").stream("encoder");
  Rng pool_rng = master.stream("pool");
  Rng aug_rng = master.stream("augment");

  encoder::EncoderParams<float> enc = encoder::EncoderParams<float>::init(enc_cfg, init_rng);
  encoder::EncoderParams<float> grads = encoder::EncoderParams<float>::zeros(enc_cfg);
  ParamRefs<float> params, grad_refs;
  enc.collect("enc", params);
  grads.collect("enc", grad_refs);
  AdamW<float> opt;
  opt.lr = config.lr;
  opt.weight_decay = config.weight_decay;

  ClipCache cache(ds, config.retinex);
  const int steps_per_epoch = static_cast<int>(pool.size()) / config.b_u;
  const float tau = static_cast<float>(config.tau_ssl);

  const uint64_t retinex_before = enhance::retinex_call_count();
  std::vector<EpochRecord> history;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochRecord rec;
    rec.stage = "ssl";
    rec.epoch = epoch;
    double ep_loss = 0.0;
    pool_rng.shuffle(pool);

    for (int step = 0; step < steps_per_epoch; ++step) {
      const int b = config.b_u;
      std::vector<SslViewTrace<float>> tr_fast(static_cast<size_t>(b)), tr_slow(static_cast<size_t>(b));
      MatF F(b, C), S(b, C);
      for (int i = 0; i < b; ++i) {
        const uint32_t id = pool[static_cast<size_t>(step * b + i)];
        auto [fast, slow] = sampler::two_view_variant(cache.dark_clip(id), config.augment, config.ssl_variant,
                                                      aug_rng);
        F.row(i) = ssl_view_forward(enc_cfg, enc, fast.v, &tr_fast[static_cast<size_t>(i)]).transpose();
        S.row(i) = ssl_view_forward(enc_cfg, enc, slow.v, &tr_slow[static_cast<size_t>(i)]).transpose();
      }
      MatF dF = MatF::Zero(b, C), dS = MatF::Zero(b, C);
      const float loss = objectives::ssl_loss<float>(F, S, tau, &dF, &dS);
      grad_refs.set_zero();
      for (int i = 0; i < b; ++i) {
        ssl_view_backward(enc_cfg, enc, tr_fast[static_cast<size_t>(i)], dF.row(i).transpose().eval(), grads);
        ssl_view_backward(enc_cfg, enc, tr_slow[static_cast<size_t>(i)], dS.row(i).transpose().eval(), grads);
      }
      opt.step(params, grad_refs);
      rec.step_losses.push_back(loss);
      ep_loss += loss;
    }

    rec.losses["total"] = ep_loss / std::max(1, steps_per_epoch);
    rec.losses["ssl"] = rec.losses["total"];
    history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }

  if (enhance::retinex_call_count() != retinex_before)
    throw Error("single-stream contract violated: SSL pretraining touched the retinex path");

  return make_checkpoint(config, "ssl", ds.num_classes, config.epochs, pool_rng.state(), history, params);
}

Checkpoint distill_student(const TrainConfig& config, const SyntheticDataset& ds, const Checkpoint& teacher_ckpt,
                           const Checkpoint* ssl_ckpt, const EpochCallback& on_epoch) {
  validate_config(config);
  if (config.stage != Stage::distill)
    throw Error("distill_student called with stage '" + std::string(stage_name(config.stage)) + "'");
  if (teacher_ckpt.stage != "teacher")
    throw Error("distillation needs a teacher checkpoint, got stage '" + teacher_ckpt.stage + "'");
  if (ssl_ckpt && ssl_ckpt->stage != "ssl")
    throw Error("student initialization needs an ssl checkpoint, got stage '" + ssl_ckpt->stage + "'");
  clipgen::validate_dataset(ds);
  if (teacher_ckpt.num_classes != ds.num_classes)
    throw Error("class-count mismatch: teacher head has " + std::to_string(teacher_ckpt.num_classes) +
                " classes, dataset has " + std::to_string(ds.num_classes));

  const auto splits = split_lists(ds);
  const int K = ds.num_classes;
  const encoder::EncoderConfig enc_cfg = make_encoder_config(config);
  const auto fshape = encoder::output_shape(enc_cfg, ds.dims.frames, ds.dims.height, ds.dims.width);
  const fusion::TemporalHeadConfig head_cfg = make_head_config(config, K, fshape.T);

  Rng master(config.seed);
  Rng init_rng = master.stream("init");
  Rng batch_rng = master.stream("batch");

  StudentModel<float> model = StudentModel<float>::init(enc_cfg, head_cfg, init_rng);
  if (ssl_ckpt) {
    ParamRefs<float> enc_refs;
    model.enc.collect("enc", enc_refs);
    restore_params(*ssl_ckpt, enc_refs);  // encoder only; the head stays fresh
  }
  StudentModel<float> grads = StudentModel<float>::zeros(enc_cfg, head_cfg);

  ParamRefs<float> params, grad_refs;
  if (config.freeze_encoder) {
    model.head.collect("head", params);
    grads.head.collect("head", grad_refs);
  } else {
    params = model.collect();
    grad_refs = grads.collect();
  }
  AdamW<float> opt;
  opt.lr = config.lr;
  opt.weight_decay = config.weight_decay;

  ClipCache cache(ds, config.retinex);

  // frozen-teacher logits are precomputed once; the student loop never runs
  // the teacher or the retinex path
  const TeacherModel<float> teacher = teacher_from_checkpoint(teacher_ckpt);
  std::unordered_map<uint32_t, VecF> teacher_logits;
  static const Volume<float> kEmpty;
  for (uint32_t id : splits.train) {
    const Volume<float>& dark = uses_dark(teacher.variant) ? cache.dark(id) : kEmpty;
    const Volume<float>& ret = uses_retinex(teacher.variant) ? cache.retinex(id) : kEmpty;
    teacher_logits.emplace(id, teacher_clip_forward(teacher, dark, ret, false, (TeacherClipTrace<float>*)nullptr));
  }
  // also pre-render the dark val clips so evaluation stays enhancement-free
  for (uint32_t id : splits.val) cache.dark(id);
  const uint64_t retinex_before = enhance::retinex_call_count();

  std::vector<uint32_t> order = splits.train;
  const float tau = static_cast<float>(config.tau_kd);
  const float lce = static_cast<float>(config.lambda_ce);
  const float lkd = static_cast<float>(config.lambda_kd);
  std::vector<EpochRecord> history;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochRecord rec;
    rec.stage = "distill";
    rec.epoch = epoch;
    double ep_total = 0.0, ep_ce = 0.0, ep_kd = 0.0;
    batch_rng.shuffle(order);
    int steps = 0;

    for (size_t at = 0; at + 1 <= order.size(); at += static_cast<size_t>(config.b_kd)) {
      const size_t b = std::min(static_cast<size_t>(config.b_kd), order.size() - at);
      grad_refs.set_zero();
      double total = 0.0, ce = 0.0, kd = 0.0;
      const float inv_b = 1.0f / static_cast<float>(b);
      for (size_t i = 0; i < b; ++i) {
        const uint32_t id = order[at + i];
        const auto& record = ds.record(id);
        StudentClipTrace<float> tr;
        const VecF z_s = student_clip_forward(model, cache.dark(id), &tr);
        VecF d_zs = VecF::Zero(K);
        const auto loss = objectives::student_loss<float>(teacher_logits.at(id), z_s, record.class_id, tau, lce,
                                                          lkd, &d_zs);
        d_zs *= inv_b;
        student_clip_backward(model, tr, d_zs, grads, config.freeze_encoder);
        total += loss.total;
        ce += loss.components.at("ce");
        kd += loss.components.at("kd");
      }
      opt.step(params, grad_refs);
      rec.step_losses.push_back(total / static_cast<double>(b));
      ep_total += total / static_cast<double>(b);
      ep_ce += ce / static_cast<double>(b);
      ep_kd += kd / static_cast<double>(b);
      ++steps;
    }

    rec.losses["total"] = ep_total / std::max(1, steps);
    rec.losses["ce"] = ep_ce / std::max(1, steps);
    rec.losses["kd"] = ep_kd / std::max(1, steps);
    const Metrics val = evaluate_student_model(model, ds, splits.val, cache);
    rec.val_top1 = val.top1;
    rec.val_top5 = val.top5;
    history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }

  if (enhance::retinex_call_count() != retinex_before)
    throw Error("single-stream contract violated: student distillation touched the retinex path");

  ParamRefs<float> all_params = model.collect();
  return make_checkpoint(config, "distill", K, config.epochs, batch_rng.state(), history, all_params);
}

TeacherModel<float> teacher_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.stage != "teacher") throw Error("expected a teacher checkpoint, got stage '" + ckpt.stage + "'");
  const TrainConfig cfg = config_from_json(ckpt.config_json);
  const encoder::EncoderConfig enc_cfg = make_encoder_config(cfg);
  const NamedArray* pos = ckpt.find("head.pos");
  if (!pos) throw Error("teacher checkpoint is missing the temporal head");
  const fusion::TemporalHeadConfig head_cfg =
      make_head_config(cfg, ckpt.num_classes, static_cast<int>(pos->rows));
  TeacherModel<float> m = TeacherModel<float>::zeros(cfg.fusion_variant, enc_cfg, head_cfg);
  ParamRefs<float> refs = m.collect();
  restore_params(ckpt, refs);
  return m;
}

StudentModel<float> student_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.stage != "distill")
    throw Error("expected a distilled-student checkpoint, got stage '" + ckpt.stage + "'");
  const TrainConfig cfg = config_from_json(ckpt.config_json);
  const encoder::EncoderConfig enc_cfg = make_encoder_config(cfg);
  const NamedArray* pos = ckpt.find("head.pos");
  if (!pos) throw Error("student checkpoint is missing the temporal head");
  const fusion::TemporalHeadConfig head_cfg =
      make_head_config(cfg, ckpt.num_classes, static_cast<int>(pos->rows));
  StudentModel<float> m = StudentModel<float>::zeros(enc_cfg, head_cfg);
  ParamRefs<float> refs = m.collect();
  restore_params(ckpt, refs);
  return m;
}

Metrics evaluate(const Checkpoint& ckpt, const SyntheticDataset& ds, Split split) {
  const std::vector<uint32_t> ids = ds.ids_in_split(split);
  if (ids.empty()) throw Error("evaluation split is empty");
  const TrainConfig cfg = config_from_json(ckpt.config_json);
  ClipCache cache(ds, cfg.retinex);
  if (ckpt.stage == "teacher") {
    const TeacherModel<float> model = teacher_from_checkpoint(ckpt);
    return evaluate_teacher_model(model, ds, ids, cache);
  }
  if (ckpt.stage == "distill") {
    const StudentModel<float> model = student_from_checkpoint(ckpt);
    return evaluate_student_model(model, ds, ids, cache);
  }
  throw Error("checkpoint stage '" + ckpt.stage + "' contains no classifier head to evaluate");
}

void check_resume_fingerprint(const Checkpoint& ckpt, const TrainConfig& config) {
  const std::string fp = config_fingerprint(config);
  if (ckpt.fingerprint != fp)
    throw Error("config fingerprint mismatch on resume: checkpoint " + ckpt.fingerprint.substr(0, 12) +
                "... vs config " + fp.substr(0, 12) + "...");
}

Eigen::Index checkpoint_param_count(const Checkpoint& ckpt) {
  Eigen::Index n = 0;
  for (const NamedArray& a : ckpt.arrays) n += static_cast<Eigen::Index>(a.rows * a.cols);
  return n;
}

}  // namespace actlumos::trainer
