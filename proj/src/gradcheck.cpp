#include "actlumos/trainer/gradcheck.hpp"

#include "actlumos/core/rng.hpp"
#include "actlumos/objectives/losses.hpp"
#include "actlumos/trainer/model.hpp"

namespace actlumos::trainer {

namespace {

constexpr double kStep = 1e-4;
constexpr double kTol = 1e-4;

double rel_err(double a, double f) { return std::abs(a - f) / std::max({std::abs(a), std::abs(f), 1e-6}); }

MatD random_mat(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  MatD m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

MatD normalize_rows(const MatD& v) {
  MatD z = v;
  for (Eigen::Index i = 0; i < z.rows(); ++i) z.row(i) /= z.row(i).norm();
  return z;
}

/// d(loss)/d(raw rows) from d(loss)/d(normalized rows).
MatD normalize_rows_backward(const MatD& v, const MatD& dz) {
  MatD dv(v.rows(), v.cols());
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    const double n = v.row(i).norm();
    const VecD zi = v.row(i).transpose() / n;
    const VecD gi = dz.row(i).transpose();
    dv.row(i) = ((gi - zi * zi.dot(gi)) / n).transpose();
  }
  return dv;
}

}  // namespace

FdCompareResult fd_compare(VecD& x, const std::function<double()>& eval, const VecD& analytic) {
  FdCompareResult r;
  r.checked = x.size();
  // A skipped component is one where the forward and backward differences
  // disagree, i.e. the loss is locally non-smooth (a rectifier kink) or so
  // curved that h=1e-4 differences carry no derivative information. The cap
  // exists to catch systematically wrong gradients, which fail everywhere.
  const Eigen::Index skip_cap = std::max<Eigen::Index>(4, x.size() / 10);
  double f0 = 0.0;
  bool have_f0 = false;

  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = x(i);
    x(i) = keep + kStep;
    const double up = eval();
    x(i) = keep - kStep;
    const double down = eval();
    x(i) = keep;
    const double fd = (up - down) / (2.0 * kStep);
    const double err = rel_err(analytic(i), fd);
    if (err >= kTol) {
      if (!have_f0) {
        f0 = eval();
        have_f0 = true;
      }
      // one-sided divergence flags kinks and second-order ill-conditioning;
      // step-halving flags third-order corruption (shared by both one-sided
      // estimates, so the first probe alone cannot see it)
      const double fwd = (up - f0) / kStep;
      const double bwd = (f0 - down) / kStep;
      bool non_smooth = rel_err(fwd, bwd) > 1e-3;
      if (!non_smooth) {
        const double h2 = kStep / 2.0;
        const double keep2 = x(i);
        x(i) = keep2 + h2;
        const double up2 = eval();
        x(i) = keep2 - h2;
        const double down2 = eval();
        x(i) = keep2;
        const double fd_half = (up2 - down2) / (2.0 * h2);
        non_smooth = rel_err(fd, fd_half) > 2e-5;
      }
      if (non_smooth) {
        ++r.skipped;
        if (r.skipped > skip_cap) {
          r.max_rel_err = std::max(r.max_rel_err, err);
          return r;
        }
        continue;
      }
    }
    r.max_rel_err = std::max(r.max_rel_err, err);
  }
  return r;
}

namespace {

// ---- bare losses ----------------------------------------------------------

FdCompareResult check_supcon(uint64_t seed) {
  Rng rng(seed);
  const int n_classes = 2 + static_cast<int>(seed % 3);
  const int per_class = 2;
  const int B = n_classes * per_class;
  const int C = 3 + static_cast<int>((seed / 3) % 3);
  std::vector<int> labels;
  for (int c = 0; c < n_classes; ++c)
    for (int v = 0; v < per_class; ++v) labels.push_back(c);
  MatD V = random_mat(B, C, rng);
  const double tau = 0.1;

  VecD flat = Eigen::Map<VecD>(V.data(), V.size());
  auto eval = [&] {
    MatD v = Eigen::Map<MatD>(flat.data(), B, C);
    return static_cast<double>(objectives::supcon_loss<double>(normalize_rows(v), labels, tau));
  };
  MatD v0 = Eigen::Map<MatD>(flat.data(), B, C);
  MatD dz = MatD::Zero(B, C);
  objectives::supcon_loss<double>(normalize_rows(v0), labels, tau, &dz);
  MatD dv = normalize_rows_backward(v0, dz);
  return fd_compare(flat, eval, Eigen::Map<VecD>(dv.data(), dv.size()));
}

FdCompareResult check_ssl(uint64_t seed) {
  Rng rng(seed);
  const int B = 2 + static_cast<int>(seed % 3);
  const int C = 3 + static_cast<int>((seed / 3) % 2) * 2;
  const double tau = (seed % 2) ? 0.5 : 1.0;
  const MatD F0 = random_mat(B, C, rng);
  const MatD S0 = random_mat(B, C, rng);

  VecD flat(2 * B * C);
  flat << Eigen::Map<const VecD>(F0.data(), F0.size()), Eigen::Map<const VecD>(S0.data(), S0.size());
  auto eval = [&] {
    const MatD f = Eigen::Map<MatD>(flat.data(), B, C);
    const MatD s = Eigen::Map<MatD>(flat.data() + B * C, B, C);
    return static_cast<double>(objectives::ssl_loss<double>(f, s, tau));
  };
  MatD df = MatD::Zero(B, C), ds = MatD::Zero(B, C);
  objectives::ssl_loss<double>(F0, S0, tau, &df, &ds);
  VecD g(2 * B * C);
  g << Eigen::Map<VecD>(df.data(), df.size()), Eigen::Map<VecD>(ds.data(), ds.size());
  return fd_compare(flat, eval, g);
}

FdCompareResult check_ce(uint64_t seed) {
  Rng rng(seed);
  const int K = 2 + static_cast<int>(seed % 9);
  VecD flat = random_mat(K, 1, rng, 2.0).col(0);
  const int label = static_cast<int>(seed % static_cast<uint64_t>(K));
  auto eval = [&] { return static_cast<double>(objectives::ce_loss<double>(flat, label)); };
  VecD d = VecD::Zero(K);
  objectives::ce_loss<double>(flat, label, &d);
  return fd_compare(flat, eval, d);
}

FdCompareResult check_kd(uint64_t seed) {
  Rng rng(seed);
  const int K = 2 + static_cast<int>(seed % 9);
  const double tau = (seed % 2) ? 4.0 : 1.0;
  const VecD zt = random_mat(K, 1, rng, 2.0).col(0);
  VecD flat = random_mat(K, 1, rng, 2.0).col(0);
  auto eval = [&] { return static_cast<double>(objectives::kd_loss<double>(zt, flat, tau)); };
  VecD d = VecD::Zero(K);
  objectives::kd_loss<double>(zt, flat, tau, &d);
  return fd_compare(flat, eval, d);
}

FdCompareResult check_teacher_total(uint64_t seed) {
  Rng rng(seed);
  const int n = 3, K = 4, C = 5;
  const int n_classes = 2, per_class = 2;
  const int B = n_classes * per_class;
  const std::vector<int> labels = {0, 1, 2};
  std::vector<int> emb_labels;
  for (int c = 0; c < n_classes; ++c)
    for (int v = 0; v < per_class; ++v) emb_labels.push_back(c);
  const double tau = 0.1, lambda_sup = 0.1;

  VecD flat(n * K + B * C);
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat(i) = rng.normal();
  auto unpack = [&](std::vector<VecD>& logits, MatD& V) {
    logits.resize(n);
    for (int i = 0; i < n; ++i) logits[static_cast<size_t>(i)] = flat.segment(i * K, K);
    V = Eigen::Map<MatD>(flat.data() + n * K, B, C);
  };
  auto eval = [&] {
    std::vector<VecD> logits;
    MatD V;
    unpack(logits, V);
    return objectives::teacher_loss<double>(logits, labels, normalize_rows(V), emb_labels, tau, lambda_sup)
        .total;
  };
  std::vector<VecD> logits;
  MatD V;
  unpack(logits, V);
  std::vector<VecD> dl(n, VecD::Zero(K));
  MatD dz = MatD::Zero(B, C);
  objectives::teacher_loss<double>(logits, labels, normalize_rows(V), emb_labels, tau, lambda_sup, &dl, &dz);
  MatD dV = normalize_rows_backward(V, dz);
  VecD g(flat.size());
  for (int i = 0; i < n; ++i) g.segment(i * K, K) = dl[static_cast<size_t>(i)];
  g.tail(B * C) = Eigen::Map<VecD>(dV.data(), dV.size());
  return fd_compare(flat, eval, g);
}

FdCompareResult check_student_total(uint64_t seed) {
  Rng rng(seed);
  const int K = 3 + static_cast<int>(seed % 5);
  const VecD zt = random_mat(K, 1, rng, 2.0).col(0);
  VecD flat = random_mat(K, 1, rng, 2.0).col(0);
  const int label = static_cast<int>(seed % static_cast<uint64_t>(K));
  auto eval = [&] { return objectives::student_loss<double>(zt, flat, label, 4.0, 1.0, 1.0).total; };
  VecD d = VecD::Zero(K);
  objectives::student_loss<double>(zt, flat, label, 4.0, 1.0, 1.0, &d);
  return fd_compare(flat, eval, d);
}

// ---- end-to-end micro models ------------------------------------------------

struct MicroSetup {
  encoder::EncoderConfig enc_cfg;
  fusion::TemporalHeadConfig head_cfg;
  std::vector<VolumeD> darks, rets;
  std::vector<int> labels;
};

MicroSetup micro_setup(uint64_t seed, int num_clips) {
  MicroSetup s;
  s.enc_cfg.in_channels = 3;
  s.enc_cfg.stages = {{4, 2, 2}, {6, 1, 2}};
  s.head_cfg = {6, 1, 2, 2, 3, 2};  // C=6, 1 layer, 2 heads, ff 2x, K=3, T=2
  Rng rng(seed);
  for (int i = 0; i < num_clips; ++i) {
    VolumeD d(3, 4, 8, 8), r(3, 4, 8, 8);
    for (Eigen::Index k = 0; k < d.m.size(); ++k) d.m.data()[k] = rng.uniform();
    for (Eigen::Index k = 0; k < r.m.size(); ++k) r.m.data()[k] = rng.uniform();
    s.darks.push_back(std::move(d));
    s.rets.push_back(std::move(r));
    s.labels.push_back(i / 2);  // pairs share a class so SupCon has positives
  }
  return s;
}

/// The training-time CLS token starts at zero, which is LayerNorm's
/// zero-variance point; central differences there are dominated by curvature,
/// so check instances move the token off the degenerate row.
template <typename M>
void randomize_cls(M& model, Rng& rng) {
  for (Eigen::Index i = 0; i < model.head.cls.size(); ++i) model.head.cls(i) = 0.3 * rng.normal();
}

/// A LayerNorm row with tiny variance makes the loss so curved that every
/// upstream parameter's finite difference is polluted. Instances are
/// re-drawn until all rows stay well-conditioned.
constexpr double kMaxInvStd = 6.0;

double head_max_inv_std(const fusion::HeadTrace<double>& tr) {
  double m = 0.0;
  for (const auto& l : tr.layers) {
    m = std::max(m, static_cast<double>(l.ln1.inv_std.maxCoeff()));
    m = std::max(m, static_cast<double>(l.ln2.inv_std.maxCoeff()));
  }
  return std::max(m, static_cast<double>(tr.ln_final.inv_std.maxCoeff()));
}

double teacher_max_inv_std(const TeacherModel<double>& model, const MicroSetup& s) {
  double m = 0.0;
  for (size_t i = 0; i < s.darks.size(); ++i) {
    TeacherClipTrace<double> tr;
    teacher_clip_forward(model, s.darks[i], s.rets[i], true, &tr);
    m = std::max(m, head_max_inv_std(tr.head));
  }
  return m;
}

double student_max_inv_std(const StudentModel<double>& model, const MicroSetup& s) {
  double m = 0.0;
  for (size_t i = 0; i < s.darks.size(); ++i) {
    StudentClipTrace<double> tr;
    student_clip_forward(model, s.darks[i], &tr);
    m = std::max(m, head_max_inv_std(tr.head));
  }
  return m;
}

/// Mirrors the teacher training step objective: mean CE over fused logits
/// plus lambda_sup * SupCon over the per-stream embeddings.
double teacher_batch_loss(const TeacherModel<double>& model, const MicroSetup& s, double tau, double lambda_sup,
                          TeacherModel<double>* grads) {
  const size_t n = s.darks.size();
  std::vector<TeacherClipTrace<double>> traces(n);
  std::vector<VecD> logits(n);
  std::vector<std::pair<size_t, bool>> emb_src;
  for (size_t i = 0; i < n; ++i) {
    logits[i] = teacher_clip_forward(model, s.darks[i], s.rets[i], true, &traces[i]);
    if (uses_dark(model.variant)) emb_src.emplace_back(i, false);
    if (uses_retinex(model.variant)) emb_src.emplace_back(i, true);
  }
  const int C = model.head_cfg.model_dim;
  MatD Z(static_cast<Eigen::Index>(emb_src.size()), C);
  std::vector<int> emb_labels;
  for (size_t e = 0; e < emb_src.size(); ++e) {
    const auto [ci, is_ret] = emb_src[e];
    Z.row(static_cast<Eigen::Index>(e)) = (is_ret ? traces[ci].emb_r.unit : traces[ci].emb_d.unit).transpose();
    emb_labels.push_back(s.labels[ci]);
  }

  std::vector<VecD> d_logits(n, VecD::Zero(model.head_cfg.num_classes));
  MatD d_Z = MatD::Zero(Z.rows(), Z.cols());
  const auto loss = objectives::teacher_loss<double>(logits, s.labels, Z, emb_labels, tau, lambda_sup,
                                                     grads ? &d_logits : nullptr, grads ? &d_Z : nullptr);
  if (grads) {
    std::vector<VecD> demb(emb_src.size());
    std::vector<const VecD*> dd(n, nullptr), dr(n, nullptr);
    for (size_t e = 0; e < emb_src.size(); ++e) {
      demb[e] = d_Z.row(static_cast<Eigen::Index>(e)).transpose();
      const auto [ci, is_ret] = emb_src[e];
      (is_ret ? dr : dd)[ci] = &demb[e];
    }
    for (size_t i = 0; i < n; ++i) teacher_clip_backward(model, traces[i], d_logits[i], dd[i], dr[i], *grads);
  }
  return loss.total;
}

FdCompareResult check_e2e_teacher(uint64_t seed) {
  const FusionVariant variants[] = {FusionVariant::dff, FusionVariant::static_fusion, FusionVariant::dark_only,
                                    FusionVariant::retinex_only};
  const FusionVariant variant = variants[seed % 4];
  // single-stream variants contribute one SupCon row per clip, so they need
  // four clips (two per class) where the dual-stream variants need two
  const bool single_stream = !uses_dark(variant) || !uses_retinex(variant);
  MicroSetup s;
  TeacherModel<double> model;
  bool conditioned = false;
  for (uint64_t salt = 0; salt < 64 && !conditioned; ++salt) {
    const uint64_t derived = splitmix64(seed + salt * 0x9e3779b97f4a7c15ull);
    s = micro_setup(derived, single_stream ? 4 : 3);
    Rng rng(derived + 17);
    model = TeacherModel<double>::init(variant, s.enc_cfg, s.head_cfg, rng);
    randomize_cls(model, rng);
    conditioned = teacher_max_inv_std(model, s) <= kMaxInvStd;
  }
  if (!conditioned) throw Error("no well-conditioned teacher micro-instance for seed " + std::to_string(seed));
  ParamRefs<double> refs = model.collect();
  VecD flat = refs.flatten();
  auto eval = [&] {
    refs.unflatten(flat);
    return teacher_batch_loss(model, s, 0.1, 0.1, nullptr);
  };
  refs.unflatten(flat);
  TeacherModel<double> grads = TeacherModel<double>::zeros(variant, s.enc_cfg, s.head_cfg);
  teacher_batch_loss(model, s, 0.1, 0.1, &grads);
  const VecD analytic = grads.collect().flatten();
  return fd_compare(flat, eval, analytic);
}

FdCompareResult check_e2e_student(uint64_t seed) {
  MicroSetup s;
  StudentModel<double> model;
  std::vector<VecD> zt;
  bool conditioned = false;
  for (uint64_t salt = 0; salt < 64 && !conditioned; ++salt) {
    const uint64_t derived = splitmix64(seed + salt * 0x9e3779b97f4a7c15ull);
    s = micro_setup(derived, 2);
    Rng rng(derived + 29);
    model = StudentModel<double>::init(s.enc_cfg, s.head_cfg, rng);
    randomize_cls(model, rng);
    zt.clear();
    for (size_t i = 0; i < s.darks.size(); ++i) zt.push_back(random_mat(3, 1, rng, 1.0).col(0));
    conditioned = student_max_inv_std(model, s) <= kMaxInvStd;
  }
  if (!conditioned) throw Error("no well-conditioned student micro-instance for seed " + std::to_string(seed));

  ParamRefs<double> refs = model.collect();
  VecD flat = refs.flatten();
  auto loss_of = [&](StudentModel<double>* grads) {
    double total = 0.0;
    const double inv = 1.0 / static_cast<double>(s.darks.size());
    for (size_t i = 0; i < s.darks.size(); ++i) {
      StudentClipTrace<double> tr;
      const VecD zs = student_clip_forward(model, s.darks[i], grads ? &tr : nullptr);
      VecD dzs = VecD::Zero(3);
      const auto lv =
          objectives::student_loss<double>(zt[i], zs, s.labels[i], 4.0, 1.0, 1.0, grads ? &dzs : nullptr);
      if (grads) {
        dzs *= inv;
        student_clip_backward(model, tr, dzs, *grads);
      }
      total += lv.total * inv;
    }
    return total;
  };
  auto eval = [&] {
    refs.unflatten(flat);
    return loss_of(nullptr);
  };
  refs.unflatten(flat);
  StudentModel<double> grads = StudentModel<double>::zeros(s.enc_cfg, s.head_cfg);
  loss_of(&grads);
  const VecD analytic = grads.collect().flatten();
  return fd_compare(flat, eval, analytic);
}

using CheckFn = FdCompareResult (*)(uint64_t);

struct CheckEntry {
  const char* name;
  CheckFn fn;
};

constexpr CheckEntry kChecks[] = {
    {"supcon", check_supcon},
    {"ssl", check_ssl},
    {"ce", check_ce},
    {"kd", check_kd},
    {"teacher_total", check_teacher_total},
    {"student_total", check_student_total},
    {"end_to_end_teacher", check_e2e_teacher},
    {"end_to_end_student", check_e2e_student},
};

CheckFn find_check(const std::string& name) {
  for (const CheckEntry& e : kChecks)
    if (name == e.name) return e.fn;
  throw Error("unknown loss name '" + name + "' for grad_check");
}

}  // namespace

std::vector<std::string> grad_check_names() {
  std::vector<std::string> names;
  for (const CheckEntry& e : kChecks) names.emplace_back(e.name);
  return names;
}

GradCheckReport grad_check(const std::string& loss_name, uint64_t instance_seed) {
  CheckFn fn = find_check(loss_name);
  GradCheckReport r;
  r.loss_name = loss_name;
  r.instances = 1;
  const FdCompareResult c = fn(instance_seed);
  r.max_rel_err = c.max_rel_err;
  r.skipped = c.skipped;
  r.pass = r.max_rel_err < kTol;
  return r;
}

GradCheckReport grad_check_suite(const std::string& loss_name, int instances) {
  CheckFn fn = find_check(loss_name);
  GradCheckReport r;
  r.loss_name = loss_name;
  r.instances = instances;
  for (int i = 1; i <= instances; ++i) {
    const FdCompareResult c = fn(static_cast<uint64_t>(i));
    r.max_rel_err = std::max(r.max_rel_err, c.max_rel_err);
    r.skipped += c.skipped;
  }
  r.pass = r.max_rel_err < kTol;
  return r;
}

}  // namespace actlumos::trainer
