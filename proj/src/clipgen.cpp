#include "actlumos/clipgen/clipgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

namespace actlumos {

void validate_clip(const VideoClip& clip) {
  if (clip.v.C != 3) throw Error("VideoClip must have 3 channels, got " + std::to_string(clip.v.C));
  if (clip.v.T < 2) throw Error("VideoClip needs at least 2 frames, got " + std::to_string(clip.v.T));
  if (clip.v.H < 8 || clip.v.W < 8)
    throw Error("VideoClip frames must be at least 8x8, got " + std::to_string(clip.v.H) + "x" +
                std::to_string(clip.v.W));
  if (!(clip.fps_tag > 0)) throw Error("fps_tag must be positive");
  if (!clip.v.m.allFinite()) throw Error("VideoClip contains non-finite values");
  if (clip.v.m.minCoeff() < 0.0f || clip.v.m.maxCoeff() > 1.0f) throw Error("VideoClip values outside [0,1]");
}

}  // namespace actlumos

namespace actlumos::clipgen {

namespace {

// Reflectance levels: a moderate backdrop under a bright primitive. The
// backdrop keeps the illumination map's floor high enough that retinex
// division stays well-conditioned at low light.
constexpr double kBackground = 0.45;

double frac(double x) { return x - std::floor(x); }

/// Triangle wave with period 1, range [0,1], tri(0)=0, tri(0.5)=1.
double tri01(double x) { return 1.0 - 2.0 * std::abs(frac(x) - 0.5); }

double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

// Primitives are thin outlines rather than filled shapes: structure narrower
// than the retinex smoothing window survives illumination division, the way
// reflectance detail does in real low-light footage.
struct Ring {
  double cx, cy, r;
};

struct Bar {
  double cx, cy, half_len, half_wid, angle;
};

constexpr double kRingHalfWidth = 0.045;

/// Per-clip appearance and trajectory jitter, drawn once from the clip seed.
struct ShapeDraw {
  double phase, speed, size, jx, jy, brightness;
  double tint[3];
};

ShapeDraw draw_shape_params(Rng& rng) {
  ShapeDraw d;
  d.phase = rng.uniform(0.0, 2.0 * M_PI);
  d.speed = rng.uniform(0.85, 1.15);
  d.size = rng.uniform(0.95, 1.05);
  d.jx = rng.uniform(-0.06, 0.06);
  d.jy = rng.uniform(-0.06, 0.06);
  d.brightness = rng.uniform(0.9, 1.0);
  for (double& t : d.tint) t = rng.uniform(0.8, 1.0);
  return d;
}

double coverage_ring(const Ring& d, double px, double py, double edge) {
  const double dist = std::abs(std::hypot(px - d.cx, py - d.cy) - d.r);
  return smoothstep(kRingHalfWidth + edge, kRingHalfWidth - edge, dist);
}

double coverage_bar(const Bar& b, double px, double py, double edge) {
  const double dx = px - b.cx, dy = py - b.cy;
  const double u = std::cos(b.angle) * dx + std::sin(b.angle) * dy;
  const double v = -std::sin(b.angle) * dx + std::cos(b.angle) * dy;
  const double du = std::abs(u) - b.half_len;
  const double dv = std::abs(v) - b.half_wid;
  const double dist = std::max(du, dv);
  return smoothstep(edge, -edge, dist);
}

/// Pattern intensity field for one frame of one motion program, in [0,1].
/// s = t/(L-1) is the clip-time fraction.
void render_pattern(int class_id, const ShapeDraw& d, double s, int H, int W, Mat<double>& out) {
  // mild per-class size code so even frame-mean features carry class signal
  const double r0 = (0.125 + 0.010 * class_id) * d.size;
  const double edge = 0.9 / std::min(H, W);
  const double m = 0.22;
  const double sp = s * d.speed;

  std::vector<Ring> discs;
  Bar bar{};
  bool use_bar = false;

  switch (class_id) {
    case 0:  // translate-right
      discs.push_back({m + (1.0 - 2.0 * m) * std::min(sp, 1.0), 0.5 + d.jy * 2.0, r0});
      break;
    case 1:  // translate-down
      discs.push_back({0.5 + d.jx * 2.0, m + (1.0 - 2.0 * m) * std::min(sp, 1.0), r0});
      break;
    case 2:  // diagonal sweep
      discs.push_back({m + (1.0 - 2.0 * m) * std::min(sp, 1.0), m + (1.0 - 2.0 * m) * std::min(sp, 1.0), r0});
      break;
    case 3:  // rotating bar
      use_bar = true;
      bar = {0.5 + d.jx, 0.5 + d.jy, 0.30 * d.size, 0.05 * d.size, d.phase + sp * M_PI};
      break;
    case 4:  // scale pulse
      discs.push_back({0.5 + d.jx, 0.5 + d.jy, r0 * (1.0 + 0.45 * std::sin(2.0 * M_PI * sp + d.phase))});
      break;
    case 5:  // horizontal oscillation
      discs.push_back({0.5 + 0.26 * std::sin(2.0 * M_PI * sp + d.phase), 0.32 + d.jy, r0});
      break;
    case 6:  // vertical oscillation
      discs.push_back({0.68 + d.jx, 0.5 + 0.26 * std::sin(2.0 * M_PI * sp + d.phase), r0});
      break;
    case 7: {  // orbit
      const double a = 2.0 * M_PI * sp + d.phase;
      discs.push_back({0.5 + 0.26 * std::cos(a), 0.5 + 0.26 * std::sin(a), r0});
      break;
    }
    case 8: {  // split: two discs move apart, then back together
      const double gap = 0.06 + 0.22 * tri01(sp + 0.0);
      discs.push_back({0.5 - gap, 0.5 + d.jy, 0.8 * r0});
      discs.push_back({0.5 + gap, 0.5 + d.jy, 0.8 * r0});
      break;
    }
    case 9:  // zigzag: steady drift with a triangle-wave bounce
      discs.push_back({m + (1.0 - 2.0 * m) * std::min(s, 1.0),
                       0.28 + 0.44 * tri01(1.5 * sp + d.phase / (2.0 * M_PI)), r0});
      break;
    default:
      throw Error("invalid class_id " + std::to_string(class_id) + "; motion programs cover [0," +
                  std::to_string(motion_program_count()) + ")");
  }

  out.setZero(H, W);
  for (int h = 0; h < H; ++h) {
    const double py = (h + 0.5) / H;
    for (int w = 0; w < W; ++w) {
      const double px = (w + 0.5) / W;
      double p = 0.0;
      for (const Ring& ring : discs) p = std::max(p, coverage_ring(ring, px, py, edge));
      if (use_bar) p = std::max(p, coverage_bar(bar, px, py, edge));
      out(h, w) = p;
    }
  }
}

VideoClip generate_impl(int class_id, const IlluminationProfile& profile, uint64_t seed, const ClipDims& dims,
                        bool with_noise) {
  if (class_id < 0 || class_id >= motion_program_count())
    throw Error("invalid class_id " + std::to_string(class_id) + "; motion programs cover [0," +
                std::to_string(motion_program_count()) + ")");
  if (dims.frames < 2 || dims.height < 8 || dims.width < 8)
    throw Error("clip dims below minimum (need L>=2, H,W>=8), got " + std::to_string(dims.frames) + "x" +
                std::to_string(dims.height) + "x" + std::to_string(dims.width));
  validate_profile(profile, dims.frames);

  Rng shape_rng = Rng(seed).stream("shape");
  Rng noise_rng = Rng(seed).stream("noise");
  const ShapeDraw d = draw_shape_params(shape_rng);

  VideoClip clip;
  clip.v = Volume<float>(3, dims.frames, dims.height, dims.width);
  Mat<double> pattern;
  for (int t = 0; t < dims.frames; ++t) {
    const double s = static_cast<double>(t) / std::max(1, dims.frames - 1);
    render_pattern(class_id, d, s, dims.height, dims.width, pattern);
    const double level = level_at(profile, t);
    for (int h = 0; h < dims.height; ++h) {
      for (int w = 0; w < dims.width; ++w) {
        const double lum = kBackground + (1.0 - kBackground) * d.brightness * pattern(h, w);
        for (int c = 0; c < 3; ++c) {
          double val = d.tint[c] * lum * level;
          if (with_noise && profile.noise_sigma > 0.0) val += profile.noise_sigma * noise_rng.normal();
          clip.v.at(c, t, h, w) = static_cast<float>(std::clamp(val, 0.0, 1.0));
        }
      }
    }
  }
  return clip;
}

}  // namespace

void validate_profile(const IlluminationProfile& p, int frames) {
  if (!(p.base_level > 0.0 && p.base_level <= 1.0))
    throw Error("base_level must be in (0,1], got " + std::to_string(p.base_level));
  if (p.noise_sigma < 0.0) throw Error("noise_sigma must be nonnegative");
  int prev_end = 0;
  for (const ModSegment& seg : p.modulation) {
    if (!(seg.level > 0.0 && seg.level <= 1.0))
      throw Error("modulation level must be in (0,1], got " + std::to_string(seg.level));
    if (seg.t_start < prev_end || seg.t_end <= seg.t_start || seg.t_end > frames)
      throw Error("modulation segments must be ordered, non-overlapping and within [0," +
                  std::to_string(frames) + ")");
    prev_end = seg.t_end;
  }
}

double level_at(const IlluminationProfile& p, int t) {
  for (const ModSegment& seg : p.modulation)
    if (t >= seg.t_start && t < seg.t_end) return seg.level;
  return p.base_level;
}

bool has_transition(const IlluminationProfile& p) { return !p.modulation.empty(); }

int motion_program_count() { return 10; }

const char* motion_program_name(int class_id) {
  static const char* kNames[] = {"translate-right", "translate-down", "diagonal-sweep", "rotating-bar",
                                 "scale-pulse",     "oscillate-h",    "oscillate-v",    "orbit",
                                 "split-merge",     "zigzag"};
  if (class_id < 0 || class_id >= motion_program_count()) throw Error("invalid class_id");
  return kNames[class_id];
}

VideoClip generate_clip(int class_id, const IlluminationProfile& profile, uint64_t seed, const ClipDims& dims) {
  return generate_impl(class_id, profile, seed, dims, true);
}

VideoClip generate_clip_prenoise(int class_id, const IlluminationProfile& profile, uint64_t seed,
                                 const ClipDims& dims) {
  return generate_impl(class_id, profile, seed, dims, false);
}

const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  throw Error("bad split");
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  throw Error("unknown split name '" + name + "'");
}

std::vector<uint32_t> SyntheticDataset::ids_in_split(Split s) const {
  std::vector<uint32_t> out;
  for (const ClipRecord& r : clips)
    if (r.split == s) out.push_back(r.id);
  return out;
}

const ClipRecord& SyntheticDataset::record(uint32_t id) const {
  for (const ClipRecord& r : clips)
    if (r.id == id) return r;
  throw Error("unknown clip id " + std::to_string(id));
}

VideoClip SyntheticDataset::render(uint32_t id) const {
  const ClipRecord& r = record(id);
  VideoClip clip = generate_clip(r.class_id, r.profile, r.seed, dims);
  clip.fps_tag = fps;
  return clip;
}

void validate_dataset(const SyntheticDataset& ds) {
  if (ds.num_classes < 2) throw Error("dataset needs at least 2 classes");
  if (ds.num_classes > motion_program_count())
    throw Error("dataset class count " + std::to_string(ds.num_classes) + " exceeds the " +
                std::to_string(motion_program_count()) + " available motion programs");
  std::set<uint32_t> seen;
  std::vector<int> train_per_class(ds.num_classes, 0);
  for (const ClipRecord& r : ds.clips) {
    if (!seen.insert(r.id).second) throw Error("duplicate clip_id " + std::to_string(r.id) + " in dataset");
    if (r.class_id < 0 || r.class_id >= ds.num_classes)
      throw Error("clip " + std::to_string(r.id) + " has class_id " + std::to_string(r.class_id) +
                  " outside [0," + std::to_string(ds.num_classes) + ")");
    validate_profile(r.profile, ds.dims.frames);
    if (r.split == Split::train) ++train_per_class[r.class_id];
  }
  for (int c = 0; c < ds.num_classes; ++c)
    if (train_per_class[c] < 2)
      throw Error("class " + std::to_string(c) + " has fewer than 2 train clips");
}

IlluminationProfile ProfileSampler::sample(int frames, Rng& rng) const {
  IlluminationProfile p;
  p.noise_sigma = rng.uniform(sigma_lo, sigma_hi);
  const bool transition = frames >= 6 && rng.bernoulli(transition_prob);
  if (!transition) {
    p.base_level = rng.bernoulli(0.5) ? rng.uniform(bright_lo, bright_hi) : rng.uniform(dim_lo, dim_hi);
    return p;
  }
  double seg_level;
  if (rng.bernoulli(0.5)) {
    p.base_level = rng.uniform(bright_lo, bright_hi);
    seg_level = rng.uniform(deep_lo, deep_hi);
  } else {
    p.base_level = rng.uniform(deep_lo, deep_hi);
    seg_level = rng.uniform(bright_lo, bright_hi);
  }
  const int len_lo = std::max(2, frames * 5 / 16);
  const int len_hi = std::max(len_lo, frames * 9 / 16);
  const int len = static_cast<int>(rng.uniform_int(len_lo, len_hi));
  const int start = static_cast<int>(rng.uniform_int(1, std::max(1, frames - len - 1)));
  p.modulation.push_back({start, start + len, seg_level});
  return p;
}

SyntheticDataset generate_dataset(int num_classes, int clips_per_class, const ClipDims& dims, uint64_t seed,
                                  const ProfileSampler& sampler) {
  if (num_classes < 2) throw Error("need at least 2 classes, got " + std::to_string(num_classes));
  if (num_classes > motion_program_count())
    throw Error("class count " + std::to_string(num_classes) + " exceeds the " +
                std::to_string(motion_program_count()) + " available motion programs");
  if (clips_per_class < 4)
    throw Error("clips_per_class must be at least 4 to satisfy the 70/10/20 split minimums, got " +
                std::to_string(clips_per_class));

  SyntheticDataset ds;
  ds.num_classes = num_classes;
  ds.dims = dims;

  Rng master(seed);
  Rng prof_rng = master.stream("profiles");
  Rng split_rng = master.stream("split");

  for (int c = 0; c < num_classes; ++c) {
    for (int i = 0; i < clips_per_class; ++i) {
      ClipRecord r;
      r.id = static_cast<uint32_t>(c * clips_per_class + i);
      r.class_id = c;
      r.seed = splitmix64(seed ^ splitmix64(1000003ull + r.id));
      r.profile = sampler.sample(dims.frames, prof_rng);
      ds.clips.push_back(r);
    }
  }

  // per-class 70/10/20 split with at least one val and one test clip
  const int n = clips_per_class;
  const int n_val = std::max(1, static_cast<int>(std::lround(0.1 * n)));
  const int n_test = std::max(1, static_cast<int>(std::lround(0.2 * n)));
  for (int c = 0; c < num_classes; ++c) {
    std::vector<int> order(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = c * clips_per_class + i;
    split_rng.shuffle(order);
    for (int i = 0; i < n; ++i) {
      Split s = Split::train;
      if (i < n_val)
        s = Split::val;
      else if (i < n_val + n_test)
        s = Split::test;
      ds.clips[static_cast<size_t>(order[static_cast<size_t>(i)])].split = s;
    }
  }

  validate_dataset(ds);
  return ds;
}

namespace {

using nlohmann::json;

json profile_to_json(const IlluminationProfile& p) {
  json mod = json::array();
  for (const ModSegment& s : p.modulation) mod.push_back({s.t_start, s.t_end, s.level});
  return json{{"base_level", p.base_level}, {"noise_sigma", p.noise_sigma}, {"modulation", mod}};
}

IlluminationProfile profile_from_json(const json& j) {
  IlluminationProfile p;
  p.base_level = j.at("base_level").get<double>();
  p.noise_sigma = j.at("noise_sigma").get<double>();
  for (const json& s : j.at("modulation"))
    p.modulation.push_back({s.at(0).get<int>(), s.at(1).get<int>(), s.at(2).get<double>()});
  return p;
}

}  // namespace

void save_dataset(const SyntheticDataset& ds, const std::string& path) {
  validate_dataset(ds);
  json j;
  j["format"] = "actlumos-dataset";
  j["version"] = 1;
  j["classes"] = ds.num_classes;
  j["dims"] = {ds.dims.frames, ds.dims.height, ds.dims.width};
  j["fps"] = ds.fps;
  json clips = json::array();
  for (const ClipRecord& r : ds.clips) {
    clips.push_back({{"id", r.id},
                     {"class", r.class_id},
                     {"seed", r.seed},
                     {"split", split_name(r.split)},
                     {"profile", profile_to_json(r.profile)}});
  }
  j["clips"] = std::move(clips);
  std::ofstream out(path);
  if (!out) throw Error("cannot write dataset manifest: " + path);
  out << j.dump(2) << "\n";
}

SyntheticDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("dataset manifest not found: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("corrupt dataset manifest " + path + ": " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "actlumos-dataset")
      throw Error("not an actlumos dataset manifest: " + path);
    if (j.at("version").get<int>() != 1)
      throw Error("unsupported dataset manifest version " + j.at("version").dump() + " in " + path);
    SyntheticDataset ds;
    ds.num_classes = j.at("classes").get<int>();
    const json& d = j.at("dims");
    ds.dims = {d.at(0).get<int>(), d.at(1).get<int>(), d.at(2).get<int>()};
    ds.fps = j.at("fps").get<float>();
    for (const json& c : j.at("clips")) {
      ClipRecord r;
      r.id = c.at("id").get<uint32_t>();
      r.class_id = c.at("class").get<int>();
      r.seed = c.at("seed").get<uint64_t>();
      r.split = split_from_name(c.at("split").get<std::string>());
      r.profile = profile_from_json(c.at("profile"));
      ds.clips.push_back(std::move(r));
    }
    validate_dataset(ds);
    return ds;
  } catch (const json::exception& e) {
    throw Error("corrupt dataset manifest " + path + ": " + e.what());
  }
}

}  // namespace actlumos::clipgen
