#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "actlumos/core/rng.hpp"
#include "actlumos/core/types.hpp"

namespace actlumos::clipgen {

/// One illumination override: frames in [t_start, t_end) are lit at `level`
/// instead of the profile's base level.
struct ModSegment {
  int t_start = 0;
  int t_end = 0;
  double level = 1.0;

  bool operator==(const ModSegment&) const = default;
};

struct IlluminationProfile {
  double base_level = 1.0;                // in (0,1]
  std::vector<ModSegment> modulation;     // ordered, non-overlapping, within [0,L)
  double noise_sigma = 0.0;               // per-pixel additive Gaussian std

  bool operator==(const IlluminationProfile&) const = default;
};

void validate_profile(const IlluminationProfile& p, int frames);

/// Illumination level active at frame t.
double level_at(const IlluminationProfile& p, int t);

bool has_transition(const IlluminationProfile& p);

/// The fixed roster of motion programs; class k renders program k.
int motion_program_count();
const char* motion_program_name(int class_id);

/// Renders the labeled moving pattern, applies the per-frame illumination
/// level, adds Gaussian noise, and clamps to [0,1]. Deterministic in
/// (class_id, profile, seed, dims).
VideoClip generate_clip(int class_id, const IlluminationProfile& profile, uint64_t seed, const ClipDims& dims);

/// The same render with noise and clamping skipped; used by the
/// illumination-monotonicity property.
VideoClip generate_clip_prenoise(int class_id, const IlluminationProfile& profile, uint64_t seed, const ClipDims& dims);

enum class Split { train, val, test };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

struct ClipRecord {
  uint32_t id = 0;
  int class_id = 0;
  uint64_t seed = 0;
  IlluminationProfile profile;
  Split split = Split::train;

  bool operator==(const ClipRecord&) const = default;
};

/// Clips are stored as generation parameters only; pixels are reproduced
/// on demand from (class_id, profile, seed, dims).
struct SyntheticDataset {
  int num_classes = 0;
  ClipDims dims;
  float fps = 8.0f;
  std::vector<ClipRecord> clips;

  bool operator==(const SyntheticDataset&) const = default;

  std::vector<uint32_t> ids_in_split(Split s) const;
  const ClipRecord& record(uint32_t id) const;
  VideoClip render(uint32_t id) const;
};

void validate_dataset(const SyntheticDataset& ds);

/// Distribution the per-clip profiles are drawn from. Defaults are tuned so
/// that roughly half the clips contain an illumination transition and the
/// dark/retinex streams have complementary failure modes.
struct ProfileSampler {
  double transition_prob = 0.5;
  double bright_lo = 0.55, bright_hi = 1.0;
  double dim_lo = 0.07, dim_hi = 0.22;
  double deep_lo = 0.05, deep_hi = 0.12;
  double sigma_lo = 0.001, sigma_hi = 0.003;

  IlluminationProfile sample(int frames, Rng& rng) const;
};

SyntheticDataset generate_dataset(int num_classes, int clips_per_class, const ClipDims& dims, uint64_t seed,
                                  const ProfileSampler& sampler = {});

/// Manifest I/O. A single JSON document: format/version, class count, dims,
/// and one record per clip (id, class, seed, profile, split).
void save_dataset(const SyntheticDataset& ds, const std::string& path);
SyntheticDataset load_dataset(const std::string& path);

}  // namespace actlumos::clipgen
