#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "actlumos/core/params.hpp"
#include "actlumos/core/types.hpp"

namespace actlumos::trainer {

/// Serialized parameter set plus provenance: stage tag, config fingerprint,
/// RNG state, epoch counter and metric history. Round-trips bit-exactly.
struct NamedArray {
  std::string name;
  std::string dtype;  // "f32" | "f64"
  int64_t rows = 0, cols = 0;
  std::vector<char> bytes;  // column-major payload
};

struct Checkpoint {
  std::string stage;        // "teacher" | "ssl" | "distill"
  int num_classes = 0;
  int epoch = 0;
  std::string fingerprint;  // config fingerprint (sha256 hex)
  std::string rng_state;
  std::string config_json;  // full TrainConfig snapshot
  std::string history_json; // JSON array, one record per epoch
  std::vector<NamedArray> arrays;

  const NamedArray* find(const std::string& name) const;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Copies every referenced parameter into the checkpoint's array list.
void store_params(Checkpoint& ckpt, const ParamRefs<float>& refs);

/// Restores parameters by name; throws on missing names or dim mismatches.
void restore_params(const Checkpoint& ckpt, ParamRefs<float>& refs);

/// True when every array and metadata field matches byte-for-byte.
bool checkpoints_equal(const Checkpoint& a, const Checkpoint& b);

/// Content hash over stage, arrays and metadata (order-sensitive).
std::string checkpoint_content_hash(const Checkpoint& ckpt);

}  // namespace actlumos::trainer
