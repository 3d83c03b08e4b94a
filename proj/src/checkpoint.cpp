#include "actlumos/trainer/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "actlumos/core/hash.hpp"

namespace actlumos::trainer {

namespace {

constexpr char kMagic[8] = {'A', 'L', 'M', 'S', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream& out, uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
void put_u64(std::ostream& out, uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }

void put_str(std::ostream& out, const std::string& s) {
  put_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

uint32_t get_u32(std::istream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

uint64_t get_u64(std::istream& in) {
  uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

std::string get_str(std::istream& in) {
  const uint64_t n = get_u64(in);
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  return s;
}

}  // namespace

const NamedArray* Checkpoint::find(const std::string& name) const {
  for (const NamedArray& a : arrays)
    if (a.name == name) return &a;
  return nullptr;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint: " + path);
  out.write(kMagic, 8);
  put_u32(out, kVersion);
  put_str(out, ckpt.stage);
  put_u32(out, static_cast<uint32_t>(ckpt.num_classes));
  put_u32(out, static_cast<uint32_t>(ckpt.epoch));
  put_str(out, ckpt.fingerprint);
  put_str(out, ckpt.rng_state);
  put_str(out, ckpt.config_json);
  put_str(out, ckpt.history_json);
  put_u64(out, ckpt.arrays.size());
  for (const NamedArray& a : ckpt.arrays) {
    put_str(out, a.name);
    put_str(out, a.dtype);
    put_u64(out, static_cast<uint64_t>(a.rows));
    put_u64(out, static_cast<uint64_t>(a.cols));
    put_u64(out, a.bytes.size());
    out.write(a.bytes.data(), static_cast<std::streamsize>(a.bytes.size()));
  }
  if (!out) throw Error("short write on checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("checkpoint not found: " + path);
  char magic[8];
  in.read(magic, 8);
  if (in.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0)
    throw Error("not an actlumos checkpoint: " + path);
  const uint32_t version = get_u32(in);
  if (version != kVersion)
    throw Error("unsupported checkpoint version " + std::to_string(version) + " in " + path);
  Checkpoint c;
  c.stage = get_str(in);
  c.num_classes = static_cast<int>(get_u32(in));
  c.epoch = static_cast<int>(get_u32(in));
  c.fingerprint = get_str(in);
  c.rng_state = get_str(in);
  c.config_json = get_str(in);
  c.history_json = get_str(in);
  const uint64_t n = get_u64(in);
  for (uint64_t i = 0; i < n; ++i) {
    NamedArray a;
    a.name = get_str(in);
    a.dtype = get_str(in);
    a.rows = static_cast<int64_t>(get_u64(in));
    a.cols = static_cast<int64_t>(get_u64(in));
    const uint64_t bytes = get_u64(in);
    a.bytes.resize(bytes);
    in.read(a.bytes.data(), static_cast<std::streamsize>(bytes));
    c.arrays.push_back(std::move(a));
  }
  if (!in) throw Error("truncated checkpoint: " + path);
  return c;
}

void store_params(Checkpoint& ckpt, const ParamRefs<float>& refs) {
  for (const auto& e : refs.entries) {
    NamedArray a;
    a.name = e.name;
    a.dtype = "f32";
    a.rows = e.rows;
    a.cols = e.cols;
    a.bytes.resize(static_cast<size_t>(e.size()) * sizeof(float));
    std::memcpy(a.bytes.data(), e.data, a.bytes.size());
    ckpt.arrays.push_back(std::move(a));
  }
}

void restore_params(const Checkpoint& ckpt, ParamRefs<float>& refs) {
  for (auto& e : refs.entries) {
    const NamedArray* a = ckpt.find(e.name);
    if (!a) throw Error("checkpoint is missing parameter array '" + e.name + "'");
    if (a->dtype != "f32") throw Error("parameter '" + e.name + "' has unexpected dtype " + a->dtype);
    if (a->rows != e.rows || a->cols != e.cols)
      throw Error("parameter '" + e.name + "' has shape [" + std::to_string(a->rows) + "," +
                  std::to_string(a->cols) + "], model expects [" + std::to_string(e.rows) + "," +
                  std::to_string(e.cols) + "]");
    std::memcpy(e.data, a->bytes.data(), a->bytes.size());
  }
}

bool checkpoints_equal(const Checkpoint& a, const Checkpoint& b) {
  if (a.stage != b.stage || a.num_classes != b.num_classes || a.epoch != b.epoch ||
      a.fingerprint != b.fingerprint || a.arrays.size() != b.arrays.size())
    return false;
  for (size_t i = 0; i < a.arrays.size(); ++i) {
    const NamedArray& x = a.arrays[i];
    const NamedArray& y = b.arrays[i];
    if (x.name != y.name || x.dtype != y.dtype || x.rows != y.rows || x.cols != y.cols || x.bytes != y.bytes)
      return false;
  }
  return true;
}

std::string checkpoint_content_hash(const Checkpoint& ckpt) {
  std::string blob = ckpt.stage + "|" + std::to_string(ckpt.num_classes) + "|" + std::to_string(ckpt.epoch) +
                     "|" + ckpt.fingerprint + "|" + ckpt.rng_state + "|" + ckpt.config_json + "|" +
                     ckpt.history_json;
  for (const NamedArray& a : ckpt.arrays) {
    blob += "|" + a.name + ":" + a.dtype + ":" + std::to_string(a.rows) + "x" + std::to_string(a.cols) + ":";
    blob.append(a.bytes.data(), a.bytes.size());
  }
  return sha256_hex(blob);
}

}  // namespace actlumos::trainer
