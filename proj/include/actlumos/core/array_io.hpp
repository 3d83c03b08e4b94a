#pragma once

#include <string>
#include <vector>

#include "actlumos/core/types.hpp"

namespace actlumos {

/// Tensor dump: a two-line text header (magic+dtype, dims) followed by the
/// raw little-endian values in row-major order (last dim fastest).
///
///   actlumos-array v1 dtype=f32
///   dims 3 16 32 32
///   <binary payload>
struct ArrayDump {
  std::string dtype;       // "f32" or "f64"
  std::vector<int> dims;   // outermost first
  std::vector<double> values;  // widened on read
};

void write_array(const std::string& path, const std::vector<int>& dims, const float* data);
void write_array(const std::string& path, const std::vector<int>& dims, const double* data);
ArrayDump read_array(const std::string& path);

/// Row-major serialization of a [C,T,H,W] volume (index order c,t,h,w).
void write_volume(const std::string& path, const Volume<float>& v);
Volume<float> read_volume(const std::string& path);

}  // namespace actlumos
