#include "actlumos/core/array_io.hpp"

#include <fstream>
#include <numeric>
#include <sstream>

namespace actlumos {

namespace {

void write_header(std::ofstream& out, const std::string& dtype, const std::vector<int>& dims) {
  out << "actlumos-array v1 dtype=" << dtype << "\n";
  out << "dims";
  for (int d : dims) out << " " << d;
  out << "\n";
}

int64_t count(const std::vector<int>& dims) {
  int64_t n = 1;
  for (int d : dims) n *= d;
  return n;
}

template <typename S>
void write_impl(const std::string& path, const std::vector<int>& dims, const S* data, const char* tag) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write array file: " + path);
  write_header(out, tag, dims);
  out.write(reinterpret_cast<const char*>(data), count(dims) * static_cast<int64_t>(sizeof(S)));
  if (!out) throw Error("short write on array file: " + path);
}

}  // namespace

void write_array(const std::string& path, const std::vector<int>& dims, const float* data) {
  write_impl(path, dims, data, "f32");
}

void write_array(const std::string& path, const std::vector<int>& dims, const double* data) {
  write_impl(path, dims, data, "f64");
}

ArrayDump read_array(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("cannot open array file: " + path);
  std::string line;
  std::getline(in, line);
  ArrayDump a;
  {
    std::istringstream hs(line);
    std::string magic, ver, dt;
    hs >> magic >> ver >> dt;
    if (magic != "actlumos-array") throw Error("not an actlumos array file: " + path);
    if (ver != "v1") throw Error("unsupported array format version '" + ver + "' in " + path);
    if (dt.rfind("dtype=", 0) != 0) throw Error("malformed array header in " + path);
    a.dtype = dt.substr(6);
    if (a.dtype != "f32" && a.dtype != "f64") throw Error("unknown dtype '" + a.dtype + "' in " + path);
  }
  std::getline(in, line);
  {
    std::istringstream ds(line);
    std::string word;
    ds >> word;
    if (word != "dims") throw Error("malformed dims line in " + path);
    int d;
    while (ds >> d) a.dims.push_back(d);
    if (a.dims.empty()) throw Error("empty dims in " + path);
  }
  const int64_t n = count(a.dims);
  a.values.resize(static_cast<size_t>(n));
  if (a.dtype == "f32") {
    std::vector<float> tmp(static_cast<size_t>(n));
    in.read(reinterpret_cast<char*>(tmp.data()), n * 4);
    if (in.gcount() != n * 4) throw Error("truncated array payload in " + path);
    for (int64_t i = 0; i < n; ++i) a.values[static_cast<size_t>(i)] = tmp[static_cast<size_t>(i)];
  } else {
    in.read(reinterpret_cast<char*>(a.values.data()), n * 8);
    if (in.gcount() != n * 8) throw Error("truncated array payload in " + path);
  }
  return a;
}

void write_volume(const std::string& path, const Volume<float>& v) {
  std::vector<float> rowmajor(static_cast<size_t>(v.C) * v.voxels());
  size_t k = 0;
  for (int c = 0; c < v.C; ++c)
    for (int t = 0; t < v.T; ++t)
      for (int h = 0; h < v.H; ++h)
        for (int w = 0; w < v.W; ++w) rowmajor[k++] = v.at(c, t, h, w);
  write_array(path, {v.C, v.T, v.H, v.W}, rowmajor.data());
}

Volume<float> read_volume(const std::string& path) {
  const ArrayDump a = read_array(path);
  if (a.dims.size() != 4) throw Error("expected a 4-D volume in " + path);
  Volume<float> v(a.dims[0], a.dims[1], a.dims[2], a.dims[3]);
  size_t k = 0;
  for (int c = 0; c < v.C; ++c)
    for (int t = 0; t < v.T; ++t)
      for (int h = 0; h < v.H; ++h)
        for (int w = 0; w < v.W; ++w) v.at(c, t, h, w) = static_cast<float>(a.values[k++]);
  return v;
}

}  // namespace actlumos
